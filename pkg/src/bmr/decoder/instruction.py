"""Decoded instruction value type and operand helpers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .registers import EMPTY, LR, PC, SP, RegisterSet, reg_name

AL = 14
COND_NAMES = ["EQ", "NE", "CS", "CC", "MI", "PL", "VS", "VC",
              "HI", "LS", "GE", "LT", "GT", "LE", "", ""]

#: operations that never touch the flags as outputs but compare (always set flags)
COMPARES = frozenset({"CMP", "CMN", "TST", "TEQ"})
DATA_OPS = frozenset({"AND", "EOR", "ORR", "ORN", "BIC", "MOV", "MVN",
                      "ADD", "ADC", "SUB", "SBC", "RSB"}) | COMPARES
SHIFT_OPS = frozenset({"LSL", "LSR", "ASR", "ROR"})
EXTEND_OPS = frozenset({"SXTB", "SXTH", "UXTB", "UXTH"})
SYSTEM_OPS = frozenset({"BKPT", "CPSIE", "CPSID", "MRS", "MSR",
                        "SEV", "SVC", "WFE", "WFI"})


class DecodeError(Exception):
    pass


class Undecodable(DecodeError):
    """Bit pattern lies outside the supported encoding subset."""

    def __init__(self, halfwords, address=0, reason="unsupported encoding"):
        self.halfwords = tuple(halfwords)
        self.address = address
        self.reason = reason
        hw = " ".join(f"{h:04X}" for h in self.halfwords)
        super().__init__(f"undecodable {hw} at {address:#010x}: {reason}")


class Unencodable(DecodeError):
    """An operand does not fit the requested encoding."""

    def __init__(self, enc: str, field_name: str, detail: str = ""):
        self.enc = enc
        self.field = field_name
        msg = f"{enc}: field {field_name!r} not encodable"
        super().__init__(f"{msg} ({detail})" if detail else msg)


@dataclass(frozen=True)
class Instruction:
    """One Thumb or Thumb-2 instruction in structured form.

    ``enc`` names the concrete encoding; the remaining attributes describe
    the operation independently of its bit layout. Register fields are
    ``None`` when the operation has no such operand. For branches ``imm``
    holds the signed byte offset relative to the PC read value (address+4).
    """

    enc: str
    op: str
    address: int = 0
    raw: tuple = ()
    cond: int = AL
    d: int | None = None
    n: int | None = None
    m: int | None = None
    t: int | None = None
    t2: int | None = None
    a: int | None = None
    imm: int | None = None
    imm_carry: int | None = None
    add: bool = True
    index: bool = True
    wback: bool = False
    setflags: bool = False
    it_flags: bool = False
    shift_t: str | None = None
    shift_n: int = 0
    size: int = 4
    signed: bool = False
    reglist: tuple = ()
    sysm: int | None = None
    mask: int | None = None
    rotation: int = 0
    reads: RegisterSet = field(default=EMPTY, compare=False)
    writes: RegisterSet = field(default=EMPTY, compare=False)
    reads_flags: bool = field(default=False, compare=False)
    sets_flags: bool = field(default=False, compare=False)

    def __post_init__(self):
        reads, writes, rf, sf = _usage(self)
        object.__setattr__(self, "reads", reads)
        object.__setattr__(self, "writes", writes)
        object.__setattr__(self, "reads_flags", rf)
        object.__setattr__(self, "sets_flags", sf)

    @property
    def length(self) -> int:
        return 4 if self.enc in _WIDE else 2

    @property
    def next_address(self) -> int:
        return self.address + self.length

    @property
    def pc_value(self) -> int:
        """Value read from the PC by this instruction."""
        return self.address + 4

    @property
    def branch_target(self) -> int | None:
        if self.op in ("B", "BL", "CBZ", "CBNZ"):
            return (self.address + 4 + self.imm) & 0xFFFFFFFF
        return None

    def at(self, address: int) -> "Instruction":
        return replace(self, address=address)

    def __str__(self) -> str:
        return format_instruction(self)


# names of 32-bit encodings; filled in by the encodings table
_WIDE: set = set()


def _usage(i: Instruction):
    op = i.op
    r: list = []
    w: list = []
    rf = False
    sf = i.setflags
    if op in DATA_OPS:
        r += [i.n, i.m]
        if op not in COMPARES:
            w.append(i.d)
        else:
            sf = True
        if op in ("ADC", "SBC") or i.shift_t == "RRX":
            rf = True
    elif op in SHIFT_OPS:
        r += [i.n, i.m]
        w.append(i.d)
    elif op in ("MUL", "MLA", "MLS", "SDIV", "UDIV"):
        r += [i.n, i.m, i.a]
        w.append(i.d)
    elif op in ("SMULL", "UMULL"):
        r += [i.n, i.m]
        w += [i.t, i.t2]
    elif op in EXTEND_OPS or op in ("REV", "REV16", "REVSH", "RBIT", "CLZ"):
        r.append(i.m)
        w.append(i.d)
    elif op == "MOVW":
        w.append(i.d)
    elif op == "MOVT":
        r.append(i.d)
        w.append(i.d)
    elif op == "ADR":
        r.append(PC)
        w.append(i.d)
    elif op == "LDR":
        r += [i.n, i.m]
        w.append(i.t)
        if i.wback:
            w.append(i.n)
    elif op == "STR":
        r += [i.n, i.m, i.t]
        if i.wback:
            w.append(i.n)
    elif op == "LDRD":
        r.append(i.n)
        w += [i.t, i.t2]
        if i.wback:
            w.append(i.n)
    elif op == "STRD":
        r += [i.n, i.t, i.t2]
        if i.wback:
            w.append(i.n)
    elif op in ("LDM", "LDMDB", "POP"):
        r.append(i.n)
        w += list(i.reglist)
        if i.wback:
            w.append(i.n)
    elif op in ("STM", "STMDB", "PUSH"):
        r.append(i.n)
        r += list(i.reglist)
        if i.wback:
            w.append(i.n)
    elif op in ("B", "BL"):
        r.append(PC)
        w.append(PC)
        if op == "BL":
            w.append(LR)
        if i.cond != AL:
            rf = True
    elif op in ("CBZ", "CBNZ"):
        r += [i.n, PC]
        w.append(PC)
    elif op == "BX":
        r.append(i.m)
        w.append(PC)
    elif op == "BLX":
        r.append(i.m)
        w += [PC, LR]
    elif op in ("TBB", "TBH"):
        r += [i.n, i.m, PC]
        w.append(PC)
    elif op == "MRS":
        w.append(i.d)
        rf = True
    elif op == "MSR":
        r.append(i.n)
        sf = True
    return RegisterSet.of(*r), RegisterSet.of(*w), rf, sf


def format_reglist(regs) -> str:
    return "{" + ", ".join(reg_name(r) for r in regs) + "}"


def format_instruction(i: Instruction) -> str:
    op = i.op
    s = "S" if i.setflags and op not in COMPARES else ""
    cc = COND_NAMES[i.cond] if i.cond != AL else ""
    R = reg_name
    if op in ("B", "BL", "CBZ", "CBNZ"):
        tgt = i.branch_target
        if op in ("CBZ", "CBNZ"):
            return f"{op} {R(i.n)}, {tgt:#x}"
        wide = ".W" if op == "B" and i.length == 4 else ""
        return f"{op}{cc}{wide} {tgt:#x}"
    if op in ("BX", "BLX"):
        return f"{op} {R(i.m)}"
    if op in ("TBB", "TBH"):
        lsl = ", LSL #1" if op == "TBH" else ""
        return f"{op} [{R(i.n)}, {R(i.m)}{lsl}]"
    if op == "ADR":
        sign = "" if i.add else "-"
        return f"ADR {R(i.d)}, PC, #{sign}{i.imm:#x}"
    if op in ("LDRD", "STRD"):
        sign = "" if i.add else "-"
        off = f"#{sign}{i.imm:#x}"
        if not i.index:
            return f"{op} {R(i.t)}, {R(i.t2)}, [{R(i.n)}], {off}"
        return f"{op} {R(i.t)}, {R(i.t2)}, [{R(i.n)}, {off}]{'!' if i.wback else ''}"
    if op in ("LDR", "STR"):
        suffix = {1: "B", 2: "H", 4: ""}[i.size]
        if i.signed:
            suffix = "S" + suffix
        mn = f"{op}{suffix}"
        if i.m is not None:
            sh = f", LSL #{i.shift_n}" if i.shift_n else ""
            return f"{mn} {R(i.t)}, [{R(i.n)}, {R(i.m)}{sh}]"
        sign = "" if i.add else "-"
        off = f"#{sign}{i.imm:#x}"
        if not i.index:
            return f"{mn} {R(i.t)}, [{R(i.n)}], {off}"
        bang = "!" if i.wback else ""
        return f"{mn} {R(i.t)}, [{R(i.n)}, {off}]{bang}"
    if op in ("PUSH", "POP"):
        return f"{op} {format_reglist(i.reglist)}"
    if op in ("LDM", "LDMDB", "STM", "STMDB"):
        bang = "!" if i.wback else ""
        return f"{op} {R(i.n)}{bang}, {format_reglist(i.reglist)}"
    if op == "IT":
        return f"IT {COND_NAMES[i.imm >> 4] or 'AL'} mask={i.imm & 15:#x}"
    if op in ("MOVW", "MOVT"):
        return f"{op} {R(i.d)}, #{i.imm:#x}"
    if op in DATA_OPS:
        parts = []
        if op not in COMPARES:
            parts.append(R(i.d))
        if i.n is not None:
            parts.append(R(i.n))
        if i.imm is not None:
            parts.append(f"#{i.imm:#x}")
        elif i.m is not None:
            parts.append(R(i.m))
            if i.shift_t == "RRX":
                parts.append("RRX")
            elif i.shift_t and i.shift_n:
                parts.append(f"{i.shift_t} #{i.shift_n}")
        return f"{op}{s}{cc} " + ", ".join(parts)
    if op in SHIFT_OPS:
        return f"{op}{s} {R(i.d)}, {R(i.n)}, {R(i.m)}"
    if op in ("MUL", "SDIV", "UDIV"):
        return f"{op}{s} {R(i.d)}, {R(i.n)}, {R(i.m)}"
    if op in ("MLA", "MLS"):
        return f"{op} {R(i.d)}, {R(i.n)}, {R(i.m)}, {R(i.a)}"
    if op in ("SMULL", "UMULL"):
        return f"{op} {R(i.t)}, {R(i.t2)}, {R(i.n)}, {R(i.m)}"
    if op in EXTEND_OPS:
        rot = f", ROR #{i.rotation}" if i.rotation else ""
        return f"{op} {R(i.d)}, {R(i.m)}{rot}"
    if op in ("REV", "REV16", "REVSH", "RBIT", "CLZ"):
        return f"{op} {R(i.d)}, {R(i.m)}"
    if op == "MRS":
        return f"MRS {R(i.d)}, sysm#{i.sysm}"
    if op == "MSR":
        return f"MSR sysm#{i.sysm}, {R(i.n)}"
    if op in ("BKPT", "SVC", "UDF"):
        return f"{op} #{i.imm}"
    return op
