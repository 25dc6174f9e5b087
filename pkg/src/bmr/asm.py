"""Minimal two-pass assembler over decoder instructions.

Instructions are built with :func:`ins`; references to labels (branches,
``ADR``, literal loads, address words) are resolved once layout is known.
Every emitted instruction is re-encoded through the decoder, so the
assembler can only produce encodings the decoder understands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .decoder import AL, Instruction, build, encode_bytes
from .decoder.instruction import _WIDE, Unencodable


def ins(enc: str, **attrs) -> Instruction:
    return build(enc, **attrs)


def size_of(enc: str) -> int:
    return 4 if enc in _WIDE else 2


@dataclass
class Ref:
    """An instruction whose immediate depends on a label address."""

    enc: str
    label: str
    attrs: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return size_of(self.enc)


@dataclass
class Label:
    name: str


@dataclass
class Align:
    n: int


@dataclass
class Word:
    value: int = 0
    label: str | None = None
    add: int = 0


@dataclass
class Raw:
    data: bytes


class AsmError(Exception):
    pass


class Assembler:
    def __init__(self, base: int):
        self.base = base
        self.items: list = []
        self.symbols: dict[str, int] = {}

    def define(self, name: str, address: int) -> None:
        """Declare an external symbol at a fixed address."""
        self.symbols[name] = address

    def __iadd__(self, items):
        self.extend(items)
        return self

    def extend(self, items) -> None:
        for it in items:
            self.add(it)

    def add(self, item) -> None:
        if not isinstance(item, (Instruction, Ref, Label, Align, Word, Raw)):
            raise TypeError(f"cannot assemble {item!r}")
        self.items.append(item)

    def layout(self) -> dict[str, int]:
        addr = self.base
        labels: dict[str, int] = dict(self.symbols)
        for it in self.items:
            if isinstance(it, Label):
                if it.name in labels:
                    raise AsmError(f"duplicate label {it.name}")
                labels[it.name] = addr
            elif isinstance(it, Align):
                addr += -addr % it.n
            elif isinstance(it, Instruction):
                addr += it.length
            elif isinstance(it, Ref):
                addr += it.size
            elif isinstance(it, Word):
                addr += 4
            else:
                addr += len(it.data)
        labels["__end__"] = addr
        return labels

    def assemble(self) -> tuple[bytes, dict[str, int]]:
        labels = self.layout()
        out = bytearray()
        for it in self.items:
            addr = self.base + len(out)
            if isinstance(it, Label):
                continue
            if isinstance(it, Align):
                out += bytes(-addr % it.n)
            elif isinstance(it, Instruction):
                out += encode_bytes(it)
            elif isinstance(it, Ref):
                out += _resolve(it, addr, labels)
            elif isinstance(it, Word):
                v = it.value if it.label is None else labels[it.label] + it.add
                out += (v & 0xFFFFFFFF).to_bytes(4, "little")
            else:
                out += it.data
        return bytes(out), labels


def _resolve(ref: Ref, addr: int, labels: dict) -> bytes:
    try:
        target = labels[ref.label]
    except KeyError:
        raise AsmError(f"undefined label {ref.label}") from None
    attrs = dict(ref.attrs)
    enc = ref.enc
    base = addr + 4
    if enc.startswith(("ADR", "LDR_lit")):
        delta = target - (base & ~3)
        if enc.startswith("ADR"):
            enc = "ADR_T3" if delta >= 0 else "ADR_T2"
            if ref.enc == "ADR_T1":
                enc = "ADR_T1"
        attrs.update(imm=abs(delta), add=delta >= 0)
        if enc == "ADR_T1":
            attrs.pop("add")
    else:
        attrs["imm"] = target - base
    try:
        return encode_bytes(Instruction(enc=enc, address=addr, **attrs))
    except Unencodable as exc:
        raise AsmError(f"{ref.enc} to {ref.label} at {addr:#x}: {exc}") from None


# -- convenience builders ---------------------------------------------------

def b(label: str, cond: int = AL, wide: bool = True) -> Ref:
    if cond == AL:
        return Ref("B_T4" if wide else "B_T2", label, {"op": "B"})
    return Ref("B_T3" if wide else "B_T1", label, {"op": "B", "cond": cond})


def bl(label: str) -> Ref:
    return Ref("BL_T1", label, {"op": "BL"})


def adr(rd: int, label: str) -> Ref:
    return Ref("ADR_T3", label, {"op": "ADR", "d": rd})


def ldr_lit(rt: int, label: str) -> Ref:
    return Ref("LDR_lit_T2", label, {"op": "LDR", "t": rt, "n": 15})


def movw(rd: int, value: int) -> Instruction:
    return ins("MOVW_T3", d=rd, imm=value & 0xFFFF)


def movt(rd: int, value: int) -> Instruction:
    return ins("MOVT_T1", d=rd, imm=value & 0xFFFF)


def mov32(rd: int, value: int) -> list[Instruction]:
    value &= 0xFFFFFFFF
    out = [movw(rd, value)]
    if value >> 16:
        out.append(movt(rd, value >> 16))
    return out


def mov(rd: int, rm: int) -> Instruction:
    return ins("MOV_reg_T1", d=rd, m=rm)


def ldr(rt: int, rn: int, off: int = 0) -> Instruction:
    if off >= 0:
        return ins("LDR_imm_T3", t=rt, n=rn, imm=off)
    return ins("LDR_imm_T4", t=rt, n=rn, imm=-off, add=False)


def str_(rt: int, rn: int, off: int = 0) -> Instruction:
    if off >= 0:
        return ins("STR_imm_T3", t=rt, n=rn, imm=off)
    return ins("STR_imm_T4", t=rt, n=rn, imm=-off, add=False)


def add_imm(rd: int, rn: int, value: int) -> list[Instruction]:
    """rd = rn + value without touching flags (ADDW/SUBW chunks)."""
    out = []
    src = rn
    if value == 0 and rd != rn:
        return [mov(rd, rn)]
    while value:
        step = max(-4095, min(4095, value))
        enc = "ADDW_T4" if step > 0 else "SUBW_T4"
        out.append(ins(enc, op="ADD" if step > 0 else "SUB", d=rd, n=src, imm=abs(step)))
        value -= step
        src = rd
    return out


def dp_imm(op: str, rd: int | None, rn: int | None, value: int, s: bool = False) -> Instruction:
    attrs = {"imm": value & 0xFFFFFFFF, "setflags": s}
    if rd is not None:
        attrs["d"] = rd
    if rn is not None:
        attrs["n"] = rn
    if op in ("CMP", "CMN", "TST", "TEQ"):
        attrs["setflags"] = True
    return ins(f"{op}_imm_W_T1", **attrs)


def push(regs) -> Instruction:
    regs = tuple(sorted(regs))
    if all(r < 8 or r == 14 for r in regs):
        return ins("PUSH_T1", n=13, wback=True, reglist=regs)
    if len(regs) == 1:
        return ins("STR_imm_T4", t=regs[0], n=13, imm=4, add=False, index=True, wback=True,
                   op="STR")
    return ins("STMDB_T1", op="PUSH", n=13, wback=True, reglist=regs)


def pop(regs) -> Instruction:
    regs = tuple(sorted(regs))
    if all(r < 8 or r == 15 for r in regs):
        return ins("POP_T1", n=13, wback=True, reglist=regs)
    if len(regs) == 1:
        return ins("LDR_imm_T4", t=regs[0], n=13, imm=4, add=True, index=False, wback=True,
                   op="LDR")
    return ins("LDM_T2", op="POP", n=13, wback=True, reglist=regs)
