"""Bit-level encoding table for the supported Thumb/Thumb-2 subset.

Each :class:`Encoding` couples a bit pattern with a pair of converters:
``unpack`` turns raw fields into instruction attributes and ``pack`` does the
reverse, raising :class:`Unencodable` when an attribute does not fit.
Order matters: the first entry whose pattern and guard match wins, so more
specific patterns (literal loads, compare aliases) precede general ones.
"""

from __future__ import annotations

from typing import Callable

from . import instruction as _instr
from .instruction import AL, Instruction, Unencodable

Fields = dict


def sx(value: int, bits: int) -> int:
    sign = 1 << (bits - 1)
    return (value & (sign - 1)) - (value & sign)


def popcount(x: int) -> int:
    return bin(x).count("1")


# -- immediate helpers ------------------------------------------------------

def decode_imm_shift(type_: int, imm5: int):
    if type_ == 0:
        return ("LSL", imm5)
    if type_ == 1:
        return ("LSR", imm5 or 32)
    if type_ == 2:
        return ("ASR", imm5 or 32)
    if imm5 == 0:
        return ("RRX", 1)
    return ("ROR", imm5)


def encode_imm_shift(shift_t, shift_n):
    if shift_t is None or (shift_t == "LSL" and shift_n == 0):
        return 0, 0
    if shift_t == "LSL" and 0 <= shift_n <= 31:
        return 0, shift_n
    if shift_t in ("LSR", "ASR") and 1 <= shift_n <= 32:
        return (1 if shift_t == "LSR" else 2), shift_n & 31
    if shift_t == "ROR" and 1 <= shift_n <= 31:
        return 3, shift_n
    if shift_t == "RRX":
        return 3, 0
    return None


def thumb_expand_imm(imm12: int):
    """Return (value, carry) for a modified immediate; carry None = unchanged."""
    if imm12 >> 10 == 0:
        imm8 = imm12 & 0xFF
        kind = imm12 >> 8 & 3
        if kind == 0:
            return imm8, None
        if kind == 1:
            return imm8 << 16 | imm8, None
        if kind == 2:
            return imm8 << 24 | imm8 << 8, None
        return imm8 * 0x01010101, None
    unrot = 0x80 | imm12 & 0x7F
    rot = imm12 >> 7
    value = (unrot >> rot | unrot << (32 - rot)) & 0xFFFFFFFF
    return value, value >> 31


def thumb_encode_imm(value: int) -> int | None:
    value &= 0xFFFFFFFF
    if value <= 0xFF:
        return value
    b = value & 0xFF
    if b and value == b << 16 | b:
        return 0x100 | b
    b = value >> 8 & 0xFF
    if b and value == b << 24 | b << 8:
        return 0x200 | b
    b = value & 0xFF
    if b and value == b * 0x01010101:
        return 0x300 | b
    for rot in range(8, 32):
        unrot = (value << rot | value >> (32 - rot)) & 0xFFFFFFFF
        if 0x80 <= unrot <= 0xFF:
            return rot << 7 | unrot & 0x7F
    return None


def _imm12_ok(imm12: int) -> bool:
    # patterns 01/10/11 with a zero byte are unpredictable
    return not (imm12 >> 10 == 0 and imm12 >> 8 & 3 and imm12 & 0xFF == 0)


# -- pattern parsing ---------------------------------------------------------

class Encoding:
    def __init__(self, name: str, pattern: str, unpack: Callable, pack: Callable,
                 guard: Callable | None = None):
        self.name = name
        self.pattern = pattern
        self.unpack = unpack
        self.pack = pack
        self.guard = guard
        toks = pattern.replace("|", " ").split()
        width = 0
        for tok in toks:
            width += int(tok.split(":")[1]) if ":" in tok else len(tok)
        if width not in (16, 32):
            raise ValueError(f"{name}: pattern width {width}")
        self.width = width
        pos = width
        self.mask = self.value = 0
        self.fields: dict[str, tuple[int, int]] = {}
        for tok in toks:
            if ":" in tok:
                fname, w = tok.split(":")
                pos -= int(w)
                self.fields[fname] = (pos, int(w))
            else:
                for ch in tok:
                    pos -= 1
                    self.mask |= 1 << pos
                    self.value |= int(ch) << pos

    def extract(self, word: int) -> Fields:
        return {k: word >> p & ((1 << w) - 1) for k, (p, w) in self.fields.items()}

    def insert(self, f: Fields) -> int:
        word = self.value
        for k, (p, w) in self.fields.items():
            v = f[k]
            if not 0 <= v < 1 << w:
                raise Unencodable(self.name, k, f"value {v} exceeds {w} bits")
            word |= v << p
        return word

    def __repr__(self):
        return f"Encoding({self.name})"


TABLE16: list[Encoding] = []
TABLE32: list[Encoding] = []


def _add(name, pattern, unpack, pack, guard=None):
    e = Encoding(name, pattern, unpack, pack, guard)
    (TABLE16 if e.width == 16 else TABLE32).append(e)
    if e.width == 32:
        _instr._WIDE.add(name)
    return e


BY_NAME: dict[str, Encoding] = {}


# -- pack helpers --------------------------------------------------------

def _need(enc, name, ok, detail=""):
    if not ok:
        raise Unencodable(enc, name, detail)


def _reg(enc, name, r, limit=16):
    _need(enc, name, r is not None and 0 <= r < limit,
          f"register {r} outside R0-R{limit - 1}")
    return r


def _gpr(enc, name, r):
    _need(enc, name, r is not None and 0 <= r < 16 and r not in (13, 15),
          f"register {r} is SP or PC")
    return r


def _scaled(enc, name, v, scale, bits):
    _need(enc, name, v is not None and v % scale == 0 and 0 <= v // scale < 1 << bits,
          f"{v} not a multiple of {scale} in range")
    return v // scale


def _const(enc, i: Instruction, **kw):
    for k, v in kw.items():
        _need(enc, k, getattr(i, k) == v, f"expected {v!r}, got {getattr(i, k)!r}")


# -- 16-bit encodings ------------------------------------------------------

def _shift_imm16(name, type_):
    def unpack(f):
        st, sn = decode_imm_shift(type_, f["imm5"])
        return dict(op="MOV", d=f["rd"], m=f["rm"], shift_t=st, shift_n=sn,
                    setflags=True, it_flags=True)

    def pack(i):
        _const(name, i, op="MOV", setflags=True, n=None)
        enc = encode_imm_shift(i.shift_t, i.shift_n)
        _need(name, "shift", enc is not None and enc[0] == type_ and (type_ != 0 or enc[1] != 0))
        return dict(imm5=enc[1], rd=_reg(name, "d", i.d, 8), rm=_reg(name, "m", i.m, 8))
    _add(name, f"000 {type_:02b} imm5:5 rm:3 rd:3", unpack, pack,
         guard=(lambda f: f["imm5"] != 0) if type_ == 0 else None)


_shift_imm16("LSL_imm_T1", 0)
_add("MOV_reg_T2", "0000000000 rm:3 rd:3",
     lambda f: dict(op="MOV", d=f["rd"], m=f["rm"], setflags=True, it_flags=True),
     lambda i: (_const("MOV_reg_T2", i, op="MOV", setflags=True, imm=None)
                or _need("MOV_reg_T2", "shift", i.shift_n == 0 and i.shift_t in (None, "LSL"))
                or dict(rm=_reg("MOV_reg_T2", "m", i.m, 8), rd=_reg("MOV_reg_T2", "d", i.d, 8))))
_shift_imm16("LSR_imm_T1", 1)
_shift_imm16("ASR_imm_T1", 2)


def _three_reg16(name, bits, op):
    _add(name, f"{bits} rm:3 rn:3 rd:3",
         lambda f: dict(op=op, d=f["rd"], n=f["rn"], m=f["rm"], setflags=True, it_flags=True),
         lambda i: (_const(name, i, op=op, setflags=True, shift_n=0, imm=None)
                    or dict(rm=_reg(name, "m", i.m, 8), rn=_reg(name, "n", i.n, 8),
                            rd=_reg(name, "d", i.d, 8))))


_three_reg16("ADD_reg_T1", "0001100", "ADD")
_three_reg16("SUB_reg_T1", "0001101", "SUB")


def _imm3(name, bits, op):
    _add(name, f"{bits} imm3:3 rn:3 rd:3",
         lambda f: dict(op=op, d=f["rd"], n=f["rn"], imm=f["imm3"], setflags=True, it_flags=True),
         lambda i: (_const(name, i, op=op, setflags=True)
                    or dict(imm3=_scaled(name, "imm", i.imm, 1, 3), rn=_reg(name, "n", i.n, 8),
                            rd=_reg(name, "d", i.d, 8))))


_imm3("ADD_imm_T1", "0001110", "ADD")
_imm3("SUB_imm_T1", "0001111", "SUB")


def _imm8_16(name, bits, op, *, rd=True, rn=True, flags=True):
    def unpack(f):
        r = f["rdn"]
        return dict(op=op, d=r if rd else None, n=r if rn else None, imm=f["imm8"],
                    setflags=flags, it_flags=flags and op not in _instr.COMPARES)

    def pack(i):
        r = i.d if rd else i.n
        if rd and rn:
            _need(name, "n", i.n == i.d, "Rn must equal Rd")
        _const(name, i, op=op)
        return dict(rdn=_reg(name, "d" if rd else "n", r, 8), imm8=_scaled(name, "imm", i.imm, 1, 8))
    _add(name, f"{bits} rdn:3 imm8:8", unpack, pack)


_imm8_16("MOV_imm_T1", "00100", "MOV", rn=False)
_imm8_16("CMP_imm_T1", "00101", "CMP", rd=False)
_imm8_16("ADD_imm_T2", "00110", "ADD")
_imm8_16("SUB_imm_T2", "00111", "SUB")

_ALU16 = ["AND", "EOR", "LSL", "LSR", "ASR", "ADC", "SBC", "ROR",
          "TST", "RSB", "CMP", "CMN", "ORR", "MUL", "BIC", "MVN"]


def _alu16(code, op):
    name = f"{op}_reg_T1" if op not in ("RSB",) else "RSB_imm_T1"
    if op in ("LSL", "LSR", "ASR", "ROR"):
        name = f"{op}_regshift_T1"
    bits = f"010000{code:04b}"

    def unpack(f):
        a, b = f["rm"], f["rdn"]
        if op in ("TST", "CMP", "CMN"):
            return dict(op=op, n=b, m=a, setflags=True)
        if op == "RSB":
            return dict(op=op, d=b, n=a, imm=0, setflags=True, it_flags=True)
        if op == "MVN":
            return dict(op=op, d=b, m=a, setflags=True, it_flags=True)
        if op == "MUL":
            return dict(op=op, d=b, n=a, m=b, setflags=True, it_flags=True)
        return dict(op=op, d=b, n=b, m=a, setflags=True, it_flags=True)

    def pack(i):
        _const(name, i, op=op, setflags=True)
        if op in ("TST", "CMP", "CMN"):
            _need(name, "shift", i.shift_n == 0)
            return dict(rm=_reg(name, "m", i.m, 8), rdn=_reg(name, "n", i.n, 8))
        if op == "RSB":
            _need(name, "imm", i.imm == 0)
            return dict(rm=_reg(name, "n", i.n, 8), rdn=_reg(name, "d", i.d, 8))
        if op == "MVN":
            _need(name, "shift", i.shift_n == 0)
            return dict(rm=_reg(name, "m", i.m, 8), rdn=_reg(name, "d", i.d, 8))
        if op == "MUL":
            _need(name, "m", i.m == i.d, "Rm must equal Rd")
            return dict(rm=_reg(name, "n", i.n, 8), rdn=_reg(name, "d", i.d, 8))
        _need(name, "n", i.n == i.d, "Rn must equal Rd")
        _need(name, "imm", i.imm is None)
        if op not in ("LSL", "LSR", "ASR", "ROR"):
            _need(name, "shift", i.shift_n == 0)
        return dict(rm=_reg(name, "m", i.m, 8), rdn=_reg(name, "d", i.d, 8))
    _add(name, f"{bits} rm:3 rdn:3", unpack, pack)


for _code, _op in enumerate(_ALU16):
    _alu16(_code, _op)


def _hi_add_unpack(f):
    r = f["dn"] << 3 | f["rdn"]
    return dict(op="ADD", d=r, n=r, m=f["rm"])


def _hi_add_pack(i):
    _const("ADD_reg_T2", i, op="ADD", setflags=False, shift_n=0, imm=None)
    _need("ADD_reg_T2", "n", i.n == i.d, "Rn must equal Rd")
    d = _reg("ADD_reg_T2", "d", i.d)
    return dict(dn=d >> 3, rdn=d & 7, rm=_reg("ADD_reg_T2", "m", i.m))


_add("ADD_reg_T2", "01000100 dn:1 rm:4 rdn:3", _hi_add_unpack, _hi_add_pack,
     guard=lambda f: not (f["dn"] << 3 | f["rdn"]) == f["rm"] == 15)
_add("CMP_reg_T2", "01000101 nh:1 rm:4 rn:3",
     lambda f: dict(op="CMP", n=f["nh"] << 3 | f["rn"], m=f["rm"], setflags=True),
     lambda i: (_const("CMP_reg_T2", i, op="CMP", shift_n=0)
                or dict(nh=_reg("CMP_reg_T2", "n", i.n) >> 3, rn=i.n & 7,
                        rm=_reg("CMP_reg_T2", "m", i.m))),
     guard=lambda f: (f["nh"] or f["rm"] >= 8) and f["rm"] != 15 and (f["nh"] << 3 | f["rn"]) != 15)
_add("MOV_reg_T1", "01000110 dh:1 rm:4 rd:3",
     lambda f: dict(op="MOV", d=f["dh"] << 3 | f["rd"], m=f["rm"]),
     lambda i: (_const("MOV_reg_T1", i, op="MOV", setflags=False, shift_n=0, imm=None)
                or dict(dh=_reg("MOV_reg_T1", "d", i.d) >> 3, rd=i.d & 7,
                        rm=_reg("MOV_reg_T1", "m", i.m))))
_add("BX_T1", "010001110 rm:4 000",
     lambda f: dict(op="BX", m=f["rm"]),
     lambda i: _const("BX_T1", i, op="BX") or dict(rm=_reg("BX_T1", "m", i.m)))
_add("BLX_reg_T1", "010001111 rm:4 000",
     lambda f: dict(op="BLX", m=f["rm"]),
     lambda i: _const("BLX_reg_T1", i, op="BLX") or dict(rm=_reg("BLX_reg_T1", "m", i.m, 15)),
     guard=lambda f: f["rm"] != 15)
_add("LDR_lit_T1", "01001 rt:3 imm8:8",
     lambda f: dict(op="LDR", t=f["rt"], n=15, imm=f["imm8"] * 4),
     lambda i: (_const("LDR_lit_T1", i, op="LDR", n=15, add=True, size=4, signed=False, wback=False)
                or dict(rt=_reg("LDR_lit_T1", "t", i.t, 8), imm8=_scaled("LDR_lit_T1", "imm", i.imm, 4, 8))))

_LS_REG = [("STR", 4, False), ("STR", 2, False), ("STR", 1, False), ("LDR", 1, True),
           ("LDR", 4, False), ("LDR", 2, False), ("LDR", 1, False), ("LDR", 2, True)]


def _ls_name(op, size, signed, form):
    suffix = {4: "", 2: "H", 1: "B"}[size]
    return f"{op}{'S' if signed else ''}{suffix}_{form}"


def _ls_reg16(code, op, size, signed):
    name = _ls_name(op, size, signed, "reg_T1")
    _add(name, f"0101{code:03b} rm:3 rn:3 rt:3",
         lambda f: dict(op=op, t=f["rt"], n=f["rn"], m=f["rm"], size=size, signed=signed),
         lambda i: (_const(name, i, op=op, size=size, signed=signed, shift_n=0, wback=False,
                           index=True, add=True)
                    or dict(rm=_reg(name, "m", i.m, 8), rn=_reg(name, "n", i.n, 8),
                            rt=_reg(name, "t", i.t, 8))))


for _code, (_op, _sz, _sg) in enumerate(_LS_REG):
    _ls_reg16(_code, _op, _sz, _sg)


def _ls_imm16(name, bits, op, size, *, sp=False):
    scale = size

    def unpack(f):
        if sp:
            return dict(op=op, t=f["rt"], n=13, imm=f["imm8"] * 4, size=4)
        return dict(op=op, t=f["rt"], n=f["rn"], imm=f["imm5"] * scale, size=size)

    def pack(i):
        _const(name, i, op=op, size=size, signed=False, wback=False, index=True, add=True, m=None)
        if sp:
            _need(name, "n", i.n == 13, "base must be SP")
            return dict(rt=_reg(name, "t", i.t, 8), imm8=_scaled(name, "imm", i.imm, 4, 8))
        return dict(rt=_reg(name, "t", i.t, 8), rn=_reg(name, "n", i.n, 8),
                    imm5=_scaled(name, "imm", i.imm, scale, 5))
    pat = f"{bits} rt:3 imm8:8" if sp else f"{bits} imm5:5 rn:3 rt:3"
    _add(name, pat, unpack, pack)


_ls_imm16("STR_imm_T1", "01100", "STR", 4)
_ls_imm16("LDR_imm_T1", "01101", "LDR", 4)
_ls_imm16("STRB_imm_T1", "01110", "STR", 1)
_ls_imm16("LDRB_imm_T1", "01111", "LDR", 1)
_ls_imm16("STRH_imm_T1", "10000", "STR", 2)
_ls_imm16("LDRH_imm_T1", "10001", "LDR", 2)
_ls_imm16("STR_imm_T2", "10010", "STR", 4, sp=True)
_ls_imm16("LDR_imm_T2", "10011", "LDR", 4, sp=True)

_add("ADR_T1", "10100 rd:3 imm8:8",
     lambda f: dict(op="ADR", d=f["rd"], imm=f["imm8"] * 4),
     lambda i: (_const("ADR_T1", i, op="ADR", add=True)
                or dict(rd=_reg("ADR_T1", "d", i.d, 8), imm8=_scaled("ADR_T1", "imm", i.imm, 4, 8))))
_add("ADD_SPimm_T1", "10101 rd:3 imm8:8",
     lambda f: dict(op="ADD", d=f["rd"], n=13, imm=f["imm8"] * 4),
     lambda i: (_const("ADD_SPimm_T1", i, op="ADD", n=13, setflags=False)
                or dict(rd=_reg("ADD_SPimm_T1", "d", i.d, 8),
                        imm8=_scaled("ADD_SPimm_T1", "imm", i.imm, 4, 8))))


def _sp_adj(name, bits, op):
    _add(name, f"{bits} imm7:7",
         lambda f: dict(op=op, d=13, n=13, imm=f["imm7"] * 4),
         lambda i: (_const(name, i, op=op, d=13, n=13, setflags=False)
                    or dict(imm7=_scaled(name, "imm", i.imm, 4, 7))))


_sp_adj("ADD_SPimm_T2", "101100000", "ADD")
_sp_adj("SUB_SPimm_T1", "101100001", "SUB")


def _cbz(name, bit, op):
    _add(name, f"1011{bit}0 i:1 1 imm5:5 rn:3",
         lambda f: dict(op=op, n=f["rn"], imm=(f["i"] << 6) | (f["imm5"] << 1)),
         lambda i: (_const(name, i, op=op)
                    or _need(name, "imm", i.imm is not None and 0 <= i.imm <= 126 and i.imm % 2 == 0,
                             f"offset {i.imm} outside 0..126")
                    or dict(i=i.imm >> 6, imm5=i.imm >> 1 & 31, rn=_reg(name, "n", i.n, 8))))


_cbz("CBZ_T1", 0, "CBZ")
_cbz("CBNZ_T1", 1, "CBNZ")


def _ext16(code, op):
    name = f"{op}_T1"
    _add(name, f"1011001000{code:02b}"[:0] + f"10110010{code:02b} rm:3 rd:3",
         lambda f: dict(op=op, d=f["rd"], m=f["rm"]),
         lambda i: (_const(name, i, op=op, rotation=0)
                    or dict(rm=_reg(name, "m", i.m, 8), rd=_reg(name, "d", i.d, 8))))


for _code, _op in enumerate(["SXTH", "SXTB", "UXTH", "UXTB"]):
    _ext16(_code, _op)


def _rlist8(f, extra_bit, extra_reg):
    regs = [r for r in range(8) if f["rlist"] >> r & 1]
    if f[extra_bit]:
        regs.append(extra_reg)
    return tuple(regs)


def _pack_rlist8(name, regs, extra_reg):
    rl = 0
    extra = 0
    for r in regs:
        if r < 8:
            rl |= 1 << r
        elif r == extra_reg:
            extra = 1
        else:
            raise Unencodable(name, "reglist", f"{r} not allowed")
    _need(name, "reglist", len(regs) > 0, "empty register list")
    return rl, extra


_add("PUSH_T1", "1011010 m:1 rlist:8",
     lambda f: dict(op="PUSH", n=13, wback=True, reglist=_rlist8(f, "m", 14)),
     lambda i: (_const("PUSH_T1", i, op="PUSH")
                or dict(zip(("rlist", "m"), _pack_rlist8("PUSH_T1", i.reglist, 14)))),
     guard=lambda f: f["rlist"] or f["m"])
_add("CPS_T1", "10110110011 im:1 00 i:1 f:1",
     lambda f: dict(op="CPSID" if f["im"] else "CPSIE", imm=f["i"] << 1 | f["f"]),
     lambda i: (_need("CPS_T1", "op", i.op in ("CPSIE", "CPSID"))
                or dict(im=int(i.op == "CPSID"), i=i.imm >> 1 & 1, f=i.imm & 1)),
     guard=lambda f: f["i"] or f["f"])


def _rev16(code, op):
    name = f"{op}_T1"
    _add(name, f"10111010{code:02b} rm:3 rd:3",
         lambda f: dict(op=op, d=f["rd"], m=f["rm"]),
         lambda i: _const(name, i, op=op) or dict(rm=_reg(name, "m", i.m, 8), rd=_reg(name, "d", i.d, 8)))


_rev16(0, "REV")
_rev16(1, "REV16")
_rev16(3, "REVSH")

_add("POP_T1", "1011110 p:1 rlist:8",
     lambda f: dict(op="POP", n=13, wback=True, reglist=_rlist8(f, "p", 15)),
     lambda i: (_const("POP_T1", i, op="POP")
                or dict(zip(("rlist", "p"), _pack_rlist8("POP_T1", i.reglist, 15)))),
     guard=lambda f: f["rlist"] or f["p"])
_add("BKPT_T1", "10111110 imm8:8",
     lambda f: dict(op="BKPT", imm=f["imm8"]),
     lambda i: _const("BKPT_T1", i, op="BKPT") or dict(imm8=_scaled("BKPT_T1", "imm", i.imm, 1, 8)))


def _it_ok(f):
    fc, mask = f["firstcond"], f["mask"]
    if mask == 0 or fc == 15:
        return False
    return not (fc == 14 and popcount(mask) != 1)


_add("IT_T1", "10111111 firstcond:4 mask:4",
     lambda f: dict(op="IT", imm=f["firstcond"] << 4 | f["mask"]),
     lambda i: (_const("IT_T1", i, op="IT")
                or _need("IT_T1", "imm", i.imm is not None and 0 < i.imm & 15 and i.imm < 0xF0)
                or dict(firstcond=i.imm >> 4, mask=i.imm & 15)),
     guard=_it_ok)

HINTS = {0: "NOP", 1: "YIELD", 2: "WFE", 3: "WFI", 4: "SEV"}


def _hint_pack(name, i):
    _need(name, "op", i.op in HINTS.values() or i.op == "HINT")
    code = i.imm if i.imm is not None else {v: k for k, v in HINTS.items()}[i.op]
    _need(name, "imm", HINTS.get(code, "HINT") == i.op, f"hint code {code} does not match {i.op}")
    return code


_add("HINT_T1", "10111111 opa:4 0000",
     lambda f: dict(op=HINTS.get(f["opa"], "NOP"), imm=f["opa"]),
     lambda i: dict(opa=_hint_pack("HINT_T1", i) if i.op != "NOP" or i.imm is None
                    else i.imm))
_add("STM_T1", "11000 rn:3 rlist:8",
     lambda f: dict(op="STM", n=f["rn"], wback=True,
                    reglist=tuple(r for r in range(8) if f["rlist"] >> r & 1)),
     lambda i: (_const("STM_T1", i, op="STM", wback=True)
                or dict(rn=_reg("STM_T1", "n", i.n, 8),
                        rlist=_pack_rlist8("STM_T1", i.reglist, -1)[0])),
     guard=lambda f: f["rlist"] != 0)
_add("LDM_T1", "11001 rn:3 rlist:8",
     lambda f: dict(op="LDM", n=f["rn"], wback=not f["rlist"] >> f["rn"] & 1,
                    reglist=tuple(r for r in range(8) if f["rlist"] >> r & 1)),
     lambda i: (_const("LDM_T1", i, op="LDM", wback=i.n not in i.reglist)
                or dict(rn=_reg("LDM_T1", "n", i.n, 8),
                        rlist=_pack_rlist8("LDM_T1", i.reglist, -1)[0])),
     guard=lambda f: f["rlist"] != 0)
_add("UDF_T1", "11011110 imm8:8",
     lambda f: dict(op="UDF", imm=f["imm8"]),
     lambda i: _const("UDF_T1", i, op="UDF") or dict(imm8=_scaled("UDF_T1", "imm", i.imm, 1, 8)))
_add("SVC_T1", "11011111 imm8:8",
     lambda f: dict(op="SVC", imm=f["imm8"]),
     lambda i: _const("SVC_T1", i, op="SVC") or dict(imm8=_scaled("SVC_T1", "imm", i.imm, 1, 8)))


def _branch_range(name, i, bits):
    lo, hi = -(1 << bits), (1 << bits) - 2
    _need(name, "imm", i.imm is not None and lo <= i.imm <= hi and i.imm % 2 == 0,
          f"offset {i.imm} outside {lo}..{hi}")


_add("B_T1", "1101 cond:4 imm8:8",
     lambda f: dict(op="B", cond=f["cond"], imm=sx(f["imm8"] << 1, 9)),
     lambda i: (_const("B_T1", i, op="B")
                or _need("B_T1", "cond", i.cond < 14)
                or _branch_range("B_T1", i, 8)
                or dict(cond=i.cond, imm8=(i.imm >> 1) & 0xFF)),
     guard=lambda f: f["cond"] < 14)
_add("B_T2", "11100 imm11:11",
     lambda f: dict(op="B", imm=sx(f["imm11"] << 1, 12)),
     lambda i: (_const("B_T2", i, op="B", cond=AL)
                or _branch_range("B_T2", i, 11)
                or dict(imm11=(i.imm >> 1) & 0x7FF)))


# -- 32-bit encodings -----------------------------------------------------

def _rlist16(f, allow_pc=True):
    regs = [r for r in range(13) if f["rlist"] >> r & 1]
    if f["m"]:
        regs.append(14)
    if allow_pc and f.get("p"):
        regs.append(15)
    return tuple(regs)


def _pack_rlist16(name, regs, allow_pc):
    rl = m = p = 0
    for r in regs:
        if r < 13:
            rl |= 1 << r
        elif r == 14:
            m = 1
        elif r == 15 and allow_pc:
            p = 1
        else:
            raise Unencodable(name, "reglist", f"{r} not allowed")
    return rl, m, p


def _ldm_stm(name, bits, op, load):
    alias = {"STMDB": "PUSH", "LDM": "POP"}.get(op)

    def unpack(f):
        regs = _rlist16(f, allow_pc=load)
        o = alias if alias and f["rn"] == 13 and f["w"] else op
        return dict(op=o, n=f["rn"], wback=bool(f["w"]), reglist=regs)

    def pack(i):
        _need(name, "op", i.op == op or (alias and i.op == alias and i.n == 13 and i.wback))
        rl, m, p = _pack_rlist16(name, i.reglist, load)
        out = dict(rn=_reg(name, "n", i.n, 15), w=int(i.wback), rlist=rl, m=m)
        if load:
            out["p"] = p
        return out

    def guard(f):
        regs = _rlist16(f, allow_pc=load)
        if f["rn"] == 15 or len(regs) < 2:
            return False
        if load and f["p"] and f["m"]:
            return False
        if f["w"] and f["rn"] in regs:
            return False
        return True
    if load:
        pat = f"{bits} w:1 1 rn:4 | p:1 m:1 0 rlist:13"
    else:
        pat = f"{bits} w:1 0 rn:4 | 0 m:1 0 rlist:13"
    _add(name, pat, unpack, pack, guard)


_ldm_stm("STM_T2", "1110100010", "STM", False)
_ldm_stm("LDM_T2", "1110100010", "LDM", True)
_ldm_stm("STMDB_T1", "1110100100", "STMDB", False)
_ldm_stm("LDMDB_T1", "1110100100", "LDMDB", True)

_add("TBB_T1", "111010001101 rn:4 | 11110000000 h:1 rm:4",
     lambda f: dict(op="TBH" if f["h"] else "TBB", n=f["rn"], m=f["rm"]),
     lambda i: (_need("TBB_T1", "op", i.op in ("TBB", "TBH"))
                or dict(rn=_reg("TBB_T1", "n", i.n), rm=_reg("TBB_T1", "m", i.m),
                        h=int(i.op == "TBH"))),
     guard=lambda f: f["rn"] != 13 and f["rm"] not in (13, 15))

# data-processing opcode -> (op, compare alias when Rd=PC and S, move alias when Rn=PC)
_DP32 = {0b0000: ("AND", "TST", None), 0b0001: ("BIC", None, None),
         0b0010: ("ORR", None, "MOV"), 0b0011: ("ORN", None, "MVN"),
         0b0100: ("EOR", "TEQ", None), 0b1000: ("ADD", "CMN", None),
         0b1010: ("ADC", None, None), 0b1011: ("SBC", None, None),
         0b1101: ("SUB", "CMP", None), 0b1110: ("RSB", None, None)}


def _dp32_family(kind):
    """kind: 'reg' (shifted register) or 'imm' (modified immediate)."""
    for code, (op, cmp_alias, mov_alias) in _DP32.items():
        variants = [(op, "base")]
        if cmp_alias:
            variants.insert(0, (cmp_alias, "cmp"))
        if mov_alias:
            variants.insert(0, (mov_alias, "mov"))
        for vop, vkind in variants:
            _dp32(kind, code, vop, vkind)


def _dp32(kind, code, op, vkind):
    tag = "T2" if kind == "reg" else "T1"
    name = f"{op}_{kind}_W_{tag}" if kind == "reg" else f"{op}_imm_W_{tag}"
    if kind == "reg":
        pat = f"1110101 {code:04b} s:1 rn:4 | 0 imm3:3 rd:4 imm2:2 type:2 rm:4"
    else:
        pat = f"11110 i:1 0 {code:04b} s:1 rn:4 | 0 imm3:3 rd:4 imm8:8"

    def operand(f):
        if kind == "reg":
            st, sn = decode_imm_shift(f["type"], f["imm3"] << 2 | f["imm2"])
            if st == "LSL" and sn == 0:
                st = None
            return dict(m=f["rm"], shift_t=st, shift_n=sn if st else 0)
        value, carry = thumb_expand_imm(f["i"] << 11 | f["imm3"] << 8 | f["imm8"])
        return dict(imm=value, imm_carry=carry)

    def unpack(f):
        out = dict(op=op, setflags=bool(f["s"]), **operand(f))
        if vkind == "cmp":
            out["n"] = f["rn"]
            out["setflags"] = True
        elif vkind == "mov":
            out["d"] = f["rd"]
        else:
            out["d"] = f["rd"]
            out["n"] = f["rn"]
        return out

    def pack(i):
        _const(name, i, op=op)
        out = {}
        if kind == "reg":
            _need(name, "imm", i.imm is None)
            enc = encode_imm_shift(i.shift_t, i.shift_n)
            _need(name, "shift", enc is not None, f"{i.shift_t} #{i.shift_n}")
            out.update(type=enc[0], imm3=enc[1] >> 2, imm2=enc[1] & 3, rm=_reg(name, "m", i.m))
        else:
            _need(name, "m", i.m is None)
            imm12 = thumb_encode_imm(i.imm if i.imm is not None else -1) if i.imm is not None else None
            _need(name, "imm", imm12 is not None, f"{i.imm!r} is not a modified immediate")
            out.update(i=imm12 >> 11, imm3=imm12 >> 8 & 7, imm8=imm12 & 0xFF)
        if vkind == "cmp":
            out.update(s=1, rd=15, rn=_reg(name, "n", i.n))
        elif vkind == "mov":
            out.update(s=int(i.setflags), rd=_reg(name, "d", i.d), rn=15)
            _need(name, "n", i.n is None)
        else:
            out.update(s=int(i.setflags), rd=_reg(name, "d", i.d), rn=_reg(name, "n", i.n))
        return out

    def guard(f):
        rd, rn = f["rd"], f["rn"]
        if kind == "reg" and f["rm"] == 15:
            return False
        if kind == "imm" and not _imm12_ok(f["i"] << 11 | f["imm3"] << 8 | f["imm8"]):
            return False
        if vkind == "cmp":
            return rd == 15 and f["s"] == 1 and rn != 15
        if vkind == "mov":
            return rn == 15 and rd != 15
        if cmp_like_exists(code) and rd == 15 and f["s"]:
            return False
        if movlike_exists(code) and rn == 15:
            return False
        return rd != 15 and rn != 15
    _add(name, pat, unpack, pack, guard)


def cmp_like_exists(code):
    return _DP32[code][1] is not None


def movlike_exists(code):
    return _DP32[code][2] is not None


_dp32_family("reg")
_dp32_family("imm")


def _plain_imm(name, bits, op, *, adr=None):
    def unpack(f):
        imm12 = f["i"] << 11 | f["imm3"] << 8 | f["imm8"]
        if adr is not None:
            return dict(op="ADR", d=f["rd"], imm=imm12, add=adr)
        return dict(op=op, d=f["rd"], n=f["rn"], imm=imm12)

    def pack(i):
        if adr is not None:
            _const(name, i, op="ADR", add=adr)
            rn = 15
        else:
            _const(name, i, op=op, setflags=False)
            rn = _reg(name, "n", i.n, 15)
        v = _scaled(name, "imm", i.imm, 1, 12)
        return dict(i=v >> 11, imm3=v >> 8 & 7, imm8=v & 0xFF, rn=rn,
                    rd=_reg(name, "d", i.d, 15))
    if adr is not None:
        pat = f"11110 i:1 {bits} 1111 | 0 imm3:3 rd:4 imm8:8"
        _add(name, pat, lambda f: unpack(f), pack, guard=lambda f: f["rd"] not in (13, 15))
    else:
        pat = f"11110 i:1 {bits} rn:4 | 0 imm3:3 rd:4 imm8:8"
        _add(name, pat, unpack, pack, guard=lambda f: f["rn"] != 15 and f["rd"] != 15)


_plain_imm("ADR_T3", "100000", "ADD", adr=True)
_plain_imm("ADDW_T4", "100000", "ADD")
_plain_imm("ADR_T2", "101010", "SUB", adr=False)
_plain_imm("SUBW_T4", "101010", "SUB")


def _movwt(name, bits, op):
    _add(name, f"11110 i:1 {bits} imm4:4 | 0 imm3:3 rd:4 imm8:8",
         lambda f: dict(op=op, d=f["rd"],
                        imm=f["imm4"] << 12 | f["i"] << 11 | f["imm3"] << 8 | f["imm8"]),
         lambda i: (_const(name, i, op=op)
                    or _need(name, "imm", i.imm is not None and 0 <= i.imm <= 0xFFFF)
                    or dict(imm4=i.imm >> 12, i=i.imm >> 11 & 1, imm3=i.imm >> 8 & 7,
                            imm8=i.imm & 0xFF, rd=_reg(name, "d", i.d, 15))),
         guard=lambda f: f["rd"] not in (13, 15))


_movwt("MOVW_T3", "100100", "MOVW")
_movwt("MOVT_T1", "101100", "MOVT")


def _b_t3_unpack(f):
    imm = f["s"] << 20 | f["j2"] << 19 | f["j1"] << 18 | f["imm6"] << 12 | f["imm11"] << 1
    return dict(op="B", cond=f["cond"], imm=sx(imm, 21))


def _b_t3_pack(i):
    _const("B_T3", i, op="B")
    _need("B_T3", "cond", i.cond < 14)
    _branch_range("B_T3", i, 20)
    v = i.imm & 0x1FFFFF
    return dict(s=v >> 20, j2=v >> 19 & 1, j1=v >> 18 & 1, imm6=v >> 12 & 63,
                imm11=v >> 1 & 0x7FF, cond=i.cond)


_add("B_T3", "11110 s:1 cond:4 imm6:6 | 10 j1:1 0 j2:1 imm11:11", _b_t3_unpack, _b_t3_pack,
     guard=lambda f: f["cond"] < 14)
_add("MSR_T1", "111100111000 rn:4 | 1000 mask:2 00 sysm:8",
     lambda f: dict(op="MSR", n=f["rn"], mask=f["mask"], sysm=f["sysm"]),
     lambda i: (_const("MSR_T1", i, op="MSR")
                or dict(rn=_gpr("MSR_T1", "n", i.n), mask=i.mask, sysm=i.sysm)),
     guard=lambda f: f["rn"] not in (13, 15) and f["mask"] != 0)
_add("HINT_W_T2", "111100111010 1111 | 10000000 opc:8",
     lambda f: dict(op=HINTS[f["opc"]], imm=f["opc"]),
     lambda i: dict(opc=_hint_pack("HINT_W_T2", i)),
     guard=lambda f: f["opc"] in HINTS)
BARRIERS = {0b0100: "DSB", 0b0101: "DMB", 0b0110: "ISB"}
_add("BARRIER_T1", "111100111011 1111 | 10001111 opc:4 option:4",
     lambda f: dict(op=BARRIERS[f["opc"]], imm=f["option"]),
     lambda i: (_need("BARRIER_T1", "op", i.op in BARRIERS.values())
                or dict(opc={v: k for k, v in BARRIERS.items()}[i.op],
                        option=_scaled("BARRIER_T1", "imm", i.imm, 1, 4))),
     guard=lambda f: f["opc"] in BARRIERS)
_add("MRS_T1", "111100111110 1111 | 1000 rd:4 sysm:8",
     lambda f: dict(op="MRS", d=f["rd"], sysm=f["sysm"]),
     lambda i: _const("MRS_T1", i, op="MRS") or dict(rd=_gpr("MRS_T1", "d", i.d), sysm=i.sysm),
     guard=lambda f: f["rd"] not in (13, 15))
_add("UDF_T2", "111101111111 imm4:4 | 1010 imm12:12",
     lambda f: dict(op="UDF", imm=f["imm4"] << 12 | f["imm12"]),
     lambda i: (_const("UDF_T2", i, op="UDF")
                or _need("UDF_T2", "imm", 0 <= i.imm <= 0xFFFF)
                or dict(imm4=i.imm >> 12, imm12=i.imm & 0xFFF)))


def _long_branch(name, op, link):
    def unpack(f):
        s = f["s"]
        i1 = 1 - (f["j1"] ^ s)
        i2 = 1 - (f["j2"] ^ s)
        imm = s << 24 | i1 << 23 | i2 << 22 | f["imm10"] << 12 | f["imm11"] << 1
        return dict(op=op, imm=sx(imm, 25))

    def pack(i):
        _const(name, i, op=op, cond=AL)
        _branch_range(name, i, 24)
        v = i.imm & 0x1FFFFFF
        s = v >> 24
        i1, i2 = v >> 23 & 1, v >> 22 & 1
        return dict(s=s, j1=(1 - i1) ^ s, j2=(1 - i2) ^ s, imm10=v >> 12 & 0x3FF,
                    imm11=v >> 1 & 0x7FF)
    _add(name, f"11110 s:1 imm10:10 | 1{int(link)} j1:1 1 j2:1 imm11:11", unpack, pack)


_long_branch("B_T4", "B", False)
_long_branch("BL_T1", "BL", True)

# loads and stores -------------------------------------------------------

_SZ = {0: 1, 1: 2, 2: 4}


def _lit(name, bits, size, signed):
    _add(name, f"1111100 {bits[0]} u:1 {bits[1:]} 1111 | rt:4 imm12:12",
         lambda f: dict(op="LDR", t=f["rt"], n=15, imm=f["imm12"], add=bool(f["u"]),
                        size=size, signed=signed),
         lambda i: (_const(name, i, op="LDR", n=15, size=size, signed=signed, wback=False,
                           index=True, m=None)
                    or dict(u=int(i.add), rt=_reg(name, "t", i.t),
                            imm12=_scaled(name, "imm", i.imm, 1, 12))),
         guard=(lambda f: f["rt"] != 15) if size != 4 else None)


_lit("LDR_lit_T2", "0101", 4, False)
_lit("LDRB_lit_T1", "0001", 1, False)
_lit("LDRH_lit_T1", "0011", 2, False)
_lit("LDRSB_lit_T1", "1001", 1, True)
_lit("LDRSH_lit_T1", "1011", 2, True)


def _ls32(op, size, signed):
    load = op == "LDR"
    sbit = "1" if signed else "0"
    szb = {1: "00", 2: "01", 4: "10"}[size]
    lbit = "1" if load else "0"
    base = _ls_name(op, size, signed, "")
    t_ok = (lambda f: True) if (size == 4 or not load) else (lambda f: f["rt"] != 15)
    if not load:
        t_ok = lambda f: f["rt"] != 15  # noqa: E731
    tags = {("imm12", 4, False): "T3", ("imm8", 4, False): "T4"}
    t12 = tags.get(("imm12", size, signed), "T1" if signed else "T2")
    t8 = tags.get(("imm8", size, signed), "T2" if signed else "T3")
    # imm12 form
    n12 = f"{base}imm_{t12}"
    _add(n12, f"1111100{sbit} 1{szb}{lbit} rn:4 | rt:4 imm12:12",
         lambda f: dict(op=op, t=f["rt"], n=f["rn"], imm=f["imm12"], size=size, signed=signed),
         lambda i: (_const(n12, i, op=op, size=size, signed=signed, add=True, index=True,
                           wback=False, m=None)
                    or dict(rn=_reg(n12, "n", i.n, 15), rt=_reg(n12, "t", i.t),
                            imm12=_scaled(n12, "imm", i.imm, 1, 12))),
         guard=lambda f: f["rn"] != 15 and t_ok(f))
    n8 = f"{base}imm_{t8}"

    def u8(f):
        return dict(op=op, t=f["rt"], n=f["rn"], imm=f["imm8"], size=size, signed=signed,
                    index=bool(f["p"]), add=bool(f["u"]), wback=bool(f["w"]))

    def p8(i):
        _const(n8, i, op=op, size=size, signed=signed, m=None)
        _need(n8, "index", i.index or i.wback, "post-indexed form requires writeback")
        _need(n8, "add", not (i.index and i.add and not i.wback),
              "positive offset without writeback needs the 12-bit form")
        return dict(rn=_reg(n8, "n", i.n, 15), rt=_reg(n8, "t", i.t), p=int(i.index),
                    u=int(i.add), w=int(i.wback), imm8=_scaled(n8, "imm", i.imm, 1, 8))

    def g8(f):
        if f["rn"] == 15 or not t_ok(f):
            return False
        if f["p"] and f["u"] and not f["w"]:
            return False  # unprivileged variant
        if not f["p"] and not f["w"]:
            return False
        if f["w"] and f["rn"] == f["rt"]:
            return False
        return True
    _add(n8, f"1111100{sbit} 0{szb}{lbit} rn:4 | rt:4 1 p:1 u:1 w:1 imm8:8", u8, p8, g8)
    nr = f"{base}reg_{'T2' if not signed else 'T2'}"
    nr = nr if nr not in BY_NAME else nr + "x"
    _add(nr, f"1111100{sbit} 0{szb}{lbit} rn:4 | rt:4 000000 imm2:2 rm:4",
         lambda f: dict(op=op, t=f["rt"], n=f["rn"], m=f["rm"], shift_n=f["imm2"],
                        shift_t="LSL" if f["imm2"] else None, size=size, signed=signed),
         lambda i: (_const(nr, i, op=op, size=size, signed=signed, add=True, index=True,
                           wback=False, imm=None)
                    or _need(nr, "shift", i.shift_t in (None, "LSL") and 0 <= i.shift_n <= 3)
                    or dict(rn=_reg(nr, "n", i.n, 15), rt=_reg(nr, "t", i.t),
                            rm=_gpr(nr, "m", i.m), imm2=i.shift_n)),
         guard=lambda f: f["rn"] != 15 and f["rm"] not in (13, 15) and t_ok(f))


for _op, _sz, _sg in [("STR", 1, False), ("STR", 2, False), ("STR", 4, False),
                      ("LDR", 4, False), ("LDR", 1, False), ("LDR", 2, False),
                      ("LDR", 1, True), ("LDR", 2, True)]:
    _ls32(_op, _sz, _sg)

def _dual(op, load):
    name = f"{op}_T1"

    def unpack(f):
        return dict(op=op, t=f["rt"], t2=f["rt2"], n=f["rn"], imm=f["imm8"] * 4,
                    index=bool(f["p"]), add=bool(f["u"]), wback=bool(f["w"]))

    def pack(i):
        _const(name, i, op=op, m=None)
        _need(name, "index", i.index or i.wback, "post-indexed form requires writeback")
        return dict(p=int(i.index), u=int(i.add), w=int(i.wback), rn=_reg(name, "n", i.n),
                    rt=_gpr(name, "t", i.t), rt2=_gpr(name, "t2", i.t2),
                    imm8=_scaled(name, "imm", i.imm, 4, 8))

    def guard(f):
        if not (f["p"] or f["w"]):
            return False
        if f["rt"] in (13, 15) or f["rt2"] in (13, 15):
            return False
        if f["rn"] == 15 and (not load or f["w"]):
            return False
        if f["w"] and f["rn"] in (f["rt"], f["rt2"]):
            return False
        return not (load and f["rt"] == f["rt2"])
    _add(name, f"1110100 p:1 u:1 1 w:1 {int(load)} rn:4 | rt:4 rt2:4 imm8:8", unpack, pack,
         guard)


_dual("LDRD", True)
_dual("STRD", False)

# data processing (register) ---------------------------------------------


def _shift_reg32(code, op):
    name = f"{op}_regshift_W_T2"
    _add(name, f"11111010 0 {code:02b} s:1 rn:4 | 1111 rd:4 0000 rm:4",
         lambda f: dict(op=op, d=f["rd"], n=f["rn"], m=f["rm"], setflags=bool(f["s"])),
         lambda i: (_const(name, i, op=op)
                    or dict(s=int(i.setflags), rn=_gpr(name, "n", i.n),
                            rd=_gpr(name, "d", i.d), rm=_gpr(name, "m", i.m))),
         guard=lambda f: all(f[k] not in (13, 15) for k in ("rd", "rn", "rm")))


for _code, _op in enumerate(["LSL", "LSR", "ASR", "ROR"]):
    _shift_reg32(_code, _op)


def _ext32(code, op):
    name = f"{op}_W_T2"
    _add(name, f"11111010 0 {code:03b} 1111 | 1111 rd:4 1 0 rot:2 rm:4",
         lambda f: dict(op=op, d=f["rd"], m=f["rm"], rotation=f["rot"] * 8),
         lambda i: (_const(name, i, op=op)
                    or _need(name, "rotation", i.rotation in (0, 8, 16, 24))
                    or dict(rd=_gpr(name, "d", i.d), rm=_gpr(name, "m", i.m),
                            rot=i.rotation // 8)),
         guard=lambda f: f["rd"] not in (13, 15) and f["rm"] not in (13, 15))


_ext32(0b000, "SXTH")
_ext32(0b001, "UXTH")
_ext32(0b100, "SXTB")
_ext32(0b101, "UXTB")


def _misc32(bits, code, op):
    name = f"{op}_W_T2" if op != "CLZ" else "CLZ_T1"
    _add(name, f"{bits} rm:4 | 1111 rd:4 10{code:02b} rm2:4",
         lambda f: dict(op=op, d=f["rd"], m=f["rm"]),
         lambda i: (_const(name, i, op=op)
                    or dict(rm=_gpr(name, "m", i.m), rm2=i.m, rd=_gpr(name, "d", i.d))),
         guard=lambda f: f["rm"] == f["rm2"] and f["rd"] not in (13, 15) and f["rm"] not in (13, 15))


_misc32("111110101001", 0b00, "REV")
_misc32("111110101001", 0b01, "REV16")
_misc32("111110101001", 0b10, "RBIT")
_misc32("111110101001", 0b11, "REVSH")
_misc32("111110101011", 0b00, "CLZ")


def _mul32(name, bits, op, code, accumulate):
    def guard(f):
        regs = [f["rd"], f["rn"], f["rm"]] + ([f["ra"]] if accumulate else [])
        return all(r not in (13, 15) for r in regs)
    if accumulate:
        pat = f"{bits} rn:4 | ra:4 rd:4 {code} rm:4"
    else:
        pat = f"{bits} rn:4 | 1111 rd:4 {code} rm:4"
    _add(name, pat,
         lambda f: dict(op=op, d=f["rd"], n=f["rn"], m=f["rm"],
                        a=f["ra"] if accumulate else None),
         lambda i: (_const(name, i, op=op, setflags=False)
                    or dict(rn=_gpr(name, "n", i.n), rd=_gpr(name, "d", i.d),
                            rm=_gpr(name, "m", i.m),
                            **({"ra": _gpr(name, "a", i.a)} if accumulate else {}))),
         guard=guard)


_mul32("MUL_W_T2", "111110110000", "MUL", "0000", False)
_mul32("MLA_T1", "111110110000", "MLA", "0000", True)
_mul32("MLS_T1", "111110110000", "MLS", "0001", True)
_mul32("SDIV_T1", "111110111001", "SDIV", "1111", False)
_mul32("UDIV_T1", "111110111011", "UDIV", "1111", False)


def _mull(name, bits, op):
    _add(name, f"{bits} rn:4 | rdlo:4 rdhi:4 0000 rm:4",
         lambda f: dict(op=op, t=f["rdlo"], t2=f["rdhi"], n=f["rn"], m=f["rm"]),
         lambda i: (_const(name, i, op=op)
                    or dict(rn=_gpr(name, "n", i.n), rm=_gpr(name, "m", i.m),
                            rdlo=_gpr(name, "t", i.t), rdhi=_gpr(name, "t2", i.t2))),
         guard=lambda f: (f["rdlo"] != f["rdhi"]
                          and all(f[k] not in (13, 15) for k in ("rn", "rm", "rdlo", "rdhi"))))


_mull("SMULL_T1", "111110111000", "SMULL")
_mull("UMULL_T1", "111110111010", "UMULL")

for _e in TABLE16 + TABLE32:
    if _e.name in BY_NAME:
        raise RuntimeError(f"duplicate encoding name {_e.name}")
    BY_NAME[_e.name] = _e
