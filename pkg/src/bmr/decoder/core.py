"""Decode, encode and classify Thumb/Thumb-2 instructions."""

from __future__ import annotations

import enum
from dataclasses import fields as dc_fields, replace

from .encodings import BY_NAME, TABLE16, TABLE32, Encoding
from .instruction import SYSTEM_OPS, Instruction, Undecodable, Unencodable
from .registers import GENERAL, PC, RegisterSet


class InstrClass(enum.Enum):
    C1 = "C1"
    C2 = "C2"
    UNSUPPORTED = "Unsupported"
    UNDECODABLE = "Undecodable"

    def __str__(self):
        return self.value


def instr_length(first_halfword: int) -> int:
    return 4 if (first_halfword >> 11) in (0b11101, 0b11110, 0b11111) else 2


def _buckets(table: list[Encoding], shift: int) -> list[tuple[Encoding, ...]]:
    # index entries by the top 8 bits of the first halfword
    out = []
    for top in range(256):
        probe = top << shift
        pmask = 0xFF << shift
        out.append(tuple(e for e in table
                         if (e.value ^ probe) & e.mask & pmask == 0))
    return out


_B16 = _buckets(TABLE16, 8)
_B32 = _buckets(TABLE32, 24)


def _match(entries, word: int) -> tuple[Encoding, dict] | None:
    for e in entries:
        if word & e.mask == e.value:
            f = e.extract(word)
            if e.guard is None or e.guard(f):
                return e, f
    return None


def decode(halfwords, address: int = 0) -> Instruction:
    """Decode one instruction from its first one or two halfwords.

    Extra trailing halfwords are ignored, so a caller may always pass two.
    """
    hw = tuple(halfwords)
    if not hw:
        raise Undecodable((), address, "no halfwords")
    first = hw[0] & 0xFFFF
    if instr_length(first) == 2:
        hit = _match(_B16[first >> 8], first)
        raw = (first,)
        word = first
    else:
        if len(hw) < 2:
            raise Undecodable(hw, address, "truncated 32-bit instruction")
        raw = (first, hw[1] & 0xFFFF)
        word = first << 16 | raw[1]
        hit = _match(_B32[first >> 8], word)
    if hit is None:
        raise Undecodable(raw, address)
    enc, f = hit
    return Instruction(enc=enc.name, address=address, raw=raw, **enc.unpack(f))


def decode_bytes(buf, offset: int = 0, address: int = 0) -> Instruction:
    """Decode from a little-endian byte buffer."""
    hw = [int.from_bytes(buf[offset:offset + 2], "little")]
    if len(buf) >= offset + 4:
        hw.append(int.from_bytes(buf[offset + 2:offset + 4], "little"))
    if len(buf) < offset + 2:
        raise Undecodable((), address, "truncated buffer")
    return decode(hw, address)


_IGNORED = {"address", "raw", "reads", "writes", "reads_flags", "sets_flags"}
_COMPARED = [f.name for f in dc_fields(Instruction) if f.name not in _IGNORED]


def _strip(i: Instruction) -> Instruction:
    return replace(i, address=0, raw=())


def encode(instr: Instruction) -> tuple[int, ...]:
    """Encode to halfwords; raises Unencodable naming the offending field.

    The result is checked by decoding it again, so an instruction whose
    attributes only partially fit (or which another encoding would shadow)
    is rejected instead of silently changing meaning.
    """
    enc = BY_NAME.get(instr.enc)
    if enc is None:
        raise Unencodable(instr.enc, "enc", "unknown encoding")
    f = enc.pack(instr)
    word = enc.insert(f)
    raw = (word,) if enc.width == 16 else (word >> 16, word & 0xFFFF)
    try:
        back = decode(raw, instr.address)
    except Undecodable as exc:
        raise Unencodable(enc.name, "form", f"unpredictable combination ({exc.reason})")
    if back.enc != enc.name:
        raise Unencodable(enc.name, "form", f"encodes as {back.enc}")
    for name in _COMPARED:
        a, b = getattr(back, name), getattr(instr, name)
        if name == "imm_carry" and b is None:
            continue  # derived from the immediate; callers may leave it unset
        if a != b:
            raise Unencodable(enc.name, name, f"{b!r} does not round-trip (got {a!r})")
    return raw


def encode_bytes(instr: Instruction) -> bytes:
    return b"".join(h.to_bytes(2, "little") for h in encode(instr))


def build(enc: str, address: int = 0, **attrs) -> Instruction:
    """Construct an instruction for a named encoding and validate it.

    Returns the decoded form of the encoding, so derived attributes and
    ``raw`` are filled in consistently.
    """
    op = attrs.pop("op", None)
    if op is None:
        op = enc.split("_", 1)[0]
    proto = Instruction(enc=enc, op=op, address=address, **attrs)
    raw = encode(proto)
    return decode(raw, address)


def classify(instr: Instruction) -> InstrClass:
    if instr.op in SYSTEM_OPS:
        return InstrClass.UNSUPPORTED
    if instr.op == "UDF":
        return InstrClass.UNDECODABLE
    if PC in (instr.reads | instr.writes):
        return InstrClass.C2
    return InstrClass.C1


def classify_raw(halfwords, address: int = 0) -> InstrClass:
    """Total classification over raw patterns."""
    try:
        return classify(decode(halfwords, address))
    except Undecodable:
        return InstrClass.UNDECODABLE


def registers_used(instr: Instruction) -> RegisterSet:
    return (instr.reads | instr.writes) & GENERAL
