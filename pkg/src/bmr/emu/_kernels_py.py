"""Pure-Python arithmetic and memory kernels.

Mirrors ``_kernels.pyx`` exactly; the selector in :mod:`bmr.emu.kernels`
picks the compiled variant when it is importable.
"""

from __future__ import annotations

from .errors import MemFault

MASK = 0xFFFFFFFF


def add_with_carry(x: int, y: int, carry: int):
    u = (x & MASK) + (y & MASK) + carry
    result = u & MASK
    sx = (x & MASK) - ((x & 0x80000000) << 1)
    sy = (y & MASK) - ((y & 0x80000000) << 1)
    s = sx + sy + carry
    sr = result - ((result & 0x80000000) << 1)
    return result, int(u > MASK), int(s != sr)


def shift_c(value: int, kind: str, amount: int, carry: int):
    """Shift with carry-out; ``kind`` is LSL/LSR/ASR/ROR/RRX."""
    value &= MASK
    if kind is None or amount == 0 and kind != "RRX":
        return value, carry
    if kind == "LSL":
        if amount > 32:
            return 0, 0
        full = value << amount
        return full & MASK, full >> 32 & 1
    if kind == "LSR":
        if amount > 32:
            return 0, 0
        return value >> amount if amount < 32 else 0, value >> (amount - 1) & 1
    if kind == "ASR":
        if amount >= 32:
            bit = value >> 31
            return (MASK if bit else 0), bit
        signed = value - ((value & 0x80000000) << 1)
        return (signed >> amount) & MASK, value >> (amount - 1) & 1
    if kind == "ROR":
        amount &= 31
        if amount == 0:
            return value, value >> 31
        res = (value >> amount | value << (32 - amount)) & MASK
        return res, res >> 31
    if kind == "RRX":
        return (carry << 31 | value >> 1), value & 1
    raise ValueError(kind)


class Memory:
    """Flat little-endian address space made of disjoint regions."""

    def __init__(self):
        self.regions: list = []  # [base, end, bytearray, writable, name]
        self._last = None

    def add_region(self, base: int, data, writable: bool, name: str = ""):
        end = base + len(data)
        for r in self.regions:
            if base < r[1] and r[0] < end:
                raise ValueError(f"region {name} overlaps {r[4]}")
        self.regions.append([base, end, bytearray(data), writable, name])
        self.regions.sort(key=lambda r: r[0])

    def find(self, addr: int, size: int):
        r = self._last
        if r is not None and r[0] <= addr and addr + size <= r[1]:
            return r
        for r in self.regions:
            if r[0] <= addr and addr + size <= r[1]:
                self._last = r
                return r
        raise MemFault(f"access {addr:#010x}+{size} outside the memory map", addr)

    def is_readonly(self, addr: int) -> bool:
        try:
            return not self.find(addr, 2)[3]
        except MemFault:
            return False

    def read(self, addr: int, size: int) -> int:
        r = self.find(addr, size)
        off = addr - r[0]
        return int.from_bytes(r[2][off:off + size], "little")

    def write(self, addr: int, size: int, value: int):
        r = self.find(addr, size)
        if not r[3]:
            raise MemFault(f"store to read-only {r[4]} at {addr:#010x}", addr)
        off = addr - r[0]
        r[2][off:off + size] = (value & ((1 << (8 * size)) - 1)).to_bytes(size, "little")

    def read_bytes(self, addr: int, size: int) -> bytes:
        r = self.find(addr, size)
        off = addr - r[0]
        return bytes(r[2][off:off + size])

    def region_named(self, name: str):
        for r in self.regions:
            if r[4] == name:
                return r
        raise KeyError(name)
