# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled arithmetic and memory kernels; see ``_kernels_py`` for the reference."""

from .errors import MemFault

cdef unsigned long long MASK = 0xFFFFFFFF


def add_with_carry(long long x, long long y, int carry):
    cdef unsigned long long ux = (<unsigned long long>x) & MASK
    cdef unsigned long long uy = (<unsigned long long>y) & MASK
    cdef unsigned long long u = ux + uy + carry
    cdef unsigned int result = <unsigned int>(u & MASK)
    cdef long long s = <long long>(<int>ux) + <long long>(<int>uy) + carry
    return result, int(u > MASK), int(s != <long long>(<int>result))


def shift_c(value, kind, int amount, int carry):
    cdef unsigned int v = <unsigned int>(value & 0xFFFFFFFF)
    cdef unsigned int res
    if kind is None or (amount == 0 and kind != "RRX"):
        return v, carry
    if kind == "LSL":
        if amount > 32:
            return 0, 0
        if amount == 32:
            return 0, v & 1
        return <unsigned int>(v << amount), (v >> (32 - amount)) & 1
    if kind == "LSR":
        if amount > 32:
            return 0, 0
        if amount == 32:
            return 0, v >> 31
        return v >> amount, (v >> (amount - 1)) & 1
    if kind == "ASR":
        if amount >= 32:
            return (0xFFFFFFFF if v >> 31 else 0), v >> 31
        return <unsigned int>((<int>v) >> amount), (v >> (amount - 1)) & 1
    if kind == "ROR":
        amount &= 31
        if amount == 0:
            return v, v >> 31
        res = (v >> amount) | (v << (32 - amount))
        return res, res >> 31
    if kind == "RRX":
        return (<unsigned int>carry << 31) | (v >> 1), v & 1
    raise ValueError(kind)


cdef class Memory:
    cdef public list regions
    cdef object _last

    def __init__(self):
        self.regions = []
        self._last = None

    def add_region(self, unsigned long long base, data, bint writable, str name=""):
        cdef unsigned long long end = base + len(data)
        for r in self.regions:
            if base < r[1] and r[0] < end:
                raise ValueError(f"region {name} overlaps {r[4]}")
        self.regions.append([base, end, bytearray(data), writable, name])
        self.regions.sort(key=lambda r: r[0])

    cpdef list find(self, long long addr, int size):
        cdef list r = self._last
        if r is not None and r[0] <= addr and addr + size <= r[1]:
            return r
        for r in self.regions:
            if r[0] <= addr and addr + size <= r[1]:
                self._last = r
                return r
        raise MemFault(f"access {addr:#010x}+{size} outside the memory map", addr)

    def is_readonly(self, long long addr):
        try:
            return not self.find(addr, 2)[3]
        except MemFault:
            return False

    cpdef unsigned long long read(self, long long addr, int size) except? 0xFFFFFFFFFFFFFFFF:
        cdef list r = self.find(addr, size)
        cdef const unsigned char[:] buf = r[2]
        cdef long long off = addr - <long long>r[0]
        cdef unsigned long long v = 0
        cdef int k
        for k in range(size - 1, -1, -1):
            v = (v << 8) | buf[off + k]
        return v

    cpdef write(self, long long addr, int size, unsigned long long value):
        cdef list r = self.find(addr, size)
        if not r[3]:
            raise MemFault(f"store to read-only {r[4]} at {addr:#010x}", addr)
        cdef unsigned char[:] buf = r[2]
        cdef long long off = addr - <long long>r[0]
        cdef int k
        for k in range(size):
            buf[off + k] = value & 0xFF
            value >>= 8

    def read_bytes(self, long long addr, int size):
        cdef list r = self.find(addr, size)
        off = addr - r[0]
        return bytes(r[2][off:off + size])

    def region_named(self, str name):
        for r in self.regions:
            if r[4] == name:
                return r
        raise KeyError(name)
