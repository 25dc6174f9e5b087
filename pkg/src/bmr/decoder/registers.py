"""Register numbering and bitmask register sets."""

from __future__ import annotations

from typing import Iterable, Iterator

SP = 13
LR = 14
PC = 15

NAMES = [f"R{i}" for i in range(13)] + ["SP", "LR", "PC"]

#: registers eligible to stand in for the PC in translated code
PROXY_POOL = tuple(range(13))


def reg_name(r: int) -> str:
    return NAMES[r]


def parse_reg(name: str) -> int:
    key = name.strip().upper()
    aliases = {"IP": 12, "FP": 11, "SB": 9, "SL": 10}
    if key in aliases:
        return aliases[key]
    try:
        return NAMES.index(key)
    except ValueError:
        raise ValueError(f"unknown register {name!r}") from None


class RegisterSet:
    """Immutable set of core registers stored as a 16-bit mask."""

    __slots__ = ("mask",)

    def __init__(self, regs: Iterable[int] | int = ()):
        if isinstance(regs, int):
            mask = regs
        else:
            mask = 0
            for r in regs:
                if not 0 <= r <= 15:
                    raise ValueError(f"register number out of range: {r}")
                mask |= 1 << r
        object.__setattr__(self, "mask", mask & 0xFFFF)

    def __setattr__(self, name, value):
        raise AttributeError("RegisterSet is immutable")

    @classmethod
    def of(cls, *regs: int | None) -> "RegisterSet":
        return cls(r for r in regs if r is not None)

    def __contains__(self, r: object) -> bool:
        return isinstance(r, int) and 0 <= r <= 15 and bool(self.mask >> r & 1)

    def __iter__(self) -> Iterator[int]:
        m = self.mask
        for r in range(16):
            if m >> r & 1:
                yield r

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __bool__(self) -> bool:
        return self.mask != 0

    def __or__(self, other: "RegisterSet") -> "RegisterSet":
        return RegisterSet(self.mask | other.mask)

    def __and__(self, other: "RegisterSet") -> "RegisterSet":
        return RegisterSet(self.mask & other.mask)

    def __sub__(self, other: "RegisterSet") -> "RegisterSet":
        return RegisterSet(self.mask & ~other.mask)

    def __invert__(self) -> "RegisterSet":
        return RegisterSet(~self.mask & 0xFFFF)

    def __le__(self, other: "RegisterSet") -> bool:
        return self.mask & ~other.mask == 0

    def __ge__(self, other: "RegisterSet") -> bool:
        return other <= self

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RegisterSet) and other.mask == self.mask

    def __hash__(self) -> int:
        return hash(("RegisterSet", self.mask))

    def __repr__(self) -> str:
        return "{" + ", ".join(NAMES[r] for r in self) + "}"


EMPTY = RegisterSet()
GENERAL = RegisterSet(PROXY_POOL)
