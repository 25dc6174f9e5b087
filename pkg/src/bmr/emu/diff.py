"""Terminal-state comparison of two runs and trap cost measurement."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..image import HARDFAULT, FirmwareImage
from .machine import Limits, RamConfig, Trace, run


class Incomparable(Exception):
    pass


class SiteNotHit(Exception):
    pass


FLAG_NAMES = ("N", "Z", "C", "V", "Q")


@dataclass
class DivergenceReport:
    items: list = field(default_factory=list)  # (what, value_a, value_b)
    post: tuple | None = field(default=None, compare=False, repr=False)  # (state_a, state_b)

    @property
    def passed(self) -> bool:
        return not self.items

    @property
    def first(self):
        return self.items[0] if self.items else None

    def __bool__(self) -> bool:
        return self.passed

    def __str__(self) -> str:
        if self.passed:
            return "equivalent"
        what, a, b = self.items[0]
        return f"{what}: {a:#x} != {b:#x}" + (
            f" (+{len(self.items) - 1} more)" if len(self.items) > 1 else "")


def diff(a: Trace, b: Trace, hook_sites=(), ram_regions=(), payload_owned=()) -> DivergenceReport:
    """Compare terminal state of two traces.

    RAM between the lowest handler-mode stack pointer of either run and the
    terminal SP is dead stack used by the hook system and is skipped, as are
    ``payload_owned`` (start, size) ranges. ``ram_regions`` restricts the
    comparison to the given (start, size) ranges when non-empty.
    ``hook_sites`` is accepted for reporting symmetry and not otherwise used.
    """
    if a.cause != b.cause:
        raise Incomparable(f"termination causes differ: {a.cause} vs {b.cause}")
    sa, sb = a.state, b.state
    rep = DivergenceReport()
    for k in range(15):
        if sa.r[k] != sb.r[k]:
            name = {13: "SP", 14: "LR"}.get(k, f"R{k}")
            rep.items.append((name, sa.r[k], sb.r[k]))
    for name in FLAG_NAMES:
        va, vb = getattr(sa, name.lower()), getattr(sb, name.lower())
        if va != vb:
            rep.items.append((name, va, vb))
    lows = [x for x in (sa.low_water, sb.low_water) if x is not None]
    dead = (min(lows), min(sa.r[13], sb.r[13])) if lows else (0, 0)
    skip = [dead] + [(s, s + n) for s, n in payload_owned]
    if ram_regions:
        ranges = [(s, s + n) for s, n in ram_regions]
    else:
        ranges = [(a.ram_base, a.ram_base + len(a.ram))]
    for lo, hi in ranges:
        addr = lo
        while addr < hi:
            if any(s <= addr < e for s, e in skip):
                addr += 1
                continue
            ia, ib = addr - a.ram_base, addr - b.ram_base
            if a.ram[ia] != b.ram[ib]:
                rep.items.append((f"RAM[{addr:#010x}]", a.ram[ia], b.ram[ib]))
                break
            addr += 1
    return rep


def trap_costs(trace: Trace) -> list[tuple[int, int]]:
    """(site, retired count) per trap, counting the trapping instruction
    through the exception-returning instruction inclusive."""
    out = []
    pending = None
    for kind, retired, addr in trace.events:
        if kind == "entry":
            pending = (addr, retired)
        elif kind == "return" and pending is not None:
            out.append((pending[0], retired - pending[1] + 1))
            pending = None
    return out


def measure_trap_cost(image: FirmwareImage, site: int, entry: int,
                      ram: RamConfig = RamConfig(), limits: Limits = Limits(),
                      vector: int = HARDFAULT) -> int:
    trace = run(image, entry, ram, limits, vector)
    for addr, cost in trap_costs(trace):
        if addr == site:
            return cost
    raise SiteNotHit(f"no trap at {site:#010x} (run ended: {trace.cause})")
