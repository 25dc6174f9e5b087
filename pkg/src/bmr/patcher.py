"""Instrumentation pipeline: translate sites, build the hook region, patch."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import hookgen
from .decoder import InstrClass, Undecodable, classify, decode
from .decoder.instruction import format_instruction
from .image import (EVT_SYSTEM_ENTRIES, HARDFAULT, USAGEFAULT, FirmwareImage, ImageError,
                    append_region, read_evt_entry, read_halfword, region_base_for,
                    write_evt_entry)
from .translator import TranslationError, translate

log = logging.getLogger(__name__)

ACCEPTED = "accepted"
REJECTED = "rejected"

#: how many preceding halfword slots an IT instruction can cover
IT_LOOKBACK = 4


class PatchError(Exception):
    """Image-level failure; aborts the whole batch."""


class VerifyError(Exception):
    pass


class FootprintViolation(VerifyError):
    def __init__(self, offset: int, address: int, before: int, after: int):
        super().__init__(f"unexpected change at offset {offset:#x} ({address:#010x}): "
                         f"{before:#04x} -> {after:#04x}")
        self.offset, self.address, self.before, self.after = offset, address, before, after


class BehaviorDivergence(VerifyError):
    pass


@dataclass(frozen=True)
class SiteRequest:
    address: int
    payload: bytes = b""


@dataclass
class SiteResult:
    site: int
    status: str
    reason: str = ""
    proxy: int | None = None
    worker_offset: int | None = None
    plan_size: int | None = None
    klass: str = ""
    detail: str = ""

    @property
    def accepted(self) -> bool:
        return self.status == ACCEPTED


@dataclass
class InstrumentReport:
    sites: list = field(default_factory=list)
    original_evt: int = 0
    vector: int = HARDFAULT
    blob_size: int = 0
    region_base: int = 0
    handler_entry: int = 0
    site_sizes: dict = field(default_factory=dict)

    @property
    def accepted(self) -> list:
        return [s for s in self.sites if s.status == ACCEPTED]

    @property
    def rejected(self) -> list:
        return [s for s in self.sites if s.status != ACCEPTED]

    @property
    def fraction(self) -> float:
        return len(self.accepted) / len(self.sites) if self.sites else 0.0

    def serialize(self) -> str:
        lines = [
            f"original_evt = {self.original_evt:#010x}",
            f"vector = {'usagefault' if self.vector == USAGEFAULT else 'hardfault'}",
            f"region_base = {self.region_base:#010x}",
            f"handler_entry = {self.handler_entry:#010x}",
            f"blob_size = {self.blob_size}",
            f"requested = {len(self.sites)}",
            f"accepted = {len(self.accepted)}",
            f"rejected = {len(self.rejected)}",
            f"fraction = {100 * self.fraction:.1f}%",
        ]
        for s in self.sites:
            lines.append("")
            lines.append("[site]")
            lines.append(f"site = {s.site:#010x}")
            lines.append(f"status = {s.status}")
            lines.append(f"reason = {s.reason}")
            lines.append(f"proxy = {'' if s.proxy is None else f'R{s.proxy}'}")
            lines.append("worker_offset = "
                         + ("" if s.worker_offset is None else f"{s.worker_offset:#x}"))
            lines.append(f"plan_size = {'' if s.plan_size is None else s.plan_size}")
            if s.klass:
                lines.append(f"class = {s.klass}")
            if s.site in self.site_sizes:
                lines.append(f"code_size = {self.site_sizes[s.site]}")
            if s.detail:
                lines.append(f"detail = {s.detail}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "InstrumentReport":
        rep = cls()
        cur = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line == "[site]":
                cur = SiteResult(0, "")
                rep.sites.append(cur)
                continue
            key, _, val = (p.strip() for p in line.partition("="))
            if cur is None:
                if key == "original_evt":
                    rep.original_evt = int(val, 0)
                elif key == "vector":
                    rep.vector = USAGEFAULT if val == "usagefault" else HARDFAULT
                elif key == "region_base":
                    rep.region_base = int(val, 0)
                elif key == "handler_entry":
                    rep.handler_entry = int(val, 0)
                elif key == "blob_size":
                    rep.blob_size = int(val)
                continue
            if key == "site":
                cur.site = int(val, 0)
            elif key == "status":
                cur.status = val
            elif key == "reason":
                cur.reason = val
            elif key == "proxy":
                cur.proxy = int(val[1:]) if val else None
            elif key == "worker_offset":
                cur.worker_offset = int(val, 0) if val else None
            elif key == "plan_size":
                cur.plan_size = int(val) if val else None
            elif key == "class":
                cur.klass = val
            elif key == "code_size":
                rep.site_sizes[cur.site] = int(val)
            elif key == "detail":
                cur.detail = val
        return rep


def _vector_index(vector) -> int:
    if vector in (HARDFAULT, "hardfault"):
        return HARDFAULT
    if vector in (USAGEFAULT, "usagefault"):
        return USAGEFAULT
    raise PatchError(f"unknown fault vector {vector!r}")


def decode_at(image: FirmwareImage, addr: int):
    hw = [read_halfword(image, addr)]
    if image.contains(addr + 2, 2):
        hw.append(read_halfword(image, addr + 2))
    return decode(hw, addr)


def inside_it_block(image: FirmwareImage, addr: int) -> bool:
    """True when an IT instruction in the preceding slots covers ``addr``.

    Slots are walked backwards one halfword at a time, so a 32-bit
    instruction whose second halfword happens to look like IT can produce a
    false positive. That errs on the side of rejecting.
    """
    for k in range(1, IT_LOOKBACK + 1):
        a = addr - 2 * k
        if not image.contains(a, 2):
            break
        hw = read_halfword(image, a)
        if hw & 0xFF00 != 0xBF00 or hw & 0xF == 0:
            continue
        mask = hw & 0xF
        covered = 4 - (mask & -mask).bit_length() + 1
        # walk forward from the IT counting instructions up to addr
        pos, n = a + 2, 0
        while pos < addr and image.contains(pos, 2):
            first = read_halfword(image, pos)
            pos += 4 if first >> 11 in (0b11101, 0b11110, 0b11111) else 2
            n += 1
        if pos == addr and n < covered:
            return True
    return False


def _reject(addr: int, reason: str, detail: str = "", klass: str = "") -> SiteResult:
    return SiteResult(addr, REJECTED, reason, klass=klass, detail=detail)


def _check_site(image: FirmwareImage, req: SiteRequest, taken: dict):
    """Validate one request; returns (HookSite or None, SiteResult)."""
    addr = req.address & ~1
    if not image.contains(addr, 2):
        return None, _reject(addr, "OutOfRange", "address outside image")
    if read_halfword(image, addr) == hookgen.TRAP_HALFWORD:
        return None, _reject(addr, "AlreadyInstrumented", "trap opcode already present")
    try:
        ins = decode_at(image, addr)
    except Undecodable as exc:
        return None, _reject(addr, "Undecodable", str(exc), InstrClass.UNDECODABLE.value)
    klass = classify(ins)
    for other, olen in taken.items():
        if other < addr + ins.length and addr < other + olen:
            return None, _reject(addr, "Overlap", f"overlaps site {other:#010x}", klass.value)
    if inside_it_block(image, addr):
        return None, _reject(addr, "InsideITBlock",
                             "an IT instruction covers this site", klass.value)
    evt_lo = image.evt_address
    if addr < evt_lo + 4 * EVT_SYSTEM_ENTRIES and evt_lo < addr + ins.length:
        return None, _reject(addr, "OutOfRange", "site overlaps the vector table", klass.value)
    try:
        plan = translate(ins)
    except TranslationError as exc:
        return None, _reject(addr, exc.reason, exc.detail or str(exc), klass.value)
    taken[addr] = ins.length
    return hookgen.HookSite(addr, plan, bytes(req.payload)), SiteResult(
        addr, ACCEPTED, proxy=plan.proxy, plan_size=plan.size, klass=klass.value,
        detail=format_instruction(ins))


def instrument(image: FirmwareImage, requests, vector=HARDFAULT,
               payload_limit: int | None = None):
    """Patch ``image`` for every acceptable request.

    Returns ``(patched_image, report)``. Per-site problems are recorded in
    the report and never abort the batch; a bad vector table raises
    :class:`PatchError`.
    """
    vec = _vector_index(vector)
    reqs = [r if isinstance(r, SiteRequest) else SiteRequest(*r) for r in requests]
    try:
        original_evt = read_evt_entry(image, vec).value
    except ImageError as exc:
        raise PatchError(f"cannot read vector {vec}: {exc}") from None
    if original_evt & 1 == 0:
        raise PatchError(f"vector {vec} entry {original_evt:#010x} is not a Thumb address")

    taken: dict[int, int] = {}
    sites, results = [], []
    for req in reqs:
        hs, res = _check_site(image, req, taken)
        if hs is not None:
            sites.append(hs)
        else:
            log.info("rejected %#010x: %s %s", res.site, res.reason, res.detail)
        results.append(res)

    if not sites:
        log.info("no site accepted; image left unchanged")
        return image, InstrumentReport(results, original_evt, vec)

    region = region_base_for(image)
    try:
        blob = hookgen.assemble_blob(sites, region, original_evt, payload_limit)
    except hookgen.PayloadTooLarge as exc:
        raise PatchError(str(exc)) from None

    patched = image
    for hs in sites:
        patched = patched.write(hs.address, hookgen.TRAP_BYTES)
    patched, base = append_region(patched, blob.code)
    assert base == region
    patched = write_evt_entry(patched, vec, blob.handler_entry)

    for res in results:
        if res.accepted:
            res.worker_offset = blob.worker_offset(res.site)
    report = InstrumentReport(results, original_evt, vec, blob.size, region,
                              blob.handler_entry, dict(blob.site_sizes))
    log.info("instrumented %d/%d sites, blob %d bytes at %#010x",
             len(sites), len(results), blob.size, region)
    return patched, report


# -- inspection -----------------------------------------------------------------

@dataclass(frozen=True)
class ListingLine:
    address: int
    raw: tuple
    text: str
    klass: str
    verdict: str
    note: str = ""

    def __str__(self) -> str:
        raw = " ".join(f"{h:04x}" for h in self.raw)
        note = f"  ; {self.note}" if self.note else ""
        return f"{self.address:08x}:  {raw:<10} {self.text:<36} {self.klass:<12} {self.verdict}{note}"


def _blob_annotations(image: FirmwareImage, report: InstrumentReport | None) -> dict:
    if report is None or not report.region_base:
        return {}
    notes = {report.region_base: "hook handler"}
    for s in report.accepted:
        notes[report.region_base + s.worker_offset] = f"worker for site {s.site:#010x}"
    return notes


def inspect(image: FirmwareImage, start: int, end: int,
            report: InstrumentReport | None = None) -> list:
    """Decode ``[start, end)`` linearly with class and translatability per line.

    Bytes are decoded as if they were code; anything whose first halfword
    could also be data (every decodable C1 pattern, really) gets flagged so
    the user checks that the target is code before instrumenting it.
    """
    start &= ~1
    if end < start:
        raise ValueError("range end before start")
    if start == end:
        return []
    image.offset_of(start, end - start)
    notes = _blob_annotations(image, report)
    in_blob = report is not None and report.region_base and \
        report.region_base <= start < report.region_base + report.blob_size
    out = []
    addr = start
    while addr < end:
        note = notes.get(addr, "")
        if image.contains(addr, 2) and read_halfword(image, addr) == hookgen.TRAP_HALFWORD:
            out.append(ListingLine(addr, (hookgen.TRAP_HALFWORD,), "UDF #0 (hook trap)",
                                   InstrClass.UNDECODABLE.value, "hook site", note))
            addr += 2
            continue
        try:
            ins = decode_at(image, addr)
        except Undecodable as exc:
            raw = exc.halfwords or (read_halfword(image, addr),)
            out.append(ListingLine(addr, tuple(raw)[:1], ".hword (undecodable)",
                                   InstrClass.UNDECODABLE.value, "rejected", note))
            addr += 2
            continue
        klass = classify(ins)
        try:
            translate(ins)
            verdict = "translatable"
        except TranslationError as exc:
            verdict = f"rejected ({exc.reason})"
        if not note and not in_blob:
            note = "verify target is code"
        elif in_blob and not note:
            note = "hook system"
        out.append(ListingLine(addr, ins.raw, format_instruction(ins), klass.value,
                               verdict, note))
        addr += ins.length
    return out


# -- verification ----------------------------------------------------------------

@dataclass
class VerificationResult:
    footprint_ok: bool = True
    sites: dict = field(default_factory=dict)   # site -> bool
    entries: dict = field(default_factory=dict)  # entry -> DivergenceReport
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.footprint_ok and all(self.sites.values()) and \
            all(self.entries.values())


def check_footprint(original: FirmwareImage, patched: FirmwareImage,
                    report: InstrumentReport) -> None:
    """Raise FootprintViolation unless every change is a trap, the EVT word
    or the appended tail."""
    a, b = original.data, patched.data
    if original.base_address != patched.base_address or len(b) < len(a):
        raise FootprintViolation(0, original.base_address, 0, 0)
    allowed = set()
    for s in report.accepted:
        off = s.site - original.base_address
        allowed.update((off, off + 1))
    evt = original.evt_offset + 4 * report.vector
    if report.accepted or len(b) > len(a):
        allowed.update(range(evt, evt + 4))
    for off in range(len(a)):
        if a[off] != b[off] and off not in allowed:
            raise FootprintViolation(off, original.base_address + off, a[off], b[off])
    for s in report.accepted:
        off = s.site - original.base_address
        if b[off:off + 2] != hookgen.TRAP_BYTES:
            raise FootprintViolation(off, s.site, a[off], b[off])
    if report.blob_size:
        start = report.region_base - original.base_address
        if len(b) != start + report.blob_size or start < len(a):
            raise FootprintViolation(len(a), original.base_address + len(a), 0, 0)
        for off in range(len(a), start):
            if b[off]:
                raise FootprintViolation(off, original.base_address + off, 0, b[off])
    elif len(b) != len(a):
        raise FootprintViolation(len(a), original.base_address + len(a), 0, 0)


def verify(original: FirmwareImage, patched: FirmwareImage, report: InstrumentReport,
           entries=(), ram=None, limits=None, payload_owned=(), raise_on_failure=False):
    """Footprint check, then differential emulation from each entry point.

    A site passes when it was reached in the instrumented run of some entry
    and every entry whose run reached it produced an equivalent terminal
    state. Sites never reached are reported as passing only trivially, with
    a note in ``detail``.
    """
    from .emu.diff import Incomparable, diff
    from .emu.machine import Limits, RamConfig, run

    res = VerificationResult()
    try:
        check_footprint(original, patched, report)
    except FootprintViolation as exc:
        res.footprint_ok = False
        res.detail = str(exc)
        if raise_on_failure:
            raise
        return res

    ram = ram or RamConfig()
    limits = limits or Limits()
    reached: dict = {s.site: [] for s in report.accepted}
    for entry in entries:
        ta = run(original, entry, ram, limits, report.vector)
        tb = run(patched, entry, ram, limits, report.vector)
        try:
            rep = diff(ta, tb, payload_owned=payload_owned)
        except Incomparable as exc:
            from .emu.diff import DivergenceReport
            rep = DivergenceReport([("cause", 0, 1)])
            res.detail = str(exc)
        res.entries[entry] = rep
        for kind, _, addr in tb.events:
            if kind == "entry" and addr in reached:
                reached[addr].append(bool(rep))
    missed = [s for s, hits in reached.items() if not hits]
    for s, hits in reached.items():
        res.sites[s] = all(hits)
    if missed and not res.detail:
        res.detail = f"{len(missed)} site(s) not reached by any entry"
    if raise_on_failure and not res.passed:
        bad = [e for e, r in res.entries.items() if not r]
        raise BehaviorDivergence(
            f"entry {bad[0]:#010x}: {res.entries[bad[0]]}" if bad else res.detail)
    return res
