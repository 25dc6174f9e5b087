"""Hook code generation: the appended region that services trapped sites.

Layout of the region, in order::

    handler     fault entry; linear dispatch over the site table
    ret         shared worker epilogue (pops EXC_RETURN into PC)
    literal     original fault handler address
    table       sorted (site, worker | 1) word pairs
    workers     one per site
    stubs       thread-mode continuations for SP-using sites
    payloads    user code, 4-aligned

On entry to a worker SP points at the hardware exception frame. Each worker
starts with ``PUSH {R0, LR}`` so the frame sits 8 bytes above SP plus
whatever the worker has pushed since.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import asm
from .asm import Align, Label, Raw, Word
from .decoder import Instruction
from .decoder.registers import LR, PC
from .translator import (RA_BRANCH, RA_INTERWORK, RA_NEXT, RA_RELATIVE, StepKind,
                         TranslationPlan)

TRAP_HALFWORD = 0xDE00
TRAP_BYTES = TRAP_HALFWORD.to_bytes(2, "little")

#: byte offsets of the stacked registers inside the exception frame
FRAME_SLOT = {0: 0, 1: 4, 2: 8, 3: 12, 12: 16, LR: 20, "ra": 24, "xpsr": 28}
WORKER_HEADER = 8
PAYLOAD_SAVE = 56       # R0-R12, LR
#: worst-case bytes the hook machinery uses below the application SP
STACK_BUDGET = 0x20 + 4 + WORKER_HEADER + 4 + PAYLOAD_SAVE
#: instructions per non-matching dispatcher iteration
DISPATCH_LOOP_COST = 5

_APSR_NZCVQ = 0b10
_FLAG_MASK = 0xF8000000
_T_BIT = 1 << 24


class HookGenError(Exception):
    pass


class PayloadTooLarge(HookGenError):
    def __init__(self, site: int, size: int, limit: int):
        super().__init__(f"payload for {site:#010x} is {size} bytes (limit {limit})")
        self.site, self.size, self.limit = site, size, limit


@dataclass(frozen=True)
class HookSite:
    address: int
    plan: TranslationPlan
    payload: bytes = b""

    @property
    def original(self) -> Instruction:
        return self.plan.original


@dataclass(frozen=True)
class HookBlob:
    code: bytes
    region_base: int
    dispatch_table: tuple          # ((site, worker_address), ...) sorted by site
    handler_entry: int             # Thumb address (bit 0 set)
    original_fault_handler: int
    labels: dict = field(default_factory=dict)
    site_sizes: dict = field(default_factory=dict)   # site -> worker+stub+payload bytes

    @property
    def size(self) -> int:
        return len(self.code)

    def worker_address(self, site: int) -> int:
        return self.labels[_lbl(site, "worker")]

    def worker_offset(self, site: int) -> int:
        return self.worker_address(site) - self.region_base


def _lbl(site: int, what: str) -> str:
    return f"s{site:08x}_{what}"


# -- fragments ----------------------------------------------------------------

def generate_handler(n_sites: int) -> list:
    """Fault entry plus the dispatcher loop; falls back to the original handler."""
    if n_sites == 0:
        return [Label("handler"), asm.ldr_lit(PC, "orig_handler")]
    if n_sites > 0xFFFF:
        raise HookGenError(f"{n_sites} sites exceed the dispatcher limit")
    return [Label("handler")] + generate_dispatcher(n_sites)


def generate_dispatcher(n_sites: int) -> list:
    return [
        asm.ins("LDR_imm_T2", op="LDR", t=0, n=13, imm=FRAME_SLOT["ra"]),
        asm.adr(1, "table"),
        asm.movw(2, n_sites),
        Label("dispatch_loop"),
        asm.ins("LDR_imm_T4", op="LDR", t=3, n=1, imm=8, add=True, index=False, wback=True),
        asm.ins("CMP_reg_T1", n=3, m=0, setflags=True),
        asm.b("dispatch_found", cond=0, wide=False),
        asm.ins("SUB_imm_T2", d=2, n=2, imm=1, setflags=True, it_flags=True),
        asm.b("dispatch_loop", cond=1, wide=False),
        asm.ins("LDR_imm_T2", op="LDR", t=0, n=13, imm=FRAME_SLOT["xpsr"]),
        asm.ins("MSR_T1", n=0, mask=_APSR_NZCVQ, sysm=0),
        asm.ins("LDM_T2", op="LDM", n=13, wback=False, reglist=(0, 1, 2, 3)),
        asm.ldr_lit(PC, "orig_handler"),
        Label("dispatch_found"),
        asm.ins("LDR_imm_T4", op="LDR", t=PC, n=1, imm=4, add=False, index=True, wback=False),
    ]


def generate_ret() -> list:
    return [Label("ret"),
            asm.ins("ADD_SPimm_T2", d=13, n=13, imm=4),
            asm.pop([PC])]


class _Worker:
    """Tracks the stack depth so frame slots can be addressed from SP."""

    def __init__(self, hs: HookSite):
        self.hs = hs
        self.plan = hs.plan
        self.site = hs.address
        self.depth = 0
        self.out: list = []

    def slot(self, key) -> int:
        return WORKER_HEADER + self.depth + FRAME_SLOT[key]

    def load(self, r: int, key) -> None:
        self.out.append(asm.ldr(r, 13, self.slot(key)))

    def store(self, r: int, key) -> None:
        self.out.append(asm.str_(r, 13, self.slot(key)))

    def flags_in(self, tmp: int) -> None:
        self.load(tmp, "xpsr")
        self.out.append(asm.ins("MSR_T1", n=tmp, mask=_APSR_NZCVQ, sysm=0))

    def flags_out(self, avoid: int | None = None) -> None:
        a, b = [r for r in (0, 1, 2, 3) if r != avoid][:2]
        self.out.append(asm.ins("MRS_T1", d=a, sysm=0))
        self.load(b, "xpsr")
        self.out += [asm.dp_imm("BIC", b, b, _FLAG_MASK),
                     asm.dp_imm("AND", a, a, _FLAG_MASK),
                     asm.ins("ORR_reg_W_T2", d=b, n=b, m=a, shift_t=None, shift_n=0,
                             setflags=False)]
        self.store(b, "xpsr")

    def frame_load(self, regs) -> None:
        for r in regs:
            self.load(r, r)

    def frame_store(self, regs) -> None:
        for r in regs:
            self.store(r, r)

    def advance_ra(self, tmp: int, length: int) -> None:
        self.load(tmp, "ra")
        self.out += asm.add_imm(tmp, tmp, length)
        self.store(tmp, "ra")

    def payload_call(self) -> None:
        if not self.hs.payload:
            return
        frame = WORKER_HEADER + self.depth + PAYLOAD_SAVE
        self.out.append(asm.push(tuple(range(13)) + (LR,)))
        self.out.append(asm.ins("ADDW_T4", op="ADD", d=0, n=13, imm=frame))
        self.out.append(asm.bl(_lbl(self.site, "payload")))
        self.out.append(asm.pop(tuple(range(13)) + (LR,)))

    def finish(self) -> list:
        self.payload_call()
        self.out.append(asm.b("ret"))
        return [Align(2), Label(_lbl(self.site, "worker"))] + self.out

    # realizations

    def build(self) -> list:
        self.out.append(asm.push([0, LR]))
        i = self.plan.original
        if self.plan.deferred:
            # payload observes the pre-instruction state, then the stub replays
            self.payload_call()
            self.out.append(asm.adr(0, _lbl(self.site, "stub")))
            self.store(0, "ra")
            self.out.append(asm.b("ret"))
            return [Align(2), Label(_lbl(self.site, "worker"))] + self.out
        if i.op == "IT":
            self.load(0, "xpsr")
            it = i.imm & 0xFF
            bits = (it & 3) << 25 | (it >> 2) << 10
            self.out += asm.mov32(1, bits)
            self.out.append(asm.ins("ORR_reg_W_T2", d=0, n=0, m=1, shift_t=None, shift_n=0,
                                    setflags=False))
            self.store(0, "xpsr")
            self.advance_ra(0, i.length)
            return self.finish()
        if self.plan.proxy is None:
            return self._replay(i)
        return self._proxy()

    def _replay(self, i: Instruction) -> list:
        if self.plan.needs_flags_in:
            self.flags_in(0)
        self.frame_load(self.plan.frame_in)
        self.out.append(i)
        self.frame_store(self.plan.frame_out)
        if i.sets_flags:
            self.flags_out()
        self.advance_ra(0, i.length)
        return self.finish()

    def _proxy(self) -> list:
        plan, i = self.plan, self.plan.original
        rx = plan.proxy
        written_back = False

        def writeback():
            nonlocal written_back
            if written_back:
                return
            written_back = True
            self.frame_store(plan.frame_out)
            if i.sets_flags:
                self.flags_out(avoid=rx)

        for st in plan.steps:
            k = st.kind
            if k is StepKind.EMIT or k is StepKind.REPLAY:
                self.out.append(st.item)
                continue
            if k in (StepKind.FLAG_BRIDGE_BEGIN, StepKind.FLAG_BRIDGE_END):
                continue
            if k is StepKind.SAVE_RX:
                self.out.append(asm.push([st.reg]))
                self.depth += 4
                if plan.needs_flags_in:
                    self.flags_in(st.reg)
                self.frame_load(plan.frame_in)
            elif k is StepKind.CONTEXT_READ_PC:
                self.load(st.reg, "ra")
                self.out += asm.add_imm(st.reg, st.reg, 4)
            elif k is StepKind.FRAME_WRITE_LR:
                writeback()
                tmp = next(r for r in (0, 1, 2, 3) if r != rx)
                self.out += asm.mov32(tmp, st.value)
                self.store(tmp, LR)
            elif k is StepKind.CONTEXT_WRITE_RA:
                writeback()
                self._write_ra(st.mode, rx, i.length)
            elif k is StepKind.RESTORE_RX:
                writeback()
                self.out.append(asm.pop([st.reg]))
                self.depth -= 4
            else:  # pragma: no cover
                raise HookGenError(f"unhandled step {st}")
        writeback()
        return self.finish()

    def _write_ra(self, mode: str, rx: int, length: int) -> None:
        if mode == RA_NEXT:
            self.advance_ra(rx, length)
        elif mode == RA_BRANCH:
            self.out.append(asm.dp_imm("BIC", rx, rx, 1))
            self.store(rx, "ra")
        elif mode == RA_INTERWORK:
            tmp = next(r for r in (0, 1, 2, 3) if r != rx)
            ok = _lbl(self.site, "thumb")
            self.out.append(asm.dp_imm("TST", None, rx, 1))
            self.out.append(asm.b(ok, cond=1, wide=True))
            self.load(tmp, "xpsr")
            self.out.append(asm.dp_imm("BIC", tmp, tmp, _T_BIT))
            self.store(tmp, "xpsr")
            self.out.append(Label(ok))
            self.out.append(asm.dp_imm("BIC", rx, rx, 1))
            self.store(rx, "ra")
        elif mode == RA_RELATIVE:
            tmp = next(r for r in (0, 1, 2, 3) if r != rx)
            self.load(tmp, "ra")
            self.out.append(asm.ins("ADD_reg_W_T2", d=tmp, n=tmp, m=rx, shift_t="LSL",
                                    shift_n=1, setflags=False))
            self.out += asm.add_imm(tmp, tmp, 4)
            self.store(tmp, "ra")
        else:
            raise HookGenError(f"unknown RA mode {mode!r}")


def generate_worker(hs: HookSite) -> list:
    return _Worker(hs).build()


def generate_stub(hs: HookSite) -> list:
    """Thread-mode replay of an SP-using instruction, then back to the program."""
    i = hs.original
    out = [Align(2), Label(_lbl(hs.address, "stub")), Raw(_raw_bytes(i))]
    if PC not in i.writes:
        out.append(asm.b(_lbl(hs.address, "resume")))
    return out


def _raw_bytes(i: Instruction) -> bytes:
    return b"".join(h.to_bytes(2, "little") for h in i.raw)


def generate_payload(hs: HookSite) -> list:
    return [Align(4), Label(_lbl(hs.address, "payload")), Raw(bytes(hs.payload))]


# -- whole region --------------------------------------------------------------

def assemble_blob(sites, region_base: int, original_fault_handler: int,
                  payload_limit: int | None = None) -> HookBlob:
    """Lay out and assemble the hook region at ``region_base``.

    Sites are processed in address order, so the output depends only on
    the set of sites, not on the order they were supplied in.
    """
    sites = sorted(sites, key=lambda s: s.address)
    for a, b in zip(sites, sites[1:]):
        if a.address == b.address:
            raise HookGenError(f"duplicate site {a.address:#010x}")
    for hs in sites:
        if payload_limit is not None and len(hs.payload) > payload_limit:
            raise PayloadTooLarge(hs.address, len(hs.payload), payload_limit)
        if len(hs.payload) % 2:
            raise HookGenError(f"payload for {hs.address:#010x} has odd length")

    a = asm.Assembler(region_base)
    for hs in sites:
        a.define(_lbl(hs.address, "resume"), hs.address + hs.original.length)
    a += generate_handler(len(sites))
    a += generate_ret()
    a += [Align(4), Label("orig_handler"), Word(original_fault_handler)]
    a += [Label("table")]
    for hs in sites:
        a += [Word(hs.address), Word(label=_lbl(hs.address, "worker"), add=1)]
    a += [Label("workers")]
    for hs in sites:
        a += generate_worker(hs)
        a += [Label(_lbl(hs.address, "worker_end"))]
    for hs in sites:
        if hs.plan.deferred:
            a += generate_stub(hs)
            a += [Label(_lbl(hs.address, "stub_end"))]
    for hs in sites:
        if hs.payload:
            a += generate_payload(hs)
            a += [Label(_lbl(hs.address, "payload_end"))]
    a += [Align(4)]
    code, labels = a.assemble()

    sizes = {}
    for hs in sites:
        s = hs.address
        n = labels[_lbl(s, "worker_end")] - labels[_lbl(s, "worker")]
        if hs.plan.deferred:
            n += labels[_lbl(s, "stub_end")] - labels[_lbl(s, "stub")]
        if hs.payload:
            n += labels[_lbl(s, "payload_end")] - labels[_lbl(s, "payload")]
        sizes[s] = n
    table = tuple((hs.address, labels[_lbl(hs.address, "worker")]) for hs in sites)
    return HookBlob(code, region_base, table, labels["handler"] | 1,
                    original_fault_handler, labels, sizes)
