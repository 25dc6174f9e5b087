"""Turn a displaced instruction into a relocation-safe emission plan.

PC-independent instructions are replayed as-is. Instructions that read or
write the PC go through a proxy register: the proxy is saved, loaded with
the architectural PC value of the original site, substituted for every PC
operand, and finally used to update the return address in the exception
frame before being restored.

Instructions that touch SP cannot run against the application stack from
handler mode (the exception frame sits exactly where they would push or
pop), so they are marked ``deferred``: the hook system resumes the
application at a per-site stub that executes the original instruction in
thread mode and then jumps back.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import asm
from .decoder import (AL, InstrClass, Instruction, RegisterSet, classify, registers_used)
from .decoder.registers import LR, PC, PROXY_POOL, SP

#: registers held in the hardware-stacked exception frame
FRAME_REGS = RegisterSet.of(0, 1, 2, 3, 12, LR)


class TranslationError(Exception):
    reason = "Untranslatable"

    def __init__(self, site: int, detail: str = ""):
        self.site = site
        self.detail = detail
        super().__init__(f"{self.reason} at {site:#010x}" + (f": {detail}" if detail else ""))


class Unsupported(TranslationError):
    reason = "Unsupported"


class UndecodableSite(TranslationError):
    reason = "Undecodable"


class NoFreeRegister(TranslationError):
    reason = "NoFreeRegister"


class Untranslatable(TranslationError):
    reason = "Untranslatable"


class StepKind(enum.Enum):
    REPLAY = "Replay"
    SAVE_RX = "SaveRx"
    RESTORE_RX = "RestoreRx"
    CONTEXT_READ_PC = "ContextReadPC"
    CONTEXT_WRITE_RA = "ContextWriteRA"
    EMIT = "Emit"
    FRAME_WRITE_LR = "FrameWriteLR"
    FLAG_BRIDGE_BEGIN = "FlagBridgeBegin"
    FLAG_BRIDGE_END = "FlagBridgeEnd"


#: ContextWriteRA modes
RA_NEXT = "next"            # site + length
RA_BRANCH = "branch"        # proxy holds the target; bit 0 ignored
RA_INTERWORK = "interwork"  # proxy holds the target; bit 0 must be set
RA_RELATIVE = "relative"    # site + 4 + 2 * proxy (table branches)


@dataclass(frozen=True)
class EmissionStep:
    kind: StepKind
    item: object = None          # Replay/Emit payload: Instruction, asm.Ref or asm.Label
    reg: int | None = None
    mode: str | None = None
    value: int | None = None

    def __str__(self) -> str:
        k = self.kind.value
        if self.kind in (StepKind.REPLAY, StepKind.EMIT):
            it = self.item
            if isinstance(it, asm.Label):
                return f"{k}({it.name}:)"
            if isinstance(it, asm.Ref):
                return f"{k}({it.enc.split('_')[0]} -> {it.label})"
            return f"{k}({it})"
        if self.kind == StepKind.CONTEXT_WRITE_RA:
            return f"{k}({self.mode})"
        if self.kind == StepKind.FRAME_WRITE_LR:
            return f"{k}({self.value:#x})"
        if self.reg is not None:
            return f"{k}(R{self.reg})"
        return k


@dataclass(frozen=True)
class TranslationPlan:
    site: int
    original: Instruction
    proxy: int | None
    steps: tuple
    writes_frame_lr: bool = False
    needs_flag_bridge: bool = False
    needs_flags_in: bool = False
    deferred: bool = False
    static_target: int | None = None
    frame_in: RegisterSet = field(default_factory=RegisterSet)
    frame_out: RegisterSet = field(default_factory=RegisterSet)

    @property
    def klass(self) -> InstrClass:
        return classify(self.original)

    @property
    def size(self) -> int:
        return len(self.steps)

    def describe(self) -> str:
        return "; ".join(str(s) for s in self.steps)


def select_proxy_register(used: RegisterSet) -> int:
    for r in PROXY_POOL:
        if r not in used:
            return r
    raise NoFreeRegister(0, "all of R0-R12 are used by the instruction")


def invert_cond(cond: int) -> int:
    return cond ^ 1


def _emit(item) -> EmissionStep:
    return EmissionStep(StepKind.EMIT, item)


def translate(original: Instruction) -> TranslationPlan:
    """Build the emission plan for ``original`` located at ``original.address``."""
    site = original.address
    klass = classify(original)
    if klass is InstrClass.UNSUPPORTED:
        raise Unsupported(site, f"{original.op} cannot be re-executed by the hook system")
    if klass is InstrClass.UNDECODABLE:
        raise UndecodableSite(site, str(original))
    used = original.reads | original.writes
    if SP in used:
        if PC in original.reads:
            raise Untranslatable(site, "instruction reads both SP and PC")
        return TranslationPlan(site, original, None,
                               (EmissionStep(StepKind.REPLAY, original),), deferred=True)
    if klass is InstrClass.C1:
        return TranslationPlan(
            site, original, None, (EmissionStep(StepKind.REPLAY, original),),
            needs_flags_in=original.reads_flags or original.sets_flags,
            frame_in=original.reads & FRAME_REGS, frame_out=original.writes & FRAME_REGS)
    try:
        rx = select_proxy_register(registers_used(original))
    except NoFreeRegister:
        raise NoFreeRegister(site, "all of R0-R12 are used by the instruction") from None
    return _translate_c2(original, rx)


def _pc_value(i: Instruction) -> int:
    return (i.address + 4) & 0xFFFFFFFF


def _literal_delta(i: Instruction) -> int:
    """Offset of the PC-relative target from the proxy value (site+4)."""
    base = _pc_value(i) & ~3
    target = base + i.imm if i.add else base - i.imm
    return target - _pc_value(i)


def _set_proxy(rx: int, value: int, pc_value: int) -> list:
    delta = value - pc_value
    if abs(delta) <= 2 * 4095:
        return asm.add_imm(rx, rx, delta)
    return asm.mov32(rx, value)


def load_imm(t: int, n: int, off: int, size: int = 4, signed: bool = False) -> Instruction:
    """Wide immediate-offset load with a signed byte offset in [-255, 4095]."""
    stem = {(4, False): "LDR", (1, False): "LDRB", (2, False): "LDRH",
            (1, True): "LDRSB", (2, True): "LDRSH"}[(size, signed)]
    if off >= 0:
        tag = {"LDR": "T3", "LDRB": "T2", "LDRH": "T2", "LDRSB": "T1", "LDRSH": "T1"}[stem]
        return asm.ins(f"{stem}_imm_{tag}", op="LDR", t=t, n=n, imm=off, size=size,
                       signed=signed)
    tag = {"LDR": "T4", "LDRB": "T3", "LDRH": "T3", "LDRSB": "T2", "LDRSH": "T2"}[stem]
    return asm.ins(f"{stem}_imm_{tag}", op="LDR", t=t, n=n, imm=-off, add=False, size=size,
                   signed=signed)


def _translate_c2(i: Instruction, rx: int) -> TranslationPlan:
    site = i.address
    op = i.op
    body: list = []
    mode = RA_NEXT
    lr_value = None
    bridge = False
    flags_in = i.reads_flags or i.sets_flags
    static_target = None
    pcv = _pc_value(i)
    reads = i.reads - RegisterSet.of(PC)
    writes = i.writes - RegisterSet.of(PC)

    def lbl(name: str) -> str:
        return f"s{site:08x}_{name}"

    if op == "ADR":
        body.append(asm.mov(i.d, rx))
        body += asm.add_imm(i.d, i.d, _literal_delta(i))
    elif op == "LDR" and i.n == PC:
        delta = _literal_delta(i)
        dest = rx if i.t == PC else i.t
        if not -255 <= delta <= 4095:
            body += asm.add_imm(rx, rx, delta)
            delta = 0
        body.append(load_imm(dest, rx, delta, i.size, i.signed))
        if i.t == PC:
            mode = RA_INTERWORK
    elif op == "LDRD" and i.n == PC:
        body += asm.add_imm(rx, rx, _literal_delta(i))
        body.append(asm.ins("LDRD_T1", t=i.t, t2=i.t2, n=rx, imm=0, index=True, add=True,
                            wback=False))
    elif op in ("B", "BL"):
        target = i.branch_target | 1
        static_target = target
        if i.cond != AL:
            flags_in = True
            body.append(asm.b(lbl("fall"), invert_cond(i.cond)))
            body += _set_proxy(rx, target, pcv)
            body.append(asm.b(lbl("done")))
            body.append(asm.Label(lbl("fall")))
            body += _set_proxy(rx, i.next_address | 1, pcv)
            body.append(asm.Label(lbl("done")))
        else:
            body += _set_proxy(rx, target, pcv)
        mode = RA_BRANCH
        if op == "BL":
            lr_value = i.next_address | 1
    elif op in ("CBZ", "CBNZ"):
        bridge = True
        body.append(asm.dp_imm("CMP", None, i.n, 0))
        body.append(asm.b(lbl("fall"), 1 if op == "CBZ" else 0))
        body += _set_proxy(rx, i.branch_target | 1, pcv)
        body.append(asm.b(lbl("done")))
        body.append(asm.Label(lbl("fall")))
        body += _set_proxy(rx, i.next_address | 1, pcv)
        body.append(asm.Label(lbl("done")))
        static_target = i.branch_target | 1
        mode = RA_BRANCH
    elif op in ("BX", "BLX"):
        if i.m != PC:
            body.append(asm.mov(rx, i.m))
        mode = RA_INTERWORK
        if op == "BLX":
            lr_value = i.next_address | 1
    elif op in ("TBB", "TBH"):
        base = rx if i.n == PC else i.n
        if op == "TBB":
            body.append(asm.ins("LDRB_reg_T2", op="LDR", t=rx, n=base, m=i.m, size=1))
        else:
            body.append(asm.ins("LDRH_reg_T2", op="LDR", t=rx, n=base, m=i.m, size=2,
                                shift_t="LSL", shift_n=1))
        mode = RA_RELATIVE
    elif i.enc in ("MOV_reg_T1", "ADD_reg_T2"):
        sub = {k: rx for k in ("d", "n", "m") if getattr(i, k) == PC}
        body.append(asm.ins(i.enc, op=op, d=sub.get("d", i.d), n=sub.get("n", i.n),
                            m=sub.get("m", i.m)))
        if i.d == PC:
            mode = RA_BRANCH
    elif op == "LDR" and i.t == PC:
        if i.size != 4:
            raise Untranslatable(site, "narrow load into PC")
        body.append(asm.ins(i.enc, op="LDR", t=rx, n=i.n, m=i.m, imm=i.imm, add=i.add,
                            index=i.index, wback=i.wback, shift_t=i.shift_t,
                            shift_n=i.shift_n))
        mode = RA_INTERWORK
    elif op in ("LDM", "LDMDB") and PC in i.reglist:
        body += _split_ldm(i, rx)
        mode = RA_INTERWORK
    else:
        raise Untranslatable(site, f"no proxy rule for {i}")

    steps = [EmissionStep(StepKind.SAVE_RX, reg=rx),
             EmissionStep(StepKind.CONTEXT_READ_PC, reg=rx)]
    if bridge:
        steps.append(EmissionStep(StepKind.FLAG_BRIDGE_BEGIN))
    steps += [_emit(x) for x in body]
    if bridge:
        steps.append(EmissionStep(StepKind.FLAG_BRIDGE_END))
    if lr_value is not None:
        steps.append(EmissionStep(StepKind.FRAME_WRITE_LR, value=lr_value))
    steps.append(EmissionStep(StepKind.CONTEXT_WRITE_RA, reg=rx, mode=mode))
    steps.append(EmissionStep(StepKind.RESTORE_RX, reg=rx))
    return TranslationPlan(site, i, rx, tuple(steps), writes_frame_lr=lr_value is not None,
                           needs_flag_bridge=bridge, needs_flags_in=flags_in,
                           static_target=static_target,
                           frame_in=reads & FRAME_REGS, frame_out=writes & FRAME_REGS)


def _split_ldm(i: Instruction, rx: int) -> list:
    regs = [r for r in i.reglist if r != PC]
    count = len(i.reglist)
    start = -4 * count if i.op == "LDMDB" else 0
    offsets = {r: start + 4 * k for k, r in enumerate(i.reglist)}
    out = [load_imm(rx, i.n, offsets[PC])]
    # the base register, if loaded, must be overwritten last
    order = [r for r in regs if r != i.n] + [r for r in regs if r == i.n]
    out += [load_imm(r, i.n, offsets[r]) for r in order]
    if i.wback:
        out += asm.add_imm(i.n, i.n, 4 * count if i.op == "LDM" else -4 * count)
    return out


# -- oracle -------------------------------------------------------------------

WINDOW = 0x1000


def _pattern(lo: int, n: int) -> bytearray:
    return bytearray((((lo + k) * 0x9E3779B1) >> 13) & 0xFF for k in range(n))


def plan_semantics_check(plan: TranslationPlan, original: Instruction, pre_state,
                         ram=None, vector: int | None = None, pokes: dict | None = None):
    """Run ``original`` in place and ``plan`` through a real hook; compare.

    Returns a :class:`~bmr.emu.diff.DivergenceReport`, which is truthy when
    the two post-states agree on R0-R14, next PC, flags, IT state, T bit and
    RAM outside the dead hook stack. Memory around the site is filled with a
    fixed pseudo-random pattern so literal and table reads see real data;
    ``pokes`` maps addresses (flash window or RAM) to bytes laid over it.
    The report's ``post`` holds the (in-place, hooked) final states.
    """
    from . import hookgen
    from .emu.diff import DivergenceReport
    from .emu.errors import EmuFault
    from .emu.machine import Machine, RamConfig
    from .image import HARDFAULT, FirmwareImage, write_evt_entry

    ram = ram or RamConfig()
    vector = HARDFAULT if vector is None else vector
    site = original.address
    lo = max(0, (site - WINDOW) & ~3)
    hi = (site + WINDOW + 4) & ~3
    flash = _pattern(lo, hi - lo)
    raw = b"".join(h.to_bytes(2, "little") for h in original.raw)
    flash[site - lo:site - lo + len(raw)] = raw
    ram_pokes = []
    for addr, data in (pokes or {}).items():
        if lo <= addr and addr + len(data) <= hi:
            flash[addr - lo:addr - lo + len(data)] = data
        else:
            ram_pokes.append((addr - ram.base, data))
    flash += bytes(-len(flash) % 4)
    region = lo + len(flash)
    blob = hookgen.assemble_blob([hookgen.HookSite(site, plan)], region, 0)
    evt_off = len(flash) + len(blob.code)
    tail = bytes(blob.code) + bytes(4 * 16)

    plain = FirmwareImage(lo, bytes(flash) + tail, evt_off)
    patched = bytearray(flash)
    patched[site - lo:site - lo + 2] = hookgen.TRAP_BYTES
    hooked = write_evt_entry(FirmwareImage(lo, bytes(patched) + tail, evt_off),
                             vector, blob.handler_entry)

    def start(image):
        m = Machine(image, ram, vector)
        fill = _pattern(ram.base, ram.size)
        region_ = m.mem.region_named("ram")
        region_[2][:] = fill
        for off, data in ram_pokes:
            region_[2][off:off + len(data)] = data
        m.s = pre_state.copy()
        m.s.r[15] = site
        m.s.ipsr = 0
        m.s.low_water = None
        return m

    def finish(m, fn):
        try:
            fn(m)
            return ""
        except EmuFault as exc:
            return exc.cause

    a = start(plain)
    ca = finish(a, lambda m: m.step())

    b = start(hooked)
    blob_lo, blob_hi = region, region + len(blob.code)

    def run_hook(m):
        m.step()
        for _ in range(10_000):
            if not m.s.ipsr and not blob_lo <= m.s.r[15] < blob_hi:
                return
            m.step()
        raise EmuFault("hook did not return", site)

    cb = finish(b, run_hook)

    rep = DivergenceReport(post=(a.s, b.s))
    if ca or cb:
        if ca != cb:
            rep.items.append(("cause", int(bool(ca)), int(bool(cb))))
        return rep
    sa, sb = a.s, b.s
    for k in range(16):
        if sa.r[k] != sb.r[k]:
            rep.items.append(({13: "SP", 14: "LR", 15: "PC"}.get(k, f"R{k}"), sa.r[k], sb.r[k]))
    for name in ("n", "z", "c", "v", "q", "itstate", "t"):
        if getattr(sa, name) != getattr(sb, name):
            rep.items.append((name.upper(), getattr(sa, name), getattr(sb, name)))
    ra, rb = a.mem.region_named("ram"), b.mem.region_named("ram")
    low = sb.low_water if sb.low_water is not None else sb.r[13]
    dead_lo, dead_hi = low - ram.base, sb.r[13] - ram.base
    for k, (x, y) in enumerate(zip(ra[2], rb[2])):
        if x != y and not dead_lo <= k < dead_hi:
            rep.items.append((f"RAM[{ram.base + k:#010x}]", x, y))
            break
    return rep
