"""Deterministic ARMv7-M subset interpreter with exception entry and return.

Only the fault vector configured for the hook system is modelled; there are
no peripherals, interrupts or nesting. Memory faults, lockup and invalid
execution state end the run instead of being delivered to the guest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..decoder import AL, Instruction, Undecodable, decode
from ..image import HARDFAULT, FirmwareImage
from .errors import EmuFault, InvState, Lockup, MemFault, NoHandler, UnsupportedOpcode
from .kernels import Memory, add_with_carry, shift_c

M32 = 0xFFFFFFFF
EXC_RETURN_THREAD = 0xFFFFFFF9
EXC_RETURN_HANDLER = 0xFFFFFFF1
SENTINEL = "bkpt"


@dataclass(frozen=True)
class RamConfig:
    base: int = 0x2000_0000
    size: int = 0x0001_0000


@dataclass(frozen=True)
class Limits:
    retired: int = 1_000_000
    record: bool = False


def _sx(v: int, bits: int) -> int:
    return (v ^ (1 << (bits - 1))) - (1 << (bits - 1))


def cond_passed(cond: int, n: int, z: int, c: int, v: int) -> bool:
    base = cond >> 1
    if base == 0:
        r = z
    elif base == 1:
        r = c
    elif base == 2:
        r = n
    elif base == 3:
        r = v
    elif base == 4:
        r = c and not z
    elif base == 5:
        r = n == v
    elif base == 6:
        r = n == v and not z
    else:
        return True
    return bool(r) != bool(cond & 1)


def it_advance(it: int) -> int:
    if it & 7 == 0:
        return 0
    return (it & 0xE0) | (it << 1 & 0x1F)


class MachineState:
    """Architectural state; ``r[15]`` holds the current instruction address."""

    __slots__ = ("r", "n", "z", "c", "v", "q", "itstate", "ipsr", "t", "primask",
                 "retired", "low_water")

    def __init__(self):
        self.r = [0] * 16
        self.n = self.z = self.c = self.v = self.q = 0
        self.itstate = 0
        self.ipsr = 0
        self.t = 1
        self.primask = 0
        self.retired = 0
        self.low_water = None  # lowest SP seen in handler mode

    @property
    def handler_mode(self) -> bool:
        return self.ipsr != 0

    @property
    def apsr(self) -> int:
        return self.n << 31 | self.z << 30 | self.c << 29 | self.v << 28 | self.q << 27

    def set_apsr(self, value: int) -> None:
        self.n = value >> 31 & 1
        self.z = value >> 30 & 1
        self.c = value >> 29 & 1
        self.v = value >> 28 & 1
        self.q = value >> 27 & 1

    @property
    def xpsr(self) -> int:
        it = self.itstate
        return (self.apsr | (it & 3) << 25 | self.t << 24 | (it >> 2 & 0x3F) << 10
                | self.ipsr)

    def set_xpsr(self, value: int) -> None:
        self.set_apsr(value)
        self.itstate = (value >> 25 & 3) | (value >> 10 & 0x3F) << 2
        self.t = value >> 24 & 1
        self.ipsr = value & 0x1FF

    def registers(self) -> dict:
        out = {f"R{i}": self.r[i] for i in range(13)}
        out.update(SP=self.r[13], LR=self.r[14], PC=self.r[15])
        return out

    def copy(self) -> "MachineState":
        s = MachineState()
        for k in self.__slots__:
            setattr(s, k, getattr(self, k))
        s.r = list(self.r)
        return s


@dataclass
class Trace:
    samples: list = field(default_factory=list)  # (pc, retired)
    events: list = field(default_factory=list)   # (kind, retired, address)
    cause: str = ""
    detail: str = ""
    state: MachineState | None = None
    ram: bytes = b""
    ram_base: int = 0

    @property
    def retired(self) -> int:
        return self.state.retired if self.state else 0

    def dump(self) -> str:
        lines = [f"{pc:08x}:{n}" for pc, n in self.samples]
        lines.append(f"# cause={self.cause} retired={self.retired}")
        return "\n".join(lines)


class Machine:
    """Interpreter bound to one image, a RAM region and a fault vector."""

    def __init__(self, image: FirmwareImage, ram: RamConfig = RamConfig(),
                 vector: int = HARDFAULT, extra_regions=()):
        self.image = image
        self.ram = ram
        self.vector = vector
        self.vtor = image.evt_address
        self.mem = Memory()
        self.mem.add_region(image.base_address, image.data, False, "flash")
        self.mem.add_region(ram.base, bytes(ram.size), True, "ram")
        for base, data, writable, name in extra_regions:
            self.mem.add_region(base, data, writable, name)
        self.s = MachineState()
        self.events: list = []
        self.halted: str | None = None
        self._cache: dict = {}
        self._branched = False
        self._ops = self._dispatch_table()

    # -- setup ------------------------------------------------------------
    def reset(self, entry: int, sp: int | None = None) -> None:
        s = self.s
        if sp is None:
            sp = self.mem.read(self.vtor, 4)
        s.r[13] = sp & ~3
        s.r[15] = entry & ~1
        s.t = 1

    # -- fetch ------------------------------------------------------------
    def fetch(self, pc: int) -> Instruction:
        ins = self._cache.get(pc)
        if ins is not None:
            return ins
        mem = self.mem
        first = mem.read(pc, 2)
        hw = [first]
        if first >> 11 in (0b11101, 0b11110, 0b11111):
            hw.append(mem.read(pc + 2, 2))
        try:
            ins = decode(hw, pc)
        except Undecodable as exc:
            raise UnsupportedOpcode(str(exc), pc) from None
        if mem.is_readonly(pc):
            self._cache[pc] = ins
        return ins

    # -- register helpers ---------------------------------------------------
    def _rd(self, r: int) -> int:
        return self.s.r[r] if r != 15 else (self.s.r[15] + 4) & M32

    def _branch(self, addr: int) -> None:
        self.s.r[15] = addr & ~1 & M32
        self._branched = True

    def _bx(self, addr: int) -> None:
        if self.s.ipsr and addr >> 28 == 0xF:
            self.exception_return(addr)
            return
        self.s.t = addr & 1
        self._branch(addr)

    def _set_nz(self, result: int) -> None:
        self.s.n = result >> 31 & 1
        self.s.z = int(result & M32 == 0)

    # -- exceptions ---------------------------------------------------------
    def exception_entry(self, return_address: int) -> None:
        s = self.s
        if s.ipsr:
            raise Lockup(f"undefined instruction at {return_address:#010x} in handler mode",
                         return_address)
        vec = self.mem.read(self.vtor + 4 * self.vector, 4)
        if vec == 0:
            raise NoHandler(f"no handler installed for vector {self.vector}", return_address)
        sp = s.r[13]
        frame = (sp - 0x20) & ~7 & M32
        xpsr = s.xpsr | ((1 << 9) if sp & 4 else 0)
        words = (s.r[0], s.r[1], s.r[2], s.r[3], s.r[12], s.r[14], return_address, xpsr)
        for k, w in enumerate(words):
            self.mem.write(frame + 4 * k, 4, w)
        s.r[13] = frame
        if s.low_water is None or frame < s.low_water:
            s.low_water = frame
        s.r[14] = EXC_RETURN_THREAD
        s.ipsr = self.vector
        s.itstate = 0
        s.t = vec & 1
        self._branch(vec)
        self.events.append(("entry", s.retired, return_address))

    def exception_return(self, exc_return: int) -> None:
        s = self.s
        if exc_return & 0xF != 0x9:
            raise UnsupportedOpcode(f"exception return {exc_return:#010x} not modelled")
        frame = s.r[13]
        w = [self.mem.read(frame + 4 * k, 4) for k in range(8)]
        s.r[0], s.r[1], s.r[2], s.r[3], s.r[12], s.r[14] = w[:6]
        xpsr = w[7]
        s.set_xpsr(xpsr)
        if s.ipsr:
            raise EmuFault(f"returning to thread mode with IPSR={s.ipsr}", w[6])
        s.r[13] = (frame + 0x20 + (4 if xpsr >> 9 & 1 else 0)) & M32
        s.r[15] = w[6] & ~1
        self._branched = True
        self.events.append(("return", s.retired, w[6] & ~1))

    # -- execution ----------------------------------------------------------
    def step(self) -> None:
        s = self.s
        pc = s.r[15]
        if not s.t:
            raise InvState(f"execution with T=0 at {pc:#010x}", pc)
        ins = self.fetch(pc)
        it = s.itstate
        in_it = it & 0xF != 0
        cond = it >> 4 if in_it else ins.cond
        s.retired += 1
        self._branched = False
        if s.ipsr and (s.low_water is None or s.r[13] < s.low_water):
            s.low_water = s.r[13]
        if ins.op == "IT":
            s.itstate = ins.imm
            s.r[15] = pc + 2
            return
        if in_it:
            s.itstate = it_advance(it)
        if cond == AL or cond_passed(cond, s.n, s.z, s.c, s.v):
            self._ops[ins.op](ins, in_it)
        if not self._branched:
            s.r[15] = pc + (4 if ins.raw[0] >> 11 in (0b11101, 0b11110, 0b11111) else 2)

    def run(self, limits: Limits = Limits()) -> Trace:
        trace = Trace()
        s = self.s
        try:
            while s.retired < limits.retired:
                if limits.record:
                    trace.samples.append((s.r[15], s.retired))
                self.step()
                if self.halted:
                    break
            else:
                trace.cause = "limit"
        except EmuFault as exc:
            trace.cause = exc.cause
            trace.detail = str(exc)
        if self.halted:
            trace.cause = self.halted
        trace.events = list(self.events)
        trace.state = s.copy()
        ram = self.mem.region_named("ram")
        trace.ram = bytes(ram[2])
        trace.ram_base = ram[0]
        return trace

    # -- operation handlers ---------------------------------------------------
    def _dispatch_table(self) -> dict:
        t = {}
        for op in ("AND", "EOR", "ORR", "ORN", "BIC", "MOV", "MVN", "TST", "TEQ"):
            t[op] = self._logical
        for op in ("ADD", "ADC", "SUB", "SBC", "RSB", "CMP", "CMN"):
            t[op] = self._arith
        for op in ("LSL", "LSR", "ASR", "ROR"):
            t[op] = self._shift_reg
        for op in ("MUL", "MLA", "MLS", "SDIV", "UDIV", "SMULL", "UMULL"):
            t[op] = self._multiply
        for op in ("SXTB", "SXTH", "UXTB", "UXTH", "REV", "REV16", "REVSH", "RBIT", "CLZ"):
            t[op] = self._bits
        for op in ("NOP", "YIELD", "WFI", "WFE", "SEV", "DSB", "DMB", "ISB"):
            t[op] = self._nop
        t.update(MOVW=self._movw, MOVT=self._movt, ADR=self._adr, LDR=self._ldr, STR=self._str,
                 LDRD=self._ldrd, STRD=self._strd,
                 LDM=self._ldm, LDMDB=self._ldm, POP=self._ldm, STM=self._stm,
                 STMDB=self._stm, PUSH=self._stm, B=self._b, BL=self._b, CBZ=self._cbz,
                 CBNZ=self._cbz, BX=self._bxop, BLX=self._bxop, TBB=self._tb, TBH=self._tb,
                 MRS=self._mrs, MSR=self._msr, CPSIE=self._cps, CPSID=self._cps,
                 BKPT=self._bkpt, SVC=self._svc, UDF=self._udf)
        return t

    def _op2(self, i: Instruction):
        if i.imm is not None:
            return i.imm & M32, (self.s.c if i.imm_carry is None else i.imm_carry)
        return shift_c(self._rd(i.m), i.shift_t, i.shift_n, self.s.c)

    def _write_result(self, d: int, value: int) -> None:
        if d == 15:
            self._branch(value)
        else:
            self.s.r[d] = value & M32

    def _logical(self, i: Instruction, in_it: bool) -> None:
        s = self.s
        val, carry = self._op2(i)
        op = i.op
        if op == "MOV":
            res = val
        elif op == "MVN":
            res = ~val & M32
        else:
            a = self._rd(i.n)
            if op in ("AND", "TST"):
                res = a & val
            elif op in ("EOR", "TEQ"):
                res = a ^ val
            elif op == "ORR":
                res = a | val
            elif op == "ORN":
                res = a | (~val & M32)
            else:
                res = a & ~val & M32
        if op not in ("TST", "TEQ"):
            self._write_result(i.d, res)
        if i.setflags and not (i.it_flags and in_it):
            self._set_nz(res)
            s.c = carry

    def _arith(self, i: Instruction, in_it: bool) -> None:
        s = self.s
        val, _ = self._op2(i)
        a = self._rd(i.n)
        op = i.op
        if op in ("ADD", "CMN"):
            res, c, v = add_with_carry(a, val, 0)
        elif op == "ADC":
            res, c, v = add_with_carry(a, val, s.c)
        elif op in ("SUB", "CMP"):
            res, c, v = add_with_carry(a, ~val & M32, 1)
        elif op == "SBC":
            res, c, v = add_with_carry(a, ~val & M32, s.c)
        else:
            res, c, v = add_with_carry(~a & M32, val, 1)
        if op not in ("CMP", "CMN"):
            self._write_result(i.d, res)
        if i.setflags and not (i.it_flags and in_it):
            self._set_nz(res)
            s.c, s.v = c, v

    def _shift_reg(self, i: Instruction, in_it: bool) -> None:
        s = self.s
        res, carry = shift_c(s.r[i.n], i.op, s.r[i.m] & 0xFF, s.c)
        s.r[i.d] = res
        if i.setflags and not (i.it_flags and in_it):
            self._set_nz(res)
            s.c = carry

    def _multiply(self, i: Instruction, in_it: bool) -> None:
        r = self.s.r
        a, b = r[i.n], r[i.m]
        op = i.op
        if op in ("SMULL", "UMULL"):
            if op == "SMULL":
                a, b = _sx(a, 32), _sx(b, 32)
            p = (a * b) & 0xFFFFFFFFFFFFFFFF
            r[i.t], r[i.t2] = p & M32, p >> 32
            return
        if op == "MUL":
            res = (a * b) & M32
            if i.setflags and not (i.it_flags and in_it):
                self._set_nz(res)
        elif op == "MLA":
            res = (r[i.a] + a * b) & M32
        elif op == "MLS":
            res = (r[i.a] - a * b) & M32
        elif op == "UDIV":
            res = a // b if b else 0
        else:
            sa, sb = _sx(a, 32), _sx(b, 32)
            if sb == 0:
                res = 0
            else:
                q = abs(sa) // abs(sb)
                res = (q if (sa < 0) == (sb < 0) else -q) & M32
        r[i.d] = res

    def _bits(self, i: Instruction, in_it: bool) -> None:
        r = self.s.r
        v = r[i.m]
        op = i.op
        if op in ("SXTB", "SXTH", "UXTB", "UXTH"):
            rot = i.rotation
            if rot:
                v = (v >> rot | v << (32 - rot)) & M32
            width = 8 if op.endswith("B") else 16
            v &= (1 << width) - 1
            if op[0] == "S":
                v = _sx(v, width) & M32
        elif op == "REV":
            v = int.from_bytes(v.to_bytes(4, "little"), "big")
        elif op == "REV16":
            v = (v >> 8 & 0x00FF00FF) | (v << 8 & 0xFF00FF00)
        elif op == "REVSH":
            v = _sx((v & 0xFF) << 8 | (v >> 8 & 0xFF), 16) & M32
        elif op == "RBIT":
            v = int(f"{v:032b}"[::-1], 2)
        else:
            v = 32 - v.bit_length()
        r[i.d] = v

    def _nop(self, i: Instruction, in_it: bool) -> None:
        pass

    def _movw(self, i: Instruction, in_it: bool) -> None:
        self.s.r[i.d] = i.imm

    def _movt(self, i: Instruction, in_it: bool) -> None:
        r = self.s.r
        r[i.d] = i.imm << 16 | r[i.d] & 0xFFFF

    def _adr(self, i: Instruction, in_it: bool) -> None:
        base = (self.s.r[15] + 4) & ~3
        self.s.r[i.d] = (base + i.imm if i.add else base - i.imm) & M32

    def _address(self, i: Instruction) -> int:
        if i.n == 15:
            base = (self.s.r[15] + 4) & ~3
            return (base + i.imm if i.add else base - i.imm) & M32
        base = self.s.r[i.n]
        if i.m is not None:
            return (base + (self.s.r[i.m] << i.shift_n)) & M32
        offset_addr = (base + i.imm if i.add else base - i.imm) & M32
        addr = offset_addr if i.index else base
        if i.wback:
            self._pending_wb = offset_addr
        return addr

    def _ldr(self, i: Instruction, in_it: bool) -> None:
        self._pending_wb = None
        addr = self._address(i)
        v = self.mem.read(addr, i.size)
        if i.signed:
            v = _sx(v, 8 * i.size) & M32
        if self._pending_wb is not None:
            self.s.r[i.n] = self._pending_wb
        if i.t == 15:
            self._bx(v)
        else:
            self.s.r[i.t] = v

    def _str(self, i: Instruction, in_it: bool) -> None:
        self._pending_wb = None
        addr = self._address(i)
        self.mem.write(addr, i.size, self._rd(i.t))
        if self._pending_wb is not None:
            self.s.r[i.n] = self._pending_wb

    def _dual_address(self, i: Instruction) -> int:
        self._pending_wb = None
        addr = self._address(i)
        if addr & 3:
            raise MemFault(f"unaligned doubleword transfer at {addr:#010x}", addr)
        return addr

    def _ldrd(self, i: Instruction, in_it: bool) -> None:
        addr = self._dual_address(i)
        lo, hi = self.mem.read(addr, 4), self.mem.read(addr + 4, 4)
        if self._pending_wb is not None:
            self.s.r[i.n] = self._pending_wb
        self.s.r[i.t], self.s.r[i.t2] = lo, hi

    def _strd(self, i: Instruction, in_it: bool) -> None:
        addr = self._dual_address(i)
        self.mem.write(addr, 4, self._rd(i.t))
        self.mem.write(addr + 4, 4, self._rd(i.t2))
        if self._pending_wb is not None:
            self.s.r[i.n] = self._pending_wb

    def _block(self, i: Instruction):
        r = self.s.r
        count = len(i.reglist)
        descending = i.op in ("LDMDB", "STMDB", "PUSH")
        start = (r[i.n] - 4 * count) & M32 if descending else r[i.n]
        if start & 3:
            raise MemFault(f"unaligned multiple transfer at {start:#010x}", start)
        end = start if descending else (start + 4 * count) & M32
        return start, end

    def _ldm(self, i: Instruction, in_it: bool) -> None:
        r = self.s.r
        start, wb = self._block(i)
        vals = [self.mem.read(start + 4 * k, 4) for k in range(len(i.reglist))]
        pc_val = None
        for reg, v in zip(i.reglist, vals):
            if reg == 15:
                pc_val = v
            else:
                r[reg] = v
        if i.wback:
            r[i.n] = wb
        if pc_val is not None:
            self._bx(pc_val)

    def _stm(self, i: Instruction, in_it: bool) -> None:
        r = self.s.r
        start, wb = self._block(i)
        for k, reg in enumerate(i.reglist):
            self.mem.write(start + 4 * k, 4, r[reg])
        if i.wback:
            r[i.n] = wb

    def _b(self, i: Instruction, in_it: bool) -> None:
        pc = self.s.r[15]
        if i.op == "BL":
            self.s.r[14] = (pc + 4) | 1
        self._branch((pc + 4 + i.imm) & M32)

    def _cbz(self, i: Instruction, in_it: bool) -> None:
        if (self.s.r[i.n] == 0) == (i.op == "CBZ"):
            self._branch(self.s.r[15] + 4 + i.imm)

    def _bxop(self, i: Instruction, in_it: bool) -> None:
        s = self.s
        target = self._rd(i.m)
        if i.op == "BLX":
            s.r[14] = (s.r[15] + 2) | 1
            s.t = target & 1
            self._branch(target)
        else:
            self._bx(target)

    def _tb(self, i: Instruction, in_it: bool) -> None:
        base = self._rd(i.n)
        if i.op == "TBB":
            half = self.mem.read((base + self.s.r[i.m]) & M32, 1)
        else:
            half = self.mem.read((base + 2 * self.s.r[i.m]) & M32, 2)
        self._branch(self.s.r[15] + 4 + 2 * half)

    def _mrs(self, i: Instruction, in_it: bool) -> None:
        s = self.s
        sysm = i.sysm
        if sysm < 8:
            v = 0
            if not sysm & 4:
                v |= s.apsr
            if sysm & 1:
                v |= s.ipsr
        elif sysm in (8, 9):
            v = s.r[13]
        elif sysm == 16:
            v = s.primask
        else:
            v = 0
        s.r[i.d] = v

    def _msr(self, i: Instruction, in_it: bool) -> None:
        s = self.s
        v = s.r[i.n]
        if i.sysm < 8 and not i.sysm & 4 and i.mask & 2:
            s.set_apsr(v & 0xF8000000)
        elif i.sysm in (8, 9):
            s.r[13] = v & ~3
        elif i.sysm == 16:
            s.primask = v & 1

    def _cps(self, i: Instruction, in_it: bool) -> None:
        if i.imm & 2:
            self.s.primask = int(i.op == "CPSID")

    def _bkpt(self, i: Instruction, in_it: bool) -> None:
        self.halted = SENTINEL
        self._branched = True  # PC stays on the breakpoint
        self.s.retired -= 1    # the sentinel itself does not retire

    def _svc(self, i: Instruction, in_it: bool) -> None:
        raise UnsupportedOpcode(f"SVC at {self.s.r[15]:#010x} is outside the emulated subset",
                                self.s.r[15])

    def _udf(self, i: Instruction, in_it: bool) -> None:
        self.exception_entry(self.s.r[15])


def run(image: FirmwareImage, entry: int, ram: RamConfig = RamConfig(),
        limits: Limits = Limits(), vector: int = HARDFAULT, sp: int | None = None,
        setup=None) -> Trace:
    """Run ``image`` from ``entry`` until the sentinel, a fault or the limit."""
    m = Machine(image, ram, vector)
    m.reset(entry, sp)
    if setup is not None:
        setup(m)
    return m.run(limits)


def step(machine: Machine) -> MachineState:
    machine.step()
    return machine.s
