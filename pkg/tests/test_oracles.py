"""Cross-checks against third-party disassembler and emulator when installed."""

import random

import pytest

from bmr.decoder import Undecodable, decode, instr_length
from bmr.emu.errors import EmuFault
from bmr.emu.machine import Machine, RamConfig
from bmr.image import load_image

SKIP_OPS = {"SVC", "BKPT", "UDF", "IT", "CPSIE", "CPSID", "MSR", "MRS", "WFI", "WFE", "SEV",
            "YIELD", "LDM", "LDMDB", "STM", "STMDB", "PUSH", "POP", "LDRD", "STRD"}


def _random_instr(rng):
    while True:
        if rng.random() < 0.5:
            hw = [rng.randrange(0xE800)]
            if instr_length(hw[0]) == 4:
                continue
        else:
            hw = [rng.randrange(0xE800, 0x10000), rng.randrange(0x10000)]
        try:
            return hw, decode(hw, 0x1000)
        except Undecodable:
            continue


def test_capstone_agrees_on_length_and_branching():
    capstone = pytest.importorskip("capstone")
    md = capstone.Cs(capstone.CS_ARCH_ARM, capstone.CS_MODE_THUMB | capstone.CS_MODE_MCLASS)
    rng = random.Random(99)
    checked = 0
    for _ in range(4000):
        hw, i = _random_instr(rng)
        code = b"".join(h.to_bytes(2, "little") for h in hw)
        got = list(md.disasm(code, 0x1000))
        if not got:
            continue
        cs = got[0]
        assert cs.size == i.length, (str(i), cs.mnemonic, cs.op_str)
        if i.op in ("B", "BL", "CBZ", "CBNZ"):
            assert cs.op_str.endswith(hex(i.branch_target)), (str(i), cs.op_str)
        checked += 1
    assert checked > 3000


REGS = None


def _uc():
    unicorn = pytest.importorskip("unicorn")
    from unicorn import arm_const as A
    regs = [getattr(A, f"UC_ARM_REG_R{i}") for i in range(13)] + [A.UC_ARM_REG_SP,
                                                                    A.UC_ARM_REG_LR]
    return unicorn, A, regs


def test_unicorn_single_step_differential():
    U, A, regs_ids = _uc()
    RAM = 0x2000_0000
    rng = random.Random(5)
    compared = 0
    for _ in range(1500):
        hw, i = _random_instr(rng)
        if i.op in SKIP_OPS:
            continue
        code = b"".join(h.to_bytes(2, "little") for h in hw)
        flash = bytearray(0x4000)
        flash[0x1000:0x1000 + len(code)] = code
        flash[0x1100:0x1400] = rng.randbytes(0x300)
        ram = rng.randbytes(0x10000)
        regs = [rng.choice([RAM + 0x4000 + 4 * rng.randrange(0x100), rng.randrange(64),
                            rng.getrandbits(32)]) for _ in range(15)]
        regs[13] = RAM + 0x8000 - 4 * rng.randrange(16)
        flags = rng.getrandbits(4) << 28

        m = Machine(load_image(bytes(flash), 0, 0), RamConfig(RAM, 0x10000))
        m.mem.region_named("ram")[2][:] = ram
        m.reset(0x1000, regs[13])
        m.s.r[:15] = regs
        m.s.set_apsr(flags)
        try:
            m.step()
        except EmuFault:
            continue
        mu = U.Uc(U.UC_ARCH_ARM, U.UC_MODE_THUMB | U.UC_MODE_MCLASS)
        mu.mem_map(0, 0x4000)
        mu.mem_map(RAM, 0x10000)
        mu.mem_write(0, bytes(flash))
        mu.mem_write(RAM, ram)
        for r, v in zip(regs_ids, regs):
            mu.reg_write(r, v)
        mu.reg_write(A.UC_ARM_REG_XPSR, flags | 1 << 24)
        try:
            mu.emu_start(0x1001, 0xFFFFFFF0, count=1)
        except U.UcError:
            continue
        ours = m.s.r[:15] + [m.s.r[15]]
        theirs = [mu.reg_read(r) for r in regs_ids] + [mu.reg_read(A.UC_ARM_REG_PC)]
        assert ours == theirs, str(i)
        assert m.s.apsr >> 28 == mu.reg_read(A.UC_ARM_REG_XPSR) >> 28, str(i)
        assert bytes(m.mem.region_named("ram")[2]) == bytes(mu.mem_read(RAM, 0x10000)), str(i)
        compared += 1
    assert compared > 700
