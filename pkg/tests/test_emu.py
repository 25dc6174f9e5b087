import pytest
from hypothesis import given, strategies as st

from bmr import hookgen, patcher
from bmr.emu.diff import Incomparable, SiteNotHit, diff, measure_trap_cost, trap_costs
from bmr.emu.machine import EXC_RETURN_THREAD, Limits, Machine, MachineState, run

from helpers import CODE, STACK_TOP, build_image, handler_address, load_corpus

NOP = bytes.fromhex("00bf")
BKPT = bytes.fromhex("00be")
LOOP = bytes.fromhex("03200138fdd100be")
# ldr r0,[pc,#4]; str r1,[r0]; bkpt #0; nop; .word 0x08000000
FLASH_STORE = bytes.fromhex("0148016000be00bf00000008")


def test_movs_step():
    m = Machine(build_image(bytes.fromhex("0120") + BKPT))
    m.reset(CODE)
    m.s.z = 1
    m.step()
    assert (m.s.r[0], m.s.z, m.s.n, m.s.retired) == (1, 0, 0, 1)
    assert m.s.r[15] == CODE + 2


def test_trap_enters_handler_with_frame_ra_at_site():
    image = build_image(NOP + hookgen.TRAP_BYTES + BKPT)
    t = run(image, CODE)
    assert t.cause == "bkpt"
    assert t.state.ipsr == 3 and t.state.r[15] == handler_address(image)
    frame = t.state.r[13] - t.ram_base
    assert int.from_bytes(t.ram[frame + 24:frame + 28], "little") == CODE + 2
    assert t.events == [("entry", 2, CODE + 2)]  # the trap itself retires


@pytest.mark.parametrize("k", [0, 1, 7, 40])
def test_straight_line_retires_k(k):
    assert run(build_image(NOP * k + BKPT), CODE).retired == k


def test_run_is_deterministic():
    image = build_image(LOOP)
    patched, _ = patcher.instrument(image, [(CODE + 2, b"")])
    a = run(patched, CODE, limits=Limits(record=True))
    b = run(patched, CODE, limits=Limits(record=True))
    assert a.dump() == b.dump() and a.ram == b.ram and a.events == b.events
    assert a.state.r == b.state.r and a.state.xpsr == b.state.xpsr


def test_store_to_flash_faults_in_guest():
    t = run(build_image(FLASH_STORE), CODE)
    assert t.cause == "memfault" and "read-only" in t.detail


def test_hook_overhead_equals_trap_costs():
    image = build_image(LOOP)
    patched, _ = patcher.instrument(image, [(CODE + 2, b"")])
    ta, tb = run(image, CODE), run(patched, CODE)
    costs = trap_costs(tb)
    # the trapping halfword stands in for the original, which the worker retires
    assert tb.retired - ta.retired == sum(c - 1 for _, c in costs)
    assert len(costs) == 3
    assert measure_trap_cost(patched, CODE + 2, CODE) == costs[0][1]


def test_site_not_hit():
    image = build_image(LOOP + NOP)
    patched, _ = patcher.instrument(image, [(CODE + 8, b"")])
    with pytest.raises(SiteNotHit):
        measure_trap_cost(patched, CODE + 8, CODE)


def test_payload_cost_is_additive():
    image = build_image(LOOP)
    bx = bytes.fromhex("7047")
    one = patcher.instrument(image, [(CODE + 2, bx)])[0]
    two = patcher.instrument(image, [(CODE + 2, NOP * 3 + bx)])[0]
    assert measure_trap_cost(two, CODE + 2, CODE) - measure_trap_cost(one, CODE + 2, CODE) == 3


def test_diff_identical_and_injected_r7():
    t = run(build_image(LOOP), CODE)
    assert diff(t, t)
    u = run(build_image(LOOP), CODE)
    u.state.r[7] = 0x1234
    rep = diff(t, u)
    assert not rep and rep.first == ("R7", t.state.r[7], 0x1234)


def test_diff_payload_owned_exclusion():
    t = run(build_image(LOOP), CODE)
    u = run(build_image(LOOP), CODE)
    ram = bytearray(u.ram)
    ram[0x200] = 9
    u.ram = bytes(ram)
    assert not diff(t, u)
    assert diff(t, u, payload_owned=[(t.ram_base + 0x200, 4)])


def test_incomparable():
    image = build_image(LOOP)
    with pytest.raises(Incomparable):
        diff(run(image, CODE), run(image, CODE, limits=Limits(2)))


word = st.integers(0, 0xFFFF_FFFF)


@given(st.lists(word, min_size=15, max_size=15), st.integers(0, 0x3FF),
       st.integers(0, 31), st.sampled_from([0, 0x00, 0x08, 0x0C, 0x1E]),
       st.sampled_from([2, 4]))
def test_exception_round_trip(regs, sp_words, flags, it, length):
    m = Machine(build_image(NOP + BKPT))
    s = MachineState()
    s.r[:13] = regs[:13]
    s.r[14] = regs[14]
    s.r[13] = STACK_TOP - 4 * sp_words
    s.r[15] = CODE
    s.set_apsr(flags << 27)
    s.itstate = it
    m.s = s
    before = s.copy()
    m.exception_entry(CODE)
    m.mem.write(m.s.r[13] + 24, 4, CODE + length)
    m.exception_return(EXC_RETURN_THREAD)
    after = m.s
    assert after.r[:15] == before.r[:15]
    assert after.r[15] == CODE + length
    assert (after.xpsr, after.ipsr) == (before.xpsr, 0)


def test_corpus_traces_keep_pc_and_sp_invariants():
    for prog in load_corpus()[:10]:
        code = bytes.fromhex(prog["code"])
        m = Machine(build_image(code))
        m.reset(CODE)
        for _ in range(5000):
            assert m.s.r[15] & 1 == 0 and m.s.r[13] & 3 == 0
            m.step()
            if m.halted:
                break
        assert m.halted == "bkpt", prog["name"]
