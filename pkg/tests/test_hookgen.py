import random

import pytest

from bmr import hookgen, patcher
from bmr.decoder import Undecodable, decode_bytes
from bmr.emu.diff import diff, trap_costs
from bmr.emu.machine import Limits, run
from bmr.translator import translate

from helpers import CODE, STACK_TOP, build_image, differential, handler_address

NOP = bytes.fromhex("00bf")
BKPT = bytes.fromhex("00be")
# movs r0,#3; loop: subs r0,#1; bne loop; bkpt #0
LOOP = bytes.fromhex("03200138fdd100be")
# ldr r1,=0x20000200; ldr r2,[r1]; adds r2,#1; str r2,[r1]; bx lr; nop; .word
COUNTER = bytes.fromhex("02490a6801320a60704700bf00020020")
COUNTER_ADDR = 0x2000_0200

#: one NOP site with an empty payload; measured on first build and frozen
BLOB_ONE_NOP = 76
#: growth per additional NOP site (table entry 8 + worker 20)
BLOB_PER_NOP = 28


def nop_sites(n: int, base: int = 0x0800_1000) -> list:
    out = []
    for k in range(n):
        i = decode_bytes(NOP, 0, base + 2 * k)
        out.append(hookgen.HookSite(i.address, translate(i)))
    return out


def test_blob_size_regression():
    assert hookgen.assemble_blob(nop_sites(1), 0x0800_2000, 0).size == BLOB_ONE_NOP
    for n in (2, 3, 10):
        blob = hookgen.assemble_blob(nop_sites(n), 0x0800_2000, 0)
        assert blob.size == BLOB_ONE_NOP + BLOB_PER_NOP * (n - 1)


def test_permuted_input_is_byte_identical():
    sites = nop_sites(20)
    ref = hookgen.assemble_blob(sites, 0x0800_4000, 0x0800_0101).code
    rng = random.Random(3)
    for _ in range(5):
        rng.shuffle(sites)
        assert hookgen.assemble_blob(sites, 0x0800_4000, 0x0800_0101).code == ref


def test_thousand_sites():
    blob = hookgen.assemble_blob(nop_sites(1000), 0x0801_0000, 0x0800_0101)
    assert len(blob.dispatch_table) == 1000
    assert [s for s, _ in blob.dispatch_table] == sorted(s for s, _ in blob.dispatch_table)
    assert blob.size == BLOB_ONE_NOP + BLOB_PER_NOP * 999


def test_duplicate_site_rejected():
    with pytest.raises(hookgen.HookGenError):
        hookgen.assemble_blob(nop_sites(1) * 2, 0x0800_2000, 0)


def test_payload_limit():
    i = decode_bytes(NOP, 0, 0x0800_1000)
    hs = hookgen.HookSite(i.address, translate(i), COUNTER)
    with pytest.raises(hookgen.PayloadTooLarge) as err:
        hookgen.assemble_blob([hs], 0x0800_2000, 0, payload_limit=8)
    assert err.value.site == 0x0800_1000


def test_trap_cost_is_affine_in_table_index():
    n = 12
    image = build_image(NOP * n + BKPT)
    patched, _ = patcher.instrument(image, [(CODE + 2 * k, b"") for k in range(n)])
    costs = trap_costs(run(patched, CODE))
    assert [s for s, _ in costs] == [CODE + 2 * k for k in range(n)]
    a = costs[0][1]
    assert [c for _, c in costs] == [a + hookgen.DISPATCH_LOOP_COST * k for k in range(n)]


def test_empty_payload_nop_is_transparent():
    image = build_image(NOP + LOOP)
    ta, tb, _, rep = differential(image, [CODE])
    assert rep, str(rep)
    assert tb.state.r[13] == ta.state.r[13] == STACK_TOP


def test_bl_site_sets_lr():
    # bl +8; bkpt #0; nop; bkpt #2
    image = build_image(bytes.fromhex("00f002f800be00bf02be"))
    ta, tb, _, rep = differential(image, [CODE])
    assert rep, str(rep)
    assert tb.state.r[14] == CODE + 4 | 1
    assert tb.state.r[15] == CODE + 8


def test_counter_payload_counts_each_execution():
    image = build_image(LOOP)
    site = CODE + 2  # subs, runs three times
    patched, _ = patcher.instrument(image, [(site, COUNTER)])
    ta = run(image, CODE)
    tb = run(patched, CODE)
    counter = tb.ram[COUNTER_ADDR - tb.ram_base:][:4]
    assert int.from_bytes(counter, "little") == 3
    assert diff(ta, tb, payload_owned=[(COUNTER_ADDR, 4)]), "payload leaked into app state"


def test_stack_budget():
    image = build_image(LOOP)
    patched, _ = patcher.instrument(image, [(CODE + 2, COUNTER)])
    tb = run(patched, CODE)
    used = STACK_TOP - tb.state.low_water
    assert 0 < used <= hookgen.STACK_BUDGET


def test_stray_trap_reaches_original_handler_unmodified():
    # nop; udf #0 (not a hook site); bkpt #0
    code = NOP + hookgen.TRAP_BYTES + BKPT
    image = build_image(NOP * 2 + code)
    patched, _ = patcher.instrument(image, [(CODE, b""), (CODE + 2, b"")])
    ta, tb = run(image, CODE), run(patched, CODE)
    assert ta.cause == tb.cause == "bkpt"
    assert ta.state.r[15] == tb.state.r[15] == handler_address(image)
    assert ta.state.r == tb.state.r
    assert ta.state.xpsr == tb.state.xpsr
    frame = slice(ta.state.r[13] - ta.ram_base, ta.state.r[13] - ta.ram_base + 32)
    assert ta.ram[frame] == tb.ram[frame]


def _code_ranges(blob):
    """Instruction-bearing ranges of the blob, excluding tables and payloads."""
    lab = blob.labels
    yield lab["handler"], lab["orig_handler"]
    sites = [s for s, _ in blob.dispatch_table]
    for s in sites:
        yield lab[f"s{s:08x}_worker"], lab[f"s{s:08x}_worker_end"]
        if f"s{s:08x}_stub" in lab:
            yield lab[f"s{s:08x}_stub"], lab[f"s{s:08x}_stub_end"]


def test_no_undefined_opcode_in_hook_code():
    image = build_image(NOP + bytes.fromhex("00f002f800be00bf02be"))
    sites = [CODE, CODE + 2]
    patched, report = patcher.instrument(image, [(s, COUNTER) for s in sites])
    base = report.region_base
    blob = hookgen.assemble_blob(
        [hookgen.HookSite(s, translate(decode_bytes(image.read(s, 4), 0, s)), COUNTER)
         for s in sites], base, report.original_evt)
    for lo, hi in _code_ranges(blob):
        pc = lo
        while pc < hi:
            raw = patched.read(pc, min(4, patched.end_address - pc))
            i = decode_bytes(raw, 0, pc)
            assert i.op != "UDF", f"UDF at {pc:#x}"
            pc += i.length
        assert pc == hi
    tb = run(patched, CODE, limits=Limits(10_000))
    entries = [addr for kind, _, addr in tb.events if kind == "entry"]
    assert set(entries) <= set(sites)
