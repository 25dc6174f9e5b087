import random

import pytest
from hypothesis import given, strategies as st

from bmr.decoder import (InstrClass, RegisterSet, Undecodable, Unencodable, build, classify,
                         classify_raw, decode, encode, instr_length, registers_used)
from bmr.decoder.encodings import TABLE16, TABLE32
from bmr.decoder.registers import GENERAL, LR, PC, SP

UNSUPPORTED = {"BKPT", "CPSIE", "CPSID", "MRS", "MSR", "SEV", "SVC", "WFE", "WFI"}


def d16(hw, addr=0x1000):
    return decode([hw], addr)


def d32(hw1, hw2, addr=0x1000):
    return decode([hw1, hw2], addr)


# -- examples -------------------------------------------------------------

@pytest.mark.parametrize("hw,n", [(0x4770, 2), (0xF000, 4), (0xDE00, 2), (0xE800, 4),
                                  (0xE7FE, 2), (0xF800, 4)])
def test_instr_length_examples(hw, n):
    assert instr_length(hw) == n


def test_bx_lr():
    i = d16(0x4770)
    assert i.op == "BX" and i.m == LR
    assert i.writes == RegisterSet.of(PC)
    assert LR in i.reads and PC not in i.reads
    assert classify(i) is InstrClass.C2
    assert registers_used(i) == RegisterSet()


def test_add_r0_r3_from_literal_pool_bytes():
    i = d16(0x4418)
    assert (i.op, i.d, i.n, i.m) == ("ADD", 0, 0, 3)
    assert i.reads == RegisterSet.of(0, 3) and i.writes == RegisterSet.of(0)
    assert classify(i) is InstrClass.C1


def test_trap_is_undefined():
    i = d16(0xDE00)
    assert i.op == "UDF"
    assert classify(i) is InstrClass.UNDECODABLE


def test_svc_unsupported():
    assert classify(d16(0xDF00)) is InstrClass.UNSUPPORTED


def test_cbz_is_c2():
    i = d16(0xB108)  # CBZ R0, +6
    assert i.op == "CBZ" and classify(i) is InstrClass.C2
    assert not i.sets_flags


def test_tbb_registers_used():
    i = d32(0xE8D1, 0xF002)
    assert i.op == "TBB"
    assert registers_used(i) == RegisterSet.of(1, 2)


def test_nop_uses_nothing():
    assert registers_used(d16(0xBF00)) == RegisterSet()


def test_add_three_registers_c1():
    i = build("ADD_reg_T1", d=1, n=2, m=3, setflags=True, it_flags=True)
    assert classify(i) is InstrClass.C1


def test_short_branch_range():
    ok = build("B_T2", imm=-2048)
    assert ok.imm == -2048
    with pytest.raises(Unencodable) as exc:
        build("B_T2", imm=2048)
    assert exc.value.field == "imm"
    wide = build("B_T4", imm=2048)
    assert wide.length == 4


@pytest.mark.parametrize("rd", range(13))
def test_mov_rd_pc_encodable(rd):
    i = build("MOV_reg_T1", d=rd, m=PC)
    assert decode(encode(i)).m == PC


def test_undecodable_reports_halfwords():
    with pytest.raises(Undecodable) as exc:
        d32(0xEE00, 0x0A00)  # coprocessor space
    assert exc.value.halfwords == (0xEE00, 0x0A00)


# -- classification ---------------------------------------------------------

def _sample32(enc, rng):
    free = ~enc.mask & 0xFFFFFFFF
    return enc.value | (rng.getrandbits(32) & free)


def _all16():
    for hw in range(0x10000):
        if instr_length(hw) == 2:
            try:
                yield hw, d16(hw)
            except Undecodable:
                yield hw, None


def test_unsupported_set_is_exact():
    seen = set()
    for hw, i in _all16():
        if i is not None and classify(i) is InstrClass.UNSUPPORTED:
            seen.add(i.op)
    rng = random.Random(7)
    for enc in TABLE32:
        for _ in range(50):
            w = _sample32(enc, rng)
            try:
                i = decode([w >> 16, w & 0xFFFF])
            except Undecodable:
                continue
            if classify(i) is InstrClass.UNSUPPORTED:
                seen.add(i.op)
    assert seen == UNSUPPORTED


def test_pc_in_usage_iff_c2():
    for hw, i in _all16():
        if i is None:
            continue
        k = classify(i)
        if k in (InstrClass.C1, InstrClass.C2):
            assert (PC in (i.reads | i.writes)) == (k is InstrClass.C2), str(i)


def test_length_law_all_first_halfwords():
    for hw in range(0x10000):
        n = instr_length(hw)
        second = 0x0000 if n == 4 else None
        try:
            i = decode([hw] + ([second] if second is not None else []))
        except Undecodable:
            continue
        assert i.length == n == 2 * len(i.raw)


def test_round_trip_all_16bit():
    count = 0
    for hw, i in _all16():
        if i is not None:
            assert encode(i) == (hw,), f"{hw:04x} {i}"
            count += 1
    assert count > 50_000


def test_round_trip_enumerated_32bit_encodings():
    rng = random.Random(1234)
    unreached = []
    for enc in TABLE32:
        hits = 0
        for _ in range(300):
            w = _sample32(enc, rng)
            try:
                i = decode([w >> 16, w & 0xFFFF])
            except Undecodable:
                continue
            assert encode(i) == (w >> 16, w & 0xFFFF), f"{enc.name} {w:08x} {i}"
            hits += i.enc == enc.name
        if not hits:
            unreached.append(enc.name)
    assert not unreached, unreached


@given(st.integers(0, 0xFFFF), st.integers(0, 0xFFFF))
def test_classify_total(hw1, hw2):
    k = classify_raw([hw1, hw2])
    assert isinstance(k, InstrClass)


@given(st.sampled_from(TABLE32), st.integers(0, 0xFFFFFFFF))
def test_round_trip_property_32(enc, noise):
    w = enc.value | (noise & ~enc.mask & 0xFFFFFFFF)
    try:
        i = decode([w >> 16, w & 0xFFFF])
    except Undecodable:
        return
    assert encode(i) == (w >> 16, w & 0xFFFF)
    assert classify(i) in InstrClass


@given(st.sampled_from(TABLE16), st.integers(0, 0xFFFF))
def test_usage_sets_are_registers(enc, noise):
    hw = enc.value | (noise & ~enc.mask & 0xFFFF)
    try:
        i = d16(hw)
    except Undecodable:
        return
    assert registers_used(i) <= GENERAL
    assert SP not in registers_used(i)
