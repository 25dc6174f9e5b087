import pytest
from hypothesis import given, strategies as st

from bmr.decoder.registers import GENERAL, PROXY_POOL, RegisterSet, parse_reg, reg_name

regsets = st.builds(RegisterSet, st.integers(0, 0xFFFF))


@given(regsets, regsets, regsets)
def test_union_intersection_laws(a, b, c):
    assert a | b == b | a
    assert a & b == b & a
    assert (a | b) | c == a | (b | c)
    assert a & (b | c) == (a & b) | (a & c)
    assert a - b == a & ~b


@given(regsets, regsets)
def test_subset_and_complement(a, b):
    assert a & b <= a <= a | b
    assert ~~a == a
    assert (a | ~a) == RegisterSet(0xFFFF)
    assert not (a & ~a)
    assert ~(a | b) == ~a & ~b


@given(st.lists(st.integers(0, 15)))
def test_membership_matches_python_set(regs):
    s = RegisterSet(regs)
    assert set(s) == set(regs)
    assert len(s) == len(set(regs))


def test_names_round_trip():
    for r in range(16):
        assert parse_reg(reg_name(r)) == r
    assert parse_reg("ip") == 12
    with pytest.raises(ValueError):
        parse_reg("r16")
    with pytest.raises(ValueError):
        RegisterSet([16])


def test_proxy_pool_is_r0_to_r12():
    assert PROXY_POOL == tuple(range(13))
    assert set(GENERAL) == set(range(13))
