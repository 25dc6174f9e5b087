"""The compiled kernels must be indistinguishable from the pure-Python ones."""

import os
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from bmr.emu import _kernels_py as pure
from bmr.emu import kernels
from bmr.emu.errors import MemFault

compiled = pytest.importorskip("bmr.emu._kernels")

word = st.integers(0, 0xFFFF_FFFF)
bit = st.integers(0, 1)


def test_selector_prefers_compiled():
    assert kernels.IMPLEMENTATION == ("python" if os.environ.get("BMR_PURE") == "1"
                                      else "cython")


@given(word, word, bit)
def test_add_with_carry_matches(x, y, c):
    assert compiled.add_with_carry(x, y, c) == pure.add_with_carry(x, y, c)


def test_add_with_carry_reference_points():
    assert pure.add_with_carry(0x7FFF_FFFF, 1, 0) == (0x8000_0000, 0, 1)
    assert pure.add_with_carry(0xFFFF_FFFF, 1, 0) == (0, 1, 0)
    assert pure.add_with_carry(5, ~3 & 0xFFFF_FFFF, 1) == (2, 1, 0)  # 5 - 3


@given(word, st.sampled_from([None, "LSL", "LSR", "ASR", "ROR", "RRX"]),
       st.integers(0, 40), bit)
def test_shift_c_matches(value, kind, amount, carry):
    if kind == "RRX":
        amount = 1
    assert compiled.shift_c(value, kind, amount, carry) == \
        pure.shift_c(value, kind, amount, carry)


@given(st.lists(st.tuples(st.integers(0, 0x1FC), st.sampled_from([1, 2, 4]), word),
                max_size=40))
def test_memory_matches(ops):
    mems = []
    for impl in (pure, compiled):
        m = impl.Memory()
        m.add_region(0x1000, bytes(range(256)) * 2, False, "flash")
        m.add_region(0x2000, bytes(0x200), True, "ram")
        mems.append(m)
    for off, size, value in ops:
        out = []
        for m in mems:
            try:
                m.write(0x2000 + off, size, value)
                out.append(m.read(0x2000 + off, size))
            except MemFault:
                out.append("fault")
        assert out[0] == out[1]
    for m in mems:
        with pytest.raises(MemFault):
            m.write(0x1000, 4, 0)
        with pytest.raises(MemFault):
            m.read(0x3000, 4)
    assert mems[0].read_bytes(0x2000, 0x200) == mems[1].read_bytes(0x2000, 0x200)
    assert mems[0].read(0x1001, 4) == mems[1].read(0x1001, 4)


SCRIPT = """
import sys
sys.path.insert(0, {tests!r})
from helpers import CODE, build_image, load_corpus
from bmr import patcher
from bmr.emu.kernels import IMPLEMENTATION
from bmr.emu.machine import Limits, run
print(IMPLEMENTATION)
for prog in load_corpus():
    image = build_image(bytes.fromhex(prog["code"]))
    patched, _ = patcher.instrument(image, [(CODE, b"")])
    for img in (image, patched):
        t = run(img, CODE, limits=Limits(20000, record=True))
        print(prog["name"], t.cause, t.state.r, t.state.xpsr, hash(t.ram), hash(t.dump()))
"""


def test_whole_runs_identical_across_implementations():
    tests = os.path.dirname(__file__)
    outs = []
    for pure_flag in ("0", "1"):
        env = dict(os.environ, BMR_PURE=pure_flag, PYTHONHASHSEED="0")
        res = subprocess.run([sys.executable, "-c", SCRIPT.format(tests=tests)], env=env,
                             capture_output=True, text=True, check=True)
        outs.append(res.stdout.splitlines())
    assert outs[0][0] == "cython" and outs[1][0] == "python"
    assert outs[0][1:] == outs[1][1:]
