"""Compare the compiled and pure-Python emulator kernels.

Usage: python benchmarks/bench_kernels.py [--sites N]

Runs a micro-benchmark of each kernel and an end-to-end emulation of an
instrumented NOP sled, once per implementation (each in a fresh
interpreter, since the selection happens at import).
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time, timeit
from bmr.emu import kernels
from bmr.emu.kernels import Memory, add_with_carry, shift_c
from bmr.emu.machine import Limits, run
from bmr import patcher
from bmr.image import load_image

n = int(sys.argv[1])
out = {"impl": kernels.IMPLEMENTATION}
out["add_with_carry"] = min(timeit.repeat(
    "f(0x7fffffff, 0x12345678, 1)", globals={"f": add_with_carry}, number=200_000, repeat=3))
out["shift_c"] = min(timeit.repeat(
    "f(0x80000001, 'ROR', 7, 0)", globals={"f": shift_c}, number=200_000, repeat=3))
m = Memory()
m.add_region(0x2000_0000, bytes(0x1000), True, "ram")
out["mem_rw"] = min(timeit.repeat(
    "m.write(0x20000100, 4, 7); m.read(0x20000100, 4)", globals={"m": m},
    number=200_000, repeat=3))

base, code = 0x0800_0000, 0x0800_0040
body = b"\x00\xbf" * n + b"\x00\xbe"
body += bytes(-len(body) % 4)
handler = code + len(body)
evt = bytearray(0x40)
evt[0:4] = (0x2000_8000).to_bytes(4, "little")
for k in range(1, 16):
    evt[4 * k:4 * k + 4] = ((handler if k > 1 else code) | 1).to_bytes(4, "little")
image = load_image(bytes(evt) + body + b"\x01\xbe\x00\x00", base, 0)
patched, _ = patcher.instrument(image, [(code + 2 * k, b"") for k in range(n)])
t0 = time.perf_counter()
trace = run(patched, code, limits=Limits(100_000_000))
out["emulate_s"] = time.perf_counter() - t0
out["retired"] = trace.retired
print(json.dumps(out))
"""


def measure(pure: bool, sites: int) -> dict:
    env = dict(os.environ, BMR_PURE="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", CHILD, str(sites)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sites", type=int, default=300)
    args = ap.parse_args(argv)
    fast, slow = measure(False, args.sites), measure(True, args.sites)
    if fast["impl"] != "cython":
        print("compiled kernels not built; only the pure-Python numbers are meaningful")
    assert fast["retired"] == slow["retired"]
    print(f"{'kernel':<16}{fast['impl']:>12}{slow['impl']:>12}{'speedup':>10}")
    for key in ("add_with_carry", "shift_c", "mem_rw", "emulate_s"):
        print(f"{key:<16}{fast[key]:>12.4f}{slow[key]:>12.4f}{slow[key] / fast[key]:>9.2f}x")
    print(f"retired instructions: {fast['retired']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
