"""Shared fixtures: tiny firmware images and the differential harness."""

from __future__ import annotations

import json
from pathlib import Path

from bmr import patcher
from bmr.emu.diff import diff
from bmr.emu.machine import Limits, run
from bmr.image import FirmwareImage, load_image

BASE = 0x0800_0000
CODE = BASE + 0x40
STACK_TOP = 0x2000_8000
CORPUS = Path(__file__).parent / "corpus" / "programs.json"
#: the original fault handler: BKPT #1, so a genuine fault halts distinctly
DEFAULT_HANDLER = bytes.fromhex("01be0000")


def build_image(code: bytes, handler: bytes = DEFAULT_HANDLER) -> FirmwareImage:
    """Vector table at BASE, code at BASE+0x40, fault handler after the code."""
    body = bytearray(code)
    body += bytes(-len(body) % 4)
    handler_addr = CODE + len(body)
    body += handler
    evt = bytearray(0x40)
    evt[0:4] = STACK_TOP.to_bytes(4, "little")
    evt[4:8] = (CODE | 1).to_bytes(4, "little")
    for idx in range(2, 16):
        evt[4 * idx:4 * idx + 4] = (handler_addr | 1).to_bytes(4, "little")
    return load_image(bytes(evt) + bytes(body), BASE, 0)


def handler_address(image: FirmwareImage) -> int:
    return int.from_bytes(image.read(BASE + 12, 4), "little") & ~1


def load_corpus() -> list:
    return json.loads(CORPUS.read_text())


def executed_addresses(image: FirmwareImage, limit: int = 20_000) -> list:
    trace = run(image, CODE, limits=Limits(limit, record=True))
    return sorted({pc for pc, _ in trace.samples})


def eligible_sites(image: FirmwareImage) -> list:
    """Executed instructions the patcher accepts, in address order."""
    addrs = executed_addresses(image)
    _, report = patcher.instrument(image, [(a, b"") for a in addrs])
    return [s.site for s in report.accepted if not s.detail.startswith("BKPT")]


def differential(image: FirmwareImage, sites, payload_owned=(), limit: int = 50_000):
    """(original trace, instrumented trace, report, divergence) for ``sites``."""
    patched, report = patcher.instrument(image, [(a, b"") for a in sites])
    ta = run(image, CODE, limits=Limits(limit))
    tb = run(patched, CODE, limits=Limits(limit))
    return ta, tb, report, diff(ta, tb, payload_owned=payload_owned)
