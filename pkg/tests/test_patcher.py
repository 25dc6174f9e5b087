import pytest
from hypothesis import given, settings, strategies as st

from bmr import hookgen, patcher
from bmr.image import HARDFAULT, FirmwareImage, load_image

from helpers import BASE, CODE, build_image, differential

NOP = bytes.fromhex("00bf")
SVC = bytes.fromhex("01df")
BKPT = bytes.fromhex("00be")
# ldr r0,[pc,#4]; ldr r1,[pc,#4]; bkpt #0; nop; .word 0x12345678; .word 0xdeadbeef
LITERALS = bytes.fromhex("0148014900be00bf78563412efbeadde")
# movs r0,#3; loop: subs r0,#1; bne loop; bkpt #0
LOOP = bytes.fromhex("03200138fdd100be")
# cmp r0,r0; ite eq; moveq r1,#1; movne r1,#2; bkpt #0
ITE = bytes.fromhex("8042 0cbf 0121 0221 00be".replace(" ", ""))
# ldr.w r0,[pc,#8]; bkpt #0
WIDE = bytes.fromhex("dff8080000be")


def test_nop_site_becomes_trap_and_runs_equivalent():
    image = build_image(NOP + LOOP)
    patched, report = patcher.instrument(image, [(CODE, b"")])
    assert patched.read(CODE, 2) == b"\x00\xde"
    assert report.accepted[0].site == CODE
    evt = int.from_bytes(patched.read(BASE + 4 * HARDFAULT, 4), "little")
    assert evt == report.handler_entry and evt & 1
    *_, rep = differential(image, [CODE])
    assert rep, str(rep)


def test_wide_site_keeps_second_halfword():
    image = build_image(WIDE)
    patched, report = patcher.instrument(image, [(CODE, b"")])
    assert report.accepted
    assert patched.read(CODE, 4) == b"\x00\xde" + WIDE[2:4]


def test_svc_rejected_unsupported():
    image = build_image(NOP + SVC + BKPT)
    _, report = patcher.instrument(image, [(CODE, b""), (CODE + 2, b"")])
    (rej,) = report.rejected
    assert (rej.site, rej.reason) == (CODE + 2, "Unsupported")
    assert "SVC" in rej.detail


def test_fraction_format():
    rep = patcher.InstrumentReport(
        [patcher.SiteResult(k, patcher.ACCEPTED if k < 989 else patcher.REJECTED)
         for k in range(1000)], 0, HARDFAULT, 0, 0, 0)
    assert f"{100 * rep.fraction:.1f}%" == "98.9%"
    assert "fraction = 98.9%" in rep.serialize()


def test_already_instrumented_is_rejected():
    image = build_image(NOP + LOOP)
    once, _ = patcher.instrument(image, [(CODE, b"")])
    _, report = patcher.instrument(once, [(CODE, b"")])
    assert [s.reason for s in report.rejected] == ["AlreadyInstrumented"]


def test_inside_it_block_and_overlap():
    image = build_image(ITE + NOP)
    _, report = patcher.instrument(image, [(CODE + 4, b""), (CODE + 6, b""), (CODE + 10, b"")])
    reasons = {s.site: s.reason for s in report.rejected}
    assert reasons == {CODE + 4: "InsideITBlock", CODE + 6: "InsideITBlock"}
    wide = build_image(WIDE)
    _, report = patcher.instrument(wide, [(CODE, b""), (CODE + 2, b"")])
    assert [s.reason for s in report.rejected] == ["Overlap"]


def test_out_of_range_and_vector_table():
    image = build_image(NOP)
    _, report = patcher.instrument(image, [(BASE + 8, b""), (0x0900_0000, b"")])
    assert {s.reason for s in report.rejected} == {"OutOfRange"}


def test_bad_evt_aborts():
    image = build_image(NOP)
    data = bytearray(image.data)
    data[4 * HARDFAULT:4 * HARDFAULT + 4] = (CODE + 4).to_bytes(4, "little")  # no Thumb bit
    with pytest.raises(patcher.PatchError):
        patcher.instrument(load_image(bytes(data), BASE, 0), [(CODE, b"")])


@settings(max_examples=30)
@given(st.lists(st.integers(-4, 12), max_size=12))
def test_report_completeness(offsets):
    image = build_image(LITERALS + ITE + SVC + NOP)
    reqs = [(CODE + 2 * k, b"") for k in offsets]
    _, report = patcher.instrument(image, reqs)
    assert len(report.accepted) + len(report.rejected) == len(reqs)
    assert not {s.site for s in report.accepted} & {s.site for s in report.rejected} or \
        len(set(offsets)) < len(offsets)
    assert patcher.InstrumentReport.parse(report.serialize()) == report


def test_inspect_literal_pool_flagged():
    image = build_image(LITERALS)
    listing = patcher.inspect(image, CODE + 8, CODE + 16)
    assert listing and all(line.note == "verify target is code" for line in listing)


def test_inspect_empty_range():
    image = build_image(NOP)
    assert patcher.inspect(image, CODE, CODE) == []


def test_inspect_blob_annotations():
    image = build_image(NOP + LOOP)
    patched, report = patcher.instrument(image, [(CODE, b""), (CODE + 4, b"")])
    lo = report.region_base
    listing = patcher.inspect(patched, lo, lo + report.blob_size, report)
    notes = {line.note for line in listing}
    assert "hook handler" in notes
    assert f"worker for site {CODE:#010x}" in notes
    assert "verify target is code" not in notes
    top = patcher.inspect(patched, CODE, CODE + 2, report)
    assert top[0].text == "UDF #0 (hook trap)"


def test_inspect_out_of_range():
    image = build_image(NOP)
    with pytest.raises(Exception):
        patcher.inspect(image, CODE, 0x0900_0000)


def test_verify_untouched_pair():
    image = build_image(LOOP)
    _, report = patcher.instrument(image, [])
    res = patcher.verify(image, image, report, [CODE])
    assert res.passed and res.sites == {}


def test_verify_nop_payload_passes():
    image = build_image(NOP + LOOP)
    sites = [CODE, CODE + 2, CODE + 4, CODE + 6]
    patched, report = patcher.instrument(image, [(s, b"") for s in sites])
    res = patcher.verify(image, patched, report, [CODE])
    assert res.passed
    assert res.sites == {s: True for s in sites}


def test_verify_detects_footprint_violation():
    image = build_image(NOP * 4 + LOOP)
    patched, report = patcher.instrument(image, [(CODE, b"")])
    off = CODE + 4 - BASE  # inside the code, two bytes past the only site
    data = bytearray(patched.data)
    data[off] ^= 0xFF
    bad = FirmwareImage(BASE, bytes(data), 0)
    res = patcher.verify(image, bad, report, [CODE])
    assert not res.footprint_ok and not res.passed
    with pytest.raises(patcher.FootprintViolation) as err:
        patcher.verify(image, bad, report, [CODE], raise_on_failure=True)
    assert err.value.offset == off


def test_verify_detects_divergence():
    image = build_image(NOP + LOOP)
    patched, report = patcher.instrument(image, [(CODE, b"")])
    # corrupt the worker so it clobbers R7 before returning
    w = report.region_base + report.accepted[0].worker_offset - BASE
    data = bytearray(patched.data)
    data[w:w + 2] = bytes.fromhex("0727")  # movs r7,#7 over PUSH {R0,LR}
    bad = FirmwareImage(BASE, bytes(data), 0)
    patcher.check_footprint(image, bad, report)  # tail changes are allowed
    with pytest.raises(patcher.BehaviorDivergence):
        patcher.verify(image, bad, report, [CODE], raise_on_failure=True)
