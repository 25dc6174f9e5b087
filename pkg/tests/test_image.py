import pytest
from hypothesis import given, strategies as st

from bmr.image import (HARDFAULT, USAGEFAULT, FirmwareImage, Misaligned, MisalignedBase,
                       OutOfRange, append_region, load_image, read_evt_entry, read_halfword,
                       read_word, region_base_for, write_evt_entry, write_halfword, write_word)

BASE = 0x0800_0000


def img(n=0x100):
    return load_image(bytes(range(256)) * (n // 256) + bytes(n % 256), BASE, 0)


def test_load_identity_placement():
    im = load_image(bytes(64 * 1024), BASE, 0)
    assert im.evt_address == BASE
    assert len(im) == 64 * 1024


def test_evt_must_fit():
    with pytest.raises(OutOfRange):
        load_image(bytes(32), BASE, 0x10)


def test_misaligned_base():
    with pytest.raises(MisalignedBase):
        load_image(bytes(128), 0x0800_0002, 0)


def test_empty_buffer_rejected():
    with pytest.raises(OutOfRange):
        load_image(b"", BASE, 0)


def test_trap_halfword_little_endian():
    im = load_image(b"\x00\xde" + bytes(126), BASE, 0)
    assert read_halfword(im, BASE) == 0xDE00


def test_word_round_trip_and_boundaries():
    im = img()
    im2 = write_word(im, BASE + 8, 0xCAFEBABE)
    assert read_word(im2, BASE + 8) == 0xCAFEBABE
    assert read_word(im, BASE + 8) != 0xCAFEBABE  # original untouched
    with pytest.raises(OutOfRange):
        read_word(im, im.end_address)
    with pytest.raises(Misaligned):
        read_word(im, BASE + 2)
    with pytest.raises(Misaligned):
        write_halfword(im, BASE + 1, 0)


def test_evt_entry_sets_thumb_bit():
    im = write_evt_entry(img(), HARDFAULT, 0x0800_0100)
    e = read_evt_entry(im, HARDFAULT)
    assert e.value == 0x0800_0101 and e.is_code
    im = write_evt_entry(im, 0, 0x2000_8000)
    assert read_evt_entry(im, 0).value == 0x2000_8000
    assert read_evt_entry(im, USAGEFAULT).index == 6
    with pytest.raises(OutOfRange):
        read_evt_entry(im, 256)


def test_append_region_alignment():
    im = load_image(bytes(0x42), BASE, 0)
    assert region_base_for(im) == BASE + 0x44
    im2, base = append_region(im, b"\x01\x02")
    assert base == BASE + 0x44
    assert im2.data[:0x42] == im.data and im2.data[0x42:0x44] == b"\0\0"
    with pytest.raises(ValueError):
        append_region(im, b"")


@given(st.integers(0, 0xFF // 4 * 4 - 4), st.integers(0, 0xFFFFFFFF))
def test_write_preserves_length_and_other_bytes(off, word):
    im = img()
    off &= ~3
    im2 = write_word(im, BASE + off, word)
    assert len(im2) == len(im)
    assert im2.data[:off] == im.data[:off]
    assert im2.data[off + 4:] == im.data[off + 4:]
    assert read_word(im2, BASE + off) == word


@given(st.binary(min_size=64, max_size=300), st.binary(min_size=1, max_size=64))
def test_append_keeps_prefix(data, blob):
    im = load_image(data, BASE, 0)
    im2, base = append_region(im, blob)
    assert im2.data.startswith(im.data)
    assert base % 4 == 0
    assert im2.read(base, len(blob)) == blob


def test_serialize_round_trip():
    im = img()
    assert FirmwareImage(BASE, im.serialize(), 0) == im
