"""Raw firmware images and their exception vector tables."""

from __future__ import annotations

from dataclasses import dataclass

EVT_SYSTEM_ENTRIES = 16
HARDFAULT = 3
USAGEFAULT = 6


class ImageError(Exception):
    pass


class OutOfRange(ImageError):
    pass


class MisalignedBase(ImageError):
    pass


class Misaligned(ImageError):
    pass


@dataclass(frozen=True)
class EvtEntry:
    index: int
    value: int

    @property
    def is_code(self) -> bool:
        return self.index >= 1


@dataclass(frozen=True)
class FirmwareImage:
    """Immutable flat image; every mutator returns a new image."""

    base_address: int
    data: bytes
    evt_offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "data", bytes(self.data))

    def __len__(self) -> int:
        return len(self.data)

    @property
    def end_address(self) -> int:
        return self.base_address + len(self.data)

    @property
    def evt_address(self) -> int:
        return self.base_address + self.evt_offset

    def contains(self, addr: int, size: int = 1) -> bool:
        return self.base_address <= addr and addr + size <= self.end_address

    def offset_of(self, addr: int, size: int = 1) -> int:
        if not self.contains(addr, size):
            raise OutOfRange(f"{addr:#010x}+{size} outside image "
                             f"[{self.base_address:#010x}, {self.end_address:#010x})")
        return addr - self.base_address

    def read(self, addr: int, size: int) -> bytes:
        off = self.offset_of(addr, size)
        return self.data[off:off + size]

    def write(self, addr: int, chunk: bytes) -> "FirmwareImage":
        off = self.offset_of(addr, len(chunk))
        buf = bytearray(self.data)
        buf[off:off + len(chunk)] = chunk
        return FirmwareImage(self.base_address, bytes(buf), self.evt_offset)

    def serialize(self) -> bytes:
        return self.data


def load_image(data: bytes, base: int, evt_offset: int = 0) -> FirmwareImage:
    if not data:
        raise OutOfRange("empty image")
    if base & 3:
        raise MisalignedBase(f"base address {base:#x} is not 4-byte aligned")
    if evt_offset < 0 or evt_offset & 3 or evt_offset + 4 * EVT_SYSTEM_ENTRIES > len(data):
        raise OutOfRange(f"EVT at offset {evt_offset:#x} does not fit {len(data)} bytes")
    return FirmwareImage(base, bytes(data), evt_offset)


def _aligned(addr: int, size: int) -> None:
    if addr % size:
        raise Misaligned(f"{addr:#010x} not {size}-byte aligned")


def read_word(image: FirmwareImage, addr: int) -> int:
    _aligned(addr, 4)
    return int.from_bytes(image.read(addr, 4), "little")


def write_word(image: FirmwareImage, addr: int, word: int) -> FirmwareImage:
    _aligned(addr, 4)
    return image.write(addr, (word & 0xFFFFFFFF).to_bytes(4, "little"))


def read_halfword(image: FirmwareImage, addr: int) -> int:
    _aligned(addr, 2)
    return int.from_bytes(image.read(addr, 2), "little")


def write_halfword(image: FirmwareImage, addr: int, value: int) -> FirmwareImage:
    _aligned(addr, 2)
    return image.write(addr, (value & 0xFFFF).to_bytes(2, "little"))


def _evt_slot(image: FirmwareImage, index: int) -> int:
    if not 0 <= index <= 255:
        raise OutOfRange(f"EVT index {index} outside 0..255")
    return image.evt_address + 4 * index


def read_evt_entry(image: FirmwareImage, index: int) -> EvtEntry:
    return EvtEntry(index, read_word(image, _evt_slot(image, index)))


def write_evt_entry(image: FirmwareImage, index: int, value: int) -> FirmwareImage:
    if index >= 1:
        value |= 1
    return write_word(image, _evt_slot(image, index), value)


def append_region(image: FirmwareImage, blob: bytes, align: int = 4) -> tuple[FirmwareImage, int]:
    if not blob:
        raise ValueError("blob must be non-empty")
    if align <= 0 or align & (align - 1):
        raise ValueError(f"alignment {align} is not a power of two")
    pad = -len(image.data) % align
    data = image.data + bytes(pad) + bytes(blob)
    region = image.base_address + len(image.data) + pad
    return FirmwareImage(image.base_address, data, image.evt_offset), region


def region_base_for(image: FirmwareImage, align: int = 4) -> int:
    """Address append_region would assign, without appending."""
    return image.base_address + len(image.data) + (-len(image.data) % align)
