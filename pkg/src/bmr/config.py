"""Line-oriented instrumentation config.

Example::

    base_address = 0x08000000
    evt_offset = 0x0
    vector = hardfault
    ram_base = 0x20000000
    ram_size = 0x10000
    entry = 0x08000101

    [site]
    address = 0x08000120
    payload = 7047

Top-level keys come first; each ``[site]`` line opens a new site block.
``payload`` is either an inline hex string or a path to a raw binary,
resolved relative to the config file. ``entry`` may repeat.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

REQUIRED = ("base_address", "evt_offset")
VECTORS = ("hardfault", "usagefault")
_HEX = re.compile(r"^(0x)?([0-9a-fA-F]{2})*$")


class ConfigError(Exception):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f"line {line}: " if line else ""
        super().__init__(where + message)
        self.key, self.line = key, line


@dataclass
class SiteSpec:
    address: int
    payload: str = ""

    def payload_bytes(self, root: Path | None = None) -> bytes:
        text = self.payload.strip()
        if not text:
            return b""
        if _HEX.match(text):
            return bytes.fromhex(text[2:] if text.lower().startswith("0x") else text)
        path = Path(text)
        if root is not None and not path.is_absolute():
            path = root / path
        try:
            return path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read payload {text!r}: {exc.strerror}", "payload") \
                from None


@dataclass
class Config:
    base_address: int
    evt_offset: int
    vector: str = "hardfault"
    ram_base: int = 0x2000_0000
    ram_size: int = 0x0001_0000
    entries: list = field(default_factory=list)
    sites: list = field(default_factory=list)
    root: Path | None = field(default=None, compare=False)

    def dump(self) -> str:
        lines = [f"base_address = {self.base_address:#010x}",
                 f"evt_offset = {self.evt_offset:#x}",
                 f"vector = {self.vector}",
                 f"ram_base = {self.ram_base:#010x}",
                 f"ram_size = {self.ram_size:#x}"]
        lines += [f"entry = {e:#010x}" for e in self.entries]
        for s in self.sites:
            lines += ["", "[site]", f"address = {s.address:#010x}"]
            if s.payload:
                lines.append(f"payload = {s.payload}")
        return "\n".join(lines) + "\n"


def _int(key: str, value: str, line: int) -> int:
    try:
        v = int(value, 16) if not value.lower().startswith("0x") else int(value, 0)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not a hex number", key, line) from None
    if not 0 <= v <= 0xFFFFFFFF:
        raise ConfigError(f"{key}: {value} out of 32-bit range", key, line)
    return v


def parse_config(text: str, root: Path | None = None) -> Config:
    top: dict = {}
    entries: list = []
    sites: list = []
    cur: dict | None = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[site]":
            cur = {"line": n}
            sites.append(cur)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", None, n)
        key, value = (p.strip() for p in line.split("=", 1))
        if cur is not None:
            if key not in ("address", "payload"):
                raise ConfigError(f"unknown site key {key!r}", key, n)
            if key in cur:
                raise ConfigError(f"duplicate site key {key!r}", key, n)
            cur[key] = value if key == "payload" else _int(key, value, n) & ~1
            continue
        if key == "entry":
            entries.append(_int(key, value, n) & ~1)
        elif key in ("base_address", "evt_offset", "ram_base", "ram_size"):
            if key in top:
                raise ConfigError(f"duplicate key {key!r}", key, n)
            top[key] = _int(key, value, n)
        elif key == "vector":
            if value not in VECTORS:
                raise ConfigError(f"vector must be one of {', '.join(VECTORS)}", key, n)
            top[key] = value
        else:
            raise ConfigError(f"unknown key {key!r}", key, n)
    for key in REQUIRED:
        if key not in top:
            raise ConfigError(f"missing required key {key!r}", key)
    specs = []
    for s in sites:
        if "address" not in s:
            raise ConfigError("site block without address", "address", s["line"])
        specs.append(SiteSpec(s["address"], s.get("payload", "")))
    return Config(entries=entries, sites=specs, root=root, **top)


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, path.parent)
