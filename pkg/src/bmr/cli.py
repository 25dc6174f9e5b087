"""Command-line front end: ``bmr instrument | verify | inspect``.

Exit codes:

    0  success
    2  usage error (bad arguments)
    3  config error
    4  image error (unreadable file, bad EVT, range outside image)
    5  verify: footprint violation
    6  verify: behavior divergence
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import patcher
from .config import Config, ConfigError, SiteSpec, load_config
from .image import HARDFAULT, USAGEFAULT, ImageError, load_image

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IMAGE = 4
EXIT_FOOTPRINT = 5
EXIT_DIVERGENCE = 6

log = logging.getLogger("bmr")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _setup_logging() -> None:
    level = os.environ.get("BMR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _Fail(EXIT_IMAGE, f"cannot read {path}: {exc.strerror}") from None


def _write(path, data) -> None:
    try:
        Path(path).write_bytes(data) if isinstance(data, bytes) else Path(path).write_text(data)
    except OSError as exc:
        raise _Fail(EXIT_IMAGE, f"cannot write {path}: {exc.strerror}") from None


def _image(cfg: Config, path):
    try:
        return load_image(_read(path), cfg.base_address, cfg.evt_offset)
    except ImageError as exc:
        raise _Fail(EXIT_IMAGE, f"{path}: {exc}") from None


def _vector(cfg: Config) -> int:
    return USAGEFAULT if cfg.vector == "usagefault" else HARDFAULT


def _report_path(args) -> Path:
    return Path(args.report) if args.report else Path(str(args.out) + ".report")


def cmd_instrument(args) -> int:
    cfg = load_config(args.config)
    image = _image(cfg, args.input)
    requests = [patcher.SiteRequest(s.address, s.payload_bytes(cfg.root)) for s in cfg.sites]
    try:
        patched, report = patcher.instrument(image, requests, _vector(cfg))
    except patcher.PatchError as exc:
        raise _Fail(EXIT_IMAGE, str(exc)) from None
    _write(args.out, patched.serialize())
    _write(_report_path(args), report.serialize())
    print(f"{len(report.accepted)}/{len(report.sites)} sites instrumented "
          f"({100 * report.fraction:.1f}%), blob {report.blob_size} bytes "
          f"at {report.region_base:#010x}")
    for s in report.rejected:
        print(f"  rejected {s.site:#010x}: {s.reason} {s.detail}".rstrip())
    return EXIT_OK


def cmd_verify(args) -> int:
    from .emu.machine import RamConfig

    cfg = load_config(args.config)
    original = _image(cfg, args.input)
    try:
        patched = load_image(_read(args.out), cfg.base_address, cfg.evt_offset)
    except ImageError as exc:
        raise _Fail(EXIT_IMAGE, f"{args.out}: {exc}") from None
    try:
        report = patcher.InstrumentReport.parse(_report_path(args).read_text())
    except OSError as exc:
        raise _Fail(EXIT_IMAGE, f"cannot read report: {exc.strerror}") from None
    ram = RamConfig(cfg.ram_base, cfg.ram_size)
    res = patcher.verify(original, patched, report, cfg.entries, ram)
    if not res.footprint_ok:
        print(f"FOOTPRINT VIOLATION: {res.detail}")
        return EXIT_FOOTPRINT
    for site, ok in sorted(res.sites.items()):
        print(f"  site {site:#010x}: {'pass' if ok else 'FAIL'}")
    for entry, rep in res.entries.items():
        print(f"  entry {entry:#010x}: {rep}")
    if res.detail:
        print(f"  note: {res.detail}")
    if not res.passed:
        print("BEHAVIOR DIVERGENCE")
        return EXIT_DIVERGENCE
    print("pass")
    return EXIT_OK


def _range(text: str | None, image) -> tuple[int, int]:
    if not text:
        return image.base_address, image.end_address
    lo, sep, hi = text.partition(":")
    if not sep:
        raise _Fail(EXIT_USAGE, f"--range must be START:END, got {text!r}")
    try:
        return int(lo, 16), int(hi, 16)
    except ValueError:
        raise _Fail(EXIT_USAGE, f"--range bounds must be hex, got {text!r}") from None


def cmd_inspect(args) -> int:
    cfg = load_config(args.config)
    image = _image(cfg, args.input)
    lo, hi = _range(args.range, image)
    report = None
    if args.report:
        try:
            report = patcher.InstrumentReport.parse(Path(args.report).read_text())
        except OSError as exc:
            raise _Fail(EXIT_IMAGE, f"cannot read report: {exc.strerror}") from None
    try:
        listing = patcher.inspect(image, lo, hi, report)
    except (ImageError, ValueError) as exc:
        raise _Fail(EXIT_IMAGE, str(exc)) from None
    if args.emit_config:
        sites = [SiteSpec(line.address) for line in listing if line.verdict == "translatable"]
        out = Config(cfg.base_address, cfg.evt_offset, cfg.vector, cfg.ram_base,
                     cfg.ram_size, list(cfg.entries), sites)
        sys.stdout.write(out.dump())
        return EXIT_OK
    for line in listing:
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bmr", description="Trap-based instrumentation of "
                                "raw Cortex-M firmware images.")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, out: bool):
        sp.add_argument("--config", required=True, help="instrumentation config file")
        sp.add_argument("--in", dest="input", required=True, help="original image")
        if out:
            sp.add_argument("--out", required=True, help="patched image")

    sp = sub.add_parser("instrument", help="patch an image")
    common(sp, True)
    sp.add_argument("--report", help="report path (default: OUT.report)")
    sp.set_defaults(func=cmd_instrument)

    sp = sub.add_parser("verify", help="check a patched image against the original")
    common(sp, True)
    sp.add_argument("--report", help="report written by instrument (default: OUT.report)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("inspect", help="decoded listing with translatability")
    common(sp, False)
    sp.add_argument("--range", help="START:END in hex (default: whole image)")
    sp.add_argument("--report", help="annotate hook-region addresses from this report")
    sp.add_argument("--emit-config", action="store_true",
                    help="print a config with one site per translatable instruction")
    sp.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bmr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Fail as exc:
        print(f"bmr: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
