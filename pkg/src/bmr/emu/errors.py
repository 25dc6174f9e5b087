"""Emulator-level faults (distinct from faults taken inside the guest)."""


class EmuFault(Exception):
    cause = "fault"

    def __init__(self, msg: str, address: int | None = None):
        super().__init__(msg)
        self.address = address


class MemFault(EmuFault):
    cause = "memfault"


class UnsupportedOpcode(EmuFault):
    cause = "unsupported"


class Lockup(EmuFault):
    cause = "lockup"


class InvState(EmuFault):
    cause = "invstate"


class NoHandler(EmuFault):
    cause = "undefined"
