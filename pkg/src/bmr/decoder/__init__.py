"""Thumb/Thumb-2 decoder, encoder and classifier."""

from .core import (InstrClass, build, classify, classify_raw, decode, decode_bytes,
                   encode, encode_bytes, instr_length, registers_used)
from .instruction import AL, Instruction, Undecodable, Unencodable
from .registers import LR, PC, SP, RegisterSet, parse_reg, reg_name

__all__ = ["AL", "InstrClass", "Instruction", "LR", "PC", "RegisterSet", "SP",
           "Undecodable", "Unencodable", "build", "classify", "classify_raw", "decode",
           "decode_bytes", "encode", "encode_bytes", "instr_length", "parse_reg",
           "reg_name", "registers_used"]
