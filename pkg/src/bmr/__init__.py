"""Trap-based static instrumentation for raw Cortex-M firmware images."""

__version__ = "0.1.0"
