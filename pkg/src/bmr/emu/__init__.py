"""Cortex-M subset interpreter used as the differential oracle."""
