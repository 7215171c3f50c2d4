"""Congruence subgroup growth toolkit: exact counts, extremal searches, censuses."""

__version__ = "0.1.0"
