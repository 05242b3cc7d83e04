"""Verification laboratory for an HK_r-integrable function that is not P_1-integrable."""

__version__ = "0.1.0"
