"""Verification conditions for effectful higher-order programs via CPS into a
modal fixed-point logic, evaluated under trace, cost and moment algebras."""

__version__ = "0.1.0"
