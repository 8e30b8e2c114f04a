"""Numerical verification of sharp maximal, weighted and trace inequalities for
pseudo-differential operators with symbols in S^m_{rho,delta} classes."""

__version__ = "0.1.0"

from .grid import GridFunction, GridSpec, lp_norm, sobolev_norm, test_function  # noqa: E402,F401
from .symbols import Symbol, SymbolClassParams  # noqa: E402,F401
