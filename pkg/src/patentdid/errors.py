"""Error taxonomy shared across the package.

Two failure families matter downstream: bad inputs (schema, ranges,
contract violations) and numerical breakdowns (rank deficiency,
separation, non-finite objectives). The CLI maps them to distinct exit
codes; I/O problems surface as the builtin OSError family.
"""
from __future__ import annotations


class ValidationError(ValueError):
    """Input or contract violation: malformed rows, bad ranges, misuse."""


class EstimationError(RuntimeError):
    """Numerical failure: collinearity, perfect separation, degenerate fits."""


EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3
