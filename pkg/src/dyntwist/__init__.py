"""Exact verification engine for dynamical quantum-group twists.

The package builds weight-module representations of the standard
q-deformation of sl2, constructs dynamical R-matrices from twists by
exact rational-function arithmetic, and certifies the defining identities
(difference-shifted Yang-Baxter, shifted cocycle, twistor and twisted
bialgebroid axioms, semiclassical limit) with zero-or-witness residual
reports.
"""

from .scalars import Context, Frac, HBarSeries, Poly, PoleError, Scalar, ScalarError, ShiftError

__all__ = [
    "Context",
    "Frac",
    "HBarSeries",
    "Poly",
    "PoleError",
    "Scalar",
    "ScalarError",
    "ShiftError",
]

__version__ = "0.1.0"
