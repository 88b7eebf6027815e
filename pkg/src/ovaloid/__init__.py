"""ovaloid: desk-scale computational convex geometry.

Subpackages cover convex polytope primitives (core), polyhedral intrinsic
metrics and geodesics (intrinsic_metric), generalized Monge-Ampere measures
and solves (ma_solver), the discrete Minkowski problem (minkowski_solver),
and infinitesimal rigidity (rigidity_lab).  ``ovaloid.cli`` ties them into a
command-line tool.
"""

__version__ = "0.1.0"

from . import errors  # noqa: F401
