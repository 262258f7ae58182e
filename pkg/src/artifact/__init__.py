"""Connectivity weights of multiple SLE via Coulomb gas contour integrals.

Public modules:

``specfun``
    Gamma, Gauss hypergeometric and elliptic functions plus scalar maps of kappa.
``coulomb``
    Singular quadrature for the Coulomb gas integrals.
``weights``
    Normalized connectivity weights for N <= 4 and rainbow weights for any N.
``functionals``
    Polygon diagrams, limit functionals and numerical verification checks.
``percsim``
    Bond percolation Monte Carlo for the rectangle crossing probability.
``cli``
    Command line front end.

Supporting modules are ``quadrature`` (singular tanh-sinh rules),
``diagrams`` (non-crossing matchings and their numbering) and ``errors``.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
