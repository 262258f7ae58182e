"""Special functions and scalar maps of the SLE speed kappa.

Everything here works on Python floats. The Gamma function uses a Lanczos
approximation with the reflection formula for arguments below one half.
The Gauss hypergeometric function is summed as a power series near the
origin and through the ``z -> 1 - z`` connection formula near one. The
complete elliptic integral of the first kind uses the arithmetic-geometric
mean.

Aspect ratio convention
-----------------------
The rectangle aspect ratio is tied to the cross-ratio by
``R = K(1 - lambda) / K(lambda)``, so ``R -> infinity`` as ``lambda -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, NumericalError

__all__ = [
    "KappaContext",
    "aspect_from_lambda",
    "catalan",
    "central_charge",
    "elliptic_k",
    "elliptic_k_complement",
    "exceptional_pair",
    "fugacity",
    "gamma",
    "hyp2f1",
    "lambda_from_aspect",
    "rgamma",
    "theta_s",
]

# Lanczos coefficients for g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

HYP_SERIES_SWITCH = 0.7
HYP_MAX_TERMS = 200_000
RATIONAL_DENOMINATOR_CAP = 64
RATIONAL_TOL = 1e-12


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def gamma(x: float) -> float:
    """Gamma function of a real argument.

    Parameters
    ----------
    x : float
        Argument. Non-positive integers are poles.

    Returns
    -------
    float
        ``Gamma(x)``.

    Raises
    ------
    DomainError
        If ``x`` is a non-positive integer.
    """
    x = float(x)
    if _is_nonpositive_integer(x):
        raise DomainError(f"Gamma has a pole at {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    # Split the power so that moderate arguments do not overflow early.
    half = t ** (0.5 * (z + 0.5))
    return _SQRT_2PI * half * half * math.exp(-t) * acc


def rgamma(x: float) -> float:
    """Reciprocal Gamma function, equal to zero at the poles of Gamma."""
    x = float(x)
    if _is_nonpositive_integer(x):
        return 0.0
    return 1.0 / gamma(x)


def _hyp2f1_series(a: float, b: float, c: float, z: float) -> float:
    if _is_nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for c = {c!r}")
    total = 1.0
    term = 1.0
    for k in range(HYP_MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= 1e-17 * abs(total) and k > 2:
            return total
    raise NumericalError(
        f"2F1 series did not converge for a={a}, b={b}, c={c}, z={z}",
        value=total, err_est=abs(term))


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function for real ``z`` in ``[0, 1)``.

    Parameters
    ----------
    a, b, c : float
        Parameters. ``c`` must not be a non-positive integer.
    z : float
        Argument in ``[0, 1)``.

    Returns
    -------
    float
        ``2F1(a, b; c; z)``.

    Notes
    -----
    The power series is used for ``z <= 0.7``. Above that the connection
    formula to ``1 - z`` is applied, unless ``c - a - b`` is an integer. In
    that degenerate case the two connection terms have poles that cancel, so
    the series is summed directly instead (it still converges for ``z < 1``).
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if not 0.0 <= z < 1.0:
        raise DomainError(f"hyp2f1 needs z in [0, 1), got {z!r}")
    if _is_nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for c = {c!r}")
    if z <= HYP_SERIES_SWITCH:
        return _hyp2f1_series(a, b, c, z)
    s = c - a - b
    if abs(s - round(s)) < 1e-9:
        return _hyp2f1_series(a, b, c, z)
    w = 1.0 - z
    t1 = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b)
    t2 = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b)
    out = 0.0
    if t1 != 0.0:
        out += t1 * _hyp2f1_series(a, b, 1.0 - s, w)
    if t2 != 0.0:
        out += t2 * w ** s * _hyp2f1_series(c - a, c - b, 1.0 + s, w)
    return out


def _agm(x: float, y: float) -> float:
    for _ in range(64):
        if abs(x - y) <= 1e-16 * x:
            break
        x, y = 0.5 * (x + y), math.sqrt(x * y)
    return 0.5 * (x + y)


def elliptic_k(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention.

    ``K(m) = integral_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt`` for ``m`` in
    ``(0, 1)``.
    """
    m = float(m)
    if not 0.0 < m < 1.0:
        raise DomainError(f"elliptic_k needs m in (0, 1), got {m!r}")
    return elliptic_k_complement(1.0 - m) if m > 0.5 else \
        0.5 * math.pi / _agm(1.0, math.sqrt(1.0 - m))


def elliptic_k_complement(m1: float) -> float:
    """``K(1 - m1)`` computed from ``m1`` without forming ``1 - m1``."""
    m1 = float(m1)
    if not 0.0 < m1 < 1.0:
        raise DomainError(f"complementary parameter must be in (0, 1), got {m1!r}")
    return 0.5 * math.pi / _agm(1.0, math.sqrt(m1))


def aspect_from_lambda(lam: float) -> float:
    """Aspect ratio ``R = K(1 - lambda) / K(lambda)``."""
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam!r}")
    k_lam = 0.5 * math.pi / _agm(1.0, math.sqrt(1.0 - lam))
    k_co = elliptic_k_complement(lam)
    return k_co / k_lam


def lambda_from_aspect(R: float) -> float:
    """Invert :func:`aspect_from_lambda` by bisection.

    The bisection runs on ``t = log(lambda / (1 - lambda))`` so that very long
    or very flat rectangles keep full relative accuracy in ``lambda``.
    """
    R = float(R)
    if not R > 0.0 or not math.isfinite(R):
        raise DomainError(f"aspect ratio must be positive, got {R!r}")
    if R == 1.0:
        return 0.5
    lo, hi = -700.0, 700.0
    # The aspect ratio decreases along t.
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _aspect_logit(mid) > R:
            lo = mid
        else:
            hi = mid
    return _expit(0.5 * (lo + hi))


def _aspect_logit(t: float) -> float:
    if t > 0.0:
        return 1.0 / _aspect_logit(-t)
    lam = _expit(t)
    return elliptic_k_complement(lam) / (0.5 * math.pi / _agm(1.0, math.sqrt(1.0 - lam)))


def _expit(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def fugacity(kappa: float) -> float:
    """Loop fugacity ``n(kappa) = -2 cos(4 pi / kappa)``."""
    kappa = float(kappa)
    if not kappa > 0.0:
        raise DomainError(f"kappa must be positive, got {kappa!r}")
    return -2.0 * math.cos(4.0 * math.pi / kappa)


def central_charge(kappa: float) -> float:
    """Central charge ``(6 - kappa)(3 kappa - 8) / (2 kappa)``."""
    kappa = float(kappa)
    if not kappa > 0.0:
        raise DomainError(f"kappa must be positive, got {kappa!r}")
    return (6.0 - kappa) * (3.0 * kappa - 8.0) / (2.0 * kappa)


def theta_s(s: int, kappa: float) -> float:
    """Boundary conformal weight ``s (2 s + 4 - kappa) / (2 kappa)``."""
    kappa = float(kappa)
    if not kappa > 0.0:
        raise DomainError(f"kappa must be positive, got {kappa!r}")
    if s < 0:
        raise DomainError("s must be a non-negative integer")
    return s * (2.0 * s + 4.0 - kappa) / (2.0 * kappa)


def catalan(N: int) -> int:
    """Catalan number ``(2N)! / (N! (N + 1)!)`` as an exact integer."""
    if int(N) != N or N < 1:
        raise DomainError(f"catalan needs a positive integer, got {N!r}")
    N = int(N)
    return math.comb(2 * N, N) // (N + 1)


def exceptional_pair(kappa: float) -> tuple[int, int] | None:
    """Detect ``kappa = 4 q / q'`` with coprime ``q > 1``.

    Rational reconstruction of ``kappa / 4`` uses continued fractions with
    denominator at most 64 and accepts the result when it matches to 1e-12.
    """
    ratio = float(kappa) / 4.0
    frac = Fraction(ratio).limit_denominator(RATIONAL_DENOMINATOR_CAP)
    if abs(ratio - frac.numerator / frac.denominator) > RATIONAL_TOL:
        return None
    if frac.numerator <= 1:
        return None
    return frac.numerator, frac.denominator


@dataclass(frozen=True)
class KappaContext:
    """SLE speed together with the quantities derived from it.

    Parameters
    ----------
    kappa : float
        SLE speed, strictly between 0 and 8.

    Attributes
    ----------
    fugacity : float
        ``n(kappa)``.
    central_charge : float
        ``c(kappa)``.
    exceptional : tuple of int or None
        ``(q, q')`` when ``kappa = 4 q / q'``.
    """

    kappa: float
    fugacity: float = field(init=False)
    central_charge: float = field(init=False)
    exceptional: tuple[int, int] | None = field(init=False)

    def __post_init__(self) -> None:
        k = float(self.kappa)
        if not 0.0 < k < 8.0:
            raise DomainError(f"kappa must lie in (0, 8), got {self.kappa!r}")
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "fugacity", fugacity(k))
        object.__setattr__(self, "central_charge", central_charge(k))
        object.__setattr__(self, "exceptional", exceptional_pair(k))
