"""Normalized connectivity weights for N = 1..4 and rainbow weights.

Every weight is a real prefactor times a point factor times a real
combination of Coulomb gas pattern integrals. With
``G(kappa) = Gamma(2 - 8/kappa) / Gamma(1 - 4/kappa)^2`` and the point factor

    prod_{j<k, j,k != c} (x_k - x_j)^(2/kappa) * prod_{k != c} |x_c - x_k|^(1 - 6/kappa),

the formula weights are

* rectangle ``Pi_1 = n G P_3 I_3`` with ``u`` on ``(x_3, x_4)``;
* hexagon ``Pi_1 = n^2 G^2 P_5 (n I_25 - I_15 - I_35) / (n^2 - 2)`` and
  ``Pi_2 = n^2 G^2 P_5 I_45``;
* octagon ``Pi_3 = n^3 G^3 P_7 (I_567 - n I_667)``,
  ``Pi_2 = n^3 G^3 P_7 (n (I_167 - n I_267) + (n^2 - 1)(n I_367 - I_467)) / (n^4 - 3 n^2 + 1)``
  and ``Pi_1 = Pi_0 - n Pi_3 / (n^2 - 2)`` with the helper ``Pi_0`` of
  :func:`weight_oct_pi0`;
* the rainbow ``Pi_{N-1} = (n G)^(N-1) P_{2N} R`` with the reduced chain
  integral ``R`` of :func:`artifact.coulomb.rainbow_chain_integral`.

All other diagrams follow by rotation (:func:`rotate_weight`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import coulomb
from .coulomb import Estimate, I_ij, I_ijk, default_tol, validate_points
from .diagrams import canonical_table
from .errors import DomainError, NumericalError
from .specfun import KappaContext, aspect_from_lambda, fugacity, gamma, hyp2f1

__all__ = [
    "WeightId",
    "WeightValue",
    "aspect_ratio",
    "cardy_crossing",
    "crossing_probabilities",
    "near_singular",
    "point_prefactor",
    "rotate_weight",
    "weight",
    "weight_hex",
    "weight_n1",
    "weight_oct",
    "weight_oct_pi0",
    "weight_rainbow",
    "weight_rect",
    "weight_rect_hyp",
]

SINGULAR_DELTA = 1e-4
SINGULAR_STEP = 1e-3
_MAX_DENOM = 4000


@dataclass(frozen=True)
class WeightValue:
    """A weight value with its error estimate and evaluation mode."""

    value: float
    err_est: float
    kappa_policy: str = "direct"

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class WeightId:
    """Identifies a formula weight.

    ``family`` is one of ``"n1"``, ``"rect"``, ``"hex"``, ``"oct"`` or
    ``"rainbow"``; ``sigma`` is the formula index within the family (always
    1 for the rainbow, whose diagram size is ``N``).
    """

    N: int
    sigma: int
    family: str


# ---------------------------------------------------------------------------
# Prefactors and the near-singular policy


def _gfac(kappa: float) -> float:
    return gamma(2.0 - 8.0 / kappa) / gamma(1.0 - 4.0 / kappa) ** 2


def point_prefactor(x, kappa: float, c: int) -> float:
    """Point factor of the Coulomb gas formula with conjugate charge at ``c``."""
    x = np.asarray(x, dtype=float)
    idx = [i for i in range(x.size) if i != c - 1]
    log = 0.0
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            log += (2.0 / kappa) * math.log(x[idx[b]] - x[idx[a]])
    xc = x[c - 1]
    for i in idx:
        log += (1.0 - 6.0 / kappa) * math.log(abs(xc - x[i]))
    return math.exp(log)


def _singular_points(kind: str) -> list[float]:
    """Values of kappa in (0, 8) where a prefactor of ``kind`` is singular."""
    pts = [8.0 / m for m in range(2, _MAX_DENOM)]            # Gamma(2 - 8/kappa)
    if kind in ("n2", "both"):
        # n^2 = 2  <=>  4/kappa = (2j + 1)/4.
        pts += [16.0 / (2 * j + 1) for j in range(1, _MAX_DENOM)]
    if kind in ("golden", "both"):
        # n^4 - 3 n^2 + 1 = 0  <=>  4/kappa = k/5 with 5 not dividing k.
        pts += [20.0 / k for k in range(3, _MAX_DENOM) if k % 5]
    return [p for p in pts if 0.0 < p < 8.0]


def near_singular(kappa: float, kind: str = "gamma") -> bool:
    """True when kappa lies within ``SINGULAR_DELTA`` of a prefactor singularity.

    ``kind`` selects the set: ``"gamma"`` (poles of ``Gamma(2 - 8/kappa)``),
    ``"n2"`` (adds ``n^2 = 2``), ``"golden"`` (adds ``n^4 - 3 n^2 + 1 = 0``),
    ``"both"`` or ``"none"``.
    """
    if kind == "none":
        return False
    return any(abs(kappa - p) < SINGULAR_DELTA for p in _singular_points(kind))


def _with_policy(fn: Callable[[float], Estimate], kappa: float, kind: str) -> WeightValue:
    """Evaluate ``fn(kappa)`` directly or by even extrapolation around it.

    Near a removable singularity the value is the Richardson combination
    ``(4 A(h) - A(2 h)) / 3`` of the symmetric averages
    ``A(h) = (f(kappa - h) + f(kappa + h)) / 2``, accurate to ``O(h^4)``.
    """
    if not near_singular(kappa, kind):
        est = fn(kappa)
        _check_finite(est)
        return WeightValue(est.value, est.err_est, "direct")
    h = SINGULAR_STEP
    vals, errs = [], []
    for k in (kappa - h, kappa + h, kappa - 2 * h, kappa + 2 * h):
        est = fn(k)
        _check_finite(est)
        vals.append(est.value)
        errs.append(est.err_est)
    a1 = 0.5 * (vals[0] + vals[1])
    a2 = 0.5 * (vals[2] + vals[3])
    value = (4.0 * a1 - a2) / 3.0
    # Quadrature errors plus a heuristic share of the extrapolation step.
    err = (4.0 * (errs[0] + errs[1]) + errs[2] + errs[3]) / 6.0 + abs(a1 - a2) / 15.0
    return WeightValue(value, err, "averaged-near-singular")


def _check_finite(est: Estimate) -> None:
    if not (math.isfinite(est.value) and math.isfinite(est.err_est)):
        raise NumericalError("non-finite weight value", value=est.value,
                             err_est=est.err_est)


def _combine(terms: Sequence[tuple[float, Estimate]], scale: float) -> Estimate:
    value = sum(c * e.value for c, e in terms)
    err = sum(abs(c) * e.err_est for c, e in terms)
    return Estimate(scale * value, abs(scale) * err)


# ---------------------------------------------------------------------------
# Formula weights


def weight_n1(kappa: float, x) -> WeightValue:
    """Two-point weight ``(x_2 - x_1)^(1 - 6/kappa)``."""
    KappaContext(kappa)
    x = validate_points(x, 1)
    return WeightValue((x[1] - x[0]) ** (1.0 - 6.0 / kappa), 0.0)


def _rect1(kappa, x, tol):
    est = coulomb.I3_rect(kappa, x, tol=tol)
    s = fugacity(kappa) * _gfac(kappa) * point_prefactor(x, kappa, 3)
    return Estimate(s * est.value, abs(s) * est.err_est)


def _hex1(kappa, x, tol):
    n = fugacity(kappa)
    i25, i15, i35 = (I_ij(kappa, i, 5, x, tol=tol) for i in (2, 1, 3))
    s = n * n / (n * n - 2.0) * _gfac(kappa) ** 2 * point_prefactor(x, kappa, 5)
    return _combine([(n, i25), (-1.0, i15), (-1.0, i35)], s)


def _hex2(kappa, x, tol):
    n = fugacity(kappa)
    s = n * n * _gfac(kappa) ** 2 * point_prefactor(x, kappa, 5)
    return _combine([(1.0, I_ij(kappa, 4, 5, x, tol=tol))], s)


def _oct_scale(kappa, x):
    n = fugacity(kappa)
    return n, n ** 3 * _gfac(kappa) ** 3 * point_prefactor(x, kappa, 7)


def _oct3(kappa, x, tol):
    n, s = _oct_scale(kappa, x)
    return _combine([(1.0, I_ijk(kappa, 5, 6, 7, x, tol=tol)),
                     (-n, I_ijk(kappa, 6, 6, 7, x, tol=tol))], s)


def _oct2(kappa, x, tol):
    n, s = _oct_scale(kappa, x)
    I = {i: I_ijk(kappa, i, 6, 7, x, tol=tol) for i in (1, 2, 3, 4)}
    terms = [(n, I[1]), (-n * n, I[2]), ((n * n - 1.0) * n, I[3]), (-(n * n - 1.0), I[4])]
    return _combine(terms, s / (n ** 4 - 3.0 * n * n + 1.0))


# Pi_0 coefficients as (power of n, integer factor) per (i, j) of I_ij7.
_PI0_TERMS = (
    ((3, 5), 0, 1), ((3, 4), 1, -1), ((3, 3), 2, 1), ((2, 3), 1, -2),
    ((1, 3), 0, 2), ((2, 5), 1, -1), ((2, 4), 2, 1), ((2, 2), 2, 1),
    ((1, 2), 1, -1), ((1, 5), 0, 1), ((1, 4), 1, -1),
)


def _oct0(kappa, x, tol):
    n, s = _oct_scale(kappa, x)
    terms = [(f * n ** p, I_ijk(kappa, i, j, 7, x, tol=tol)) for (i, j), p, f in _PI0_TERMS]
    return _combine(terms, s / (n * n - 2.0) ** 2)


def _oct1(kappa, x, tol):
    n = fugacity(kappa)
    p0 = _oct0(kappa, x, tol)
    p3 = _oct3(kappa, x, tol)
    r = n / (n * n - 2.0)
    return Estimate(p0.value - r * p3.value, p0.err_est + abs(r) * p3.err_est)


def _rainbow(kappa, x, tol):
    N = len(x) // 2
    est = coulomb.rainbow_chain_integral(kappa, x, tol=tol)
    s = (fugacity(kappa) * _gfac(kappa)) ** (N - 1) * point_prefactor(x, kappa, 2 * N)
    return Estimate(s * est.value, abs(s) * est.err_est)


# (family, formula index) -> (evaluator, singular set, number of pairs)
_FORMULAS = {
    ("rect", 1): (_rect1, "gamma", 2),
    ("hex", 1): (_hex1, "n2", 3),
    ("hex", 2): (_hex2, "gamma", 3),
    ("oct", 1): (_oct1, "n2", 4),
    ("oct", 2): (_oct2, "golden", 4),
    ("oct", 3): (_oct3, "gamma", 4),
}


def _base_value(wid: WeightId, kappa: float, x: np.ndarray, tol) -> WeightValue:
    KappaContext(kappa)
    if wid.family == "n1":
        return weight_n1(kappa, x)
    if wid.family == "rainbow":
        if wid.N < 2:
            raise DomainError("rainbow weights need N >= 2")
        t = default_tol(wid.N) if tol is None else tol
        return _with_policy(lambda k: _rainbow(k, x, t), kappa, "gamma")
    key = (wid.family, wid.sigma)
    if key not in _FORMULAS:
        raise DomainError(f"no formula for {wid}")
    fn, kind, N = _FORMULAS[key]
    t = default_tol(N) if tol is None else tol
    return _with_policy(lambda k: fn(k, x, t), kappa, kind)


def weight_rect(kappa: float, sigma: int, x, tol: float | None = None) -> WeightValue:
    """Rectangle weight ``Pi_sigma`` for ``sigma`` in ``{1, 2}``."""
    x = validate_points(x, 2)
    return weight(kappa, 2, sigma, x, tol=tol)


def weight_rect_hyp(kappa: float, sigma: int, x) -> WeightValue:
    """Rectangle weight through the hypergeometric closed form.

    ``Pi_1`` uses the cross-ratio ``lambda = (x_2 - x_1)(x_4 - x_3) /
    ((x_3 - x_1)(x_4 - x_2))``; ``Pi_2`` replaces ``lambda`` by
    ``1 - lambda``.
    """
    KappaContext(kappa)
    x = validate_points(x, 2)
    if sigma not in (1, 2):
        raise DomainError("rectangle sigma must be 1 or 2")
    x1, x2, x3, x4 = x
    d31, d42 = x3 - x1, x4 - x2
    lam = (x2 - x1) * (x4 - x3) / (d31 * d42)
    lam1 = (x3 - x2) * (x4 - x1) / (d31 * d42)      # 1 - lambda, no cancellation
    if sigma == 2:
        lam, lam1 = lam1, lam

    def f(k):
        pre = gamma(12.0 / k - 1.0) * gamma(4.0 / k) / (gamma(8.0 / k) * gamma(8.0 / k - 1.0))
        v = pre * (d31 * d42) ** (1.0 - 6.0 / k) * lam ** (2.0 / k) \
            * lam1 ** (1.0 - 6.0 / k) * hyp2f1(4.0 / k, 1.0 - 4.0 / k, 8.0 / k, lam)
        return Estimate(v, 1e-14 * abs(v))

    # Gamma(8/kappa - 1) has no poles in (0, 8); Gamma(12/kappa - 1) neither.
    return _with_policy(f, kappa, "none")


def weight_hex(kappa: float, sigma: int, x, tol: float | None = None) -> WeightValue:
    """Hexagon weight ``Pi_sigma``, ``sigma`` in ``1..5``."""
    x = validate_points(x, 3)
    return weight(kappa, 3, sigma, x, tol=tol)


def weight_oct(kappa: float, sigma: int, x, tol: float | None = None) -> WeightValue:
    """Octagon weight ``Pi_sigma``, ``sigma`` in ``1..14``."""
    x = validate_points(x, 4)
    return weight(kappa, 4, sigma, x, tol=tol)


def weight_oct_pi0(kappa: float, x, tol: float | None = None) -> WeightValue:
    """Octagon helper ``Pi_0 = Pi_1 + n Pi_3 / (n^2 - 2)``.

    This is a solution of the system but not a connectivity weight.
    """
    KappaContext(kappa)
    x = validate_points(x, 4)
    t = default_tol(4) if tol is None else tol
    return _with_policy(lambda k: _oct0(k, x, t), kappa, "n2")


def weight_rainbow(kappa: float, N: int, r: int, x, tol: float | None = None) -> WeightValue:
    """Rainbow weight rotated by ``r`` steps.

    ``r = 0`` is the diagram with arcs ``(j, 2N + 1 - j)``; the other
    rotations use :func:`rotate_weight`.
    """
    x = validate_points(x, N)
    if int(r) != r:
        raise DomainError("rotation must be an integer")
    return rotate_weight(WeightId(N, 1, "rainbow"), int(r), kappa, x, tol=tol)


# ---------------------------------------------------------------------------
# Rotation


def _mobius_images(x: np.ndarray, s: int, frac: float):
    """Images of the points under ``f(u) = -1/(u - p)`` with ``p`` in gap ``s``.

    The gap is ``(x_s, x_{s+1})`` in 1-based labels and ``p`` sits at the
    fraction ``frac`` of it. Returns the sorted images and ``log f'(x_i)``.
    """
    p = x[s - 1] + frac * (x[s] - x[s - 1])
    d = x - p
    y = -1.0 / d
    order = [((k + s) % x.size) for k in range(x.size)]
    return y[order], -2.0 * np.log(np.abs(d))


def rotate_weight(base: WeightId, steps: int, kappa: float, x,
                  tol: float | None = None) -> WeightValue:
    """Weight whose diagram is the ``base`` diagram rotated by ``steps``.

    A Mobius map ``f`` sends the points past infinity so that the sorted
    images start at ``x_{s+1}``. The result is
    ``prod_i f'(x_i)^theta_1 * Pi_base(sorted f(x))`` with boundary weight
    ``theta_1 = (6 - kappa) / (2 kappa)``.
    """
    x = validate_points(x)
    N = x.size // 2
    if base.N != N:
        raise DomainError(f"base weight has N={base.N} but {N} pairs were given")
    s = int(steps) % (2 * N)
    if s == 0:
        return _base_value(base, kappa, x, tol)
    theta1 = (6.0 - kappa) / (2.0 * kappa)
    last = None
    for frac in (0.5, 0.25, 0.75):
        y, logjac = _mobius_images(x, s, frac)
        try:
            validate_points(y)
        except DomainError as exc:
            last = exc
            continue
        val = _base_value(base, kappa, y, tol)
        jac = math.exp(theta1 * float(logjac.sum()))
        return WeightValue(jac * val.value, jac * val.err_est, val.kappa_policy)
    raise NumericalError(f"rotated configuration degenerate: {last}")


# ---------------------------------------------------------------------------
# Generic access


def weight(kappa: float, N: int, sigma: int, x, tol: float | None = None) -> WeightValue:
    """Connectivity weight ``Pi_sigma`` in the canonical numbering.

    For ``N >= 5`` only the rainbow diagram and its rotations are available.
    """
    x = validate_points(x, N)
    table = canonical_table(N)
    if not 1 <= sigma <= len(table):
        raise DomainError(f"sigma must lie in 1..{len(table)} for N={N}")
    d = table[sigma - 1]
    if d.base == 0:
        raise DomainError(f"no formula for diagram {d.arcs}")
    if N >= 5:
        wid = WeightId(N, 1, "rainbow")
    else:
        wid = WeightId(N, d.base, d.family)
    return rotate_weight(wid, d.steps, kappa, x, tol=tol)


def crossing_probabilities(a: Sequence[float], kappa: float, x,
                           tol: float | None = None,
                           weights: Sequence[float] | None = None) -> list[float]:
    """Probabilities ``P_s = a_s Pi_s / sum_t a_t Pi_t``.

    Parameters
    ----------
    a : sequence of float
        Non-negative coefficients, one per diagram in canonical order.
    weights : sequence of float, optional
        Precomputed weight values; evaluated when omitted.

    Raises
    ------
    DomainError
        If the denominator is not positive.
    """
    x = validate_points(x)
    N = x.size // 2
    a = [float(v) for v in a]
    if len(a) != len(canonical_table(N)):
        raise DomainError(f"need {len(canonical_table(N))} coefficients")
    if any(v < 0 for v in a) or not any(v > 0 for v in a):
        raise DomainError("coefficients must be non-negative and not all zero")
    if weights is None:
        weights = [weight(kappa, N, s + 1, x, tol=tol).value if a[s] > 0 else 0.0
                   for s in range(len(a))]
    terms = [ai * wi for ai, wi in zip(a, weights)]
    total = math.fsum(terms)
    if not total > 0.0:
        raise DomainError("weights give a non-positive total; expected positive weights")
    return [t / total for t in terms]


def aspect_ratio(x) -> float:
    """Aspect ratio of the rectangle that is the image of four points."""
    x = validate_points(x, 2)
    x1, x2, x3, x4 = x
    lam = (x2 - x1) * (x4 - x3) / ((x3 - x1) * (x4 - x2))
    return aspect_from_lambda(lam)


def cardy_crossing(lam: float) -> float:
    """Top-bottom crossing probability of critical percolation.

    ``Gamma(2/3) / (Gamma(4/3) Gamma(1/3)) lam^(1/3) 2F1(1/3, 2/3; 4/3 | lam)``,
    which is the rectangle weight ``Pi_1`` at ``kappa = 6`` as a function of
    the cross-ratio ``lam``.
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise DomainError("cross-ratio must lie in (0, 1)")
    pref = gamma(2.0 / 3.0) / (gamma(4.0 / 3.0) * gamma(1.0 / 3.0))
    return pref * lam ** (1.0 / 3.0) * hyp2f1(1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, lam)
