"""Vectorized one-dimensional rules for singular integrands.

All rules integrate ``|u - lo|^alpha_lo |hi - u|^alpha_hi G(u)`` and fold the
two endpoint powers into the returned weights, so the caller only evaluates
the smooth remainder ``G``. Every quantity may carry leading "outer" axes,
which lets an inner rule depend on the nodes of an outer rule while the node
count stays fixed.

Three devices are combined.

* Tanh-sinh (double exponential) nodes on ``[0, 1]``. The step halves with
  each level, and the coarse weights of the previous level live on the even
  nodes, so one evaluation of the integrand yields two estimates.
* An exponential change of variable near an endpoint, ``w = d (e^tau - 1)``,
  where ``d`` is the distance to the nearest singular point outside the
  interval. This keeps the transformed integrand analytic in a strip of
  fixed width however close that point is.
* A finite-part rule for endpoint exponents at or below ``-1``. A small
  circle around the endpoint gives the Taylor coefficients of ``G`` by a
  discrete Fourier transform, and each coefficient is integrated exactly as
  ``r^(alpha + k + 1) / (alpha + k + 1)``. The result is the analytic
  continuation in ``alpha`` of the ordinary integral.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "FP_THRESHOLD",
    "Rule",
    "interval_rule",
    "product_rule",
    "ts_unit",
]

# Endpoint exponents below this use the finite-part circle rule.
FP_THRESHOLD = -0.95
# Circle rule: node count and retained Taylor terms. With radius one quarter
# of the analyticity radius the neglected terms are below 4^-24.
FP_NODES = 48
FP_TERMS = 24
FP_RADIUS_FRACTION = 0.25
# Split an interval when a singular point lies closer than this many lengths.
SPLIT_RATIO = 0.5
T_REGULAR = 3.2
_TAIL_LOG = 39.0


def _t_limit(alpha: float) -> float:
    """Truncation of the tanh-sinh parameter for an endpoint exponent."""
    if alpha <= -1.0:
        raise ValueError("exponent not integrable")
    target = min(700.0, _TAIL_LOG / (1.0 + alpha))
    return max(2.5, math.asinh(target / math.pi))


@lru_cache(maxsize=256)
def _ts_cached(level: int, t_lo: float, t_hi: float):
    h = 2.0 ** (-level)
    k_lo = int(math.ceil(t_lo / h))
    k_hi = int(math.ceil(t_hi / h))
    # Force even end indices so the coarse grid is a subset.
    k_lo += k_lo % 2
    k_hi += k_hi % 2
    k = np.arange(-k_lo, k_hi + 1)
    t = k * h
    s = math.pi * np.sinh(t)
    xi = 1.0 / (1.0 + np.exp(-s))
    xc = 1.0 / (1.0 + np.exp(s))
    dxi = math.pi * np.cosh(t) * xi * xc
    wf = h * dxi
    wc = np.where(k % 2 == 0, 2.0 * wf, 0.0)
    for arr in (xi, xc, wf, wc):
        arr.setflags(write=False)
    return xi, xc, wf, wc


def ts_unit(level: int, alpha_lo: float = 0.0, alpha_hi: float = 0.0):
    """Tanh-sinh nodes on ``[0, 1]``.

    Parameters
    ----------
    level : int
        Step ``h = 2**-level``.
    alpha_lo, alpha_hi : float
        Endpoint exponents, used only to choose the truncation.

    Returns
    -------
    xi, one_minus_xi, w_fine, w_coarse : ndarray
        Nodes, complementary nodes computed without cancellation, and the
        weights for steps ``h`` and ``2 h``.
    """
    t_lo = round(_t_limit(alpha_lo), 2)
    t_hi = round(_t_limit(alpha_hi), 2)
    return _ts_cached(int(level), t_lo, t_hi)


@lru_cache(maxsize=64)
def _fp_circle_kernel(alpha: float):
    j = np.arange(FP_NODES)
    theta = 2.0 * math.pi * j / FP_NODES
    kk = np.arange(FP_TERMS)
    phase = np.exp(-1j * np.outer(kk, theta))
    coef = 1.0 / (alpha + kk + 1.0)
    kern = (coef[:, None] * phase).sum(axis=0) / FP_NODES
    unit = np.exp(1j * theta)
    unit.setflags(write=False)
    kern.setflags(write=False)
    return unit, kern


class Rule:
    """Nodes and weights of a rule with leading outer axes.

    Attributes
    ----------
    dist_lo, dist_hi : ndarray
        Signed-free distances of the nodes to the two interval ends, computed
        without cancellation. Complex on finite-part circles.
    wf, wc : ndarray
        Fine and coarse weights with the endpoint powers folded in.
    """

    __slots__ = ("dist_lo", "dist_hi", "wf", "wc")

    def __init__(self, dist_lo, dist_hi, wf, wc):
        self.dist_lo = dist_lo
        self.dist_hi = dist_hi
        self.wf = wf
        self.wc = wc

    @property
    def size(self) -> int:
        return self.wf.shape[-1]


def _pow(w, alpha):
    """``w ** alpha`` with nodes that underflowed to zero given zero weight.

    Only integrable exponents reach this point, so such nodes carry a
    negligible share of the integral.
    """
    with np.errstate(divide="ignore", under="ignore"):
        return np.where(w > 0, w ** alpha, 0.0)


def _cat(parts):
    return Rule(*(np.concatenate([getattr(p, a) for p in parts], axis=-1)
                  for a in Rule.__slots__))


def _half(alpha, fp, d, H, L, alpha_far, level):
    """Rule for ``int_0^H w^alpha (L - w)^alpha_far G(w) dw``.

    ``d`` is the distance from the endpoint to the nearest outside singular
    point, ``H <= L / 2`` the half length and ``L`` the full length.
    """
    d = np.asarray(d, dtype=float)[..., None]
    H = np.asarray(H, dtype=float)[..., None]
    L = np.asarray(L, dtype=float)[..., None]
    pieces = []
    if fp:
        r = np.minimum(d, H) * FP_RADIUS_FRACTION
        unit, kern = _fp_circle_kernel(float(alpha))
        w = r * unit
        wt = kern * r ** (alpha + 1.0)
        far = L - w
        wt = wt * far ** alpha_far if alpha_far != 0.0 else wt
        pieces.append(Rule(w, far, wt, wt))
        # Straight part from r to H in the variable w = r exp(tau).
        xi, xc, wf, wc = ts_unit(level, 0.0, 0.0)
        T = np.log(H / r)
        w = r * np.exp(T * xi)
        jac = w ** (alpha + 1.0) * T
        far = L - w
        fac = jac * (far ** alpha_far if alpha_far != 0.0 else 1.0)
        pieces.append(Rule(w, far, fac * wf, fac * wc))
    else:
        xi, xc, wf, wc = ts_unit(level, alpha, 0.0)
        dd = np.minimum(0.5 * d, H)
        T = np.log1p(H / dd)
        tau = T * xi
        w = dd * np.expm1(tau)
        jac = dd * np.exp(tau) * T
        fac = jac * _pow(w, alpha) if alpha != 0.0 else jac
        far = L - w
        if alpha_far != 0.0:
            fac = fac * far ** alpha_far
        pieces.append(Rule(w, far, fac * wf, fac * wc))
    return pieces[0] if len(pieces) == 1 else _cat(pieces)


def interval_rule(L, alpha_lo: float, alpha_hi: float, d_lo, d_hi, level: int,
                  fp_lo: bool | None = None, fp_hi: bool | None = None) -> Rule:
    """Rule for ``int_0^L w^alpha_lo (L - w)^alpha_hi G(w) dw``.

    Parameters
    ----------
    L : array_like
        Interval lengths, possibly with outer axes.
    alpha_lo, alpha_hi : float
        Endpoint exponents. Values below :data:`FP_THRESHOLD` are treated by
        the finite-part rule unless ``fp_lo`` or ``fp_hi`` overrides this.
    d_lo, d_hi : array_like
        Distance from each end to the nearest singular point beyond it.
        Use ``inf`` when there is none.
    level : int
        Tanh-sinh level.

    Returns
    -------
    Rule
        Node distances to the lower end are ``rule.dist_lo``.
    """
    L = np.asarray(L, dtype=float)
    d_lo = np.broadcast_to(np.asarray(d_lo, dtype=float), L.shape)
    d_hi = np.broadcast_to(np.asarray(d_hi, dtype=float), L.shape)
    if fp_lo is None:
        fp_lo = alpha_lo < FP_THRESHOLD
    if fp_hi is None:
        fp_hi = alpha_hi < FP_THRESHOLD
    split = fp_lo or fp_hi or bool(np.any(d_lo < SPLIT_RATIO * L)) \
        or bool(np.any(d_hi < SPLIT_RATIO * L))
    if not split:
        xi, xc, wf, wc = ts_unit(level, alpha_lo, alpha_hi)
        Lx = L[..., None]
        dist_lo = Lx * xi
        dist_hi = Lx * xc
        fac = Lx * np.ones_like(xi)
        if alpha_lo != 0.0:
            fac = fac * _pow(dist_lo, alpha_lo)
        if alpha_hi != 0.0:
            fac = fac * _pow(dist_hi, alpha_hi)
        return Rule(dist_lo, dist_hi, fac * wf, fac * wc)
    H = 0.5 * L
    lower = _half(alpha_lo, fp_lo, d_lo, H, L, alpha_hi, level)
    upper = _half(alpha_hi, fp_hi, d_hi, H, L, alpha_lo, level)
    # Upper half nodes are measured from the upper end.
    upper = Rule(upper.dist_hi, upper.dist_lo, upper.wf, upper.wc)
    return _cat([lower, upper])


def product_rule(a: Rule, b: Rule):
    """Tensor product of two rules sharing outer axes.

    Returns the four node-distance arrays and the two weight arrays,
    flattened over the new trailing pair of axes.
    """
    na, nb = a.size, b.size
    shp = np.broadcast_shapes(a.wf.shape[:-1], b.wf.shape[:-1])

    def ea(x):
        return np.broadcast_to(x[..., :, None], shp + (na, nb)).reshape(shp + (na * nb,))

    def eb(x):
        return np.broadcast_to(x[..., None, :], shp + (na, nb)).reshape(shp + (na * nb,))

    return (ea(a.dist_lo), ea(a.dist_hi), eb(b.dist_lo), eb(b.dist_hi),
            ea(a.wf) * eb(b.wf), ea(a.wc) * eb(b.wc))
