"""Limit functionals, duality checks and other verifications of the weights.

Limits are extracted numerically. A function with a power series in a small
parameter ``t`` whose exponents are known up to their coefficients is
sampled on a geometric ladder ``t_k = t_0 2^-k`` and the constant term is
found by fitting the leading exponents exactly to the points with the
smallest ``t``. For a collapse ``x_{i+1} -> x_i`` the exponents are the
combinations ``a gamma + b`` with ``gamma = 8/kappa - 1`` and non-negative
integers ``a, b``.

A full limit sequence for a diagram is realized in one step. The arcs are
placed hierarchically: an arc nested at depth ``d`` has its end points
``t^d`` times closer than its parent, so the limits are taken from the
inside out, and scaling covariance makes the rescaled weight depend on
``t`` alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coulomb import I_ij, I_ijk, default_tol, validate_points
from .diagrams import Diagram, canonical_table, diagram_from_arcs, enumerate_diagrams, \
    rainbow_arcs, rotate_arcs
from .errors import DomainError, NumericalError
from .specfun import KappaContext, fugacity
from .weights import WeightId, _base_value, rotate_weight, weight

__all__ = [
    "LimitResult",
    "Report",
    "check_exceptional_identities",
    "diagram_configuration",
    "duality_matrix",
    "enumerate_diagrams",
    "frobenius_log_fit",
    "hex_identity",
    "oct_identity",
    "octagon_bracket",
    "ladder_extrapolate",
    "limit_collapse",
    "limit_sequence",
    "limit_to_infinity",
    "pde_residual",
    "power_exponents",
    "rainbow_diagonal",
]

LADDER_T0 = 0.05
LADDER_K = 8
ZERO_THRESHOLD = 1e-4
EXPONENT_MERGE = 1e-6
# Relative error beyond which an extrapolated limit is rejected.
NONCONVERGENCE = 1e-2


@dataclass(frozen=True)
class LimitResult:
    """Extrapolated limit.

    Attributes
    ----------
    value, err_est : float
        Limit and error estimate.
    zero : bool
        True when ``|value|`` is below ``1e-4`` times the largest rescaled
        sample, or below ``3 err_est`` with ``err_est`` below ``1e-2`` times
        that sample.
    samples : tuple of float
        Rescaled values along the ladder.
    """

    value: float
    err_est: float
    zero: bool
    samples: tuple[float, ...] = ()


@dataclass
class Report:
    """One verification record, serializable to JSON."""

    check: str
    kappa: float
    config: dict
    value: float
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"check": self.check, "kappa": self.kappa, "config": self.config,
             "value": self.value, "tolerance": self.tolerance, "pass": bool(self.passed)}
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


# ---------------------------------------------------------------------------
# Extrapolation


def power_exponents(kappa: float, count: int) -> list[float]:
    """The ``count`` smallest positive exponents ``a gamma + b``.

    ``gamma = 8/kappa - 1``. Coinciding exponents are merged.
    """
    g = 8.0 / kappa - 1.0
    cand = set()
    for a in range(0, count + 2):
        for b in range(0, count + 2):
            if a == b == 0:
                continue
            cand.add(a * g + b)
    out: list[float] = []
    for e in sorted(cand):
        if e <= 0:
            continue
        if out and abs(e - out[-1]) < EXPONENT_MERGE:
            continue
        out.append(e)
        if len(out) == count:
            break
    return out


def ladder_extrapolate(t: Sequence[float], vals: Sequence[float],
                       exponents: Sequence[float], errs: Sequence[float] | None = None):
    """Constant term of ``sum_e c_e t^e`` fitted to a ladder.

    For each depth ``m`` the first ``m`` exponents are fitted exactly to the
    ``m + 1`` smallest-``t`` points. The depth where consecutive estimates
    agree best is kept. The error estimate is the larger of that
    difference and the change when the same fit is moved one point up the
    ladder, divided by ``2^e - 1`` with ``e`` the first omitted exponent.
    The second term exposes expansions outside the assumed form. The
    ladder is assumed to halve ``t`` at each step.

    Returns
    -------
    value, err_est : float
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(vals, dtype=float)
    order = np.argsort(t)
    t, v = t[order], v[order]
    noise = 0.0 if errs is None else float(np.max(np.asarray(errs, dtype=float)))

    def fit(m: int, start: int):
        tt = t[start: start + m + 1] / t[start + m]
        A = np.ones((m + 1, m + 1))
        for j, e in enumerate(exponents[:m]):
            A[:, j + 1] = tt ** e
        return np.linalg.solve(A, v[start: start + m + 1])[0]

    ests = [v[0]]
    for m in range(1, min(len(exponents), len(t) - 1) + 1):
        try:
            ests.append(fit(m, 0))
        except np.linalg.LinAlgError:
            break
    if len(ests) == 1:
        return float(ests[0]), float(abs(v[0]) + noise)
    diffs = [abs(ests[m] - ests[m - 1]) for m in range(1, len(ests))]
    best = int(np.argmin(diffs[1:])) + 2 if len(diffs) > 1 else 1
    err = diffs[best - 1]
    if best + 1 < len(t):
        # Doubling t scales the leading omitted term t^e by 2^e, so the
        # shifted fit differs by about (2^e - 1) times the error of the fit.
        e = exponents[best] if best < len(exponents) else exponents[-1] + 1.0
        try:
            err = max(err, abs(fit(best, 1) - ests[best]) / (2.0 ** e - 1.0))
        except np.linalg.LinAlgError:
            pass
    return float(ests[best]), float(err + noise)


# ---------------------------------------------------------------------------
# Single limits


def _finish_limit(ts, vals, kappa: float, K: int) -> LimitResult:
    value, err = ladder_extrapolate(ts, vals, power_exponents(kappa, K))
    scale = float(np.max(np.abs(vals)))
    # Zero when negligible on the ladder scale, or consistent with zero
    # within an error that is itself small on that scale.
    zero = abs(value) <= ZERO_THRESHOLD * scale or (
        abs(value) <= 3.0 * err and err <= NONCONVERGENCE * scale)
    if not zero and not err <= NONCONVERGENCE * abs(value):
        raise NumericalError("limit ladder did not converge; the expansion may contain "
                             "a logarithm (try frobenius_log_fit)", value, err)
    return LimitResult(value, err, zero, tuple(vals))


def limit_collapse(F: Callable[[np.ndarray], float], i: int, kappa: float, x,
                   eps0: float | None = None, K: int = LADDER_K) -> LimitResult:
    """``lim (x_{i+1} - x_i)^(6/kappa - 1) F`` with the other points fixed.

    Parameters
    ----------
    F : callable
        Maps a point array to a float.
    i : int
        1-based left index of the collapsing pair; ``x_{i+1}`` moves to
        ``x_i + eps``. The entry ``x[i]`` (0-based) is ignored.
    eps0 : float, optional
        First ladder step, by default 0.05 times the local gap.
    """
    x = np.array(x, dtype=float)
    P = x.size
    if not 1 <= i <= P - 1:
        raise DomainError(f"collapse index must lie in 1..{P - 1}")
    left = x[i - 1]
    if eps0 is None:
        # Distance to the nearest point that stays fixed.
        gaps = [x[i + 1] - left] if i + 1 < P else []
        if i >= 2:
            gaps.append(left - x[i - 2])
        eps0 = 0.05 * (min(gaps) if gaps else x[i] - left)
    p = 6.0 / kappa - 1.0
    ts, vals = [], []
    for k in range(K + 1):
        eps = eps0 * 2.0 ** (-k)
        y = x.copy()
        y[i] = left + eps
        ts.append(eps)
        vals.append(eps ** p * float(F(y)))
    return _finish_limit(ts, vals, kappa, K)


def limit_to_infinity(F: Callable[[np.ndarray], float], kappa: float, x,
                      R0: float | None = None, K: int = LADDER_K) -> LimitResult:
    """``lim (2R)^(6/kappa - 1) F(-R, x_2, ..., x_{2N-1}, R)``.

    The entries ``x[0]`` and ``x[-1]`` are replaced by ``-R`` and ``R``.
    """
    x = np.array(x, dtype=float)
    inner = x[1:-1]
    span = max(abs(inner[0]), abs(inner[-1]), inner[-1] - inner[0], 1e-300) \
        if inner.size else 1.0
    if R0 is None:
        R0 = 20.0 * span
    p = 6.0 / kappa - 1.0
    ts, vals = [], []
    for k in range(K + 1):
        R = R0 * 2.0 ** k
        y = x.copy()
        y[0], y[-1] = -R, R
        ts.append(span / R)
        vals.append((2.0 * R) ** p * float(F(y)))
    return _finish_limit(ts, vals, kappa, K)


# ---------------------------------------------------------------------------
# Full limit sequences


def _forest(arcs):
    """Children lists of a non-crossing matching, roots under key ``None``."""
    arcs = sorted(arcs)
    children: dict = {None: []}
    stack: list = []
    for a, b in arcs:
        while stack and not (stack[-1][0] < a < stack[-1][1]):
            stack.pop()
        parent = stack[-1] if stack else None
        children.setdefault(parent, []).append((a, b))
        children.setdefault((a, b), [])
        stack.append((a, b))
    return children


def diagram_configuration(arcs, t: float) -> np.ndarray:
    """Points realizing the limit sequence of a diagram at scale ``t``.

    With one outermost arc its end points sit at 0 and 1; with several,
    they have length ``t`` and unit spacing. Every nested arc is ``t``
    times shorter than its parent and its children are spread evenly
    inside it.
    """
    arcs = diagram_from_arcs(arcs)
    children = _forest(arcs)
    pos: dict[int, float] = {}

    def place(arc, left, length):
        a, b = arc
        pos[a], pos[b] = left, left + length
        kids = children[arc]
        k = len(kids)
        for j, kid in enumerate(kids):
            c = left + length * (j + 1) / (k + 1)
            sub = length * t
            place(kid, c - 0.5 * sub, sub)

    roots = children[None]
    if len(roots) == 1:
        place(roots[0], 0.0, 1.0)
    else:
        for j, r in enumerate(roots):
            place(r, float(j), t)
    return np.array([pos[v] for v in range(1, 2 * len(arcs) + 1)])


def _arc_factor(arcs, x, kappa) -> float:
    p = 6.0 / kappa - 1.0
    return math.exp(p * sum(math.log(x[b - 1] - x[a - 1]) for a, b in arcs))


def limit_sequence(F: Callable[[np.ndarray], float], arcs, kappa: float,
                   t0: float = LADDER_T0, K: int = LADDER_K) -> LimitResult:
    """Apply the full limit sequence of a diagram to ``F``.

    The rescaled value ``prod_arcs (x_b - x_a)^(6/kappa - 1) F(x(t))`` is
    extrapolated to ``t = 0`` along ``t_k = t0 2^-k``.
    """
    arcs = diagram_from_arcs(arcs)
    ts, vals = [], []
    for k in range(K + 1):
        t = t0 * 2.0 ** (-k)
        x = diagram_configuration(arcs, t)
        ts.append(t)
        vals.append(_arc_factor(arcs, x, kappa) * float(F(x)))
    return _finish_limit(ts, vals, kappa, K)


@dataclass
class DualityMatrix:
    """Matrix of numerical pairings ``[L_s] Pi_t`` with per-entry errors."""

    N: int
    kappa: float
    values: np.ndarray
    errors: np.ndarray
    failures: dict = field(default_factory=dict)

    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.values - np.eye(self.values.shape[0]))))

    def max_off_diagonal(self) -> float:
        off = self.values - np.diag(np.diag(self.values))
        return float(np.max(np.abs(off)))

    def max_diagonal_error(self) -> float:
        return float(np.max(np.abs(np.diag(self.values) - 1.0)))


def duality_matrix(N: int, kappa: float, tol: float | None = None,
                   t0: float = LADDER_T0, K: int = LADDER_K,
                   mode: str = "base", rows: Sequence[int] | None = None,
                   mapper: Callable | None = None) -> DualityMatrix:
    """Numerical duality matrix ``M[s, t] = [L_s] Pi_t``.

    Parameters
    ----------
    mode : {"base", "rotated"}
        ``"base"`` evaluates ``[L_s] Pi_t`` as ``[L_s'] Pi_b`` where ``Pi_t``
        is the formula weight ``Pi_b`` rotated by ``r`` steps and ``s'`` is
        diagram ``s`` rotated by ``-r``. This keeps the Mobius map away from
        the hierarchical configurations. ``"rotated"`` evaluates the rotated
        weights directly.
    rows : sequence of int, optional
        1-based diagram indices to compute; other rows are left as NaN.
    mapper : callable, optional
        ``map``-like callable used to distribute the entries.
    """
    KappaContext(kappa)
    if mode not in ("base", "rotated"):
        raise DomainError(f"unknown mode {mode!r}")
    table = canonical_table(N)
    C = len(table)
    if N >= 5 and rows is None:
        raise DomainError("for N >= 5 only rainbow rows are available; pass rows")
    row_ids = list(range(1, C + 1)) if rows is None else list(rows)
    # In base mode many entries reduce to the same (weight, arcs) pair.
    keys = {}
    for s in row_ids:
        for th in range(1, C + 1):
            keys[(s, th)] = _entry_key(N, s, th, mode)
    unique = sorted(set(keys.values()))
    tasks = [(N, kappa, tol, t0, K, key) for key in unique]
    mapper = map if mapper is None else mapper
    results = dict(zip(unique, mapper(_duality_entry, tasks)))
    vals = np.full((C, C), np.nan)
    errs = np.full((C, C), np.nan)
    failures = {}
    for (s, th), key in keys.items():
        res = results[key]
        if isinstance(res, str):
            failures[(s, th)] = res
            continue
        vals[s - 1, th - 1], errs[s - 1, th - 1] = res
    return DualityMatrix(N, kappa, vals, errs, failures)


def _entry_key(N: int, s: int, th: int, mode: str):
    table = canonical_table(N)
    ds, dt = table[s - 1], table[th - 1]
    if N == 1:
        family, base = "n1", 1
    elif N >= 5:
        family, base = "rainbow", 1
        if dt.base == 0:
            return ("none", 0, 0, ds.arcs)
    else:
        family, base = dt.family, dt.base
    if mode == "base":
        return (family, base, 0, rotate_arcs(ds.arcs, -dt.steps))
    return (family, base, dt.steps, ds.arcs)


def _duality_entry(task):
    N, kappa, tol, t0, K, (family, base, steps, arcs) = task
    if family == "none":
        return "UnsupportedRegime: no formula for this diagram"
    try:
        F = _weight_fn(WeightId(N, base, family), steps, kappa, tol)
        res = limit_sequence(F, arcs, kappa, t0=t0, K=K)
        return res.value, res.err_est
    except (NumericalError, DomainError) as exc:
        return f"{type(exc).__name__}: {exc}"


def rainbow_diagonal(N: int, kappa: float, tol: float | None = None,
                     t0: float = LADDER_T0, K: int = LADDER_K) -> LimitResult:
    """``[L_rainbow] Pi_rainbow`` evaluated with the rainbow formula."""
    KappaContext(kappa)
    F = _weight_fn(WeightId(N, 1, "rainbow"), 0, kappa, tol)
    return limit_sequence(F, rainbow_arcs(N), kappa, t0=t0, K=K)


def _weight_fn(wid: WeightId, steps: int, kappa: float, tol):
    def F(x):
        return rotate_weight(wid, steps, kappa, x, tol=tol).value
    return F


# ---------------------------------------------------------------------------
# PDE residuals


def pde_residual(F: Callable[[np.ndarray], float], kappa: float, x,
                 h: float | None = None):
    """Normalized residuals of the null-state equations and Ward identities.

    Derivatives use fourth-order central differences with step
    ``h = 1e-3 * scale`` by default, ``scale`` being the smallest gap. Each
    residual is divided by the largest magnitude among the individual
    terms of its operator.

    Returns
    -------
    null, ward : ndarray
        ``2N`` and 3 normalized residuals.
    """
    KappaContext(kappa)
    x = validate_points(x)
    P = x.size
    scale = float(np.min(np.diff(x)))
    if h is None:
        h = 1e-3 * scale
    if not 0 < h < 0.25 * scale:
        raise DomainError("step must be positive and well below the smallest gap")
    th = (6.0 - kappa) / (2.0 * kappa)
    f0 = float(F(x))
    cache: dict = {}

    def ev(shift):
        key = tuple(sorted(shift.items()))
        if key not in cache:
            y = x.copy()
            for k, s in shift.items():
                y[k] += s * h
            cache[key] = float(F(y))
        return cache[key]

    d1 = np.empty(P)
    d2 = np.empty(P)
    for k in range(P):
        fm2, fm1, fp1, fp2 = (ev({k: s}) for s in (-2, -1, 1, 2))
        d1[k] = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
        d2[k] = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    null = np.empty(P)
    for j in range(P):
        terms = [kappa / 4.0 * d2[j]]
        for k in range(P):
            if k == j:
                continue
            dx = x[k] - x[j]
            terms.append(d1[k] / dx)
            terms.append(-th / dx ** 2 * f0)
        null[j] = math.fsum(terms) / max(max(abs(t) for t in terms), 1e-300)
    ward_terms = [
        list(d1),
        [x[k] * d1[k] for k in range(P)] + [th * f0] * P,
        [x[k] ** 2 * d1[k] for k in range(P)] + [2.0 * th * x[k] * f0 for k in range(P)],
    ]
    ward = np.array([math.fsum(t) / max(max(abs(v) for v in t), 1e-300) for t in ward_terms])
    return null, ward


# ---------------------------------------------------------------------------
# Exceptional-speed identities


HEX_REFERENCE = (0.0, 0.4, 1.1, 1.9, 2.6, 3.7)
OCT_REFERENCE = (0.0, 0.4, 1.1, 1.9, 2.6, 3.7, 4.5, 5.6)


def hex_identity(kappa: float, x=HEX_REFERENCE, tol: float = 1e-11):
    """``n I_25 - I_15 - I_35`` and the sum of the magnitudes of its terms."""
    n = fugacity(kappa)
    i25, i15, i35 = (I_ij(kappa, i, 5, x, tol=tol).value for i in (2, 1, 3))
    terms = [n * i25, -i15, -i35]
    return math.fsum(terms), sum(abs(v) for v in terms)


def oct_identity(kappa: float, x=OCT_REFERENCE, tol: float = 1e-9):
    """``I_167 - n I_267 + (n^2 - 1) I_367 - n (n^2 - 2) I_467`` and its scale."""
    n = fugacity(kappa)
    I = {i: I_ijk(kappa, i, 6, 7, x, tol=tol).value for i in (1, 2, 3, 4)}
    terms = [I[1], -n * I[2], (n * n - 1.0) * I[3], -n * (n * n - 2.0) * I[4]]
    return math.fsum(terms), sum(abs(v) for v in terms)


def octagon_bracket(kappa: float, x=OCT_REFERENCE, tol: float = 1e-9) -> float:
    """Bracket of the first octagon weight without its prefactor.

    This is the bracket of :func:`artifact.weights.weight_oct_pi0` minus
    ``(n^2 - 2)(n I_567 - n^2 I_667)``. It has a double zero at ``n^2 = 2``.
    """
    from .weights import _PI0_TERMS
    n = fugacity(kappa)
    terms = [f * n ** p * I_ijk(kappa, i, j, 7, x, tol=tol).value
             for (i, j), p, f in _PI0_TERMS]
    i567 = I_ijk(kappa, 5, 6, 7, x, tol=tol).value
    i667 = I_ijk(kappa, 6, 6, 7, x, tol=tol).value
    terms += [-(n * n - 2.0) * n * i567, (n * n - 2.0) * n * n * i667]
    return math.fsum(terms)


def check_exceptional_identities(kappa: float, tol_hex: float = 1e-6,
                                 tol_oct: float = 1e-5, min_order: float = 1.8,
                                 steps: Sequence[float] = (1e-2, 5e-3)) -> list[Report]:
    """Check the linear relations among integrals at exceptional speeds.

    At ``n^2 = 2`` (``kappa = 16/q'``) the hexagon combination vanishes and
    the bracket of the first octagon weight vanishes to second order in
    ``kappa``. At
    ``n^4 - 3 n^2 + 1 = 0`` (``kappa = 20/q'``) the octagon combination
    vanishes.
    """
    KappaContext(kappa)
    n = fugacity(kappa)
    reports: list[Report] = []
    if abs(n * n - 2.0) < 1e-6:
        val, scale = hex_identity(kappa)
        rel = abs(val) / scale
        reports.append(Report("hex_identity", kappa, {"x": list(HEX_REFERENCE)},
                              rel, tol_hex, rel <= tol_hex))
        order, detail = _decay_order(kappa, steps)
        reports.append(Report("octagon_bracket_order", kappa, {"x": list(OCT_REFERENCE),
                                                          "steps": list(steps)},
                              order, min_order, order >= min_order, detail))
    if abs(n ** 4 - 3 * n * n + 1.0) < 1e-6:
        val, scale = oct_identity(kappa)
        rel = abs(val) / scale
        reports.append(Report("oct_identity", kappa, {"x": list(OCT_REFERENCE)},
                              rel, tol_oct, rel <= tol_oct))
    if not reports:
        raise DomainError(f"kappa={kappa!r} is not an exceptional speed with n^2 = 2 "
                          "or n^4 - 3 n^2 + 1 = 0")
    return reports


def _decay_order(kappa: float, steps: Sequence[float]):
    """Fitted order ``m`` in ``|bracket(kappa +- h)| ~ C h^m``."""
    tol = 1e-9
    hs, mags = [], []
    for h in steps:
        b = 0.5 * (abs(octagon_bracket(kappa + h, OCT_REFERENCE, tol))
                   + abs(octagon_bracket(kappa - h, OCT_REFERENCE, tol)))
        hs.append(h)
        mags.append(b)
    lh, lm = np.log(hs), np.log(mags)
    order = float(np.polyfit(lh, lm, 1)[0])
    return order, {"h": hs, "magnitude": mags}


# ---------------------------------------------------------------------------
# Frobenius logarithm fit

NOISE_FLOOR = 1e-15


def _value_and_error(res, rel_noise: float) -> tuple[float, float]:
    if hasattr(res, "err_est"):
        return float(res.value), float(res.err_est)
    if isinstance(res, tuple):
        return float(res[0]), float(res[1])
    v = float(res)
    return v, rel_noise * abs(v)


@dataclass(frozen=True)
class LogFit:
    """Coefficients of ``A e^(1-6/kappa) + B e^p + C e^p log e`` and verdict."""

    A: float
    B: float
    C: float
    sA: float
    sB: float
    sC: float
    log_present: bool
    p: float

    @property
    def verdict(self) -> str:
        return "log present" if self.log_present else "no log"


def frobenius_log_fit(F: Callable[[np.ndarray], float], kappa: float, x,
                      mode: str = "pair", i: int = 1, lam: float = 0.5,
                      eps_range: tuple[float, float] = (1e-4, 1e-2),
                      npoints: int = 24, extra_terms: int = 4,
                      rel_noise: float = 1e-9) -> LogFit:
    """Fit the small-gap expansion of ``F`` with a possible logarithm.

    Parameters
    ----------
    mode : {"pair", "triple"}
        ``"pair"`` moves ``x_{i+1}`` to ``x_i + e``; ``"triple"`` moves
        ``x_{i+1}`` to ``x_i + lam e`` and ``x_{i+2}`` to ``x_i + e``.
    eps_range : (float, float)
        Gap range spanned by ``npoints`` geometric samples.
    extra_terms : int
        Number of higher Frobenius orders included as nuisance terms.
    rel_noise : float
        Relative error assumed when ``F`` returns a bare float. ``F`` may
        instead return an object with ``value`` and ``err_est``.

    Notes
    -----
    The basis is ``e^(1 - 6/kappa)``, ``e^p`` and ``e^p log e`` with
    ``p = 2/kappa`` (pair) or ``6/kappa`` (triple), each continued by
    ``extra_terms`` higher integer orders. Higher powers of the first
    series that coincide with a power of the second are merged into it.
    Weighted least squares uses ``sigma_k = err_est(e_k)``, floored at
    ``1e-15 |F(e_k)|``, and inflates the covariance by the reduced
    residual variance when it exceeds one. The logarithm is declared present when ``|C| > 5 sigma_C``.
    """
    KappaContext(kappa)
    x = np.array(x, dtype=float)
    if mode not in ("pair", "triple"):
        raise DomainError(f"unknown mode {mode!r}")
    p = 2.0 / kappa if mode == "pair" else 6.0 / kappa
    q = 1.0 - 6.0 / kappa
    eps = np.geomspace(eps_range[1], eps_range[0], npoints)
    vals = np.empty(npoints)
    errs = np.empty(npoints)
    for k, e in enumerate(eps):
        y = x.copy()
        if mode == "pair":
            y[i] = x[i - 1] + e
        else:
            y[i] = x[i - 1] + lam * e
            y[i + 1] = x[i - 1] + e
        vals[k], errs[k] = _value_and_error(F(y), rel_noise)
    cols, names = [], []
    powers_b = [p + j for j in range(extra_terms + 1)]
    for j in range(extra_terms + 1):
        cols.append(eps ** (p + j)); names.append(("B", j))
        cols.append(eps ** (p + j) * np.log(eps)); names.append(("C", j))
        # A power that coincides with a B power is already in the basis.
        if j == 0 or min(abs(q + j - b) for b in powers_b) > EXPONENT_MERGE:
            cols.append(eps ** (q + j)); names.append(("A", j))
    A = np.column_stack(cols)
    sigma = np.maximum(errs, NOISE_FLOOR * np.abs(vals)) + 1e-300
    Aw = A / sigma[:, None]
    bw = vals / sigma
    norms = np.linalg.norm(Aw, axis=0)
    An = Aw / norms
    cond = np.linalg.cond(An)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError(f"log-fit basis ill-conditioned (cond={cond:.3g})")
    coef, *_ = np.linalg.lstsq(An, bw, rcond=None)
    resid = bw - An @ coef
    dof = max(1, npoints - A.shape[1])
    s2 = max(float(resid @ resid) / dof, 1.0)
    # Covariance diagonal from the SVD, which keeps it non-negative.
    _, sv, vt = np.linalg.svd(An, full_matrices=False)
    var = s2 * np.sum((vt / sv[:, None]) ** 2, axis=0)
    coef = coef / norms
    if not np.all(np.isfinite(var)) or np.any(var <= 0):
        raise NumericalError("log-fit covariance is not positive definite")
    sd = np.sqrt(var) / norms
    idx = {nm: k for k, nm in enumerate(names)}
    a, b, c = (coef[idx[(s, 0)]] for s in "ABC")
    sa, sb, sc = (sd[idx[(s, 0)]] for s in "ABC")
    return LogFit(float(a), float(b), float(c), float(sa), float(sb), float(sc),
                  bool(abs(c) > 5.0 * sc), p)
