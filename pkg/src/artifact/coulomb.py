"""Coulomb gas integrals over segments, nested segments and Pochhammer loops.

The integrand for ``2N`` marked points ``x_1 < ... < x_2N`` with the
conjugate charge at ``x_c`` and screening variables ``u_1, ..., u_m`` is the
product of

* ``|u - x_l|^(-4/kappa)`` for every ``l != c``,
* ``|u - x_c|^(12/kappa - 2)``,
* ``|u_p - u_q|^(8/kappa)`` for every pair of screening variables,

with every difference oriented so that it is positive on the real line.

A *pattern* places each screening variable in an elementary interval
``(x_j, x_{j+1})``. Variables sharing an interval are ordered from left to
right in the order listed. A pattern integral is the integral of the
integrand over that region. All weight formulas are real linear
combinations of pattern integrals.

When an endpoint exponent is at or below -1 the segment integral diverges.
The engine then returns its analytic continuation in the exponents, which
equals the segment integral obtained from an elementary Pochhammer contour
divided by its trigonometric prefactor. Two variables that share such an
endpoint are integrated jointly in polar-type sector coordinates so that the
joint singularity factorizes into one power per coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NumericalError, UnsupportedRegime
from .quadrature import FP_THRESHOLD, Rule, interval_rule, product_rule

__all__ = [
    "Estimate",
    "PatternIntegral",
    "I3_rect",
    "I_ij",
    "I_ijk",
    "charge_exponents",
    "default_tol",
    "integrate_segment_singular",
    "pattern_integral",
    "pochhammer_elementary",
    "pochhammer_factor",
    "rainbow_chain_integral",
    "rainbow_coefficients",
    "validate_points",
]

MAX_LEVEL = 6
MAX_TENSOR = 3_000_000
TINY = 1e-280
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Estimate:
    """A numerical value with an absolute error estimate."""

    value: float
    err_est: float

    def __iter__(self):
        yield self.value
        yield self.err_est


def default_tol(N: int) -> float:
    """Relative quadrature tolerance used for ``N`` pairs of points."""
    if N <= 2:
        return 1e-10
    if N == 3:
        return 1e-8
    return 1e-6


def validate_points(x: Sequence[float], N: int | None = None) -> np.ndarray:
    """Check that ``x`` is strictly increasing with an even length.

    Raises
    ------
    DomainError
        On a malformed configuration.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 2 or arr.size % 2:
        raise DomainError("a configuration needs an even number >= 2 of points")
    if N is not None and arr.size != 2 * N:
        raise DomainError(f"expected {2 * N} points, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("points must be finite")
    gaps = np.diff(arr)
    if np.any(gaps <= 0.0):
        raise DomainError("points must be strictly increasing")
    diam = arr[-1] - arr[0]
    if gaps.min() <= 1e-12 * diam:
        raise DomainError("points closer than 1e-12 of the diameter; use a limit")
    return arr


def charge_exponents(kappa: float, npoints: int, c: int) -> np.ndarray:
    """Point exponents with the conjugate charge at 1-based index ``c``."""
    e = np.full(npoints, -4.0 / kappa)
    e[c - 1] = 12.0 / kappa - 2.0
    return e


# ---------------------------------------------------------------------------
# Block construction


@dataclass
class _Block:
    kind: str               # "single", "adjacent" or "nested"
    vars: tuple[int, ...]
    # For singles: endpoint references ("x", l) or ("u", v).
    lo: tuple[str, int] | None = None
    hi: tuple[str, int] | None = None
    point: int = -1         # shared point (adjacent) or left point (nested)


def _build_blocks(intervals: Sequence[int], exps: np.ndarray):
    """Group screening variables into integration blocks, outermost first."""
    nvar = len(intervals)
    fp = exps < FP_THRESHOLD
    by_int: dict[int, list[int]] = {}
    for v, j in enumerate(intervals):
        by_int.setdefault(j, []).append(v)
    paired: set[int] = set()
    blocks: list[_Block] = []
    # Nested pairs at a point needing a finite part.
    for j, vs in by_int.items():
        if len(vs) >= 2 and (fp[j] or fp[j + 1]):
            if len(vs) > 2:
                raise UnsupportedRegime(
                    "three or more variables in one interval with a divergent "
                    "endpoint are not supported")
            blocks.append(_Block("nested", (vs[0], vs[1]), point=j))
            paired.update(vs)
    # Adjacent pairs across a point needing a finite part.
    for j in sorted(by_int):
        if j + 1 in by_int and fp[j + 1]:
            left, right = by_int[j], by_int[j + 1]
            a, b = left[-1], right[0]
            if a in paired or b in paired or len(left) > 1 or len(right) > 1:
                raise UnsupportedRegime(
                    "clusters of more than two variables at a divergent point "
                    "are not supported")
            blocks.append(_Block("adjacent", (a, b), point=j + 1))
            paired.update((a, b))
    # Remaining variables: chains inside an interval, rightmost outermost.
    for j, vs in by_int.items():
        free = [v for v in vs if v not in paired]
        if not free:
            continue
        if len(free) != len(vs) and len(vs) > 1:
            raise UnsupportedRegime("mixed pairing inside one interval")
        for k in range(len(vs) - 1, -1, -1):
            v = vs[k]
            hi = ("x", j + 1) if k == len(vs) - 1 else ("u", vs[k + 1])
            blocks.append(_Block("single", (v,), lo=("x", j), hi=hi))
    # Outermost blocks sit furthest to the right; chains keep their order.
    order = {id(b): max(intervals[v] for v in b.vars) for b in blocks}
    blocks.sort(key=lambda b: -order[id(b)])
    seen: set[int] = set()
    for b in blocks:
        if b.kind == "single" and b.hi[0] == "u" and b.hi[1] not in seen:
            raise AssertionError("chain ordering broken")
        seen.update(b.vars)
    assert len(seen) == nvar
    return blocks


# ---------------------------------------------------------------------------
# Pattern integral evaluation


class PatternIntegral:
    """Integral of the Coulomb gas integrand over one pattern.

    Parameters
    ----------
    x : array_like
        Marked points.
    exps : array_like
        Exponent attached to each point.
    g : float
        Exponent between screening variables.
    intervals : sequence of int
        Zero-based interval index ``j`` (meaning ``(x_j, x_{j+1})`` in
        zero-based point labels) for each variable.
    """

    def __init__(self, x, exps, g: float, intervals: Sequence[int]):
        self.x = np.asarray(x, dtype=float)
        self.exps = np.asarray(exps, dtype=float)
        self.g = float(g)
        self.intervals = tuple(int(j) for j in intervals)
        P = self.x.size
        for j in self.intervals:
            if not 0 <= j < P - 1:
                raise DomainError(f"interval index {j} out of range")
        self.blocks = _build_blocks(self.intervals, self.exps)
        nvar = len(self.intervals)
        # Left-to-right rank of each variable for orienting differences.
        self._pos = {}
        for v in range(nvar):
            same = [w for w in range(nvar) if self.intervals[w] == self.intervals[v]]
            self._pos[v] = (self.intervals[v], same.index(v))
        self._absorbed: set[tuple] = set()
        for b in self.blocks:
            if b.kind == "single":
                v = b.vars[0]
                for ref in (b.lo, b.hi):
                    if ref[0] == "x":
                        self._absorbed.add(("x", v, ref[1]))
                    else:
                        self._absorbed.add(("u",) + tuple(sorted((v, ref[1]))))
            else:
                a, c = b.vars
                for v in (a, c):
                    j = self.intervals[v]
                    self._absorbed.add(("x", v, j))
                    self._absorbed.add(("x", v, j + 1))
                self._absorbed.add(("u",) + tuple(sorted((a, c))))

    # -- feature distances -------------------------------------------------
    def _side_distance(self, ref_val, side: int, skip_x: set, skip_u: set,
                       coords: dict, shape):
        """Distance from ``ref_val`` to the nearest feature on one side."""
        out = np.full(shape, np.inf)
        rv = np.real(ref_val)
        for l in range(self.x.size):
            if l in skip_x:
                continue
            dist = (rv - self.x[l]) if side < 0 else (self.x[l] - rv)
            out = np.where(dist > 0, np.minimum(out, np.abs(dist)), out)
        for w, arr in coords.items():
            if w in skip_u:
                continue
            a = _expand(arr, len(shape))
            dist = (rv - np.real(a)) if side < 0 else (np.real(a) - rv)
            out = np.where(dist > 0, np.minimum(out, np.abs(a - ref_val)), out)
        return np.broadcast_to(out, shape)

    # -- block rules ---------------------------------------------------------
    # Each rule returns positions, accurate distances to the two ends of the
    # variable's own interval, and the fine and coarse weights.
    def _single(self, b: _Block, coords: dict, gaps: dict, shape, level: int):
        v = b.vars[0]
        nd = len(shape)
        j = b.lo[1]
        lo = float(self.x[j])
        a_lo = self.exps[j]
        if b.hi[0] == "x":
            hi = float(self.x[b.hi[1]])
            L = np.full(shape, hi - lo)
            a_hi = self.exps[b.hi[1]]
        else:
            w = b.hi[1]
            hi = _expand(coords[w], nd)
            L = np.broadcast_to(np.real(_expand(gaps[w][0], nd)), shape)
            a_hi = self.g
        skip_x = {j} | ({b.hi[1]} if b.hi[0] == "x" else set())
        skip_u = {b.hi[1]} if b.hi[0] == "u" else set()
        d_lo = self._side_distance(lo, -1, skip_x, skip_u, coords, shape)
        d_hi = self._side_distance(hi, +1, skip_x, skip_u, coords, shape)
        # Nested chains can underflow deep inside a tanh-sinh tail.
        dead = L < TINY
        if np.any(dead):
            L = np.where(dead, 1.0, L)
            d_lo = np.where(dead, np.inf, d_lo)
            d_hi = np.where(dead, np.inf, d_hi)
        rule = interval_rule(L, a_lo, a_hi, d_lo, d_hi, level)
        wf, wc = rule.wf, rule.wc
        if np.any(dead):
            wf = np.where(dead[..., None], 0.0, wf)
            wc = np.where(dead[..., None], 0.0, wc)
            rule = Rule(np.where(dead[..., None], 0.0, rule.dist_lo),
                        np.where(dead[..., None], 0.0, rule.dist_hi), wf, wc)
        if b.hi[0] == "x":
            dhi = rule.dist_hi
        else:
            dhi = _expand(gaps[b.hi[1]][1], nd + 1) + rule.dist_hi
        return {v: (lo + rule.dist_lo, rule.dist_lo, dhi)}, wf, wc

    def _adjacent(self, b: _Block, coords: dict, gaps: dict, shape, level: int):
        u_var, v_var = b.vars
        jX = b.point
        A, X, B = self.x[jX - 1], self.x[jX], self.x[jX + 1]
        eA, a, eB, g = self.exps[jX - 1], self.exps[jX], self.exps[jX + 1], self.g
        skip = {jX - 1, jX, jX + 1}
        dA = self._side_distance(A, -1, skip, set(), coords, shape)
        dB = self._side_distance(B, +1, skip, set(), coords, shape)
        L1, L2 = X - A, B - X
        d = 0.5 * min(L1, L2)
        parts = []
        rho_rule = interval_rule(np.full(shape, d), 2 * a + g + 1.0, 0.0,
                                 np.inf, d, level, fp_lo=False, fp_hi=False)
        rho = rho_rule.dist_lo
        for sector in (0, 1):
            far = L2 if sector == 0 else L1
            t_rule = interval_rule(np.ones(rho.shape), a, 0.0, 1.0,
                                   far / rho - 1.0, level)
            t = t_rule.dist_lo
            r = rho[..., None] + 0 * t
            rt = r * t
            if sector == 0:
                xu, xv = r, rt          # distances of u and v from X
            else:
                xu, xv = rt, r
            fac = (1.0 + t) ** g * (L1 - xu) ** eA * (L2 - xv) ** eB
            wf = rho_rule.wf[..., None] * t_rule.wf * fac
            wc = rho_rule.wc[..., None] * t_rule.wc * fac
            parts.append(tuple(_flat2(q) for q in (L1 - xu, xu, xv, L2 - xv, wf, wc)))
        # Rectangle far from X on the left variable.
        ru = interval_rule(np.full(shape, L1 - d), eA, 0.0, dA, d, level)
        rv = interval_rule(np.full(shape, L2), a, eB, d, dB, level)
        ul, uh, vl, vh, wf, wc = product_rule(ru, rv)
        fac = (d + uh) ** a * (d + uh + vl) ** g
        parts.append((ul, d + uh, vl, vh, wf * fac, wc * fac))
        # Rectangle far from X on the right variable.
        ru = interval_rule(np.full(shape, d), 0.0, a, L1 - d, d, level)
        rv = interval_rule(np.full(shape, L2 - d), 0.0, eB, d, dB, level)
        ul, uh, vl, vh, wf, wc = product_rule(ru, rv)
        fac = (L1 - d + ul) ** eA * (d + vl) ** a * (uh + d + vl) ** g
        parts.append((L1 - d + ul, uh, d + vl, vh, wf * fac, wc * fac))
        return _finish_pair(u_var, v_var, A, X, parts, shape)

    def _nested(self, b: _Block, coords: dict, gaps: dict, shape, level: int):
        u_var, v_var = b.vars
        jX = b.point
        X, Y = self.x[jX], self.x[jX + 1]
        aX, aY, g = self.exps[jX], self.exps[jX + 1], self.g
        skip = {jX, jX + 1}
        dX = self._side_distance(X, -1, skip, set(), coords, shape)
        dY = self._side_distance(Y, +1, skip, set(), coords, shape)
        L = Y - X
        H = 0.5 * L
        parts = []
        for side in (0, 1):
            a_near, a_far = (aX, aY) if side == 0 else (aY, aX)
            d_near = dX if side == 0 else dY
            rho_rule = interval_rule(np.full(shape, H), 2 * a_near + g + 1.0, 0.0,
                                     d_near, H, level, fp_lo=False, fp_hi=False)
            rho = rho_rule.dist_lo
            t_rule = interval_rule(np.ones(rho.shape), a_near, g,
                                   d_near[..., None] / rho, L / rho - 1.0, level)
            t = t_rule.dist_lo
            r = rho[..., None] + 0 * t
            rt = r * t
            fac = (L - rt) ** a_far * (L - r) ** a_far
            wf = rho_rule.wf[..., None] * t_rule.wf * fac
            wc = rho_rule.wc[..., None] * t_rule.wc * fac
            if side == 0:
                q = (rt, L - rt, r, L - r)
            else:
                q = (L - r, r, L - rt, rt)
            parts.append(tuple(_flat2(z) for z in q + (wf, wc)))
        # Middle rectangle: v in the right half, u in the left half.
        rv = interval_rule(np.full(shape, H), 0.0, aY, np.inf, dY, level)
        vl = rv.dist_lo
        gap = np.maximum(np.abs(vl), 1e-6 * L)
        ru = interval_rule(np.broadcast_to(H, gap.shape), aX, 0.0,
                           dX[..., None], gap, level)
        ul, uh = ru.dist_lo, ru.dist_hi
        vlx = vl[..., None] + 0 * ul
        fac = (vlx + uh) ** g * (H + uh) ** aY * (H + vlx) ** aX
        wf = rv.wf[..., None] * ru.wf * fac
        wc = rv.wc[..., None] * ru.wc * fac
        vhx = rv.dist_hi[..., None] + 0 * ul
        parts.append(tuple(_flat2(z) for z in (ul, H + uh, H + vlx, vhx, wf, wc)))
        return _finish_pair(u_var, v_var, X, X, parts, shape)

    # -- integrand -----------------------------------------------------------
    def _log_point_factor(self, v: int, u, dlo, dhi):
        j = self.intervals[v]
        out = 0.0
        for l in range(self.x.size):
            if ("x", v, l) in self._absorbed:
                continue
            if l == j:
                diff = dlo
            elif l == j + 1:
                diff = dhi
            elif l < j:
                diff = u - self.x[l]
            else:
                diff = self.x[l] - u
            out = out + self.exps[l] * np.log(diff)
        return out

    def evaluate(self, level: int):
        """Fine and coarse estimates at one tanh-sinh level."""
        # Nodes that underflowed carry zero weight; their values are masked.
        with np.errstate(divide="ignore", invalid="ignore", under="ignore",
                         over="ignore"):
            f, c = self._recurse(0, {}, {}, (), level)
        if not (np.isfinite(f) and np.isfinite(c)):
            raise NumericalError(f"non-finite quadrature sum for pattern {self.intervals}")
        return f, c

    def _recurse(self, bi: int, coords: dict, gaps: dict, shape, level: int):
        b = self.blocks[bi]
        maker = {"single": self._single, "adjacent": self._adjacent,
                 "nested": self._nested}[b.kind]
        new, wf, wc = maker(b, coords, gaps, shape, level)
        n = wf.shape[-1]
        full = shape + (n,)
        wf = np.broadcast_to(wf, full)
        wc = np.broadcast_to(wc, full)
        coords = dict(coords)
        gaps = dict(gaps)
        nd = len(full)
        for v, (pos, dlo, dhi) in new.items():
            coords[v] = np.broadcast_to(pos, full)
            gaps[v] = (np.broadcast_to(dlo, full), np.broadcast_to(dhi, full))
        logf = 0.0
        for v in new:
            logf = logf + self._log_point_factor(v, coords[v], *gaps[v])
        # Pair factors between the new variables and all earlier ones.
        for v in new:
            for w in coords:
                if w == v or (w in new and w < v):
                    continue
                key = ("u",) + tuple(sorted((v, w)))
                if key in self._absorbed:
                    continue
                if self.intervals[v] == self.intervals[w]:
                    # Same interval: subtract accurate offsets from its left end.
                    dv, dw = gaps[v][0], _expand(gaps[w][0], nd)
                    diff = (dv - dw) if self._pos[v] > self._pos[w] else (dw - dv)
                else:
                    # Different intervals: a sum of positive pieces, no cancellation.
                    (r, gr), (l, gl) = ((v, gaps[v]), (w, gaps[w]))
                    if self.intervals[v] < self.intervals[w]:
                        (r, gr), (l, gl) = (l, gl), (r, gr)
                    span = self.x[self.intervals[r]] - self.x[self.intervals[l] + 1]
                    diff = _expand(gr[0], nd) + span + _expand(gl[1], nd)
                logf = logf + self.g * np.log(diff)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            fac = np.exp(logf) if not np.isscalar(logf) else math.exp(logf)
        if bi == len(self.blocks) - 1:
            return _wsum(wf, fac), _wsum(wc, fac)
        fac = np.broadcast_to(fac, full)
        # Bound the memory of the inner tensor by chunking the current axis.
        inner = self._inner_size(bi + 1, level)
        total = inner * n * int(np.prod(shape, dtype=np.int64))
        if total > MAX_TENSOR and n > 1:
            step = max(1, (n * MAX_TENSOR) // total)
            outf, outc = 0.0, 0.0
            for s0 in range(0, n, step):
                sl = (Ellipsis, slice(s0, s0 + step))
                # Outer variables carry fewer axes; align them before slicing.
                sub_c = {k: np.broadcast_to(_expand(a, nd), full)[sl]
                         for k, a in coords.items()}
                sub_g = {k: tuple(np.broadcast_to(_expand(q, nd), full)[sl] for q in a)
                         for k, a in gaps.items()}
                sub_shape = shape + (min(n, s0 + step) - s0,)
                fi, ci = self._recurse(bi + 1, sub_c, sub_g, sub_shape, level)
                outf = outf + _wsum(wf[sl], fac[sl] * fi)
                outc = outc + _wsum(wc[sl], fac[sl] * ci)
            return outf, outc
        fi, ci = self._recurse(bi + 1, coords, gaps, full, level)
        return _wsum(wf, fac * fi), _wsum(wc, fac * ci)

    def _inner_size(self, bi: int, level: int) -> int:
        """Rough node count of blocks ``bi`` onwards, for chunking."""
        per_var = 40 * 2 ** level
        size = 1
        for b in self.blocks[bi:]:
            size *= per_var ** len(b.vars)
        return size

    def integrate(self, tol: float = 1e-10, level: int | None = None,
                  max_level: int = MAX_LEVEL) -> Estimate:
        """Adaptive evaluation to a relative tolerance.

        Parameters
        ----------
        tol : float
            Target relative error.
        level : int, optional
            Fixed tanh-sinh level. Disables adaptivity, which keeps the
            result a smooth function of the points (needed for finite
            differences).
        """
        if level is not None:
            f, c = self.evaluate(level)
            return _as_estimate(f, c)
        lev = _start_level(tol, len(self.intervals))
        best = None
        while True:
            f, c = self.evaluate(lev)
            est = _as_estimate(f, c)
            best = est
            if est.err_est <= tol * max(abs(est.value), 1e-300) or lev >= max_level:
                break
            lev += 1
        if best.err_est > 10 * tol * max(abs(best.value), 1e-300):
            raise NumericalError(
                f"pattern {self.intervals} did not reach tol {tol:g}",
                value=best.value, err_est=best.err_est)
        return best


def _start_level(tol: float, nvar: int) -> int:
    if tol >= 1e-7:
        return 2 if nvar >= 2 else 3
    return 3


def _as_estimate(f, c) -> Estimate:
    f = complex(f)
    c = complex(c)
    mag = max(abs(f), 1e-300)
    if abs(f.imag) > max(IMAG_TOL * mag, 1e-13 * mag) and abs(f.imag) > abs(f - c):
        raise NumericalError(f"imaginary residue {f.imag:g} in a real integral")
    # The coarse rule uses half the nodes, so |f - c| bounds the fine error.
    return Estimate(f.real, abs(f - c) + 1e-15 * mag)


def _wsum(w, f):
    """Weighted sum over the last axis where zero weights mask bad values."""
    with np.errstate(invalid="ignore", over="ignore"):
        t = w * f
    if not np.all(np.isfinite(t)):
        t = np.where(w != 0, t, 0.0)
    return t.sum(axis=-1)


def _expand(arr, ndim: int):
    arr = np.asarray(arr)
    if arr.ndim >= ndim:
        return arr
    return arr.reshape(arr.shape + (1,) * (ndim - arr.ndim))


def _flat2(a):
    a = np.asarray(a)
    return a.reshape(a.shape[:-2] + (a.shape[-2] * a.shape[-1],))


def _finish_pair(u_var, v_var, base_u, base_v, parts, shape):
    """Assemble a pair rule from pieces of accurate end distances.

    Each piece holds ``(u - lo_u, hi_u - u, v - lo_v, hi_v - v, wf, wc)``.
    """
    nd = len(shape)

    def cat(k):
        arrs = [np.broadcast_to(_expand_lead(p[k], nd), shape + (p[k].shape[-1],))
                for p in parts]
        return np.concatenate(arrs, axis=-1)

    ulo, uhi, vlo, vhi, wf, wc = (cat(k) for k in range(6))
    return ({u_var: (base_u + ulo, ulo, uhi), v_var: (base_v + vlo, vlo, vhi)},
            wf, wc)


def _expand_lead(a, nd):
    a = np.asarray(a)
    while a.ndim < nd + 1:
        a = a[None, ...]
    return a


def pattern_integral(x, exps, g, intervals, tol=1e-10, level=None) -> Estimate:
    """Convenience wrapper around :class:`PatternIntegral`."""
    return PatternIntegral(x, exps, g, intervals).integrate(tol=tol, level=level)


# ---------------------------------------------------------------------------
# Rainbow chain


def rainbow_coefficients(N: int, kappa: float) -> dict[tuple[int, ...], float]:
    """Real coefficients reducing the nested rainbow contours to segments.

    The nested Pochhammer contour of level ``m`` entwines ``x_{2N-m}`` with
    everything already inside it. Collapsing each contour onto the real
    axis leaves ``u_m`` on ``(x_{2N-m}, x_{2N})`` with the weight
    ``sin(pi S) / sin(pi beta_m)``, where ``S`` is the total exponent of the
    inner branch points lying to the right of ``u_m`` and
    ``beta_m = (4/kappa)(m + 2) - 2``. Summing these weights over all
    labelings of a sorted pattern gives its coefficient.

    Parameters
    ----------
    N : int
        Number of point pairs, at least 2.
    kappa : float
        SLE speed.

    Returns
    -------
    dict
        Maps a sorted tuple of zero-based interval indices to a coefficient.
    """
    if N < 2:
        raise DomainError("the rainbow chain needs N >= 2")
    try:
        return dict(_rainbow_cached(int(N), float(kappa)))
    except _CoefficientPole:
        # Individual labelings have poles that cancel in each pattern sum.
        # The sums are analytic in kappa, so symmetric averages at two
        # offsets combine to an O(delta^4) value.
        def avg(step):
            lo = dict(_rainbow_cached(int(N), kappa * (1.0 - step)))
            hi = dict(_rainbow_cached(int(N), kappa * (1.0 + step)))
            return {k: 0.5 * (lo[k] + hi[k]) for k in lo}

        one, two = avg(RAINBOW_DELTA), avg(2.0 * RAINBOW_DELTA)
        return {k: (4.0 * one[k] - two[k]) / 3.0 for k in one}


RAINBOW_DELTA = 1e-4
POLE_GUARD = 1e-7


class _CoefficientPole(ArithmeticError):
    pass


@lru_cache(maxsize=64)
def _rainbow_cached(N: int, kappa: float):
    return tuple(_rainbow_coefficients(N, kappa).items())


def _rainbow_coefficients(N: int, kappa: float) -> dict[tuple[int, ...], float]:
    from itertools import permutations, product

    P = 2 * N
    # Exponents as (multiple of 4/kappa, integer shift) pairs.
    a, ac, g = (-1, 0), (3, -2), (2, 0)
    labels = list(range(1, N))
    ranges = [range(P - m - 1, P - 1) for m in labels]   # zero-based intervals
    beta = {m: (m + 2, -2) for m in labels}
    out: dict[tuple[int, ...], float] = {}
    for assign in product(*ranges):
        groups: dict[int, list[int]] = {}
        for m, j in zip(labels, assign):
            groups.setdefault(j, []).append(m)
        keys = sorted(groups)
        pattern = tuple(j for j in keys for _ in groups[j])
        for orders in product(*(permutations(groups[j]) for j in keys)):
            seq = [(j, m) for j, grp in zip(keys, orders) for m in grp]
            pos = {m: i for i, (_, m) in enumerate(seq)}
            w = 1.0
            for m in labels:
                j = assign[m - 1]
                p_s, q_s = 0, 0
                for l in range(max(j + 1, P - m), P):   # zero-based points
                    e = ac if l == P - 1 else a
                    p_s += e[0]
                    q_s += e[1]
                for n in range(1, m):
                    if pos[n] > pos[m]:
                        p_s += g[0]
                w *= _sin_ratio((p_s, q_s), beta[m], kappa)
            out[pattern] = out.get(pattern, 0.0) + w
    return out


def _sin_ratio(num: tuple[int, int], den: tuple[int, int], kappa: float) -> float:
    """``sin(pi S) / sin(pi B)`` for exponents ``p (4/kappa) + q``.

    A vanishing denominator is reported to the caller, which continues the
    pattern sums analytically in kappa.
    """
    S = num[0] * 4.0 / kappa + num[1]
    B = den[0] * 4.0 / kappa + den[1]
    sb = math.sin(math.pi * B)
    if abs(sb) < POLE_GUARD:
        raise _CoefficientPole(kappa)
    return math.sin(math.pi * S) / sb


# ---------------------------------------------------------------------------
# Named integral families


def _family(kappa: float, x, npoints: int, c: int, intervals, tol) -> Estimate:
    x = validate_points(x, npoints // 2)
    if tol is None:
        tol = default_tol(npoints // 2)
    exps = charge_exponents(kappa, npoints, c)
    return PatternIntegral(x, exps, 8.0 / kappa, intervals).integrate(tol=tol)


def I3_rect(kappa: float, x, tol: float | None = None) -> Estimate:
    """Rectangle integral over ``u`` in ``(x_3, x_4)`` with ``c = 3``.

    For ``kappa <= 4`` the endpoint exponent at ``x_4`` is at or below -1 and
    the value is the analytic continuation (the elementary Pochhammer
    integral divided by its trigonometric prefactor).
    """
    return _family(kappa, x, 4, 3, (2,), tol)


def I_ij(kappa: float, i: int, j: int, x, tol: float | None = None) -> Estimate:
    """Hexagon double integral with ``c = 5``.

    ``u_1`` runs over ``(x_5, x_6)`` and ``u_2`` over ``(x_i, x_{i+1})``;
    ``j`` is the interval of ``u_1`` and must be 5 in the hexagon formulas,
    but any pair of distinct 1-based intervals is accepted. By Fubini the
    result is symmetric in ``i`` and ``j``.
    """
    if i == j:
        raise DomainError("I_ij needs distinct intervals")
    for k in (i, j):
        if not 1 <= k <= 5:
            raise DomainError(f"interval index {k} outside 1..5")
    return _family(kappa, x, 6, 5, (i - 1, j - 1), tol)


def I_ijk(kappa: float, i: int, j: int, k: int, x, tol: float | None = None) -> Estimate:
    """Octagon triple integral with ``c = 7``.

    ``u_3`` runs over ``(x_i, x_{i+1})``, ``u_2`` over ``(x_j, x_{j+1})`` and
    ``u_1`` over ``(x_k, x_{k+1})``. When two indices coincide the two
    variables are ordered, so for ``i == j`` the inner variable runs over
    ``(x_i, u_2)`` as a dependent endpoint.
    """
    for m in (i, j, k):
        if not 1 <= m <= 7:
            raise DomainError(f"interval index {m} outside 1..7")
    if i == j == k:
        raise DomainError("all three variables in one interval is not an octagon family")
    return _family(kappa, x, 8, 7, (i - 1, j - 1, k - 1), tol)


def rainbow_chain_integral(kappa: float, x, tol: float | None = None) -> Estimate:
    """Nested rainbow contour integral reduced to real segments, ``c = 2N``.

    The contour of level ``m`` is collapsed onto ``(x_{2N-m}, x_{2N})``. The
    result is the real combination ``sum_P C_P I_P`` of pattern integrals
    with the coefficients of :func:`rainbow_coefficients`; the prefactor
    ``(n Gamma(2 - 8/kappa) / Gamma(1 - 4/kappa)^2)^(N-1)`` and the point
    factors are applied by the caller.

    Raises
    ------
    UnsupportedRegime
        For ``kappa <= 4`` and ``N >= 4``, where three or more variables
        cluster at a point whose exponent needs a finite part.
    """
    x = validate_points(x)
    N = x.size // 2
    if tol is None:
        tol = default_tol(N)
    coef = rainbow_coefficients(N, kappa)
    scale = max(abs(c) for c in coef.values())
    exps = charge_exponents(kappa, 2 * N, 2 * N)
    total, err = 0.0, 0.0
    for pat, c in coef.items():
        if abs(c) <= 1e-11 * scale:
            # Coefficients that vanish analytically come out at rounding level.
            continue
        est = PatternIntegral(x, exps, 8.0 / kappa, pat).integrate(tol=tol)
        total += c * est.value
        err += abs(c) * est.err_est
    return Estimate(total, err)


# ---------------------------------------------------------------------------
# Single segments and elementary Pochhammer contours


def integrate_segment_singular(f: Callable, a: float, b: float, beta_a: float,
                               beta_b: float, tol: float = 1e-12,
                               max_level: int = 8) -> Estimate:
    """``int_a^b (u - a)^beta_a (b - u)^beta_b f(u) du`` by tanh-sinh.

    Parameters
    ----------
    f : callable
        Vectorized smooth part, analytic on ``(a, b)``.
    a, b : float
        Endpoints with ``a < b``.
    beta_a, beta_b : float
        Endpoint exponents, both greater than -1.
    tol : float
        Relative tolerance.

    Raises
    ------
    NumericalError
        If the tolerance is not met at ``max_level``; carries the best value.
    """
    if not a < b:
        raise DomainError("need a < b")
    if beta_a <= -1.0 or beta_b <= -1.0:
        raise DomainError("endpoint exponents must exceed -1")
    L = b - a
    est = None
    for level in range(3, max_level + 1):
        rule = interval_rule(np.asarray(L), beta_a, beta_b, np.inf, np.inf, level,
                             fp_lo=False, fp_hi=False)
        vals = np.asarray(f(a + rule.dist_lo))
        fine = complex((rule.wf * vals).sum())
        coarse = complex((rule.wc * vals).sum())
        value = fine.real if fine.imag == 0.0 else fine
        est = Estimate(value, abs(fine - coarse) + 1e-16 * abs(fine))
        if est.err_est <= tol * max(abs(fine), 1e-300):
            return est
    raise NumericalError(f"segment integral did not reach tol {tol:g}",
                         value=est.value, err_est=est.err_est)


def pochhammer_factor(beta_i: float, beta_j: float) -> complex:
    """``4 exp(i pi (beta_i - beta_j)) sin(pi beta_i) sin(pi beta_j)``."""
    return 4.0 * np.exp(1j * math.pi * (beta_i - beta_j)) \
        * math.sin(math.pi * beta_i) * math.sin(math.pi * beta_j)


def pochhammer_elementary(f: Callable, x_i: float, x_j: float, beta_i: float,
                          beta_j: float, tol: float = 1e-10,
                          eps: float | None = None,
                          method: str = "auto") -> Estimate:
    """Integral of ``(u - x_i)^beta_i (x_j - u)^beta_j f(u)`` on the
    elementary Pochhammer contour entwining ``x_i`` and ``x_j``.

    When both exponents exceed -1 the contour collapses onto the segment
    and the result is :func:`pochhammer_factor` times the segment integral.
    Otherwise the contour is split into two small circles of radius ``eps``
    and the truncated segment between them, which gives

    ``(e^{-2 pi i b_j} - 1) C_i - e^{2 pi i (b_i - b_j)} (e^{-2 pi i b_i} - 1) C_j
    + pochhammer_factor * S_eps``

    with ``C_i``, ``C_j`` the counterclockwise circle integrals, started on
    the real axis facing the other point, and ``S_eps`` the segment from
    ``x_i + eps`` to ``x_j - eps``. The circles use Gauss-Legendre nodes in
    the angle, doubled until the value settles.

    Parameters
    ----------
    f : callable
        Vectorized function analytic within ``eps`` of the contour; it must
        accept complex arguments on the circles.
    eps : float, optional
        Circle radius, by default ``1e-3 * (x_j - x_i)``.
    method : {"auto", "loop"}
        ``"loop"`` forces the circle decomposition even for integrable
        exponents, which gives an independent check of the closed form.

    Returns
    -------
    Estimate
        Complex value with an error estimate.
    """
    if not x_i < x_j:
        raise DomainError("need x_i < x_j")
    if method not in ("auto", "loop"):
        raise DomainError(f"unknown method {method!r}")
    if method == "auto" and beta_i > -1.0 and beta_j > -1.0:
        seg = integrate_segment_singular(f, x_i, x_j, beta_i, beta_j, tol=tol)
        pf = pochhammer_factor(beta_i, beta_j)
        return Estimate(pf * seg.value, abs(pf) * seg.err_est)
    L = x_j - x_i
    if eps is None:
        eps = 1e-3 * L
    if not 0.0 < eps < 0.5 * L:
        raise DomainError("circle radius must lie in (0, (x_j - x_i) / 2)")

    def circle_i(theta):
        u = x_i + eps * np.exp(1j * theta)
        return (eps ** beta_i * np.exp(1j * beta_i * theta)
                * (x_j - u) ** beta_j * f(u) * 1j * eps * np.exp(1j * theta))

    def circle_j(psi):
        u = x_j + eps * np.exp(1j * psi)
        return ((u - x_i) ** beta_i * eps ** beta_j * np.exp(1j * beta_j * (psi + math.pi))
                * f(u) * 1j * eps * np.exp(1j * psi))

    ci, ei = _gauss_legendre(circle_i, 0.0, 2.0 * math.pi, tol)
    cj, ej = _gauss_legendre(circle_j, -math.pi, math.pi, tol)

    def seg_f(u):
        return (u - x_i) ** beta_i * (x_j - u) ** beta_j * f(u)

    # The truncated segment is regular; the exponential map near its ends
    # resolves the branch points at distance eps.
    seg_rule = interval_rule(np.asarray(L - 2 * eps), 0.0, 0.0, eps, eps, 6)
    nodes = x_i + eps + seg_rule.dist_lo
    vals = seg_f(nodes)
    seg = complex((seg_rule.wf * vals).sum())
    seg_err = abs(seg - complex((seg_rule.wc * vals).sum()))
    a = np.exp(-2j * math.pi * beta_j) - 1.0
    b = -np.exp(2j * math.pi * (beta_i - beta_j)) * (np.exp(-2j * math.pi * beta_i) - 1.0)
    pf = pochhammer_factor(beta_i, beta_j)
    value = a * ci + b * cj + pf * seg
    err = abs(a) * ei + abs(b) * ej + abs(pf) * seg_err + 1e-15 * abs(value)
    return Estimate(complex(value), err)


def _gauss_legendre(func: Callable, lo: float, hi: float, tol: float,
                    n0: int = 16, n_max: int = 1024):
    prev = None
    n = n0
    while n <= n_max:
        t, w = np.polynomial.legendre.leggauss(n)
        val = complex(0.5 * (hi - lo) * (w * func(0.5 * (hi - lo) * t + 0.5 * (hi + lo))).sum())
        if prev is not None and abs(val - prev) <= max(tol * abs(val), 1e-300):
            return val, abs(val - prev)
        prev = val
        n *= 2
    raise NumericalError("circle quadrature did not settle", value=prev)
