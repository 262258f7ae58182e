"""Coulomb gas integrals: segment rules, Pochhammer loops and pattern integrals."""

from __future__ import annotations

import math

import numpy as np
import pytest

from artifact.coulomb import (
    I3_rect,
    I_ij,
    I_ijk,
    charge_exponents,
    default_tol,
    integrate_segment_singular,
    pochhammer_elementary,
    pochhammer_factor,
    rainbow_chain_integral,
    rainbow_coefficients,
    validate_points,
)
from artifact.errors import DomainError
from artifact.specfun import fugacity

X4 = (0.0, 0.6, 1.5, 2.3)
X6 = (0.0, 0.6, 1.5, 2.3, 3.2, 4.1)

# mpmath oracles (maxdegree 10 tanh-sinh, 20 digits).
I3_ORACLE_K6 = 1.33865938739933611
# Beta(a + 1, b + 1) continued to a <= -1 (mpmath.beta).
BETA_CONTINUATION = {
    (-4 / 3, 0.2): -3.399946324973671828,
    (-1.9, 0.5): -6.2906038751198588362,
    (-2.5, -0.3): -0.53456972295267807973,
}


def one(u):
    return np.ones_like(u)


def test_segment_examples():
    assert integrate_segment_singular(one, 0.0, 1.0, 0.0, 0.0).value == pytest.approx(1.0, rel=1e-14)
    assert integrate_segment_singular(one, 0.0, 1.0, -0.5, -0.5).value == \
        pytest.approx(math.pi, rel=1e-13)
    assert integrate_segment_singular(one, 0.0, 1.0, -4 / 6, 12 / 6 - 2).value == \
        pytest.approx(3.0, rel=1e-13)


def test_segment_smooth_factor_and_error_estimate():
    # int_0^2 u^(-1/3) (2-u)^(1/2) e^u du against a fine composite reference.
    est = integrate_segment_singular(np.exp, 0.0, 2.0, -1 / 3, 0.5, tol=1e-12)
    s = np.linspace(0.0, 1.0, 400_001)[1:-1]
    u = 2.0 * s ** 3 / (s ** 3 + (1 - s) ** 3)
    du = 2.0 * 3 * s ** 2 * (1 - s) ** 2 / (s ** 3 + (1 - s) ** 3) ** 2
    ref = np.sum(u ** (-1 / 3) * (2 - u) ** 0.5 * np.exp(u) * du) / 400_000
    assert est.value == pytest.approx(ref, rel=1e-8)
    assert est.err_est <= 1e-12 * abs(est.value)


def test_segment_domain():
    with pytest.raises(DomainError):
        integrate_segment_singular(one, 1.0, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        integrate_segment_singular(one, 0.0, 1.0, -1.0, 0.0)


def test_pochhammer_closed_form():
    est = pochhammer_elementary(one, 0.0, 1.0, -0.5, -0.5)
    assert est.value == pytest.approx(4 * math.pi, rel=1e-13)


def test_pochhammer_integer_exponents_vanish():
    for bi, bj in ((0, 0), (1, 2), (3, 0)):
        assert abs(pochhammer_elementary(one, 0.0, 1.0, bi, bj).value) < 1e-14


def test_pochhammer_loop_matches_closed_form():
    f = lambda u: 1.0 / (3.0 + u)
    closed = pochhammer_elementary(f, 0.0, 1.0, -0.3, 0.4).value
    loop = pochhammer_elementary(f, 0.0, 1.0, -0.3, 0.4, method="loop").value
    assert abs(loop - closed) <= 1e-10 * abs(closed)


@pytest.mark.parametrize("ab, expected", sorted(BETA_CONTINUATION.items()))
def test_pochhammer_loop_continues_beta(ab, expected):
    a, b = ab
    est = pochhammer_elementary(one, 0.0, 1.0, a, b, method="loop")
    ratio = est.value / pochhammer_factor(a, b)
    assert abs(ratio.imag) < 1e-10
    assert ratio.real == pytest.approx(expected, rel=1e-10)


def test_validate_points():
    assert validate_points([0, 1, 2, 3], 2).tolist() == [0, 1, 2, 3]
    with pytest.raises(DomainError):
        validate_points([0, 1, 1, 3])
    with pytest.raises(DomainError):
        validate_points([0, 1, 2])
    with pytest.raises(DomainError):
        validate_points([0, 1, 2, 3], 3)


def test_charge_exponents():
    e = charge_exponents(6.0, 6, 5)
    assert e[4] == pytest.approx(0.0)
    assert np.allclose(np.delete(e, 4), -4 / 6)
    # With three screening charges the exponents seen by one charge, the two
    # pair exponents included, sum to -2: no singularity at infinity.
    for kappa in (3.0, 4.5, 6.0, 7.3):
        total = charge_exponents(kappa, 8, 7).sum() + 2 * (8 / kappa)
        assert total == pytest.approx(-2.0, abs=1e-13)


def test_default_tolerances():
    assert default_tol(2) == 1e-10
    assert default_tol(3) == 1e-8
    assert default_tol(4) == 1e-6
    assert default_tol(6) == 1e-6


def test_I3_oracle():
    est = I3_rect(6.0, X4)
    assert est.value == pytest.approx(I3_ORACLE_K6, rel=1e-11)
    assert est.err_est < 1e-10


def test_I3_translation():
    for kappa in (6.0, 4.5, 3.0):
        a = I3_rect(kappa, X4).value
        b = I3_rect(kappa, np.add(X4, 7.25)).value
        assert b == pytest.approx(a, rel=1e-10)


def test_I_ij_fubini():
    for i, j in ((1, 5), (2, 5), (4, 5), (1, 3)):
        assert I_ij(6.0, i, j, X6).value == pytest.approx(I_ij(6.0, j, i, X6).value, rel=1e-10)


def test_I_ij_domain():
    with pytest.raises(DomainError):
        I_ij(6.0, 5, 5, X6)
    with pytest.raises(DomainError):
        I_ij(6.0, 6, 5, X6)


def test_I_ij_against_substitution_rule():
    # Independent tensor rule: u = a + L B(s) with B(s) = s^3 / (s^3 + (1-s)^3)
    # flattens both endpoint singularities of I_45 at kappa = 6.
    x = np.asarray(X6)
    k = 6.0
    m = 1200
    s = (np.arange(m) + 0.5) / m
    B = s ** 3 / (s ** 3 + (1 - s) ** 3)
    dB = 3 * s ** 2 * (1 - s) ** 2 / (s ** 3 + (1 - s) ** 3) ** 2

    def nodes(i):
        a, b = x[i - 1], x[i]
        return a + (b - a) * B, (b - a) * dB / m

    u2, w2 = nodes(4)
    u1, w1 = nodes(5)
    exps = charge_exponents(k, 6, 5)

    def point_factor(u):
        return np.prod([np.abs(u - xl) ** e for xl, e in zip(x, exps)], axis=0)

    U1, U2 = np.meshgrid(u1, u2, indexing="ij")
    f = point_factor(U1) * point_factor(U2) * np.abs(U1 - U2) ** (8 / k)
    ref = float(np.einsum("i,j,ij->", w1, w2, f))
    assert I_ij(k, 4, 5, X6).value == pytest.approx(ref, rel=1e-6)


def test_hexagon_vanishing_identity():
    kappa = 16 / 3
    n = fugacity(kappa)
    y = (0.0, 0.4, 1.1, 1.9, 2.6, 3.7)
    a, b, c = (I_ij(kappa, i, 5, y).value for i in (2, 1, 3))
    assert abs(n * a - b - c) <= 1e-6 * (abs(n * a) + abs(b) + abs(c))


def test_octagon_vanishing_identity():
    kappa = 20 / 3
    n = fugacity(kappa)
    y = (0.0, 0.4, 1.1, 1.9, 2.6, 3.7, 4.5, 5.6)
    t = [I_ijk(kappa, i, 6, 7, y).value for i in (1, 2, 3, 4)]
    terms = [t[0], -n * t[1], (n * n - 1) * t[2], -n * (n * n - 2) * t[3]]
    assert abs(sum(terms)) <= 1e-5 * sum(abs(v) for v in terms)


def test_I_ijk_fubini():
    # Swapping the roles of the outer variables leaves the integral unchanged.
    x = range(8)
    assert I_ijk(6.0, 1, 6, 7, x).value == pytest.approx(I_ijk(6.0, 6, 1, 7, x).value, rel=1e-8)


def test_I_ijk_dependent_endpoint_symmetry():
    # I_{667}: two ordered variables in one interval cover half of the square.
    x = np.arange(8.0)
    est = I_ijk(6.0, 6, 6, 7, x)
    assert est.value > 0 and np.isfinite(est.value)
    with pytest.raises(DomainError):
        I_ijk(6.0, 7, 7, 7, x)


def test_continuation_is_real_below_four():
    for kappa in (3.0, 3.5, 3.999):
        est = I3_rect(kappa, X4)
        assert isinstance(est.value, float) and np.isfinite(est.value)


def test_rainbow_coefficients_leading_pattern():
    for N in (2, 3, 4):
        coef = rainbow_coefficients(N, 5.5)
        assert coef[tuple(range(N, 2 * N - 1))] == pytest.approx(1.0)
    # N = 3 correction pattern: the second variable joins the first interval.
    coef = rainbow_coefficients(3, 5.5)
    assert coef[(4, 4)] == pytest.approx(-fugacity(5.5), rel=1e-12)


def test_rainbow_coefficients_pole_continuation():
    # At kappa = 6 some N = 5 labelings hit 0/0; the pattern sums stay smooth.
    mid = rainbow_coefficients(5, 6.0)
    lo = rainbow_coefficients(5, 6.0 - 1e-3)
    hi = rainbow_coefficients(5, 6.0 + 1e-3)
    for k in mid:
        assert mid[k] == pytest.approx(0.5 * (lo[k] + hi[k]), abs=1e-5)


@pytest.mark.slow
def test_rainbow_n5_scaling_covariance():
    from artifact.weights import weight_rainbow

    x = np.array([0.0, 0.7, 1.5, 2.1, 3.4, 4.0, 4.9, 5.5, 6.8, 7.7])
    a = weight_rainbow(6.0, 5, 0, x, tol=1e-4).value
    b = weight_rainbow(6.0, 5, 0, 2.0 * x + 1.0, tol=1e-4).value
    assert np.isfinite(a) and a > 0
    # Exponent N (kappa - 6) / kappa vanishes at kappa = 6.
    assert b == pytest.approx(a, rel=1e-6)
