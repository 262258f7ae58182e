"""Assembled connectivity weights, rotation and crossing probabilities."""

from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from artifact.diagrams import canonical_table
from artifact.errors import DomainError
from artifact.specfun import catalan
from artifact.weights import (
    WeightId,
    aspect_ratio,
    cardy_crossing,
    crossing_probabilities,
    near_singular,
    rotate_weight,
    weight,
    weight_hex,
    weight_n1,
    weight_oct,
    weight_oct_pi0,
    weight_rainbow,
    weight_rect,
    weight_rect_hyp,
)

X4 = (0.0, 0.6, 1.5, 2.3)
X6 = (0.0, 0.4, 1.1, 1.9, 2.6, 3.7)
X8 = (0.0, 0.4, 1.1, 1.9, 2.6, 3.7, 4.5, 5.6)

# Rectangle weights at X4 from the hypergeometric closed form in mpmath
# (30 digits). Keys are kappa; values are (Pi_1, Pi_2).
RECT_ORACLE = {
    6.0: (0.33561684478009096414, 0.66438315521990903586),
    4.5: (0.33359754300742543055, 1.1030465184744819516),
    3.5: (0.2568222606510154721, 1.5677175039788214181),
    2.5: (0.14045665536837995497, 2.6785073378253959053),
    7.0: (0.2335774500530274956, 0.37518322290125578216),
    5.5: (0.35256279731513271034, 0.80030890556672980644),
    4.2: (0.31600020532310696158, 1.2154227599907676271),
}

# Cardy's formula at fixed cross-ratios (mpmath).
CARDY_ORACLE = {
    0.05: 0.21031386827212570576,
    0.25: 0.37354879133423045443,
    0.5: 0.5,
    0.95: 0.78968613172787423435,
}


def test_weight_n1_examples():
    assert weight_n1(6.0, (0.3, 7.1)).value == pytest.approx(1.0, rel=1e-15)
    assert weight_n1(4.0, (0.0, 4.0)).value == pytest.approx(0.5, rel=1e-15)
    assert weight_n1(3.0, (0.0, 1.0)).value == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("kappa", sorted(RECT_ORACLE))
def test_rect_contour_oracle(kappa):
    for sigma in (1, 2):
        expected = RECT_ORACLE[kappa][sigma - 1]
        assert weight_rect(kappa, sigma, X4).value == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("kappa", sorted(RECT_ORACLE))
def test_rect_hypergeometric_oracle(kappa):
    for sigma in (1, 2):
        expected = RECT_ORACLE[kappa][sigma - 1]
        assert weight_rect_hyp(kappa, sigma, X4).value == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize("lam, expected", sorted(CARDY_ORACLE.items()))
def test_cardy_oracle(lam, expected):
    assert cardy_crossing(lam) == pytest.approx(expected, rel=1e-13)


def test_rect_cardy_at_unit_spacing():
    # x = (0, 1, 2, 3) has cross-ratio 1/4.
    assert weight_rect(6.0, 1, (0, 1, 2, 3)).value == pytest.approx(cardy_crossing(0.25), rel=1e-9)


def test_rect_half_at_symmetric_ratio():
    # Unit outer gaps and middle gap b give cross-ratio 1 / (1 + b)^2.
    b = math.sqrt(2.0) - 1.0
    x = (0.0, 1.0, 1.0 + b, 2.0 + b)
    assert weight_rect(6.0, 1, x).value == pytest.approx(0.5, rel=1e-9)
    assert aspect_ratio(x) == pytest.approx(1.0, rel=1e-12)


def test_kappa6_sum_rules():
    assert sum(weight(6.0, 2, s, X4).value for s in (1, 2)) == pytest.approx(1.0, abs=1e-9)
    assert sum(weight(6.0, 3, s, X6).value for s in range(1, 6)) == pytest.approx(1.0, abs=1e-7)


def test_kappa6_sum_rule_octagon():
    total = sum(weight(6.0, 4, s, X8).value for s in range(1, 15))
    assert total == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("N, x", [(2, X4), (3, X6)])
@pytest.mark.parametrize("kappa", [3.3, 4.5, 6.0, 7.2])
def test_translation_and_scaling(N, x, kappa):
    x = np.asarray(x)
    expo = N * (kappa - 6.0) / kappa
    for sigma in range(1, catalan(N) + 1):
        base = weight(kappa, N, sigma, x).value
        assert weight(kappa, N, sigma, x + 2.75).value == pytest.approx(base, rel=1e-9)
        assert weight(kappa, N, sigma, 1.7 * x).value == \
            pytest.approx(1.7 ** expo * base, rel=1e-9)


def test_rotation_identity_and_full_cycle():
    base = WeightId(2, 1, "rect")
    v0 = weight_rect(5.5, 1, X4).value
    assert rotate_weight(base, 0, 5.5, X4).value == pytest.approx(v0, rel=1e-12)
    assert rotate_weight(base, 4, 5.5, X4).value == pytest.approx(v0, rel=1e-12)
    hbase = WeightId(3, 2, "hex")
    h0 = weight_hex(5.5, 2, X6).value
    assert rotate_weight(hbase, 6, 5.5, X6).value == pytest.approx(h0, rel=1e-8)
    assert rotate_weight(hbase, 3, 5.5, X6).value == pytest.approx(h0, rel=1e-7)


@pytest.mark.parametrize("kappa", [3.5, 5.5, 7.0])
def test_rotation_matches_hypergeometric(kappa):
    rot = rotate_weight(WeightId(2, 1, "rect"), 1, kappa, X4).value
    assert rot == pytest.approx(weight_rect_hyp(kappa, 2, X4).value, rel=1e-8)


@pytest.mark.parametrize("kappa", [2.5, 3.5, 4.5, 6.0, 7.0])
def test_rainbow_n2_is_rectangle(kappa):
    assert weight_rainbow(kappa, 2, 0, X4).value == \
        pytest.approx(weight_rect(kappa, 1, X4).value, rel=1e-6)


@pytest.mark.parametrize("kappa", [3.5, 4.5, 6.0, 7.0])
def test_rainbow_n3_is_hexagon_pi2(kappa):
    assert weight_rainbow(kappa, 3, 0, X6).value == \
        pytest.approx(weight_hex(kappa, 2, X6).value, rel=1e-6)


@pytest.mark.parametrize("kappa", [4.5, 6.0])
def test_rainbow_n4_is_octagon_pi3(kappa):
    assert weight_rainbow(kappa, 4, 0, X8).value == \
        pytest.approx(weight_oct(kappa, 3, X8).value, rel=1e-5)


def test_pi0_relation():
    kappa = 5.5
    from artifact.specfun import fugacity

    n = fugacity(kappa)
    p0 = weight_oct_pi0(kappa, X8).value
    p1 = weight_oct(kappa, 1, X8).value
    p3 = weight_oct(kappa, 3, X8).value
    assert p0 == pytest.approx(p1 + n / (n * n - 2) * p3, rel=1e-10)


def test_near_singular_policy():
    assert near_singular(16 / 3, "n2")
    assert not near_singular(16 / 3, "gamma")
    assert near_singular(4.0)
    assert near_singular(20 / 3, "golden")
    assert not near_singular(5.5, "both")
    assert weight_rect(4.0, 1, X4).kappa_policy == "averaged-near-singular"
    assert weight_rect(4.5, 1, X4).kappa_policy == "direct"
    assert weight_hex(16 / 3, 1, X6).kappa_policy == "averaged-near-singular"


def test_near_singular_values_match_hypergeometric():
    for kappa in (4.0, 16 / 3, 8 / 3):
        assert weight_rect(kappa, 1, X4).value == \
            pytest.approx(weight_rect_hyp(kappa, 1, X4).value, rel=1e-8)


def test_positive_on_random_configs():
    # Positivity is a conjectured property: violations are reported, not fatal.
    rng = np.random.default_rng(7)
    failures = []
    for kappa in (3.0, 4.0, 5.0, 6.0, 7.0):
        for N in (2, 3):
            for _ in range(2):
                x = np.cumsum(rng.uniform(0.3, 1.5, 2 * N))
                for sigma in range(1, catalan(N) + 1):
                    v = weight(kappa, N, sigma, x).value
                    if not v > 0:
                        failures.append((kappa, N, sigma, v))
    if failures:
        warnings.warn(f"non-positive weights: {failures}")
    print(f"positivity: {len(failures)} violations")


def test_crossing_probabilities():
    probs = crossing_probabilities([0, 1], 6.0, X4)
    assert probs == [0.0, 1.0]
    probs = crossing_probabilities([1, 1], 6.0, X4)
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)
    assert probs[0] == pytest.approx(weight_rect(6.0, 1, X4).value, rel=1e-9)
    probs = crossing_probabilities([0.3, 2.0, 1.0, 0.1, 5.0], 4.5, X6)
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        crossing_probabilities([0, 0], 6.0, X4)
    with pytest.raises(DomainError):
        crossing_probabilities([1, -1], 6.0, X4)
    with pytest.raises(DomainError):
        crossing_probabilities([1, 1], 6.0, X4, weights=[-1.0, 0.5])


def test_weight_domain_errors():
    with pytest.raises(DomainError):
        weight(6.0, 2, 3, X4)
    with pytest.raises(DomainError):
        weight(8.5, 2, 1, X4)
    with pytest.raises(DomainError):
        weight_rect(6.0, 1, (0, 1, 1, 2))
    with pytest.raises(DomainError):
        weight_rect_hyp(6.0, 3, X4)
    with pytest.raises(DomainError):
        weight(6.0, 5, 2, np.arange(10.0))


def test_every_diagram_has_a_recipe_up_to_four():
    for N in (1, 2, 3, 4):
        for d in canonical_table(N):
            assert d.base > 0
