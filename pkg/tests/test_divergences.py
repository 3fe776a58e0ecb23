import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from priordetect import divergences as dv
from priordetect.density_models import DEFAULT_DISCRETE, DiscretePair, GaussianPair, build_appendix_a

import oracles

GAUSS = GaussianPair(0.0, 2.0, 1.0)
SAME = GaussianPair(1.0, 1.0, 1.0, degenerate=True)
DISJOINT = DiscretePair((0, 1), (1.0, 0.0), (0.0, 1.0))


@pytest.mark.parametrize("fn", [dv.total_variation, dv.hellinger_sq, dv.chi_sq, dv.kl_divergence])
def test_identical_densities_have_zero_distance(fn):
    assert fn(SAME) == pytest.approx(0.0, abs=1e-12)
    assert fn(DiscretePair((0, 1), (0.3, 0.7), (0.3, 0.7))) == 0.0


def test_disjoint_supports():
    assert dv.total_variation(DISJOINT) == 1.0
    assert dv.hellinger_sq(DISJOINT) == 2.0
    assert dv.chi_sq(DISJOINT) == math.inf
    assert dv.kl_divergence(DISJOINT) == math.inf


def test_gaussian_closed_forms():
    assert dv.total_variation(GAUSS) == pytest.approx(2 * stats.norm.cdf(1) - 1, abs=1e-8)
    assert dv.hellinger_sq(GAUSS) == pytest.approx(2 * (1 - math.exp(-0.5)), abs=1e-8)
    assert dv.chi_sq(GAUSS) == pytest.approx(math.e**4 - 1, rel=1e-9)
    assert dv.kl_divergence(GAUSS) == pytest.approx(2.0, abs=1e-8)


@given(d=st.floats(0.1, 3.0), s=st.floats(0.5, 2.0))
def test_gaussian_family_closed_forms(d, s):
    pair = GaussianPair(0.0, d, s)
    r = d / s
    assert dv.total_variation(pair) == pytest.approx(2 * stats.norm.cdf(r / 2) - 1, abs=1e-8)
    assert dv.hellinger_sq(pair) == pytest.approx(2 * (1 - math.exp(-r * r / 8)), abs=1e-8)
    assert dv.chi_sq(pair) == pytest.approx(math.expm1(r * r), rel=1e-8, abs=1e-10)


def test_discrete_exact_sums():
    assert dv.total_variation(DEFAULT_DISCRETE) == pytest.approx(0.5, abs=1e-15)
    h = (math.sqrt(0.3) - math.sqrt(0.8)) ** 2 + (math.sqrt(0.7) - math.sqrt(0.2)) ** 2
    assert dv.hellinger_sq(DEFAULT_DISCRETE) == pytest.approx(h, abs=1e-15)
    assert dv.chi_sq(DEFAULT_DISCRETE) == pytest.approx(0.09 / 0.8 + 0.49 / 0.2 - 1, abs=1e-14)


def test_symmetry_and_order_sensitivity():
    pair = GaussianPair(0.0, 1.0, 1.0)
    swapped = GaussianPair(1.0, 0.0, 1.0)
    assert dv.total_variation(pair) == pytest.approx(dv.total_variation(swapped), abs=1e-12)
    assert dv.hellinger_sq(pair) == pytest.approx(dv.hellinger_sq(swapped), abs=1e-12)
    assert dv.kl_divergence(DEFAULT_DISCRETE) != pytest.approx(dv.kl_divergence(DEFAULT_DISCRETE, reverse=True))
    assert dv.chi_sq(DEFAULT_DISCRETE) != pytest.approx(dv.chi_sq(DEFAULT_DISCRETE, reverse=True))


def test_divergence_tags_and_ranges(mixture_corpus):
    for _, pair, _ in mixture_corpus:
        for kind in dv.KINDS:
            v = dv.divergence(pair, kind)
            assert v.kind == kind and v.method == "quadrature" and v.value >= 0
        assert dv.total_variation(pair) <= 1 and dv.hellinger_sq(pair) <= 2
    with pytest.raises(ValueError):
        dv.divergence(GAUSS, "wasserstein")


def test_inequality_chain_on_corpus(mixture_corpus):
    for _, pair, _ in mixture_corpus:
        v, h, c = dv.total_variation(pair), dv.hellinger_sq(pair), dv.chi_sq(pair)
        assert v * v <= h + 1e-6
        assert h <= c + 1e-6


# ---- Bernoulli and joint KL


def test_bernoulli_kl_values():
    assert dv.bernoulli_kl(0.5, 0.5) == 0.0
    assert dv.bernoulli_kl(0.25, 0.5) == pytest.approx(0.25 * math.log(0.5) + 0.75 * math.log(1.5), abs=1e-15)
    assert dv.bernoulli_kl(0.25, 0.5) == pytest.approx(0.130812, abs=1e-6)
    assert dv.bernoulli_kl(0.0, 0.3) == pytest.approx(-math.log(0.7))
    assert dv.bernoulli_kl(0.5, 0.0) == math.inf
    assert dv.bernoulli_kl(0.5, 1.0) == math.inf


def test_bernoulli_kl_quadratic_bound_on_full_grid():
    grid = np.round(np.arange(-0.25, 0.2501, 0.01), 10)
    bad = [(p, q) for p in grid for q in grid if dv.bernoulli_kl(0.5 - p, 0.5 - q) > 8 * (p - q) ** 2]
    assert bad == []


def test_joint_kl_reduces_to_bernoulli():
    assert dv.labeled_joint_kl(GAUSS, 0.4, 0.4) == 0.0
    assert dv.labeled_joint_kl(GAUSS, 0.6, 0.5) == dv.bernoulli_kl(0.6, 0.5)


@pytest.mark.parametrize("qa,qb", [(0.6, 0.5), (0.3, 0.45), (0.51, 0.5)])
def test_joint_kl_against_quadrature(qa, qb):
    ref = oracles.joint_kl(lambda x: stats.norm.pdf(x, 0, 1), lambda x: stats.norm.pdf(x, 2, 1), -12, 14, qa, qb)
    assert dv.labeled_joint_kl(GAUSS, qa, qb) == pytest.approx(ref, abs=1e-8)
    pair = build_appendix_a(2, 0.01, 0.1)
    ref = oracles.joint_kl(pair.p0, pair.p1, 0, 1, qa, qb, points=(0.1,))
    assert dv.labeled_joint_kl(pair, qa, qb) == pytest.approx(ref, abs=1e-8)


# ---- Fisher information and mixture shifts


def test_fisher_information_edge_cases():
    assert dv.fisher_information_unlabeled(SAME, 0.3) == pytest.approx(0.0, abs=1e-14)
    for q in (0.2, 0.5, 0.9):
        assert dv.fisher_information_unlabeled(DISJOINT, q) == pytest.approx(1 / (q * (1 - q)), rel=1e-14)


def test_fisher_information_against_variance_of_score():
    q = 0.35
    rng = np.random.default_rng(3)
    n = 400_000
    y = rng.random(n) < q
    x = np.where(y, 2.0, 0.0) + rng.standard_normal(n)
    f0, f1 = stats.norm.pdf(x, 0, 1), stats.norm.pdf(x, 2, 1)
    score = (f1 - f0) / (q * f1 + (1 - q) * f0)
    est, se = np.mean(score**2), np.std(score**2) / math.sqrt(n)
    assert abs(dv.fisher_information_unlabeled(GAUSS, q) - est) <= 4 * se


def test_inverse_information_lower_bound(mixture_corpus):
    for _, pair, q in mixture_corpus:
        info = dv.fisher_information_unlabeled(pair, q)
        assert 1 / info >= q * (1 - q) / dv.total_variation(pair)


def test_hellinger_shift_zero_at_zero_step():
    assert dv.hellinger_shift_sq(GAUSS, 0.4, 0.0) == 0.0


def test_hellinger_shift_bounds_on_grid():
    theta = 0.1
    v = dv.total_variation(GAUSS)
    for q in np.linspace(theta, 0.5, 10):
        for h in np.linspace(0.01, 0.4, 10):
            r2 = dv.hellinger_shift_sq(GAUSS, float(q), float(h))
            assert r2 <= h * h / (theta * (1 - theta)) + 1e-12
            assert r2 >= v * v * h * h / (1 + h * h) - 1e-12


def test_mixture_total_variation_scales_with_step(mixture_corpus):
    for _, pair, q in mixture_corpus[:6] + [(None, GAUSS, 0.4)]:
        v = dv.total_variation(pair)
        for h in (-0.1, 0.05, 0.1):
            if 0 <= q + h <= 1:
                assert dv.mixture_total_variation(pair, q, q + h) == pytest.approx(abs(h) * v, abs=1e-8)
