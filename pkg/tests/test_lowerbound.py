import dataclasses
import math

import numpy as np
import pytest

from priordetect import lowerbound as lb
from priordetect.density_models import normalization_residual
from priordetect.detector import classify, eta
from priordetect.divergences import bernoulli_kl, labeled_joint_kl
from priordetect.errors import ConstructionError

import oracles


@pytest.fixture(scope="module")
def k2():
    return lb.construct_two_hypotheses(2, 0.01, 100)


@pytest.fixture(scope="module")
def k3():
    return lb.construct_two_hypotheses(3, 0.01, 10_000)


def test_square_law_instance(k2):
    assert k2.t == pytest.approx(0.1, abs=1e-15)
    assert k2.q1 == pytest.approx(0.6, abs=1e-15)
    assert k2.q0 == 0.5 and k2.alpha == 1.0
    assert max(normalization_residual(k2.pair)) < 1e-8


def test_cubic_instance(k3):
    assert k3.t == pytest.approx(0.1, abs=1e-15)
    assert k3.q1 == pytest.approx(0.51, abs=1e-15)
    assert k3.q0 == 0.5 and k3.alpha == 0.5


def test_small_sample_rejected():
    with pytest.raises(ConstructionError, match="t="):
        lb.construct_two_hypotheses(3, 0.01, 100)
    with pytest.raises(ConstructionError):
        lb.construct_two_hypotheses(2, 0.01, 0)
    loose = lb.construct_two_hypotheses(3, 0.01, 100, require_small_t=False)
    assert loose.t == pytest.approx(0.1**0.5, rel=1e-15) and loose.q1 == pytest.approx(0.6, rel=1e-15)


def test_alternative_posterior_is_half_at_origin(k2, k3):
    assert lb.eta_closed_form(k2, 1, 0.0) == 0.5
    assert lb.eta_closed_form(k3, 1, 0.0) == 0.5


@pytest.mark.parametrize("which", ["k2", "k3"])
def test_closed_form_posterior_matches_densities(which, request):
    inst = request.getfixturevalue(which)
    x = np.linspace(0, 1, 2000)
    for j in (0, 1):
        diff = np.abs(lb.eta_closed_form(inst, j, x) - eta(inst.pair, inst.prior(j), x))
        assert diff.max() <= 1e-10


@pytest.mark.parametrize("which", ["k2", "k3"])
def test_decision_regions(which, request):
    inst = request.getfixturevalue(which)
    g0 = lb.decision_region(inst, 0)
    g1 = lb.decision_region(inst, 1)
    assert len(g0) == 1 and g0[0][0] == pytest.approx(inst.t, abs=1e-10) and g0[0][1] == 1.0
    assert g1 == [(0.0, 1.0)]
    x = np.linspace(0, 1, 5001)
    assert np.all(lb.eta_closed_form(inst, 1, x) >= 0.5 - 1e-10)


@pytest.mark.parametrize("kappa,n", [(2, 100), (2, 1000), (2, 10_000), (3, 1000), (3, 10_000)])
def test_symmetric_difference_is_split_point(kappa, n):
    inst = lb.construct_two_hypotheses(kappa, 0.01, n)
    assert lb.symmetric_difference(inst) == pytest.approx(inst.t, abs=1e-9)
    assert lb.symmetric_difference(inst, 0, 0) == 0.0
    assert lb.symmetric_difference(inst, 1, 1) == 0.0


def test_symmetric_difference_against_grid_count(k2, k3):
    for inst in (k2, k3):
        ref = oracles.grid_symmetric_difference(
            lambda x: classify(inst.pair, inst.q0, x), lambda x: classify(inst.pair, inst.q1, x)
        )
        assert lb.symmetric_difference(inst) == pytest.approx(ref, abs=2e-6)


@pytest.mark.parametrize("kappa,n", [(2, 100), (2, 10_000), (3, 1000), (3, 10_000)])
def test_kl_within_budget_of_eight(kappa, n):
    inst = lb.construct_two_hypotheses(kappa, 0.01, n)
    kl, budget = lb.kl_budget_check(inst)
    assert budget == pytest.approx(8.0, abs=1e-12)
    assert kl <= budget
    assert labeled_joint_kl(inst.pair, inst.q1, inst.q0) <= 8 * (inst.q1 - inst.q0) ** 2


def test_kl_value_for_square_law(k2):
    kl, _ = lb.kl_budget_check(k2)
    assert kl == pytest.approx(100 * bernoulli_kl(0.6, 0.5), rel=1e-14)


def test_equal_priors_have_zero_kl(k2):
    same = dataclasses.replace(k2, q1=k2.q0)
    assert lb.kl_budget_check(same)[0] == 0.0


def test_constants_arithmetic():
    c = lb.lower_bound_constants(1.0, 2.0, 0.1)
    assert c.c_alpha == pytest.approx(0.25, rel=1e-15)
    assert c.c_prime == pytest.approx(0.25 * math.exp(-8) * 0.25 * 0.25, rel=1e-15)
    assert c.c_prime == pytest.approx(5.24e-6, rel=1e-3)
    assert c.epsilon0 == pytest.approx(2 * 2 * 0.1, rel=1e-15)


def test_constants_validate_inputs():
    with pytest.raises(ValueError):
        lb.lower_bound_constants(0.0, 2.0, 0.1)
    with pytest.raises(ValueError):
        lb.lower_bound_constants(1.0, 2.0, 0.6)


@pytest.mark.parametrize("kappa,n", [(2, 100), (2, 1000), (3, 1000), (3, 10_000)])
def test_instance_constants_admissible(kappa, n):
    inst = lb.construct_two_hypotheses(kappa, 0.01, n)
    c = lb.instance_constants(inst)
    assert c.c_eta > 1
    assert min(c.c_alpha, c.c_prime, c.epsilon0, c.tau_star) > 0
    assert c.epsilon0 >= inst.t / 2
    assert c.tau_star == pytest.approx((1 - 0.01) * inst.t ** (kappa - 1), rel=1e-15)


def test_floor_values():
    assert lb.minimax_floor(100, 1.0, 5.24e-6) == pytest.approx(5.24e-8, rel=1e-12)
    n = np.array([10, 100, 1000, 10_000])
    f = lb.minimax_floor(n, 0.5, 1e-3)
    assert np.all(np.diff(f) <= 0)
    assert np.allclose(lb.minimax_floor(n, 0.0, 2.0), 2.0 / np.sqrt(n), rtol=1e-15)
    with pytest.raises(ValueError):
        lb.minimax_floor(0, 1.0, 1.0)


@pytest.mark.parametrize("kappa", [2, 3])
def test_margin_exponent_of_both_hypotheses(kappa):
    inst = lb.construct_two_hypotheses(kappa, 0.01, 10_000)
    for prof in lb.margin_fits(inst):
        assert prof.alpha_hat == pytest.approx(1 / (kappa - 1), abs=0.15)


def test_report_layout():
    rep = lb.report(3, n_values=(100, 1000))
    assert "error" in rep["instances"][0]
    row = rep["instances"][1]
    assert row["d_delta"] == pytest.approx(row["t"], abs=1e-9)
    assert row["kl"] <= row["kl_budget"]
    assert row["floor"] > 0
