"""Two-hypothesis minimax construction and its numerical checks.

Both hypotheses share the piecewise pair from
:func:`~priordetect.density_models.build_appendix_a` with ``t = n^(-1/(2 kappa - 2))``;
they differ only in the prior: ``q0 = 1/2`` and ``q1 = 1/2 + t^(kappa - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density_models import AppendixAPair, Scenario, build_appendix_a
from .detector import decision_boundaries
from .divergences import labeled_joint_kl
from .errors import ConstructionError
from .margin import fit_margin_exponent

MAX_T = 0.2
DEFAULT_C = 0.01
DEFAULT_THETA = 0.1


@dataclass(frozen=True)
class TwoHypothesisInstance:
    pair: AppendixAPair
    q0: float
    q1: float
    t: float
    kappa: float
    n: int
    theta: float = DEFAULT_THETA

    @property
    def alpha(self):
        return 1.0 / (self.kappa - 1.0)

    def prior(self, j):
        return self.q1 if j else self.q0

    def scenario(self, j):
        return Scenario(self.pair, self.prior(j), self.theta)


@dataclass(frozen=True)
class LowerBoundConstants:
    c_eta: float
    c_alpha: float
    c_prime: float
    epsilon0: float
    tau_star: float

    def to_dict(self):
        return {
            "c_eta": self.c_eta,
            "c_alpha": self.c_alpha,
            "c_prime": self.c_prime,
            "epsilon0": self.epsilon0,
            "tau_star": self.tau_star,
        }


def construct_two_hypotheses(kappa, c=DEFAULT_C, n=100, theta=DEFAULT_THETA, require_small_t=True):
    """Build the shared pair and attach ``q0 = 1/2`` and ``q1 = 1/2 + t^(kappa-1)``.

    ``require_small_t=False`` skips the ``t < MAX_T`` gate; the pair is still
    valid, only the small-``t`` constants argument no longer applies.
    """
    if n < 1:
        raise ConstructionError("n must be positive")
    t = float(n) ** (-1.0 / (2.0 * kappa - 2.0))
    if require_small_t and not t < MAX_T:
        raise ConstructionError(f"n={n} gives t={t:.4g}; need t < {MAX_T} (increase n)")
    q1 = 0.5 + t ** (kappa - 1.0)
    if not q1 <= 1.0 - theta:
        raise ConstructionError(f"q1={q1:.4g} exceeds 1 - theta={1 - theta}")
    pair = build_appendix_a(kappa, c, t)
    return TwoHypothesisInstance(pair=pair, q0=0.5, q1=q1, t=t, kappa=float(kappa), n=int(n), theta=theta)


def eta_closed_form(instance, j, x):
    """Posterior for hypothesis ``j`` from the explicit piecewise expressions."""
    pair = instance.pair
    k1 = instance.kappa - 1.0
    t, c, c1 = pair.t, pair.c, pair.c1
    s = t**k1
    xa = np.asarray(x, dtype=float)
    xc = np.clip(xa, 0.0, 1.0)
    v = c1 * np.maximum(xc - t, 0.0) ** k1
    if j == 0:
        left = (0.5 + c * xc**k1) * (1.0 - 2.0 * s) / (1.0 - 4.0 * c * (t * xc) ** k1)
        right = 0.5 + v
    else:
        left = 0.5 + c * xc**k1
        right = (1.0 + 2.0 * s) * (0.5 + v) / (1.0 + 4.0 * s * v)
    out = np.where(xa < t, left, right)
    out = np.where((xa < 0.0) | (xa > 1.0), 0.0, out)
    return float(out) if np.ndim(x) == 0 else out


def decision_region(instance, j):
    """Intervals of ``[0, 1]`` where hypothesis ``j``'s Bayes rule picks 1."""
    bset = decision_boundaries(instance.pair, instance.prior(j))
    return bset.region(1)


def _measure(intervals):
    return math.fsum(b - a for a, b in intervals)


def _intersect(u, v):
    out = []
    for a, b in u:
        for c, d in v:
            lo, hi = max(a, c), min(b, d)
            if hi > lo:
                out.append((lo, hi))
    return out


def symmetric_difference(instance, ja=0, jb=1):
    """Lebesgue measure of ``G_ja* xor G_jb*`` inside ``[0, 1]``."""
    ga = decision_region(instance, ja)
    gb = decision_region(instance, jb)
    return _measure(ga) + _measure(gb) - 2.0 * _measure(_intersect(ga, gb))


def kl_budget_check(instance):
    """``(n * KL(P1 || P0) per joint sample, 8 n t^(2 kappa - 2))``."""
    kl = instance.n * labeled_joint_kl(instance.pair, instance.q1, instance.q0)
    budget = 8.0 * instance.n * instance.t ** (2.0 * instance.kappa - 2.0)
    return kl, budget


def lower_bound_constants(alpha, c_eta, tau_star):
    """Constants of the excess-risk / symmetric-difference link and the final ``c'``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not c_eta > 0:
        raise ValueError("c_eta must be positive")
    if not 0 < tau_star <= 0.5:
        raise ValueError("tau_star must lie in (0, 1/2]")
    c_alpha = 2.0 * c_eta ** (-1.0 / alpha) * alpha * (alpha + 1.0) ** (-1.0 - 1.0 / alpha)
    epsilon0 = c_eta * (alpha + 1.0) * tau_star**alpha
    c_prime = 0.25 * math.exp(-8.0) * c_alpha * 0.5 ** ((alpha + 1.0) / alpha)
    return LowerBoundConstants(c_eta, c_alpha, c_prime, epsilon0, tau_star)


def minimax_floor(n, alpha, c_prime):
    """``c' n^(-(1 + alpha) / 2)``."""
    if np.any(np.asarray(n) < 1):
        raise ValueError("n must be at least 1")
    return c_prime * np.asarray(n, dtype=float) ** (-(1.0 + alpha) / 2.0)


def tau_star(instance):
    return (1.0 - instance.pair.c) * instance.t ** (instance.kappa - 1.0)


def margin_t_grid(instance, j, points=12, decades=2.0):
    """Grid inside the pure power-law regime of hypothesis ``j``'s margin profile.

    For ``j = 0`` the margin set grows as ``(tau / c1)^alpha`` until it fills
    ``[t, 1]``; for ``j = 1`` it grows as ``(tau / c)^alpha`` until it fills ``[0, t)``.
    """
    pair = instance.pair
    k1 = instance.kappa - 1.0
    if j == 0:
        top = pair.c1 * (1.0 - pair.t) ** k1
    else:
        top = pair.c * pair.t**k1
    hi = 0.9 * top
    return tuple(np.logspace(math.log10(hi) - decades, math.log10(hi), points).tolist())


def margin_fits(instance):
    """Margin profiles of both hypotheses on their power-law grids."""
    return tuple(fit_margin_exponent(instance.scenario(j), margin_t_grid(instance, j)) for j in (0, 1))


def instance_constants(instance, fits=None):
    """Constants with ``C_eta`` taken as the larger fitted margin constant."""
    fits = margin_fits(instance) if fits is None else fits
    c_eta = max(f.c0_hat for f in fits)
    return lower_bound_constants(instance.alpha, c_eta, tau_star(instance))


def report(kappa, c=DEFAULT_C, n_values=(100, 1000, 10000), theta=DEFAULT_THETA):
    """JSON-ready summary of the construction for each admissible ``n``."""
    rows = []
    for n in n_values:
        try:
            inst = construct_two_hypotheses(kappa, c, n, theta)
        except ConstructionError as exc:
            rows.append({"n": int(n), "error": str(exc)})
            continue
        fits = margin_fits(inst)
        consts = instance_constants(inst, fits)
        kl, budget = kl_budget_check(inst)
        rows.append(
            {
                "n": int(n),
                "t": inst.t,
                "q0": inst.q0,
                "q1": inst.q1,
                "c1": inst.pair.c1,
                "alpha": inst.alpha,
                "kl": kl,
                "kl_budget": budget,
                "d_delta": symmetric_difference(inst),
                "alpha_hat": [f.alpha_hat for f in fits],
                "constants": consts.to_dict(),
                "floor": float(minimax_floor(n, inst.alpha, consts.c_prime)),
            }
        )
    return {"kappa": float(kappa), "c": float(c), "theta": theta, "instances": rows}
