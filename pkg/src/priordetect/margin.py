"""Mass of the X-marginal near the decision level ``eta = 1/2``.

The margin set for half-width ``t`` is ``{x : 0 < |eta(x) - 1/2| <= t}``;
points with ``eta`` exactly 1/2 are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._numerics import integrate, linear_fit, scan_transitions
from .detector import GRID_POINTS, decision_boundaries, eta
from .errors import FitError

DEFAULT_T_GRID = tuple(np.logspace(-3, math.log10(0.3), 12))
MIN_ZERO_RUN = 3
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class MarginProfile:
    t_grid: tuple
    probabilities: tuple
    alpha_hat: float
    c0_hat: float
    r_squared: float
    infinite: bool = False
    gap_c: float | None = None

    def summary(self):
        return {
            "alpha_hat": self.alpha_hat,
            "c0_hat": self.c0_hat,
            "r2": self.r_squared,
            "infinite": self.infinite,
            "gap_c": self.gap_c,
        }


def _eta_or_nan(pair, q, x):
    p0 = np.asarray(pair.p0(x), dtype=float)
    p1 = np.asarray(pair.p1(x), dtype=float)
    ok = (p0 > 0) | (p1 > 0)
    if ok.all():
        return eta(pair, q, x)
    out = np.full(np.shape(x), np.nan)
    out[ok] = eta(pair, q, np.asarray(x)[ok])
    return out


def discrete_gap(scenario):
    """Smallest ``|eta - 1/2|`` over charged atoms with ``eta != 1/2`` (inf if none)."""
    pair, q = scenario.pair, scenario.q
    w0, w1 = np.array(pair.weights0), np.array(pair.weights1)
    charged = (q * w1 + (1 - q) * w0) > 0
    e = np.full(w0.shape, 0.5)
    e[charged] = eta(pair, q, np.array(pair.alphabet)[charged])
    dist = np.abs(e - 0.5)[charged & (e != 0.5)]
    return float(dist.min()) if dist.size else math.inf


def margin_probability(scenario, t):
    """``P_X(0 < |eta(X) - 1/2| <= t)`` under the mixture marginal."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    pair, q = scenario.pair, scenario.q
    if pair.discrete:
        alpha = np.array(pair.alphabet)
        fx = scenario.mixture_pdf(alpha)
        charged = fx > 0
        dist = np.full(alpha.shape, np.inf)
        dist[charged] = np.abs(eta(pair, q, alpha[charged]) - 0.5)
        sel = charged & (dist > 0) & (dist <= t)
        return float(math.fsum(fx[sel]))

    lo, hi = pair.domain()
    bset = decision_boundaries(pair, q)

    def inside(x):
        d = np.abs(_eta_or_nan(pair, q, x) - 0.5)
        return np.nan_to_num(d, nan=np.inf) <= t

    grid = np.unique(
        np.concatenate(
            [
                np.linspace(lo, hi, GRID_POINTS),
                np.asarray(pair.breakpoints(), dtype=float),
                np.asarray(bset.points, dtype=float),
            ]
        )
    )
    cuts = scan_transitions(inside, grid)
    edges = np.unique(np.concatenate([[lo, hi], cuts, pair.breakpoints()]))
    total = []
    for a, b in zip(edges[:-1], edges[1:]):
        probe = a + (b - a) * np.array([0.25, 0.5, 0.75])
        if not inside(probe[1:2])[0]:
            continue
        if np.all(_eta_or_nan(pair, q, probe) == 0.5):
            continue
        val, _ = integrate(
            lambda x: float(scenario.mixture_pdf(x)), a, b, points=pair.breakpoints(), tol=QUAD_TOL
        )
        total.append(val)
    return min(1.0, math.fsum(total))


def fit_margin_exponent(scenario, t_grid=None):
    """Least-squares fit of ``log P`` against ``log t``.

    A run of at least three zero probabilities at the small end of the grid
    signals an infinite exponent; the profile then reports the gap ``c``
    (exact for discrete pairs, otherwise the largest zero-probability ``t``).
    """
    t = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float)
    if t.size < 5 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise FitError("t_grid needs at least 5 strictly increasing positive points")
    if math.log10(t[-1] / t[0]) < 1.5:
        raise FitError("t_grid must span at least 1.5 decades")
    probs = np.array([margin_probability(scenario, ti) for ti in t])
    zero = probs == 0
    n_zero = int(np.argmin(zero)) if not zero.all() else zero.size
    if zero[n_zero:].any():
        bad = t[n_zero:][zero[n_zero:]]
        raise FitError(f"zero margin probability interleaved with positive values at t={bad.tolist()}")
    if n_zero >= MIN_ZERO_RUN:
        gap = discrete_gap(scenario) if scenario.pair.discrete else float(t[n_zero - 1])
        return MarginProfile(
            tuple(t.tolist()), tuple(probs.tolist()), math.inf, math.nan, math.nan, True, gap
        )
    if n_zero:
        raise FitError(f"{n_zero} zero probabilities at the small end: too few to call the exponent infinite")
    slope, intercept, r2 = linear_fit(np.log(t), np.log(probs))
    return MarginProfile(tuple(t.tolist()), tuple(probs.tolist()), slope, math.exp(intercept), r2)
