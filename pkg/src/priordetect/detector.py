"""Regression function, plug-in decisions and the risk of a plugged-in prior.

Decisions use the inclusive rule ``q p1(x) >= (1 - q) p0(x)``, i.e. the
likelihood-ratio test ``Lambda(x) >= (1 - q) / q`` written without division,
so ties at ``eta = 1/2`` go to hypothesis 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from ._numerics import integrate, scan_transitions
from .density_models import GaussianPair, sample_labeled
from .errors import UndefinedPointError

GRID_POINTS = 4096
BOUNDARY_XTOL = 1e-12
QUAD_TOL = 1e-10

CLOSED_FORM = "closed-form"
QUADRATURE = "quadrature"
MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class BoundarySet:
    """Sign changes of ``eta - 1/2`` and the decision on each gap between them."""

    points: tuple
    labels: tuple
    domain: tuple

    def label_at(self, x):
        i = int(np.searchsorted(self.points, x, side="right"))
        return self.labels[i]

    def intervals(self):
        """``(a, b, label)`` triples covering the domain."""
        edges = (self.domain[0],) + tuple(self.points) + (self.domain[1],)
        return [(edges[i], edges[i + 1], self.labels[i]) for i in range(len(self.labels))]

    def region(self, label=1):
        return [(a, b) for a, b, lab in self.intervals() if lab == label and b > a]


@dataclass(frozen=True)
class RiskReport:
    q_used: float
    p0_error: float
    p1_error: float
    risk: float
    bayes_risk: float
    excess: float
    method: str
    tol: float
    degenerate: bool = False

    CSV_FIELDS = ("q_used", "p0_error", "p1_error", "risk", "bayes_risk", "excess", "method", "tol")

    def to_dict(self):
        return asdict(self)

    def csv_row(self):
        return [getattr(self, f) for f in self.CSV_FIELDS]


def _densities(pair, x):
    p0 = np.asarray(pair.p0(x), dtype=float)
    p1 = np.asarray(pair.p1(x), dtype=float)
    return p0, p1


def eta(pair, q, x):
    """Posterior ``P(Y = 1 | X = x)`` under prior ``q``."""
    p0, p1 = _densities(pair, x)
    if np.any((p0 == 0) & (p1 == 0)):
        raise UndefinedPointError(f"eta undefined: both densities vanish at x={x}")
    safe = np.where(p0 == 0, 1.0, p0)
    lam = p1 / safe
    out = np.where(p0 == 0, 1.0, q * lam / (q * lam + (1.0 - q)))
    # equal densities carry no evidence; avoid rounding in q + (1 - q)
    out = np.where(p1 == p0, q, out)
    return float(out) if np.ndim(x) == 0 else out


def _decide(pair, q, x):
    p0, p1 = _densities(pair, x)
    return q * p1 >= (1.0 - q) * p0


def classify(pair, q, x):
    """Bayes decision ``1{eta(x; q) >= 1/2}``."""
    p0, p1 = _densities(pair, x)
    if np.any((p0 == 0) & (p1 == 0)):
        raise UndefinedPointError(f"decision undefined: both densities vanish at x={x}")
    out = (q * p1 >= (1.0 - q) * p0).astype(int)
    return int(out) if np.ndim(x) == 0 else out


def decision_boundaries(pair, q, grid_points=GRID_POINTS, xtol=BOUNDARY_XTOL):
    """Locate every decision flip over the pair's domain by grid scan and bisection."""
    if pair.discrete:
        raise ValueError("decision boundaries are defined for continuous pairs only")
    lo, hi = pair.domain()
    if pair.identical:
        return BoundarySet((), (int(q >= 0.5),), (lo, hi))
    grid = np.union1d(np.linspace(lo, hi, grid_points), np.asarray(pair.breakpoints(), dtype=float))
    points = scan_transitions(lambda x: _decide(pair, q, x), grid, xtol=xtol)
    first = int(_decide(pair, q, np.array([lo]))[0])
    labels = tuple((first + i) % 2 for i in range(len(points) + 1))
    return BoundarySet(tuple(float(p) for p in points), labels, (lo, hi))


def _gaussian_boundaries(pair: GaussianPair, q):
    """Closed-form boundary: ``x* = mid + sigma^2 ln((1-q)/q) / (mean1 - mean0)``."""
    dom = (-math.inf, math.inf)
    if pair.identical:
        return BoundarySet((), (int(q >= 0.5),), dom)
    if q <= 0.0:
        return BoundarySet((), (0,), dom)
    if q >= 1.0:
        return BoundarySet((), (1,), dom)
    delta = pair.mean1 - pair.mean0
    x_star = 0.5 * (pair.mean0 + pair.mean1) + pair.sigma**2 * math.log((1.0 - q) / q) / delta
    labels = (0, 1) if delta > 0 else (1, 0)
    return BoundarySet((x_star,), labels, dom)


def _method_for(pair, method):
    if method in (None, "auto"):
        return CLOSED_FORM if pair.discrete or isinstance(pair, GaussianPair) else QUADRATURE
    if method == CLOSED_FORM and not (pair.discrete or isinstance(pair, GaussianPair)):
        raise ValueError(f"no closed form for family {pair.family!r}")
    return method


def _boundaries_for(pair, q, method):
    if method == CLOSED_FORM:
        return _gaussian_boundaries(pair, q)
    return decision_boundaries(pair, q)


def _mass(pair, hypothesis, a, b, method):
    if b <= a:
        return 0.0, 0.0
    if method == CLOSED_FORM:
        return pair.interval_mass(hypothesis, a, b)
    return integrate(
        lambda x: float(pair.pdf(hypothesis, x)), a, b, points=pair.breakpoints(), tol=QUAD_TOL
    )


@lru_cache(maxsize=1 << 16)
def _error_terms(pair, q_used, method):
    """``(P0(q'), P1(q'), abserr)``."""
    if pair.discrete:
        w0 = np.array(pair.weights0)
        w1 = np.array(pair.weights1)
        d = q_used * w1 >= (1.0 - q_used) * w0
        return math.fsum(w0[d]), math.fsum(w1[~d]), 0.0
    bset = _boundaries_for(pair, q_used, method)
    p0_err, p1_err, err = [], [], 0.0
    for a, b, lab in bset.intervals():
        if lab == 1:
            v, e = _mass(pair, 0, a, b, method)
            p0_err.append(v)
        else:
            v, e = _mass(pair, 1, a, b, method)
            p1_err.append(v)
        err += e
    clip = lambda v: min(1.0, max(0.0, v))
    return clip(math.fsum(p0_err)), clip(math.fsum(p1_err)), err


@lru_cache(maxsize=1 << 16)
def _excess_terms(pair, q, q_used, method):
    """``R(q') - R(q)`` as the integral of ``|q p1 - (1-q) p0|`` where decisions disagree."""
    if pair.discrete:
        w0 = np.array(pair.weights0)
        w1 = np.array(pair.weights1)
        d_true = (q * w1 >= (1.0 - q) * w0).astype(float)
        d_used = (q_used * w1 >= (1.0 - q_used) * w0).astype(float)
        return max(0.0, math.fsum((q * w1 - (1.0 - q) * w0) * (d_true - d_used))), 0.0
    b_true = _boundaries_for(pair, q, method)
    b_used = _boundaries_for(pair, q_used, method)
    lo, hi = b_true.domain
    cuts = sorted(set(b_true.points) | set(b_used.points))
    edges = [lo] + cuts + [hi]
    total, err = [], 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if not b > a:
            continue
        mid = _midpoint(a, b)
        sign = b_true.label_at(mid) - b_used.label_at(mid)
        if sign == 0:
            continue
        m1, e1 = _mass(pair, 1, a, b, method)
        m0, e0 = _mass(pair, 0, a, b, method)
        total.append(sign * (q * m1 - (1.0 - q) * m0))
        err += q * e1 + (1.0 - q) * e0
    return max(0.0, math.fsum(total)), err


def _midpoint(a, b):
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(a):
        return b - 1.0
    if math.isinf(b):
        return a + 1.0
    return 0.5 * (a + b)


def _mc_report(scenario, q_used, n_mc, rng):
    data = sample_labeled(scenario, n_mc, rng)
    pair = scenario.pair
    d_used = _decide(pair, q_used, data.x)
    d_true = _decide(pair, scenario.q, data.x)
    y = data.y.astype(bool)
    p0_err = float(np.mean(d_used[~y])) if (~y).any() else 0.0
    p1_err = float(np.mean(~d_used[y])) if y.any() else 0.0
    q = scenario.q
    risk = q * p1_err + (1.0 - q) * p0_err
    wrong_used = np.where(y, ~d_used, d_used)
    wrong_true = np.where(y, ~d_true, d_true)
    bayes = float(np.mean(wrong_true))
    diff = wrong_used.astype(float) - wrong_true.astype(float)
    se = float(np.std(wrong_used.astype(float), ddof=1) / math.sqrt(n_mc))
    return RiskReport(
        q_used=float(q_used),
        p0_error=p0_err,
        p1_error=p1_err,
        risk=risk,
        bayes_risk=bayes,
        excess=float(np.mean(diff)),
        method=MONTE_CARLO,
        tol=se,
        degenerate=pair.identical,
    )


def risk_report(scenario, q_used, method="auto", n_mc=1_000_000, rng=None):
    """Errors ``P0(q')``, ``P1(q')``, risk ``R(q')``, Bayes risk and excess."""
    if not 0.0 <= q_used <= 1.0:
        raise ValueError(f"q_used must lie in [0, 1], got {q_used}")
    pair = scenario.pair
    if method == MONTE_CARLO:
        return _mc_report(scenario, q_used, n_mc, rng)
    method = _method_for(pair, method)
    q = scenario.q
    p0_u, p1_u, e_u = _error_terms(pair, float(q_used), method)
    p0_b, p1_b, e_b = _error_terms(pair, float(q), method)
    excess, e_x = _excess_terms(pair, float(q), float(q_used), method)
    return RiskReport(
        q_used=float(q_used),
        p0_error=p0_u,
        p1_error=p1_u,
        risk=q * p1_u + (1.0 - q) * p0_u,
        bayes_risk=q * p1_b + (1.0 - q) * p0_b,
        excess=excess,
        method=method,
        tol=max(e_u, e_b, e_x, 1e-15 if method == CLOSED_FORM else QUAD_TOL),
        degenerate=pair.identical,
    )


def excess_risk(scenario, q_used, method="auto"):
    """Shortcut for ``risk_report(...).excess`` without assembling the report."""
    method = _method_for(scenario.pair, method)
    return _excess_terms(scenario.pair, float(scenario.q), float(q_used), method)[0]


def parametrized_risk(pair, q1, q2, method="auto"):
    """``q2 P1(q1) + (1 - q2) P0(q1)``: risk under prior ``q2`` of the rule tuned to ``q1``."""
    method = _method_for(pair, method)
    p0, p1, _ = _error_terms(pair, float(q1), method)
    return q2 * p1 + (1.0 - q2) * p0


def error_probabilities(pair, q_used, method="auto"):
    """``(P0(q'), P1(q'))``."""
    method = _method_for(pair, method)
    p0, p1, _ = _error_terms(pair, float(q_used), method)
    return p0, p1


def clear_caches():
    _error_terms.cache_clear()
    _excess_terms.cache_clear()
