"""Monte Carlo harness for excess-risk curves, rate fits and estimator probes.

Every trial draws from its own stream seeded by ``(master_seed, n, trial)``,
so results do not depend on the order or thread in which trials execute.
Labeled and unlabeled runs with equal seeds see the same underlying sample:
the unlabeled estimator gets the observations, the labeled one the labels.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ._numerics import linear_fit
from .density_models import Scenario, sample_labeled, sample_labels, scenario_to_dict
from .detector import decision_boundaries, eta, excess_risk
from .errors import FitError, PriorDetectError
from .estimators import DEFAULT_TOL, mle_labeled, mle_unlabeled

DEFAULT_N_GRID = (16, 32, 64, 128, 256, 512, 1024, 2048, 4096)
DEFAULT_TRIALS = 2000
DEFAULT_SEED = 42
SLOPE_TOLERANCE = 0.2
WINDOW_SE_FACTOR = 10.0
CSV_COLUMNS = ("n", "mean_excess", "stderr", "trials", "mode", "family", "q", "theta", "seed")


class ExperimentError(PriorDetectError, RuntimeError):
    """A Monte Carlo trial failed; the message names the trial and its seed."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    mode: str = "labeled"
    n_grid: tuple = DEFAULT_N_GRID
    trials: int = DEFAULT_TRIALS
    master_seed: int = DEFAULT_SEED
    risk_method: str = "auto"
    threads: int = 1
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.mode not in ("labeled", "unlabeled"):
            raise ValueError(f"mode must be 'labeled' or 'unlabeled', got {self.mode!r}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ValueError("n_grid must hold positive counts")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    def to_dict(self):
        return {
            "scenario": scenario_to_dict(self.scenario),
            "mode": self.mode,
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "risk_method": self.risk_method,
        }


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Per-trial estimates and excess risks at one sample size."""

    n: int
    q_hat: np.ndarray
    excess: np.ndarray


@dataclass(frozen=True)
class CurvePoint:
    n: int
    mean_excess: float
    stderr: float
    trials: int


@dataclass(frozen=True, eq=False)
class ExcessRiskCurve:
    config: ExperimentConfig
    points: tuple
    batches: tuple = field(default=(), repr=False)

    @property
    def n(self):
        return np.array([p.n for p in self.points])

    @property
    def means(self):
        return np.array([p.mean_excess for p in self.points])

    @property
    def stderrs(self):
        return np.array([p.stderr for p in self.points])

    def rows(self):
        cfg = self.config
        sc = cfg.scenario
        for p in self.points:
            yield [
                p.n,
                repr(p.mean_excess),
                repr(p.stderr),
                p.trials,
                cfg.mode,
                sc.pair.family,
                repr(sc.q),
                repr(sc.theta),
                cfg.master_seed,
            ]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(self.rows())
        return buf.getvalue()


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    theoretical_exponent: float | None
    within_tolerance: bool
    n_used: tuple = ()

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "theoretical_exponent": self.theoretical_exponent,
            "within_tolerance": self.within_tolerance,
        }


def trial_rng(master_seed, n, trial):
    """Independent generator for one ``(n, trial)`` cell."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(n), int(trial)]))


def run_trial(config, n, trial):
    """``(q_hat, excess)`` for one trial."""
    sc = config.scenario
    rng = trial_rng(config.master_seed, n, trial)
    if config.mode == "labeled":
        est = mle_labeled(sample_labels(sc, n, rng), sc.theta)
    else:
        data = sample_labeled(sc, n, rng)
        est = mle_unlabeled(sc.pair, data.x, sc.theta, tol=config.tol)
    return est.q_hat, excess_risk(sc, est.q_hat, config.risk_method)


def _worker_count(threads):
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, int(threads))


def run_trials(config, n):
    """All trials at sample size ``n``; reduction order is fixed by trial index."""
    q_hat = np.empty(config.trials)
    excess = np.empty(config.trials)

    def work(block):
        for i in block:
            try:
                q_hat[i], excess[i] = run_trial(config, n, i)
            except Exception as exc:
                raise ExperimentError(
                    f"trial {i} at n={n} failed (master_seed={config.master_seed}, "
                    f"substream=[{config.master_seed}, {n}, {i}]): {exc}"
                ) from exc

    workers = _worker_count(config.threads)
    if workers == 1:
        work(range(config.trials))
    else:
        blocks = np.array_split(np.arange(config.trials), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(work, b) for b in blocks]:
                fut.result()
    return TrialBatch(n=n, q_hat=q_hat, excess=excess)


def run_excess_risk_curve(config):
    """Mean excess risk and its standard error for each ``n`` in the grid."""
    batches, points = [], []
    for n in config.n_grid:
        batch = run_trials(config, n)
        k = batch.excess.size
        se = float(np.std(batch.excess, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
        points.append(CurvePoint(n=n, mean_excess=float(np.mean(batch.excess)), stderr=se, trials=k))
        batches.append(batch)
    return ExcessRiskCurve(config=config, points=tuple(points), batches=tuple(batches))


def fit_rate(curve, alpha, tolerance=SLOPE_TOLERANCE, se_factor=WINDOW_SE_FACTOR):
    """Fit the decay of a curve and compare it with the rate for margin exponent ``alpha``.

    Finite ``alpha``: slope of ``log mean`` on ``log n`` against ``-(1 + alpha) / 2``.
    ``alpha = inf``: slope of ``log mean`` on ``n``, which must be negative.
    Points whose mean is under ``se_factor`` standard errors are dropped first.
    """
    n, means, se = curve.n, curve.means, curve.stderrs
    keep = means >= se_factor * se
    bad = n[keep & (means <= 0)]
    if bad.size:
        raise FitError(f"nonpositive mean excess in the fit window at n={bad.tolist()}")
    if keep.sum() < 4:
        raise FitError(f"only {int(keep.sum())} points survive the noise-floor window; need 4")
    x = n[keep].astype(float)
    y = np.log(means[keep])
    if math.isinf(alpha):
        slope, intercept, r2 = linear_fit(x, y)
        return RateFit(slope, intercept, r2, None, slope < 0, tuple(n[keep].tolist()))
    slope, intercept, r2 = linear_fit(np.log(x), y)
    theo = -(1.0 + alpha) / 2.0
    return RateFit(slope, intercept, r2, theo, abs(slope - theo) <= tolerance, tuple(n[keep].tolist()))


def lipschitz_bound(theta):
    return 1.0 / (4.0 * theta * (1.0 - theta))


def lipschitz_probe(pair, theta, x_grid, q_grid):
    """Largest ``|eta(x; q1) - eta(x; q2)| / |q1 - q2|`` over the probed triples."""
    q = np.unique(np.asarray(q_grid, dtype=float))
    if q.size < 2 or q.size * (q.size - 1) // 2 < 100:
        raise ValueError("q_grid must yield at least 100 distinct (q1, q2) pairs")
    if q[0] < theta or q[-1] > 1.0 - theta:
        raise ValueError("q_grid must lie inside [theta, 1 - theta]")
    x = np.asarray(x_grid, dtype=float)
    p0 = np.asarray(pair.p0(x), dtype=float)
    p1 = np.asarray(pair.p1(x), dtype=float)
    x = x[(p0 > 0) | (p1 > 0)]
    table = np.stack([np.asarray(eta(pair, qi, x), dtype=float) for qi in q])
    best = 0.0
    for i in range(q.size - 1):
        ratio = np.abs(table[i + 1 :] - table[i]) / (q[i + 1 :] - q[i])[:, None]
        best = max(best, float(ratio.max()))
    return best


def boundary_adapted_probe(pair, theta, width=1e-6, n_q=15):
    """Probe at the decision boundary of prior ``theta`` with priors just above it."""
    bset = decision_boundaries(pair, theta)
    if not bset.points:
        raise ValueError("prior theta induces no decision boundary for this pair")
    q_grid = theta + np.linspace(0.0, width, n_q)
    return lipschitz_probe(pair, theta, np.array(bset.points), q_grid)


@dataclass(frozen=True)
class ConcentrationTable:
    eps: tuple
    tail: tuple
    stderr: tuple
    hoeffding: tuple
    mode: str
    n: int
    trials: int

    def rows(self):
        return list(zip(self.eps, self.tail, self.stderr, self.hoeffding))


def _estimates(scenario, mode, n, trials, master_seed, tol=DEFAULT_TOL):
    cfg = ExperimentConfig(scenario, mode=mode, n_grid=(n,), trials=trials, master_seed=master_seed, tol=tol)
    out = np.empty(trials)
    for i in range(trials):
        rng = trial_rng(master_seed, n, i)
        if mode == "labeled":
            out[i] = mle_labeled(sample_labels(scenario, n, rng), scenario.theta).q_hat
        else:
            data = sample_labeled(scenario, n, rng)
            out[i] = mle_unlabeled(scenario.pair, data.x, scenario.theta, tol=cfg.tol).q_hat
    return out


def concentration_probe(scenario, mode, n, eps_grid, trials=2000, master_seed=DEFAULT_SEED):
    """Empirical ``P(|q_hat - q| > eps)`` with the Hoeffding bound ``2 exp(-2 n eps^2)``."""
    if trials < 1000:
        raise ValueError("concentration probe needs at least 1000 trials")
    q_hat = _estimates(scenario, mode, n, trials, master_seed)
    err = np.abs(q_hat - scenario.q)
    eps = np.asarray(eps_grid, dtype=float)
    tail = np.array([np.mean(err > e) for e in eps])
    se = np.sqrt(tail * (1.0 - tail) / trials)
    hoeff = np.minimum(1.0, 2.0 * np.exp(-2.0 * n * eps**2))
    return ConcentrationTable(
        tuple(eps.tolist()), tuple(tail.tolist()), tuple(se.tolist()), tuple(hoeff.tolist()), mode, n, trials
    )


def tail_shape_fit(table):
    """Fit ``log tail`` against ``eps^2`` over the positive tail values."""
    eps = np.asarray(table.eps)
    tail = np.asarray(table.tail)
    pos = tail > 0
    if pos.sum() < 3:
        raise FitError("need at least three positive tail probabilities")
    return linear_fit(eps[pos] ** 2, np.log(tail[pos]))


@dataclass(frozen=True)
class PairedComparison:
    n: int
    mse_labeled: float
    mse_unlabeled: float
    unlabeled_worse: int
    labeled_worse: int
    p_value: float


def paired_mse_comparison(scenario, n_grid, trials, master_seed=DEFAULT_SEED, threads=1):
    """Squared errors of both estimators on shared samples, with a one-sided sign test."""
    out = []
    for n in n_grid:
        base = dict(n_grid=(n,), trials=trials, master_seed=master_seed, threads=threads)
        lab = run_trials(ExperimentConfig(scenario, mode="labeled", **base), n)
        unl = run_trials(ExperimentConfig(scenario, mode="unlabeled", **base), n)
        sl = (lab.q_hat - scenario.q) ** 2
        su = (unl.q_hat - scenario.q) ** 2
        up = int(np.sum(su > sl))
        down = int(np.sum(su < sl))
        p = stats.binomtest(up, up + down, 0.5, alternative="greater").pvalue if up + down else 1.0
        out.append(PairedComparison(n, float(sl.mean()), float(su.mean()), up, down, float(p)))
    return out


@dataclass(frozen=True)
class FloorCheck:
    kappa: float
    n: int
    hypothesis: int
    mean_excess: float
    stderr: float
    floor: float

    @property
    def holds(self):
        return self.mean_excess >= self.floor

    def to_dict(self):
        out = asdict(self)
        out["holds"] = self.holds
        return out


def floor_consistency(kappa, n_values, c=None, trials=DEFAULT_TRIALS, master_seed=DEFAULT_SEED, threads=1):
    """Labeled-MLE excess risk on both two-hypothesis scenarios next to the minimax floor."""
    from . import lowerbound as lb

    c = lb.DEFAULT_C if c is None else c
    out = []
    for n in n_values:
        # the floor comparison is meaningful for any t, so small n is allowed here
        inst = lb.construct_two_hypotheses(kappa, c, n, require_small_t=False)
        consts = lb.instance_constants(inst)
        floor = float(lb.minimax_floor(n, inst.alpha, consts.c_prime))
        for j in (0, 1):
            cfg = ExperimentConfig(
                inst.scenario(j), mode="labeled", n_grid=(n,), trials=trials,
                master_seed=master_seed, threads=threads,
            )
            p = run_excess_risk_curve(cfg).points[0]
            out.append(FloorCheck(float(kappa), int(n), j, p.mean_excess, p.stderr, floor))
    return out
