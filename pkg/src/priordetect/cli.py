"""Command-line front end.

Each subcommand resolves its settings from built-in defaults, then an
optional JSON config file, then command-line overrides. The merged config
is validated, executed, echoed to stdout as JSON and, with ``--out``,
written to a directory together with ``manifest.json``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import detector, divergences, estimators, experiments, lowerbound, margin
from .density_models import DEFAULT_DISCRETE, sample_labeled, scenario_from_dict, scenario_to_dict
from .errors import PriorDetectError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COMMANDS = ("risk", "estimate", "divergence", "margin", "lowerbound", "rates", "lipschitz", "concentration")

_NUM = {"type": "number"}
_NUM_LIST = {"type": "array", "items": _NUM, "minItems": 1}
_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family", "q"],
            "properties": {
                "family": {"enum": ["gaussian", "gaussian_mixture", "discrete", "appendix_a"]},
                "params": {"type": "object"},
                "q": {"type": "number", "minimum": 0, "maximum": 1},
                "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
            },
        },
        "q_used": {"type": "number", "minimum": 0, "maximum": 1},
        "risk_method": {"enum": ["auto", "closed-form", "quadrature", "monte-carlo"]},
        "mode": {"enum": ["labeled", "unlabeled"]},
        "n": {"type": "integer", "minimum": 1},
        "n_grid": _INT_LIST,
        "n_values": _INT_LIST,
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 0},
        "kinds": {"type": "array", "items": {"enum": list(divergences.KINDS)}, "minItems": 1},
        "t_grid": _NUM_LIST,
        "eps_grid": _NUM_LIST,
        "thetas": _NUM_LIST,
        "kappa": {"type": "number", "exclusiveMinimum": 1},
        "c": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "alpha": {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "inf"}]},
        "c_prime": {"type": "number", "exclusiveMinimum": 0},
    },
}

_DEFAULT_PARAMS = {
    "gaussian": {"mean0": 0.0, "mean1": 2.0, "sigma": 1.0},
    "discrete": DEFAULT_DISCRETE.params(),
    "appendix_a": {"kappa": 3.0, "c": 0.01, "t": 0.3},
    "gaussian_mixture": {},
}

DEFAULTS = {
    "scenario": {"family": "gaussian", "q": 0.5, "theta": 0.1},
    "q_used": None,
    "risk_method": "auto",
    "mode": "labeled",
    "n": 400,
    "n_grid": list(experiments.DEFAULT_N_GRID),
    "n_values": [100, 1000, 10000],
    "trials": experiments.DEFAULT_TRIALS,
    "seed": experiments.DEFAULT_SEED,
    "threads": 1,
    "kinds": list(divergences.KINDS),
    "thetas": [0.05, 0.1, 0.25],
    "kappa": 2.0,
    "c": lowerbound.DEFAULT_C,
}


class ConfigError(Exception):
    pass


class OutputError(PriorDetectError, OSError):
    pass


# ---------------------------------------------------------------- serialization


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def canonical_hash(config):
    """SHA-256 of the config in sorted-key compact form."""
    text = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- config


def load_config(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def validate_config(config):
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(config), key=lambda e: list(e.path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("config violates schema:\n" + "\n".join(lines))


_SCENARIO_FLAGS = ("mean0", "mean1", "sigma", "kappa_pair", "c_pair", "t")


def resolve_config(args):
    """Defaults, then the config file, then flags; validated."""
    cfg = copy.deepcopy(DEFAULTS)
    file_cfg = load_config(args.config) if args.config else {}
    if file_cfg:
        validate_config(file_cfg)
    for key, val in file_cfg.items():
        if key == "scenario":
            cfg["scenario"] = {**cfg["scenario"], **val}
        else:
            cfg[key] = val
    sc = cfg["scenario"]
    if args.family is not None and args.family != sc.get("family"):
        sc["family"] = args.family
        sc.pop("params", None)
    for flag, key in (("q", "q"), ("theta", "theta")):
        if getattr(args, flag) is not None:
            sc[key] = getattr(args, flag)
    params = dict(_DEFAULT_PARAMS.get(sc["family"], {}))
    params.update(sc.get("params", {}))
    for flag in _SCENARIO_FLAGS:
        val = getattr(args, flag, None)
        if val is not None:
            params[flag.replace("_pair", "")] = val
    sc["params"] = params
    for key in ("q_used", "risk_method", "mode", "n", "trials", "threads", "kappa", "c", "alpha", "c_prime"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("n_grid", "n_values", "t_grid", "eps_grid", "thetas", "kinds"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg["command"] = args.command
    validate_config({k: v for k, v in cfg.items() if v is not None})
    return cfg


def _scenario(cfg):
    return scenario_from_dict(cfg["scenario"])


# ---------------------------------------------------------------- plot data


def emit_plot_data(result, path, alpha=None, c_prime=None, fmt="csv"):
    """Write a headered CSV for ``result`` and a companion ``*.overlay.json``.

    Curves get a ``bound_thm2`` column ``0.5 n^(-1/2)`` and, when ``alpha`` and
    ``c_prime`` are given, a ``minimax_floor`` column. Margin profiles get the
    fitted power law. Returns the two paths written.
    """
    if fmt != "csv":
        raise ValueError(f"unsupported plot format {fmt!r}")
    path = Path(path)
    overlay_path = path.with_suffix(".overlay.json")
    if isinstance(result, experiments.ExcessRiskCurve):
        n = result.n.astype(float)
        bound = 0.5 * n**-0.5
        header = ["n", "mean_excess", "stderr", "bound_thm2"]
        cols = [result.n.tolist(), result.means.tolist(), result.stderrs.tolist(), bound.tolist()]
        overlay = {"bound_thm2": {"expression": "0.5*n^(-1/2)", "x": result.n.tolist(), "y": bound.tolist()}}
        if c_prime is not None and alpha is not None:
            floor = lowerbound.minimax_floor(result.n, alpha, c_prime)
            header.append("minimax_floor")
            cols.append(floor.tolist())
            overlay["minimax_floor"] = {
                "expression": "c_prime*n^(-(1+alpha)/2)",
                "alpha": alpha,
                "c_prime": c_prime,
                "x": result.n.tolist(),
                "y": floor.tolist(),
            }
    elif isinstance(result, margin.MarginProfile):
        t = np.array(result.t_grid)
        header = ["t", "probability"]
        cols = [t.tolist(), list(result.probabilities)]
        overlay = {}
        if not result.infinite:
            fitted = result.c0_hat * t**result.alpha_hat
            header.append("fitted")
            cols.append(fitted.tolist())
            overlay["power_law"] = {
                "expression": "c0*t^alpha",
                "alpha": result.alpha_hat,
                "c0": result.c0_hat,
                "x": t.tolist(),
                "y": fitted.tolist(),
            }
    else:
        raise TypeError(f"no plot layout for {type(result).__name__}")
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in zip(*cols):
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        overlay_path.write_text(dumps(overlay))
    except OSError as exc:
        raise OutputError(f"cannot write plot data to {path}: {exc}") from exc
    return path, overlay_path


# ---------------------------------------------------------------- subcommands


def cmd_risk(cfg, out):
    sc = _scenario(cfg)
    q_used = sc.q if cfg.get("q_used") is None else cfg["q_used"]
    rng = np.random.default_rng(cfg["seed"])
    rep = detector.risk_report(sc, q_used, method=cfg["risk_method"], rng=rng)
    result = {"scenario": scenario_to_dict(sc), **rep.to_dict(), "degenerate": rep.degenerate}
    out.json("risk.json", result)
    return result


def cmd_estimate(cfg, out):
    sc = _scenario(cfg)
    data = sample_labeled(sc, cfg["n"], np.random.default_rng(cfg["seed"]))
    est = estimators.estimate(cfg["mode"], sc.pair, data if cfg["mode"] == "labeled" else data.x, sc.theta)
    result = {"scenario": scenario_to_dict(sc), "n": cfg["n"], "seed": cfg["seed"], **est.to_dict()}
    out.json("estimate.json", result)
    return result


def cmd_divergence(cfg, out):
    sc = _scenario(cfg)
    result = {
        "scenario": scenario_to_dict(sc),
        "divergences": {k: divergences.divergence(sc.pair, k).to_dict() for k in cfg["kinds"]},
    }
    out.json("divergence.json", result)
    return result


def cmd_margin(cfg, out):
    sc = _scenario(cfg)
    prof = margin.fit_margin_exponent(sc, cfg.get("t_grid"))
    result = {
        "scenario": scenario_to_dict(sc),
        **prof.summary(),
        "t_grid": list(prof.t_grid),
        "probabilities": list(prof.probabilities),
    }
    out.json("margin.json", result)
    out.plot("margin_plot.csv", prof)
    return result


def cmd_lowerbound(cfg, out):
    theta = cfg["scenario"].get("theta", lowerbound.DEFAULT_THETA)
    result = lowerbound.report(cfg["kappa"], cfg["c"], tuple(cfg["n_values"]), theta)
    out.json("lowerbound.json", result)
    return result


def _alpha(cfg, sc):
    a = cfg.get("alpha")
    if a is None:
        return margin.fit_margin_exponent(sc).alpha_hat
    return math.inf if a == "inf" else float(a)


def cmd_rates(cfg, out):
    sc = _scenario(cfg)
    ecfg = experiments.ExperimentConfig(
        sc,
        mode=cfg["mode"],
        n_grid=tuple(cfg["n_grid"]),
        trials=cfg["trials"],
        master_seed=cfg["seed"],
        risk_method=cfg["risk_method"],
        threads=cfg["threads"],
    )
    curve = experiments.run_excess_risk_curve(ecfg)
    out.text("curve.csv", curve.to_csv())
    alpha = _alpha(cfg, sc)
    out.plot("curve_plot.csv", curve, alpha=alpha, c_prime=cfg.get("c_prime"))
    fit = experiments.fit_rate(curve, alpha)
    result = {"alpha": alpha, "fit": fit.to_dict(), "n_used": list(fit.n_used)}
    out.json("rate_fit.json", fit.to_dict())
    return result


def cmd_lipschitz(cfg, out):
    sc = _scenario(cfg)
    pair = sc.pair
    if pair.discrete:
        x_grid = np.array(pair.alphabet)
    else:
        lo, hi = pair.domain()
        x_grid = np.linspace(lo, hi, 2001)
    rows = []
    for theta in cfg["thetas"]:
        q_grid = np.linspace(theta, 1.0 - theta, 15)
        row = {
            "theta": theta,
            "bound": experiments.lipschitz_bound(theta),
            "probe": experiments.lipschitz_probe(pair, theta, x_grid, q_grid),
        }
        if not pair.discrete and not pair.identical:
            try:
                row["boundary_probe"] = experiments.boundary_adapted_probe(pair, theta)
            except ValueError:
                row["boundary_probe"] = None
        rows.append(row)
    result = {"scenario": scenario_to_dict(sc), "probes": rows}
    out.json("lipschitz.json", result)
    return result


def cmd_concentration(cfg, out):
    sc = _scenario(cfg)
    eps = cfg.get("eps_grid") or [0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1]
    table = experiments.concentration_probe(sc, cfg["mode"], cfg["n"], eps, cfg["trials"], cfg["seed"])
    rows = [
        {"eps": e, "tail": p, "stderr": s, "hoeffding": h, "within_hoeffding": p <= h + 3 * s}
        for e, p, s, h in table.rows()
    ]
    result = {"scenario": scenario_to_dict(sc), "mode": cfg["mode"], "n": cfg["n"], "trials": cfg["trials"], "rows": rows}
    out.json("concentration.json", result)
    return result


_HANDLERS = {
    "risk": cmd_risk,
    "estimate": cmd_estimate,
    "divergence": cmd_divergence,
    "margin": cmd_margin,
    "lowerbound": cmd_lowerbound,
    "rates": cmd_rates,
    "lipschitz": cmd_lipschitz,
    "concentration": cmd_concentration,
}


# ---------------------------------------------------------------- output


class _Sink:
    """Collects outputs; writes them only when an output directory is set."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir) if out_dir else None
        self.files = []
        if self.dir is not None:
            try:
                self.dir.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise OutputError(f"cannot create output directory {self.dir}: {exc}") from exc

    def text(self, name, content):
        if self.dir is None:
            return
        try:
            (self.dir / name).write_text(content)
        except OSError as exc:
            raise OutputError(f"cannot write {self.dir / name}: {exc}") from exc
        self.files.append(name)

    def json(self, name, obj):
        self.text(name, dumps(obj))

    def plot(self, name, result, **kw):
        if self.dir is None:
            return
        paths = emit_plot_data(result, self.dir / name, **kw)
        self.files.extend(p.name for p in paths)

    def manifest(self, cfg, started):
        if self.dir is None:
            return
        finished = _dt.datetime.now(_dt.timezone.utc).isoformat()
        man = {
            "tool": "priordetect",
            "version": __version__,
            "command": cfg["command"],
            "config": cfg,
            "config_hash": canonical_hash(cfg),
            "master_seed": cfg["seed"],
            "started": started,
            "finished": finished,
            "files": sorted(set(self.files)),
        }
        self.text("manifest.json", dumps(man))


# ---------------------------------------------------------------- argparse


def _csv_numbers(kind):
    def parse(text):
        try:
            return [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated {kind.__name__} values, got {text!r}")

    return parse


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", metavar="PATH", help="JSON config file")
    g.add_argument("--out", metavar="DIR", help="write outputs and manifest.json here")
    g.add_argument("--seed", type=int, help=f"master seed (default {experiments.DEFAULT_SEED})")
    g.add_argument("--threads", type=int, help="worker threads for trials (0 = all cores)")
    s = common.add_argument_group("scenario overrides")
    s.add_argument("--family", choices=["gaussian", "gaussian_mixture", "discrete", "appendix_a"])
    s.add_argument("--q", type=float, help="true prior")
    s.add_argument("--theta", type=float, help="trimming level")
    s.add_argument("--mean0", type=float)
    s.add_argument("--mean1", type=float)
    s.add_argument("--sigma", type=float)
    s.add_argument("--pair-kappa", dest="kappa_pair", type=float, help="kappa of an appendix_a pair")
    s.add_argument("--pair-c", dest="c_pair", type=float, help="c of an appendix_a pair")
    s.add_argument("--t", type=float, help="split point of an appendix_a pair")

    parser = argparse.ArgumentParser(prog="priordetect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("risk", parents=[common], help="risk of the detector run with a given prior")
    p.add_argument("--q-used", dest="q_used", type=float)
    p.add_argument("--method", dest="risk_method", choices=["auto", "closed-form", "quadrature", "monte-carlo"])

    p = sub.add_parser("estimate", parents=[common], help="estimate the prior from one simulated sample")
    p.add_argument("--mode", choices=["labeled", "unlabeled"])
    p.add_argument("--n", type=int)

    p = sub.add_parser("divergence", parents=[common], help="distances between the two densities")
    p.add_argument("--kinds", type=lambda s: s.split(","), help=f"subset of {','.join(divergences.KINDS)}")

    p = sub.add_parser("margin", parents=[common], help="margin profile and fitted exponent")
    p.add_argument("--t-grid", dest="t_grid", type=_csv_numbers(float))

    p = sub.add_parser("lowerbound", parents=[common], help="two-hypothesis construction report")
    p.add_argument("--kappa", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--n-values", dest="n_values", type=_csv_numbers(int))

    p = sub.add_parser("rates", parents=[common], help="Monte Carlo excess-risk curve and rate fit")
    p.add_argument("--mode", choices=["labeled", "unlabeled"])
    p.add_argument("--n-grid", dest="n_grid", type=_csv_numbers(int))
    p.add_argument("--trials", type=int)
    p.add_argument("--method", dest="risk_method", choices=["auto", "closed-form", "quadrature"])
    p.add_argument("--alpha", type=lambda s: "inf" if s == "inf" else float(s), help="margin exponent for the fit")
    p.add_argument("--c-prime", dest="c_prime", type=float, help="floor constant for the plot overlay")

    p = sub.add_parser("lipschitz", parents=[common], help="probe the prior-sensitivity of the posterior")
    p.add_argument("--thetas", type=_csv_numbers(float))

    p = sub.add_parser("concentration", parents=[common], help="tail probabilities of the prior estimate")
    p.add_argument("--mode", choices=["labeled", "unlabeled"])
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--eps-grid", dest="eps_grid", type=_csv_numbers(float))
    return parser


def run(args):
    """Execute parsed arguments; returns ``(exit_code, result_or_message)``."""
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    sink = None
    try:
        cfg = resolve_config(args)
        sink = _Sink(args.out)
        try:
            result = _HANDLERS[args.command](cfg, sink)
        finally:
            # partial outputs of a failed run are still listed
            sink.manifest(cfg, started)
    except ConfigError as exc:
        return EXIT_CONFIG, str(exc)
    except PriorDetectError as exc:
        return EXIT_NUMERIC, f"{type(exc).__module__}.{type(exc).__name__}: {exc}"
    except (ValueError, TypeError, KeyError) as exc:
        return EXIT_CONFIG, f"invalid configuration: {exc}"
    return EXIT_OK, result


def main(argv=None):
    args = build_parser().parse_args(argv)
    code, payload = run(args)
    if code == EXIT_OK:
        sys.stdout.write(dumps(payload))
    else:
        print(f"priordetect: error: {payload}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
