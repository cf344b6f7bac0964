"""Batch experiment runner with seeded, reproducible records.

Each run validates its JSON config strictly (unknown keys are rejected so
typos cannot silently corrupt sweeps), executes one named experiment, and
writes a CSV row with a fixed column order plus a JSON sidecar holding the
full record.  Identical (config, seed) pairs reproduce identical result
maps.

Exit codes: 0 success, 2 validation error, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cfrac import hensley_dim, kurzweil_band
from .dynamics import dani_check
from .errors import BudgetExceededError, ValidationError
from .fractal import CodingScheme, build_survivor_tree, build_tree, dimension_bounds
from .functions import ApproxFunction, DimFunction, classify
from .lattices import Lattice, epsilon_K_profile
from .norms import Dimensions, MixedNorm, NormSpec, eta, theta, unit_ball_volume, zeta
from .scheduler import build_schedule, constant_schedule
from .window import mc_window_measure, regime_flag, sum_with_multiplicity

__all__ = ["ExperimentConfig", "RunRecord", "run", "sweep", "main"]

EXPERIMENTS = (
    "constants",
    "classify",
    "window-measure",
    "multiplicity-sum",
    "schedule",
    "tree-dimension",
    "dani-check",
    "hensley-compare",
    "epsilon-scan",
)

_ALLOWED_KEYS = {
    "experiment",
    "m",
    "n",
    "mu",
    "nv",
    "psi",
    "f",
    "Q",
    "Q0",
    "Q1",
    "Q2",
    "kappa",
    "beta",
    "alpha",
    "depth",
    "samples",
    "seed",
    "K",
    "k_max",
    "t_grid",
    "t",
    "A",
    "N",
    "keep",
    "out",
}

_STOCHASTIC = {"window-measure", "tree-dimension"}

CSV_COLUMNS = {
    "constants": ["m", "n", "mu", "nv", "V_mu", "V_nu", "zeta_d", "theta", "eta"],
    "classify": ["m", "n", "mu", "nv", "psi", "f", "L", "L_error", "eta", "verdict", "exact"],
    "window-measure": [
        "m",
        "n",
        "mu",
        "nv",
        "kappa_or_family",
        "Q1",
        "Q2",
        "samples",
        "seed",
        "estimate",
        "stderr",
        "F_psi",
        "eta",
        "prediction",
        "ratio",
        "regime",
    ],
    "multiplicity-sum": [
        "m",
        "n",
        "mu",
        "nv",
        "kappa_or_family",
        "Q1",
        "Q2",
        "sum",
        "F_psi",
        "eta",
        "eta_F",
        "ratio",
        "regime",
    ],
    "schedule": [
        "kappa_or_family",
        "beta",
        "alpha",
        "k_max",
        "exponents",
        "F_min",
        "F_max",
        "upper_slack",
    ],
    "tree-dimension": [
        "mode",
        "depth",
        "dim_lower",
        "dim_upper",
        "hausdorff_lower",
        "box_upper",
        "P_minus",
        "P_plus",
        "sampled",
    ],
    "dani-check": ["m", "n", "kappa_or_family", "n_times", "agreement", "horizon"],
    "hensley-compare": [
        "kappa",
        "hensley",
        "kurzweil_lower",
        "kurzweil_upper",
        "inside_band",
        "theta_11_slope",
    ],
    "epsilon-scan": ["m", "n", "t", "Q", "K", "epsilon"],
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment description (strict field set)."""

    experiment: str
    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        problems = []
        unknown = set(data) - _ALLOWED_KEYS
        if unknown:
            problems.append("unknown config fields: %s" % ", ".join(sorted(unknown)))
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            problems.append("experiment must be one of %s" % ", ".join(EXPERIMENTS))
        if exp in _STOCHASTIC and data.get("seed") is None:
            problems.append("seed is mandatory for stochastic experiment %r" % exp)
        if problems:
            raise ValidationError(problems)
        return cls(exp, dict(data))

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def require(self, *keys):
        missing = [k for k in keys if self.raw.get(k) is None]
        if missing:
            raise ValidationError(["missing config fields: %s" % ", ".join(missing)])
        return [self.raw[k] for k in keys]


@dataclass(frozen=True)
class RunRecord:
    """Config echo, provenance, and the flat result map of one run."""

    config: dict
    timestamp: str
    version: str
    results: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "timestamp": self.timestamp,
                "version": self.version,
                "results": self.results,
            },
            indent=2,
            sort_keys=True,
        )


def _norm_from(descr, dim: int) -> NormSpec:
    if descr is None or descr == "sup":
        return NormSpec.sup(dim)
    if isinstance(descr, str):
        if descr in ("l1", "l2"):
            return NormSpec(descr, dim)
        raise ValidationError(["unknown norm %r" % descr])
    if isinstance(descr, dict) and descr.get("kind") == "lp":
        return NormSpec.lp(dim, float(descr["p"]))
    raise ValidationError(["unparseable norm descriptor %r" % (descr,)])


def _norm_label(descr) -> str:
    if descr is None:
        return "sup"
    if isinstance(descr, str):
        return descr
    return "lp(%g)" % descr["p"]


def _dims_from(cfg: ExperimentConfig) -> Dimensions:
    m, n = cfg.get("m", 1), cfg.get("n", 1)
    try:
        return Dimensions(int(m), int(n))
    except (TypeError, ValueError) as exc:
        raise ValidationError([str(exc)])


def _psi_from(cfg: ExperimentConfig, dims: Dimensions) -> ApproxFunction:
    descr = cfg.get("psi")
    if descr is None and cfg.get("kappa") is not None:
        descr = {"family": "power-law", "kappa": cfg.get("kappa")}
    if descr is None:
        raise ValidationError(["experiment needs a psi descriptor (or kappa)"])
    try:
        family = descr["family"]
        if family == "power-law":
            return ApproxFunction.power_law(dims, float(descr["kappa"]))
        if family == "log-corrected":
            return ApproxFunction.log_corrected(dims, float(descr["gamma"]))
        if family == "tabulated":
            return ApproxFunction.tabulated(dims, [tuple(s) for s in descr["samples"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(["bad psi descriptor: %s" % exc])
    raise ValidationError(["unknown psi family %r" % descr.get("family")])


def _psi_label(cfg: ExperimentConfig) -> str:
    descr = cfg.get("psi")
    if descr is None and cfg.get("kappa") is not None:
        return "kappa=%g" % cfg.get("kappa")
    if descr is None:
        return "none"
    family = descr.get("family")
    if family == "power-law":
        return "kappa=%g" % descr["kappa"]
    if family == "log-corrected":
        return "log-corrected(%g)" % descr["gamma"]
    return family


def _f_from(cfg: ExperimentConfig, dims: Dimensions) -> DimFunction:
    descr = cfg.get("f")
    if descr is None:
        raise ValidationError(["experiment needs an f descriptor"])
    try:
        family = descr["family"]
        if family == "power":
            return DimFunction.power(dims, float(descr["s"]))
        if family == "log-power":
            return DimFunction.log_power(dims, float(descr["s"]))
        if family == "corollary":
            base = ExperimentConfig("classify", {"experiment": "classify", "psi": descr["psi"]})
            psi0 = _psi_from(base, dims)
            return DimFunction.corollary(dims, psi0, float(descr.get("rho0", 0.5)))
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(["bad f descriptor: %s" % exc])
    raise ValidationError(["unknown f family %r" % descr.get("family")])


# --- experiment bodies ----------------------------------------------------


def _run_constants(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    mu = _norm_from(cfg.get("mu"), dims.m)
    nv = _norm_from(cfg.get("nv"), dims.n)
    return {
        "m": dims.m,
        "n": dims.n,
        "mu": _norm_label(cfg.get("mu")),
        "nv": _norm_label(cfg.get("nv")),
        "V_mu": unit_ball_volume(mu),
        "V_nu": unit_ball_volume(nv),
        "zeta_d": zeta(dims.d),
        "theta": theta(dims, mu, nv),
        "eta": eta(dims, mu, nv),
    }


def _run_classify(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    mu = _norm_from(cfg.get("mu"), dims.m)
    nv = _norm_from(cfg.get("nv"), dims.n)
    psi = _psi_from(cfg, dims)
    f = _f_from(cfg, dims)
    try:
        result = classify(f, psi, dims, mu, nv)
    except ValueError as exc:
        raise ValidationError([str(exc)])
    return {
        "m": dims.m,
        "n": dims.n,
        "mu": _norm_label(cfg.get("mu")),
        "nv": _norm_label(cfg.get("nv")),
        "psi": _psi_label(cfg),
        "f": cfg.get("f", {}).get("family", "?"),
        "L": result.L_value,
        "L_error": result.L_error,
        "eta": result.eta_value,
        "verdict": result.verdict.value,
        "exact": int(result.exact),
    }


def _run_window_measure(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    mu = _norm_from(cfg.get("mu"), dims.m)
    nv = _norm_from(cfg.get("nv"), dims.n)
    psi = _psi_from(cfg, dims)
    Q1, Q2, samples, seed = cfg.require("Q1", "Q2", "samples", "seed")
    if Q2 < Q1 or Q1 < 1:
        raise ValidationError(["requires 1 <= Q1 <= Q2"])
    if int(samples) < 1000:
        raise ValidationError(["samples must be >= 1000"])
    est, err = mc_window_measure(psi, float(Q1), float(Q2), dims, mu, nv, int(samples), int(seed))
    F = psi.F(float(Q1), float(Q2))
    ev = eta(dims, mu, nv)
    prediction = 1.0 - math.exp(-ev * F)
    ratio = (-math.log1p(-est) / (ev * F)) if (0 <= est < 1 and ev * F > 0) else float("nan")
    return {
        "m": dims.m,
        "n": dims.n,
        "mu": _norm_label(cfg.get("mu")),
        "nv": _norm_label(cfg.get("nv")),
        "kappa_or_family": _psi_label(cfg),
        "Q1": float(Q1),
        "Q2": float(Q2),
        "samples": int(samples),
        "seed": int(seed),
        "estimate": est,
        "stderr": err,
        "F_psi": F,
        "eta": ev,
        "prediction": prediction,
        "ratio": ratio,
        "regime": regime_flag(psi, float(Q1), float(Q2)),
    }


def _run_multiplicity_sum(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    mu = _norm_from(cfg.get("mu"), dims.m)
    nv = _norm_from(cfg.get("nv"), dims.n)
    psi = _psi_from(cfg, dims)
    Q1, Q2 = cfg.require("Q1", "Q2")
    if Q2 < Q1 or Q1 < 1:
        raise ValidationError(["requires 1 <= Q1 <= Q2"])
    total = sum_with_multiplicity(psi, float(Q1), float(Q2), dims, mu, nv)
    F = psi.F(float(Q1), float(Q2))
    ev = eta(dims, mu, nv)
    return {
        "m": dims.m,
        "n": dims.n,
        "mu": _norm_label(cfg.get("mu")),
        "nv": _norm_label(cfg.get("nv")),
        "kappa_or_family": _psi_label(cfg),
        "Q1": float(Q1),
        "Q2": float(Q2),
        "sum": total,
        "F_psi": F,
        "eta": ev,
        "eta_F": ev * F,
        "ratio": total / (ev * F) if ev * F > 0 else float("nan"),
        "regime": regime_flag(psi, float(Q1), float(Q2)),
    }


def _run_schedule(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    psi = _psi_from(cfg, dims)
    (beta,) = cfg.require("beta")
    alpha = cfg.get("alpha", float(dims.alpha))
    k_max = int(cfg.get("k_max", 50))
    try:
        sched = build_schedule(psi, float(beta), float(alpha), k_max)
    except ValueError as exc:
        raise ValidationError([str(exc)])
    blocks = [sched.F_block(k) for k in range(k_max)]
    out = {
        "kappa_or_family": _psi_label(cfg),
        "beta": float(beta),
        "alpha": float(alpha),
        "k_max": k_max,
        "exponents": " ".join(str(e) for e in sched.exponents),
        "F_min": min(blocks),
        "F_max": max(blocks),
        "upper_slack": float(beta) + psi.M_psi * float(alpha) * math.log(2.0) - max(blocks),
    }
    if psi.family == "power-law":
        const = constant_schedule(psi.kappa, float(beta), float(alpha), k_max, dims)
        out["constant_exponent"] = const.exponents[0]
        out["matches_constant"] = int(const.exponents == sched.exponents)
    return out


def _run_tree_dimension(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    depth = int(cfg.get("depth", 6))
    seed = int(cfg.get("seed", 0))
    if cfg.get("N") is not None:
        N, keep = int(cfg.get("N")), cfg.get("keep")
        if keep is None or not (0 < int(keep) <= N ** dims.D):
            raise ValidationError(["synthetic tree needs keep in 1..N^D"])
        keep = int(keep)
        kappa_stub = 1.0  # any divergent psi; blocks of constant size N
        exponent = int(round(math.log2(N)))
        if 2 ** exponent != N:
            raise ValidationError(["synthetic tree base N must be a power of 2"])
        from .scheduler import Schedule

        psi_stub = ApproxFunction.power_law(dims, kappa_stub)
        sched = Schedule(psi_stub, 1.0, float(dims.alpha), (exponent,) * depth)
        scheme = CodingScheme(sched, dims)
        tree = build_tree(scheme, lambda word, a: a < keep, depth)
        mode = "synthetic"
    else:
        psi = _psi_from(cfg, dims)
        (beta,) = cfg.require("beta")
        sched = build_schedule(psi, float(beta), float(dims.alpha), depth + 1)
        scheme = CodingScheme(sched, dims)
        tree = build_survivor_tree(
            psi, float(cfg.get("Q0", 1.0)), scheme, depth, seed=seed,
            child_samples=int(cfg.get("samples", 512)),
        )
        mode = "survivor"
    f = _f_from(cfg, dims) if cfg.get("f") else DimFunction.power(dims, dims.D)
    bounds = dimension_bounds(tree, f)
    return {
        "mode": mode,
        "depth": depth,
        "dim_lower": bounds.dim_lower,
        "dim_upper": bounds.dim_upper,
        "hausdorff_lower": bounds.hausdorff_lower,
        "box_upper": bounds.box_upper,
        "P_minus": " ".join("%.6f" % p for p in tree.P_minus),
        "P_plus": " ".join("%.6f" % p for p in tree.P_plus),
        "sampled": int(tree.sampled),
    }


def _run_dani_check(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    mu = _norm_from(cfg.get("mu"), dims.m)
    nv = _norm_from(cfg.get("nv"), dims.n)
    psi = _psi_from(cfg, dims)
    A, t_grid = cfg.require("A", "t_grid")
    A = np.asarray(A, dtype=float)
    report = dani_check(A, psi, [float(t) for t in t_grid], dims, mu, nv)
    return {
        "m": dims.m,
        "n": dims.n,
        "kappa_or_family": _psi_label(cfg),
        "n_times": len(report.ts),
        "agreement": report.agreement,
        "horizon": report.horizon,
    }


def _run_hensley_compare(cfg: ExperimentConfig) -> dict:
    (kappa,) = cfg.require("kappa")
    kappa = float(kappa)
    h = hensley_dim(kappa)
    lo, hi = kurzweil_band(kappa)
    return {
        "kappa": kappa,
        "hensley": h,
        "kurzweil_lower": lo,
        "kurzweil_upper": hi,
        "inside_band": int(lo <= h <= hi),
        "theta_11_slope": 6.0 / math.pi ** 2,
    }


def _run_epsilon_scan(cfg: ExperimentConfig) -> dict:
    dims = _dims_from(cfg)
    mu = _norm_from(cfg.get("mu"), dims.m)
    nv = _norm_from(cfg.get("nv"), dims.n)
    norm = MixedNorm(dims, mu, nv)
    Q, K = cfg.require("Q", "K")
    Ks = [float(k) for k in (K if isinstance(K, list) else [K])]
    t = cfg.get("t")
    if t is None:
        lat = Lattice.standard(dims.d)
    else:
        from .dynamics import make_g, make_u

        A = np.asarray(cfg.get("A", np.zeros((dims.m, dims.n))), dtype=float)
        lat = Lattice(make_g(float(t), dims) @ make_u(A))
    profile = epsilon_K_profile(lat, Ks, float(Q), norm)
    return {
        "m": dims.m,
        "n": dims.n,
        "t": float(t) if t is not None else 0.0,
        "Q": float(Q),
        "K": " ".join("%g" % k for k in Ks),
        "epsilon": " ".join("%.8g" % profile[k] for k in Ks),
    }


_BODIES = {
    "constants": _run_constants,
    "classify": _run_classify,
    "window-measure": _run_window_measure,
    "multiplicity-sum": _run_multiplicity_sum,
    "schedule": _run_schedule,
    "tree-dimension": _run_tree_dimension,
    "dani-check": _run_dani_check,
    "hensley-compare": _run_hensley_compare,
    "epsilon-scan": _run_epsilon_scan,
}


def run(config: ExperimentConfig | dict) -> RunRecord:
    """Validate, dispatch, and wrap one experiment into a RunRecord."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    results = _BODIES[config.experiment](config)
    return RunRecord(
        config=dict(config.raw),
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        version=__version__,
        results=results,
    )


def sweep(template: dict, parameter: str, values: list) -> tuple[list, list]:
    """Run the template once per value; failures are recorded per row.

    Returns (records, rows) where rows are CSV-ready dicts sorted by the
    swept parameter, failed rows carrying an 'error' entry.
    """
    if parameter not in _ALLOWED_KEYS:
        raise ValidationError(["unknown sweep parameter %r" % parameter])
    records, rows = [], []
    for v in values:
        data = dict(template)
        data[parameter] = v
        row = {parameter: v}
        try:
            record = run(data)
            records.append(record)
            row.update(record.results)
        except (ValidationError, BudgetExceededError, ValueError) as exc:
            records.append(None)
            row["error"] = str(exc)
        rows.append(row)
    rows.sort(key=lambda r: r[parameter])
    return records, rows


# --- persistence and entry point -------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_outputs(record: RunRecord, out_dir: str) -> None:
    name = record.config["experiment"]
    columns = CSV_COLUMNS[name]
    row = {c: record.results.get(c, "") for c in columns}
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns)
    writer.writeheader()
    writer.writerow(row)
    _atomic_write(os.path.join(out_dir, "%s.csv" % name), buf.getvalue())
    _atomic_write(os.path.join(out_dir, "%s.json" % name), record.to_json() + "\n")


def _summary(record: RunRecord) -> str:
    lines = ["experiment %s (library %s)" % (record.config["experiment"], record.version)]
    for key in CSV_COLUMNS[record.config["experiment"]]:
        if key in record.results:
            lines.append("  %-18s %s" % (key, record.results[key]))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="badapprox",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="CSV column orders:\n"
        + "\n".join("  %s: %s" % (k, ",".join(v)) for k, v in CSV_COLUMNS.items()),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help="run the %s experiment" % name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=".", help="output directory")
    p = sub.add_parser("sweep", help="run one experiment across parameter values")
    p.add_argument("--config", required=True, help="JSON template config path")
    p.add_argument("--param", required=True, help="name of the swept field")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2

    try:
        if args.command == "sweep":
            values = []
            for chunk in args.values.split(","):
                try:
                    values.append(json.loads(chunk))
                except json.JSONDecodeError:
                    values.append(chunk)
            records, rows = sweep(data, args.param, values)
            name = data.get("experiment", "sweep")
            columns = [args.param] + CSV_COLUMNS.get(name, []) + ["error"]
            import io

            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow({c: row.get(c, "") for c in columns})
            _atomic_write(os.path.join(args.out, "%s_sweep.csv" % name), buf.getvalue())
            for i, record in enumerate(records):
                if record is not None:
                    _atomic_write(
                        os.path.join(args.out, "%s_sweep_%02d.json" % (name, i)),
                        record.to_json() + "\n",
                    )
            print("sweep of %s over %s: %d rows" % (name, args.param, len(rows)))
            for row in rows:
                print("  %s" % row)
            return 0
        data["experiment"] = args.command
        if args.seed is not None:
            data["seed"] = args.seed
        record = run(data)
        _write_outputs(record, args.out)
        print(_summary(record))
        return 0
    except ValidationError as exc:
        for problem in exc.problems:
            print("validation: %s" % problem, file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print("budget exceeded: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
