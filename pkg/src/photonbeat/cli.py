"""Experiment runner: parameter sweeps, CSV/JSON emission, config handling.

Every experiment writes one CSV (header row, 17-significant-digit floats,
UNIX newlines, rows in grid order regardless of worker scheduling) plus a
JSON sidecar carrying the resolved config, code version, seed, and any tail
error estimates, so a CSV can always be regenerated byte-identically.

All rates are dimensionless ratios with one reference rate fixed to 1; see
the README for the per-experiment column schemas.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from . import bkprotocol as bk
from . import hom, oracles

__all__ = ["ExperimentConfig", "SweepResult", "run", "validate", "main", "EXPERIMENTS"]

EXPERIMENTS = (
    "bk-ideal",
    "bk-bad",
    "bk-average",
    "bk-conditional",
    "bk-full-validate",
    "hom-beat",
    "hom-coalescence",
    "hom-interval",
    "hom-visibility",
    "mc-oracle",
)

_MC_EXPERIMENTS = ("bk-full-validate", "mc-oracle", "bk-ideal")


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    out_dir: str = "."
    threads: int | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {"experiment", "params", "seed", "out_dir", "threads"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(
            experiment=raw.get("experiment", ""),
            params=raw.get("params", {}),
            seed=raw.get("seed"),
            out_dir=raw.get("out_dir", "."),
            threads=raw.get("threads"),
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "threads": self.threads,
        }


@dataclass
class SweepResult:
    """Tabulated (parameter -> observable) rows plus sidecar metadata."""

    columns: list[str]
    rows: list[tuple]
    sidecar: dict[str, Any]
    csv_path: Path | None = None
    json_path: Path | None = None


def _grid(spec: Any, name: str) -> np.ndarray:
    """Materialize a grid spec: list of values or {min, max, n, scale}."""
    if isinstance(spec, (list, tuple)):
        vals = np.asarray(spec, dtype=float)
        if vals.size == 0:
            raise ValueError(f"{name}: empty value list")
        return vals
    if isinstance(spec, dict):
        try:
            lo, hi, n = spec["min"], spec["max"], int(spec["n"])
        except KeyError as exc:
            raise ValueError(f"{name}: grid spec needs min/max/n") from exc
        if n < 2:
            raise ValueError(f"{name}: sweep grids need n >= 2")
        if spec.get("scale", "linear") == "log":
            if lo <= 0:
                raise ValueError(f"{name}: log grids need min > 0")
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)
    raise ValueError(f"{name}: expected a list or a {{min,max,n[,scale]}} mapping")


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _parallel(fn: Callable, items: Sequence, threads: int) -> list:
    """Map preserving input order; results are buffered and returned in grid order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# experiment implementations (each returns columns, rows, sidecar extras)


def _run_bk_ideal(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    n = int(p.get("n_samples", 100))
    if n < 1:
        raise ValueError("n_samples must be positive")
    delta_range = p.get("delta_range", [0.0, 5.0])
    t_scale = float(p.get("t_scale", 1.0))
    rng = np.random.Generator(np.random.Philox(key=np.uint64(cfg.seed or 0)))
    rows = []
    for _ in range(n):
        t1, t2 = rng.exponential(t_scale, size=2)
        m = int(rng.integers(0, 2))
        delta = float(rng.uniform(*delta_range))
        outcome = bk.ClickOutcome(t1, t2, m)
        psi = bk.ideal_final_state(outcome, delta)
        target = bk.bell_state(m)
        f_raw = abs(target.overlap(psi)) ** 2
        f_corr = abs(target.overlap(bk.phase_correction(psi, outcome, delta))) ** 2
        rows.append((t1, t2, m, delta, f_raw, f_corr))
    cols = ["t1", "t2", "m", "delta", "fidelity_raw", "fidelity_corrected"]
    return cols, rows, {}


def _run_bk_bad(cfg: ExperimentConfig, threads: int):
    ratios = _grid(cfg.params.get("kappa_eff_over_delta",
                                  {"min": 1e-2, "max": 1e2, "n": 81, "scale": "log"}),
                   "kappa_eff_over_delta")
    rows = []
    for r in ratios:
        res = bk.bad_limit_fidelity(bk.BKParams(kappa_eff=1.0, delta=1.0 / r, gamma_r=1.0))
        rows.append((r, 1.0 / r, res.fidelity))
    return ["kappa_eff_over_delta", "delta_over_kappa_eff", "fidelity"], rows, {}


def _run_bk_average(cfg: ExperimentConfig, threads: int):
    """Average-fidelity sweep in one of two parametrizations.

    Default: grid over (delta, gamma_r) at kappa_eff = 1.  When a
    ``kappa_eff`` grid is given, sweep (kappa_eff, gamma_r) at fixed scalar
    ``delta`` instead, which yields a regular surface over the
    (kappa_eff/delta, gamma_r/delta) plane.  Both ratio conventions are
    always emitted.
    """
    p = cfg.params
    gammas = _grid(p.get("gamma_r", {"min": 0.1, "max": 10.0, "n": 11, "scale": "log"}),
                   "gamma_r")
    if "kappa_eff" in p:
        kappas = _grid(p["kappa_eff"], "kappa_eff")
        delta = float(p.get("delta", 1.0))
        points = [(float(k), delta, float(g)) for k in kappas for g in gammas]
    else:
        deltas = _grid(p.get("delta", {"min": 0.1, "max": 10.0, "n": 11, "scale": "log"}),
                       "delta")
        points = [(1.0, float(d), float(g)) for d in deltas for g in gammas]

    def worker(point):
        k, d, g = point
        res = bk.average_fidelity(bk.BKParams(kappa_eff=k, delta=d, gamma_r=g))
        return (d / k, g / k, k / d, g / d, res.value, res.tail_bound)

    rows = _parallel(worker, points, threads)
    tail_max = max(r[5] for r in rows)
    return (
        ["delta_over_kappa", "gamma_r_over_kappa", "kappa_eff_over_delta",
         "gamma_r_over_delta", "avg_fidelity", "tail_error"],
        rows,
        {"max_tail_error": tail_max},
    )


def _run_bk_conditional(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    delta = float(p.get("delta", 1.0))
    gamma_r = float(p.get("gamma_r", 1.0))
    params = bk.BKParams(kappa_eff=1.0, delta=delta, gamma_r=gamma_r)
    ts = _grid(p.get("t", {"min": 0.0, "max": 5.0, "n": 51}), "t")
    rows = []
    for t1 in ts:
        for t2 in ts:
            o = bk.ClickOutcome(float(t1), float(t2), 0)
            rows.append(
                (t1, t2, bk.conditional_fidelity(o, params), bk.joint_click_density(o, params))
            )
    return ["t1", "t2", "fidelity", "joint_density"], rows, {}


def _run_bk_full_validate(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    if "g" not in p or "kappa" not in p:
        raise ValueError("bk-full-validate needs params.g and params.kappa")
    params = bk.BKParams(
        kappa_eff=4.0 * p["g"] ** 2 / p["kappa"],
        delta=float(p.get("delta", 0.0)),
        gamma_r=1.0,
        g=float(p["g"]),
        kappa=float(p["kappa"]),
    )
    n_traj = int(p.get("n_traj", 20000))
    res = oracles.full_vs_effective_first_click_ks(params, n_traj, cfg.seed or 0)
    rows = [
        (params.g, params.kappa, params.kappa_eff, res.statistic, res.threshold,
         res.n_samples, res.passed)
    ]
    cols = ["g", "kappa", "kappa_eff", "ks_distance", "threshold", "n_samples", "passed"]
    return cols, rows, {"oracle": res.name}


def _run_hom_beat(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    kappa = float(p.get("kappa", 1.0))
    deltas = np.asarray(p.get("delta_values", [4 * math.pi, 0.5 * math.pi]), dtype=float)
    if deltas.size == 0:
        raise ValueError("delta_values must be nonempty")
    tau_max = float(p.get("tau_max", 5.0 / kappa))
    rows = []
    for d in deltas:
        params = hom.HOMParams(kappa=kappa, delta=float(d))
        n = max(64, int(hom.POINTS_PER_BEAT * tau_max / (math.pi / abs(d))) if d else 256)
        taus = np.linspace(0.0, tau_max, n)
        dens = hom.ideal_conditional_density(params, taus)
        rows.extend((float(d), float(t), float(v)) for t, v in zip(taus, dens))
    return ["delta", "tau", "density"], rows, {}


def _run_hom_coalescence(cfg: ExperimentConfig, threads: int):
    ratios = _grid(cfg.params.get("delta_over_kappa", {"min": 0.0, "max": 10.0, "n": 101}),
                   "delta_over_kappa")
    rows = [
        (float(r), hom.bad_limit_coalescence(hom.HOMParams(kappa=1.0, delta=float(r))))
        for r in ratios
    ]
    return ["delta_over_kappa", "coalescence"], rows, {}


def _run_hom_interval(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    kappa = float(p.get("kappa", 0.1))
    delta = float(p.get("delta", 2 * math.pi))
    gammas = np.asarray(p.get("gamma_r_values", [2.0, 10.0]), dtype=float)
    if gammas.size == 0:
        raise ValueError("gamma_r_values must be nonempty")
    tau_max = float(p.get("tau_max", 6.0))

    def worker(g):
        params = hom.HOMParams(kappa=kappa, delta=delta, gamma_r=float(g))
        return params, hom.interval_distribution_table(params, tau_max)

    tables = _parallel(worker, list(gammas), threads)
    rows = []
    tails = {}
    for params, table in tables:
        ideal = hom.ideal_conditional_density(params, table.times)
        same = table.densities[("D+", "D+")]
        diff = table.densities[("D+", "D-")]
        keep = slice(None, None, max(1, len(table.times) // 2000))
        for t, s, d2, i in zip(table.times[keep], same[keep], diff[keep], ideal[keep]):
            rows.append((params.gamma_r, float(t), float(s), float(d2), float(i)))
        tails[str(params.gamma_r)] = table.tail_error
    cols = ["gamma_r", "tau", "density_same", "density_diff", "ideal_density"]
    return cols, rows, {"tail_error": tails}


def _run_hom_visibility(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    kappa = float(p.get("kappa", 0.1))
    delta = float(p.get("delta", 2 * math.pi))
    gammas = _grid(p.get("gamma_r", {"min": 0.5, "max": 100.0, "n": 15, "scale": "log"}),
                   "gamma_r")
    tau_eval = float(p.get("tau", 20.0 * math.pi / abs(delta)))

    def worker(g):
        params = hom.HOMParams(kappa=kappa, delta=delta, gamma_r=float(g))
        return (float(g), hom.fringe_visibility(params, tau_eval), tau_eval)

    rows = _parallel(worker, list(gammas), threads)
    return ["gamma_r", "visibility", "tau_eval"], rows, {}


def _run_mc_oracle(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    suite = p.get("suite", "both")
    n_traj = int(p.get("n_traj", 100000))
    results = oracles.run_oracle_suite(suite, n_traj, cfg.seed or 0)
    rows = [(r.name, r.n_samples, r.statistic, r.threshold, r.passed) for r in results]
    return ["check", "n_samples", "ks_statistic", "threshold", "passed"], rows, {}


_RUNNERS = {
    "bk-ideal": _run_bk_ideal,
    "bk-bad": _run_bk_bad,
    "bk-average": _run_bk_average,
    "bk-conditional": _run_bk_conditional,
    "bk-full-validate": _run_bk_full_validate,
    "hom-beat": _run_hom_beat,
    "hom-coalescence": _run_hom_coalescence,
    "hom-interval": _run_hom_interval,
    "hom-visibility": _run_hom_visibility,
    "mc-oracle": _run_mc_oracle,
}


# ---------------------------------------------------------------------------
# validation


def validate(cfg: ExperimentConfig) -> list[dict[str, str]]:
    """Schema and physics sanity report; entries have level 'error' or 'warning'."""
    report: list[dict[str, str]] = []

    def err(msg: str) -> None:
        report.append({"level": "error", "message": msg})

    def warn(msg: str) -> None:
        report.append({"level": "warning", "message": msg})

    if cfg.experiment not in EXPERIMENTS:
        err(f"unknown experiment {cfg.experiment!r}; expected one of {EXPERIMENTS}")
        return report
    if cfg.experiment in _MC_EXPERIMENTS and cfg.seed is None:
        err(f"{cfg.experiment} draws random numbers and requires a seed")
    if cfg.experiment == "bk-full-validate":
        if "g" not in cfg.params or "kappa" not in cfg.params:
            err("bk-full-validate needs params.g and params.kappa")
        elif cfg.params["kappa"] < 10 * cfg.params["g"]:
            warn("kappa/g < 10: adiabatic elimination assumes the overdamped regime")
    for key, val in cfg.params.items():
        if isinstance(val, (list, tuple)) and len(val) == 0:
            err(f"params.{key}: empty range")
        if isinstance(val, dict) and {"min", "max", "n"} <= set(val):
            try:
                _grid(val, key)
            except ValueError as exc:
                err(str(exc))
    gammas: list[float] = []
    if "gamma_r" in cfg.params:
        spec = cfg.params["gamma_r"]
        try:
            gammas = list(np.atleast_1d(_grid(spec, "gamma_r"))) if not np.isscalar(spec) \
                else [float(spec)]
        except ValueError:
            pass
    gammas += [float(g) for g in cfg.params.get("gamma_r_values", [])]

    def scalar(key, default):
        val = cfg.params.get(key, default)
        return float(val) if np.isscalar(val) else default

    scale = max(scalar("kappa", 1.0), abs(scalar("delta", 0.0)) or 1.0)
    for g in gammas:
        if g > 1e6 * scale:
            warn(
                f"gamma_r = {g:g} is {g / scale:.1e} times the slow dynamical scales; "
                "the detector model assumes a response much slower than the optical "
                "period (1/omega << t_r << 1/delta)"
            )
            break
    return report


# ---------------------------------------------------------------------------
# output


def _write_outputs(cfg: ExperimentConfig, result: SweepResult) -> None:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.experiment
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(result.columns) + "\n")
        for row in result.rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result.sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.csv_path = csv_path
    result.json_path = json_path


def run(cfg: ExperimentConfig) -> SweepResult:
    """Execute one experiment, write CSV + JSON sidecar, return the table."""
    report = validate(cfg)
    errors = [e["message"] for e in report if e["level"] == "error"]
    if errors:
        raise ValueError("invalid config: " + "; ".join(errors))
    threads = cfg.threads or int(os.environ.get("PHOTONBEAT_THREADS", "1"))
    columns, rows, extras = _RUNNERS[cfg.experiment](cfg, threads)
    sidecar = {
        "config": cfg.as_dict(),
        "version": __version__,
        "seed": cfg.seed,
        "columns": columns,
        "n_rows": len(rows),
        "warnings": [e["message"] for e in report if e["level"] == "warning"],
    }
    sidecar.update(extras)
    result = SweepResult(columns=columns, rows=rows, sidecar=sidecar)
    _write_outputs(cfg, result)
    return result


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonbeat",
        description="Few-photon interference experiments with detuned sources",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the JSON config")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    p_run.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (overrides config and PHOTONBEAT_THREADS)",
    )
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: cannot load config: {exc}", file=_sys.stderr)
        return 2

    if args.command == "validate":
        report = validate(cfg)
        for entry in report:
            print(f"{entry['level']}: {entry['message']}")
        if not report:
            print("ok")
        return 0

    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    try:
        result = run(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=_sys.stderr)
        return 1
    print(f"wrote {result.csv_path} ({len(result.rows)} rows) and {result.json_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
