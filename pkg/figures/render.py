#!/usr/bin/env python3
"""Render publication-style figures from the experiment runner's CSV output.

Usage:
    python figures/render.py --spec figures/specs/fig2.json

The spec file names a figure id, the input CSV, and the output image:

    {"figure": "fig6a", "csv": "figures/data/hom-beat.csv",
     "out": "figures/out/fig6a.svg"}

Rendering is a pure function of the CSV content: nothing re-runs the
simulation, and analytic guide curves are evaluated only from values already
in the file.  Output is SVG by default (diff-friendly and byte-deterministic
for identical inputs); a ``.png`` suffix on ``out`` switches formats.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "photonbeat-figures"

import matplotlib.pyplot as plt
import numpy as np

FIGURES = {}

REQUIRED_COLUMNS = {
    "fig2": ("kappa_eff_over_delta", "fidelity"),
    "fig4": ("delta_over_kappa", "gamma_r_over_kappa", "avg_fidelity"),
    "fig5": ("kappa_eff_over_delta", "gamma_r_over_delta", "avg_fidelity"),
    "fig6a": ("delta", "tau", "density"),
    "fig6b": ("delta_over_kappa", "coalescence"),
    "fig7a": ("gamma_r", "tau", "density_same", "ideal_density"),
    "fig7b": ("gamma_r", "visibility"),
}


class FigureError(Exception):
    pass


def figure(fig_id):
    def wrap(fn):
        FIGURES[fig_id] = fn
        return fn

    return wrap


def load_columns(path: Path, fig_id: str) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[fig_id] if c not in header]
        if missing:
            raise FigureError(
                f"{path}: missing required columns {missing} for {fig_id} "
                f"(found {header})"
            )
        rows = list(reader)
    if not rows:
        raise FigureError(f"{path}: no data rows")
    return {
        c: np.array([float(r[c]) for r in rows]) for c in REQUIRED_COLUMNS[fig_id]
    }


@figure("fig2")
def fig2(data, ax):
    """Slow-detector fidelity vs kappa_eff/delta (log-log)."""
    x, f = data["kappa_eff_over_delta"], data["fidelity"]
    order = np.argsort(x)
    ax.loglog(x[order], f[order], "-", lw=1.8, label="sweep")
    guide = 0.5 * (1 + x[order] ** 2 / (1 + x[order] ** 2))
    ax.loglog(x[order], guide, "k:", lw=1.0, label="(1 + 1/(1+(delta/k)^2))/2")
    ax.set_xlabel("kappa_eff / delta")
    ax.set_ylabel("fidelity")
    ax.legend(frameon=False, fontsize=8)


@figure("fig4")
def fig4(data, ax):
    """Average-fidelity error vs delta/gamma_r (log-log)."""
    ratio = data["delta_over_kappa"] / data["gamma_r_over_kappa"]
    err = 1.0 - data["avg_fidelity"]
    order = np.argsort(ratio)
    ax.loglog(ratio[order], err[order], "o-", ms=3, lw=1.2)
    ax.set_xlabel("delta / gamma_r")
    ax.set_ylabel("1 - average fidelity")


@figure("fig5")
def fig5(data, ax):
    """Average fidelity over the (kappa_eff, gamma_r) plane (fixed detuning)."""
    x = data["kappa_eff_over_delta"]
    y = data["gamma_r_over_delta"]
    xs, ys = np.unique(x), np.unique(y)
    grid = np.full((len(ys), len(xs)), np.nan)
    xi = np.searchsorted(xs, x)
    yi = np.searchsorted(ys, y)
    grid[yi, xi] = data["avg_fidelity"]
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", vmin=0.5, vmax=1.0)
    ax.figure.colorbar(mesh, ax=ax, label="average fidelity")
    cs = ax.contour(xs, ys, grid, levels=[0.9, 0.99], colors="w", linewidths=0.8)
    ax.clabel(cs, fontsize=7)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("kappa_eff / delta")
    ax.set_ylabel("gamma_r / delta")


@figure("fig6a")
def fig6a(data, ax):
    """Same-detector beat density vs click separation, one curve per detuning."""
    styles = ("-", "--", ":", "-.")
    for style, d in zip(styles, sorted(set(data["delta"]), reverse=True)):
        sel = data["delta"] == d
        ax.plot(
            data["tau"][sel],
            data["density"][sel],
            style,
            lw=1.4,
            label=f"delta = {d / math.pi:g} pi",
        )
    ax.set_xlabel("t2 - t1")
    ax.set_ylabel("p(t2,+ | t1,+)")
    ax.legend(frameon=False, fontsize=8)


@figure("fig6b")
def fig6b(data, ax):
    """Total coalescence probability vs detuning."""
    x, p = data["delta_over_kappa"], data["coalescence"]
    order = np.argsort(x)
    ax.plot(x[order], p[order], "-", lw=1.8, label="sweep")
    guide = 0.5 * (1 + 1 / (1 + x[order] ** 2))
    ax.plot(x[order], guide, "k:", lw=1.0, label="(1 + 1/(1+(delta/k)^2))/2")
    ax.set_ylim(0.45, 1.02)
    ax.set_xlabel("delta / kappa")
    ax.set_ylabel("p(+ | +)")
    ax.legend(frameon=False, fontsize=8)


@figure("fig7a")
def fig7a(data, ax):
    """Observed-interval beat for two detector speeds plus the ideal curve."""
    gammas = sorted(set(data["gamma_r"]))
    styles = ("-", "--")
    for style, g in zip(styles, gammas):
        sel = data["gamma_r"] == g
        ax.plot(data["tau"][sel], data["density_same"][sel], style, lw=1.4,
                label=f"gamma_r = {g:g}")
    sel = data["gamma_r"] == gammas[0]
    ax.plot(data["tau"][sel], data["ideal_density"][sel], "k:", lw=1.0, label="ideal")
    ax.set_xlabel("tau = t2 - t1")
    ax.set_ylabel("p(tau, + | +)")
    ax.legend(frameon=False, fontsize=8)


@figure("fig7b")
def fig7b(data, ax):
    """Fringe visibility vs detector response rate."""
    x, v = data["gamma_r"], data["visibility"]
    order = np.argsort(x)
    ax.semilogx(x[order], v[order], "o-", ms=3, lw=1.2)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("gamma_r")
    ax.set_ylabel("fringe visibility")


def render(spec: dict) -> Path:
    fig_id = spec.get("figure")
    if fig_id not in FIGURES:
        raise FigureError(f"unknown figure id {fig_id!r}; expected one of {sorted(FIGURES)}")
    for key in ("csv", "out"):
        if key not in spec:
            raise FigureError(f"spec is missing the {key!r} field")
    data = load_columns(Path(spec["csv"]), fig_id)
    out = Path(spec["out"])

    fig, ax = plt.subplots(figsize=(4.6, 3.2), dpi=150)
    try:
        FIGURES[fig_id](data, ax)
        ax.set_title(fig_id)
        fig.tight_layout()
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata={"Date": None} if out.suffix == ".svg" else None)
    finally:
        plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--spec", required=True, help="JSON figure spec")
    args = parser.parse_args(argv)
    try:
        with open(args.spec, encoding="utf-8") as fh:
            spec = json.load(fh)
        out = render(spec)
    except (OSError, json.JSONDecodeError, FigureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
