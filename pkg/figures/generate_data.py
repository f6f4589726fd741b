#!/usr/bin/env python3
"""Regenerate the committed CSVs under figures/data/ via the photonbeat CLI.

Each figure's data comes from one experiment run with a pinned config and
seed, so the CSVs (and therefore the rendered images) are reproducible
byte-for-byte.  Run from the repository root:

    python figures/generate_data.py
"""

import json
import math
import subprocess
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
DATA = HERE / "data"

RUNS = {
    "fig2": {
        "experiment": "bk-bad",
        "params": {
            "kappa_eff_over_delta": {"min": 1e-2, "max": 1e2, "n": 61, "scale": "log"}
        },
    },
    "fig4": {
        "experiment": "bk-average",
        "params": {
            "delta": {"min": 0.01, "max": 1.0, "n": 13, "scale": "log"},
            "gamma_r": [1.0],
        },
        "threads": 4,
    },
    "fig5": {
        "experiment": "bk-average",
        "params": {
            "kappa_eff": {"min": 0.1, "max": 10.0, "n": 9, "scale": "log"},
            "gamma_r": {"min": 0.1, "max": 10.0, "n": 9, "scale": "log"},
            "delta": 1.0,
        },
        "threads": 4,
    },
    "fig6a": {
        "experiment": "hom-beat",
        "params": {
            "kappa": 1.0,
            "delta_values": [4 * math.pi, 0.5 * math.pi],
            "tau_max": 5.0,
        },
    },
    "fig6b": {
        "experiment": "hom-coalescence",
        "params": {"delta_over_kappa": {"min": 0.0, "max": 10.0, "n": 201}},
    },
    "fig7a": {
        "experiment": "hom-interval",
        "params": {
            "kappa": 0.1,
            "delta": 2 * math.pi,
            "gamma_r_values": [2.0, 10.0],
            "tau_max": 6.0,
        },
        "threads": 2,
    },
    "fig7b": {
        "experiment": "hom-visibility",
        "params": {
            "kappa": 0.1,
            "delta": 2 * math.pi,
            "gamma_r": {"min": 0.5, "max": 300.0, "n": 17, "scale": "log"},
        },
        "threads": 4,
    },
}


def main() -> int:
    for fig_id, cfg in RUNS.items():
        out_dir = DATA / fig_id
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg = {**cfg, "out_dir": str(out_dir)}
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
            json.dump(cfg, fh)
            cfg_path = fh.name
        print(f"[{fig_id}] photonbeat run --config {cfg_path}")
        result = subprocess.run(
            [sys.executable, "-m", "photonbeat.cli", "run", "--config", cfg_path],
            capture_output=True,
            text=True,
        )
        sys.stdout.write(result.stdout)
        sys.stderr.write(result.stderr)
        if result.returncode != 0:
            return result.returncode
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
