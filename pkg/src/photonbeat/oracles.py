"""Monte Carlo cross-checks of the deterministic solvers.

Each check pits the stochastic samplers (which only share the jump-operator
algebra with the deterministic code paths) against a closed form or an
integrated sector-equation density, and reports a Kolmogorov-Smirnov
distance.  These back the figures: wherever a curve comes out of an ODE or a
formula, the trajectory unraveling must reproduce it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import bkprotocol as bk
from . import detector as det
from . import hom
from .dynamics import sample_ensemble

__all__ = [
    "OracleResult",
    "hom_ideal_interval_ks",
    "hom_cascade_interval_ks",
    "bk_ideal_single_click_ks",
    "bk_cascade_first_click_ks",
    "full_vs_effective_first_click_ks",
    "run_oracle_suite",
]


@dataclass(frozen=True)
class OracleResult:
    name: str
    statistic: float
    threshold: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold


def _same_pair_interval_cdf(params: hom.HOMParams, taus: np.ndarray) -> np.ndarray:
    """CDF of the click interval conditioned on a same-detector pair."""
    k, d = params.kappa, params.delta
    base = 0.5 * (1.0 - np.exp(-k * taus))
    osc = 0.5 * np.real(k / (k - 1j * d) * (1.0 - np.exp(-(k - 1j * d) * taus)))
    return (base + osc) / hom.bad_limit_coalescence(params)


def hom_ideal_interval_ks(
    params: hom.HOMParams, n_traj: int, seed: int, threshold: float = 0.01
) -> OracleResult:
    """Trajectory intervals for same-detector pairs vs the analytic beat."""
    sys = hom.build_hom_system(params)
    t_end = 30.0 / params.kappa
    records = sample_ensemble(sys, hom.initial_two_photon_state(), t_end, seed, n_traj)
    taus = np.array(
        [
            r.clicks[1][0] - r.clicks[0][0]
            for r in records
            if len(r.clicks) == 2 and r.clicks[0][1] == r.clicks[1][1]
        ]
    )
    ks = stats.ks_1samp(taus, lambda t: _same_pair_interval_cdf(params, np.asarray(t)))
    return OracleResult("hom-ideal-interval", float(ks.statistic), threshold, len(taus))


def hom_cascade_interval_ks(
    params: hom.HOMParams, n_traj: int, seed: int, threshold: float = 0.01
) -> OracleResult:
    """Observed-click intervals vs the integrated sector-equation density."""
    sys = hom.build_hom_system(params)
    t_end = 30.0 / params.kappa + 30.0 / params.gamma_r
    bank0 = det.initial_bank(hom.initial_two_photon_state(), params.gamma_r)
    records = det.sample_observed_ensemble(bank0, sys, t_end, seed, n_traj)
    taus = np.array(
        [
            r.clicks[1][0] - r.clicks[0][0]
            for r in records
            if len(r.clicks) == 2 and r.clicks[0][1] == r.clicks[1][1] == "D+"
        ]
    )
    tau_max = max(float(taus.max()) * 1.05, 1.0 / params.kappa)
    # wider first-click window than the figure default: the sampler does not
    # truncate t1, so the reference distribution should not either
    table = hom.interval_distribution_table(params, tau_max, t_upper=8.0 / params.kappa)
    dens = table.densities[("D+", "D+")]
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(table.times))])
    cdf /= cdf[-1]
    ks = stats.ks_1samp(taus, lambda t: np.interp(t, table.times, cdf))
    return OracleResult("hom-cascade-interval", float(ks.statistic), threshold, len(taus))


def bk_ideal_single_click_ks(
    params: bk.BKParams, n_traj: int, seed: int, threshold: float = 0.01
) -> OracleResult:
    """Single-click-branch first-round click times vs kappa_eff e^{-kappa_eff t}.

    The post-selected branch with exactly one first-round click carries
    probability 1/4 per detector, with an exponential click-time density.
    """
    samples = bk.sample_protocol(params, n_traj, seed, detectors="ideal")
    t1 = samples.t1[samples.success]
    ks = stats.ks_1samp(t1, lambda t: 1.0 - np.exp(-params.kappa_eff * np.asarray(t)))
    return OracleResult("bk-ideal-single-click", float(ks.statistic), threshold, len(t1))


def bk_cascade_first_click_ks(
    params: bk.BKParams, n_traj: int, seed: int, threshold: float = 0.01
) -> OracleResult:
    """First observed click times vs the sector-equation density (both detectors)."""
    sys = bk.build_effective_system(params)
    psi0 = bk.initial_excited_state()
    t_end = 30.0 / params.kappa_eff + 30.0 / params.gamma_r
    bank0 = det.initial_bank(psi0, params.gamma_r)
    records = det.sample_observed_ensemble(bank0, sys, t_end, seed, n_traj)
    firsts = np.array([r.clicks[0][0] for r in records if r.clicks])

    prop = det.BankPropagator(sys, params.gamma_r)
    n_grid = 6000
    dt = t_end / n_grid
    step = prop.step_matrix(dt)
    y = bank0.stacked()
    dens = np.empty(n_grid + 1)
    for i in range(n_grid + 1):
        b = det.DetectorBankState.from_stacked(y, sys.space, params.gamma_r)
        dens[i] = det.observed_click_pdf(b, "D+") + det.observed_click_pdf(b, "D-")
        y = step @ y
    ts = np.arange(n_grid + 1) * dt
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * dt)])
    cdf /= cdf[-1]
    ks = stats.ks_1samp(firsts, lambda t: np.interp(t, ts, cdf))
    return OracleResult("bk-cascade-first-click", float(ks.statistic), threshold, len(firsts))


def full_vs_effective_first_click_ks(
    params: bk.BKParams, n_traj: int, seed: int, threshold: float = 0.02
) -> OracleResult:
    """First-click times of the atom-cavity model vs its cavity-eliminated limit.

    In the overdamped regime the atomic excitation decays at 4 g^2 / kappa
    through the cavity; both models are sampled and compared with a
    two-sample KS statistic.
    """
    full_sys = bk.build_full_system(params)
    kappa_eff = 4.0 * params.g**2 / params.kappa
    eff = bk.BKParams(kappa_eff=kappa_eff, delta=params.delta, gamma_r=params.gamma_r)
    eff_sys = bk.build_effective_system(eff)
    t_end = 30.0 / kappa_eff
    recs_full = sample_ensemble(
        full_sys, bk.initial_excited_state(full_sys.space), t_end, seed, n_traj
    )
    recs_eff = sample_ensemble(eff_sys, bk.initial_excited_state(), t_end, seed + 1, n_traj)
    t_full = np.array([r.clicks[0][0] for r in recs_full if r.clicks])
    t_eff = np.array([r.clicks[0][0] for r in recs_eff if r.clicks])
    ks = stats.ks_2samp(t_full, t_eff)
    return OracleResult(
        "bk-full-vs-effective", float(ks.statistic), threshold, min(len(t_full), len(t_eff))
    )


def run_oracle_suite(
    suite: str, n_traj: int, seed: int,
    bk_params: bk.BKParams | None = None,
    hom_params: hom.HOMParams | None = None,
) -> list[OracleResult]:
    """The standard pairing of samplers against densities, per experiment family."""
    bk_params = bk_params or bk.BKParams(kappa_eff=1.0, delta=1.0, gamma_r=1.0)
    hom_params = hom_params or hom.HOMParams(kappa=1.0, delta=3.0, gamma_r=2.0)
    out: list[OracleResult] = []
    if suite in ("bk", "both"):
        out.append(bk_ideal_single_click_ks(bk_params, n_traj, seed))
        out.append(bk_cascade_first_click_ks(bk_params, n_traj, seed + 1))
    if suite in ("hom", "both"):
        out.append(hom_ideal_interval_ks(hom_params, n_traj, seed + 2))
        out.append(hom_cascade_interval_ks(hom_params, n_traj, seed + 3))
    if not out:
        raise ValueError(f"unknown oracle suite {suite!r}")
    return out
