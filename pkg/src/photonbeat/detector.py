"""Finite-time-resolution detector cascade for two detectors behind a
beam splitter.

Each detector has internal states Ready and Triggered: a photon arrival flips
R -> T silently, and a triggered detector emits its *observed* click as a
Poisson decay at rate ``gamma_r`` (the inverse time resolution), returning to
R.  Conditioning on "no observed click" yields four coupled sector equations
for the unnormalized system states

    rho_RR' = (L - J[R+] - J[R-]) rho_RR
    rho_+'  = (L - J[R-] - gamma_r) rho_+  + J[R+] rho_RR
    rho_-'  = (L - J[R+] - gamma_r) rho_-  + J[R-] rho_RR
    rho_TT' = (L - 2 gamma_r) rho_TT + J[R-] rho_+ + J[R+] rho_-

with L the Lindblad generator of the observed system and J[R] rho = R rho
R^dag.  The observed-click density for D+ is gamma_r * tr[rho_+ + rho_TT].

The no-click equations are linear and time-invariant, so the default
propagation is via the exact matrix exponential of the stacked generator
(one 4*d^2-dimensional linear system; for the two-cavity interference setup
this is the full set of 64 coupled complex components).  An adaptive RK45
path is kept for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import RK45
from scipy.linalg import expm

from .dynamics import ConditionalSystem, IntegratorError, _Propagator, _Streams
from .qcore import DensityMatrix, StateVector, SpaceMismatchError

__all__ = [
    "DetectorBankState",
    "ClickRecord",
    "BankPropagator",
    "bank_generator",
    "initial_bank",
    "no_click_evolve",
    "observed_click_pdf",
    "observed_click_weight",
    "observed_click_update",
    "sample_observed_clicks",
    "sample_observed_ensemble",
]

LABELS = ("D+", "D-")


@dataclass(frozen=True, eq=False)
class DetectorBankState:
    """Four unnormalized sectors indexed by the detectors' internal states."""

    rho_rr: DensityMatrix
    rho_plus: DensityMatrix
    rho_minus: DensityMatrix
    rho_tt: DensityMatrix
    gamma_r: float

    def __post_init__(self):
        space = self.rho_rr.space
        for rho in (self.rho_plus, self.rho_minus, self.rho_tt):
            if rho.space != space:
                raise SpaceMismatchError("all sectors must share one space")
        if self.gamma_r < 0:
            raise ValueError("gamma_r must be nonnegative")

    @property
    def space(self):
        return self.rho_rr.space

    @property
    def sectors(self) -> tuple[DensityMatrix, ...]:
        return (self.rho_rr, self.rho_plus, self.rho_minus, self.rho_tt)

    def total_trace(self) -> float:
        return sum(rho.trace() for rho in self.sectors)

    def stacked(self) -> np.ndarray:
        return np.concatenate([rho.matrix.reshape(-1) for rho in self.sectors])

    @classmethod
    def from_stacked(cls, y: np.ndarray, space, gamma_r: float) -> "DetectorBankState":
        d = space.dim
        mats = y.reshape(4, d, d)
        # evolution preserves hermiticity only to integrator tolerance
        mats = (mats + np.transpose(mats, (0, 2, 1)).conj()) / 2
        return cls(*(DensityMatrix(m, space) for m in mats), gamma_r=gamma_r)

    def validate(self, tol: float = 1e-9) -> None:
        for rho in self.sectors:
            rho.validate(tol)
        total = self.total_trace()
        if total > 1.0 + tol:
            raise ValueError(f"total trace {total} exceeds 1")


def initial_bank(rho0: DensityMatrix | StateVector, gamma_r: float) -> DetectorBankState:
    """Bank at t=0: all weight in the Ready/Ready sector."""
    if isinstance(rho0, StateVector):
        rho0 = rho0.to_density_matrix()
    zero = DensityMatrix(np.zeros_like(rho0.matrix), rho0.space)
    return DetectorBankState(rho0, zero, zero, zero, gamma_r=gamma_r)


@dataclass(frozen=True, eq=False)
class ClickRecord:
    """Ordered observed clicks (time, label) plus the seed that produced them."""

    clicks: tuple[tuple[float, str], ...]
    seed: int
    t_end: float

    def __post_init__(self):
        times = [t for t, _ in self.clicks]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("click times must be strictly increasing")
        if times and self.t_end < times[-1]:
            raise ValueError("t_end must not precede the last click")


# ---------------------------------------------------------------------------
# the stacked linear generator


def _left(a: np.ndarray, d: int) -> np.ndarray:
    return np.kron(a, np.eye(d, dtype=complex))


def _right(b: np.ndarray, d: int) -> np.ndarray:
    return np.kron(np.eye(d, dtype=complex), b.T)


def _sandwich(r: np.ndarray) -> np.ndarray:
    return np.kron(r, r.conj())


def bank_generator(sys: ConditionalSystem, gamma_r: float) -> np.ndarray:
    """Stacked no-click generator M with d/dt vec(sectors) = M vec(sectors)."""
    try:
        rp = sys.jump("D+").matrix
        rm = sys.jump("D-").matrix
    except KeyError as exc:
        raise ValueError("detector cascade needs jump labels 'D+' and 'D-'") from exc
    d = sys.space.dim
    h = sys.h_cond.matrix
    lind = -1j * (_left(h, d) - _right(h.conj().T, d)) + _sandwich(rp) + _sandwich(rm)
    jp, jm = _sandwich(rp), _sandwich(rm)
    eye = np.eye(d * d, dtype=complex)
    zero = np.zeros((d * d, d * d), dtype=complex)
    g = float(gamma_r)
    return np.block(
        [
            [lind - jp - jm, zero, zero, zero],
            [jp, lind - jm - g * eye, zero, zero],
            [jm, zero, lind - jp - g * eye, zero],
            [zero, jm, jp, lind - 2 * g * eye],
        ]
    )


class BankPropagator:
    """Exact propagation of the stacked sector vector, with cached exponentials."""

    def __init__(self, sys: ConditionalSystem, gamma_r: float):
        self.sys = sys
        self.gamma_r = float(gamma_r)
        self.generator = bank_generator(sys, gamma_r)
        self._cache: dict[float, np.ndarray] = {}

    def step_matrix(self, dt: float) -> np.ndarray:
        dt = float(dt)
        if dt not in self._cache:
            if len(self._cache) > 16:
                self._cache.clear()
            self._cache[dt] = expm(self.generator * dt)
        return self._cache[dt]

    def evolve(self, y: np.ndarray, dt: float) -> np.ndarray:
        """Propagate one stacked vector or a column batch by dt."""
        if dt == 0:
            return y.copy()
        return self.step_matrix(dt) @ y


@lru_cache(maxsize=8)
def _cached_propagator(sys: ConditionalSystem, gamma_r: float) -> BankPropagator:
    return BankPropagator(sys, gamma_r)


def no_click_evolve(
    bank: DetectorBankState,
    sys: ConditionalSystem,
    dt: float,
    method: str = "expm",
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_steps: int = 10**6,
) -> DetectorBankState:
    """Evolve all four sectors under the no-observed-click equations.

    ``method="expm"`` applies the exact matrix exponential of the stacked
    generator; ``method="rk45"`` integrates the same linear system adaptively
    and exists as an independent cross-check.
    """
    if bank.space != sys.space:
        raise SpaceMismatchError("bank and system live on different spaces")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return bank
    y0 = bank.stacked()
    if method == "expm":
        y = _cached_propagator(sys, bank.gamma_r).evolve(y0, dt)
    elif method == "rk45":
        m = bank_generator(sys, bank.gamma_r)
        solver = RK45(lambda t, y: m @ y, 0.0, y0, dt, rtol=rtol, atol=atol)
        for _ in range(max_steps):
            if solver.status != "running":
                break
            msg = solver.step()
            if solver.status == "failed":
                raise IntegratorError(f"RK45 step failed: {msg}")
        else:
            raise IntegratorError(f"exceeded {max_steps} steps")
        y = solver.y
    else:
        raise ValueError(f"unknown method {method!r}")
    return DetectorBankState.from_stacked(y, bank.space, bank.gamma_r)


def observed_click_weight(bank: DetectorBankState, label: str) -> float:
    """Trace weight tr[rho_label + rho_TT] feeding an observed click."""
    if label == "D+":
        return bank.rho_plus.trace() + bank.rho_tt.trace()
    if label == "D-":
        return bank.rho_minus.trace() + bank.rho_tt.trace()
    raise KeyError(f"unknown detector label {label!r}")


def observed_click_pdf(bank: DetectorBankState, label: str) -> float:
    """Probability density gamma_r * tr[rho_label + rho_TT] for an observed click."""
    return bank.gamma_r * observed_click_weight(bank, label)


def observed_click_update(bank: DetectorBankState, label: str) -> DetectorBankState:
    """Instantaneous sector shuffle after an observed click, renormalized.

    A D+ click maps (rho_RR, rho_+, rho_-, rho_TT) -> (rho_+, 0, rho_TT, 0)
    divided by tr[rho_+ + rho_TT]; the D- click is the mirror image.  The
    discarded click weight is available beforehand via
    :func:`observed_click_weight`, so joint densities are reconstructed by
    multiplying recorded weights.
    """
    w = observed_click_weight(bank, label)
    if w <= 0.0:
        raise ValueError(f"zero-weight observed click {label!r}")
    space = bank.space
    zero = DensityMatrix(np.zeros((space.dim, space.dim), dtype=complex), space)
    scale = lambda rho: DensityMatrix(rho.matrix / w, space)
    if label == "D+":
        return DetectorBankState(
            scale(bank.rho_plus), zero, scale(bank.rho_tt), zero, gamma_r=bank.gamma_r
        )
    return DetectorBankState(
        scale(bank.rho_minus), scale(bank.rho_tt), zero, zero, gamma_r=bank.gamma_r
    )


# ---------------------------------------------------------------------------
# stochastic unraveling of the cascade (Monte Carlo oracle)


class ObservedClickEnsemble:
    """Joint unraveling: pure system state + two detector trigger flags.

    Hidden photon-arrival jumps apply R(label) to the state and set the
    corresponding detector to Triggered (a photon reaching an
    already-triggered detector is absorbed with no further effect).  Each
    triggered detector carries an exponential clock of rate gamma_r; when the
    clock fires, an observed click is recorded and the detector re-arms.
    Averaging this process over trajectories reproduces the sector equations.
    """

    def __init__(
        self,
        sys: ConditionalSystem,
        psi0: StateVector,
        gamma_r: float,
        n_traj: int,
        seed: int,
    ):
        if psi0.space != sys.space:
            raise SpaceMismatchError("state and system live on different spaces")
        if abs(psi0.norm_squared() - 1.0) > 1e-9:
            raise ValueError("initial state must be normalized")
        if set(sys.labels) != set(LABELS):
            raise ValueError("detector cascade needs jump labels 'D+' and 'D-'")
        self.sys = sys
        self.gamma_r = float(gamma_r)
        self.n_traj = n_traj
        self.seed = int(seed)
        self._streams = _Streams(seed, n_traj)
        # states are kept unnormalized since the last hidden jump, with the
        # absolute crossing threshold stored alongside
        self.states = np.tile(psi0.amplitudes, (n_traj, 1))
        self.thresholds = self._streams.uniform(np.arange(n_traj))
        self.triggered = np.zeros((n_traj, 2), dtype=bool)
        self.obs_clocks = np.full((n_traj, 2), np.inf)

    def transform_states(self, op) -> None:
        if op.space != self.sys.space:
            raise SpaceMismatchError("operator and system live on different spaces")
        self.states = self.states @ op.matrix.T

    def run(self, t_end: float) -> list[list[tuple[float, str]]]:
        """Advance to local time `t_end`; returns observed clicks per trajectory.

        Detector trigger flags and pending observed-click clocks persist
        across calls (clocks are re-based to the new window's origin), which
        mirrors a protocol that starts its next round immediately.
        """
        prop = self.sys._propagator
        jumps = {lbl: self.sys.jump(lbl).matrix for lbl in LABELS}
        g = self.gamma_r
        n = self.n_traj
        t_now = np.zeros(n)
        clicks: list[list[tuple[float, str]]] = [[] for _ in range(n)]
        active = np.arange(n)

        while len(active):
            psis = self.states[active]
            t_rem = t_end - t_now[active]
            end_norms = prop.norms_at(psis, t_rem)
            crossing = end_norms <= self.thresholds[active]

            # next hidden-jump time (inf when the norm never crosses)
            t_hidden = np.full(len(active), np.inf)
            if crossing.any():
                rows = np.where(crossing)[0]
                lo = np.zeros(len(rows))
                hi = t_rem[rows].copy()
                sub = psis[rows]
                u = self.thresholds[active[rows]]
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    above = prop.norms_at(sub, mid) > u
                    lo = np.where(above, mid, lo)
                    hi = np.where(above, hi, mid)
                t_hidden[rows] = t_now[active[rows]] + hi

            t_obs = self.obs_clocks[active].min(axis=1)
            t_event = np.minimum(t_hidden, t_obs)
            finished = t_event > t_end

            done = active[finished]
            if len(done):
                final = prop.states_at(self.states[done], t_end - t_now[done])
                self.states[done] = final
                t_now[done] = t_end

            active = active[~finished]
            if not len(active):
                break
            t_event = t_event[~finished]
            hidden_first = t_hidden[~finished] <= t_obs[~finished]

            # process one event per still-active trajectory
            for k, i in enumerate(active):
                te = t_event[k]
                if hidden_first[k]:
                    psi = prop.states_at(self.states[i][None, :], [te - t_now[i]])[0]
                    dens = {}
                    for lbl in LABELS:
                        v = jumps[lbl] @ psi
                        dens[lbl] = np.vdot(v, v).real
                    total = dens["D+"] + dens["D-"]
                    if total <= 0:
                        raise IntegratorError("hidden jump with zero total rate")
                    pick = self._streams.uniform([i])[0] * total
                    lbl = "D+" if pick <= dens["D+"] else "D-"
                    psi = jumps[lbl] @ psi
                    psi /= np.sqrt(np.vdot(psi, psi).real)
                    self.states[i] = psi
                    self.thresholds[i] = self._streams.uniform([i])[0]
                    col = LABELS.index(lbl)
                    if not self.triggered[i, col]:
                        self.triggered[i, col] = True
                        self.obs_clocks[i, col] = (
                            te + self._streams.exponential(i, g) if g > 0 else np.inf
                        )
                else:
                    col = int(np.argmin(self.obs_clocks[i]))
                    clicks[i].append((float(te), LABELS[col]))
                    self.triggered[i, col] = False
                    self.obs_clocks[i, col] = np.inf
                    self.states[i] = prop.states_at(
                        self.states[i][None, :], [te - t_now[i]]
                    )[0]
                t_now[i] = te

        # re-base pending observed clocks for a possible next window
        live = np.isfinite(self.obs_clocks)
        self.obs_clocks[live] -= t_end
        norms = np.sqrt(np.einsum("ij,ij->i", self.states.conj(), self.states).real)
        self.states /= np.where(norms > 0, norms, 1.0)[:, None]
        self.thresholds = self._streams.uniform(np.arange(n))
        return clicks


def sample_observed_clicks(
    bank0: DetectorBankState, sys: ConditionalSystem, t_end: float, seed: int
) -> ClickRecord:
    """Sample one observed-click record from a pure, all-Ready initial bank."""
    return sample_observed_ensemble(bank0, sys, t_end, seed, 1)[0]


def sample_observed_ensemble(
    bank0: DetectorBankState, sys: ConditionalSystem, t_end: float, seed: int, n_traj: int
) -> list[ClickRecord]:
    psi0 = _pure_ready_state(bank0)
    ens = ObservedClickEnsemble(sys, psi0, bank0.gamma_r, n_traj, seed)
    clicks = ens.run(t_end)
    return [
        ClickRecord(clicks=tuple(c), seed=seed, t_end=t_end) for c in clicks
    ]


def _pure_ready_state(bank0: DetectorBankState) -> StateVector:
    for rho in (bank0.rho_plus, bank0.rho_minus, bank0.rho_tt):
        if rho.trace() > 1e-12:
            raise ValueError("stochastic sampling starts from an all-Ready bank")
    m = bank0.rho_rr.matrix
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if vals[:-1].max(initial=0.0) > 1e-10 or abs(vals[-1] - 1.0) > 1e-9:
        raise ValueError("stochastic sampling needs a pure normalized rho_RR")
    return StateVector(vecs[:, -1], bank0.space)
