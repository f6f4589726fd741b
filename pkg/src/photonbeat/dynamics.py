"""Conditional (no-click) propagation, Lindblad propagation, and a Monte
Carlo wave-function (MCWF) trajectory sampler.

The sampler implements the standard waiting-time unraveling: evolve under the
non-Hermitian conditional Hamiltonian until the squared norm of the state
crosses a uniform random threshold, select a jump channel with probability
proportional to its click density, apply the jump, repeat.  Waiting times are
located by bisection (to well below 1e-12 in time units) on the exact
propagator, and every trajectory draws from its own counter-based RNG stream
(Philox keyed by ``(seed, trajectory_index)``), so ensembles are reproducible
and independent of batching or scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import RK45

from .qcore import (
    DEFAULT_TOL,
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateVector,
    SpaceMismatchError,
)

__all__ = [
    "ConditionalSystem",
    "TrajectoryRecord",
    "IntegratorError",
    "evolve_conditional",
    "click_density",
    "apply_jump",
    "lindblad_propagate",
    "sample_trajectory",
    "sample_ensemble",
    "trajectory_state",
    "TrajectoryEnsemble",
]

#: Integrator policy (embedded Runge-Kutta 4/5).
RTOL = 1e-9
ATOL = 1e-12
MAX_STEPS = 10**6

#: Fixed bisection depth for waiting-time root solves.  60 halvings of any
#: interval shorter than 1e6 time units land below 1e-12, and a fixed count
#: keeps records bit-identical between scalar and batched sampling.
_BISECT_ITERS = 60


class IntegratorError(RuntimeError):
    """Integration failed to meet tolerance within the step budget."""


@dataclass(frozen=True, eq=False)
class ConditionalSystem:
    """Non-Hermitian Hamiltonian plus labeled jump operators.

    The anti-Hermitian part of ``h_cond`` must equal -(i/2) sum_j R_j^dag R_j,
    which ties the norm decay of the no-click state to the total click
    probability; this is checked at construction.
    """

    h_cond: Operator
    jumps: tuple[tuple[str, Operator], ...]

    def __init__(self, h_cond: Operator, jumps, tol: float = 1e-8):
        jumps = tuple((str(lbl), op) for lbl, op in jumps)
        for _, op in jumps:
            if op.space != h_cond.space:
                raise SpaceMismatchError("jump operators must share the Hamiltonian's space")
        labels = [lbl for lbl, _ in jumps]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate jump labels: {labels}")
        h = h_cond.matrix
        anti = (h - h.conj().T) / 2
        total = sum(op.matrix.conj().T @ op.matrix for _, op in jumps)
        expected = -0.5j * total
        scale = max(1.0, np.max(np.abs(h)))
        if np.max(np.abs(anti - expected)) > tol * scale:
            raise ValueError(
                "anti-Hermitian part of h_cond does not match -(i/2) sum R^dag R"
            )
        object.__setattr__(self, "h_cond", h_cond)
        object.__setattr__(self, "jumps", jumps)

    @property
    def space(self) -> HilbertSpace:
        return self.h_cond.space

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.jumps)

    def jump(self, label: str) -> Operator:
        for lbl, op in self.jumps:
            if lbl == label:
                return op
        raise KeyError(f"unknown jump label {label!r}")

    @cached_property
    def _propagator(self) -> "_Propagator":
        return _Propagator(self.h_cond.matrix)

    @cached_property
    def _jump_matrices(self) -> np.ndarray:
        return np.stack([op.matrix for _, op in self.jumps])


class _Propagator:
    """Exact propagator exp(-i H t) for a constant (non-Hermitian) H.

    Diagonal H gets an elementwise fast path; otherwise an eigendecomposition
    is used, falling back to ``scipy.linalg.expm`` when the eigenbasis is too
    ill-conditioned to trust (e.g. near an exceptional point).
    """

    _COND_LIMIT = 1e8

    def __init__(self, h: np.ndarray):
        self.h = np.asarray(h, dtype=complex)
        d = self.h.shape[0]
        self.dim = d
        self.diagonal = bool(np.all(self.h[~np.eye(d, dtype=bool)] == 0))
        if self.diagonal:
            self.eigvals = np.diag(self.h).copy()
            self.v = self.vinv = None
            self.usable = True
        else:
            w, v = np.linalg.eig(self.h)
            cond = np.linalg.cond(v)
            self.eigvals, self.v = w, v
            self.vinv = np.linalg.inv(v) if cond < self._COND_LIMIT else None
            self.usable = self.vinv is not None
        if not self.usable:
            from scipy.linalg import expm  # rare fallback path

            self._expm = expm

    def states_at(self, psis: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Propagate a batch: row i of `psis` by time ts[i].  Shape (n, d)."""
        psis = np.atleast_2d(psis)
        ts = np.asarray(ts, dtype=float).reshape(-1)
        if self.usable:
            phase = np.exp(-1j * ts[:, None] * self.eigvals[None, :])
            if self.diagonal:
                return psis * phase
            return (phase * (psis @ self.vinv.T)) @ self.v.T
        out = np.empty_like(psis)
        for i, (psi, t) in enumerate(zip(psis, ts)):
            out[i] = self._expm(-1j * self.h * t) @ psi
        return out

    def norms_at(self, psis: np.ndarray, ts: np.ndarray) -> np.ndarray:
        st = self.states_at(psis, ts)
        return np.einsum("ij,ij->i", st.conj(), st).real


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One stochastic click record: (time, label) pairs plus final state."""

    clicks: tuple[tuple[float, str], ...]
    final_state: StateVector
    seed: int
    t_end: float

    def __post_init__(self):
        times = [t for t, _ in self.clicks]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("click times must be strictly increasing")
        if times and self.t_end < times[-1]:
            raise ValueError("t_end must not precede the last click")


# ---------------------------------------------------------------------------
# deterministic propagation


def evolve_conditional(
    sys: ConditionalSystem,
    psi: StateVector,
    dt: float,
    rtol: float = RTOL,
    atol: float = ATOL,
    max_steps: int = MAX_STEPS,
) -> StateVector:
    """No-click evolution psi(t+dt) = exp(-i h_cond dt) psi(t).

    Integrated by adaptive embedded Runge-Kutta 4/5; the squared norm is
    asserted non-increasing after every accepted step.
    """
    if psi.space != sys.space:
        raise SpaceMismatchError("state and system live on different spaces")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return psi
    h = sys.h_cond.matrix
    solver = RK45(
        lambda t, y: -1j * (h @ y),
        0.0,
        psi.amplitudes.astype(complex),
        dt,
        rtol=rtol,
        atol=atol,
    )
    norm2 = float(np.vdot(solver.y, solver.y).real)
    for _ in range(max_steps):
        if solver.status != "running":
            break
        msg = solver.step()
        if solver.status == "failed":
            raise IntegratorError(f"RK45 step failed: {msg}")
        new_norm2 = float(np.vdot(solver.y, solver.y).real)
        if new_norm2 > norm2 + 10 * rtol * max(norm2, atol):
            raise IntegratorError(
                f"squared norm increased across a step: {norm2} -> {new_norm2}"
            )
        norm2 = new_norm2
    else:
        raise IntegratorError(f"exceeded {max_steps} steps")
    return StateVector(solver.y, psi.space)


def click_density(sys: ConditionalSystem, psi: StateVector, label: str) -> float:
    """<psi| R^dag R |psi> for the given detector label."""
    if psi.space != sys.space:
        raise SpaceMismatchError("state and system live on different spaces")
    r = sys.jump(label).matrix
    v = r @ psi.amplitudes
    return float(np.vdot(v, v).real)


def apply_jump(sys: ConditionalSystem, psi: StateVector, label: str) -> StateVector:
    """State after a click: R|psi> renormalized to unit norm."""
    if psi.space != sys.space:
        raise SpaceMismatchError("state and system live on different spaces")
    r = sys.jump(label).matrix
    v = r @ psi.amplitudes
    n2 = float(np.vdot(v, v).real)
    if n2 <= 0.0:
        raise ValueError(f"zero-probability jump {label!r} requested")
    return StateVector(v / np.sqrt(n2), psi.space)


def lindblad_propagate(
    sys: ConditionalSystem,
    rho: DensityMatrix,
    dt: float,
    rtol: float = RTOL,
    atol: float = ATOL,
    max_steps: int = MAX_STEPS,
) -> DensityMatrix:
    """Unconditional master equation rho' = -i(H rho - rho H^dag) + sum R rho R^dag."""
    if rho.space != sys.space:
        raise SpaceMismatchError("state and system live on different spaces")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return rho
    d = sys.space.dim
    h = sys.h_cond.matrix
    hd = h.conj().T
    rs = sys._jump_matrices

    def rhs(t, y):
        m = y.reshape(d, d)
        out = -1j * (h @ m - m @ hd)
        for r in rs:
            out += r @ m @ r.conj().T
        return out.reshape(-1)

    solver = RK45(rhs, 0.0, rho.matrix.reshape(-1).astype(complex), dt, rtol=rtol, atol=atol)
    for _ in range(max_steps):
        if solver.status != "running":
            break
        msg = solver.step()
        if solver.status == "failed":
            raise IntegratorError(f"RK45 step failed: {msg}")
    else:
        raise IntegratorError(f"exceeded {max_steps} steps")
    m = solver.y.reshape(d, d)
    return DensityMatrix((m + m.conj().T) / 2, rho.space)


# ---------------------------------------------------------------------------
# trajectory sampling


class _Streams:
    """One counter-based Philox stream per trajectory index."""

    def __init__(self, seed: int, n: int, first_index: int = 0):
        self.seed = int(seed)
        self._gens = [
            np.random.Generator(
                np.random.Philox(key=np.array([seed, first_index + i], dtype=np.uint64))
            )
            for i in range(n)
        ]

    def uniform(self, idx: np.ndarray) -> np.ndarray:
        """Next uniform in (0,1) for each trajectory index in `idx`."""
        out = np.array([self._gens[i].random() for i in idx])
        # random() returns [0,1); shift exact zeros off the boundary
        return np.nextafter(out, 1.0)

    def exponential(self, i: int, rate: float) -> float:
        return float(self._gens[i].exponential(1.0 / rate))


class TrajectoryEnsemble:
    """Batch of MCWF trajectories advancing through one or more windows.

    The ensemble owns one RNG stream per trajectory, so successive calls to
    :meth:`run` (e.g. the two rounds of an entangling protocol, with a state
    transformation in between) consume each stream deterministically.
    """

    def __init__(
        self,
        sys: ConditionalSystem,
        psi0: StateVector | np.ndarray,
        n_traj: int,
        seed: int,
        norm_tol: float = 1e-9,
    ):
        if isinstance(psi0, StateVector):
            if psi0.space != sys.space:
                raise SpaceMismatchError("state and system live on different spaces")
            if abs(psi0.norm_squared() - 1.0) > norm_tol:
                raise ValueError("initial state must be normalized")
            states = np.tile(psi0.amplitudes, (n_traj, 1))
        else:
            states = np.array(psi0, dtype=complex)
            if states.shape != (n_traj, sys.space.dim):
                raise ValueError("state batch has wrong shape")
        self.sys = sys
        self.states = states
        self.n_traj = n_traj
        self.seed = int(seed)
        self._streams = _Streams(seed, n_traj)

    def transform_states(self, op: Operator, renormalize: bool = True) -> None:
        """Apply an instantaneous map to every trajectory state."""
        if op.space != self.sys.space:
            raise SpaceMismatchError("operator and system live on different spaces")
        self.states = self.states @ op.matrix.T
        if renormalize:
            norms = np.sqrt(np.einsum("ij,ij->i", self.states.conj(), self.states).real)
            if np.any(norms <= 0):
                raise ValueError("transformation annihilated a trajectory state")
            self.states /= norms[:, None]

    def run(self, t_end: float) -> list[list[tuple[float, str]]]:
        """Advance every trajectory from its local time 0 to `t_end`.

        Returns the clicks of this window, per trajectory, with times
        measured from the window start.  Final (normalized) states are left
        in ``self.states``.
        """
        prop = self.sys._propagator
        jumps = self.sys._jump_matrices
        labels = self.sys.labels
        n = self.n_traj
        t_now = np.zeros(n)
        clicks: list[list[tuple[float, str]]] = [[] for _ in range(n)]
        active = np.arange(n)
        thresholds = self._streams.uniform(active)

        while len(active):
            psis = self.states[active]
            t_rem = t_end - t_now[active]
            end_norms = prop.norms_at(psis, t_rem)
            u = thresholds
            crossing = end_norms <= u

            done = active[~crossing]
            if len(done):
                self.states[done] = _normalize_rows(
                    prop.states_at(self.states[done], t_end - t_now[done])
                )
            active = active[crossing]
            if not len(active):
                break
            psis = psis[crossing]
            u = u[crossing]
            t_rem = t_rem[crossing]

            # bisect for the crossing time of each surviving trajectory
            lo = np.zeros(len(active))
            hi = t_rem.copy()
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                above = prop.norms_at(psis, mid) > u
                lo = np.where(above, mid, lo)
                hi = np.where(above, hi, mid)
            t_jump = hi

            at_jump = prop.states_at(psis, t_jump)
            projected = [at_jump @ r.T for r in jumps]
            rates = np.stack(
                [np.einsum("ij,ij->i", p.conj(), p).real for p in projected]
            )  # (n_channels, n_active)
            total = rates.sum(axis=0)
            if np.any(total <= 0):
                raise IntegratorError("norm crossed threshold with zero total jump rate")
            pick = self._streams.uniform(active) * total
            channel = (np.cumsum(rates, axis=0) < pick[None, :]).sum(axis=0)
            channel = np.minimum(channel, len(jumps) - 1)

            t_now[active] += t_jump
            post = np.empty_like(at_jump)
            for c in range(len(jumps)):
                rows = channel == c
                if rows.any():
                    post[rows] = at_jump[rows] @ jumps[c].T
            norms = np.sqrt(np.einsum("ij,ij->i", post.conj(), post).real)
            if np.any(norms <= 0):
                raise IntegratorError("selected jump annihilated a trajectory state")
            self.states[active] = post / norms[:, None]
            for k, i in enumerate(active):
                clicks[i].append((float(t_now[i]), labels[channel[k]]))
            thresholds = self._streams.uniform(active)

        return clicks


def _normalize_rows(states: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", states.conj(), states).real)
    norms = np.where(norms > 0, norms, 1.0)
    return states / norms[:, None]


def sample_trajectory(
    sys: ConditionalSystem, psi0: StateVector, t_end: float, seed: int
) -> TrajectoryRecord:
    """Sample one click record; identical to trajectory 0 of an ensemble."""
    return sample_ensemble(sys, psi0, t_end, seed, 1)[0]


def sample_ensemble(
    sys: ConditionalSystem, psi0: StateVector, t_end: float, seed: int, n_traj: int
) -> list[TrajectoryRecord]:
    """Sample `n_traj` independent trajectories (stream i = Philox(seed, i))."""
    ens = TrajectoryEnsemble(sys, psi0, n_traj, seed)
    clicks = ens.run(t_end)
    return [
        TrajectoryRecord(
            clicks=tuple(c),
            final_state=StateVector(ens.states[i], sys.space),
            seed=seed,
            t_end=t_end,
        )
        for i, c in enumerate(clicks)
    ]


def trajectory_state(
    sys: ConditionalSystem,
    psi0: StateVector,
    clicks: tuple[tuple[float, str], ...],
    t: float,
) -> StateVector:
    """Replay a click record: the normalized conditional state at time t."""
    prop = sys._propagator
    psi = psi0.amplitudes.astype(complex)
    t_prev = 0.0
    for t_click, label in clicks:
        if t_click > t:
            break
        psi = prop.states_at(psi[None, :], [t_click - t_prev])[0]
        psi = sys.jump(label).matrix @ psi
        n = np.sqrt(np.vdot(psi, psi).real)
        if n <= 0:
            raise ValueError("record replays through a zero-probability jump")
        psi /= n
        t_prev = t_click
    psi = prop.states_at(psi[None, :], [t - t_prev])[0]
    n = np.sqrt(np.vdot(psi, psi).real)
    if n <= 0:
        raise ValueError("state vanished during no-click evolution")
    return StateVector(psi / n, sys.space)
