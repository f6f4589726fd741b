"""Two-photon interference of detuned single-photon sources.

Each source is a single-mode leaky cavity (decay rate ``kappa``, equal for
both) prepared in a one-photon Fock state; the outputs meet on a 50:50 beam
splitter monitored by detectors D+ and D-.  Work happens in the frame
rotating at the first source's frequency, so only the detuning
``delta = omega_1 - omega_2`` enters the numerics.  With time-resolved
detection the same-detector coincidence density oscillates at the detuning (a
two-photon quantum beat); integrating the timing away leaves the Lorentzian
coalescence probability, and the finite-resolution detector cascade
interpolates between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import detector as det
from .dynamics import ConditionalSystem, apply_jump, evolve_conditional
from .qcore import HilbertSpace, StateVector, basis_state, lowering, number_op

__all__ = [
    "HOMParams",
    "CoincidenceTable",
    "CAVITY_SPACE",
    "PAIRS",
    "build_hom_system",
    "initial_two_photon_state",
    "ideal_first_click_density",
    "ideal_conditional_density",
    "ideal_joint_density",
    "state_after_first_click",
    "bad_limit_coalescence",
    "finite_resolution_first_click_density",
    "finite_resolution_joint_density",
    "interval_distribution",
    "interval_distribution_table",
    "fringe_visibility",
]

CAVITY_SPACE = HilbertSpace((2, 2), ("cav1", "cav2"))
PAIRS = (("D+", "D+"), ("D+", "D-"), ("D-", "D+"), ("D-", "D-"))

#: Sampling density for tabulated interval distributions: at least this many
#: grid points per beat half-period pi/delta (and per decay time).
POINTS_PER_BEAT = 40

#: Default upper limit of the first-click-time integral, in units of 1/kappa.
#: Truncating there underestimates the integrals by about exp(-6) ~ 0.25%,
#: which is surfaced in the table metadata.
T_UPPER_KAPPA = 3.0


@dataclass(frozen=True)
class HOMParams:
    """Source and detector rates for the two-photon interference setup."""

    kappa: float = 1.0
    delta: float = 0.0
    gamma_r: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.gamma_r < 0:
            raise ValueError("gamma_r must be nonnegative")


@dataclass(frozen=True, eq=False)
class CoincidenceTable:
    """Tabulated click-pair densities on a time grid.

    ``densities`` maps a detector pair (first, second) to the density values
    on ``times`` (interval variable tau or absolute t2, depending on the
    producer).  ``tail_error`` is the relative mass missed by truncating the
    first-click integral.
    """

    times: np.ndarray
    densities: dict[tuple[str, str], np.ndarray]
    params: HOMParams
    tail_error: float = 0.0

    def check_symmetry(self, tol: float = 1e-9) -> None:
        """Exchange symmetry: (+,+) matches (-,-) and (+,-) matches (-,+)."""
        d = self.densities
        for a, b in ((("D+", "D+"), ("D-", "D-")), (("D+", "D-"), ("D-", "D+"))):
            gap = np.max(np.abs(d[a] - d[b]))
            scale = max(np.max(np.abs(d[a])), 1e-300)
            if gap > tol * scale:
                raise AssertionError(f"exchange symmetry violated for {a} vs {b}: {gap}")


def build_hom_system(params: HOMParams) -> ConditionalSystem:
    """Two leaky single-mode cavities behind a beam splitter.

    Fock cutoff 1 per cavity is exact here: the initial state |1,1> under
    pure loss never populates higher number states.  In the rotating frame
    H_cond = (omega_2 - omega_1) n_2 - (i kappa / 2)(n_1 + n_2) and the jump
    operators are R+- = sqrt(kappa/2) (b_1 +- b_2).
    """
    k = params.kappa
    b1, b2 = lowering(CAVITY_SPACE, "cav1"), lowering(CAVITY_SPACE, "cav2")
    h = (-params.delta) * number_op(CAVITY_SPACE, "cav2") + (-0.5j * k) * (
        number_op(CAVITY_SPACE, "cav1") + number_op(CAVITY_SPACE, "cav2")
    )
    amp = math.sqrt(k / 2)
    return ConditionalSystem(h, (("D+", amp * (b1 + b2)), ("D-", amp * (b1 - b2))))


def initial_two_photon_state() -> StateVector:
    return basis_state(CAVITY_SPACE, (1, 1))


@lru_cache(maxsize=32)
def _system(params: HOMParams) -> ConditionalSystem:
    return build_hom_system(params)


def ideal_first_click_density(params: HOMParams, t1) -> np.ndarray | float:
    """Per-detector density of the first click: kappa e^{-2 kappa t1}.

    Computed from the propagated state, ||R e^{-i H t1} |1,1>||^2, not from
    the formula, so tests can pin the closed form independently.
    """
    sys = _system(params)
    t = np.atleast_1d(np.asarray(t1, dtype=float))
    if np.any(t < 0):
        raise ValueError("t1 must be nonnegative")
    psi0 = initial_two_photon_state().amplitudes
    states = sys._propagator.states_at(np.tile(psi0, (len(t), 1)), t)
    r = sys.jump("D+").matrix
    proj = states @ r.T
    out = np.einsum("ij,ij->i", proj.conj(), proj).real
    return out if np.ndim(t1) else float(out[0])


def state_after_first_click(params: HOMParams, t1: float, label: str = "D+") -> StateVector:
    """Entangled one-photon state after the first click, (|1,0> +- |0,1>)/sqrt(2).

    Independent of both the click time and the detuning.
    """
    sys = _system(params)
    psi = evolve_conditional(sys, initial_two_photon_state(), t1)
    return apply_jump(sys, psi, label)


def ideal_conditional_density(params: HOMParams, tau, first_label: str = "D+",
                              second_label: str = "D+") -> np.ndarray | float:
    """Density of the second click at delay tau given the first click's port.

    For equal ports this is kappa e^{-kappa tau} (1 + cos(delta tau))/2 -- an
    exponential envelope beating at the detuning.  Evaluated by propagating
    the post-click state and applying the second jump operator.
    """
    sys = _system(params)
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(t < 0):
        raise ValueError("tau must be nonnegative")
    psi1 = state_after_first_click(params, 0.0, first_label).amplitudes
    states = sys._propagator.states_at(np.tile(psi1, (len(t), 1)), t)
    r = sys.jump(second_label).matrix
    proj = states @ r.T
    out = np.einsum("ij,ij->i", proj.conj(), proj).real
    return out if np.ndim(tau) else float(out[0])


def ideal_joint_density(params: HOMParams, t1, t2, pair: tuple[str, str] = ("D+", "D+")):
    """Joint density p(t1, t2, a, b) = p(t2, b | t1, a) p(t1, a) for 0 <= t1 <= t2."""
    t1a = np.asarray(t1, dtype=float)
    t2a = np.asarray(t2, dtype=float)
    if np.any(t2a < t1a):
        raise ValueError("need t1 <= t2")
    return ideal_first_click_density(params, t1) * ideal_conditional_density(
        params, t2a - t1a, *pair
    )


def bad_limit_coalescence(params: HOMParams) -> float:
    """Probability that both photons exit the same port when timing is ignored.

    p(+|+) = (1 + kappa^2/(kappa^2 + delta^2)) / 2: unity for identical
    photons, 1/2 for strongly detuned ones.
    """
    k, d = params.kappa, params.delta
    return 0.5 * (1.0 + k * k / (k * k + d * d))


# ---------------------------------------------------------------------------
# finite-resolution detectors


def _require_gamma(params: HOMParams) -> float:
    if params.gamma_r <= 0:
        raise ValueError("finite-resolution quantities need gamma_r > 0")
    return params.gamma_r


@lru_cache(maxsize=8)
def _bank_propagator(params: HOMParams) -> det.BankPropagator:
    return det.BankPropagator(_system(params), params.gamma_r)


def _grid_steps(params: HOMParams) -> float:
    """Step fine enough to resolve the beat, the decay, and the response."""
    scales = [1.0 / params.kappa]
    if params.delta:
        scales.append(math.pi / abs(params.delta))
    if params.gamma_r > 0:
        scales.append(1.0 / params.gamma_r)
    return min(scales) / POINTS_PER_BEAT


def finite_resolution_first_click_density(params: HOMParams, t1) -> np.ndarray | float:
    """Observed-click density gamma_r tr[rho_label + rho_TT] at time t1 (per detector)."""
    _require_gamma(params)
    prop = _bank_propagator(params)
    bank0 = det.initial_bank(initial_two_photon_state(), params.gamma_r)
    t = np.atleast_1d(np.asarray(t1, dtype=float))
    out = np.empty(len(t))
    for i, ti in enumerate(t):
        y = prop.evolve(bank0.stacked(), float(ti))
        b = det.DetectorBankState.from_stacked(y, CAVITY_SPACE, params.gamma_r)
        out[i] = det.observed_click_pdf(b, "D+")
    return out if np.ndim(t1) else float(out[0])


def finite_resolution_joint_density(
    params: HOMParams, t1: float, t2: float, pair: tuple[str, str] = ("D+", "D+")
) -> float:
    """Joint observed-click density p_gamma(t1, t2, a, b), 0 <= t1 <= t2.

    Evolves the four-sector bank (the full 64 coupled complex components) to
    t1, applies the observed-click update for the first detector, continues
    to t2, and multiplies the recorded click weights back in.
    """
    if not 0 <= t1 <= t2:
        raise ValueError("need 0 <= t1 <= t2")
    _require_gamma(params)
    a, b = pair
    sys = _system(params)
    bank = det.initial_bank(initial_two_photon_state(), params.gamma_r)
    bank = det.no_click_evolve(bank, sys, t1)
    w1 = det.observed_click_weight(bank, a)
    if w1 <= 0.0:
        return 0.0
    bank = det.observed_click_update(bank, a)
    bank = det.no_click_evolve(bank, sys, t2 - t1)
    return params.gamma_r**2 * w1 * det.observed_click_weight(bank, b)


@lru_cache(maxsize=8)
def _interval_table_cached(
    params: HOMParams, tau_max: float, t_upper: float
) -> CoincidenceTable:
    """Tabulate p_gamma(tau, b | a) for all pairs on a uniform tau grid.

    Column k of the propagated bank matrix is the state conditioned on a
    first click at t1_k; because both the Simpson rule in t1 and the final
    trace are linear, the columns are contracted with the quadrature weights
    *before* the tau propagation, so the interval distribution costs one
    matrix-vector chain per first-click label regardless of the t1
    resolution.
    """
    g = _require_gamma(params)
    prop = _bank_propagator(params)
    # resolve every dynamical scale, but cap the grids: a detector response
    # much faster than all other scales contributes only a boundary layer of
    # relative weight O(kappa/gamma_r) to the t1 integral
    max_pts = 20000
    dt1_target = max(_grid_steps(params), t_upper / max_pts)
    dtau_target = max(_grid_steps(params), tau_max / max_pts)

    n_t1 = 2 * max(1, int(math.ceil(t_upper / dt1_target / 2)))
    dt1 = t_upper / n_t1
    n_tau = 2 * max(1, int(math.ceil(tau_max / dtau_target / 2)))
    dtau = tau_max / n_tau

    bank0 = det.initial_bank(initial_two_photon_state(), g)
    step1 = prop.step_matrix(dt1)
    cols = np.empty((bank0.stacked().size, n_t1 + 1), dtype=complex)
    y = bank0.stacked()
    for k in range(n_t1 + 1):
        cols[:, k] = y
        y = step1 @ y

    d = CAVITY_SPACE.dim
    diag = np.eye(d, dtype=bool).reshape(-1)

    def sector_traces(mat: np.ndarray) -> np.ndarray:
        """(4, ncols) sector traces of a stacked bank batch."""
        return mat.reshape(4, d * d, -1)[:, diag, :].sum(axis=1).real

    tr = sector_traces(cols)
    first_weight = {"D+": tr[1] + tr[3], "D-": tr[2] + tr[3]}

    def click_update(mat: np.ndarray, label: str) -> np.ndarray:
        s = mat.reshape(4, d * d, -1)
        zero = np.zeros_like(s[0])
        if label == "D+":
            return np.concatenate([s[1], zero, s[3], zero])
        return np.concatenate([s[2], s[3], zero, zero])

    step2 = prop.step_matrix(dtau)
    taus = np.arange(n_tau + 1) * dtau
    simpson = np.ones(n_t1 + 1)
    simpson[1:-1:2], simpson[2:-1:2] = 4.0, 2.0
    simpson *= dt1 / 3.0

    densities: dict[tuple[str, str], np.ndarray] = {}
    for a in ("D+", "D-"):
        denom = float(simpson @ (g * first_weight[a]))
        # weights ride along unnormalized, so contracting the branch columns
        # with the quadrature weights performs the t1 integral up front
        bw = click_update(cols, a) @ simpson
        joint = np.empty((2, n_tau + 1))
        for j in range(n_tau + 1):
            tr_j = sector_traces(bw[:, None])[:, 0]
            joint[0, j] = g * g * (tr_j[1] + tr_j[3])
            joint[1, j] = g * g * (tr_j[2] + tr_j[3])
            if j < n_tau:
                bw = step2 @ bw
        densities[(a, "D+")] = joint[0] / denom
        densities[(a, "D-")] = joint[1] / denom

    tail = math.exp(-2.0 * params.kappa * t_upper)
    return CoincidenceTable(
        times=taus,
        densities={(a, b): densities[(a, b)] for a, b in PAIRS},
        params=params,
        tail_error=tail,
    )


def interval_distribution_table(
    params: HOMParams, tau_max: float, t_upper: float | None = None
) -> CoincidenceTable:
    """Interval densities p_gamma(tau, b | a) for all four detector pairs."""
    t_upper = t_upper if t_upper is not None else T_UPPER_KAPPA / params.kappa
    return _interval_table_cached(params, float(tau_max), float(t_upper))


def interval_distribution(
    params: HOMParams, tau, pair: tuple[str, str] = ("D+", "D+"),
    t_upper: float | None = None,
) -> np.ndarray | float:
    """p_gamma(tau, b | a): distribution of observed-click separations.

    Defined as int_0^T p_gamma(t1, t1+tau, a, b) dt1 / int_0^T p_gamma(t1, a)
    dt1 with T = 3/kappa by default (the truncation's ~0.25% underestimate is
    reported on the underlying table).  Values interpolate the cached grid.
    """
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(t < 0):
        raise ValueError("tau must be nonnegative")
    # round the table range up to a canonical multiple so scalar calls with
    # nearby tau reuse one cached table
    unit = math.pi / abs(params.delta) if params.delta else 1.0 / params.kappa
    tau_max = max(unit, math.ceil((float(t.max(initial=0.0)) + 1e-12) / unit) * unit)
    table = interval_distribution_table(params, tau_max, t_upper)
    out = np.interp(t, table.times, table.densities[pair])
    return out if np.ndim(tau) else float(out[0])


def fringe_visibility(params: HOMParams, tau: float | None = None) -> float:
    """Contrast |p(tau,+|+) - p(tau,-|+)| / [p(tau,+|+) + p(tau,-|+)].

    Defaults to tau = 20 pi / delta, past the detector-response transient and
    on a beat maximum; requires a nonzero detuning to define the beat.
    """
    if tau is None:
        if params.delta == 0:
            raise ValueError("default evaluation time needs a nonzero detuning")
        tau = 20.0 * math.pi / abs(params.delta)
    same = interval_distribution(params, tau, ("D+", "D+"))
    diff = interval_distribution(params, tau, ("D+", "D-"))
    total = same + diff
    if total <= 0.0:
        raise ValueError("both interval densities vanish at tau; visibility undefined")
    return float(abs(same - diff) / total)
