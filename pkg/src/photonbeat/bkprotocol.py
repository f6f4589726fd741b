"""Two-round remote-entangling protocol with frequency-mismatched sources.

Two three-level atoms (qubit levels 0,1 plus excited level 2) sit in separate
cavities whose outputs are mixed on a 50:50 beam splitter monitored by
detectors D+ and D-.  Each round excites the qubit-1 population to level 2
and waits for a click; exactly one click per round heralds success.  With a
source detuning ``delta`` between the two optical transitions the heralded
state acquires a click-time-dependent phase, and the achievable fidelity
depends on the detectors' time resolution ``gamma_r``.

Natural units: the effective atomic decay rate ``kappa_eff = 4 g^2 / kappa``
(cavity adiabatically eliminated in the overdamped regime) is the reference
rate; all other rates are ratios against it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from . import detector as det
from .dynamics import ConditionalSystem, TrajectoryEnsemble
from .qcore import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateVector,
    embed,
    lowering,
    number_op,
    projector,
    transition,
)

__all__ = [
    "BKParams",
    "ClickOutcome",
    "ATOM_SPACE",
    "QUBIT_SPACE",
    "build_effective_system",
    "build_full_system",
    "initial_excited_state",
    "round_two_prep",
    "relabel_after_flip",
    "ideal_final_state",
    "phase_correction",
    "bell_state",
    "closest_bell_fidelity",
    "closest_bell_phase",
    "bad_limit_first_round_state",
    "bad_limit_fidelity",
    "BadLimitResult",
    "intermediate_rho",
    "intermediate_rho_from_cascade",
    "conditional_fidelity",
    "joint_click_density",
    "two_click_probability",
    "average_fidelity",
    "AverageFidelityResult",
    "success_probability",
    "sample_protocol",
    "ProtocolSamples",
]

ATOM_SPACE = HilbertSpace((3, 3), ("atom1", "atom2"))
QUBIT_SPACE = HilbertSpace((2, 2), ("qubit1", "qubit2"))

_I01 = QUBIT_SPACE.flat_index((0, 1))
_I10 = QUBIT_SPACE.flat_index((1, 0))


@dataclass(frozen=True)
class BKParams:
    """Protocol rates; `g` and `kappa` are only needed for the full model."""

    kappa_eff: float = 1.0
    delta: float = 0.0
    gamma_r: float = 1.0
    eta: float = 1.0
    g: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        for name in ("kappa_eff", "gamma_r"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if (self.g is None) != (self.kappa is None):
            raise ValueError("provide both g and kappa or neither")
        if self.g is not None:
            if self.g <= 0 or self.kappa <= 0:
                raise ValueError("g and kappa must be positive")
            if self.kappa < 10 * self.g:
                warnings.warn(
                    f"kappa/g = {self.kappa / self.g:.2f}: adiabatic elimination "
                    "assumes the overdamped regime kappa >> g",
                    stacklevel=2,
                )


@dataclass(frozen=True)
class ClickOutcome:
    """Observed click times per round; m = 0 iff both clicks hit one detector."""

    t1: float
    t2: float
    m: int

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < 0:
            raise ValueError("click times must be nonnegative")
        if self.m not in (0, 1):
            raise ValueError("m must be 0 or 1")


# ---------------------------------------------------------------------------
# systems


def build_effective_system(params: BKParams) -> ConditionalSystem:
    """Cavity-eliminated two-atom system on the 9-dimensional atom space.

    H_cond = delta |2><2|_2 - (i/2) kappa_eff (|2><2|_1 + |2><2|_2), with jump
    operators R+- = sqrt(kappa_eff/2) (|1><2|_1 +- |1><2|_2).
    """
    if params.kappa_eff <= 0:
        raise ValueError("kappa_eff must be positive")
    ke = params.kappa_eff
    p2 = projector(ATOM_SPACE, "atom1", 2) + projector(ATOM_SPACE, "atom2", 2)
    h = params.delta * projector(ATOM_SPACE, "atom2", 2) + (-0.5j * ke) * p2
    s1 = transition(ATOM_SPACE, "atom1", 1, 2)
    s2 = transition(ATOM_SPACE, "atom2", 1, 2)
    amp = math.sqrt(ke / 2)
    return ConditionalSystem(
        h, (("D+", amp * (s1 + s2)), ("D-", amp * (s1 - s2)))
    )


def full_model_space() -> HilbertSpace:
    return HilbertSpace((3, 3, 2, 2), ("atom1", "atom2", "cav1", "cav2"))


def build_full_system(params: BKParams) -> ConditionalSystem:
    """Pre-elimination atom-cavity model (cavity Fock cutoff 1).

    Interaction picture rotating at the first transition frequency: coupling
    g exchanges atomic excitation and cavity photon, the detuning acts on
    system 2, and cavity loss kappa feeds the beam-splitter jump operators
    R+- = sqrt(kappa/2) (b1 +- b2).  Used to validate the elimination.
    """
    if params.g is None or params.kappa is None:
        raise ValueError("full model needs both g and kappa")
    space = full_model_space()
    g, kappa, delta = params.g, params.kappa, params.delta
    b1, b2 = lowering(space, "cav1"), lowering(space, "cav2")
    h = (
        g * (b1 @ transition(space, "atom1", 2, 1) + b1.dag() @ transition(space, "atom1", 1, 2))
        + g * (b2 @ transition(space, "atom2", 2, 1) + b2.dag() @ transition(space, "atom2", 1, 2))
        + delta * (projector(space, "atom2", 2) + number_op(space, "cav2"))
        + (-0.5j * kappa) * (number_op(space, "cav1") + number_op(space, "cav2"))
    )
    amp = math.sqrt(kappa / 2)
    return ConditionalSystem(h, (("D+", amp * (b1 + b2)), ("D-", amp * (b1 - b2))))


def initial_excited_state(space: HilbertSpace | None = None) -> StateVector:
    """State after the first excitation pulse: (|00>+|02>+|20>+|22>)/2."""
    space = space or ATOM_SPACE
    amp = np.zeros(space.dim, dtype=complex)
    for l1, l2 in ((0, 0), (0, 2), (2, 0), (2, 2)):
        amp[space.flat_index([l1, l2] + [0] * (len(space.dims) - 2))] = 0.5
    return StateVector(amp, space)


def round_two_prep(space: HilbertSpace | None = None) -> Operator:
    """Instantaneous re-preparation between rounds: bit-flip then re-excite.

    Per atom the qubit bit-flip exchanges levels 0 and 1 and the excitation
    pulse lifts 1 to 2, composing to the permutation 0->2, 1->0, 2->1 (the
    branch acting on a populated level 2 never matters, because
    post-selection requires the previous round's excitation to be gone).
    """
    space = space or ATOM_SPACE
    local = np.zeros((3, 3), dtype=complex)
    local[2, 0] = local[0, 1] = local[1, 2] = 1.0
    return embed(space, "atom1", local) @ embed(space, "atom2", local)


def relabel_after_flip(space: HilbertSpace | None = None) -> Operator:
    """Qubit bit-flip on both atoms (levels 0 and 1 swapped, level 2 fixed).

    Applying this once more after the second round expresses the final state
    in the first round's qubit labeling, which is the frame the closed forms
    are written in.
    """
    space = space or ATOM_SPACE
    local = np.zeros((3, 3), dtype=complex)
    local[0, 1] = local[1, 0] = local[2, 2] = 1.0
    return embed(space, "atom1", local) @ embed(space, "atom2", local)


# ---------------------------------------------------------------------------
# ideal detectors


def bell_state(m: int) -> StateVector:
    """(|01> + (-1)^m |10>)/sqrt(2) on the qubit space."""
    amp = np.zeros(4, dtype=complex)
    amp[_I01] = 1 / math.sqrt(2)
    amp[_I10] = (-1) ** m / math.sqrt(2)
    return StateVector(amp, QUBIT_SPACE)


def ideal_final_state(outcome: ClickOutcome, delta: float) -> StateVector:
    """Heralded state (|01> + (-1)^m e^{i delta (t1-t2)} |10>)/sqrt(2)."""
    amp = np.zeros(4, dtype=complex)
    amp[_I01] = 1 / math.sqrt(2)
    amp[_I10] = (-1) ** outcome.m * np.exp(1j * delta * (outcome.t1 - outcome.t2)) / math.sqrt(2)
    return StateVector(amp, QUBIT_SPACE)


def phase_correction(
    psi: StateVector, outcome: ClickOutcome, delta: float, tol: float = 1e-9
) -> StateVector:
    """Undo the click-time phase by a z-rotation of -delta*(t1-t2) on qubit 1."""
    if psi.space != QUBIT_SPACE:
        raise ValueError("phase correction acts on the two-qubit space")
    weight_outside = (
        abs(psi.amplitudes[QUBIT_SPACE.flat_index((0, 0))]) ** 2
        + abs(psi.amplitudes[QUBIT_SPACE.flat_index((1, 1))]) ** 2
    )
    if weight_outside > tol:
        raise ValueError("state has support outside span{|01>, |10>}")
    theta = -delta * (outcome.t1 - outcome.t2)
    local = np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    return embed(QUBIT_SPACE, "qubit1", local) @ psi


def closest_bell_phase(rho: DensityMatrix) -> float:
    """Phase phi maximizing <psi(phi)|rho|psi(phi)> over Bell-like states."""
    return float(-np.angle(rho.matrix[_I01, _I10]))


def closest_bell_fidelity(rho: DensityMatrix) -> float:
    """max_phi <psi(phi)|rho|psi(phi)> = 1/2 + |rho_{01,10}| (rho normalized).

    Valid for states supported on span{|01>, |10>}; the input is normalized
    by its trace first.
    """
    tr = rho.trace()
    if tr <= 0:
        raise ValueError("state has nonpositive trace")
    return float(0.5 + abs(rho.matrix[_I01, _I10]) / tr)


def success_probability(params: BKParams) -> float:
    """eta^2 / 2: both rounds must collect and detect their photon."""
    return 0.5 * params.eta**2


# ---------------------------------------------------------------------------
# bad-detector limit (no timing information)


def bad_limit_first_round_state(params: BKParams) -> DensityMatrix:
    """Click-time-averaged state after one successful round.

    Averaging (|01> + e^{-i delta t1}|10>)/sqrt(2) over the single-click time
    density kappa_eff e^{-kappa_eff t1}/4 dephases the coherence by the
    Lorentzian factor kappa_eff/(kappa_eff + i delta).
    """
    if params.kappa_eff <= 0:
        raise ValueError("kappa_eff must be positive")
    ke, d = params.kappa_eff, params.delta
    coh = ke / (ke + 1j * d)
    m = np.zeros((4, 4), dtype=complex)
    m[_I01, _I01] = m[_I10, _I10] = 0.5
    m[_I01, _I10] = 0.5 * coh
    m[_I10, _I01] = 0.5 * np.conj(coh)
    return DensityMatrix(m, QUBIT_SPACE)


class BadLimitResult(NamedTuple):
    fidelity: float
    final_state: DensityMatrix


def bad_limit_fidelity(params: BKParams) -> BadLimitResult:
    """Fidelity 1/2 (1 + kappa_eff^2/(kappa_eff^2 + delta^2)) and the state behind it.

    Built constructively: the first-round state is re-prepared (which swaps
    the roles of |01> and |10>), evolved under the no-click generator, and
    the second click is integrated over all times.  Every integral reduces to
    int_0^inf kappa e^{-kappa t} e^{+-i delta t} dt = kappa/(kappa -+ i delta).
    """
    if params.kappa_eff <= 0:
        raise ValueError("kappa_eff must be positive")
    ke, d = params.kappa_eff, params.delta
    q = 0.5 * ke / (ke + 1j * d)  # first-round coherence <01|rho|10>
    # after the bit-flip the coherence sits on <20|rho|02>; a D+/D+ record
    # multiplies it by (kappa_eff/2) int e^{-kappa_eff t} e^{+i delta t} dt
    coh2 = q * 0.5 * ke / (ke - 1j * d)
    diag2 = 0.25  # each of |01>,|10> keeps half of its unit branch weight
    norm = 2 * diag2
    m = np.zeros((4, 4), dtype=complex)
    m[_I01, _I01] = m[_I10, _I10] = diag2 / norm
    m[_I01, _I10] = coh2 / norm
    m[_I10, _I01] = np.conj(coh2) / norm
    rho = DensityMatrix(m, QUBIT_SPACE)
    return BadLimitResult(closest_bell_fidelity(rho), rho)


# ---------------------------------------------------------------------------
# finite time resolution: closed forms


def _phase_factor_series(u: complex) -> complex:
    """(1 - e^{-u})/u continued through u = 0."""
    if abs(u) < 1e-4:
        return 1 - u / 2 + u * u / 6 - u * u * u / 24
    return (1 - np.exp(-u)) / u


def _w_complex(t: float, params: BKParams) -> complex:
    """Single-round click amplitude factor for the coherence.

    w(t) = (e^{-gamma_r t} - e^{-(kappa_eff + i delta) t}) / (kappa_eff -
    gamma_r + i delta); all exponents have nonpositive real part, so this is
    overflow-free, and the removable singularity at gamma_r = kappa_eff (with
    delta = 0) is evaluated by its series limit t e^{-gamma_r t}.
    """
    ke, d, g = params.kappa_eff, params.delta, params.gamma_r
    z = ke - g + 1j * d
    if abs(z) * t < 1e-4:
        return t * math.exp(-g * t) * _phase_factor_series(z * t)
    return (math.exp(-g * t) - np.exp(-(ke + 1j * d) * t)) / z


def _w_real(t: float, params: BKParams) -> float:
    """Diagonal analogue of :func:`_w_complex` (delta set to zero)."""
    ke, g = params.kappa_eff, params.gamma_r
    x = ke - g
    if abs(x) * t < 1e-4:
        return t * math.exp(-g * t) * float(np.real(_phase_factor_series(complex(x * t))))
    return (math.exp(-g * t) - math.exp(-ke * t)) / x


def intermediate_rho(outcome: ClickOutcome, params: BKParams) -> DensityMatrix:
    """Unnormalized heralded state for observed clicks at (t1, t2).

    Only three components are nonzero:

        rho_{01,01} = rho_{10,10} = (kappa_eff^2/16) w_r(t1) w_r(t2)
        rho_{01,10} = (-1)^m (kappa_eff^2/16) w(t1) conj(w(t2))

    normalized so that gamma_r^2 * trace is the joint click-time density for
    one specific detector sequence.  The conjugate on the second-round factor
    keeps the fast-detector limit consistent with the heralded pure state
    (the trace and coherence magnitude are unaffected by it).
    """
    if params.kappa_eff <= 0 or params.gamma_r < 0:
        raise ValueError("need kappa_eff > 0 and gamma_r >= 0")
    pref = params.kappa_eff**2 / 16
    wr1, wr2 = _w_real(outcome.t1, params), _w_real(outcome.t2, params)
    w1, w2 = _w_complex(outcome.t1, params), _w_complex(outcome.t2, params)
    m = np.zeros((4, 4), dtype=complex)
    m[_I01, _I01] = m[_I10, _I10] = pref * wr1 * wr2
    coh = (-1) ** outcome.m * pref * w1 * np.conj(w2)
    m[_I01, _I10] = coh
    m[_I10, _I01] = np.conj(coh)
    return DensityMatrix(m, QUBIT_SPACE)


def joint_click_density(outcome: ClickOutcome, params: BKParams) -> float:
    """P(t1, t2) = gamma_r^2 tr rho(t1, t2) for one specific click sequence."""
    return params.gamma_r**2 * intermediate_rho(outcome, params).trace()


def conditional_fidelity(outcome: ClickOutcome, params: BKParams) -> float:
    """Fidelity of the heralded state with the closest maximally entangled state.

    Equals 1/2 + |rho_{01,10}| / tr rho; finite for all click times, with the
    t -> 0 limit taken analytically (both w factors vanish linearly).
    """
    t1, t2 = outcome.t1, outcome.t2
    wr1, wr2 = _w_real(t1, params), _w_real(t2, params)
    if wr1 == 0.0 or wr2 == 0.0:
        # zero click time: w/w_r -> 1 separately in each round
        r1 = 1.0 if wr1 == 0.0 else abs(_w_complex(t1, params)) / wr1
        r2 = 1.0 if wr2 == 0.0 else abs(_w_complex(t2, params)) / wr2
        return 0.5 + 0.5 * r1 * r2
    num = abs(_w_complex(t1, params) * _w_complex(t2, params))
    return 0.5 + 0.5 * num / (wr1 * wr2)


def _default_t_max(params: BKParams) -> float:
    ke, g = params.kappa_eff, params.gamma_r
    rate = min(ke * g / (g + ke), g)
    if rate <= 0:
        raise ValueError("need positive rates for the click-time quadrature")
    return 30.0 / rate


def _quad2d_product(f1d, t_max: float, scales: tuple[float, ...]) -> float:
    """Tensor-product adaptive quadrature of f(t1) f(t2) over [0, t_max]^2."""
    pts = sorted({min(s, t_max * 0.999) for s in scales if s > 0})

    def inner(t1: float) -> float:
        v1 = f1d(t1)
        if v1 == 0.0:
            return 0.0
        val, _ = quad(f1d, 0.0, t_max, points=pts, limit=200, epsabs=1e-13, epsrel=1e-11)
        return v1 * val

    # the inner integral is t1-independent for a product integrand, but it is
    # re-evaluated adaptively so the 2-D scheme stays generic
    val, _ = quad(inner, 0.0, t_max, points=pts, limit=200, epsabs=1e-13, epsrel=1e-11)
    return val


def _tail_bound_1d(t_max: float, params: BKParams) -> float:
    """Bound on int_T^inf |w| dt using |w(t)| <= t e^{-min(kappa, gamma) t}."""
    r = min(params.kappa_eff, params.gamma_r)
    if r <= 0:
        return math.inf
    return math.exp(-r * t_max) * (t_max / r + 1.0 / r**2)


def two_click_probability(params: BKParams, t_max: float | None = None) -> float:
    """Total probability of one specific two-click sequence: integrates to 1/8."""
    t_max = t_max or _default_t_max(params)
    g2 = params.gamma_r**2

    def f(t: float) -> float:
        return _w_real(t, params)

    scale = params.kappa_eff**2 / 8 * g2
    raw = _quad2d_product(f, t_max, (1 / params.gamma_r, 1 / params.kappa_eff))
    return scale * raw


class AverageFidelityResult(NamedTuple):
    value: float
    tail_bound: float
    t_max: float


def average_fidelity(params: BKParams, t_max: float | None = None) -> AverageFidelityResult:
    """Post-selection-averaged fidelity 1/2 + 8 gamma_r^2 iint |rho_{01,10}|.

    Evaluated by tensor-product adaptive quadrature over [0, t_max]^2 with
    t_max covering 30 e-foldings of the slowest click-time scale; the
    reported tail bound majorizes the truncated mass.
    """
    if params.kappa_eff <= 0 or params.gamma_r <= 0:
        raise ValueError("need positive kappa_eff and gamma_r")
    t_max = t_max or _default_t_max(params)
    pref = 8 * params.gamma_r**2 * params.kappa_eff**2 / 16

    def f(t: float) -> float:
        return abs(_w_complex(t, params))

    raw = _quad2d_product(f, t_max, (1 / params.gamma_r, 1 / params.kappa_eff))
    value = 0.5 + pref * raw
    # tail of the product integral: (I_T + tail)^2 - I_T^2
    i_t = math.sqrt(max(raw, 0.0))
    tail1 = _tail_bound_1d(t_max, params)
    tail = pref * ((i_t + tail1) ** 2 - i_t**2)
    return AverageFidelityResult(min(value, 1.0), tail, t_max)


# ---------------------------------------------------------------------------
# detector-cascade oracle for the closed form


def intermediate_rho_from_cascade(
    outcome: ClickOutcome,
    params: BKParams,
    sequence: tuple[str, str] | None = None,
    t_tail: float | None = None,
) -> DensityMatrix:
    """Reconstruct rho(t1, t2) by integrating the detector-sector equations.

    Runs the full two-round pipeline: evolve the sector bank to t1, apply the
    observed-click update, wait out the round (conditioning on no further
    observed clicks), re-prepare, repeat for t2, and express the result in
    the first round's qubit labeling.  The returned state is unnormalized
    with the same convention as :func:`intermediate_rho`.
    """
    if sequence is None:
        sequence = ("D+", "D+") if outcome.m == 0 else ("D+", "D-")
    if (sequence[0] != sequence[1]) != (outcome.m == 1):
        raise ValueError("detector sequence inconsistent with outcome.m")
    rate = min(params.kappa_eff, params.gamma_r)
    t_tail = t_tail or 60.0 / rate
    sys = build_effective_system(params)
    bank = det.initial_bank(initial_excited_state(), params.gamma_r)
    weight = 1.0

    for round_idx, (t_click, label) in enumerate(zip((outcome.t1, outcome.t2), sequence)):
        bank = det.no_click_evolve(bank, sys, t_click)
        weight *= det.observed_click_weight(bank, label)
        bank = det.observed_click_update(bank, label)
        bank = det.no_click_evolve(bank, sys, t_tail)
        if round_idx == 0:
            prep = round_two_prep()
            bank = det.DetectorBankState(
                *(
                    DensityMatrix(prep.matrix @ rho.matrix @ prep.matrix.conj().T, sys.space)
                    for rho in bank.sectors
                ),
                gamma_r=bank.gamma_r,
            )

    relabel = relabel_after_flip()
    final = relabel.matrix @ bank.rho_rr.matrix @ relabel.matrix.conj().T
    # project the 9-dim atom matrix onto the qubit block
    idx = [ATOM_SPACE.flat_index((a, b)) for a, b in ((0, 0), (0, 1), (1, 0), (1, 1))]
    block = final[np.ix_(idx, idx)] * weight
    return DensityMatrix(block, QUBIT_SPACE)


# ---------------------------------------------------------------------------
# Monte Carlo over the full protocol


@dataclass
class ProtocolSamples:
    """Per-trajectory protocol results from a Monte Carlo run."""

    success: np.ndarray  # exactly one click in each round
    t1: np.ndarray  # first-round click time (nan for failed runs)
    t2: np.ndarray
    m: np.ndarray  # number of D- clicks mod 2 (-1 for failed runs)
    first_label: list[str | None]
    second_label: list[str | None]
    final_states: np.ndarray  # post-round-2 states, first-round labeling
    round_length: float
    seed: int

    def outcomes(self) -> list[ClickOutcome]:
        return [
            ClickOutcome(self.t1[i], self.t2[i], int(self.m[i]))
            for i in np.nonzero(self.success)[0]
        ]


def sample_protocol(
    params: BKParams,
    n_traj: int,
    seed: int,
    detectors: str = "ideal",
    round_length: float | None = None,
    system: ConditionalSystem | None = None,
) -> ProtocolSamples:
    """Run the two-round protocol `n_traj` times and record click statistics.

    ``detectors="ideal"`` unravels photon emissions directly;
    ``detectors="cascade"`` samples observed clicks of the finite-resolution
    detector model at rate ``params.gamma_r``.  Both keep every component of
    the state (nothing is dropped), so post-selection statistics are honest.
    """
    sys = system or build_effective_system(params)
    psi0 = initial_excited_state(sys.space)
    if round_length is None:
        round_length = 30.0 / params.kappa_eff
        if detectors == "cascade":
            round_length += 30.0 / params.gamma_r
    prep = round_two_prep(sys.space)

    if detectors == "ideal":
        ens = TrajectoryEnsemble(sys, psi0, n_traj, seed)
        run = ens.run
        transform = ens.transform_states
    elif detectors == "cascade":
        ens = det.ObservedClickEnsemble(sys, psi0, params.gamma_r, n_traj, seed)
        run = ens.run
        transform = ens.transform_states
    else:
        raise ValueError(f"unknown detector mode {detectors!r}")

    round1 = run(round_length)
    transform(prep)
    round2 = run(round_length)

    relabel = relabel_after_flip(sys.space)
    finals = ens.states @ relabel.matrix.T

    n = n_traj
    success = np.zeros(n, dtype=bool)
    t1 = np.full(n, np.nan)
    t2 = np.full(n, np.nan)
    m = np.full(n, -1, dtype=int)
    lab1: list[str | None] = [None] * n
    lab2: list[str | None] = [None] * n
    for i in range(n):
        if len(round1[i]) == 1 and len(round2[i]) == 1:
            success[i] = True
            (t1[i], l1), (t2[i], l2) = round1[i][0], round2[i][0]
            lab1[i], lab2[i] = l1, l2
            m[i] = 0 if l1 == l2 else 1
    return ProtocolSamples(
        success=success,
        t1=t1,
        t2=t2,
        m=m,
        first_label=lab1,
        second_label=lab2,
        final_states=finals,
        round_length=round_length,
        seed=seed,
    )
