import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonbeat import bkprotocol as bk
from photonbeat import hom
from photonbeat.dynamics import (
    ConditionalSystem,
    apply_jump,
    click_density,
    evolve_conditional,
    lindblad_propagate,
    sample_ensemble,
    sample_trajectory,
    trajectory_state,
)
from photonbeat.qcore import HilbertSpace, Operator, StateVector, basis_state

BK = bk.BKParams(kappa_eff=1.0, delta=0.7, gamma_r=1.0)
HOMP = hom.HOMParams(kappa=1.0, delta=2.0)


def random_system(rng, dim=3, n_jumps=2):
    space = HilbertSpace((dim,), ("s",))
    herm = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    herm = (herm + herm.conj().T) / 2
    jumps = []
    total = np.zeros((dim, dim), dtype=complex)
    for i in range(n_jumps):
        r = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / 2
        jumps.append((f"c{i}", Operator(r, space)))
        total += r.conj().T @ r
    h = Operator(herm - 0.5j * total, space)
    return ConditionalSystem(h, jumps)


def random_state(rng, space):
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return StateVector(v / np.linalg.norm(v), space)


class TestConditionalSystem:
    def test_inconsistent_decay_rejected(self):
        space = HilbertSpace((2,), ("s",))
        h = Operator(np.diag([0.0, -0.5j]), space)
        wrong_jump = Operator(np.array([[0.0, 2.0], [0.0, 0.0]]), space)
        with pytest.raises(ValueError, match="anti-Hermitian"):
            ConditionalSystem(h, (("D+", wrong_jump),))

    def test_unknown_label(self):
        sys = bk.build_effective_system(BK)
        with pytest.raises(KeyError):
            sys.jump("D?")


class TestEvolveConditional:
    def test_zero_time_is_identity(self):
        sys = bk.build_effective_system(BK)
        psi = bk.initial_excited_state()
        out = evolve_conditional(sys, psi, 0.0)
        assert np.array_equal(out.amplitudes, psi.amplitudes)

    def test_single_excitation_amplitude_decay(self):
        # c_20(t) = c_20(0) exp(-kappa_eff t / 2)
        sys = bk.build_effective_system(BK)
        psi = basis_state(sys.space, (2, 0))
        dt = 1.7
        out = evolve_conditional(sys, psi, dt)
        idx = sys.space.flat_index((1, 0))
        amp = out.amplitudes[sys.space.flat_index((2, 0))]
        assert amp == pytest.approx(math.exp(-BK.kappa_eff * dt / 2), rel=1e-8)
        assert abs(out.amplitudes[idx]) < 1e-12

    def test_detuned_path_phase(self):
        # c_02 = e^{-i delta t} c_20 when both start equal
        sys = bk.build_effective_system(BK)
        amp = np.zeros(9, dtype=complex)
        amp[sys.space.flat_index((2, 0))] = amp[sys.space.flat_index((0, 2))] = 1 / math.sqrt(2)
        psi = StateVector(amp, sys.space)
        dt = 2.3
        out = evolve_conditional(sys, psi, dt)
        c20 = out.amplitudes[sys.space.flat_index((2, 0))]
        c02 = out.amplitudes[sys.space.flat_index((0, 2))]
        assert c02 == pytest.approx(np.exp(-1j * BK.delta * dt) * c20, rel=1e-8)

    def test_matches_exact_propagator(self):
        rng = np.random.default_rng(7)
        sys = random_system(rng)
        psi = random_state(rng, sys.space)
        dt = 0.9
        out = evolve_conditional(sys, psi, dt)
        exact = sys._propagator.states_at(psi.amplitudes[None, :], [dt])[0]
        assert np.max(np.abs(out.amplitudes - exact)) < 1e-7


class TestClickDensity:
    def test_no_excitation_gives_zero(self):
        sys = bk.build_effective_system(BK)
        assert click_density(sys, basis_state(sys.space, (0, 0)), "D+") == 0.0

    def test_bk_initial_rate(self):
        # R+ on the four-term initial state: three terms of weight 1/4 survive
        # with |R+ psi|^2 = (kappa_eff/2)(1/4)(1 + 1 + 2) = kappa_eff/2
        sys = bk.build_effective_system(BK)
        psi = bk.initial_excited_state()
        assert click_density(sys, psi, "D+") == pytest.approx(BK.kappa_eff / 2, rel=1e-12)

    def test_hom_two_photon_rates(self):
        sys = hom.build_hom_system(HOMP)
        psi = hom.initial_two_photon_state()
        for label in ("D+", "D-"):
            assert click_density(sys, psi, label) == pytest.approx(HOMP.kappa, rel=1e-12)

    def test_unknown_label(self):
        sys = hom.build_hom_system(HOMP)
        with pytest.raises(KeyError):
            click_density(sys, hom.initial_two_photon_state(), "D0")


class TestApplyJump:
    def test_hom_plus_click_entangles(self):
        sys = hom.build_hom_system(HOMP)
        out = apply_jump(sys, hom.initial_two_photon_state(), "D+")
        expected = np.zeros(4, dtype=complex)
        expected[sys.space.flat_index((1, 0))] = 1 / math.sqrt(2)
        expected[sys.space.flat_index((0, 1))] = 1 / math.sqrt(2)
        assert np.allclose(out.amplitudes, expected, atol=1e-12)

    def test_hom_minus_click_antisymmetric(self):
        sys = hom.build_hom_system(HOMP)
        out = apply_jump(sys, hom.initial_two_photon_state(), "D-")
        diff = out.amplitudes[sys.space.flat_index((1, 0))] - out.amplitudes[
            sys.space.flat_index((0, 1))
        ]
        assert abs(abs(diff) - math.sqrt(2)) < 1e-12

    def test_bk_first_round_minus_click_phase(self):
        # zero-excitation part after a D- click at t1: |01> - e^{i delta t1}|10>
        sys = bk.build_effective_system(BK)
        t1 = 1.3
        psi = evolve_conditional(sys, bk.initial_excited_state(), t1)
        post = apply_jump(sys, psi, "D-")
        a01 = post.amplitudes[sys.space.flat_index((0, 1))]
        a10 = post.amplitudes[sys.space.flat_index((1, 0))]
        assert a10 / a01 == pytest.approx(-np.exp(1j * BK.delta * t1), rel=1e-9)

    def test_zero_probability_jump_rejected(self):
        sys = hom.build_hom_system(HOMP)
        with pytest.raises(ValueError, match="zero-probability"):
            apply_jump(sys, basis_state(sys.space, (0, 0)), "D+")


class TestLindblad:
    def test_zero_time_identity(self):
        sys = hom.build_hom_system(HOMP)
        rho = hom.initial_two_photon_state().to_density_matrix()
        out = lindblad_propagate(sys, rho, 0.0)
        assert np.array_equal(out.matrix, rho.matrix)

    def test_trace_preservation(self):
        sys = bk.build_effective_system(BK)
        rho = bk.initial_excited_state().to_density_matrix()
        out = lindblad_propagate(sys, rho, 3.0)
        assert out.trace() == pytest.approx(1.0, abs=1e-8)

    def test_hom_decays_to_vacuum(self):
        sys = hom.build_hom_system(HOMP)
        rho = hom.initial_two_photon_state().to_density_matrix()
        out = lindblad_propagate(sys, rho, 20.0 / HOMP.kappa)
        assert out.matrix[0, 0].real >= 1 - 1e-6


class TestSampling:
    def test_zero_jump_operators_give_no_clicks(self):
        space = HilbertSpace((2,), ("s",))
        h = Operator(np.diag([0.0, 1.0]).astype(complex), space)
        zero = Operator(np.zeros((2, 2)), space)
        sys = ConditionalSystem(h, (("D+", zero), ("D-", zero)))
        rec = sample_trajectory(sys, basis_state(space, (1,)), 10.0, seed=1)
        assert rec.clicks == ()

    def test_hom_zero_detuning_perfect_coalescence(self):
        sys = hom.build_hom_system(hom.HOMParams(kappa=1.0, delta=0.0))
        records = sample_ensemble(sys, hom.initial_two_photon_state(), 30.0, seed=2, n_traj=2000)
        for rec in records:
            labels = {lbl for _, lbl in rec.clicks}
            assert len(rec.clicks) == 2
            assert len(labels) == 1

    def test_seed_determinism_bit_identical(self):
        sys = bk.build_effective_system(BK)
        psi = bk.initial_excited_state()
        a = sample_trajectory(sys, psi, 25.0, seed=99)
        b = sample_trajectory(sys, psi, 25.0, seed=99)
        assert a.clicks == b.clicks
        assert np.array_equal(a.final_state.amplitudes, b.final_state.amplitudes)

    def test_scalar_matches_ensemble_stream(self):
        sys = hom.build_hom_system(HOMP)
        psi = hom.initial_two_photon_state()
        solo = sample_trajectory(sys, psi, 20.0, seed=5)
        batch = sample_ensemble(sys, psi, 20.0, seed=5, n_traj=4)
        assert solo.clicks == batch[0].clicks

    def test_replay_reconstructs_final_state(self):
        sys = hom.build_hom_system(HOMP)
        psi = hom.initial_two_photon_state()
        rec = sample_trajectory(sys, psi, 20.0, seed=8)
        replayed = trajectory_state(sys, psi, rec.clicks, rec.t_end)
        overlap = abs(np.vdot(replayed.amplitudes, rec.final_state.amplitudes))
        assert overlap == pytest.approx(1.0, abs=1e-9)

    def test_ensemble_average_matches_lindblad(self):
        # trace distance <= 5/sqrt(N) at three checkpoints
        n = 10000
        sys = hom.build_hom_system(HOMP)
        psi = hom.initial_two_photon_state()
        records = sample_ensemble(sys, psi, 3.0, seed=4, n_traj=n)
        bound = 5.0 / math.sqrt(n)
        for t in (0.5, 1.5, 3.0):
            avg = np.zeros((4, 4), dtype=complex)
            for rec in records:
                amp = trajectory_state(sys, psi, rec.clicks, t).amplitudes
                avg += np.outer(amp, amp.conj())
            avg /= n
            ref = lindblad_propagate(sys, psi.to_density_matrix(), t).matrix
            tdist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(avg - ref)))
            assert tdist <= bound


class TestInvariants:
    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_norm_never_increases(self, seed):
        rng = np.random.default_rng(seed)
        sys = random_system(rng)
        psi = random_state(rng, sys.space)
        out = evolve_conditional(sys, psi, 0.5)
        assert out.norm_squared() <= psi.norm_squared() + 1e-9

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_channel_sum_identity(self, seed):
        # -2 Im <psi|H|psi> equals the summed click densities
        rng = np.random.default_rng(seed)
        sys = random_system(rng)
        psi = random_state(rng, sys.space)
        lhs = -2.0 * sys.h_cond.expectation(psi).imag
        rhs = sum(click_density(sys, psi, lbl) for lbl in sys.labels)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)
