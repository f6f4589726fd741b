import math

import numpy as np
import pytest

from photonbeat import bkprotocol as bk
from photonbeat import detector as det
from photonbeat import hom
from photonbeat.qcore import DensityMatrix, basis_state

BK = bk.BKParams(kappa_eff=1.0, delta=0.8, gamma_r=1.5)
HOMP = hom.HOMParams(kappa=1.0, delta=2.0, gamma_r=3.0)


def bk_bank(gamma_r=BK.gamma_r):
    return det.initial_bank(bk.initial_excited_state(), gamma_r)


def hand_bank(w_rr, w_plus, w_minus, w_tt, gamma_r=1.0):
    """Diagonal two-sector example on the cavity space with given weights."""
    space = hom.CAVITY_SPACE
    vac = basis_state(space, (0, 0)).to_density_matrix().matrix

    def rho(w):
        return DensityMatrix(w * vac, space)

    return det.DetectorBankState(
        rho(w_rr), rho(w_plus), rho(w_minus), rho(w_tt), gamma_r=gamma_r
    )


class TestNoClickEvolve:
    def test_dark_ready_state_is_stationary(self):
        space = hom.CAVITY_SPACE
        bank = det.initial_bank(basis_state(space, (0, 0)), gamma_r=0.0)
        sys = hom.build_hom_system(HOMP)
        out = det.no_click_evolve(bank, sys, 2.0)
        assert np.allclose(out.rho_rr.matrix, bank.rho_rr.matrix, atol=1e-12)
        assert out.rho_plus.trace() == pytest.approx(0.0, abs=1e-12)

    def test_triggered_weight_grows_at_click_rate(self):
        # d tr rho_+ / dt at t=0 equals the D+ click density of the start state
        sys = bk.build_effective_system(BK)
        t = 1e-3 / BK.kappa_eff
        out = det.no_click_evolve(bk_bank(), sys, t)
        expected = (BK.kappa_eff / 2) * t
        assert out.rho_plus.trace() == pytest.approx(expected, rel=1e-2)

    def test_rk45_matches_expm(self):
        sys = bk.build_effective_system(BK)
        a = det.no_click_evolve(bk_bank(), sys, 1.3, method="expm")
        b = det.no_click_evolve(bk_bank(), sys, 1.3, method="rk45")
        for ra, rb in zip(a.sectors, b.sectors):
            assert np.max(np.abs(ra.matrix - rb.matrix)) < 1e-7

    def test_total_trace_vs_mc_click_probability(self):
        # total trace after t = no-observed-click probability
        params = bk.BKParams(kappa_eff=1.0, delta=0.8, gamma_r=1.0)
        sys = bk.build_effective_system(params)
        t = 5.0 / params.kappa_eff
        bank_t = det.no_click_evolve(bk_bank(params.gamma_r), sys, t)
        p_no_click = bank_t.total_trace()
        n = 20000
        records = det.sample_observed_ensemble(bk_bank(params.gamma_r), sys, t, seed=21, n_traj=n)
        frac = sum(1 for r in records if not r.clicks) / n
        sigma = math.sqrt(p_no_click * (1 - p_no_click) / n)
        assert abs(frac - p_no_click) <= 4 * sigma

    def test_sector_positivity_along_evolution(self):
        sys = bk.build_effective_system(BK)
        bank = bk_bank()
        for _ in range(5):
            bank = det.no_click_evolve(bank, sys, 0.7)
            for rho in bank.sectors:
                eigs = np.linalg.eigvalsh((rho.matrix + rho.matrix.conj().T) / 2)
                assert eigs.min() >= -1e-9

    def test_trace_bookkeeping_rate(self):
        # d/dt total trace = -gamma_r (tr rho_+ + tr rho_- + 2 tr rho_TT)
        sys = hom.build_hom_system(HOMP)
        bank = det.no_click_evolve(det.initial_bank(hom.initial_two_photon_state(),
                                                    HOMP.gamma_r), sys, 0.8)
        eps = 1e-5
        plus = det.no_click_evolve(bank, sys, eps)
        minus_t = bank
        deriv = (plus.total_trace() - minus_t.total_trace()) / eps
        expected = -HOMP.gamma_r * (
            bank.rho_plus.trace() + bank.rho_minus.trace() + 2 * bank.rho_tt.trace()
        )
        assert deriv == pytest.approx(expected, rel=1e-3)

    def test_fast_detector_limit_recovers_ideal_density(self):
        # gamma_r/kappa = 1e3: observed first-click pdf matches the ideal
        # click density within 1%
        params = hom.HOMParams(kappa=1.0, delta=2.0, gamma_r=1000.0)
        for t in (0.5, 1.0, 2.0):
            obs = hom.finite_resolution_first_click_density(params, t)
            ideal = hom.ideal_first_click_density(params, t)
            assert obs == pytest.approx(ideal, rel=1e-2)


class TestClickUpdate:
    def test_all_ready_pdf_vanishes(self):
        bank = hand_bank(1.0, 0.0, 0.0, 0.0, gamma_r=2.0)
        assert det.observed_click_pdf(bank, "D+") == 0.0
        assert det.observed_click_pdf(bank, "D-") == 0.0

    def test_pdf_is_rate_times_triggered_weight(self):
        bank = hand_bank(0.2, 0.3, 0.1, 0.25, gamma_r=7.0)
        assert det.observed_click_pdf(bank, "D+") == pytest.approx(7.0 * 0.55)
        assert det.observed_click_pdf(bank, "D-") == pytest.approx(7.0 * 0.35)

    def test_plus_click_promotes_plus_sector(self):
        bank = hand_bank(0.4, 0.3, 0.1, 0.0)
        out = det.observed_click_update(bank, "D+")
        assert out.rho_rr.trace() == pytest.approx(1.0)
        assert out.rho_plus.trace() == 0.0
        assert out.rho_minus.trace() == 0.0
        assert out.rho_tt.trace() == 0.0

    def test_immediate_second_click_impossible_without_tt(self):
        bank = hand_bank(0.4, 0.3, 0.1, 0.0)
        out = det.observed_click_update(bank, "D+")
        assert det.observed_click_pdf(out, "D+") == 0.0
        with pytest.raises(ValueError, match="zero-weight"):
            det.observed_click_update(out, "D+")

    def test_minus_pdf_inherits_tt_weight_after_plus_click(self):
        # D+ click maps rho_TT into the D- triggered sector
        w_plus, w_tt, g = 0.3, 0.2, 1.7
        bank = hand_bank(0.1, w_plus, 0.05, w_tt, gamma_r=g)
        out = det.observed_click_update(bank, "D+")
        total = w_plus + w_tt
        assert out.rho_minus.trace() == pytest.approx(w_tt / total)
        assert det.observed_click_pdf(out, "D-") == pytest.approx(g * w_tt / total)

    def test_unknown_label(self):
        with pytest.raises(KeyError):
            det.observed_click_pdf(hand_bank(1, 0, 0, 0), "D*")


class TestObservedSampler:
    def test_zero_rate_never_clicks(self):
        sys = hom.build_hom_system(hom.HOMParams(kappa=1.0, delta=2.0, gamma_r=0.0))
        bank = det.initial_bank(hom.initial_two_photon_state(), 0.0)
        rec = det.sample_observed_clicks(bank, sys, 20.0, seed=3)
        assert rec.clicks == ()

    def test_determinism(self):
        sys = hom.build_hom_system(HOMP)
        bank = det.initial_bank(hom.initial_two_photon_state(), HOMP.gamma_r)
        a = det.sample_observed_clicks(bank, sys, 20.0, seed=12)
        b = det.sample_observed_clicks(bank, sys, 20.0, seed=12)
        assert a.clicks == b.clicks

    def test_interval_histogram_matches_sector_odes(self):
        # self-consistency of the unraveling against the deterministic bank
        from photonbeat.oracles import hom_cascade_interval_ks

        res = hom_cascade_interval_ks(HOMP, n_traj=20000, seed=31, threshold=0.02)
        assert res.passed, f"KS = {res.statistic} with n = {res.n_samples}"

    def test_coalescence_limit_fast_detectors(self):
        # delta = 0, gamma_r >> kappa: same-detector pairs dominate
        params = hom.HOMParams(kappa=1.0, delta=0.0, gamma_r=50.0)
        sys = hom.build_hom_system(params)
        bank = det.initial_bank(hom.initial_two_photon_state(), params.gamma_r)
        records = det.sample_observed_ensemble(bank, sys, 40.0, seed=17, n_traj=4000)
        pairs = [r for r in records if len(r.clicks) == 2]
        same = sum(1 for r in pairs if r.clicks[0][1] == r.clicks[1][1])
        frac = same / len(pairs)
        # swallowed same-port photons cost a few percent of pairs at finite
        # gamma_r; the remaining pairs must still be overwhelmingly one-port
        assert frac > 0.95

    def test_rejects_mixed_initial_bank(self):
        space = hom.CAVITY_SPACE
        mixed = DensityMatrix(np.diag([0.5, 0.5, 0, 0]).astype(complex), space)
        bank = det.DetectorBankState(
            mixed,
            DensityMatrix(np.zeros((4, 4)), space),
            DensityMatrix(np.zeros((4, 4)), space),
            DensityMatrix(np.zeros((4, 4)), space),
            gamma_r=1.0,
        )
        sys = hom.build_hom_system(HOMP)
        with pytest.raises(ValueError, match="pure"):
            det.sample_observed_clicks(bank, sys, 1.0, seed=0)
