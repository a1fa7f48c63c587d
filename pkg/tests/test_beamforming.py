import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from symradio import beamforming as bf
from symradio.channel import BdSymbolModel, ChannelRealization, SystemParams, cscg, make_rng, sample_channels
from symradio.numerics import ValidationError
from symradio.rates import DegenerateBeamError, equivalent_channel, primary_rate_mc

from conftest import random_unit
from oracles import brute_force_m2


def realization(J, M=4, seed=0, **kw):
    P = SystemParams.from_db(J=J, M=M, **kw)
    return P, sample_channels(P, seed)


class TestMrc:
    def test_axis(self):
        res = bf.mrc_beamformer([1, 0, 0, 0])
        np.testing.assert_array_equal(res.wd, [1, 0, 0, 0])
        assert res.method is bf.BeamMethod.MRC

    def test_scale_invariance(self, rng):
        hd = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        c = 3.0 * np.exp(1j * 0.7)
        a, b = bf.mrc_beamformer(hd).wd, bf.mrc_beamformer(c * hd).wd
        assert abs(abs(np.vdot(a, b)) - 1) < 1e-12
        assert abs(np.vdot(a, hd)) == pytest.approx(abs(np.vdot(b, hd)))

    def test_cauchy_schwarz(self, rng):
        hd = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w = bf.mrc_beamformer(hd).wd
        gain = abs(np.vdot(w, hd)) ** 2
        assert gain == pytest.approx(np.linalg.norm(hd) ** 2)
        for _ in range(200):
            assert abs(np.vdot(random_unit(rng, 4), hd)) ** 2 <= gain * (1 + 1e-12)

    def test_zero(self):
        with pytest.raises(DegenerateBeamError):
            bf.mrc_beamformer(np.zeros(3))


class TestCorrelation:
    def test_no_bds(self):
        P, real = realization(0)
        R = bf.correlation_matrix(real, P)
        np.testing.assert_allclose(R, np.outer(real.hd, real.hd.conj()))
        assert np.linalg.matrix_rank(R) == 1

    def test_alpha_zero(self):
        P, real = realization(4, alpha=0.0)
        np.testing.assert_allclose(bf.correlation_matrix(real, P), np.outer(real.hd, real.hd.conj()))

    def test_empirical_second_moment(self):
        # symbol scale does not matter for the relative check, so use a unit-scale channel
        P = SystemParams(J=3, M=4, beta_hd=1.0, beta_h=1.0, beta_g=1.0)
        real = sample_channels(P, 3)
        c = cscg(make_rng(8, 0), (1_000_000, 3))
        heq = equivalent_channel(real, c, P.alpha)
        emp = heq.T @ heq.conj() / heq.shape[0]
        R = bf.correlation_matrix(real, P)
        assert np.linalg.norm(emp - R) <= 0.01 * np.linalg.norm(R)

    def test_symbol_model_independent(self):
        P, real = realization(3)
        Q = P.with_(bd_symbol_model=BdSymbolModel.UNIT_MODULUS)
        np.testing.assert_array_equal(bf.correlation_matrix(real, P), bf.correlation_matrix(real, Q))


class TestCorrEig:
    def test_no_bds_is_mrc(self):
        P, real = realization(0)
        res = bf.corr_eig_beamformer(real, P)
        np.testing.assert_allclose(res.wd, bf.mrc_beamformer(real.hd).wd, atol=1e-12)
        assert "note" in res.diagnostics

    def test_dominant_bd_alignment(self):
        hd = np.array([1e-3, 0, 0, 0], dtype=complex)
        g = np.array([[0.1, 1.0, 0.2j, 0.0], [1.0, 0, 0, 0]])
        real = ChannelRealization(hd, [10.0, 1e-3], g)
        P = SystemParams(J=2, M=4)
        w = bf.corr_eig_beamformer(real, P).wd
        cos = abs(np.vdot(w, g[0])) / np.linalg.norm(g[0])
        assert math.acos(min(cos, 1.0)) < 0.1

    def test_objective_and_optimality(self, rng):
        for seed in range(20):
            P, real = realization(10, seed=seed)
            res = bf.corr_eig_beamformer(real, P)
            R = bf.correlation_matrix(real, P)
            q = np.real(np.vdot(res.wd, R @ res.wd))
            assert res.objective == pytest.approx(q, rel=1e-10)
            hd = real.hd
            assert q >= np.real(np.vdot(hd, R @ hd)) / np.linalg.norm(hd) ** 2 * (1 - 1e-12)
            probes = rng.standard_normal((4, 1000)) + 1j * rng.standard_normal((4, 1000))
            probes /= np.linalg.norm(probes, axis=0)
            assert np.all(np.real(np.sum(probes.conj() * (R @ probes), axis=0)) <= q * (1 + 1e-12))

    def test_unit_and_phase(self):
        P, real = realization(7, seed=1)
        w = bf.corr_eig_beamformer(real, P).wd
        assert abs(np.linalg.norm(w) - 1) < 1e-12
        ip = np.vdot(w, real.hd)
        assert ip.real >= 0 and abs(ip.imag) < 1e-12 * abs(ip)


class TestJensen:
    def test_tight_without_bds(self):
        P, real = realization(0)
        w = bf.mrc_beamformer(real.hd).wd
        exact = math.log2(1 + P.p * abs(np.vdot(w, real.hd)) ** 2 / P.sigma2)
        assert bf.jensen_upper_bound(w, bf.correlation_matrix(real, P), P) == pytest.approx(exact)

    def test_upper_bounds_mc(self, rng):
        P, real = realization(12, seed=4)
        R = bf.correlation_matrix(real, P)
        for _ in range(5):
            w = random_unit(rng, 4)
            est = primary_rate_mc(w, real, P, 20_000, seed=1)
            assert est.mean <= bf.jensen_upper_bound(w, R, P) + 3 * est.stderr

    def test_top_eigvec_maximizes(self, rng):
        P, real = realization(12, seed=4)
        R = bf.correlation_matrix(real, P)
        best = bf.jensen_upper_bound(bf.corr_eig_beamformer(real, P).wd, R, P)
        for _ in range(100):
            assert bf.jensen_upper_bound(random_unit(rng, 4), R, P) <= best + 1e-12

    def test_unit_required(self):
        with pytest.raises(ValidationError):
            bf.jensen_upper_bound(np.ones(2), np.eye(2), SystemParams(M=2))


class TestClosedFormObjective:
    @given(st.integers(0, 2 ** 32), st.floats(0, 2 * np.pi))
    def test_global_phase_invariance(self, seed, phase):
        P, real = realization(5, seed=seed)
        w = random_unit(np.random.default_rng(seed), 4)
        a = bf.beam_rate(w, real, P)
        b = bf.beam_rate(w * np.exp(1j * phase), real, P)
        assert a == pytest.approx(b, rel=1e-12)

    def test_matches_rates_module(self):
        from symradio.rates import primary_rate_closed
        P, real = realization(9, seed=2)
        w = bf.corr_eig_beamformer(real, P).wd
        assert bf.beam_rate(w, real, P) == pytest.approx(
            primary_rate_closed(w, real, P).primary_rate_bps_hz, rel=1e-12)


class TestSdr:
    def test_no_bds(self):
        P, real = realization(0)
        res = bf.sdr_beamformer(real, P)
        np.testing.assert_allclose(res.wd, bf.mrc_beamformer(real.hd).wd)
        assert "note" in res.diagnostics

    def test_requires_cscg(self):
        P, real = realization(3, bd_symbol_model=BdSymbolModel.UNIT_MODULUS)
        with pytest.raises(ValidationError):
            bf.sdr_beamformer(real, P)

    def test_dominates_other_beams(self):
        for seed in range(8):
            P, real = realization(int(np.random.default_rng(seed).integers(1, 60)), seed=seed)
            res = bf.sdr_beamformer(real, P, seed=seed)
            assert abs(np.linalg.norm(res.wd) - 1) < 1e-9 and math.isfinite(res.objective)
            assert res.objective == pytest.approx(bf.beam_rate(res.wd, real, P), rel=1e-12)
            for other in (bf.mrc_beamformer(real.hd), bf.corr_eig_beamformer(real, P)):
                assert res.objective >= bf.beam_rate(other.wd, real, P) - 1e-6

    def test_diagnostics(self):
        P, real = realization(20, seed=3)
        d = bf.sdr_beamformer(real, P).diagnostics
        for key in ("xi_star", "eig_ratio", "sdp_iterations", "skipped", "sdp_bound"):
            assert key in d
        assert d["xi_star"] > 0
        # near rank-one optimum: randomization must recover the relaxation value
        if d["eig_ratio"] >= 1e3:
            assert 2 ** d["randomization_objective"] >= 0.99 * 2 ** d["sdp_bound"]

    def test_objective_never_exceeds_bound(self):
        for seed in range(5):
            P, real = realization(30, seed=seed)
            d = bf.sdr_beamformer(real, P, seed=seed)
            assert d.objective <= d.diagnostics["sdp_bound"] + 1e-7

    def test_mrc_optimal_for_massive_bd_limit(self, rng):
        from symradio.rates import primary_rate_asymptotic
        P, real = realization(1)
        P = P.with_(J=500)
        best = primary_rate_asymptotic(bf.mrc_beamformer(real.hd).wd, real.hd, P)
        for _ in range(500):
            assert primary_rate_asymptotic(random_unit(rng, 4), real.hd, P) <= best + 1e-12

    def test_many_bds_close_to_mrc(self):
        # holds while the direct link still dominates at the MRC point (lambda / 2 Sigma >~ 1);
        # deeper in the backscatter-dominated regime the finite-J optimum follows the
        # anisotropy of the aggregate backscatter matrix instead
        P = SystemParams.from_db(J=1000, beta_hd_db=-100.0)
        for seed in range(4):
            real = sample_channels(P, seed)
            w = bf.sdr_beamformer(real, P, seed=seed).wd
            cos = abs(np.vdot(w, real.hd)) / np.linalg.norm(real.hd)
            assert math.acos(min(cos, 1.0)) < 0.05

    def test_m2_vs_sphere_grid(self):
        for seed in range(10):
            P, real = realization(2, M=2, seed=seed)
            res = bf.sdr_beamformer(real, P, seed=seed)
            Hd, HB = bf.snr_matrices(real, P)
            theta = np.linspace(0, np.pi / 2, 100)
            phi = np.linspace(0, 2 * np.pi, 100, endpoint=False)
            T, F = np.meshgrid(theta, phi)
            W = np.stack([np.cos(T).ravel(), (np.sin(T) * np.exp(1j * F)).ravel()])
            best = max(bf.closed_form_objective(W[:, k], Hd, HB) for k in range(W.shape[1]))
            assert res.objective >= best - 1e-3

    def test_deterministic(self):
        P, real = realization(15, seed=9)
        a, b = bf.sdr_beamformer(real, P, seed=4), bf.sdr_beamformer(real, P, seed=4)
        np.testing.assert_array_equal(a.wd, b.wd)

    def test_all_infeasible_raises(self, monkeypatch):
        P, real = realization(5, seed=1)
        from symradio import sdp

        def fail(problem, max_iter=200):
            n = problem.dim
            return sdp.SdpSolution(np.zeros((n, n)), np.nan, np.zeros(2), sdp.KktResiduals(0, 0, 0),
                                   sdp.SdpStatus.INFEASIBLE)
        monkeypatch.setattr(sdp, "solve", fail)
        with pytest.raises(bf.SolverError):
            bf.sdr_beamformer(real, P)

    def test_dispatch(self):
        P, real = realization(4)
        for m in ("MRC", "CorrelationEig", "SDR"):
            assert bf.beamformer(m, real, P).method.value == m


def test_brute_force_oracle_sanity():
    # max of w^H C w subject to w^H D w = 0 for diagonal data is a hand case
    C = np.diag([2.0, 1.0])
    D = np.diag([1.0, -1.0])
    assert brute_force_m2(C, D) == pytest.approx(1.5, abs=1e-9)
