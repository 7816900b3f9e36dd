import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fahad.bench.metrics import nse
from fahad.errors import SingularPhaseConfig
from fahad.geometry import ArrayGeometry, random_trajectory
from fahad.scm_recon import (
    ExactOracle,
    SampledOracle,
    exact_covariance,
    protocol_combiners,
    reconstruct_block,
    reconstruct_diagonal,
    reconstruct_full,
    reconstruct_pair,
    rho,
    sample_covariance,
)
from fahad.waveform import SourceSet, make_pilots, random_sources


def random_scene(n=4, k=3, l=2, seed=0, n_pilots=32, noise_var=0.1):
    rng = np.random.default_rng(seed)
    geom = ArrayGeometry.ula(n)
    traj = random_trajectory(rng, k, axis="both")
    src = random_sources(rng, l)
    pil = make_pilots(l, n_pilots)
    return geom, traj, src, pil, noise_var


def analytic_block(r, n, k1, k2):
    return r[k1 * n:(k1 + 1) * n, k2 * n:(k2 + 1) * n]


class TestRho:
    def test_quarter_pi(self):
        assert rho(np.pi / 4) == pytest.approx(0.5j)

    @pytest.mark.parametrize("alpha", [0.0, np.pi / 2, np.pi, -np.pi / 2])
    def test_singular(self, alpha):
        with pytest.raises(SingularPhaseConfig):
            rho(alpha)

    @given(st.floats(0.01, 1.56))
    @settings(max_examples=50, deadline=None)
    def test_magnitude_law(self, alpha):
        assert abs(rho(alpha)) == pytest.approx(1 / (2 * abs(np.sin(2 * alpha))))


class TestExactProtocol:
    def test_broadside_diagonal(self):
        geom = ArrayGeometry.ula(3)
        traj = random_trajectory(0, 2)
        src = SourceSet.from_degrees([(0.0, 20.0)])
        r = exact_covariance(geom, traj, src, make_pilots(1, 10), 0.2)
        oracle = ExactOracle(r, 3)
        for n in range(3):
            assert reconstruct_diagonal(oracle, 1, 1, n) == pytest.approx(0.1 + 0.2)

    def test_broadside_diagonal_unit_power(self):
        # one unit-gain source; the per-sample power 1/Np times Np pilot samples gives R_s = 1/Np
        geom = ArrayGeometry.ula(3)
        src = SourceSet.from_degrees([(0.0, 0.0)])
        r = exact_covariance(geom, random_trajectory(0, 1), src, make_pilots(1, 1), 0.25)
        assert reconstruct_diagonal(ExactOracle(r, 3), 0, 0, 2) == pytest.approx(1.25)

    def test_diagonal_matches_block_lookup(self):
        geom, traj, src, pil, nv = random_scene(seed=3)
        r = exact_covariance(geom, traj, src, pil, nv)
        oracle = ExactOracle(r, 4)
        for k1 in range(3):
            for k2 in range(3):
                for n in range(4):
                    got = reconstruct_diagonal(oracle, k1, k2, n)
                    assert got == pytest.approx(analytic_block(r, 4, k1, k2)[n, n], rel=1e-12, abs=1e-15)
        for n in range(4):
            d = reconstruct_diagonal(oracle, 1, 1, n)
            assert abs(d.imag) < 1e-15 and d.real >= 0

    def test_pair_matches_analytic(self):
        geom, traj, src, pil, nv = random_scene(seed=5)
        r = exact_covariance(geom, traj, src, pil, nv)
        oracle = ExactOracle(r, 4)
        blk = analytic_block(r, 4, 0, 2)
        dn = reconstruct_diagonal(oracle, 0, 2, 1)
        dm = reconstruct_diagonal(oracle, 0, 2, 3)
        nm, mn = reconstruct_pair(oracle, 0, 2, 1, 3, np.pi / 8, dn, dm)
        assert abs(nm - blk[1, 3]) <= 1e-12 * abs(blk[1, 3])
        assert abs(mn - blk[3, 1]) <= 1e-12 * abs(blk[3, 1])

    def test_pair_needs_distinct_indices(self):
        oracle = ExactOracle(np.eye(4), 4)
        with pytest.raises(ValueError):
            reconstruct_pair(oracle, 0, 0, 1, 1, 0.3, 1.0, 1.0)

    def test_vector_and_scalar_paths_agree(self):
        geom, traj, src, pil, nv = random_scene(seed=6)
        oracle = ExactOracle(exact_covariance(geom, traj, src, pil, nv), 4)
        blk = reconstruct_block(oracle, 2, 1, 0.4)
        for n in range(4):
            for m in range(n + 1, 4):
                dn, dm = blk[n, n], blk[m, m]
                nm, mn = reconstruct_pair(oracle, 2, 1, n, m, 0.4, dn, dm)
                assert nm == pytest.approx(blk[n, m], rel=1e-12)
                assert mn == pytest.approx(blk[m, n], rel=1e-12)

    @pytest.mark.parametrize("k", [16, 24, 32])
    def test_full_reconstruction_nse(self, k):
        rng = np.random.default_rng(k)
        geom = ArrayGeometry.ula(8)
        traj = random_trajectory(rng, k)
        src = random_sources(rng, 6)
        r = exact_covariance(geom, traj, src, make_pilots(6, 100), 0.01)
        rec = reconstruct_full(ExactOracle(r, 8), np.pi / 8)
        assert nse(r, rec.R) <= 1e-20
        assert rec.measurements == 64 * k * k
        assert np.linalg.norm(rec.R - rec.R.conj().T) <= 1e-9 * np.linalg.norm(rec.R)

    @given(st.integers(1, 16), st.integers(1, 6), st.integers(1, 6),
           st.floats(0.001, np.pi / 2 - 0.001).filter(lambda a: abs(np.sin(2 * a)) >= 1e-3),
           st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_exactness_property(self, n, k, l, alpha, seed):
        rng = np.random.default_rng(seed)
        geom = ArrayGeometry.ula(n)
        traj = random_trajectory(rng, k, axis="both")
        r = exact_covariance(geom, traj, random_sources(rng, l), make_pilots(l, 16), 0.05)
        assert nse(r, reconstruct_full(ExactOracle(r, n), alpha).R) <= 1e-20

    def test_singular_alpha_raises(self):
        with pytest.raises(SingularPhaseConfig):
            reconstruct_full(ExactOracle(np.eye(4), 2), np.pi / 2)

    def test_protocol_accounting(self):
        w, pairs = protocol_combiners(8, 0.3)
        assert w.shape == (8, 64)
        assert pairs.shape == (28, 2)
        assert np.allclose(np.sum(np.abs(w[:, :8]) ** 2, axis=0), 1 / 8)
        assert np.allclose(np.sum(np.abs(w[:, 8:]) ** 2, axis=0), 2 / 8)

    def test_clip_negative(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 4))
        r = x + x.T - 3 * np.eye(4)
        rec = reconstruct_full(ExactOracle(r, 2), 0.4, clip_negative=True)
        assert np.min(np.linalg.eigvalsh(rec.R)) >= -1e-12


class TestConditioning:
    def amplification(self, alpha, trials=40):
        geom, traj, src, pil, nv = random_scene(n=4, k=2, seed=1)
        r = exact_covariance(geom, traj, src, pil, nv)
        errs = []
        for t in range(trials):
            oracle = ExactOracle(r, 4, injected_std=1e-6, rng=np.random.default_rng(t))
            rec = reconstruct_full(oracle, alpha)
            off = ~np.eye(r.shape[0], dtype=bool)
            errs.append(np.sqrt(np.mean(np.abs(rec.R - r)[off] ** 2)) / 1e-6)
        return float(np.mean(errs))

    def test_amplification_tracks_rho(self):
        alphas = [np.pi / 4, 0.1, 0.01, np.pi / 2 - 0.01]
        amps = np.array([self.amplification(a) for a in alphas])
        rhos = np.array([abs(rho(a)) for a in alphas])
        ratio = amps / rhos
        assert np.max(ratio) / np.min(ratio) < 3.0
        assert amps[2] > 10 * amps[0]


class TestSampled:
    def test_shared_frames_equal_sample_covariance(self):
        geom, traj, src, pil, nv = random_scene(seed=2)
        oracle = SampledOracle.from_scene(geom, traj, src, pil, nv, seed=9)
        rec = reconstruct_full(oracle, np.pi / 8)
        direct = sample_covariance(oracle.blocks)
        assert np.allclose(rec.R, 0.5 * (direct + direct.conj().T), rtol=1e-10, atol=1e-12)

    def test_nse_decreases_with_pilots(self):
        medians = []
        for n_p in (100, 1000, 10000):
            vals = []
            for trial in range(5):
                geom, traj, src, pil, nv = random_scene(n=4, k=3, seed=trial, n_pilots=n_p, noise_var=0.5 / n_p)
                r = exact_covariance(geom, traj, src, pil, nv)
                oracle = SampledOracle.from_scene(geom, traj, src, pil, nv, seed=trial, fresh_frames=True)
                vals.append(nse(r, reconstruct_full(oracle, np.pi / 8).R))
            medians.append(np.median(vals))
        assert medians[0] > medians[1] > medians[2]

    def test_hermitian(self):
        geom, traj, src, pil, nv = random_scene(seed=4)
        rec = reconstruct_full(SampledOracle.from_scene(geom, traj, src, pil, nv, fresh_frames=True), 0.3)
        assert np.linalg.norm(rec.R - rec.R.conj().T) <= 1e-9 * np.linalg.norm(rec.R)
        assert rec.mode == "sampled"

    def test_deterministic(self):
        geom, traj, src, pil, nv = random_scene(seed=4)
        a = reconstruct_full(SampledOracle.from_scene(geom, traj, src, pil, nv, 3, 1, True), 0.3).R
        b = reconstruct_full(SampledOracle.from_scene(geom, traj, src, pil, nv, 3, 1, True), 0.3).R
        assert np.array_equal(a, b)
