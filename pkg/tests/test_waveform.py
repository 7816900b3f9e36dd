import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fahad.geometry import AnglePair, ArrayGeometry, Trajectory, random_trajectory, steering_matrix
from fahad.streams import Stream, generator
from fahad.waveform import (
    PilotMatrix,
    SourceSet,
    complex_noise,
    equivalent_signal,
    make_pilots,
    noise_var_from_snr,
    position_steering,
    random_sources,
    snapshots_at_position,
    snr_from_noise_var,
)


class TestPilots:
    def test_single_sample(self):
        assert np.allclose(make_pilots(1, 1).data, [[1.0]])

    def test_orthonormal_small(self):
        s = make_pilots(2, 4).data
        assert np.linalg.norm(s @ s.conj().T - np.eye(2)) < 1e-12

    def test_gram_oracle(self):
        s = make_pilots(6, 64).data
        gram = np.array([[np.sum(s[i] * np.conj(s[j])) for j in range(6)] for i in range(6)])
        off = gram - np.diag(np.diag(gram))
        assert np.max(np.abs(off)) <= 1e-12
        assert np.allclose(np.diag(gram), 1.0, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError):
            make_pilots(6, 5)

    def test_rejects_nonorthonormal(self):
        with pytest.raises(ValueError):
            PilotMatrix(np.ones((2, 4)))


class TestEquivalentSignal:
    def test_unit_gains(self):
        pil = make_pilots(3, 10)
        src = SourceSet.from_degrees([(10, 20), (30, 40), (-5, 5)])
        assert np.array_equal(equivalent_signal(src, pil), pil.data)

    def test_scaled_row(self):
        pil = make_pilots(1, 8)
        src = SourceSet.from_degrees([(10, 20)], gains=[2j])
        assert np.allclose(equivalent_signal(src, pil), 2j * pil.data)

    def test_power_direct_sum(self):
        rng = np.random.default_rng(4)
        src = random_sources(rng, 5)
        pil = make_pilots(5, 40)
        s_bar = equivalent_signal(src, pil)
        p_hat = sum(abs(s_bar[l, n]) ** 2 for l in range(5) for n in range(40)) / 40
        row_power = np.sum(np.abs(pil.data[0]) ** 2)
        assert p_hat == pytest.approx(np.sum(np.abs(src.gains) ** 2) * row_power / 40, rel=1e-12)

    def test_mismatched_rows(self):
        with pytest.raises(ValueError):
            equivalent_signal(SourceSet.from_degrees([(1, 2)]), make_pilots(2, 4))


class TestSnapshots:
    def setup_method(self):
        self.geom = ArrayGeometry.ula(4)
        self.traj = random_trajectory(0, 3)

    def test_noiseless_single_source(self):
        src = SourceSet.from_degrees([(25, -40)])
        pil = make_pilots(1, 16)
        block = snapshots_at_position(2, self.geom, self.traj, src, pil, 0.0, None)
        coords = self.geom.elements + self.traj.displacements[2]
        a = steering_matrix(coords, src.thetas, src.phis)[:, 0]
        assert np.allclose(block.data, np.outer(a, pil.data[0]), atol=1e-13)

    def test_broadside_rows_identical(self):
        src = SourceSet.from_degrees([(0, 10), (0, -70)], gains=[1, 0.5j])
        block = snapshots_at_position(1, self.geom, self.traj, src, make_pilots(2, 12), 0.0, None)
        assert np.allclose(block.data - block.data[0], 0, atol=1e-13)

    def test_negative_noise(self):
        with pytest.raises(ValueError):
            snapshots_at_position(0, self.geom, self.traj, SourceSet.from_degrees([(0, 0)]), make_pilots(1, 2),
                                  -1.0, None)

    def test_deterministic_given_rng(self):
        src = SourceSet.from_degrees([(10, 10)])
        pil = make_pilots(1, 8)
        a = snapshots_at_position(0, self.geom, self.traj, src, pil, 0.1, np.random.default_rng(9)).data
        b = snapshots_at_position(0, self.geom, self.traj, src, pil, 0.1, np.random.default_rng(9)).data
        assert np.array_equal(a, b)

    def test_sample_covariance_converges(self):
        n_p = 100_000
        src = SourceSet.from_degrees([(20, 30), (-40, 60)], gains=[1.0, 0.7 - 0.3j])
        pil = make_pilots(2, n_p)
        nv = noise_var_from_snr(0.0, n_p)
        block = snapshots_at_position(1, self.geom, self.traj, src, pil, nv, generator(0, 0, Stream.NOISE, 1, 0))
        sample = block.data @ block.data.conj().T / n_p
        a = position_steering(self.geom, self.traj, 1, src)
        s_bar = equivalent_signal(src, pil)
        expected = a @ (s_bar @ s_bar.conj().T / n_p) @ a.conj().T + nv * np.eye(4)
        assert np.linalg.norm(sample - expected) <= 0.05 * np.linalg.norm(expected)

    def test_noise_independent_across_positions(self):
        n_p = 100_000
        src = SourceSet.from_degrees([(20, 30)], gains=[0.0])
        pil = make_pilots(1, n_p)
        nv = 1.0
        y1 = snapshots_at_position(0, self.geom, self.traj, src, pil, nv, generator(0, 0, Stream.NOISE, 0, 0)).data
        y2 = snapshots_at_position(1, self.geom, self.traj, src, pil, nv, generator(0, 0, Stream.NOISE, 1, 0)).data
        cross = y1 @ y2.conj().T / n_p
        auto = y1 @ y1.conj().T / n_p
        assert np.max(np.abs(cross)) < 0.02
        assert np.allclose(np.diag(auto).real, nv, rtol=0.02)


class TestNoiseAndSnr:
    def test_noise_variance(self):
        x = complex_noise(np.random.default_rng(1), (200_000,), 0.25)
        assert np.mean(np.abs(x) ** 2) == pytest.approx(0.25, rel=0.01)
        assert abs(np.mean(x.real ** 2) - np.mean(x.imag ** 2)) < 0.005

    @given(st.floats(-40, 40), st.integers(1, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_snr_round_trip(self, snr, n_p):
        assert snr_from_noise_var(noise_var_from_snr(snr, n_p), n_p) == pytest.approx(snr, abs=1e-9)

    def test_unit_pilot_snr_convention(self):
        # per-sample pilot power 1/Np over per-entry noise variance gives the stated SNR
        n_p = 50
        nv = noise_var_from_snr(7.0, n_p)
        assert 10 * np.log10((1.0 / n_p) / nv) == pytest.approx(7.0)


class TestSources:
    def test_random_sources_ranges(self):
        src = random_sources(np.random.default_rng(2), 200, (-0.5, 0.5), (0.1, 0.2))
        assert np.all(np.abs(src.thetas) <= 0.5)
        assert np.all((src.phis >= 0.1) & (src.phis <= 0.2))
        assert np.mean(np.abs(src.gains) ** 2) == pytest.approx(1.0, abs=0.25)

    def test_invalid(self):
        with pytest.raises(ValueError):
            SourceSet((), [])
        with pytest.raises(ValueError):
            SourceSet((AnglePair(0, 0),), [np.inf])
        with pytest.raises(ValueError):
            SourceSet((AnglePair(0, 0),), [1, 2])


def test_quasi_static_sources_shared_across_positions():
    geom = ArrayGeometry.ula(3)
    traj = Trajectory([(0, 0), (0.3, 0)])
    src = SourceSet.from_degrees([(30, 0)])
    pil = make_pilots(1, 4)
    b0 = snapshots_at_position(0, geom, traj, src, pil, 0.0, None).data
    b1 = snapshots_at_position(1, geom, traj, src, pil, 0.0, None).data
    shift = np.exp(2j * np.pi * 0.3 * np.sin(np.deg2rad(30)))
    assert np.allclose(b1, shift * b0, atol=1e-13)
