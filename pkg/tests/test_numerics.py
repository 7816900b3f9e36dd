import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fahad.errors import ResolutionFailure
from fahad.numerics import (
    GridAxis,
    SpectrumGrid,
    bessel_j,
    bessel_j_orders,
    find_peaks,
    hermitian_evd,
    local_maxima,
    pseudo_inverse,
    truncation_order,
)
from fahad.numerics.bessel import _miller_table, _series_table


def random_hermitian(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x + x.conj().T


class TestHermitianEvd:
    def test_identity(self):
        assert np.allclose(hermitian_evd(np.eye(3)).eigenvalues, 1.0)

    def test_rank_one(self):
        y = np.array([1, 1j, 1 - 1j, 0])
        ev = hermitian_evd(np.outer(y, y.conj())).eigenvalues
        assert ev[0] == pytest.approx(4.0)
        assert np.allclose(ev[1:], 0, atol=1e-12)

    def test_matches_mpmath_oracle(self):
        r = random_hermitian(np.random.default_rng(0), 8)
        ours = hermitian_evd(r).eigenvalues
        mp.mp.dps = 30
        ref = mp.eigh(mp.matrix(r.tolist()), eigvals_only=True)
        ref = np.sort(np.array([float(v) for v in ref]))[::-1]
        assert np.max(np.abs(ours - ref)) <= 1e-8

    @given(st.integers(1, 12), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_reconstruction_and_unitarity(self, n, seed):
        r = random_hermitian(np.random.default_rng(seed), n)
        e = hermitian_evd(r)
        u = e.eigenvectors
        assert np.all(np.diff(e.eigenvalues) <= 0)
        assert np.linalg.norm(r - u @ np.diag(e.eigenvalues) @ u.conj().T) / np.linalg.norm(r) <= 1e-10
        assert np.linalg.norm(u.conj().T @ u - np.eye(n)) <= 1e-10

    def test_symmetrizes_small_asymmetry(self):
        r = random_hermitian(np.random.default_rng(2), 5)
        r[0, 1] += 1e-10
        assert np.all(np.isreal(hermitian_evd(r).eigenvalues))

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            hermitian_evd(np.array([[np.nan]]))

    def test_noise_subspace_needs_room(self):
        with pytest.raises(ValueError):
            hermitian_evd(np.eye(3)).noise_subspace(3)


class TestPseudoInverse:
    def test_identity(self):
        assert np.allclose(pseudo_inverse(np.eye(4)), np.eye(4))

    def test_diag(self):
        assert np.allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    @given(st.integers(0, 10_000), st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_penrose_conditions(self, seed, rank):
        rng = np.random.default_rng(seed)
        m = (rng.standard_normal((5, rank)) + 1j * rng.standard_normal((5, rank))) @ \
            (rng.standard_normal((rank, 5)) + 1j * rng.standard_normal((rank, 5)))
        p = pseudo_inverse(m)
        scale = np.linalg.norm(m)
        assert np.linalg.norm(m @ p @ m - m) <= 1e-8 * scale
        assert np.linalg.norm(p @ m @ p - p) <= 1e-8 * np.linalg.norm(p)
        assert np.linalg.norm((m @ p).conj().T - m @ p) <= 1e-8
        assert np.linalg.norm((p @ m).conj().T - p @ m) <= 1e-8

    def test_small_singular_values_dropped(self):
        p = pseudo_inverse(np.diag([1.0, 1e-12]), rel_tol=1e-10)
        assert np.allclose(p, np.diag([1.0, 0.0]))


class TestBessel:
    def test_at_zero(self):
        assert bessel_j(0, 0.0) == 1.0
        assert all(bessel_j(l, 0.0) == 0.0 for l in range(1, 10))

    def test_negative_order_symmetry(self):
        z = np.linspace(-30, 30, 61)
        assert np.array_equal(bessel_j(-3, z), -bessel_j(3, z))
        assert np.array_equal(bessel_j(-4, z), bessel_j(4, z))

    def test_first_zero(self):
        assert abs(bessel_j(0, 2.404825557695773)) <= 1e-9

    def test_against_mpmath(self):
        mp.mp.dps = 30
        zs = np.r_[np.linspace(-60, 60, 41), 0.3, 11.99, 12.0, 12.01]
        table = bessel_j_orders(60, zs)
        worst = 0.0
        for i, z in enumerate(zs):
            for l in range(0, 61, 3):
                worst = max(worst, abs(table[l, i] - float(mp.besselj(l, z))))
        assert worst <= 1e-10

    def test_series_and_recurrence_agree(self):
        z = np.linspace(0.5, 12.0, 24)
        assert np.max(np.abs(_series_table(60, z) - _miller_table(60, z))) <= 1e-10

    @given(st.floats(-200, 200), st.integers(-40, 40))
    @settings(max_examples=60, deadline=None)
    def test_parity_in_argument(self, z, l):
        assert bessel_j(l, -z) == pytest.approx((-1) ** (l % 2) * bessel_j(l, z), abs=1e-15)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            bessel_j(0, 2e3)
        with pytest.raises(ValueError):
            bessel_j(0, np.inf)


def tail_order_oracle(z, eps):
    # running maximum of |J_l| over a dense grid on [0, z], evaluated by scipy
    zs = np.r_[np.linspace(0.0, z, 8001), z]
    orders = np.arange(0, int(z) + 60)
    running = np.max(np.abs(special.jv(orders[:, None], zs[None, :])), axis=1)
    return int(orders[running >= eps].max(initial=0))


class TestTruncationOrder:
    def test_zero(self):
        assert truncation_order(0.0, 1e-3) == 0

    def test_default_eps(self):
        import inspect

        assert inspect.signature(truncation_order).parameters["eps"].default == 1e-3

    def test_z5_scan(self):
        got = truncation_order(5.0, 1e-3)
        assert got == tail_order_oracle(5.0, 1e-3)
        # the first-crossing scan agrees here: J_l(5) stays above 1e-3 for every l <= 10
        literal = next(l for l in range(60) if abs(float(mp.besselj(l + 1, 5))) < 1e-3)
        assert got == literal == 10

    @pytest.mark.parametrize("z,eps", [(0.1, 1e-3), (1.0, 1e-3), (7.3, 1e-3), (24.0, 1e-3), (75.0, 1e-3),
                                       (21.0, 0.25), (60.0, 0.2), (10.0, 1e-8)])
    def test_tail_oracle(self, z, eps):
        assert truncation_order(z, eps) == tail_order_oracle(z, eps)

    def test_covers_every_smaller_argument(self):
        # |J_l(21)| < 0.25 for all l, yet J_1 reaches 0.58 below z = 21
        assert truncation_order(21.0, 0.25) >= truncation_order(1.0, 0.25) >= 1

    @given(st.floats(0, 80), st.floats(0, 80), st.floats(1e-8, 0.5), st.floats(1e-8, 0.5))
    @settings(max_examples=60, deadline=None)
    def test_monotone(self, z1, z2, e1, e2):
        zl, zh = sorted((z1, z2))
        el, eh = sorted((e1, e2))
        assert truncation_order(zl, eh) <= truncation_order(zh, eh)
        assert truncation_order(zl, eh) <= truncation_order(zl, el)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            truncation_order(1.0, 0.0)


def exhaustive_local_max(values):
    out = []
    rows, cols = values.shape
    for i in range(rows):
        for j in range(cols):
            neigh = [values[a, b] for a in range(i - 1, i + 2) for b in range(j - 1, j + 2)
                     if (a, b) != (i, j) and 0 <= a < rows and 0 <= b < cols]
            if all(values[i, j] > v for v in neigh):
                out.append((i, j))
    return sorted(out, key=lambda p: (-values[p], p))


class TestPeaks:
    def test_parabola_apex(self):
        x = np.arange(21)
        assert find_peaks(-(x - 7.0) ** 2, 1) == [7]

    def test_equal_peaks_lower_first(self):
        v = np.zeros(11)
        v[2] = v[8] = 1.0
        assert find_peaks(v, 2) == [2, 8]

    def test_tie_prefers_lower_index(self):
        v = np.zeros(11)
        v[2] = v[8] = 1.0
        assert find_peaks(v, 1) == [2]

    @given(st.integers(0, 10_000), st.integers(1, 4))
    @settings(max_examples=30, deadline=None)
    def test_gaussian_mixture_matches_exhaustive(self, seed, count):
        rng = np.random.default_rng(seed)
        x, y = np.meshgrid(np.arange(60), np.arange(50), indexing="ij")
        centers = [(8 + 14 * i, 10 + 10 * ((i * 3) % 4)) for i in range(count)]
        v = sum(rng.uniform(0.5, 2.0) * np.exp(-((x - a) ** 2 + (y - b) ** 2) / 8.0) for a, b in centers)
        oracle = sorted(exhaustive_local_max(v)[:count])
        assert find_peaks(SpectrumGrid((np.arange(60), np.arange(50)), v), count) == oracle

    def test_separation(self):
        v = np.array([0, 3, 0, 2.9, 0, 0, 1, 0], float)
        assert find_peaks(v, 2, min_separation=3) == [1, 6]

    def test_too_few(self):
        with pytest.raises(ResolutionFailure) as info:
            find_peaks(np.array([0.0, 1.0, 0.0]), 2)
        assert info.value.found == [1]

    def test_flat_has_no_strict_maxima(self):
        assert not local_maxima(np.ones((4, 4))).any()

    def test_grid_axis(self):
        ax = GridAxis.degrees(-1, 1, 0.5)
        assert np.allclose(np.rad2deg(ax.points), [-1, -0.5, 0, 0.5, 1])
        with pytest.raises(ValueError):
            GridAxis(0, 1, 0)

    def test_spectrum_grid_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SpectrumGrid((np.arange(2),), [0.0, np.nan])
