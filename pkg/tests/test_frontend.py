import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fahad.geometry import ArrayGeometry, build_virtual_array, random_trajectory, steering_matrix
from fahad.frontend import (
    Combiner,
    acquire,
    apply_combiner,
    random_phase_combiner,
    selection_combiner,
    stack_observations,
)
from fahad.waveform import SnapshotBlock, equivalent_signal, make_pilots, random_sources


def basis(n, i):
    b = np.zeros(n, dtype=complex)
    b[i] = 1.0
    return b


class TestCombiners:
    def test_single_element(self):
        w = random_phase_combiner(np.random.default_rng(0), 1)
        assert abs(w.vector[0]) == pytest.approx(1.0)

    @given(st.integers(1, 64), st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_all_on_unit_norm(self, n, seed):
        w = random_phase_combiner(np.random.default_rng(seed), n)
        assert np.all(w.switches == 1)
        assert np.sum(np.abs(w.vector) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_phase_characteristic_function(self):
        w = random_phase_combiner(np.random.default_rng(5), 1_000_000)
        assert abs(np.mean(np.exp(1j * w.phases))) < 0.01

    def test_phases_in_range(self):
        w = random_phase_combiner(np.random.default_rng(5), 1000)
        assert np.all((w.phases >= 0) & (w.phases < 2 * np.pi))

    def test_single_selection(self):
        assert np.allclose(selection_combiner(6, [2]).vector, basis(6, 2) / np.sqrt(6))

    def test_pair_selection(self):
        assert np.allclose(selection_combiner(6, [1, 4]).vector, (basis(6, 1) + basis(6, 4)) / np.sqrt(6))

    def test_differential_phase(self):
        a = 0.3
        w = selection_combiner(5, [0, 3], [a, -a]).vector
        assert np.allclose(w, (basis(5, 3) * np.exp(-1j * a) + basis(5, 0) * np.exp(1j * a)) / np.sqrt(5))

    @pytest.mark.parametrize("idx", [[1, 1], [7], [-1]])
    def test_bad_indices(self, idx):
        with pytest.raises(ValueError):
            selection_combiner(6, idx)

    @given(st.integers(1, 16).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.integers(0, n - 1), min_size=1))))
    @settings(max_examples=50, deadline=None)
    def test_energy_is_active_fraction(self, case):
        n, active = case
        w = selection_combiner(n, sorted(active), np.linspace(0, 5, len(active)))
        assert np.sum(np.abs(w.vector) ** 2) == pytest.approx(len(active) / n)

    def test_rejects_nonbinary_switch(self):
        with pytest.raises(ValueError):
            Combiner([0, 2], [0, 0])


class TestApplyCombiner:
    def test_first_row(self):
        data = np.arange(12, dtype=complex).reshape(4, 3) * (1 + 1j)
        out = apply_combiner(selection_combiner(4, [0]), SnapshotBlock(0, data))
        assert np.allclose(out, data[0] / 2)

    def test_zero_block(self):
        out = apply_combiner(random_phase_combiner(np.random.default_rng(1), 5), SnapshotBlock(0, np.zeros((5, 7))))
        assert np.array_equal(out, np.zeros(7))

    def test_inner_product_oracle(self):
        rng = np.random.default_rng(8)
        w = random_phase_combiner(rng, 6)
        data = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
        out = apply_combiner(w, SnapshotBlock(0, data))
        oracle = [sum(np.conj(w.vector[n]) * data[n, c] for n in range(6)) for c in range(9)]
        assert np.allclose(out, oracle, atol=1e-13)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            apply_combiner(selection_combiner(3, [0]), SnapshotBlock(0, np.zeros((4, 2))))


class TestStacking:
    def test_single_row(self):
        w = selection_combiner(3, [1])
        stack = stack_observations({(0, 0): np.array([1.0, 2.0])}, {(0, 0): w}, 1, 1)
        assert np.array_equal(stack.Y, [[1.0, 2.0]])
        assert np.allclose(stack.W[:, 0], w.vector)

    def test_tau_major_ordering(self):
        rows = {(k, t): np.array([10 * t + k]) for k in range(2) for t in range(3)}
        combs = {(k, t): selection_combiner(2, [0]) for k in range(2) for t in range(3)}
        stack = stack_observations(rows, combs, 2, 3)
        assert stack.Y[:, 0].tolist() == [0, 1, 10, 11, 20, 21]
        assert stack.row(1, 2) == 5

    def test_missing_entry(self):
        with pytest.raises(ValueError):
            stack_observations({(0, 0): np.zeros(2)}, {(0, 0): selection_combiner(2, [0])}, 2, 1)

    def test_block_structure_and_column_norms(self):
        geom = ArrayGeometry.ula(4)
        traj = random_trajectory(1, 5)
        src = random_sources(np.random.default_rng(1), 2)
        stack = acquire(geom, traj, src, make_pilots(2, 8), 0.1, 3, seed=4)
        w = stack.W
        for col in range(w.shape[1]):
            k = col % 5
            nz = np.flatnonzero(np.abs(w[:, col]) > 0)
            assert nz.min() >= 4 * k and nz.max() < 4 * (k + 1)
            assert np.sum(np.abs(w[:, col]) ** 2) == pytest.approx(1.0)


class TestModelIdentity:
    @given(st.integers(1, 8), st.integers(1, 6), st.integers(1, 4), st.integers(1, 4), st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_noiseless_y_equals_wh_a_sbar(self, n, k, t, l, seed):
        rng = np.random.default_rng(seed)
        geom = ArrayGeometry.ula(n)
        traj = random_trajectory(rng, k, axis="both")
        src = random_sources(rng, l)
        pil = make_pilots(l, 2 * l + 3)
        stack = acquire(geom, traj, src, pil, 0.0, t, seed=seed)
        virt = build_virtual_array(geom, traj)
        a = steering_matrix(virt, src.thetas, src.phis)
        model = stack.W.conj().T @ a @ equivalent_signal(src, pil)
        assert np.linalg.norm(stack.Y - model) < 1e-10

    def test_acquire_deterministic(self):
        geom = ArrayGeometry.ula(4)
        traj = random_trajectory(2, 3)
        src = random_sources(np.random.default_rng(3), 2)
        pil = make_pilots(2, 10)
        a = acquire(geom, traj, src, pil, 0.3, 2, seed=11, trial=4)
        b = acquire(geom, traj, src, pil, 0.3, 2, seed=11, trial=4)
        assert np.array_equal(a.Y, b.Y) and np.array_equal(a.W, b.W)
