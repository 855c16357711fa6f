import numpy as np
import pytest

from cfslab.diracsea import GAMMA, LatticeSpec, build_system, spinor_kernel
from cfslab.errors import EmptySample
from cfslab.spectral import (
    LIGHTLIKE,
    SPACELIKE,
    TIMELIKE,
    EigenvalueList,
    classify_causality,
)
from cfslab.vacuum import (
    ChainInvariants,
    _classify_batch,
    all_pairs,
    causality_audit,
    chain_eigenvalue_formula,
    decompose_kernel,
    sample_pairs,
)

from conftest import assert_multiset_close


@pytest.fixture(scope="module")
def odd_vacuum():
    # odd spatial extent: symmetric momentum grid, no self-paired edge modes
    return build_system(LatticeSpec(eps=1.0, n_t=4, n_s=3, mass=1.0))


def flat_index(spec, t, x, y, z):
    return int(np.ravel_multi_index((t, x, y, z), spec.shape))


class TestDecomposeKernel:
    def test_identity_kernel(self):
        dec = decompose_kernel(np.eye(4), np.array([1.0, 0, 0, 0]))
        assert dec.alpha == pytest.approx(0.0, abs=1e-14)
        assert dec.beta == pytest.approx(1.0, abs=1e-14)
        assert dec.residual <= 1e-14

    def test_pure_vector_kernel(self):
        xi = np.array([0.8, 0.3, -0.2, 0.5])
        slash = xi[0] * GAMMA[0] - xi[1] * GAMMA[1] - xi[2] * GAMMA[2] - xi[3] * GAMMA[3]
        dec = decompose_kernel(slash, xi)
        assert dec.alpha == pytest.approx(1.0, abs=1e-12)
        assert dec.beta == pytest.approx(0.0, abs=1e-14)
        assert dec.residual <= 1e-12
        assert dec.misalignment <= 1e-12
        assert dec.valid

    def test_misaligned_vector_flagged(self):
        xi = np.array([1.0, 0.0, 0.0, 0.0])
        off_axis = -GAMMA[1] * 0.3 + GAMMA[0]
        dec = decompose_kernel(off_axis, xi)
        assert dec.residual <= 1e-12
        assert dec.misalignment > 1e-3
        assert not dec.valid

    def test_lattice_kernels_pure_clifford(self, odd_vacuum):
        rng = np.random.default_rng(5)
        spec = odd_vacuum.spec
        for _ in range(25):
            i, j = rng.integers(0, spec.n_points, size=2)
            coords = spec.point_coords([i, j])
            kernel = spinor_kernel(odd_vacuum.modes, coords[0] - coords[1])
            dec = decompose_kernel(kernel, coords[1] - coords[0])
            assert dec.residual <= 1e-8 * max(dec.kernel_norm, 1e-300)


class TestChainFormula:
    def test_scalar_only_degenerate(self):
        dec = decompose_kernel(2.0j * np.eye(4), np.array([1.0, 0, 0, 0]))
        values = chain_eigenvalue_formula(dec).values
        assert np.allclose(values, 4.0)

    def test_invariants_real(self):
        xi = np.array([1.5, 0.2, 0.0, -0.3])
        slash = xi[0] * GAMMA[0] - xi[1] * GAMMA[1] - xi[2] * GAMMA[2] - xi[3] * GAMMA[3]
        kernel = (0.4 + 0.2j) * slash + (1.1 - 0.7j) * np.eye(4)
        inv = ChainInvariants.from_decomposition(decompose_kernel(kernel, xi))
        assert isinstance(inv.a, float) and isinstance(inv.b, float)
        predicted = chain_eigenvalue_formula(decompose_kernel(kernel, xi))
        # direct eigenvalues of the 4x4 closed chain in spinor space
        adjoint = GAMMA[0] @ kernel.conj().T @ GAMMA[0]
        numeric = np.linalg.eigvals(kernel @ adjoint)
        assert_multiset_close(predicted.values, numeric, 1e-10)

    def test_timelike_real_spacelike_conjugate(self, odd_vacuum):
        spec = odd_vacuum.spec
        table = odd_vacuum.modes
        timelike_xi = np.array([1.0, 0, 0, 0])
        kernel = spinor_kernel(table, -timelike_xi)
        dec = decompose_kernel(kernel, timelike_xi)
        assert dec.valid
        values = chain_eigenvalue_formula(dec).values
        assert np.abs(values.imag).max() <= 1e-12 * np.abs(values).max()
        assert classify_causality(EigenvalueList(values, 2), 1e-9) == TIMELIKE

        spacelike_xi = np.array([0.0, 1.0, 0, 0])
        kernel = spinor_kernel(table, -spacelike_xi)
        dec = decompose_kernel(kernel, spacelike_xi)
        values = chain_eigenvalue_formula(dec).values
        mods = np.abs(values)
        assert mods.max() - mods.min() <= 1e-10 * mods.max()


class TestClassifyBatch:
    def test_matches_scalar_classifier(self, rng):
        values = rng.normal(size=(200, 4)) + 1j * rng.normal(size=(200, 4))
        values[::3] = np.abs(values[::3])  # make some rows real
        values[::5, 1] = values[::5, 0]  # and some rows degenerate
        batch = _classify_batch(values, 1e-9, 1e-12)
        for row, got in zip(values, batch):
            expected = classify_causality(EigenvalueList(row, 2), 1e-9, zero_floor=1e-12)
            assert got == expected


class TestSamplers:
    def test_all_pairs_shape(self):
        pairs = all_pairs(3)
        assert pairs.shape == (9, 2)
        assert pairs[0].tolist() == [0, 0]
        assert pairs[-1].tolist() == [2, 2]

    def test_sample_deterministic(self, odd_vacuum):
        a = sample_pairs(odd_vacuum.spec, 50, seed=3)
        b = sample_pairs(odd_vacuum.spec, 50, seed=3)
        assert np.array_equal(a, b)

    def test_sample_band_filter(self, odd_vacuum):
        pairs = sample_pairs(odd_vacuum.spec, 40, seed=1, band_multiplier=1.0)
        report = causality_audit(odd_vacuum, pairs, band_multiplier=1.0)
        assert report.n_in_band == 0

    def test_rejects_empty(self, odd_vacuum):
        with pytest.raises(EmptySample):
            sample_pairs(odd_vacuum.spec, 0)


class TestAudit:
    def test_pure_time_pair_timelike(self, odd_vacuum):
        spec = odd_vacuum.spec
        pair = np.array(
            [[flat_index(spec, 0, 0, 0, 0), flat_index(spec, 1, 0, 0, 0)]]
        )
        report = causality_audit(odd_vacuum, pair, band_multiplier=0.5)
        assert not report.in_band[0]
        assert report.class_minkowski[0] == TIMELIKE
        assert report.class_spectral[0] == TIMELIKE

    def test_pure_space_pair_spacelike(self, odd_vacuum):
        spec = odd_vacuum.spec
        pair = np.array(
            [[flat_index(spec, 0, 0, 0, 0), flat_index(spec, 0, 1, 0, 0)]]
        )
        report = causality_audit(odd_vacuum, pair, band_multiplier=0.5)
        assert report.class_minkowski[0] == SPACELIKE
        assert report.class_spectral[0] == SPACELIKE
        scale = float(np.abs(odd_vacuum.measure.points[0].spectrum).max()) ** 4
        assert report.lagrangian[0] <= 1e-12 * scale

    def test_formula_on_valid_pairs(self, odd_vacuum):
        pairs = sample_pairs(odd_vacuum.spec, 300, seed=11)
        report = causality_audit(odd_vacuum, pairs)
        assert report.n_pairs == 300
        valid = report.valid_decomposition
        assert valid.any()
        assert report.eig_discrepancy[valid].max() <= 1e-6
        assert np.all(report.residual <= 1e-8 * np.maximum(report.kernel_norm, 1e-300))

    def test_in_band_reported_not_dropped(self, odd_vacuum):
        spec = odd_vacuum.spec
        diagonal = np.array([[5, 5]])
        report = causality_audit(odd_vacuum, diagonal, band_multiplier=3.0)
        assert report.n_pairs == 1
        assert report.n_in_band == 1
        with pytest.raises(EmptySample):
            _ = report.agreement_rate

    def test_symmetric_wrap(self, odd_vacuum):
        spec = odd_vacuum.spec
        # t separation of 3 on an extent-4 lattice wraps to -1
        pair = np.array(
            [[flat_index(spec, 0, 0, 0, 0), flat_index(spec, 3, 0, 0, 0)]]
        )
        report = causality_audit(odd_vacuum, pair, band_multiplier=0.5)
        assert report.xi[0, 0] == pytest.approx(-1.0)
        assert report.xi_sq[0] == pytest.approx(1.0)

    def test_class_tol_validation(self, odd_vacuum):
        with pytest.raises(ValueError):
            causality_audit(odd_vacuum, np.array([[0, 1]]), class_tol=2.0)

    def test_agreement_statistics(self, odd_vacuum):
        pairs = sample_pairs(odd_vacuum.spec, 400, seed=2, band_multiplier=3.0)
        report = causality_audit(odd_vacuum, pairs)
        assert 0.0 <= report.agreement_rate <= 1.0
        counts = report.class_counts()
        assert sum(counts.values()) == report.n_pairs - report.n_in_band
