import numpy as np
import pytest

from cfslab.errors import NotSelfAdjoint, RankToleranceAmbiguity, SignatureViolation
from cfslab.opspace import (
    OperatorPoint,
    operator_trace,
    product_eigenvalues,
    verify_membership,
)

from conftest import (
    assert_multiset_close,
    charpoly_product_eigenvalues,
    random_operator_point,
    random_unitary,
)


class TestVerifyMembership:
    def test_diagonal(self):
        point = verify_membership(np.diag([2.0, -1.0]), n=1)
        assert point.rank == 2
        assert sorted(point.spectrum) == [-1.0, 2.0]
        assert point.signature == (1, 1)

    def test_signature_violation(self):
        with pytest.raises(SignatureViolation):
            verify_membership(np.diag([1.0, 1.0, -1.0]), n=1)

    def test_not_self_adjoint(self):
        with pytest.raises(NotSelfAdjoint):
            verify_membership(np.array([[0.0, 1.0], [0.0, 0.0]]), n=1)

    def test_rank_truncation(self):
        point = verify_membership(np.diag([1.0, 1e-14, 0.0]), n=1)
        assert point.rank == 1

    def test_straddling_eigenvalue_reported(self):
        with pytest.raises(RankToleranceAmbiguity):
            verify_membership(np.diag([1.0, 2e-10]), n=1)

    def test_zero_matrix(self):
        point = verify_membership(np.zeros((3, 3)), n=1)
        assert point.rank == 0

    def test_round_trip(self, rng):
        built = random_operator_point(rng, 8, n=2, rank=4, signature=(2, 2))
        recovered = verify_membership(built.dense(), n=2)
        assert recovered.rank == 4
        assert np.allclose(
            np.sort(recovered.spectrum), np.sort(built.spectrum), atol=1e-10
        )
        assert np.abs(recovered.dense() - built.dense()).max() <= 1e-10


class TestOperatorPoint:
    def test_signature_enforced_in_constructor(self):
        with pytest.raises(SignatureViolation):
            OperatorPoint(np.eye(3, dtype=complex), np.array([1.0, 1.0, -1.0]), n=1)

    def test_orthonormality_enforced(self):
        factors = np.array([[1.0, 1.0], [0.0, 0.0]], dtype=complex)
        with pytest.raises(ValueError):
            OperatorPoint(factors, np.array([1.0, -1.0]), n=1)

    def test_self_adjoint_reconstruction(self, rng):
        point = random_operator_point(rng, 10, n=2)
        dense = point.dense()
        assert np.abs(dense - dense.conj().T).max() <= 1e-10

    def test_apply_matches_dense(self, rng):
        point = random_operator_point(rng, 6, n=1, rank=2)
        vec = rng.normal(size=6) + 1j * rng.normal(size=6)
        assert np.allclose(point.apply(vec), point.dense() @ vec)


class TestProductEigenvalues:
    def test_projector_self_product(self):
        e = np.zeros((2, 1), dtype=complex)
        e[0, 0] = 1.0
        x = OperatorPoint(e, np.array([1.0]), n=1)
        values = product_eigenvalues(x, x).values
        assert_multiset_close(values, [1.0, 0.0], 1e-12)

    def test_rotation_generator(self):
        x = verify_membership(np.array([[0.0, 1.0], [1.0, 0.0]]), n=1)
        y = verify_membership(np.diag([1.0, -1.0]), n=1)
        values = product_eigenvalues(x, y).values
        assert_multiset_close(values, [1j, -1j], 1e-12)

    def test_against_charpoly_oracle(self, rng):
        # full-rank pairs: the quartic has simple roots and the polynomial
        # oracle is well conditioned
        for _ in range(40):
            x = random_operator_point(rng, 16, n=2, rank=4)
            y = random_operator_point(rng, 16, n=2, rank=4)
            got = product_eigenvalues(x, y).values
            expected = charpoly_product_eigenvalues(x.dense(), y.dense(), 4)
            assert_multiset_close(got, expected, 1e-8)

    def test_rank_deficient_against_dense_eigensolver(self, rng):
        # repeated zero roots are ill conditioned for the polynomial oracle,
        # so deficient ranks are checked against the dense-product spectrum
        for _ in range(20):
            x = random_operator_point(rng, 16, n=2, rank=int(rng.integers(1, 5)))
            y = random_operator_point(rng, 16, n=2, rank=int(rng.integers(1, 5)))
            got = product_eigenvalues(x, y).values
            dense = np.linalg.eigvals(x.dense() @ y.dense())
            expected = dense[np.argsort(-np.abs(dense))][:4]
            assert_multiset_close(got, expected, 1e-8)

    def test_order_symmetry(self, rng):
        for _ in range(20):
            x = random_operator_point(rng, 12, n=2)
            y = random_operator_point(rng, 12, n=2)
            assert_multiset_close(
                product_eigenvalues(x, y).values,
                product_eigenvalues(y, x).values,
                1e-8,
            )

    def test_unitary_invariance(self, rng):
        x = random_operator_point(rng, 9, n=2)
        y = random_operator_point(rng, 9, n=2)
        q = random_unitary(rng, 9)
        assert_multiset_close(
            product_eigenvalues(x, y).values,
            product_eigenvalues(x.conjugated(q), y.conjugated(q)).values,
            1e-8,
        )

    def test_self_product_squares(self, rng):
        x = random_operator_point(rng, 7, n=2, rank=3)
        values = product_eigenvalues(x, x).values
        expected = np.concatenate([np.sort(x.spectrum**2), [0.0]])
        assert_multiset_close(values, expected, 1e-10)

    def test_zero_operator(self):
        zero = OperatorPoint.zero(5, n=2)
        other = verify_membership(np.diag([1.0, -1.0, 0.0, 0.0, 0.0]), n=2)
        assert np.all(product_eigenvalues(zero, other).values == 0)

    def test_conjugation_closure_of_products(self, rng):
        for _ in range(20):
            x = random_operator_point(rng, 8, n=2)
            y = random_operator_point(rng, 8, n=2)
            assert product_eigenvalues(x, y).is_conjugation_closed()

    def test_dimension_mismatch(self, rng):
        x = random_operator_point(rng, 4, n=1)
        y = random_operator_point(rng, 5, n=1)
        with pytest.raises(ValueError):
            product_eigenvalues(x, y)


class TestTrace:
    def test_diagonal(self):
        assert operator_trace(verify_membership(np.diag([2.0, -1.0]), n=1)) == 1.0

    def test_zero(self):
        assert operator_trace(OperatorPoint.zero(4, n=1)) == 0.0

    def test_dense_oracle(self, rng):
        point = random_operator_point(rng, 11, n=2)
        assert operator_trace(point) == pytest.approx(
            float(np.trace(point.dense()).real), rel=1e-12
        )
