"""Shared helpers: random operator generation and independent oracles."""

from itertools import permutations

import numpy as np
import pytest

from cfslab.opspace import OperatorPoint


def random_unitary(rng, dim):
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(ginibre)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def random_operator_point(rng, hilbert_dim, n, rank=None, signature=None):
    """Seeded operator point with orthonormal factors and a valid signature."""
    if rank is None:
        rank = 2 * n
    ginibre = rng.normal(size=(hilbert_dim, rank)) + 1j * rng.normal(
        size=(hilbert_dim, rank)
    )
    factors, _ = np.linalg.qr(ginibre)
    if signature is None:
        n_pos = rng.integers(0, min(n, rank) + 1)
        n_pos = max(n_pos, rank - n)  # keep negatives within the bound too
    else:
        n_pos = signature[0]
        assert signature[0] + signature[1] == rank
    magnitudes = rng.uniform(0.5, 2.0, size=rank)
    signs = np.array([1.0] * n_pos + [-1.0] * (rank - n_pos))
    return OperatorPoint(factors, magnitudes * signs, n=n)


def multiset_max_gap(a, b):
    """Exact best-assignment distance between two small eigenvalue multisets."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    assert a.size == b.size
    if a.size <= 6:
        best = np.inf
        for perm in permutations(range(b.size)):
            gap = max(abs(a[i] - b[p]) for i, p in enumerate(perm))
            best = min(best, gap)
            if best == 0.0:
                break
        return best
    remaining = list(b)
    worst = 0.0
    for value in a:
        gaps = [abs(value - other) for other in remaining]
        idx = int(np.argmin(gaps))
        worst = max(worst, gaps[idx])
        remaining.pop(idx)
    return worst


def assert_multiset_close(a, b, rtol, scale=None):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if scale is None:
        scale = max(float(np.abs(a).max()), float(np.abs(b).max()), 1e-300)
    gap = multiset_max_gap(a, b)
    assert gap <= rtol * scale, f"multiset gap {gap:.3e} exceeds {rtol:.1e} * {scale:.3e}"


def charpoly_product_eigenvalues(x_dense, y_dense, two_n):
    """Independent oracle: roots of the degree-2n characteristic polynomial of xy.

    Coefficients come from Newton's identities on the traces of dense matrix
    powers, never from an eigensolver.
    """
    product = x_dense @ y_dense
    power = np.eye(product.shape[0], dtype=complex)
    traces = []
    for _ in range(two_n):
        power = power @ product
        traces.append(np.trace(power))
    elementary = [1.0 + 0.0j]
    for k in range(1, two_n + 1):
        acc = 0.0 + 0.0j
        for i in range(1, k + 1):
            acc += ((-1) ** (i - 1)) * elementary[k - i] * traces[i - 1]
        elementary.append(acc / k)
    coeffs = [((-1) ** k) * elementary[k] for k in range(two_n + 1)]
    return np.roots(coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
