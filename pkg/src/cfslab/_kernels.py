"""Hot kernels for the O(N^2) pair sweeps.

Two interchangeable backends compute the same quantities:

* a numba ``@njit(parallel=True)`` implementation (default when numba is
  importable), and
* a chunked pure-numpy implementation.

Set the environment variable ``CFS_NO_NUMBA=1`` before import to force the
numpy path; ``benchmarks/bench_pair_sweep.py`` times both.

Determinism contract: each row i of the pair sweep is accumulated serially in
index order by a single worker, and row totals are combined in fixed index
order, so results are bit-identical across runs and across worker counts.

All kernels take uniformly padded inputs: ``factors`` of shape (N, f, r) with
zero columns for rank-deficient atoms and ``spectra`` of shape (N, r) with
matching zero entries.  Zero padding is exact for the product formula
x = U diag(nu) U^H, it only contributes zero eigenvalues.
"""

import os

import numpy as np

_env_disable = os.environ.get("CFS_NO_NUMBA", "").strip() not in ("", "0")

try:  # pragma: no cover - exercised via the env flag in tests
    if _env_disable:
        raise ImportError("numba disabled via CFS_NO_NUMBA")
    import numba
    from numba import njit, prange

    USING_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    USING_NUMBA = False

_CHUNK = 4096  # pairs per numpy batch; bounds peak memory at ~chunk*f*r complexes


def set_thread_count(threads):
    """Bound the numba worker count; no-op on the numpy backend."""
    if threads is None or not USING_NUMBA:
        return
    threads = max(1, int(threads))
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# numpy backend


def _reduced_products_numpy(factors, spectra, ix, iy):
    """Reduced r x r product matrices diag(D_i) G diag(D_j) G^H per pair."""
    gram = np.matmul(factors[ix].conj().transpose(0, 2, 1), factors[iy])
    scaled = spectra[ix][:, :, None] * gram * spectra[iy][:, None, :]
    return np.matmul(scaled, gram.conj().transpose(0, 2, 1))


def _pair_functionals_numpy(factors, spectra, weights, two_n):
    n_atoms = factors.shape[0]
    row_s = np.zeros(n_atoms)
    row_t = np.zeros(n_atoms)
    all_j = np.arange(n_atoms)
    for i in range(n_atoms):
        small = _reduced_products_numpy(factors, spectra, np.full(n_atoms, i), all_j)
        mods = np.abs(np.linalg.eigvals(small))
        sw = mods.sum(axis=1)
        lag = np.maximum((mods**2).sum(axis=1) - sw**2 / two_n, 0.0)
        row_s[i] = weights[i] * float(np.dot(weights, lag))
        row_t[i] = weights[i] * float(np.dot(weights, sw**2))
    return float(row_s.sum()), float(row_t.sum())


def _pair_eigenvalues_numpy(factors, spectra, pairs):
    n_pairs = pairs.shape[0]
    r = factors.shape[2]
    out = np.empty((n_pairs, r), dtype=complex)
    for start in range(0, n_pairs, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n_pairs))
        small = _reduced_products_numpy(factors, spectra, pairs[sl, 0], pairs[sl, 1])
        out[sl] = np.linalg.eigvals(small)
    return out


# ---------------------------------------------------------------------------
# numba backend

if USING_NUMBA:

    @njit(cache=True, inline="always")
    def _reduced_product(factors, spectra, i, j, gram, small):
        n_dim, r = factors.shape[1], factors.shape[2]
        for a in range(r):
            for b in range(r):
                acc = 0.0 + 0.0j
                for q in range(n_dim):
                    acc += np.conj(factors[i, q, a]) * factors[j, q, b]
                gram[a, b] = acc
        for a in range(r):
            for b in range(r):
                acc = 0.0 + 0.0j
                for c in range(r):
                    acc += gram[a, c] * spectra[j, c] * np.conj(gram[b, c])
                small[a, b] = spectra[i, a] * acc

    @njit(parallel=True, cache=True)
    def _pair_functionals_numba(factors, spectra, weights, two_n):
        n_atoms, _, r = factors.shape
        row_s = np.zeros(n_atoms)
        row_t = np.zeros(n_atoms)
        for i in prange(n_atoms):
            gram = np.empty((r, r), dtype=np.complex128)
            small = np.empty((r, r), dtype=np.complex128)
            acc_s = 0.0
            acc_t = 0.0
            for j in range(n_atoms):
                _reduced_product(factors, spectra, i, j, gram, small)
                values = np.linalg.eigvals(small)
                sw = 0.0
                sq = 0.0
                for t in range(r):
                    m = abs(values[t])
                    sw += m
                    sq += m * m
                lag = sq - sw * sw / two_n
                if lag < 0.0:
                    lag = 0.0
                acc_s += weights[j] * lag
                acc_t += weights[j] * sw * sw
            row_s[i] = weights[i] * acc_s
            row_t[i] = weights[i] * acc_t
        return row_s.sum(), row_t.sum()

    @njit(parallel=True, cache=True)
    def _pair_eigenvalues_numba(factors, spectra, pairs):
        n_pairs = pairs.shape[0]
        r = factors.shape[2]
        out = np.empty((n_pairs, r), dtype=np.complex128)
        for p in prange(n_pairs):
            gram = np.empty((r, r), dtype=np.complex128)
            small = np.empty((r, r), dtype=np.complex128)
            _reduced_product(factors, spectra, pairs[p, 0], pairs[p, 1], gram, small)
            out[p] = np.linalg.eigvals(small)
        return out


# ---------------------------------------------------------------------------
# public dispatch


def pair_functionals(factors, spectra, weights, two_n, threads=None):
    """Action and boundedness double sums over all atom pairs.

    Returns ``(S, T)`` with S = sum_ij w_i w_j L(x_i, x_j) and
    T = sum_ij w_i w_j |x_i x_j|^2, diagonal included.
    """
    factors = np.ascontiguousarray(factors, dtype=complex)
    spectra = np.ascontiguousarray(spectra, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    if USING_NUMBA:
        set_thread_count(threads)
        s, t = _pair_functionals_numba(factors, spectra, weights, float(two_n))
        return float(s), float(t)
    return _pair_functionals_numpy(factors, spectra, weights, float(two_n))


def pair_eigenvalues(factors, spectra, pairs, threads=None):
    """Product eigenvalues (reduced r x r problem) for an array of index pairs."""
    factors = np.ascontiguousarray(factors, dtype=complex)
    spectra = np.ascontiguousarray(spectra, dtype=float)
    pairs = np.ascontiguousarray(pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"pairs must have shape (P, 2), got {pairs.shape}")
    if USING_NUMBA:
        set_thread_count(threads)
        return _pair_eigenvalues_numba(factors, spectra, pairs)
    return _pair_eigenvalues_numpy(factors, spectra, pairs)
