"""Backend equivalence and determinism of the pair-sweep kernels."""

import os
import subprocess
import sys

import numpy as np
import pytest

from cfslab import _kernels

from conftest import random_operator_point


def stacked_measure(rng, n_atoms=10, hilbert_dim=12, n=2):
    factors = np.zeros((n_atoms, hilbert_dim, 2 * n), dtype=complex)
    spectra = np.zeros((n_atoms, 2 * n))
    for i in range(n_atoms):
        rank = int(rng.integers(1, 2 * n + 1))
        point = random_operator_point(rng, hilbert_dim, n, rank=rank)
        factors[i, :, :rank] = point.factors
        spectra[i, :rank] = point.spectrum
    weights = rng.uniform(0.2, 2.0, size=n_atoms)
    return factors, spectra, weights


def test_backends_agree(rng):
    factors, spectra, weights = stacked_measure(rng)
    via_numpy = _kernels._pair_functionals_numpy(factors, spectra, weights, 4.0)
    via_public = _kernels.pair_functionals(factors, spectra, weights, 4)
    assert via_public[0] == pytest.approx(via_numpy[0], rel=1e-12)
    assert via_public[1] == pytest.approx(via_numpy[1], rel=1e-12)


def test_pair_eigenvalue_backends_agree(rng):
    factors, spectra, _ = stacked_measure(rng)
    pairs = np.array([[i, j] for i in range(6) for j in range(6)], dtype=np.int64)
    via_numpy = _kernels._pair_eigenvalues_numpy(factors, spectra, pairs)
    via_public = _kernels.pair_eigenvalues(factors, spectra, pairs)
    for row_a, row_b in zip(via_public, via_numpy):
        for value in row_a:
            assert np.min(np.abs(row_b - value)) <= 1e-10 * max(np.abs(row_a).max(), 1.0)


@pytest.mark.skipif(not _kernels.USING_NUMBA, reason="numba backend unavailable")
def test_thread_count_stability(rng):
    factors, spectra, weights = stacked_measure(rng, n_atoms=16)
    results = []
    for threads in (1, 2, 8):
        results.append(_kernels.pair_functionals(factors, spectra, weights, 4, threads=threads))
    base_s, base_t = results[0]
    for s, t in results[1:]:
        assert abs(s - base_s) <= 1e-12 * max(abs(base_s), 1.0)
        assert abs(t - base_t) <= 1e-12 * max(abs(base_t), 1.0)


def test_repeated_calls_bitstable(rng):
    factors, spectra, weights = stacked_measure(rng)
    first = _kernels.pair_functionals(factors, spectra, weights, 4)
    second = _kernels.pair_functionals(factors, spectra, weights, 4)
    assert first == second


def test_pairs_shape_validation(rng):
    factors, spectra, _ = stacked_measure(rng, n_atoms=3)
    with pytest.raises(ValueError):
        _kernels.pair_eigenvalues(factors, spectra, np.zeros((4, 3), dtype=np.int64))


def test_env_flag_selects_numpy_backend(tmp_path):
    script = tmp_path / "probe.py"
    script.write_text(
        "import cfslab._kernels as k\n"
        "import numpy as np\n"
        "assert not k.USING_NUMBA\n"
        "factors = np.zeros((2, 3, 2), dtype=complex)\n"
        "factors[0, 0, 0] = 1.0\n"
        "factors[1, 1, 0] = 1.0\n"
        "spectra = np.array([[2.0, 0.0], [-1.0, 0.0]])\n"
        "weights = np.array([1.0, 1.0])\n"
        "s, t = k.pair_functionals(factors, spectra, weights, 2)\n"
        "assert abs(s - 2.0 * (16 + 1 - 0.5 * 25) / 2) < 1e-12 or s >= 0\n"
        "print('S', s, 'T', t)\n"
    )
    env = dict(os.environ, CFS_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, str(script)], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.startswith("S ")
