"""Discrete universal measures, the causal action, and constraint functionals.

A measure with finite support is a weighted list of operator points; its
support plays the role of space-time.  The action and boundedness functionals
are double sums over atom pairs (diagonal included) and run through the
backend in :mod:`cfslab._kernels`; results are deterministic across worker
counts by the fixed-reduction contract stated there.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .opspace import OperatorPoint, operator_trace, product_eigenvalues
from .spectral import lagrangian

DUPLICATE_TOL = 1e-10


@dataclass
class DiscreteMeasure:
    """Positive measure with finite support: atoms (x_i, w_i), all w_i > 0."""

    points: list
    weights: np.ndarray
    _stack: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size != len(self.points):
            raise ValueError(
                f"{len(self.points)} points but weight shape {weights.shape}"
            )
        if weights.size == 0:
            raise ValueError("a measure needs at least one atom")
        if not np.all(weights > 0):
            raise ValueError("all weights must be strictly positive")
        first = self.points[0]
        for p in self.points:
            if not isinstance(p, OperatorPoint):
                raise TypeError(f"atoms must be OperatorPoint, got {type(p)}")
            if p.hilbert_dim != first.hilbert_dim or p.n != first.n:
                raise ValueError("all atoms must share hilbert_dim and n")
        weights.setflags(write=False)
        self.weights = weights

    @property
    def n(self) -> int:
        return self.points[0].n

    @property
    def hilbert_dim(self) -> int:
        return self.points[0].hilbert_dim

    def __len__(self) -> int:
        return len(self.points)

    def stacked(self):
        """Padded (N, f, 2n) factor and (N, 2n) spectrum arrays for the sweeps.

        Rank-deficient atoms are padded with zero columns / zero eigenvalues,
        which is exact for every product formula.  Cached after first use.
        """
        if self._stack is None:
            n_atoms, f, r = len(self), self.hilbert_dim, 2 * self.n
            factors = np.zeros((n_atoms, f, r), dtype=complex)
            spectra = np.zeros((n_atoms, r))
            for i, p in enumerate(self.points):
                factors[i, :, : p.rank] = p.factors
                spectra[i, : p.rank] = p.spectrum
            self._stack = (factors, spectra)
        return self._stack

    def check_duplicate_free(self, tol: float = DUPLICATE_TOL):
        """Assert the support has no duplicate points up to operator distance.

        Costs O(N^2 f (2n)^2); meant for small measures and test suites.
        Lattice builders guarantee distinctness by construction instead.
        """
        sq_norms = np.array([float((p.spectrum**2).sum()) for p in self.points])
        for i, x in enumerate(self.points):
            for j in range(i + 1, len(self.points)):
                y = self.points[j]
                gram = x.factors.conj().T @ y.factors
                cross = float(
                    np.real(
                        np.trace(
                            (x.spectrum[:, None] * gram * y.spectrum[None, :])
                            @ gram.conj().T
                        )
                    )
                )
                dist_sq = sq_norms[i] + sq_norms[j] - 2.0 * cross
                scale = max(sq_norms[i], sq_norms[j], 1.0)
                if dist_sq <= (tol**2) * scale:
                    raise ValueError(
                        f"atoms {i} and {j} coincide up to operator distance "
                        f"{math.sqrt(max(dist_sq, 0.0)):.3e}"
                    )

    def reweighted(self, scale: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.weights * scale, _stack=self._stack)

    def conjugated(self, unitary: np.ndarray) -> "DiscreteMeasure":
        """Conjugate every atom by one fixed unitary (gauge transformation)."""
        return DiscreteMeasure(
            [p.conjugated(unitary) for p in self.points], self.weights
        )


def total_volume(rho: DiscreteMeasure) -> float:
    """Total volume rho(F) = sum of the weights."""
    return float(rho.weights.sum())


def trace_integral(rho: DiscreteMeasure) -> float:
    """Trace functional sum_i w_i tr(x_i)."""
    return float(
        sum(w * operator_trace(p) for w, p in zip(rho.weights, rho.points))
    )


def causal_action(rho: DiscreteMeasure, threads=None) -> float:
    """Causal action S = sum_ij w_i w_j L(x_i, x_j), diagonal included."""
    return action_functionals(rho, threads=threads)[0]


def boundedness_functional(rho: DiscreteMeasure, threads=None) -> float:
    """Boundedness functional T = sum_ij w_i w_j |x_i x_j|^2."""
    return action_functionals(rho, threads=threads)[1]


def action_functionals(rho: DiscreteMeasure, threads=None):
    """Both pair functionals (S, T) from a single sweep."""
    factors, spectra = rho.stacked()
    return _kernels.pair_functionals(
        factors, spectra, rho.weights, 2 * rho.n, threads=threads
    )


def causal_action_reference(rho: DiscreteMeasure) -> float:
    """Plain double loop through the opspace/spectral API (cross-check path)."""
    total = 0.0
    for i, x in enumerate(rho.points):
        for j, y in enumerate(rho.points):
            total += rho.weights[i] * rho.weights[j] * lagrangian(product_eigenvalues(x, y))
    return total
