"""Points of the operator manifold: self-adjoint operators of rank <= 2n.

An operator point is stored in low-rank factored form, x = U diag(nu) U^H
with U an f x r matrix of orthonormal columns and nu the r nonzero real
eigenvalues, at most n of each sign.  The vacuum systems have f in the
thousands but rank <= 4, so every pair operation reduces to Gram matrices of
size <= 2n and never touches a dense f x f eigensolver.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EigenSolverFailure,
    NotSelfAdjoint,
    RankToleranceAmbiguity,
    RankViolation,
    SignatureViolation,
)
from .spectral import EigenvalueList

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class OperatorPoint:
    """Self-adjoint finite-rank operator in factored form.

    Parameters
    ----------
    factors : (f, r) complex ndarray
        Orthonormal vectors spanning the image.
    spectrum : (r,) real ndarray
        Nonzero eigenvalues, at most ``n`` positive and ``n`` negative.
    n : int
        Spin dimension.
    """

    factors: np.ndarray
    spectrum: np.ndarray
    n: int
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        factors = np.ascontiguousarray(self.factors, dtype=complex)
        spectrum = np.ascontiguousarray(self.spectrum, dtype=float)
        if factors.ndim != 2 or spectrum.ndim != 1 or factors.shape[1] != spectrum.size:
            raise ValueError(
                f"inconsistent factored form: factors {factors.shape}, "
                f"spectrum {spectrum.shape}"
            )
        rank = spectrum.size
        n_pos = int((spectrum > 0).sum())
        n_neg = int((spectrum < 0).sum())
        if n_pos > self.n or n_neg > self.n:
            raise SignatureViolation(
                f"signature ({n_pos}, {n_neg}) exceeds the spin-dimension bound n = {self.n}"
            )
        if rank > 2 * self.n:
            raise RankViolation(f"rank {rank} exceeds 2n = {2 * self.n}")
        if self.validate and rank > 0:
            gram = factors.conj().T @ factors
            err = float(np.abs(gram - np.eye(rank)).max())
            if err > DEFAULT_TOL:
                raise ValueError(f"factor columns not orthonormal: deviation {err:.3e}")
            if float(np.abs(spectrum).min()) == 0.0:
                raise ValueError("spectrum entries must be nonzero; drop exact zeros")
        factors.setflags(write=False)
        spectrum.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "spectrum", spectrum)

    @property
    def hilbert_dim(self) -> int:
        return self.factors.shape[0]

    @property
    def rank(self) -> int:
        return self.spectrum.size

    @property
    def signature(self) -> tuple:
        return int((self.spectrum > 0).sum()), int((self.spectrum < 0).sum())

    def dense(self) -> np.ndarray:
        """Reconstruct the dense f x f matrix (test and oracle use only)."""
        return (self.factors * self.spectrum[None, :]) @ self.factors.conj().T

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        """Apply x to one vector or a stack of column vectors without densifying."""
        return (self.factors * self.spectrum[None, :]) @ (self.factors.conj().T @ vecs)

    def conjugated(self, unitary: np.ndarray) -> "OperatorPoint":
        """Return Q x Q^H for a unitary Q, reusing the factored form."""
        return OperatorPoint(unitary @ self.factors, self.spectrum, self.n)

    @classmethod
    def zero(cls, hilbert_dim: int, n: int) -> "OperatorPoint":
        return cls(
            np.zeros((hilbert_dim, 0), dtype=complex), np.zeros(0), n, validate=False
        )


def verify_membership(matrix: np.ndarray, n: int, tol: float = DEFAULT_TOL) -> OperatorPoint:
    """Check a dense candidate against the operator-manifold definition.

    Verifies self-adjointness, truncates eigenvalues below ``tol * ||matrix||``
    to rank deficit, and enforces at most ``n`` positive and ``n`` negative
    eigenvalues.  Returns the factored form.

    Raises
    ------
    NotSelfAdjoint, SignatureViolation, RankViolation, RankToleranceAmbiguity
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    scale = float(np.abs(matrix).max())
    if scale == 0.0:
        return OperatorPoint.zero(matrix.shape[0], n)
    asym = float(np.abs(matrix - matrix.conj().T).max())
    if asym > tol * scale:
        raise NotSelfAdjoint(f"max asymmetry {asym:.3e} exceeds {tol:.1e} * scale")
    herm = 0.5 * (matrix + matrix.conj().T)
    evals, evecs = np.linalg.eigh(herm)
    threshold = tol * float(np.abs(evals).max())
    straddling = (np.abs(evals) > threshold / 4.0) & (np.abs(evals) < threshold * 4.0)
    if straddling.any():
        raise RankToleranceAmbiguity(
            f"{int(straddling.sum())} eigenvalue(s) within 4x of the truncation "
            f"threshold {threshold:.3e}; adjust tol rather than guessing the rank"
        )
    keep = np.abs(evals) > threshold
    spectrum = evals[keep]
    n_pos = int((spectrum > 0).sum())
    n_neg = int((spectrum < 0).sum())
    if n_pos > n or n_neg > n:
        raise SignatureViolation(
            f"{n_pos} positive and {n_neg} negative eigenvalues above threshold; "
            f"at most {n} of each allowed"
        )
    if spectrum.size > 2 * n:
        raise RankViolation(f"rank {spectrum.size} exceeds 2n = {2 * n}")
    return OperatorPoint(np.ascontiguousarray(evecs[:, keep]), spectrum, n)


def _check_compatible(x: OperatorPoint, y: OperatorPoint):
    if x.hilbert_dim != y.hilbert_dim:
        raise ValueError(
            f"operator points live on different Hilbert spaces: "
            f"{x.hilbert_dim} vs {y.hilbert_dim}"
        )
    if x.n != y.n:
        raise ValueError(f"spin dimensions differ: {x.n} vs {y.n}")


def product_eigenvalues(x: OperatorPoint, y: OperatorPoint) -> EigenvalueList:
    """Eigenvalues of xy, zero-padded to 2n.

    Computed on the <= 2n dimensional invariant subspace image(x): the
    nonzero eigenvalues of xy equal those of the small matrix
    ``diag(nu_x) (U_x^H U_y) diag(nu_y) (U_y^H U_x)``.  Never builds the
    dense f x f product.
    """
    _check_compatible(x, y)
    if x.rank == 0 or y.rank == 0:
        return EigenvalueList.from_product_eigenvalues([], x.n)
    gram = x.factors.conj().T @ y.factors
    small = (x.spectrum[:, None] * gram * y.spectrum[None, :]) @ gram.conj().T
    try:
        values = np.linalg.eigvals(small)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(f"reduced {small.shape} eigenproblem failed: {exc}") from exc
    return EigenvalueList.from_product_eigenvalues(values, x.n)


def operator_trace(x: OperatorPoint) -> float:
    """Trace of x, the sum of its spectrum."""
    return float(x.spectrum.sum())
