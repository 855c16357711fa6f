"""Inherent structures of an abstract causal fermion system.

Spin spaces, the indefinite spin scalar product, physical wave functions, the
kernel of the fermionic projector, and the closed chain.  Everything here is
derived from operator points alone; the central cross-check of the module is
that closed-chain eigenvalues reproduce the product eigenvalues computed in
:mod:`cfslab.opspace` through an independent assembly path.

Spin-space bases are Hilbert-orthonormal (not spin-pseudo-orthonormal) and
the indefinite Gram matrix is carried explicitly; reported quantities are
basis-invariant and tested as such.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    EigenSolverFailure,
    NonOrthonormalInput,
    NotInSpinSpace,
    RankToleranceAmbiguity,
)
from .opspace import OperatorPoint
from .spectral import EigenvalueList

PROJECTOR_TOL = 1e-10


@dataclass(frozen=True)
class SpinSpace:
    """Image of an operator point with its spin scalar product.

    ``basis`` has Hilbert-orthonormal columns spanning x(H); ``gram`` is the
    matrix of the spin scalar product -<e_a | x e_b> in that basis.
    """

    base_point: OperatorPoint
    basis: np.ndarray
    gram: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def signature(self) -> tuple:
        evals = np.linalg.eigvalsh(self.gram)
        scale = max(float(np.abs(evals).max()), 1e-300)
        return (
            int((evals > PROJECTOR_TOL * scale).sum()),
            int((evals < -PROJECTOR_TOL * scale).sum()),
        )

    def projector(self) -> np.ndarray:
        """Dense orthogonal projector onto the spin space (small f only)."""
        return self.basis @ self.basis.conj().T

    def project(self, vecs: np.ndarray) -> np.ndarray:
        """Apply the orthogonal projector without densifying it."""
        return self.basis @ (self.basis.conj().T @ vecs)

    def coords(self, vecs: np.ndarray) -> np.ndarray:
        """Basis coordinates of (already projected) Hilbert vectors."""
        return self.basis.conj().T @ vecs

    def product_coords(self, a: np.ndarray, b: np.ndarray) -> complex:
        """Spin scalar product of two vectors given in basis coordinates."""
        return complex(a.conj() @ self.gram @ b)

    def rotated(self, unitary: np.ndarray) -> "SpinSpace":
        """Same space in a rotated orthonormal basis (for invariance tests)."""
        return SpinSpace(
            self.base_point,
            self.basis @ unitary,
            unitary.conj().T @ self.gram @ unitary,
        )


def spin_projector(x: OperatorPoint) -> SpinSpace:
    """Spin space of x with the projector on its image.

    Raises RankToleranceAmbiguity when a stored eigenvalue sits within a
    factor of four of the rank-truncation threshold, since the image is then
    not well defined at working precision.
    """
    if x.rank > 0:
        mods = np.abs(x.spectrum)
        threshold = PROJECTOR_TOL * float(mods.max())
        if bool(((mods > threshold / 4.0) & (mods < threshold * 4.0)).any()):
            raise RankToleranceAmbiguity(
                "operator spectrum straddles the rank threshold; image dimension ambiguous"
            )
    gram = -np.diag(x.spectrum).astype(complex)
    return SpinSpace(base_point=x, basis=x.factors, gram=gram)


def spin_product(x: OperatorPoint, u: np.ndarray, v: np.ndarray, tol: float = 1e-8) -> complex:
    """Spin scalar product -<u | x v> of two Hilbert vectors in the spin space of x."""
    space = spin_projector(x)
    for name, vec in (("u", u), ("v", v)):
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            continue
        outside = float(np.linalg.norm(vec - space.project(vec)))
        if outside > tol * norm:
            raise NotInSpinSpace(
                f"{name} has relative component {outside / norm:.3e} outside the spin space"
            )
    return complex(-(np.conj(u) @ x.apply(v)))


def physical_wave_function(u: np.ndarray, x: OperatorPoint, space: SpinSpace = None) -> np.ndarray:
    """Projection pi_x u expressed in the spin-space basis."""
    if space is None:
        space = spin_projector(x)
    return space.coords(np.asarray(u, dtype=complex))


@dataclass(frozen=True)
class KernelMatrix:
    """Matrix of P(x, y) = pi_x y restricted to S_y, between chosen bases."""

    target: SpinSpace  # at x
    source: SpinSpace  # at y
    entries: np.ndarray

    def spin_adjoint(self) -> np.ndarray:
        """Matrix of the adjoint S_x -> S_y with respect to both spin products."""
        g_src = self.source.gram
        g_tgt = self.target.gram
        return np.linalg.solve(g_src, self.entries.conj().T @ g_tgt)


def fermionic_kernel(
    x: OperatorPoint,
    y: OperatorPoint,
    x_space: SpinSpace = None,
    y_space: SpinSpace = None,
) -> KernelMatrix:
    """Kernel of the fermionic projector, built definitionally.

    Applies y to the source basis and projects onto the target space:
    entries[a, b] = <e^x_a | pi_x y e^y_b>.
    """
    if x_space is None:
        x_space = spin_projector(x)
    if y_space is None:
        y_space = spin_projector(y)
    image = y.apply(y_space.basis)
    entries = x_space.basis.conj().T @ image
    return KernelMatrix(target=x_space, source=y_space, entries=entries)


def fermionic_kernel_mode_sum(
    x: OperatorPoint,
    y: OperatorPoint,
    hilbert_basis: np.ndarray,
    x_space: SpinSpace = None,
    y_space: SpinSpace = None,
) -> KernelMatrix:
    """Kernel assembled from physical wave functions of a Hilbert basis.

    Implements P(x, y) phi = -sum_l psi^{u_l}(x) <<psi^{u_l}(y) | phi>>_y for
    the columns u_l of ``hilbert_basis``; agrees with the definitional path
    for any orthonormal basis (two-construction cross-check).
    """
    if x_space is None:
        x_space = spin_projector(x)
    if y_space is None:
        y_space = spin_projector(y)
    entries = np.zeros((x_space.dim, y_space.dim), dtype=complex)
    for col in range(hilbert_basis.shape[1]):
        u = hilbert_basis[:, col]
        psi_x = x_space.coords(u)
        psi_y = y_space.coords(u)
        entries -= np.outer(psi_x, psi_y.conj() @ y_space.gram)
    return KernelMatrix(target=x_space, source=y_space, entries=entries)


@dataclass(frozen=True)
class ClosedChain:
    """Closed chain A_xy = P(x, y) P(y, x) on S_x and its padded spectrum."""

    matrix: np.ndarray
    eigenvalues: EigenvalueList


def _charpoly_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Roots of the characteristic polynomial via Newton's identities.

    Independent fallback route for the small non-normal eigenproblem.
    """
    r = matrix.shape[0]
    power = np.eye(r, dtype=complex)
    traces = []
    for _ in range(r):
        power = power @ matrix
        traces.append(np.trace(power))
    elementary = [1.0 + 0.0j]
    for k in range(1, r + 1):
        acc = 0.0 + 0.0j
        for i in range(1, k + 1):
            acc += ((-1) ** (i - 1)) * elementary[k - i] * traces[i - 1]
        elementary.append(acc / k)
    coeffs = [((-1) ** k) * elementary[k] for k in range(r + 1)]
    return np.roots(coeffs)


def closed_chain(
    x: OperatorPoint,
    y: OperatorPoint,
    x_space: SpinSpace = None,
    y_space: SpinSpace = None,
) -> ClosedChain:
    """Closed chain with eigenvalues padded to 2n.

    The primary solver is LAPACK's balanced dense routine; a characteristic
    polynomial root finder cross-checks it and discrepancies beyond 1e-6
    relative are flagged as a warning.
    """
    if x_space is None:
        x_space = spin_projector(x)
    if y_space is None:
        y_space = spin_projector(y)
    k_xy = fermionic_kernel(x, y, x_space, y_space)
    k_yx = fermionic_kernel(y, x, y_space, x_space)
    matrix = k_xy.entries @ k_yx.entries
    if matrix.shape[0] == 0:
        return ClosedChain(matrix, EigenvalueList.from_product_eigenvalues([], x.n))
    try:
        values = np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(f"closed-chain eigenproblem failed: {exc}") from exc
    check = _charpoly_eigenvalues(matrix)
    scale = max(float(np.abs(values).max()), 1e-300)
    mismatch = _multiset_distance(values, check) / scale
    if mismatch > 1e-6:
        warnings.warn(
            f"closed-chain eigenvalue routes disagree by {mismatch:.3e} relative",
            RuntimeWarning,
            stacklevel=2,
        )
    return ClosedChain(matrix, EigenvalueList.from_product_eigenvalues(values, x.n))


def _multiset_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Greedy matching distance between two small eigenvalue multisets."""
    remaining = list(b)
    worst = 0.0
    for value in a:
        gaps = [abs(value - other) for other in remaining]
        idx = int(np.argmin(gaps))
        worst = max(worst, gaps[idx])
        remaining.pop(idx)
    return worst


def hartree_fock_overlap(basis_a: np.ndarray, basis_b: np.ndarray, tol: float = 1e-8) -> complex:
    """Overlap det(Gram) of the antisymmetrized states of two orthonormal tuples.

    For basis_b = U basis_a the result is det U, the pure phase picked up by
    the many-particle state under a unitary change of the one-particle basis.
    """
    basis_a = np.asarray(basis_a, dtype=complex)
    basis_b = np.asarray(basis_b, dtype=complex)
    if basis_a.shape != basis_b.shape:
        raise ValueError(f"basis shapes differ: {basis_a.shape} vs {basis_b.shape}")
    for name, basis in (("a", basis_a), ("b", basis_b)):
        gram = basis.conj().T @ basis
        err = float(np.abs(gram - np.eye(basis.shape[1])).max())
        if err > tol:
            raise NonOrthonormalInput(f"basis {name} deviates from orthonormality by {err:.3e}")
    return complex(np.linalg.det(basis_a.conj().T @ basis_b))
