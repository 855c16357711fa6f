"""Lagrangian kernel on the non-trivial eigenvalues of operator products.

Every quantity of the causal action principle that depends on a pair of
space-time operators does so only through the 2n (zero-padded) eigenvalues
of their product.  This module holds that eigenvalue container and the pure
functions evaluated on it: the spectral weight, the causal Lagrangian in its
two algebraically equal forms, the boundedness integrand, and the
spacelike/timelike/lightlike classification.
"""

from dataclasses import dataclass

import numpy as np

SPACELIKE = "spacelike"
TIMELIKE = "timelike"
LIGHTLIKE = "lightlike"


@dataclass(frozen=True)
class EigenvalueList:
    """The 2n non-trivial eigenvalues of a product of two operator points.

    Rank deficit is represented by zero entries, so ``values`` always has
    length exactly ``2 * n``.
    """

    values: np.ndarray
    n: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if self.n < 1:
            raise ValueError(f"spin dimension must be positive, got {self.n}")
        if values.ndim != 1 or values.size != 2 * self.n:
            raise ValueError(
                f"expected exactly {2 * self.n} eigenvalues, got shape {values.shape}"
            )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_product_eigenvalues(cls, values, n):
        """Zero-pad the eigenvalues of a rank-deficient product to length 2n."""
        values = np.atleast_1d(np.asarray(values, dtype=complex))
        if values.size > 2 * n:
            raise ValueError(f"got {values.size} eigenvalues for spin dimension {n}")
        padded = np.zeros(2 * n, dtype=complex)
        padded[: values.size] = values
        return cls(padded, n)

    def is_conjugation_closed(self, tol=1e-8):
        """Whether the multiset of values equals its complex conjugate.

        Holds for any product of two self-adjoint operators; assertable on
        generated data.  Matching is greedy nearest-neighbor, which is exact
        here because conjugate partners either coincide or sit in separated
        half-planes.
        """
        scale = max(float(np.abs(self.values).max()), 1.0)
        remaining = list(np.conj(self.values))
        for value in self.values:
            gaps = [abs(value - other) for other in remaining]
            idx = int(np.argmin(gaps))
            if gaps[idx] > tol * scale:
                return False
            remaining.pop(idx)
        return True


def spectral_weight(ev: EigenvalueList) -> float:
    """Sum of the absolute values of the eigenvalues, |xy|."""
    return float(np.abs(ev.values).sum())


def lagrangian(ev: EigenvalueList) -> float:
    """Causal Lagrangian |(xy)^2| - |xy|^2 / (2n), clamped at 0 for roundoff."""
    mods = np.abs(ev.values)
    value = float((mods**2).sum() - mods.sum() ** 2 / (2 * ev.n))
    return max(value, 0.0)


def lagrangian_variance_form(ev: EigenvalueList) -> float:
    """Lagrangian as the pairwise variance (1/4n) sum_ij (|l_i| - |l_j|)^2."""
    mods = np.abs(ev.values)
    diffs = mods[:, None] - mods[None, :]
    return float((diffs**2).sum() / (4 * ev.n))


def boundedness_integrand(ev: EigenvalueList) -> float:
    """Pairwise integrand |xy|^2 of the boundedness functional."""
    return spectral_weight(ev) ** 2


def classify_causality(ev: EigenvalueList, tol: float, zero_floor: float = 1e-12) -> str:
    """Classify a point pair per the eigenvalue causal structure.

    Spacelike if all moduli agree to ``tol`` relative to the largest (or the
    product is zero at scale ``zero_floor``), else timelike if all values are
    real to ``tol`` relative to the largest modulus, else lightlike.  The
    spacelike test runs first so equal-modulus complex-conjugate pairs are
    spacelike.  ``zero_floor`` is an absolute eigenvalue scale below which a
    product counts as zero; callers working at a non-unit operator scale
    should pass a floor proportional to it.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    mods = np.abs(ev.values)
    largest = float(mods.max())
    if largest <= zero_floor:
        return SPACELIKE
    if largest - float(mods.min()) <= tol * largest:
        return SPACELIKE
    if float(np.abs(ev.values.imag).max()) <= tol * largest:
        return TIMELIKE
    return LIGHTLIKE
