"""Analytic structure of the lattice vacuum kernel and the causality audit.

The sea kernel is a mode sum of (k_j gamma^j + m) terms, so in spinor space
it carries exactly a vector and a scalar Clifford component.  Writing
P(x, y) = alpha xi_j gamma^j + beta, the closed chain becomes
a xi_j gamma^j + b with real a = 2 Re(alpha conj(beta)) and
b = |alpha|^2 xi^2 + |beta|^2, and its eigenvalues are b +- sqrt(a^2 xi^2),
each twice.  On the lattice the vector component is exactly parallel to xi
only along symmetry directions; the decomposition therefore carries a
validity flag (small residual and small misalignment) and the eigenvalue
formula is asserted only where the flag is set.

The audit compares the eigenvalue-based causal classification of sampled
point pairs with the sign of xi^2.  Separation components are reduced to the
symmetric representative range (-N eps/2, N eps/2] before computing xi^2;
pairs within the near-lightcone band ||xi^0| - |xi_vec|| <= K eps are
reported but excluded from the agreement rate.  The classification floor is
proportional to the system's squared top eigenvalue: product spectra far
below that scale contribute nothing to the action and count as zero products.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .diracsea import GAMMA, MINKOWSKI_ETA, LatticeSeaSystem, spinor_kernel
from .errors import EmptySample
from .spectral import LIGHTLIKE, SPACELIKE, TIMELIKE, EigenvalueList

RESIDUAL_TOL = 1e-8
ALIGN_TOL = 1e-8
CLASS_TOL = 1e-9
CLASS_FLOOR_REL = 1e-4
DEGENERATE_XI_TOL = 1e-12

_GAMMA_STACK = np.stack(GAMMA)


@dataclass(frozen=True)
class CliffordDecomposition:
    """Vector-plus-scalar split of a 4x4 spinor kernel against a direction xi.

    ``vector_component`` holds the raised components c^j with
    P = eta_{jk} c^k gamma^j + beta; ``alpha`` is the fit of c along xi,
    ``residual`` the absolute norm of P minus its vector+scalar part, and
    ``misalignment`` the relative size of c - alpha xi.  ``valid`` requires
    a roundoff-level residual and alignment; a lightlike xi with large
    misalignment is the degenerate case and is likewise flagged invalid.
    """

    xi: np.ndarray
    alpha: complex
    beta: complex
    vector_component: np.ndarray
    residual: float
    kernel_norm: float
    misalignment: float
    valid: bool


def decompose_kernel(kernel: np.ndarray, xi, align_tol: float = ALIGN_TOL) -> CliffordDecomposition:
    """Extract the Clifford data of one kernel matrix.

    beta is Tr(P)/4 and c^k = Tr(gamma^k P)/4; alpha is the Minkowski
    projection <c, xi>/<xi, xi> for non-lightlike xi and the Euclidean
    least-squares fit along xi otherwise.
    """
    kernel = np.asarray(kernel, dtype=complex)
    xi = np.asarray(xi, dtype=float)
    beta = complex(np.trace(kernel) / 4.0)
    upper = np.array([np.trace(g @ kernel) for g in GAMMA]) / 4.0
    lower = MINKOWSKI_ETA @ upper
    recon = beta * np.eye(4) + np.tensordot(lower, _GAMMA_STACK, axes=(0, 0))
    kernel_norm = float(np.linalg.norm(kernel))
    residual = float(np.linalg.norm(kernel - recon))
    xi_sq = float(xi[0] ** 2 - xi[1:] @ xi[1:])
    euclid = float(xi @ xi)
    degenerate = abs(xi_sq) <= DEGENERATE_XI_TOL * max(euclid, 1e-300)
    if degenerate:
        alpha = complex((upper @ xi) / euclid) if euclid > 0 else 0.0j
    else:
        alpha = complex((upper[0] * xi[0] - upper[1:] @ xi[1:]) / xi_sq)
    c_norm = float(np.linalg.norm(upper))
    misalignment = (
        float(np.linalg.norm(upper - alpha * xi)) / c_norm if c_norm > 0 else 0.0
    )
    valid = residual <= RESIDUAL_TOL * max(kernel_norm, 1e-300) and misalignment <= align_tol
    return CliffordDecomposition(
        xi=xi,
        alpha=alpha,
        beta=beta,
        vector_component=upper,
        residual=residual,
        kernel_norm=kernel_norm,
        misalignment=misalignment,
        valid=valid,
    )


@dataclass(frozen=True)
class ChainInvariants:
    """Real coefficients of the closed chain a xi_j gamma^j + b."""

    a: float
    b: float
    xi_sq: float

    @classmethod
    def from_decomposition(cls, dec: CliffordDecomposition) -> "ChainInvariants":
        xi_sq = float(dec.xi[0] ** 2 - dec.xi[1:] @ dec.xi[1:])
        product = dec.alpha * np.conj(dec.beta)
        return cls(
            a=float((product + np.conj(product)).real),
            b=float(abs(dec.alpha) ** 2 * xi_sq + abs(dec.beta) ** 2),
            xi_sq=xi_sq,
        )


def chain_eigenvalue_formula(dec: CliffordDecomposition) -> EigenvalueList:
    """Predicted closed-chain spectrum {b +- sqrt(a^2 xi^2)}, each twice.

    Principal branch of the square root; for spacelike xi this yields a
    complex-conjugate pair of equal modulus.
    """
    inv = ChainInvariants.from_decomposition(dec)
    root = np.sqrt(complex(inv.a**2 * inv.xi_sq))
    return EigenvalueList(
        np.array([inv.b + root, inv.b + root, inv.b - root, inv.b - root]), n=2
    )


# ---------------------------------------------------------------------------
# audit


def all_pairs(n_points: int) -> np.ndarray:
    """Every ordered pair of point indices, row-major."""
    grid = np.indices((n_points, n_points)).reshape(2, -1).T
    return np.ascontiguousarray(grid, dtype=np.int64)


def sample_pairs(
    spec,
    count: int,
    seed: int = 0,
    band_multiplier: float = None,
) -> np.ndarray:
    """Uniform ordered point pairs; optionally rejection-sampled outside the band.

    With ``band_multiplier`` set, only pairs with
    ||xi^0| - |xi_vec|| > band_multiplier * eps (symmetric representatives)
    are kept, drawing until ``count`` such pairs are found.
    """
    rng = np.random.default_rng(seed)
    n_points = spec.n_points
    if count <= 0:
        raise EmptySample("requested a non-positive number of pairs")
    chunks = []
    have = 0
    while have < count:
        draw = max(count - have, 1024)
        cand = rng.integers(0, n_points, size=(draw, 2))
        if band_multiplier is not None:
            xi = _wrapped_separations(spec, cand)
            radius = np.sqrt((xi[:, 1:] ** 2).sum(axis=1))
            keep = np.abs(np.abs(xi[:, 0]) - radius) > band_multiplier * spec.eps
            cand = cand[keep]
        chunks.append(cand)
        have += len(cand)
    return np.ascontiguousarray(np.concatenate(chunks)[:count], dtype=np.int64)


def _wrapped_separations(spec, pairs: np.ndarray) -> np.ndarray:
    """y - x reduced per component to the symmetric range (-N eps/2, N eps/2]."""
    coords = spec.point_coords(pairs.reshape(-1)).reshape(-1, 2, 4)
    xi = coords[:, 1] - coords[:, 0]
    for comp, extent in enumerate((spec.n_t,) + (spec.n_s,) * 3):
        period = extent * spec.eps
        xi[:, comp] = np.mod(xi[:, comp], period)
        xi[xi[:, comp] > period / 2.0, comp] -= period
    return xi


@dataclass(frozen=True)
class AuditReport:
    """Per-pair audit records plus the aggregate agreement statistics."""

    pairs: np.ndarray
    xi: np.ndarray
    xi_sq: np.ndarray
    class_spectral: np.ndarray
    class_minkowski: np.ndarray
    lagrangian: np.ndarray
    eig_discrepancy: np.ndarray
    in_band: np.ndarray
    valid_decomposition: np.ndarray
    residual: np.ndarray
    misalignment: np.ndarray
    kernel_norm: np.ndarray
    band_multiplier: float
    class_tol: float
    class_floor: float
    align_tol: float
    params: dict = field(default_factory=dict)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_in_band(self) -> int:
        return int(self.in_band.sum())

    @property
    def agreement_rate(self) -> float:
        outside = ~self.in_band
        if not outside.any():
            raise EmptySample("no pairs outside the lightcone band")
        agree = self.class_spectral[outside] == self.class_minkowski[outside]
        return float(agree.mean())

    def class_counts(self) -> dict:
        outside = ~self.in_band
        counts = {}
        for mink, spec_cls in zip(
            self.class_minkowski[outside], self.class_spectral[outside]
        ):
            key = (str(mink), str(spec_cls))
            counts[key] = counts.get(key, 0) + 1
        return counts


def _classify_batch(values: np.ndarray, tol: float, floor: float):
    """Vectorized Def.-3.1 classification; same semantics as spectral.classify_causality."""
    mods = np.abs(values)
    largest = mods.max(axis=1)
    smallest = mods.min(axis=1)
    imag_max = np.abs(values.imag).max(axis=1)
    out = np.full(values.shape[0], LIGHTLIKE, dtype=object)
    timelike = imag_max <= tol * largest
    out[timelike] = TIMELIKE
    spacelike = (largest <= floor) | (largest - smallest <= tol * largest)
    out[spacelike] = SPACELIKE
    return out


def causality_audit(
    system: LatticeSeaSystem,
    pairs: np.ndarray,
    band_multiplier: float = 3.0,
    class_tol: float = CLASS_TOL,
    class_floor_rel: float = CLASS_FLOOR_REL,
    align_tol: float = ALIGN_TOL,
    threads=None,
) -> AuditReport:
    """Compare spectral and Minkowski causal structure over sampled pairs.

    For every pair the closed-chain spectrum is computed through the reduced
    product of the factored operators (equal to the closed-chain eigenvalues;
    the equivalence is cross-tested in the geometry module), classified per
    the eigenvalue definition of causality, and compared with sign(xi^2).
    The spinor kernel of each pair is Clifford-decomposed and the
    b +- sqrt(a^2 xi^2) prediction is recorded as a relative discrepancy
    against the numerical spectrum.  In-band pairs are recorded and flagged,
    never dropped.
    """
    pairs = np.ascontiguousarray(np.atleast_2d(pairs), dtype=np.int64)
    if pairs.size == 0:
        raise EmptySample("no pairs supplied to the audit")
    if not 0.0 < class_tol < 1.0:
        raise ValueError(f"class_tol must lie in (0, 1), got {class_tol}")
    spec = system.spec
    xi = _wrapped_separations(spec, pairs)
    xi_sq = xi[:, 0] ** 2 - (xi[:, 1:] ** 2).sum(axis=1)
    radius = np.sqrt((xi[:, 1:] ** 2).sum(axis=1))
    in_band = np.abs(np.abs(xi[:, 0]) - radius) <= band_multiplier * spec.eps

    factors, spectra = system.measure.stacked()
    values = _kernels.pair_eigenvalues(factors, spectra, pairs, threads=threads)

    scale = float(np.abs(spectra).max()) ** 2
    floor = class_floor_rel * scale
    class_spectral = _classify_batch(values, class_tol, floor)
    class_minkowski = np.full(len(pairs), LIGHTLIKE, dtype=object)
    class_minkowski[xi_sq > 0] = TIMELIKE
    class_minkowski[xi_sq < 0] = SPACELIKE

    mods = np.abs(values)
    sw = mods.sum(axis=1)
    lagrangian = np.maximum((mods**2).sum(axis=1) - sw**2 / 4.0, 0.0)

    coords = spec.point_coords(pairs.reshape(-1)).reshape(-1, 2, 4)
    kernels = spinor_kernel(system.modes, coords[:, 0] - coords[:, 1])
    kernels = kernels.reshape(-1, 4, 4)
    discrepancy = np.empty(len(pairs))
    valid = np.empty(len(pairs), dtype=bool)
    residual = np.empty(len(pairs))
    misalignment = np.empty(len(pairs))
    kernel_norm = np.empty(len(pairs))
    for p in range(len(pairs)):
        dec = decompose_kernel(kernels[p], xi[p], align_tol=align_tol)
        predicted = chain_eigenvalue_formula(dec).values
        ref = max(float(np.abs(predicted).max()), float(mods[p].max()), 1e-300)
        gaps = np.abs(values[p][:, None] - predicted[None, :]).min(axis=1)
        discrepancy[p] = float(gaps.max()) / ref
        valid[p] = dec.valid
        residual[p] = dec.residual
        misalignment[p] = dec.misalignment
        kernel_norm[p] = dec.kernel_norm

    return AuditReport(
        pairs=pairs,
        xi=xi,
        xi_sq=xi_sq,
        class_spectral=class_spectral,
        class_minkowski=class_minkowski,
        lagrangian=lagrangian,
        eig_discrepancy=discrepancy,
        in_band=in_band,
        valid_decomposition=valid,
        residual=residual,
        misalignment=misalignment,
        kernel_norm=kernel_norm,
        band_multiplier=float(band_multiplier),
        class_tol=float(class_tol),
        class_floor=float(floor),
        align_tol=float(align_tol),
        params={"class_floor_rel": float(class_floor_rel)},
    )
