"""Causal fermion systems from Dirac wave functions on a periodic lattice.

Conventions
-----------
Metric signature (+,-,-,-), Dirac representation of the gamma matrices.
A plane-wave mode with four-momentum k is psi(x) = u exp(-i k.x) with
k.x = k^0 x^0 - kvec.xvec, and the momentum-space Dirac equation
(k_j gamma^j - m) u = 0.  Sea modes sit on the lower mass shell,
k^0 = -sqrt(|kvec|^2 + m^2), two spin states per spatial momentum of the
first Brillouin zone grid; particle states use the upper shell.

The lattice has n_t x n_s^3 points of spacing eps.  Spatial momenta are
commensurate with the extent, so all spatial structure is exactly periodic;
the mass-shell frequencies are incommensurate with the time extent, so the
time direction is a sampling window of the continuum solutions (the spec'd
restriction of Minkowski spinors to the lattice, not a discretized Dirac
operator).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MassShellFailure, SignatureViolation, SliceMismatch
from .measure import DiscreteMeasure
from .opspace import OperatorPoint

RANK_TOL = 1e-10


def dirac_matrices():
    """The four gamma matrices gamma^0..gamma^3 in the Dirac representation.

    They satisfy {gamma^j, gamma^k} = 2 eta^{jk} with eta = diag(1,-1,-1,-1)
    and gamma^0 gamma^j^dag gamma^0 = gamma^j.
    """
    zero = np.zeros((2, 2), dtype=complex)
    eye = np.eye(2, dtype=complex)
    pauli = _pauli()
    g0 = np.block([[eye, zero], [zero, -eye]])
    gs = [np.block([[zero, s], [-s, zero]]) for s in pauli]
    return (g0, *gs)


def _pauli():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz


GAMMA = dirac_matrices()
MINKOWSKI_ETA = np.diag([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic lattice: spacing eps, temporal extent n_t, spatial extent n_s,
    Dirac mass m (natural units)."""

    eps: float
    n_t: int
    n_s: int
    mass: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"lattice spacing must be positive, got {self.eps}")
        if self.n_t < 2 or self.n_s < 2:
            raise ValueError(
                f"extents must be at least 2, got n_t={self.n_t}, n_s={self.n_s}"
            )
        if self.mass < 0:
            raise ValueError(f"mass must be nonnegative, got {self.mass}")

    @property
    def n_points(self) -> int:
        return self.n_t * self.n_s**3

    @property
    def shape(self) -> tuple:
        return (self.n_t, self.n_s, self.n_s, self.n_s)

    def brillouin_integers(self) -> np.ndarray:
        """Integer momentum labels a with -pi < eps*k <= pi, k = 2 pi a / (eps N)."""
        a = np.arange(self.n_s)
        a[a > self.n_s / 2] -= self.n_s
        return np.sort(a)

    def point_coords(self, indices=None) -> np.ndarray:
        """Coordinates eps*(t, x, y, z) of lattice points by flat row-major index."""
        if indices is None:
            indices = np.arange(self.n_points)
        grid = np.stack(np.unravel_index(np.asarray(indices), self.shape), axis=-1)
        return grid.astype(float) * self.eps


@dataclass(frozen=True)
class ModeTable:
    """Occupied plane-wave modes of a lattice system.

    ``momenta`` holds the on-shell four-momenta (k^0 first), ``amplitudes``
    the spinor amplitudes normalized to unit discrete scalar product, and
    ``labels`` the identifying tuples (a_x, a_y, a_z, spin, energy_sign).
    """

    spec: LatticeSpec
    momenta: np.ndarray
    amplitudes: np.ndarray
    labels: tuple

    def __post_init__(self):
        for name in ("momenta", "amplitudes"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def count(self) -> int:
        return self.momenta.shape[0]

    def values_at(self, coords) -> np.ndarray:
        """Spinor values of every mode at one point: the 4 x f matrix Psi(x)."""
        coords = np.asarray(coords, dtype=float)
        k_dot = self.momenta[:, 0] * coords[0] - self.momenta[:, 1:] @ coords[1:]
        phases = np.exp(-1j * k_dot)
        return (self.amplitudes * phases[:, None]).T


def _spinor_amplitude(kvec, mass, spin, energy_sign):
    """Unnormalized on-shell spinor for spatial momentum kvec and spin in {1, 2}.

    For the degenerate massless zero mode (omega + m = 0) the two-spinor basis
    is fixed by the +z helicity convention.
    """
    sx, sy, sz = _pauli()
    ksigma = kvec[0] * sx + kvec[1] * sy + kvec[2] * sz
    omega = math.sqrt(float(kvec @ kvec) + mass**2)
    chi = np.zeros(2, dtype=complex)
    chi[spin - 1] = 1.0
    denom = omega + mass
    if denom < 1e-14:
        coupled = sz @ chi
    else:
        coupled = (ksigma @ chi) / denom
    if energy_sign < 0:
        u = np.concatenate([-coupled, chi])
        k0 = -omega
    else:
        u = np.concatenate([chi, coupled])
        k0 = omega
    return np.array([k0, *kvec]), u


def _normalized_mode(spec: LatticeSpec, label):
    ax, ay, az, spin, energy_sign = label
    kvec = 2.0 * np.pi * np.array([ax, ay, az], dtype=float) / (spec.eps * spec.n_s)
    momentum, u = _spinor_amplitude(kvec, spec.mass, spin, energy_sign)
    norm_sq = 2.0 * np.pi * spec.eps**3 * spec.n_s**3 * float(np.vdot(u, u).real)
    u = u / math.sqrt(norm_sq)
    slash = momentum[0] * GAMMA[0] - sum(momentum[1 + i] * GAMMA[1 + i] for i in range(3))
    residual = float(np.linalg.norm((slash - spec.mass * np.eye(4)) @ u))
    scale = (abs(momentum[0]) + float(np.linalg.norm(kvec)) + spec.mass + 1.0) * float(
        np.linalg.norm(u)
    )
    if residual > 1e-10 * scale:
        raise MassShellFailure(
            f"mode {label}: Dirac equation residual {residual:.3e} at scale {scale:.3e}"
        )
    return momentum, u


def build_sea_modes(spec: LatticeSpec) -> ModeTable:
    """All 2 n_s^3 negative-energy modes, orthonormal in the discrete product."""
    labels = []
    for ax in spec.brillouin_integers():
        for ay in spec.brillouin_integers():
            for az in spec.brillouin_integers():
                for spin in (1, 2):
                    labels.append((int(ax), int(ay), int(az), spin, -1))
    momenta = np.empty((len(labels), 4))
    amplitudes = np.empty((len(labels), 4), dtype=complex)
    for i, label in enumerate(labels):
        momenta[i], amplitudes[i] = _normalized_mode(spec, label)
    return ModeTable(spec, momenta, amplitudes, tuple(labels))


def apply_occupation_edits(table: ModeTable, add=(), remove=()) -> ModeTable:
    """Occupy particle states and/or remove sea states (anti-particles).

    ``add`` and ``remove`` are (a_x, a_y, a_z, spin) tuples; additions create
    positive-energy modes, removals drop the matching sea mode.
    """
    spec = table.spec
    bz = set(int(a) for a in spec.brillouin_integers())
    labels = list(table.labels)
    for key in remove:
        label = _validate_key(key, bz) + (-1,)
        if label not in labels:
            raise ValueError(f"cannot remove unoccupied sea mode {key}")
        labels.remove(label)
    for key in add:
        label = _validate_key(key, bz) + (1,)
        if label in labels:
            raise ValueError(f"particle mode {key} already occupied")
        labels.append(label)
    momenta = np.empty((len(labels), 4))
    amplitudes = np.empty((len(labels), 4), dtype=complex)
    for i, label in enumerate(labels):
        momenta[i], amplitudes[i] = _normalized_mode(spec, label)
    return ModeTable(spec, momenta, amplitudes, tuple(labels))


def _validate_key(key, bz):
    key = tuple(int(v) for v in key)
    if len(key) != 4:
        raise ValueError(f"mode key must be (a_x, a_y, a_z, spin), got {key}")
    ax, ay, az, spin = key
    if spin not in (1, 2):
        raise ValueError(f"spin index must be 1 or 2, got {spin}")
    for a in (ax, ay, az):
        if a not in bz:
            raise ValueError(f"momentum label {a} outside the Brillouin grid {sorted(bz)}")
    return (ax, ay, az, spin)


def sample_mode(spec: LatticeSpec, momentum, amplitude) -> np.ndarray:
    """Sample one plane-wave mode on the full lattice, shape (n_t, n_s, n_s, n_s, 4)."""
    coords = spec.point_coords().reshape(spec.shape + (4,))
    k_dot = momentum[0] * coords[..., 0] - coords[..., 1:] @ np.asarray(momentum)[1:]
    return np.exp(-1j * k_dot)[..., None] * np.asarray(amplitude)[None, None, None, None, :]


def dirac_scalar_product(spec: LatticeSpec, psi, phi, t: int = 0) -> complex:
    """Discrete scalar product 2 pi eps^3 sum_xvec (psibar gamma^0 phi)(t, xvec).

    The integrand equals psi^dag phi pointwise; for exact solutions the result
    is independent of the time slice (tested, not assumed).
    """
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    expected = spec.shape + (4,)
    if psi.shape != expected or phi.shape != expected:
        raise SliceMismatch(
            f"wave functions must have shape {expected}, got {psi.shape} and {phi.shape}"
        )
    if not 0 <= t < spec.n_t:
        raise SliceMismatch(f"time slice {t} outside extent {spec.n_t}")
    return complex(2.0 * np.pi * spec.eps**3 * np.vdot(psi[t], phi[t]))


def local_correlation_operator(table: ModeTable, coords) -> OperatorPoint:
    """The operator F(x) with matrix elements -(psibar_i psi_j)(x), factored.

    F(x) = -Psi(x)^H gamma^0 Psi(x) has rank <= 4 and at most two positive
    and two negative eigenvalues; a violation aborts since it would indicate
    a construction bug.
    """
    psi = table.values_at(np.asarray(coords, dtype=float))
    return _factored_correlation(psi, table.count)


def _factored_correlation(psi: np.ndarray, hilbert_dim: int) -> OperatorPoint:
    basis = psi.conj().T  # f x 4
    q, r = np.linalg.qr(basis)
    core = -r @ GAMMA[0] @ r.conj().T
    evals, evecs = np.linalg.eigh(core)
    top = float(np.abs(evals).max()) if evals.size else 0.0
    if top == 0.0:
        return OperatorPoint.zero(hilbert_dim, 2)
    keep = np.abs(evals) > RANK_TOL * top
    spectrum = evals[keep]
    n_pos = int((spectrum > 0).sum())
    n_neg = int((spectrum < 0).sum())
    if n_pos > 2 or n_neg > 2:
        raise SignatureViolation(
            f"local correlation operator with signature ({n_pos}, {n_neg}); "
            "the pointwise spinor product has signature (2, 2)"
        )
    factors = np.ascontiguousarray(q @ evecs[:, keep])
    return OperatorPoint(factors, spectrum, n=2, validate=False)


@dataclass(frozen=True)
class LatticeSeaSystem:
    """A causal fermion system built from occupied Dirac modes on the lattice.

    One atom per lattice point (row-major (t, x, y, z) order) with the
    counting-measure weight; ``measure.points[i]`` is the local correlation
    operator at ``spec.point_coords(i)``.
    """

    spec: LatticeSpec
    modes: ModeTable
    measure: DiscreteMeasure
    counting_weight: float
    added: tuple = ()
    removed: tuple = ()

    @property
    def hilbert_dim(self) -> int:
        return self.modes.count

    def point_coords(self, indices=None) -> np.ndarray:
        return self.spec.point_coords(indices)


def build_system(
    spec: LatticeSpec,
    add_modes=(),
    remove_modes=(),
    counting_weight: float = 1.0,
) -> LatticeSeaSystem:
    """Build the full system: sea plus occupation edits, one atom per point."""
    if counting_weight <= 0:
        raise ValueError(f"counting weight must be positive, got {counting_weight}")
    table = build_sea_modes(spec)
    if add_modes or remove_modes:
        table = apply_occupation_edits(table, add=add_modes, remove=remove_modes)
    coords = spec.point_coords()
    n_pts, f = spec.n_points, table.count
    stacked_factors = np.zeros((n_pts, f, 4), dtype=complex)
    stacked_spectra = np.zeros((n_pts, 4))
    points = []
    for i in range(n_pts):
        try:
            op = local_correlation_operator(table, coords[i])
        except SignatureViolation as exc:
            raise SignatureViolation(
                f"at lattice point {tuple(np.unravel_index(i, spec.shape))}: {exc}"
            ) from exc
        points.append(op)
        stacked_factors[i, :, : op.rank] = op.factors
        stacked_spectra[i, : op.rank] = op.spectrum
    weights = np.full(n_pts, float(counting_weight))
    measure = DiscreteMeasure(points, weights, _stack=(stacked_factors, stacked_spectra))
    return LatticeSeaSystem(
        spec=spec,
        modes=table,
        measure=measure,
        counting_weight=float(counting_weight),
        added=tuple(tuple(int(v) for v in k) for k in add_modes),
        removed=tuple(tuple(int(v) for v in k) for k in remove_modes),
    )


def spinor_kernel(table: ModeTable, separations: np.ndarray) -> np.ndarray:
    """Mode-sum kernel P(x, y) = -sum_i psi_i(x) psibar_i(y) in spinor space.

    ``separations`` holds x - y rows; returns (..., 4, 4).  Depends on the
    points only through their difference (plane-wave construction).
    """
    separations = np.atleast_2d(np.asarray(separations, dtype=float))
    k_dot = (
        table.momenta[:, 0] * separations[:, 0:1]
        - separations[:, 1:] @ table.momenta[:, 1:].T
    )
    phases = np.exp(-1j * k_dot)  # (P, f)
    rank_one = np.einsum("ia,ib->iab", table.amplitudes, table.amplitudes.conj())
    summed = np.tensordot(phases, rank_one, axes=(1, 0))
    kernels = -(summed @ GAMMA[0])
    return kernels if kernels.shape[0] > 1 else kernels[0]
