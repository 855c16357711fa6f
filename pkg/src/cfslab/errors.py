"""Exception types raised by cfslab."""


class CfsError(Exception):
    """Base class for all cfslab errors."""


class NotSelfAdjoint(CfsError):
    """Candidate matrix deviates from self-adjointness beyond tolerance."""


class SignatureViolation(CfsError):
    """Operator has more than n positive or n negative eigenvalues."""


class RankViolation(CfsError):
    """Operator rank exceeds 2n."""


class RankToleranceAmbiguity(CfsError):
    """An eigenvalue straddles the rank-truncation threshold; refusing to guess."""


class EigenSolverFailure(CfsError):
    """Small dense eigenvalue solver did not converge or paths disagree."""


class MassShellFailure(CfsError):
    """Plane-wave amplitude construction failed the momentum-space Dirac equation."""


class SliceMismatch(CfsError):
    """Wave functions sampled on incompatible lattices or invalid time slice."""


class NotInSpinSpace(CfsError):
    """Vector has a component outside the spin space beyond tolerance."""


class NonOrthonormalInput(CfsError):
    """Input tuple of Hilbert vectors is not orthonormal."""


class InfeasibleTrace(CfsError):
    """Trace constraint cannot be met by uniform spectral rescaling."""


class EmptySample(CfsError):
    """Pair sampler produced no pairs."""
