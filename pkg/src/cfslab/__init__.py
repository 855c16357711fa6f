"""cfslab: a numerical laboratory for causal fermion systems.

Builds causal fermion systems from regularized Dirac-sea configurations on a
periodic lattice, evaluates the causal action principle with its volume,
trace, and boundedness constraints, recovers causal structure from the
spectra of operator products, and minimizes the action over small discrete
measures.
"""

from ._kernels import USING_NUMBA
from .diracsea import (
    LatticeSeaSystem,
    LatticeSpec,
    ModeTable,
    build_sea_modes,
    build_system,
    dirac_matrices,
    dirac_scalar_product,
    local_correlation_operator,
    spinor_kernel,
)
from .geometry import (
    ClosedChain,
    KernelMatrix,
    SpinSpace,
    closed_chain,
    fermionic_kernel,
    hartree_fock_overlap,
    physical_wave_function,
    spin_product,
    spin_projector,
)
from .measure import (
    DiscreteMeasure,
    action_functionals,
    boundedness_functional,
    causal_action,
    total_volume,
    trace_integral,
)
from .minimize import (
    FAMILIES,
    MinimizeResult,
    VariationalProblem,
    minimize_action,
    project_constraints,
)
from .opspace import OperatorPoint, operator_trace, product_eigenvalues, verify_membership
from .spectral import (
    LIGHTLIKE,
    SPACELIKE,
    TIMELIKE,
    EigenvalueList,
    boundedness_integrand,
    classify_causality,
    lagrangian,
    lagrangian_variance_form,
    spectral_weight,
)
from .vacuum import (
    AuditReport,
    ChainInvariants,
    CliffordDecomposition,
    causality_audit,
    chain_eigenvalue_formula,
    decompose_kernel,
    sample_pairs,
)

__version__ = "0.1.0"
