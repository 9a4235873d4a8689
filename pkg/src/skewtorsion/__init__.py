"""Numerical toolkit for skew-torsion holonomy systems."""

from .catalog import (
    CATALOG,
    build_adjoint_system,
    build_quaternionic,
    build_so,
    build_su,
    build_unitary,
    cross_product_form,
    cross_product_system,
    solve_form_space,
)
from .errors import (
    ContractViolation,
    DegenerateDecompositionError,
    DegenerateRankError,
    DimensionMismatch,
    InconclusiveDefectError,
    InternalInconsistencyError,
    NotABracketError,
    SkewTorsionError,
)
from .exterior import FourForm, ThreeForm, pullback, so_action, theta_operator
from .holonomy import (
    CurvatureTensor,
    SkewTorsionSystem,
    Verdict,
    average_curvature,
    average_form,
    bianchi_residual,
    classify,
    curvature,
    is_transitive,
    isotropy_algebra,
    jacobi_defect,
    jacobi_operator,
    normal_space,
    omega,
    scalar_curvature,
    symmetry_defect,
)
from .lie import (
    Subalgebra,
    bracket_structure,
    centralizer,
    cohomogeneity,
    fixed_subspace,
    ideal_closure,
    invariant_decomposition,
    lie_closure,
)
from .numerics import SubspaceBasis, Tolerance, expm_skew, nullspace, orthonormalize, sym_eigen

__version__ = "0.1.0"
