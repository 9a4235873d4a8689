"""Skew-torsion holonomy systems [V, Theta, G] and their derived tensors.

The group G is represented only through its Lie algebra, so "symmetric" means
infinitesimally symmetric (B . Theta = 0 for all B in g) and averages over G
are orthogonal projections onto infinitesimal fixed spaces.

Curvature follows the sign convention in which

    R_{v,w} = [Theta_v, Theta_w] - (2/3) Omega_{v,w},
    s(R) = sum_{i<j} <R_{e_i,e_j} e_j, e_i> = -sum_{i<j} |Theta_{e_i} e_j|^2,

so scalar curvature is negative whenever Theta is nonzero.
"""

from __future__ import annotations

import logging
from dataclasses import InitVar, dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .errors import ContractViolation, DimensionMismatch, InternalInconsistencyError, NotABracketError
from .exterior import FourForm, ThreeForm, action_matrix, derived_form, derived_operators, so_action
from .lie import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    Subalgebra,
    bracket_structure,
    cohomogeneity,
    invariant_decomposition,
    symmetric_commutant,
)
from .numerics import (
    SubspaceBasis,
    Tolerance,
    default_tolerance,
    is_zero_defect,
    nullspace,
    orthonormalize,
    skew_basis,
    skew_coords,
    stacked_nullspace,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SkewTorsionSystem:
    """A 3-form on R^n whose operators ``Theta_x`` all lie in ``algebra``."""

    dim: int
    theta: ThreeForm
    algebra: Subalgebra
    tol: InitVar[Tolerance | None] = None

    def __post_init__(self, tol):
        if self.theta.dim != self.dim or self.algebra.ambient_dim != self.dim:
            raise DimensionMismatch(
                f"system on R^{self.dim} with a form on R^{self.theta.dim} and an algebra in so({self.algebra.ambient_dim})"
            )
        tol = tol or default_tolerance()
        self.algebra.validate(tol)
        r = self.membership_residual()
        if r > tol.abs:
            raise ContractViolation(f"Theta_x leaves the algebra (residual {r:.3e} on the unit form)")

    def membership_residual(self) -> float:
        """Largest off-algebra part of ``Theta_{e_i}`` for the unit-normalized form."""
        ops = self.theta.normalized().operators()
        return max((self.algebra.residual(op) for op in ops), default=0.0)

    @property
    def operators(self) -> np.ndarray:
        return self.theta.operators()


# derived 2-form and curvature ----------------------------------------------


def omega(sys: SkewTorsionSystem, tol: Tolerance | None = None) -> FourForm:
    """``<Omega_{x,y} z, w>`` with ``Omega_{x,y} = [Theta_x, Theta_y] - Theta_{Theta_x y}``."""
    tol = tol or default_tolerance()
    try:
        form = derived_form(sys.theta, tol)
    except ContractViolation as exc:
        raise InternalInconsistencyError(f"derived 2-form is not totally skew: {exc}") from exc
    ops = derived_operators(sys.theta)
    scale = max(1.0, sys.theta.norm() ** 2)
    worst = max((sys.algebra.residual(m) for m in ops.reshape(-1, sys.dim, sys.dim)), default=0.0)
    if worst > tol.abs * scale:
        raise InternalInconsistencyError(f"Omega leaves the algebra (residual {worst:.3e})")
    return form


def jacobi_defect(T: ThreeForm, tol: Tolerance | None = None) -> float:
    """Max-abs coefficient of Omega for the unit-normalized form.

    Zero exactly when ``[x, y] = Theta_x y`` satisfies the Jacobi identity.
    Omega does not depend on the ambient algebra, so none is needed here.
    """
    return float(np.abs(derived_form(T.normalized(), tol).coeffs).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class CurvatureTensor:
    """``coeffs[i, j, k, l] = <R_{e_i, e_j} e_k, e_l>``."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.dim,) * 4:
            raise DimensionMismatch(f"curvature coefficients of shape {c.shape} on R^{self.dim}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def operator(self, v, w) -> np.ndarray:
        """Matrix of ``R_{v,w}``."""
        return np.einsum("i,j,ijkl->lk", v, w, self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def antisymmetry_defect(self) -> float:
        c = self.coeffs
        return float(max(np.abs(c + c.transpose(1, 0, 2, 3)).max(initial=0.0), np.abs(c + c.transpose(0, 1, 3, 2)).max(initial=0.0)))

    def pair_symmetry_defect(self) -> float:
        c = self.coeffs
        return float(np.abs(c - c.transpose(2, 3, 0, 1)).max(initial=0.0))

    def scalar(self) -> float:
        """``sum_{i<j} <R_{e_i,e_j} e_j, e_i>``."""
        i, j = np.triu_indices(self.dim, 1)
        return float(self.coeffs[i, j, j, i].sum())

    def check(self, tol: Tolerance | None = None, algebra: Subalgebra | None = None) -> None:
        tol = tol or default_tolerance()
        scale = max(1.0, float(np.abs(self.coeffs).max(initial=0.0)))
        defects = {
            "antisymmetry": self.antisymmetry_defect(),
            "pair symmetry": self.pair_symmetry_defect(),
            "first Bianchi identity": bianchi_residual(self),
        }
        if algebra is not None:
            n = self.dim
            ops = np.einsum("ijkl->ijlk", self.coeffs).reshape(-1, n, n)
            defects["membership"] = max((algebra.residual(m) for m in ops), default=0.0)
        for name, value in defects.items():
            if value > tol.abs * scale:
                raise InternalInconsistencyError(f"curvature tensor fails {name} (defect {value:.3e})")


def curvature(sys: SkewTorsionSystem, tol: Tolerance | None = None) -> CurvatureTensor:
    """``R_{v,w} = [Theta_v, Theta_w] - (2/3) Omega_{v,w}``, checked against every curvature symmetry."""
    ops = sys.operators
    comm = np.einsum("iab,jbc->ijac", ops, ops)
    comm = comm - comm.transpose(1, 0, 2, 3)
    R_ops = comm - (2.0 / 3.0) * derived_operators(sys.theta)
    R = CurvatureTensor(sys.dim, R_ops.transpose(0, 1, 3, 2))
    R.check(tol, sys.algebra)
    return R


def bianchi_residual(R: CurvatureTensor) -> float:
    """Largest ``|R(v,w,z,u) + R(w,z,v,u) + R(z,v,w,u)|`` over basis vectors."""
    c = R.coeffs
    cyc = c + c.transpose(1, 2, 0, 3) + c.transpose(2, 0, 1, 3)
    return float(np.abs(cyc).max(initial=0.0))


def scalar_curvature(sys: SkewTorsionSystem, tol: Tolerance | None = None) -> float:
    """Scalar curvature, cross-checked against ``-sum_{i<j} |Theta_{e_i} e_j|^2``."""
    tol = tol or default_tolerance()
    s = curvature(sys, tol).scalar()
    ops = sys.operators
    i, j = np.triu_indices(sys.dim, 1)
    other = -float(np.sum(ops[i, :, j] ** 2))
    if abs(s - other) > tol.abs * max(1.0, abs(other)):
        raise InternalInconsistencyError(f"scalar curvature {s!r} disagrees with -sum |Theta_i e_j|^2 = {other!r}")
    return s


def symmetry_defect(sys: SkewTorsionSystem, tol: Tolerance | None = None) -> float:
    """Largest ``|B . Theta|`` over the algebra basis, with Theta unit-normalized."""
    unit = sys.theta.normalized()
    return max((so_action(B, unit, tol).norm() for B in sys.algebra.basis), default=0.0)


# orbit geometry ---------------------------------------------------------------


def _nonzero_vector(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatch(f"vector of shape {v.shape} in R^{n}")
    if not np.any(v):
        raise ContractViolation("v must be nonzero")
    return v


def tangent_space(S: Subalgebra, v, tol: Tolerance | None = None) -> SubspaceBasis:
    """``span{B v : B in S}``."""
    n = S.ambient_dim
    v = _nonzero_vector(v, n)
    return orthonormalize(S.basis @ v, tol, ambient_dim=n)


def normal_space(S: Subalgebra, v, tol: Tolerance | None = None) -> SubspaceBasis:
    """Orthogonal complement of the orbit tangent space at ``v``."""
    n = S.ambient_dim
    v = _nonzero_vector(v, n)
    if S.dim == 0:
        return SubspaceBasis.full(n)
    return nullspace(S.basis @ v, tol)


def isotropy_algebra(S: Subalgebra, v, tol: Tolerance | None = None) -> Subalgebra:
    """``{B in S : B v = 0}``, checked to be bracket-closed."""
    tol = tol or default_tolerance()
    n = S.ambient_dim
    v = _nonzero_vector(v, n)
    if S.dim == 0:
        return Subalgebra.zero(n)
    ker = nullspace((S.basis @ v).T, tol)
    iso = Subalgebra(n, np.einsum("ar,aij->rij", ker.matrix, S.basis))
    d = iso.closure_defect()
    if d > tol.abs:
        raise InternalInconsistencyError(f"isotropy algebra is not closed (defect {d:.3e})")
    return iso


def is_transitive(S: Subalgebra, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED, tol: Tolerance | None = None) -> bool:
    """Transitivity on the unit sphere, decided by cohomogeneity one.

    A principal orbit of a compact connected group that is open in the
    connected sphere is closed and open, hence the whole sphere.
    """
    if S.ambient_dim < 2:
        raise ContractViolation("transitivity on spheres needs n >= 2")
    return cohomogeneity(S, samples, seed, tol) == 1


class JacobiOperator(NamedTuple):
    basis: SubspaceBasis
    matrix: np.ndarray


def jacobi_operator(R: CurvatureTensor, v, tol: Tolerance | None = None) -> JacobiOperator:
    """Matrix of ``w -> R_{w,v} v`` on ``v^perp`` in an orthonormal basis of ``v^perp``."""
    tol = tol or default_tolerance()
    n = R.dim
    v = _nonzero_vector(v, n)
    perp = nullspace(v[None, :], tol)
    U = perp.matrix
    J = np.einsum("ib,ijkl,j,k,la->ab", U, R.coeffs, v, v, U)
    defect = float(np.abs(J - J.T).max(initial=0.0))
    if defect > tol.abs * max(1.0, float(np.abs(J).max(initial=0.0))):
        raise InternalInconsistencyError(f"Jacobi operator is not symmetric (defect {defect:.3e})")
    return JacobiOperator(perp, J)


# averaging --------------------------------------------------------------------


def average_form(T: ThreeForm, h: Subalgebra, tol: Tolerance | None = None) -> ThreeForm:
    """Haar average of ``T`` over the connected group of ``h``.

    The group acts orthogonally on coefficient vectors, so the average is the
    orthogonal projection onto the joint kernel of the infinitesimal actions.
    """
    tol = tol or default_tolerance()
    if h.ambient_dim != T.dim:
        raise DimensionMismatch("form and algebra live in different dimensions")
    if h.dim == 0 or T.coeffs.size == 0:
        return T
    blocks = [action_matrix(B, T.dim, 3) for B in h.basis]
    ker = stacked_nullspace(blocks, T.coeffs.size, tol)
    return ThreeForm(T.dim, ker.project(T.coeffs))


def _bivector_action(S: Subalgebra) -> np.ndarray:
    """Matrices of the induced action of ``S.basis`` on 2-vectors; shape (dim, N, N)."""
    E = skew_basis(S.ambient_dim)
    out = [skew_coords(np.einsum("ij,ajk->aik", B, E) - np.einsum("aij,jk->aik", E, B)).T for B in S.basis]
    return np.array(out).reshape(S.dim, E.shape[0], E.shape[0])


def _as_pair_matrix(R: CurvatureTensor) -> np.ndarray:
    iu, ju = np.triu_indices(R.dim, 1)
    # skew_basis element a is -(e_i ^ e_j)/sqrt(2); the sign squares away
    return R.coeffs[iu[:, None], ju[:, None], iu[None, :], ju[None, :]]


def _from_pair_matrix(X: np.ndarray, n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    c = np.zeros((n,) * 4)
    I, J = iu[:, None], ju[:, None]
    K, L = iu[None, :], ju[None, :]
    c[I, J, K, L] = X
    c[J, I, K, L] = -X
    c[I, J, L, K] = -X
    c[J, I, L, K] = X
    return c


def curvature_invariance_defect(R: CurvatureTensor, S: Subalgebra) -> float:
    """Largest norm of the infinitesimal action of ``S.basis`` on ``R``."""
    if S.dim == 0:
        return 0.0
    X = _as_pair_matrix(R)
    acts = _bivector_action(S)
    return float(max(np.linalg.norm(A @ X - X @ A) for A in acts))


def average_curvature(R: CurvatureTensor, S: Subalgebra, tol: Tolerance | None = None) -> CurvatureTensor:
    """Average of ``R`` over the connected group of ``S``.

    A curvature tensor is a symmetric operator on 2-vectors, and the invariant
    ones are those commuting with the induced action, so the average is the
    projection onto that symmetric commutant.
    """
    tol = tol or default_tolerance()
    n = R.dim
    if S.ambient_dim != n:
        raise DimensionMismatch("curvature tensor and algebra live in different dimensions")
    if S.dim == 0:
        return R
    X = _as_pair_matrix(R)
    asym = float(np.abs(X - X.T).max(initial=0.0))
    if asym > tol.abs * max(1.0, float(np.abs(X).max(initial=0.0))):
        raise ContractViolation(f"curvature tensor lacks pair symmetry (defect {asym:.3e})")
    X = (X + X.T) / 2
    comm = symmetric_commutant(_bivector_action(S), X.shape[0], tol)
    coeffs = np.einsum("cij,ij->c", comm, X)
    Rbar = CurvatureTensor(n, _from_pair_matrix(np.einsum("c,cij->ij", coeffs, comm), n))
    Rbar.check(tol)
    scale = max(1.0, R.norm())
    if (d := curvature_invariance_defect(Rbar, S)) > tol.abs * scale:
        raise InternalInconsistencyError(f"averaged tensor is not invariant (defect {d:.3e})")
    if abs(Rbar.scalar() - R.scalar()) > tol.abs * max(1.0, abs(R.scalar())):
        raise InternalInconsistencyError(f"averaging changed scalar curvature: {R.scalar()!r} -> {Rbar.scalar()!r}")
    return Rbar


# classification ---------------------------------------------------------------

BRANCHES = ("degenerate_theta_zero", "reducible", "full_orthogonal", "symmetric_adjoint", "inconsistent")


@dataclass
class Verdict:
    branch: str
    evidence: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"branch": self.branch, "evidence": self.evidence, "failures": list(self.failures)}


def classify(
    sys: SkewTorsionSystem,
    tol: Tolerance | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> Verdict:
    """Sort a system into one of :data:`BRANCHES`.

    An irreducible system with nonzero Theta and a proper subalgebra of so(n)
    must be symmetric and non-transitive; its bracket is then simple and Theta
    is unique up to scale.  Any failed condition is reported as ``inconsistent``.
    """
    from .catalog import solve_form_space

    tol = tol or default_tolerance()
    n = sys.dim
    ev: dict[str, Any] = {"dimension": n, "algebra_dim": sys.algebra.dim, "theta_norm": sys.theta.norm()}

    if is_zero_defect("theta norm", sys.theta.norm(), tol):
        return Verdict("degenerate_theta_zero", ev)

    decomp = invariant_decomposition(sys.algebra, tol, seed)
    ev["fixed_dim"] = decomp.fixed.rank
    ev["part_dims"] = [p.rank for p in decomp.parts]
    if decomp.fixed.rank > 0 or len(decomp.parts) != 1:
        return Verdict("reducible", ev)

    if sys.algebra.dim == n * (n - 1) // 2:
        return Verdict("full_orthogonal", ev)

    failures = []
    sd = symmetry_defect(sys, tol)
    ev["symmetry_defect"] = sd
    if not is_zero_defect("symmetry defect", sd, tol):
        failures.append(f"not symmetric (symmetry defect {sd:.3e})")

    coh = cohomogeneity(sys.algebra, samples, seed, tol)
    ev["cohomogeneity"] = coh
    ev["transitive"] = coh == 1
    if coh == 1:
        failures.append("transitive on the sphere with a proper subalgebra")

    ev["jacobi_defect"] = jacobi_defect(sys.theta, tol)
    try:
        bs = bracket_structure(sys.theta, tol, samples, seed)
    except NotABracketError as exc:
        failures.append(f"bracket: {exc}")
    else:
        ev.update(
            center_dim=bs.center_dim,
            is_simple=bs.is_simple,
            rank=bs.rank,
            killing_signature=list(bs.killing_signature),
        )
        if not bs.is_simple:
            failures.append("bracket algebra is not simple")
        if bs.rank < 2 and n != 3:
            failures.append(f"bracket algebra has rank {bs.rank} in dimension {n}")

    fdim = len(solve_form_space(sys.algebra, tol))
    ev["form_space_dim"] = fdim
    if fdim != 1:
        failures.append(f"form space has dimension {fdim}")

    if failures:
        logger.warning("classification inconsistency: %s", "; ".join(failures))
        return Verdict("inconsistent", ev, failures)
    return Verdict("symmetric_adjoint", ev)


__all__ = [
    "BRANCHES",
    "CurvatureTensor",
    "JacobiOperator",
    "SkewTorsionSystem",
    "Verdict",
    "average_curvature",
    "average_form",
    "bianchi_residual",
    "classify",
    "curvature",
    "curvature_invariance_defect",
    "is_transitive",
    "isotropy_algebra",
    "jacobi_defect",
    "jacobi_operator",
    "normal_space",
    "omega",
    "scalar_curvature",
    "symmetry_defect",
    "tangent_space",
]
