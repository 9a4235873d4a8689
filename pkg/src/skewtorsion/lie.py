"""Matrix Lie subalgebras of so(n).

A :class:`Subalgebra` is stored through an orthonormal basis of skew matrices
(Frobenius inner product).  Everything here is linear algebra on those bases:
bracket closures, fixed vectors, commutants and the splitting of a
representation into irreducible pieces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation, DegenerateDecompositionError, DegenerateRankError, DimensionMismatch, NotABracketError
from .exterior import ThreeForm, derived_form
from .numerics import (
    DEFECT_BAND,
    SubspaceBasis,
    Tolerance,
    default_tolerance,
    nullspace,
    orthonormalize,
    skew_basis,
    skew_coords,
    skew_defect,
    stacked_nullspace,
    sym_basis,
    sym_coords,
    sym_eigen,
)

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 8
DEFAULT_SEED = 0


def _brackets(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All commutators ``[a_i, b_j]``; shape (len(a), len(b), n, n)."""
    ab = np.einsum("iab,jbc->ijac", a, b)
    ba = np.einsum("jab,ibc->ijac", b, a)
    return ab - ba


@dataclass(frozen=True, eq=False)
class Subalgebra:
    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        n = self.ambient_dim
        b = np.array(self.basis, dtype=float).reshape(-1, n, n)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def zero(cls, n: int) -> "Subalgebra":
        return cls(n, np.zeros((0, n, n)))

    @classmethod
    def span(cls, matrices, n: int | None = None, tol: Tolerance | None = None) -> "Subalgebra":
        """Orthonormalized span of skew matrices; closure is *not* enforced."""
        tol = tol or default_tolerance()
        mats = [np.asarray(m, dtype=float) for m in matrices]
        if n is None:
            if not mats:
                raise ContractViolation("ambient dimension required for an empty generator list")
            n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n):
                raise DimensionMismatch(f"generator of shape {m.shape} in so({n})")
            if skew_defect(m) > tol.abs * max(1.0, float(np.abs(m).max(initial=0.0))):
                raise ContractViolation(f"generator is not skew-symmetric (defect {skew_defect(m):.3e})")
        flat = np.array([m.ravel() for m in mats]).reshape(len(mats), n * n)
        basis = orthonormalize(flat, tol, ambient_dim=n * n).matrix.T.reshape(-1, n, n)
        return cls(n, (basis - basis.transpose(0, 2, 1)) / 2)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def coords(self, X) -> np.ndarray:
        return self.flat @ np.asarray(X, dtype=float).ravel()

    def project(self, X) -> np.ndarray:
        n = self.ambient_dim
        return (self.coords(X) @ self.flat).reshape(n, n)

    def residual(self, X) -> float:
        """Frobenius norm of the part of ``X`` orthogonal to the span."""
        X = np.asarray(X, dtype=float)
        return float(np.linalg.norm(X - self.project(X)))

    def closure_defect(self) -> float:
        if self.dim == 0:
            return 0.0
        br = _brackets(self.basis, self.basis).reshape(-1, self.ambient_dim**2)
        off = br - (br @ self.flat.T) @ self.flat
        return float(np.linalg.norm(off, axis=1).max())

    def orthonormality_defect(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.abs(self.flat @ self.flat.T - np.eye(self.dim)).max())

    def validate(self, tol: Tolerance | None = None) -> None:
        tol = tol or default_tolerance()
        checks = {
            "skewness": max((skew_defect(b) for b in self.basis), default=0.0),
            "orthonormality": self.orthonormality_defect(),
            "bracket closure": self.closure_defect(),
        }
        for name, value in checks.items():
            if value > tol.abs:
                raise ContractViolation(f"subalgebra fails {name} (defect {value:.3e})")

    def restrict(self, W: SubspaceBasis) -> np.ndarray:
        """Matrices of the basis elements on ``W`` (assumed invariant); shape (dim, m, m)."""
        Q = W.matrix
        return np.einsum("ai,kab,bj->kij", Q, self.basis, Q)

    def invariance_residual(self, W: SubspaceBasis) -> float:
        """Largest ``||(I - P_W) B P_W||`` over basis elements."""
        if self.dim == 0 or W.rank == 0:
            return 0.0
        Q = W.matrix
        BQ = np.einsum("kab,bj->kaj", self.basis, Q)
        off = BQ - np.einsum("ai,kij->kaj", Q, np.einsum("ai,kaj->kij", Q, BQ))
        return float(np.linalg.norm(off, axis=(1, 2)).max())


def lie_closure(generators, tol: Tolerance | None = None, n: int | None = None) -> Subalgebra:
    """Smallest bracket-closed subspace of so(n) containing ``generators``."""
    tol = tol or default_tolerance()
    current = Subalgebra.span(generators, n=n, tol=tol)
    n = current.ambient_dim
    while current.dim:
        br = _brackets(current.basis, current.basis)
        iu = np.triu_indices(current.dim, 1)
        candidates = np.concatenate([current.basis, br[iu]])
        nxt = Subalgebra.span(candidates, n=n, tol=tol)
        if nxt.dim == current.dim:
            return nxt
        current = nxt
    return current


def ideal_closure(generators, ambient: Subalgebra, tol: Tolerance | None = None) -> Subalgebra:
    """Smallest ideal of ``ambient`` containing ``generators``."""
    tol = tol or default_tolerance()
    n = ambient.ambient_dim
    for g in generators:
        r = ambient.residual(g)
        if r > tol.abs * max(1.0, float(np.linalg.norm(g))):
            raise ContractViolation(f"generator lies outside the ambient algebra (residual {r:.3e})")
    current = Subalgebra.span(generators, n=n, tol=tol)
    while current.dim:
        br = _brackets(ambient.basis, current.basis).reshape(-1, n, n)
        candidates = np.concatenate([current.basis, br])
        candidates = np.array([ambient.project(c) for c in candidates])
        nxt = Subalgebra.span(candidates, n=n, tol=tol)
        if nxt.dim == current.dim:
            return nxt
        current = nxt
    return current


def fixed_subspace(S: Subalgebra, tol: Tolerance | None = None) -> SubspaceBasis:
    """Vectors annihilated by every element of ``S``."""
    n = S.ambient_dim
    if S.dim == 0:
        return SubspaceBasis.full(n)
    return nullspace(S.basis.reshape(-1, n), tol)


def _skew_commutant(mats: np.ndarray, m: int, tol: Tolerance) -> np.ndarray:
    """Skew m x m matrices commuting with every skew matrix in ``mats``."""
    E = skew_basis(m)
    if E.shape[0] == 0:
        return E
    blocks = [skew_coords(np.einsum("aij,jk->aik", E, A) - np.einsum("ij,ajk->aik", A, E)).T for A in mats]
    ker = stacked_nullspace(blocks, E.shape[0], tol)
    return np.einsum("ra,aij->rij", ker.matrix.T, E)


def _sym_kernel(mats: np.ndarray, E: np.ndarray, tol: Tolerance) -> np.ndarray:
    blocks = [sym_coords(np.einsum("aij,jk->aik", E, A) - np.einsum("ij,ajk->aik", A, E)).T for A in mats]
    ker = stacked_nullspace(blocks, E.shape[0], tol)
    return np.einsum("ra,aij->rij", ker.matrix.T, E)


def symmetric_commutant(mats, m: int, tol: Tolerance | None = None) -> np.ndarray:
    """Orthonormal basis of symmetric m x m matrices commuting with the skew ``mats``.

    The commutator of a symmetric and a skew matrix is symmetric, so each
    constraint block is square in symmetric coordinates.  Large inputs are
    first solved against two random combinations (a Lie algebra is usually
    generated by two generic elements); the candidate is accepted only if it
    commutes with every input matrix, otherwise all constraints are used.
    """
    tol = tol or default_tolerance()
    E = sym_basis(m)
    mats = np.asarray(mats, dtype=float).reshape(-1, m, m)
    if len(mats) > 2 and m > 16:
        rng = np.random.default_rng(DEFAULT_SEED)
        combos = np.tensordot(rng.standard_normal((2, len(mats))), mats, 1)
        try:
            cand = _sym_kernel(combos, E, tol)
        except DegenerateRankError:
            cand = None
        if cand is not None:
            scale = max(1.0, float(np.abs(mats).max()))
            resid = max((float(np.abs(A @ C - C @ A).max()) for A in mats for C in cand), default=0.0)
            if resid <= tol.abs * scale:
                return cand
    return _sym_kernel(mats, E, tol)


def centralizer(S: Subalgebra, W: SubspaceBasis | None = None, tol: Tolerance | None = None) -> list[np.ndarray]:
    """Skew operators on ``W`` commuting with ``S`` restricted to ``W``.

    Matrices are expressed in the orthonormal basis ``W.matrix``.
    """
    tol = tol or default_tolerance()
    W = W or SubspaceBasis.full(S.ambient_dim)
    if W.ambient_dim != S.ambient_dim:
        raise DimensionMismatch("subspace and algebra live in different dimensions")
    r = S.invariance_residual(W)
    if r > tol.abs:
        raise ContractViolation(f"subspace is not invariant (residual {r:.3e})")
    return list(_skew_commutant(S.restrict(W), W.rank, tol))


class Decomposition(NamedTuple):
    fixed: SubspaceBasis
    parts: list[SubspaceBasis]
    irreducible: list[bool]


def is_irreducible_on(S: Subalgebra, W: SubspaceBasis, tol: Tolerance | None = None) -> bool:
    """Irreducibility of the restriction to an invariant ``W``: symmetric commutant is the scalars."""
    if W.rank == 0:
        return False
    return len(symmetric_commutant(S.restrict(W), W.rank, tol)) == 1


def _cluster(w: np.ndarray, tol: Tolerance) -> list[np.ndarray]:
    spread = float(w[-1] - w[0])
    zero_gap = max(tol.abs, tol.rel * spread)
    groups = [[0]]
    for i in range(1, len(w)):
        gap = float(w[i] - w[i - 1])
        if gap <= zero_gap:
            groups[-1].append(i)
        elif gap > DEFECT_BAND * zero_gap:
            groups.append([i])
        else:
            raise DegenerateDecompositionError(
                f"eigenvalue gap {gap:.3e} is neither zero nor clearly separated (spread {spread:.3e})"
            )
    return [np.array(g) for g in groups]


_MAX_SPLIT_DEPTH = 8


def _split(S: Subalgebra, W: SubspaceBasis, rng, tol: Tolerance, depth: int = 0) -> list[SubspaceBasis]:
    m = W.rank
    comm = symmetric_commutant(S.restrict(W), m, tol)
    if len(comm) <= 1:
        return [W]
    if depth >= _MAX_SPLIT_DEPTH:
        raise DegenerateDecompositionError(f"no splitting found after {depth} random commutant draws")
    X = np.einsum("a,aij->ij", rng.standard_normal(len(comm)), comm)
    w, q = sym_eigen(X, tol)
    groups = _cluster(w, tol)
    if len(groups) == 1:
        logger.debug("commutant draw was scalar on a reducible block; redrawing")
        return _split(S, W, rng, tol, depth + 1)
    parts = []
    for g in groups:
        sub = SubspaceBasis(S.ambient_dim, W.matrix @ q[:, g])
        parts.extend(_split(S, sub, rng, tol, depth + 1))
    return parts


def invariant_decomposition(S: Subalgebra, tol: Tolerance | None = None, seed: int = DEFAULT_SEED) -> Decomposition:
    """Split R^n into the fixed space of ``S`` and irreducible invariant subspaces.

    The nontrivial part is split along eigenspaces of a pseudorandom symmetric
    element of the commutant.  Every part is re-checked for invariance and
    irreducibility, so an unlucky draw raises instead of returning a wrong
    answer.
    """
    tol = tol or default_tolerance()
    n = S.ambient_dim
    fixed = fixed_subspace(S, tol)
    rest = fixed.complement(tol)
    if rest.rank == 0:
        return Decomposition(fixed, [], [])
    rng = np.random.default_rng(seed)
    parts = _split(S, rest, rng, tol)
    flags = []
    for W in parts:
        r = S.invariance_residual(W)
        if r > tol.abs * max(1.0, np.sqrt(n)):
            raise DegenerateDecompositionError(f"part of dimension {W.rank} is not invariant (residual {r:.3e})")
        flags.append(is_irreducible_on(S, W, tol))
    if not all(flags):
        raise DegenerateDecompositionError("a returned part failed the irreducibility re-test")
    return Decomposition(fixed, parts, flags)


def cohomogeneity(S: Subalgebra, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED, tol: Tolerance | None = None) -> int:
    """``n`` minus the largest orbit dimension seen at ``samples`` random unit vectors."""
    if samples < 1:
        raise ContractViolation("samples must be at least 1")
    n = S.ambient_dim
    if S.dim == 0:
        return n
    rng = np.random.default_rng(seed)
    best = 0
    for _ in range(samples):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        best = max(best, orthonormalize(S.basis @ v, tol, ambient_dim=n).rank)
    return n - best


def adjoint_algebra(T: ThreeForm, tol: Tolerance | None = None) -> Subalgebra:
    """Span of the operators ``Theta_{e_i}``."""
    return Subalgebra.span(T.operators(), n=T.dim, tol=tol)


class BracketStructure(NamedTuple):
    center_dim: int
    is_simple: bool
    rank: int
    killing_signature: tuple[int, int, int]
    killing_eigenvalues: np.ndarray


def bracket_structure(
    T: ThreeForm, tol: Tolerance | None = None, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED
) -> BracketStructure:
    """Structure of the algebra ``(R^n, [x, y] = Theta_x y)``.

    ``killing_signature`` counts (positive, zero, negative) eigenvalues of
    ``K(x, y) = tr(ad_x ad_y)``.  Raises :class:`NotABracketError` when the
    Jacobi identity fails.
    """
    tol = tol or default_tolerance()
    unit = T.normalized()
    omega = derived_form(unit, tol)
    defect = float(np.abs(omega.coeffs).max(initial=0.0))
    if defect > tol.abs:
        raise NotABracketError(f"Jacobi defect {defect:.3e} exceeds tolerance")
    ad = Subalgebra.span(unit.operators(), n=T.dim, tol=tol)
    center = fixed_subspace(ad, tol)
    simple = False
    if center.rank == 0 and ad.dim:
        decomp = invariant_decomposition(ad, tol, seed)
        simple = len(decomp.parts) == 1
    ops = T.operators()
    K = np.einsum("iab,jba->ij", ops, ops)
    w, _ = sym_eigen(K, tol)
    zero = tol.abs * max(1.0, float(np.abs(w).max(initial=0.0)))
    signature = (int(np.sum(w > zero)), int(np.sum(np.abs(w) <= zero)), int(np.sum(w < -zero)))
    return BracketStructure(center.rank, simple, cohomogeneity(ad, samples, seed, tol), signature, w)


__all__ = [
    "BracketStructure",
    "Decomposition",
    "Subalgebra",
    "adjoint_algebra",
    "bracket_structure",
    "centralizer",
    "cohomogeneity",
    "fixed_subspace",
    "ideal_closure",
    "invariant_decomposition",
    "is_irreducible_on",
    "lie_closure",
    "symmetric_commutant",
]
