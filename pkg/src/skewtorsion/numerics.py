"""Tolerance-aware dense linear algebra.

Every rank decision in the toolkit goes through :func:`numerical_rank`, which
refuses to guess when the singular values do not show a clear gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegenerateRankError, DimensionMismatch, InconclusiveDefectError

#: Minimum ratio between the smallest kept and the largest dropped singular value.
RANK_GAP = 1e3
#: Defects above ``DEFECT_BAND * abs`` are "definitely nonzero".
DEFECT_BAND = 1e3


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-9
    abs: float = 1e-9

    def __post_init__(self):
        for name in ("rel", "abs"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ContractViolation(f"tolerance {name} must be finite and positive, got {value!r}")

    @classmethod
    def uniform(cls, value: float) -> "Tolerance":
        return cls(rel=value, abs=value)


_default_tol = Tolerance()


def default_tolerance() -> Tolerance:
    return _default_tol


def set_default_tolerance(tol: Tolerance) -> Tolerance:
    """Replace the process-wide default tolerance and return the previous one."""
    global _default_tol
    if not isinstance(tol, Tolerance):
        raise ContractViolation("expected a Tolerance instance")
    previous, _default_tol = _default_tol, tol
    return previous


def _tol(tol: Tolerance | None) -> Tolerance:
    return _default_tol if tol is None else tol


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace of R^n, stored as the columns of ``matrix``."""

    ambient_dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float).reshape(self.ambient_dim, -1)
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def zero(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.eye(n))

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.matrix[:, i] for i in range(self.rank)]

    def projector(self) -> np.ndarray:
        return self.matrix @ self.matrix.T

    def project(self, v) -> np.ndarray:
        return self.matrix @ (self.matrix.T @ np.asarray(v, dtype=float))

    def residual(self, v) -> float:
        """Norm of the component of ``v`` orthogonal to the subspace."""
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(v - self.project(v)))

    def orthonormality_defect(self) -> float:
        g = self.matrix.T @ self.matrix
        return float(np.abs(g - np.eye(self.rank)).max()) if self.rank else 0.0

    def complement(self, tol: Tolerance | None = None) -> "SubspaceBasis":
        if self.rank == 0:
            return SubspaceBasis.full(self.ambient_dim)
        return nullspace(self.matrix.T, tol)

    def distance(self, other: "SubspaceBasis") -> float:
        """Spectral-norm distance between the orthogonal projectors."""
        if other.ambient_dim != self.ambient_dim:
            raise DimensionMismatch(f"ambient dimensions {self.ambient_dim} and {other.ambient_dim}")
        diff = self.projector() - other.projector()
        return float(np.linalg.norm(diff, 2)) if diff.size else 0.0


def numerical_rank(s: np.ndarray, tol: Tolerance | None = None) -> int:
    """Rank from descending singular values ``s``.

    ``s[i]`` is kept iff ``s[i] > rel * s[0]``; a matrix whose largest
    singular value is at most ``abs`` has rank 0.  Raises
    :class:`DegenerateRankError` when kept and dropped values are within a
    factor :data:`RANK_GAP` of each other.
    """
    tol = _tol(tol)
    s = np.asarray(s, dtype=float)
    if s.size == 0 or s[0] <= tol.abs:
        return 0
    rank = int(np.count_nonzero(s > tol.rel * s[0]))
    if rank < s.size and s[rank] > 0 and s[rank - 1] < RANK_GAP * s[rank]:
        raise DegenerateRankError(float(s[rank - 1]), float(s[rank]))
    return rank


def _as_columns(vectors, ambient_dim: int | None) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        rows = vectors
    else:
        vectors = list(vectors)
        if not vectors:
            if ambient_dim is None:
                raise ContractViolation("ambient_dim is required for an empty vector list")
            return np.zeros((ambient_dim, 0))
        dims = {np.asarray(v).shape for v in vectors}
        if len(dims) != 1:
            raise DimensionMismatch(f"vectors have different shapes: {sorted(dims)}")
        rows = np.array([np.asarray(v, dtype=float).ravel() for v in vectors])
    rows = np.asarray(rows, dtype=float)
    if ambient_dim is not None and rows.shape[1] != ambient_dim:
        raise DimensionMismatch(f"vectors have dimension {rows.shape[1]}, expected {ambient_dim}")
    return rows.T


def orthonormalize(vectors, tol: Tolerance | None = None, ambient_dim: int | None = None) -> SubspaceBasis:
    """Orthonormal basis for the span of ``vectors`` (rows of a 2-D array or a list)."""
    a = _as_columns(vectors, ambient_dim)
    n = a.shape[0]
    if a.shape[1] == 0:
        return SubspaceBasis.zero(n)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = numerical_rank(s, tol)
    return SubspaceBasis(n, u[:, :r])


def nullspace(map_matrix, tol: Tolerance | None = None) -> SubspaceBasis:
    """Orthonormal basis of ``{k : A k = 0}``."""
    tol = _tol(tol)
    a = np.atleast_2d(np.asarray(map_matrix, dtype=float))
    if not np.all(np.isfinite(a)):
        raise ContractViolation("map matrix has non-finite entries")
    n = a.shape[1]
    if a.shape[0] == 0:
        return SubspaceBasis.full(n)
    _, s, vt = np.linalg.svd(a, full_matrices=a.shape[0] < n)
    r = numerical_rank(s, tol)
    kernel = vt[r:].T
    if kernel.shape[1]:
        residual = float(np.linalg.norm(a @ kernel, axis=0).max())
        scale = max(1.0, float(s[0]))
        if residual > tol.abs * scale:
            raise DegenerateRankError(float(s[r - 1]) if r else 0.0, residual, f"kernel residual {residual:.3e} exceeds tolerance")
    return SubspaceBasis(n, kernel)


_STACK_LIMIT = 4_000_000


def stacked_nullspace(blocks, n: int, tol: Tolerance | None = None) -> SubspaceBasis:
    """Joint kernel of several linear maps, each a matrix with ``n`` columns.

    Small systems are stacked and passed to :func:`nullspace`.  Large ones are
    folded block by block into the triangular factor of a QR decomposition,
    which has the singular values of the full stack without ever holding it.
    (The Gram matrix ``A^T A`` would square the singular values and lose half
    the digits, enough to misrank at the default tolerance.)
    """
    tol = _tol(tol)
    blocks = [np.asarray(b, dtype=float).reshape(-1, n) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    if rows * n <= _STACK_LIMIT:
        return nullspace(np.vstack(blocks) if blocks else np.zeros((0, n)), tol)
    r = np.zeros((0, n))
    for b in blocks:
        r = np.linalg.qr(np.vstack([r, b]), mode="r")
    return nullspace(r, tol)


def sym_eigen(S, tol: Tolerance | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a symmetric matrix."""
    tol = _tol(tol)
    S = np.asarray(S, dtype=float)
    norm = float(np.linalg.norm(S)) if S.size else 0.0
    defect = float(np.abs(S - S.T).max()) if S.size else 0.0
    if defect > tol.abs * max(1.0, norm):
        raise ContractViolation(f"matrix is not symmetric (defect {defect:.3e})")
    w, q = np.linalg.eigh((S + S.T) / 2)
    residual = float(np.abs(S - (q * w) @ q.T).max()) if S.size else 0.0
    if residual > tol.abs * (1 + norm):
        raise ContractViolation(f"eigendecomposition residual {residual:.3e} too large")
    return w, q


def skew_defect(B) -> float:
    B = np.asarray(B, dtype=float)
    return float(np.abs(B + B.T).max()) if B.size else 0.0


def orthogonality_defect(g) -> float:
    g = np.asarray(g, dtype=float)
    return float(np.abs(g.T @ g - np.eye(g.shape[0])).max()) if g.size else 0.0


_TAYLOR_ORDER = 18


def expm_skew(B, tol: Tolerance | None = None) -> np.ndarray:
    """Exponential of a skew-symmetric matrix by scaling and squaring.

    The scaled matrix has norm at most 1/2, where a Taylor polynomial of
    order 18 is accurate to well below double precision.
    """
    tol = _tol(tol)
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ContractViolation("expected a square matrix")
    if skew_defect(B) > tol.abs * max(1.0, float(np.abs(B).max(initial=0.0))):
        raise ContractViolation(f"matrix is not skew-symmetric (defect {skew_defect(B):.3e})")
    B = (B - B.T) / 2
    n = B.shape[0]
    norm = float(np.linalg.norm(B, 1)) if n else 0.0
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    a = B / 2.0**squarings
    term = np.eye(n)
    out = np.eye(n)
    for k in range(1, _TAYLOR_ORDER + 1):
        term = term @ a / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def is_zero_defect(name: str, value: float, tol: Tolerance | None = None) -> bool:
    """True if ``value`` is a zero defect, False if definitely nonzero.

    Values in ``(abs, DEFECT_BAND * abs]`` raise :class:`InconclusiveDefectError`.
    """
    tol = _tol(tol)
    if value <= tol.abs:
        return True
    if value > DEFECT_BAND * tol.abs:
        return False
    raise InconclusiveDefectError(name, value, tol.abs, DEFECT_BAND * tol.abs)


# Orthonormal bases of symmetric and skew matrices (Frobenius inner product).


def _triangle(m: int, strict: bool) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(m, 1 if strict else 0)


def sym_basis(m: int) -> np.ndarray:
    """Array of shape (m(m+1)/2, m, m)."""
    iu, ju = _triangle(m, strict=False)
    out = np.zeros((iu.size, m, m))
    idx = np.arange(iu.size)
    diag = iu == ju
    out[idx, iu, ju] = np.where(diag, 1.0, 1 / math.sqrt(2))
    out[idx, ju, iu] = np.where(diag, 1.0, 1 / math.sqrt(2))
    return out


def sym_coords(X: np.ndarray) -> np.ndarray:
    """Coordinates of symmetric matrices (last two axes) in :func:`sym_basis`."""
    m = X.shape[-1]
    iu, ju = _triangle(m, strict=False)
    w = np.where(iu == ju, 1.0, math.sqrt(2))
    return X[..., iu, ju] * w


def skew_basis(m: int) -> np.ndarray:
    """Array of shape (m(m-1)/2, m, m) with elements (E_ij - E_ji)/sqrt(2), i < j."""
    iu, ju = _triangle(m, strict=True)
    out = np.zeros((iu.size, m, m))
    idx = np.arange(iu.size)
    out[idx, iu, ju] = -1 / math.sqrt(2)
    out[idx, ju, iu] = 1 / math.sqrt(2)
    return out


def skew_coords(X: np.ndarray) -> np.ndarray:
    """Coordinates of skew matrices (last two axes) in :func:`skew_basis`."""
    m = X.shape[-1]
    iu, ju = _triangle(m, strict=True)
    return X[..., ju, iu] * math.sqrt(2)


__all__ = [
    "DEFECT_BAND",
    "RANK_GAP",
    "SubspaceBasis",
    "Tolerance",
    "default_tolerance",
    "expm_skew",
    "is_zero_defect",
    "nullspace",
    "numerical_rank",
    "orthogonality_defect",
    "orthonormalize",
    "set_default_tolerance",
    "skew_basis",
    "skew_coords",
    "skew_defect",
    "stacked_nullspace",
    "sym_basis",
    "sym_coords",
    "sym_eigen",
]
