"""Alternating 3-forms and 4-forms on R^n.

A :class:`ThreeForm` ``T`` encodes a totally skew operator-valued 1-form via
``<Theta_x y, z> = T(x, y, z)``; matrix entry ``(k, j)`` of ``Theta_x`` is
``T(x, e_j, e_k)``.

Two actions of the orthogonal group and its Lie algebra are provided.  The
infinitesimal action of a skew matrix ``B`` is

    (B . Theta)_x y = B Theta_x y - Theta_x B y - Theta_{Bx} y,

and the group action is ``g(Theta)_v = g^{-1} Theta_{g v} g``.  With these
conventions ``d/dt pullback(expm(tB), T) at t=0`` equals ``-so_action(B, T)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ContractViolation, DimensionMismatch
from .numerics import Tolerance, default_tolerance, orthogonality_defect, skew_defect


@lru_cache(maxsize=None)
def _combos(n: int, k: int) -> np.ndarray:
    """Strictly increasing index tuples, lexicographic; shape (C(n,k), k)."""
    c = list(itertools.combinations(range(n), k))
    return np.array(c, dtype=int).reshape(len(c), k)


@lru_cache(maxsize=None)
def _scatter(n: int, k: int) -> tuple[tuple[np.ndarray, ...], np.ndarray, np.ndarray]:
    """Index arrays to expand increasing-index coefficients into a dense tensor.

    Returns ``(positions, source, signs)`` such that
    ``dense[positions] = signs * coeffs[source]``.
    """
    combos = _combos(n, k)
    perms = list(itertools.permutations(range(k)))
    signs = np.array([_perm_sign(p) for p in perms], dtype=float)
    m = len(combos)
    pos = np.empty((m * len(perms), k), dtype=int)
    for a, p in enumerate(perms):
        pos[a * m : (a + 1) * m] = combos[:, list(p)]
    source = np.tile(np.arange(m), len(perms))
    sign = np.repeat(signs, m)
    return tuple(pos.T), source, sign


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _alternation_defect(arr: np.ndarray) -> float:
    k = arr.ndim
    worst = 0.0
    for axis in range(k - 1):
        perm = list(range(k))
        perm[axis], perm[axis + 1] = perm[axis + 1], perm[axis]
        worst = max(worst, float(np.abs(arr + arr.transpose(perm)).max(initial=0.0)))
    return worst


@dataclass(frozen=True, eq=False)
class _AlternatingForm:
    dim: int
    coeffs: np.ndarray

    degree = 0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        expected = math.comb(self.dim, self.degree)
        if c.size != expected:
            raise DimensionMismatch(
                f"{type(self).__name__} on R^{self.dim} needs {expected} coefficients, got {c.size}"
            )
        if not np.all(np.isfinite(c)):
            raise ContractViolation("form coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls, n: int):
        return cls(n, np.zeros(math.comb(n, cls.degree)))

    @classmethod
    def from_dense(cls, arr, tol: Tolerance | None = None, check: bool = True):
        """Build from a full antisymmetric array; ``check`` verifies the antisymmetry."""
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != cls.degree or len(set(arr.shape)) > 1:
            raise DimensionMismatch(f"expected a cubical array with {cls.degree} axes, got shape {arr.shape}")
        n = arr.shape[0]
        if check:
            tol = tol or default_tolerance()
            scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
            defect = _alternation_defect(arr)
            if defect > tol.abs * scale:
                raise ContractViolation(f"array is not totally antisymmetric (defect {defect:.3e})")
        combos = _combos(n, cls.degree)
        return cls(n, arr[tuple(combos.T)] if combos.size else np.zeros(0))

    @classmethod
    def from_entries(cls, n: int, entries):
        """Build from ``[i, j, k, (l,) value]`` rows with 0-based strictly increasing indices."""
        k = cls.degree
        index = {tuple(c): a for a, c in enumerate(_combos(n, k).tolist())}
        coeffs = np.zeros(len(index))
        for row in entries:
            row = list(row)
            if len(row) != k + 1:
                raise ContractViolation(f"entry {row!r} must have {k} indices and a value")
            idx = tuple(int(i) for i in row[:k])
            if any(float(i) != int(i) for i in row[:k]):
                raise ContractViolation(f"entry {row!r} has non-integer indices")
            if idx not in index:
                raise ContractViolation(f"entry {row!r}: indices must be strictly increasing within 0..{n - 1}")
            coeffs[index[idx]] += float(row[k])
        return cls(n, coeffs)

    @classmethod
    def basis(cls, n: int) -> list:
        m = math.comb(n, cls.degree)
        return [cls(n, np.eye(m)[a]) for a in range(m)]

    @classmethod
    def random(cls, n: int, rng: np.random.Generator):
        """Random form of unit coefficient norm."""
        c = rng.standard_normal(math.comb(n, cls.degree))
        return cls(n, c / np.linalg.norm(c))

    def to_entries(self) -> list[list]:
        return [
            [*map(int, idx), float(v)] for idx, v in zip(_combos(self.dim, self.degree), self.coeffs) if v != 0.0
        ]

    # views ------------------------------------------------------------

    @cached_property
    def dense(self) -> np.ndarray:
        arr = np.zeros((self.dim,) * self.degree)
        if self.coeffs.size:
            pos, src, sign = _scatter(self.dim, self.degree)
            arr[pos] = sign * self.coeffs[src]
        arr.setflags(write=False)
        return arr

    def __call__(self, *vectors) -> float:
        if len(vectors) != self.degree:
            raise ContractViolation(f"expected {self.degree} vectors")
        out = self.dense
        for v in vectors:
            v = np.asarray(v, dtype=float)
            if v.shape != (self.dim,):
                raise DimensionMismatch(f"vector of shape {v.shape} on R^{self.dim}")
            out = np.tensordot(v, out, axes=(0, 0))
        return float(out)

    def evaluate(self, *indices: int) -> float:
        return float(self.dense[tuple(indices)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self):
        """Unit coefficient norm copy; the zero form is returned unchanged."""
        nrm = self.norm()
        return self if nrm == 0 else type(self)(self.dim, self.coeffs / nrm)

    # linear structure -------------------------------------------------

    def _check_same(self, other):
        if type(other) is not type(self):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch(f"forms on R^{self.dim} and R^{other.dim}")
        return None

    def __add__(self, other):
        if (r := self._check_same(other)) is NotImplemented:
            return r
        return type(self)(self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if (r := self._check_same(other)) is NotImplemented:
            return r
        return type(self)(self.dim, self.coeffs - other.coeffs)

    def __mul__(self, c: float):
        return type(self)(self.dim, float(c) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(self.dim, -self.coeffs)


class ThreeForm(_AlternatingForm):
    """Alternating 3-form stored by its values on increasing index triples."""

    degree = 3

    def operators(self) -> np.ndarray:
        """Stack ``ops[i] = Theta_{e_i}``; shape (n, n, n)."""
        return np.ascontiguousarray(self.dense.transpose(0, 2, 1))


class FourForm(_AlternatingForm):
    """Alternating 4-form stored by its values on increasing index quadruples."""

    degree = 4


def theta_operator(T: ThreeForm, x) -> np.ndarray:
    """The skew matrix ``Theta_x`` with ``<Theta_x y, z> = T(x, y, z)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (T.dim,):
        raise DimensionMismatch(f"vector of shape {x.shape} for a form on R^{T.dim}")
    return np.einsum("i,ijk->kj", x, T.dense)


def _act_on_slots(M: np.ndarray, arr: np.ndarray) -> list[np.ndarray]:
    """Terms ``arr(.., M x, ..)`` with ``M`` inserted in each slot in turn."""
    terms = []
    for axis in range(arr.ndim):
        t = np.tensordot(arr, M, axes=([axis], [0]))
        terms.append(np.moveaxis(t, -1, axis))
    return terms


def _check_skew(B, n: int, tol: Tolerance | None) -> np.ndarray:
    tol = tol or default_tolerance()
    B = np.asarray(B, dtype=float)
    if B.shape != (n, n):
        raise DimensionMismatch(f"matrix of shape {B.shape} acting on R^{n}")
    if skew_defect(B) > tol.abs * max(1.0, float(np.abs(B).max(initial=0.0))):
        raise ContractViolation(f"matrix is not skew-symmetric (defect {skew_defect(B):.3e})")
    return B


def so_action(B, T, tol: Tolerance | None = None):
    """Infinitesimal action of a skew matrix on a 3-form or 4-form.

    ``so_action(B, T)(x, y, z) = -(T(Bx, y, z) + T(x, By, z) + T(x, y, Bz))``,
    which for 3-forms is ``<(B . Theta)_x y, z>``.
    """
    if not isinstance(T, _AlternatingForm):
        raise ContractViolation("so_action acts on ThreeForm or FourForm")
    B = _check_skew(B, T.dim, tol)
    out = -sum(_act_on_slots(B, T.dense)) if T.dim else T.dense
    return type(T).from_dense(out, check=False)


def pullback(g, T, tol: Tolerance | None = None):
    """Group action ``g(T)(x, y, z) = T(gx, gy, gz)``, i.e. ``g^{-1} Theta_{gv} g``."""
    if not isinstance(T, _AlternatingForm):
        raise ContractViolation("pullback acts on ThreeForm or FourForm")
    tol = tol or default_tolerance()
    g = np.asarray(g, dtype=float)
    if g.shape != (T.dim, T.dim):
        raise DimensionMismatch(f"matrix of shape {g.shape} acting on R^{T.dim}")
    if orthogonality_defect(g) > tol.abs:
        raise ContractViolation(f"matrix is not orthogonal (defect {orthogonality_defect(g):.3e})")
    out = T.dense
    for axis in range(T.degree):
        out = np.moveaxis(np.tensordot(out, g, axes=([axis], [0])), -1, axis)
    return type(T).from_dense(out, check=False)


def action_matrix(B, n: int, degree: int = 3) -> np.ndarray:
    """Matrix of ``so_action(B, .)`` on increasing-index coefficient vectors."""
    B = np.asarray(B, dtype=float)
    combos = _combos(n, degree)
    m = len(combos)
    cls = ThreeForm if degree == 3 else FourForm
    stack = np.stack([cls(n, e).dense for e in np.eye(m)]) if m else np.zeros((0,) + (n,) * degree)
    out = np.zeros_like(stack)
    for axis in range(1, degree + 1):
        out -= np.moveaxis(np.tensordot(stack, B, axes=([axis], [0])), -1, axis)
    return out[(slice(None),) + tuple(combos.T)].T if m else np.zeros((0, 0))


def operator_matrix(n: int) -> np.ndarray:
    """Linear map from 3-form coefficients to the stacked operators ``Theta_{e_i}``.

    Shape ``(n * n * n, C(n, 3))``: row ``(i, k, j)`` gives entry ``(k, j)`` of
    ``Theta_{e_i}``.
    """
    m = math.comb(n, 3)
    cols = [ThreeForm(n, e).operators().ravel() for e in np.eye(m)]
    return np.array(cols).T if cols else np.zeros((n**3, 0))


def derived_operators(T: ThreeForm) -> np.ndarray:
    """``out[i, j] = [Theta_i, Theta_j] - Theta_{Theta_i e_j}``; shape (n, n, n, n)."""
    ops = T.operators()
    comm = np.einsum("iab,jbc->ijac", ops, ops)
    comm = comm - comm.transpose(1, 0, 2, 3)
    return comm - np.einsum("iaj,akl->ijkl", ops, ops)


def derived_form(T: ThreeForm, tol: Tolerance | None = None) -> FourForm:
    """The 4-form ``<Omega_{x,y} z, w>`` with ``Omega_{x,y} = (Theta_x . Theta)_y``.

    Raises :class:`ContractViolation` if the result is not totally skew, which
    cannot happen for a genuine 3-form.
    """
    dense = derived_operators(T).transpose(0, 1, 3, 2)
    return FourForm.from_dense(dense, tol=tol)


__all__ = [
    "FourForm",
    "ThreeForm",
    "action_matrix",
    "derived_form",
    "derived_operators",
    "operator_matrix",
    "pullback",
    "so_action",
    "theta_operator",
]
