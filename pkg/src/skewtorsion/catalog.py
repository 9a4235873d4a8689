"""Concrete representations and the solver for the space of g-valued 3-forms.

Entries:

* ``so n``: the defining representation of so(n) on R^n.
* ``su n``: su(n) realized as real 2n x 2n matrices on C^n = R^2n.
* ``adjoint-so k`` / ``adjoint-su k``: a compact algebra acting on itself,
  with the bracket as its 3-form.
* ``quaternionic n``: sp(1) + sp(n) on H^n = R^4n.
* ``unitary n``: u(n) on C^n = R^2n.

Complex and quaternionic matrices never appear: everything is built from
their real realizations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractViolation
from .exterior import FourForm, ThreeForm, _perm_sign, operator_matrix
from .lie import Subalgebra
from .numerics import SubspaceBasis, Tolerance, default_tolerance, nullspace, skew_basis


def build_so(n: int) -> tuple[int, Subalgebra]:
    """so(n) with basis ``(E_ji - E_ij)/sqrt(2)``, i < j."""
    if n < 2:
        raise ContractViolation(f"so(n) needs n >= 2, got {n}")
    return n, Subalgebra(n, skew_basis(n))


def cross_product_form() -> ThreeForm:
    """``e1 ^ e2 ^ e3`` on R^3, so that ``Theta_x y = x cross y``."""
    return ThreeForm.from_entries(3, [[0, 1, 2, 1.0]])


# complex and quaternionic realizations ------------------------------------


def _complex_block(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    """Real form of ``re + i im`` acting on (Re z, Im z) coordinates."""
    return np.block([[re, -im], [im, re]])


def _su_generators(k: int) -> list[np.ndarray]:
    """Generalized Gell-Mann basis of su(k), multiplied by i, realized on R^2k."""
    zero = np.zeros((k, k))
    gens = []
    for a in range(k):
        for b in range(a + 1, k):
            skew = np.zeros((k, k))
            skew[a, b], skew[b, a] = -1.0, 1.0
            gens.append(_complex_block(skew, zero))
            sym = np.zeros((k, k))
            sym[a, b] = sym[b, a] = 1.0
            gens.append(_complex_block(zero, sym))
    for m in range(1, k):
        d = np.zeros((k, k))
        d[np.arange(m), np.arange(m)] = 1.0
        d[m, m] = -m
        gens.append(_complex_block(zero, d / math.sqrt(m * (m + 1) / 2)))
    return gens


def complex_structure(n: int) -> np.ndarray:
    """Multiplication by i on C^n = R^2n."""
    return _complex_block(np.zeros((n, n)), np.eye(n))


def build_su(n: int) -> tuple[int, Subalgebra]:
    if n < 2:
        raise ContractViolation(f"su(n) needs n >= 2, got {n}")
    return 2 * n, Subalgebra.span(_su_generators(n), n=2 * n)


def build_unitary(n: int) -> tuple[int, Subalgebra]:
    """u(n) = su(n) + R i as real 2n x 2n matrices commuting with the complex structure."""
    if n < 2:
        raise ContractViolation(f"u(n) needs n >= 2, got {n}")
    gens = _su_generators(n) + [complex_structure(n)]
    return 2 * n, Subalgebra.span(gens, n=2 * n)


_QUAT_UNITS = np.eye(4)


def quat_mul(p, q) -> np.ndarray:
    """Product of quaternions given as coordinates in (1, i, j, k)."""
    a0, a1, a2, a3 = p
    b0, b1, b2, b3 = q
    return np.array(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ]
    )


def left_mult(p) -> np.ndarray:
    return np.array([quat_mul(p, e) for e in _QUAT_UNITS]).T


def right_mult(q) -> np.ndarray:
    return np.array([quat_mul(e, q) for e in _QUAT_UNITS]).T


def _conj(p) -> np.ndarray:
    return np.asarray(p, dtype=float) * np.array([1.0, -1.0, -1.0, -1.0])


def _sp1_sp_n_generators(n: int) -> list[np.ndarray]:
    N = 4 * n
    gens = [np.kron(np.eye(n), right_mult(q)) for q in _QUAT_UNITS[1:]]
    for a in range(n):
        for q in _QUAT_UNITS[1:]:
            M = np.zeros((N, N))
            M[4 * a : 4 * a + 4, 4 * a : 4 * a + 4] = left_mult(q)
            gens.append(M)
    for a in range(n):
        for b in range(a + 1, n):
            for p in _QUAT_UNITS:
                M = np.zeros((N, N))
                M[4 * a : 4 * a + 4, 4 * b : 4 * b + 4] = left_mult(p)
                M[4 * b : 4 * b + 4, 4 * a : 4 * a + 4] = -left_mult(_conj(p))
                gens.append(M)
    return gens


def _alternate(arr: np.ndarray) -> np.ndarray:
    """Total antisymmetrization of a 4-tensor (no 1/4! factor)."""
    out = np.zeros_like(arr)
    for p in itertools.permutations(range(arr.ndim)):
        out += _perm_sign(p) * arr.transpose(p)
    return out


def quaternionic_block_form(n: int) -> FourForm:
    """``e1^e2^e3^e4 + ... + e_{4n-3}^e_{4n-2}^e_{4n-1}^e_{4n}`` (one term per quaternionic line)."""
    return FourForm.from_entries(4 * n, [[4 * a, 4 * a + 1, 4 * a + 2, 4 * a + 3, 1.0] for a in range(n)])


def quaternionic_kahler_form(n: int) -> FourForm:
    """``w_I^w_I + w_J^w_J + w_K^w_K`` for the right complex structures, scaled so Omega(e1..e4) = 1.

    It agrees with :func:`quaternionic_block_form` on every coefficient with
    at least three indices in one quaternionic line and is sp(1) + sp(n)
    invariant; the block form alone is not once n > 1.
    """
    N = 4 * n
    dense = np.zeros((N,) * 4)
    for q in _QUAT_UNITS[1:]:
        w = np.kron(np.eye(n), right_mult(q))
        dense += _alternate(np.einsum("ab,cd->abcd", w, w))
    dense /= dense[0, 1, 2, 3]
    return FourForm.from_dense(dense)


def build_quaternionic(n: int) -> tuple[int, Subalgebra, FourForm]:
    """sp(1) + sp(n) on H^n = R^4n with its invariant 4-form.

    Coordinates are ordered (1, i, j, k) within each quaternionic line; sp(1)
    acts by right multiplication by imaginary quaternions, sp(n) by
    quaternion-antihermitian matrices on the left.
    """
    if n < 2:
        raise ContractViolation(f"quaternionic case needs n >= 2, got {n}")
    N = 4 * n
    return N, Subalgebra.span(_sp1_sp_n_generators(n), n=N), quaternionic_kahler_form(n)


# adjoint systems ------------------------------------------------------------


def _compact_basis(name: str, k: int) -> list[np.ndarray]:
    if name == "so":
        if k < 3:
            raise ContractViolation(f"adjoint so(k) needs k >= 3, got {k}")
        return list(skew_basis(k))
    if name == "su":
        if k < 2:
            raise ContractViolation(f"adjoint su(k) needs k >= 2, got {k}")
        return _su_generators(k)
    raise ContractViolation(f"unknown compact algebra {name!r}; expected 'so' or 'su'")


def bracket_form(basis, tol: Tolerance | None = None) -> ThreeForm:
    """3-form ``<[x, y], z>`` of a compact matrix algebra in the coordinates of ``basis``.

    ``basis`` must be orthonormal for ``<A, B> = -tr(AB)``, which equals the
    Frobenius product on skew matrices.
    """
    tol = tol or default_tolerance()
    basis = np.asarray(basis, dtype=float)
    flat = basis.reshape(len(basis), -1)
    defect = float(np.abs(flat @ flat.T - np.eye(len(basis))).max())
    if defect > tol.abs:
        raise ContractViolation(f"matrix basis is not orthonormal (defect {defect:.3e})")
    br = np.einsum("iab,jbc->ijac", basis, basis)
    br = br - br.transpose(1, 0, 2, 3)
    dense = np.einsum("ijab,kab->ijk", br, basis)
    return ThreeForm.from_dense(dense, tol=tol)


def adjoint_basis(name: str, k: int) -> np.ndarray:
    """Orthonormal matrix basis of so(k) or su(k); its coordinates define V."""
    gens = np.array(_compact_basis(name, k))
    return gens / np.linalg.norm(gens, axis=(1, 2))[:, None, None]


def build_adjoint_system(name: str, k: int, tol: Tolerance | None = None):
    """The system [g, bracket, Ad(G)] for g = so(k) or su(k)."""
    from .holonomy import SkewTorsionSystem

    theta = bracket_form(adjoint_basis(name, k), tol)
    algebra = Subalgebra.span(theta.operators(), n=theta.dim, tol=tol)
    return SkewTorsionSystem(theta.dim, theta, algebra, tol=tol)


def cross_product_system(tol: Tolerance | None = None):
    from .holonomy import SkewTorsionSystem

    return SkewTorsionSystem(3, cross_product_form(), build_so(3)[1], tol=tol)


# form space -----------------------------------------------------------------


def form_space_constraints(S: Subalgebra) -> np.ndarray:
    """Linear map sending 3-form coefficients to the parts of ``Theta_{e_i}`` off span(S)."""
    n = S.ambient_dim
    ops = operator_matrix(n).reshape(n, n * n, -1)
    if S.dim:
        ops = ops - np.einsum("pa,aq->pq", S.flat.T, S.flat)[None] @ ops
    return ops.reshape(n * n * n, -1)


def solve_form_space(S: Subalgebra, tol: Tolerance | None = None) -> list[ThreeForm]:
    """Orthonormal basis of the 3-forms whose operators all lie in ``S``."""
    tol = tol or default_tolerance()
    n = S.ambient_dim
    if n < 3:
        return []
    kernel: SubspaceBasis = nullspace(form_space_constraints(S), tol)
    return [ThreeForm(n, c) for c in kernel.vectors]


# registry -------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    min_parameter: int
    ambient_formula: str
    algebra_formula: str
    ambient_dim: Callable[[int], int]
    algebra_dim: Callable[[int], int]
    builder: Callable[[int], tuple]
    has_form: bool = False
    symbol: str = "n"

    def build(self, parameter: int):
        if parameter < self.min_parameter:
            raise ContractViolation(f"{self.name} needs parameter >= {self.min_parameter}, got {parameter}")
        return self.builder(parameter)


def _adjoint_entry(name: str, k: int):
    sys = build_adjoint_system(name, k)
    return sys.dim, sys.algebra, sys.theta


CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("so", 2, "n", "n(n−1)/2", lambda n: n, lambda n: n * (n - 1) // 2, build_so),
        CatalogEntry("su", 2, "2n", "n²−1", lambda n: 2 * n, lambda n: n * n - 1, build_su),
        CatalogEntry(
            "adjoint-so", 3, "k(k−1)/2", "k(k−1)/2", lambda k: k * (k - 1) // 2, lambda k: k * (k - 1) // 2,
            lambda k: _adjoint_entry("so", k), has_form=True, symbol="k",
        ),
        CatalogEntry(
            "adjoint-su", 2, "k²−1", "k²−1", lambda k: k * k - 1, lambda k: k * k - 1,
            lambda k: _adjoint_entry("su", k), has_form=True, symbol="k",
        ),
        CatalogEntry(
            "quaternionic", 2, "4n", "3+n(2n+1)", lambda n: 4 * n, lambda n: 3 + n * (2 * n + 1),
            lambda n: build_quaternionic(n)[:2],
        ),
        CatalogEntry("unitary", 2, "2n", "n²", lambda n: 2 * n, lambda n: n * n, build_unitary),
    ]
}


def catalog_rows() -> list[tuple[str, str, str, str]]:
    return [(e.name, f"{e.symbol}≥{e.min_parameter}", e.ambient_formula, e.algebra_formula) for e in CATALOG.values()]


__all__ = [
    "CATALOG",
    "CatalogEntry",
    "adjoint_basis",
    "bracket_form",
    "build_adjoint_system",
    "build_quaternionic",
    "build_so",
    "build_su",
    "build_unitary",
    "catalog_rows",
    "complex_structure",
    "cross_product_form",
    "cross_product_system",
    "form_space_constraints",
    "left_mult",
    "quat_mul",
    "quaternionic_block_form",
    "quaternionic_kahler_form",
    "right_mult",
    "solve_form_space",
]
