"""Gram tensors of ternary quartics in the monomial basis ``x^2, y^2, z^2, xy, xz, yz``.

A Gram tensor is stored as its symmetric 6x6 matrix ``G``; the quartic it
represents is ``X G X^T`` with ``X`` the row of quadratic monomials.  The image
of a tensor is the column space of ``G`` read as coefficient vectors of
quadratic forms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import CertificateError, InputError
from .forms import TernaryForm, monomial_index, product_table

DEFAULT_RANK_TOL = 1e-7
SQUARE_RANK_TOL = 1e-9
PSD_TOL = 1e-9
REAL_TOL = 1e-10


class SingularSystemError(CertificateError):
    """The subspace does not support a unique Gram tensor."""


class NoSolutionError(CertificateError):
    """The form does not lie in the square of the subspace."""


class RankMismatchError(CertificateError):
    pass


@dataclass(frozen=True, eq=False)
class GramTensor:
    entries: np.ndarray
    diagnostics: Mapping = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.shape != (6, 6):
            raise InputError(f"Gram tensors are 6x6, got {a.shape}")
        a = (a + a.T) / 2
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.entries.imag)))

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return self.max_imag <= tol * max(1.0, self.norm)

    @property
    def real(self) -> np.ndarray:
        return self.entries.real.copy()

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries.real)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        if not self.is_real():
            return False
        ev = self.eigenvalues()
        return bool(ev[0] >= -tol * max(abs(ev[-1]), 1e-300))

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    def rank(self, tol: float = DEFAULT_RANK_TOL) -> int:
        s = self.singular_values()
        return int(np.sum(s > tol * s[0])) if s[0] > 0 else 0

    def image(self, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        return image(self, tol)

    def conj(self) -> "GramTensor":
        return GramTensor(self.entries.conj())

    def __add__(self, other: "GramTensor") -> "GramTensor":
        return GramTensor(self.entries + other.entries)

    def __sub__(self, other: "GramTensor") -> "GramTensor":
        return GramTensor(self.entries - other.entries)

    def __mul__(self, scalar) -> "GramTensor":
        return GramTensor(self.entries * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of quadratics (degree 2) or quartics (degree 4) with an orthonormal basis."""

    basis: np.ndarray
    degree: int = 2

    def __post_init__(self):
        b = np.array(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, vectors, degree: int = 2, tol: float = 1e-9) -> "Subspace":
        """Orthonormal basis of the span of coefficient vectors (rows) or forms."""
        rows = [v.coeffs if isinstance(v, TernaryForm) else np.asarray(v) for v in vectors]
        if not rows:
            return cls(np.zeros((len(monomial_index(degree)), 0)), degree)
        m = np.array(rows, dtype=complex).T
        u, s, _ = np.linalg.svd(m, full_matrices=False)
        r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
        return cls(u[:, :r], degree)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def forms(self) -> list[TernaryForm]:
        return [TernaryForm(self.degree, self.basis[:, i]) for i in range(self.dim)]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def distance(self, v) -> float:
        """Relative distance of a vector from the subspace."""
        v = np.asarray(v.coeffs if isinstance(v, TernaryForm) else v, dtype=complex)
        return float(np.linalg.norm(v - self.projector() @ v) / max(np.linalg.norm(v), 1e-300))

    def contains(self, other: "Subspace", tol: float = 1e-8) -> bool:
        if other.dim == 0:
            return True
        resid = other.basis - self.projector() @ other.basis
        return bool(np.linalg.norm(resid, 2) <= tol)

    def conj(self) -> "Subspace":
        return Subspace(self.basis.conj(), self.degree)

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace.span(np.hstack([self.basis, other.basis]).T, self.degree)

    def real_basis(self) -> np.ndarray:
        """Real orthonormal basis, for a subspace closed under conjugation."""
        both = np.hstack([self.basis.real, self.basis.imag])
        u, s, _ = np.linalg.svd(both, full_matrices=False)
        return u[:, : self.dim]


@dataclass(frozen=True)
class GramPencil:
    """Affine space ``G0 + sum(lam_i B_i)`` of all Gram matrices of a quartic."""

    base: GramTensor
    directions: np.ndarray

    def at(self, lam: Sequence[float]) -> GramTensor:
        return GramTensor(self.base.entries + np.tensordot(np.asarray(lam), self.directions, axes=1))

    def coordinates(self, theta: GramTensor) -> np.ndarray:
        """``lam`` with ``G(lam) = theta`` for a tensor in the pencil (least squares)."""
        a = self.directions.reshape(6, 36).T
        lam, *_ = np.linalg.lstsq(a, (theta.entries - self.base.entries).reshape(36), rcond=None)
        return lam


@dataclass(frozen=True)
class FaceDescriptor:
    rank: int
    face_dim: int
    image: Subspace


def gram_map(theta) -> TernaryForm:
    """Quartic ``X G X^T`` of a Gram tensor or raw 6x6 matrix."""
    g = theta.entries if isinstance(theta, GramTensor) else np.asarray(theta, dtype=complex)
    out = np.zeros(15, dtype=complex)
    np.add.at(out, product_table(2, 2), g)
    return TernaryForm(4, out)


def _kernel_directions() -> np.ndarray:
    idx = {(0, 1): 0, (0, 2): 1, (1, 2): 2, (0, 5): 3, (1, 4): 4, (2, 3): 5}
    # each lam_i pairs an off-diagonal entry with the entry it trades against
    partner = {0: [((3, 3), -2.0)], 1: [((4, 4), -2.0)], 2: [((5, 5), -2.0)],
               3: [((3, 4), -1.0)], 4: [((3, 5), -1.0)], 5: [((4, 5), -1.0)]}
    dirs = np.zeros((6, 6, 6))
    for (i, j), k in idx.items():
        dirs[k, i, j] = dirs[k, j, i] = 1.0
        for (a, b), v in partner[k]:
            dirs[k, a, b] = v
            dirs[k, b, a] = v
    return dirs


KERNEL_DIRECTIONS = _kernel_directions()
KERNEL_DIRECTIONS.setflags(write=False)


def gram_pencil(f: TernaryForm) -> GramPencil:
    """All Gram matrices of a real quartic as ``G0 + sum(lam_i B_i)``."""
    if f.degree != 4:
        raise InputError("Gram pencils are defined for quartics")
    if not f.is_real():
        raise InputError("Gram pencil requires a real quartic")
    c = {k: v.real for k, v in f.terms().items()}
    g = np.zeros((6, 6))
    for i, key in enumerate(("400", "040", "004", "220", "202", "022")):
        g[i, i] = c[key]
    for (i, j), key in {(0, 3): "310", (0, 4): "301", (1, 3): "130", (1, 5): "031",
                        (2, 4): "103", (2, 5): "013", (3, 4): "211", (3, 5): "121",
                        (4, 5): "112"}.items():
        g[i, j] = g[j, i] = c[key] / 2
    return GramPencil(GramTensor(g), KERNEL_DIRECTIONS.copy())


def image(theta: GramTensor, rank_tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Image of a Gram tensor as a subspace of quadratics."""
    a = theta.entries
    if theta.is_real():
        w, v = np.linalg.eigh(a.real)
        scale = np.max(np.abs(w))
        keep = np.abs(w) > rank_tol * scale if scale > 0 else np.zeros(6, bool)
        order = np.argsort(-np.abs(w[keep]))
        return Subspace(v[:, keep][:, order].astype(complex))
    u, s, _ = np.linalg.svd(a)
    r = int(np.sum(s > rank_tol * s[0]))
    return Subspace(u[:, :r])


def _sym2_pairs(k: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(k) for b in range(a, k)]


def sym2_product_matrix(basis: np.ndarray) -> np.ndarray:
    """Columns: coefficient vectors of ``u_a u_b`` (a <= b) for basis columns ``u``."""
    k = basis.shape[1]
    table = product_table(2, 2)
    cols = []
    for a, b in _sym2_pairs(k):
        out = np.zeros(15, dtype=complex)
        np.add.at(out, table, np.outer(basis[:, a], basis[:, b]))
        cols.append(out)
    return np.array(cols).T if cols else np.zeros((15, 0), dtype=complex)


def square_space(U: Subspace, tol: float = SQUARE_RANK_TOL) -> Subspace:
    """Span of all pairwise products of ``U`` as a subspace of quartics."""
    if U.dim == 0:
        return Subspace(np.zeros((15, 0)), 4)
    m = sym2_product_matrix(U.basis)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    r = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return Subspace(u[:, :r], 4)


def face_dimension(U: Subspace, tol: float = SQUARE_RANK_TOL) -> int:
    """``dim Sym^2 U - dim U^2``."""
    return comb(U.dim + 1, 2) - square_space(U, tol).dim


def describe_face(theta: GramTensor, rank_tol: float = DEFAULT_RANK_TOL) -> FaceDescriptor:
    U = image(theta, rank_tol)
    return FaceDescriptor(U.dim, face_dimension(U), U)


def _sym_from_pairs(values: np.ndarray, k: int) -> np.ndarray:
    a = np.zeros((k, k), dtype=complex)
    for v, (i, j) in zip(values, _sym2_pairs(k)):
        a[i, j] = a[j, i] = v if i == j else v / 2
    return a


def gram_from_image(f: TernaryForm, U: Subspace, tol: float = 1e-9, cond_max: float = 1e10) -> GramTensor:
    """The unique Gram tensor of ``f`` whose image lies in ``U``.

    Solved by pivoted QR on the map ``Sym^2 U -> quartics``.  The condition
    number and relative residual are attached as diagnostics.
    """
    basis = U.basis
    k = basis.shape[1]
    m = sym2_product_matrix(basis)
    q, r, piv = scipy.linalg.qr(m, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    cond = float(d[0] / d[-1]) if d[-1] > 0 else np.inf
    if cond > cond_max:
        raise SingularSystemError(f"Sym^2 U -> quartics is singular (condition {cond:.3g})")
    y = scipy.linalg.solve_triangular(r, q.conj().T @ f.coeffs)
    coef = np.empty_like(y)
    coef[piv] = y
    resid = float(np.linalg.norm(m @ coef - f.coeffs) / max(f.norm, 1e-300))
    if resid > tol:
        raise NoSolutionError(f"form is not in U^2 (relative residual {resid:.3g})")
    g = basis @ _sym_from_pairs(coef, k) @ basis.T
    return GramTensor(g, {"condition": cond, "residual": resid})


def _gram_jacobian(q: np.ndarray) -> np.ndarray:
    """Derivative of ``vec(Q) -> mu(Q Q^T)`` as a 15 x (6 k) matrix."""
    k = q.shape[1]
    table = product_table(2, 2)
    cols = []
    for idx in range(6 * k):
        dq = np.zeros((6, k), dtype=complex)
        dq.flat[idx] = 1.0
        d = dq @ q.T
        out = np.zeros(15, dtype=complex)
        np.add.at(out, table, d + d.T)
        cols.append(out)
    return np.array(cols).T


def polish_low_rank(f: TernaryForm, theta: GramTensor, rank: int, iters: int = 6) -> GramTensor:
    """Gauss-Newton refinement of a rank-``rank`` Gram tensor of ``f``.

    Writes ``theta = Q Q^T`` (bilinear transpose) with ``Q`` of size
    ``6 x rank`` and drives ``mu(Q Q^T) - f`` to zero with minimum-norm
    steps, which ignore the orthogonal gauge freedom of ``Q``.  The isolated
    low-rank Gram tensors near ``theta`` are fixed points.
    """
    a = theta.entries
    u, s, vh = np.linalg.svd(a)
    basis = u[:, :rank]
    core = np.linalg.pinv(basis) @ a @ np.linalg.pinv(basis).T
    q = basis @ scipy.linalg.sqrtm((core + core.T) / 2)
    scale = max(f.norm, 1e-300)
    best = (np.inf, a)
    for _ in range(iters):
        g = q @ q.T
        r = gram_map(g).coeffs - f.coeffs
        res = float(np.linalg.norm(r) / scale)
        if res < best[0]:
            best = (res, g)
        if res < 1e-15:
            break
        step, *_ = np.linalg.lstsq(_gram_jacobian(q), -r, rcond=None)
        q = q + step.reshape(q.shape)
    g = best[1]
    if theta.is_real():
        g = g.real
    return GramTensor(g, {**theta.diagnostics, "residual": best[0]})


def triangular_sos(theta: GramTensor, basis: Sequence, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Lower-triangular ``a`` with ``f = sum_i (sum_{j<=i} a_ij p_j)^2``.

    ``basis`` lists quadratics spanning the image of the real psd tensor.
    """
    p = np.array([b.coeffs if isinstance(b, TernaryForm) else b for b in basis], dtype=complex).T
    r = theta.rank(rank_tol)
    if p.shape[1] != r or np.linalg.matrix_rank(p, tol=1e-10) != r:
        raise RankMismatchError(f"basis of size {p.shape[1]} does not match rank {r}")
    pinv = np.linalg.pinv(p)
    k = (pinv @ theta.entries @ pinv.T).real
    k = (k + k.T) / 2
    rev = np.eye(r)[::-1]
    c = np.linalg.cholesky(rev @ k @ rev)
    return rev @ c.T @ rev
