"""Ternary and binary forms with dense complex coefficients.

Monomial bases are fixed once for the whole package.  Quadratics use the
order ``x^2, y^2, z^2, xy, xz, yz`` so that 6x6 Gram matrices can be
compared entry by entry with hand-written ones; every other degree uses
graded-lexicographic order with ``x > y > z``.

Binary forms store the coefficient of ``s^k t^(d-k)`` at index ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import InputError

SUPPORTED_DEGREES = (1, 2, 3, 4)
ZERO_TOL = 1e-14

QUADRATIC_MONOMIALS = ((2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1))


@lru_cache(maxsize=None)
def monomials(degree: int) -> tuple[tuple[int, int, int], ...]:
    """Exponent triples of the fixed basis in the given degree."""
    if degree == 2:
        return QUADRATIC_MONOMIALS
    return tuple(
        (a, b, degree - a - b) for a in range(degree, -1, -1) for b in range(degree - a, -1, -1)
    )


@lru_cache(maxsize=None)
def monomial_index(degree: int) -> dict[tuple[int, int, int], int]:
    return {m: i for i, m in enumerate(monomials(degree))}


@lru_cache(maxsize=None)
def product_table(d1: int, d2: int) -> np.ndarray:
    """``T[i, j]`` is the index of ``m_i * m_j`` in the degree ``d1 + d2`` basis."""
    target = monomial_index(d1 + d2)
    m1, m2 = monomials(d1), monomials(d2)
    table = np.empty((len(m1), len(m2)), dtype=np.intp)
    for (i, a), (j, b) in product(enumerate(m1), enumerate(m2)):
        table[i, j] = target[(a[0] + b[0], a[1] + b[1], a[2] + b[2])]
    table.setflags(write=False)
    return table


def exponent_key(m: Sequence[int]) -> str:
    return "".join(str(e) for e in m)


def monomial_values(points: np.ndarray, degree: int) -> np.ndarray:
    """Evaluate every basis monomial at ``points`` of shape ``(..., 3)``."""
    pts = np.asarray(points)
    exps = np.array(monomials(degree))
    return np.prod(pts[..., None, :] ** exps, axis=-1)


def monomial_gradients(points: np.ndarray, degree: int) -> np.ndarray:
    """Gradients of the basis monomials, shape ``(..., n_monomials, 3)``."""
    pts = np.asarray(points)
    exps = np.array(monomials(degree))
    out = np.zeros(pts.shape[:-1] + (len(exps), 3), dtype=np.result_type(pts, float))
    for k in range(3):
        lowered = exps.copy()
        lowered[:, k] = np.maximum(lowered[:, k] - 1, 0)
        out[..., k] = exps[:, k] * np.prod(pts[..., None, :] ** lowered, axis=-1)
    return out


def normalize_projective(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Unit Euclidean norm, first non-negligible coordinate real positive."""
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise InputError("cannot normalize the zero vector")
    v = v / n
    k = int(np.argmax(np.abs(v) > tol))
    return v * (abs(v[k]) / v[k])


def chordal_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Sine of the angle between two projective points (wedge-product form)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    wedge = np.outer(u, v) - np.outer(v, u)
    return float(np.linalg.norm(wedge) / (np.sqrt(2.0) * np.linalg.norm(u) * np.linalg.norm(v)))


@dataclass(frozen=True, eq=False)
class ProjPoint:
    """Normalized representative of a point of P^1 or P^2."""

    coords: np.ndarray

    @classmethod
    def from_coords(cls, v: Iterable[complex]) -> "ProjPoint":
        return cls(normalize_projective(np.asarray(list(v), dtype=complex)))

    def __post_init__(self):
        c = np.array(self.coords, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def distance(self, other: "ProjPoint") -> float:
        return chordal_distance(self.coords, other.coords)

    def conj(self) -> "ProjPoint":
        return ProjPoint.from_coords(self.coords.conj())

    def __repr__(self) -> str:
        return f"ProjPoint({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class TernaryForm:
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.degree not in SUPPORTED_DEGREES:
            raise InputError(f"unsupported degree {self.degree}")
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size != len(monomials(self.degree)):
            raise InputError(
                f"degree {self.degree} needs {len(monomials(self.degree))} coefficients, got {c.size}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_terms(cls, degree: int, terms: Mapping) -> "TernaryForm":
        """Build from ``{exponent: coefficient}``; exponents as triples or strings like ``"211"``."""
        index = monomial_index(degree)
        c = np.zeros(len(index), dtype=complex)
        for key, value in terms.items():
            m = tuple(int(ch) for ch in key) if isinstance(key, str) else tuple(key)
            if m not in index:
                raise InputError(f"exponent {key!r} is not a degree-{degree} monomial")
            c[index[m]] += value
        return cls(degree, c)

    @classmethod
    def zero(cls, degree: int) -> "TernaryForm":
        return cls(degree, np.zeros(len(monomials(degree))))

    @classmethod
    def linear(cls, a, b, c) -> "TernaryForm":
        return cls(1, [a, b, c])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(self.norm, 1.0)
        return bool(np.max(np.abs(self.coeffs.imag), initial=0.0) <= tol * scale)

    @property
    def real(self) -> np.ndarray:
        return self.coeffs.real.copy()

    def conj(self) -> "TernaryForm":
        return TernaryForm(self.degree, self.coeffs.conj())

    def normalized(self) -> "TernaryForm":
        return TernaryForm(self.degree, normalize_projective(self.coeffs))

    def terms(self) -> dict[str, complex]:
        return {exponent_key(m): complex(v) for m, v in zip(monomials(self.degree), self.coeffs)}

    def __call__(self, p) -> complex:
        return eval_form(self, p)

    def __add__(self, other: "TernaryForm") -> "TernaryForm":
        _check_same_degree(self, other)
        return TernaryForm(self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: "TernaryForm") -> "TernaryForm":
        _check_same_degree(self, other)
        return TernaryForm(self.degree, self.coeffs - other.coeffs)

    def __neg__(self) -> "TernaryForm":
        return TernaryForm(self.degree, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, TernaryForm):
            return multiply(self, other)
        return TernaryForm(self.degree, self.coeffs * other)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        parts = []
        for m, v in zip(monomials(self.degree), self.coeffs):
            if abs(v) > 1e-14:
                mono = "*".join(f"{s}^{e}" if e > 1 else s for s, e in zip("xyz", m) if e) or "1"
                val = f"{v.real:.6g}" if abs(v.imag) < 1e-14 else f"({v:.6g})"
                parts.append(f"{val}*{mono}")
        return f"TernaryForm[{self.degree}](" + (" + ".join(parts) or "0") + ")"


def _check_same_degree(f: TernaryForm, g: TernaryForm):
    if f.degree != g.degree:
        raise InputError(f"degree mismatch: {f.degree} vs {g.degree}")


@dataclass(frozen=True, eq=False)
class BinaryForm:
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size != self.degree + 1:
            raise InputError(f"binary form of degree {self.degree} needs {self.degree + 1} coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, s, t) -> complex:
        k = np.arange(self.degree + 1)
        return complex(np.sum(self.coeffs * s**k * t ** (self.degree - k)))

    def __mul__(self, other):
        if isinstance(other, BinaryForm):
            return BinaryForm(self.degree + other.degree, np.convolve(self.coeffs, other.coeffs))
        return BinaryForm(self.degree, self.coeffs * other)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"BinaryForm[{self.degree}]({np.array2string(self.coeffs, precision=6)})"


def _coords(p) -> np.ndarray:
    return p.coords if isinstance(p, ProjPoint) else np.asarray(p, dtype=complex)


def eval_form(f: TernaryForm, p) -> complex:
    """Value of ``f`` at the stored representative of ``p``."""
    return complex(np.dot(f.coeffs, monomial_values(_coords(p), f.degree)))


def multiply(f: TernaryForm, g: TernaryForm) -> TernaryForm:
    d = f.degree + g.degree
    if d not in (2, 4):
        raise InputError(f"product degree {d} unsupported (need 2 or 4)")
    out = np.zeros(len(monomials(d)), dtype=complex)
    np.add.at(out, product_table(f.degree, g.degree), np.outer(f.coeffs, g.coeffs))
    return TernaryForm(d, out)


def restrict_to_line(f: TernaryForm, p, q) -> BinaryForm:
    """``g(s, t) = f(s p + t q)`` expanded exactly."""
    pc, qc = _coords(p), _coords(q)
    if np.linalg.matrix_rank(np.vstack([pc, qc]), tol=1e-12) < 2:
        raise InputError("points spanning the line are linearly dependent")
    linear = [np.array([qc[i], pc[i]]) for i in range(3)]  # index k <-> s^k t^(1-k)
    out = np.zeros(f.degree + 1, dtype=complex)
    for m, c in zip(monomials(f.degree), f.coeffs):
        if c == 0:
            continue
        poly = np.array([1.0 + 0j])
        for i, e in enumerate(m):
            for _ in range(e):
                poly = np.convolve(poly, linear[i])
        out += c * poly
    return BinaryForm(f.degree, out)


def line_basis(line) -> np.ndarray:
    """Two orthonormal points spanning the line ``{l . x = 0}`` (rows)."""
    l = np.asarray(line.coeffs if isinstance(line, TernaryForm) else line, dtype=complex)
    _, _, vh = np.linalg.svd(l.reshape(1, 3))
    return vh[1:].conj()


def _raw_binary_roots(g: BinaryForm) -> list[np.ndarray]:
    """All roots as unit vectors in C^2, repeated by multiplicity."""
    c = g.coeffs
    d = g.degree
    scale = np.linalg.norm(c)
    if scale == 0:
        raise InputError("the zero binary form has no isolated roots")
    # work in the chart with the larger leading coefficient
    if abs(c[d]) >= abs(c[0]):
        poly = c[::-1]  # highest power of s first, t = 1
        def to_point(r):
            return np.array([r, 1.0])
        at_infinity = np.array([1.0, 0.0])
    else:
        poly = c  # highest power of t first, s = 1
        def to_point(r):
            return np.array([1.0, r])
        at_infinity = np.array([0.0, 1.0])
    lead = 0
    while lead < d and abs(poly[lead]) <= ZERO_TOL * scale:
        lead += 1
    roots = [at_infinity.astype(complex)] * lead
    rest = poly[lead:]
    if rest.size > 1:
        roots += [to_point(r) for r in np.roots(rest)]
    return [v / np.linalg.norm(v) for v in roots]


def _align(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate the phase of ``v`` onto ``u``."""
    ip = np.vdot(u, v)
    return v if ip == 0 else v * (abs(ip) / ip)


def binary_roots(g: BinaryForm, cluster_tol: float = 1e-6) -> list[tuple[ProjPoint, int]]:
    """Roots of a binary form with multiplicities; nearby roots are merged."""
    clusters: list[list[np.ndarray]] = []
    for r in _raw_binary_roots(g):
        for cl in clusters:
            if chordal_distance(cl[0], r) < cluster_tol:
                cl.append(_align(cl[0], r))
                break
        else:
            clusters.append([r])
    return [(ProjPoint.from_coords(np.mean(cl, axis=0)), len(cl)) for cl in clusters]


def _square_coeffs(q: np.ndarray) -> np.ndarray:
    return np.convolve(q, q)


def _refine_binary_root(q: np.ndarray, g: np.ndarray, iters: int = 12) -> np.ndarray:
    """Gauss-Newton on ``q^2 = g`` for a binary quadratic ``q``."""
    for _ in range(iters):
        r = _square_coeffs(q) - g
        jac = np.zeros((5, 3), dtype=complex)
        for j in range(3):
            e = np.zeros(3, dtype=complex)
            e[j] = 1.0
            jac[:, j] = 2.0 * np.convolve(q, e)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        q = q + step
        if np.linalg.norm(step) <= 1e-16 * np.linalg.norm(q):
            break
    return q


def _unit_with_scale(q: np.ndarray) -> tuple[np.ndarray, complex]:
    """Split ``q = a * q_hat`` with ``q_hat`` projectively normalized; return ``(q_hat, a^2)``."""
    q_hat = normalize_projective(q)
    k = int(np.argmax(np.abs(q_hat)))
    a = q[k] / q_hat[k]
    return q_hat, complex(a * a)


def binary_square_root(g: BinaryForm) -> tuple[np.ndarray, float]:
    """Best ``q`` with ``q^2 ~ g`` and its relative residual."""
    if g.degree != 4:
        raise InputError("square detection needs a binary quartic")
    gc = g.coeffs
    scale = np.linalg.norm(gc)
    if scale == 0:
        return np.zeros(3, dtype=complex), np.inf
    roots = _raw_binary_roots(g)
    best, best_res = None, np.inf
    for (a, b), (c, d) in (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))):
        factors = []
        for u, v in ((roots[a], roots[b]), (roots[c], roots[d])):
            m = u + _align(u, v)
            if np.linalg.norm(m) < 1e-12:
                m = u
            m = m / np.linalg.norm(m)
            factors.append(np.array([-m[0], m[1]]))  # vanishes at (s:t) = (m0:m1)
        q0 = np.convolve(factors[0], factors[1])
        sq = _square_coeffs(q0)
        lam = np.vdot(sq, gc) / np.vdot(sq, sq)
        q = _refine_binary_root(np.sqrt(lam) * q0, gc)
        res = np.linalg.norm(_square_coeffs(q) - gc) / scale
        if res < best_res:
            best, best_res = q, res
    return best, float(best_res)


def perfect_square_binary_quartic(g: BinaryForm, tol: float = 1e-8) -> Optional[tuple[BinaryForm, complex]]:
    """Return ``(q, c)`` with ``g ~ c q^2`` and ``q`` normalized, or ``None``."""
    q, res = binary_square_root(g)
    if res > tol:
        return None
    q_hat, c = _unit_with_scale(q)
    return BinaryForm(2, q_hat), c


# Three fixed points in general position; the square root of a quartic is
# read off on the three lines they span.
_ANCHORS = np.array(
    [[0.8090, 0.3117, -0.4981], [-0.2764, 0.9123, 0.3019], [0.4472, -0.1845, 0.8754]]
)


def _refine_ternary_root(q: np.ndarray, h: np.ndarray, iters: int = 15) -> np.ndarray:
    table = product_table(2, 2)
    for _ in range(iters):
        sq = np.zeros(15, dtype=complex)
        np.add.at(sq, table, np.outer(q, q))
        r = sq - h
        jac = np.zeros((15, 6), dtype=complex)
        for j in range(6):
            np.add.at(jac[:, j], table[:, j], 2.0 * q)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        q = q + step
        if np.linalg.norm(step) <= 1e-16 * np.linalg.norm(q):
            break
    return q


def _quadratic_from_bilinear(values: np.ndarray) -> np.ndarray:
    """Coefficients of ``q`` given its Gram matrix in the anchor basis."""
    inv = np.linalg.inv(_ANCHORS)  # rows of _ANCHORS are the basis points
    mat = inv @ values @ inv.T  # q(x) = x^T mat x
    return np.array(
        [mat[0, 0], mat[1, 1], mat[2, 2], 2 * mat[0, 1], 2 * mat[0, 2], 2 * mat[1, 2]], dtype=complex
    )


def perfect_square_quartic(h: TernaryForm, tol: float = 1e-8) -> Optional[tuple[TernaryForm, complex]]:
    """Detect ``h = c q^2``; return normalized ``q`` and ``c`` or ``None``."""
    if h.degree != 4:
        raise InputError("square detection needs a ternary quartic")
    scale = h.norm
    if scale == 0:
        return None
    pieces = {}
    for a, b in ((0, 1), (0, 2), (1, 2)):
        g = restrict_to_line(h, _ANCHORS[a], _ANCHORS[b])
        if g.norm <= 1e-12 * scale:
            return None
        r, res = binary_square_root(g)
        if res > max(tol, 1e-6):
            return None
        pieces[(a, b)] = r  # r0 = q(P_b), r1 = 2 B(P_a, P_b), r2 = q(P_a)
    best, best_res = None, np.inf
    table = product_table(2, 2)
    for s1, s2 in product((1, -1), repeat=2):
        r01, r02, r12 = pieces[(0, 1)], s1 * pieces[(0, 2)], s2 * pieces[(1, 2)]
        vals = np.zeros((3, 3), dtype=complex)
        vals[0, 0] = (r01[2] + r02[2]) / 2
        vals[1, 1] = (r01[0] + r12[2]) / 2
        vals[2, 2] = (r02[0] + r12[0]) / 2
        vals[0, 1] = vals[1, 0] = r01[1] / 2
        vals[0, 2] = vals[2, 0] = r02[1] / 2
        vals[1, 2] = vals[2, 1] = r12[1] / 2
        q = _refine_ternary_root(_quadratic_from_bilinear(vals), h.coeffs)
        sq = np.zeros(15, dtype=complex)
        np.add.at(sq, table, np.outer(q, q))
        res = np.linalg.norm(sq - h.coeffs) / scale
        if res < best_res:
            best, best_res = q, res
    if best_res > tol:
        return None
    q_hat, c = _unit_with_scale(best)
    return TernaryForm(2, q_hat), c
