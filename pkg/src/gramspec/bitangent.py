"""The 28 bitangents of a smooth plane quartic.

Lines are found by Newton's method on the square system
``f|_L = q^2`` (five equations in the two chart coordinates of ``L`` and the
three coefficients of the binary quadratic ``q``), restarted from random
complex points in a fresh random affine chart of the dual plane per batch.
Every candidate is then certified independently by restricting ``f`` to the
line and testing the restriction for being a perfect square.  Completeness is
enforced by the known count of 28.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import CountMismatchError, FiveConcurrentError, InputError, NotSmoothError, CertificateError
from .forms import (
    BinaryForm,
    ProjPoint,
    TernaryForm,
    binary_roots,
    binary_square_root,
    chordal_distance,
    line_basis,
    monomial_gradients,
    monomial_values,
    normalize_projective,
    restrict_to_line,
)
from .gram import gram_pencil

log = logging.getLogger(__name__)

N_BITANGENTS = 28
CERT_TOL = 1e-8
DISTINCT_TOL = 1e-6
REAL_TOL = 1e-9


class NotABitangentError(CertificateError):
    pass


@dataclass(frozen=True, eq=False)
class Bitangent:
    index: int
    line: TernaryForm
    contacts: tuple[ProjPoint, ProjPoint]
    real: bool
    hyperflex: bool
    residual: float

    @property
    def coeffs(self) -> np.ndarray:
        return self.line.coeffs

    def conj(self) -> "Bitangent":
        return Bitangent(
            self.index,
            self.line.conj().normalized(),
            (self.contacts[0].conj(), self.contacts[1].conj()),
            self.real,
            self.hyperflex,
            self.residual,
        )


def normalize_line(l) -> TernaryForm:
    return TernaryForm(1, normalize_projective(np.asarray(l, dtype=complex)))


def check_smooth(f: TernaryForm, grid: int = 60, tol: float = 1e-10) -> None:
    """Cheap guard against singular quartics; raises :class:`NotSmoothError`.

    Scans ``|f| + |grad f|`` over a grid of real projective points, then polishes
    the best few grid points locally.  Not a certificate.
    """
    if f.degree != 4:
        raise InputError("smoothness check needs a quartic")
    scale = f.norm
    if scale == 0:
        raise NotSmoothError("the zero form is singular everywhere")
    c = f.coeffs / scale
    theta = np.linspace(0.0, np.pi / 2, grid)
    phi = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    pts = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1).reshape(-1, 3)

    def measure(p):
        val = monomial_values(p, 4) @ c
        grad = np.einsum("...mk,m->...k", monomial_gradients(p, 4), c)
        return np.abs(val) + np.linalg.norm(grad, axis=-1)

    vals = measure(pts)
    if vals.min() < tol:
        raise NotSmoothError(f"quartic is singular near {pts[np.argmin(vals)].round(6).tolist()}")
    # the log keeps the descent scale-free near zeros of high order
    for k in np.argsort(vals)[:4]:
        res = minimize(lambda p: float(np.log(measure(p / np.linalg.norm(p)) + 1e-300)), pts[k],
                       method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-6, "maxiter": 2000})
        if np.exp(res.fun) < tol:
            p = res.x / np.linalg.norm(res.x)
            raise NotSmoothError(f"quartic is singular near {p.round(6).tolist()}")


def square_certificate(f: TernaryForm, line) -> tuple[np.ndarray, BinaryForm, np.ndarray, float]:
    """Restrict ``f`` to the line and measure how far it is from a square.

    Returns ``(basis, g, q, residual)``: orthonormal points spanning the line,
    the restriction ``g(s, t) = f(s P + t Q)``, the best ``q`` with
    ``q^2 ~ g`` and the relative residual ``|g - q^2| / |g|``.
    """
    basis = line_basis(line)
    g = restrict_to_line(f, basis[0], basis[1])
    if g.norm <= 1e-12 * max(f.norm, 1e-300):
        # the line is a component of the curve
        return basis, g, np.zeros(3, dtype=complex), np.inf
    q, res = binary_square_root(g)
    return basis, g, q, res


def contact_points(
    f: TernaryForm, line, cert_tol: float = CERT_TOL, cluster_tol: float = 1e-6
) -> tuple[ProjPoint, ProjPoint, bool]:
    """The two tangency points of a bitangent and a hyperflex flag."""
    basis, _, q, res = square_certificate(f, line)
    if not res <= cert_tol:
        raise NotABitangentError(f"restriction is not a square (residual {res:.3g})")
    roots = binary_roots(BinaryForm(2, q), cluster_tol)
    pts = []
    for pt, mult in roots:
        s, t = pt.coords
        pts += [ProjPoint.from_coords(s * basis[0] + t * basis[1])] * mult
    return pts[0], pts[1], len(roots) == 1


def _chart_newton(gram: np.ndarray, rng: np.random.Generator, n: int, iters: int) -> np.ndarray:
    """One batch of Newton runs; returns lines (rows) of the converged runs."""
    chart = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    aux = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    tau = np.exp(2j * np.pi * np.arange(5) / 5)
    # coefficient k of g(s, 1) from the samples g(tau_j, 1)
    dft = tau[None, :] ** (-np.arange(5)[:, None]) / 5
    dp = [np.cross(chart[i], aux[0]) for i in (1, 2)]
    dq = [np.cross(chart[i], aux[1]) for i in (1, 2)]
    z = rng.standard_normal((n, 5)) + 1j * rng.standard_normal((n, 5))
    active = np.ones(n, dtype=bool)
    resid = np.full(n, np.inf)
    for _ in range(iters):
        zz = z[active]
        m = zz.shape[0]
        if m == 0:
            break
        l = chart[0] + zz[:, :1] * chart[1] + zz[:, 1:2] * chart[2]
        pts = tau[None, :, None] * np.cross(l, aux[0])[:, None, :] + np.cross(l, aux[1])[:, None, :]
        x, y, w = pts[..., 0], pts[..., 1], pts[..., 2]
        mono = np.stack([x * x, y * y, w * w, x * y, x * w, y * w], axis=-1)
        gm = mono @ gram
        vals = np.einsum("nji,nji->nj", mono, gm)
        zero = np.zeros_like(x)
        # d(mono)/d(x, y, w), shape (m, 5, 6, 3)
        jm = np.stack([
            np.stack([2 * x, zero, zero], -1), np.stack([zero, 2 * y, zero], -1),
            np.stack([zero, zero, 2 * w], -1), np.stack([y, x, zero], -1),
            np.stack([w, zero, x], -1), np.stack([zero, w, y], -1)], axis=-2)
        grad = 2 * np.einsum("njik,nji->njk", jm, gm)
        g = vals @ dft.T
        q = zz[:, 2:]
        sq = np.stack([q[:, 0] ** 2, 2 * q[:, 0] * q[:, 1], q[:, 1] ** 2 + 2 * q[:, 0] * q[:, 2],
                       2 * q[:, 1] * q[:, 2], q[:, 2] ** 2], axis=1)
        res = g - sq
        jac = np.zeros((m, 5, 5), dtype=complex)
        for i in range(2):
            direction = tau[None, :, None] * dp[i] + dq[i]
            jac[:, :, i] = np.einsum("njk,njk->nj", grad, np.broadcast_to(direction, grad.shape)) @ dft.T
        jac[:, 0, 2] = -2 * q[:, 0]
        jac[:, 1, 2] = -2 * q[:, 1]
        jac[:, 1, 3] = -2 * q[:, 0]
        jac[:, 2, 2] = -2 * q[:, 2]
        jac[:, 2, 3] = -2 * q[:, 1]
        jac[:, 2, 4] = -2 * q[:, 0]
        jac[:, 3, 3] = -2 * q[:, 2]
        jac[:, 3, 4] = -2 * q[:, 1]
        jac[:, 4, 4] = -2 * q[:, 2]
        with np.errstate(all="ignore"):
            try:
                step = np.linalg.solve(jac, -res[..., None])[..., 0]
            except np.linalg.LinAlgError:
                step = np.einsum("nij,nj->ni", np.linalg.pinv(jac), -res)
        size = np.linalg.norm(step, axis=1)
        cap = 1.0 + np.linalg.norm(zz, axis=1)
        step *= np.minimum(1.0, cap / np.maximum(size, 1e-300))[:, None]
        idx = np.flatnonzero(active)
        z[idx] = zz + step
        rn = np.linalg.norm(res, axis=1)
        resid[idx] = rn
        done = (size < 1e-13 * cap) | ~np.isfinite(size) | (np.linalg.norm(zz, axis=1) > 1e8)
        active[idx[done]] = False
    ok = (resid < 1e-9) & np.all(np.isfinite(z), axis=1)
    return chart[0] + z[ok, :1] * chart[1] + z[ok, 1:2] * chart[2]


def _sort_key(l: np.ndarray) -> tuple:
    return tuple(np.round(np.column_stack([l.real, l.imag]).reshape(-1), 9))


def _certified_unique(f, candidates, found, cert_tol):
    for l in candidates:
        if not np.all(np.isfinite(l)) or np.linalg.norm(l) == 0:
            continue
        l = normalize_projective(l)
        if any(chordal_distance(l, m) < DISTINCT_TOL for m, _ in found):
            continue
        *_, res = square_certificate(f, l)
        if res <= cert_tol:
            found.append((l, res))


def compute_bitangents(
    f: TernaryForm,
    seed: int = 0,
    max_restarts: int = 20000,
    batch: int = 1000,
    cert_tol: float = CERT_TOL,
    newton_iters: int = 60,
    check: bool = True,
) -> list[Bitangent]:
    """All 28 bitangents of a real smooth quartic, sorted by normalized coefficients."""
    if f.degree != 4:
        raise InputError("bitangents are defined for quartics")
    if check:
        check_smooth(f)
    if f.norm == 0:
        raise NotSmoothError("zero form")
    fn = TernaryForm(4, f.coeffs / f.norm)
    real_input = fn.is_real()
    gram = gram_pencil(TernaryForm(4, fn.coeffs.real)).base.entries.real if real_input else None
    if gram is None:
        raise InputError("bitangent computation needs a real quartic")
    rng = np.random.default_rng(seed)
    found: list[tuple[np.ndarray, float]] = []
    used = 0
    while len(found) < N_BITANGENTS and used < max_restarts:
        n = min(batch, max_restarts - used)
        lines = _chart_newton(gram, rng, n, newton_iters)
        used += n
        _certified_unique(fn, lines, found, cert_tol)
        _certified_unique(fn, [l.conj() for l, _ in found], found, cert_tol)
        log.debug("restarts %d: %d bitangents", used, len(found))
    if len(found) != N_BITANGENTS:
        raise CountMismatchError(f"found {len(found)} verified bitangents after {used} restarts, expected 28")
    found.sort(key=lambda item: _sort_key(item[0]))
    out = []
    for i, (l, res) in enumerate(found):
        p1, p2, hyper = contact_points(fn, l, cert_tol)
        real = bool(np.max(np.abs(l.imag)) <= REAL_TOL)
        line = TernaryForm(1, l.real.astype(complex) if real else l)
        out.append(Bitangent(i, line, (p1, p2), real, hyper, res))
    return out


def concurrent_quadruples(bits: Sequence[Bitangent], tol: float = 1e-8) -> list[tuple[int, int, int, int]]:
    """All 4-subsets of lines through a common point.

    A subset qualifies when the third singular value of its stacked 4x3
    coefficient matrix is at most ``tol`` times the first.  Five concurrent
    bitangents cannot exist on a smooth quartic and raise.
    """
    coeffs = np.array([b.coeffs for b in bits])
    quads = np.array(list(combinations(range(len(bits)), 4)))
    if quads.size == 0:
        return []
    s = np.linalg.svd(coeffs[quads], compute_uv=False)
    hits = [tuple(int(i) for i in q) for q in quads[s[:, 2] <= tol * s[:, 0]]]
    for a, b in combinations(hits, 2):
        union = set(a) | set(b)
        if len(union) == 5:
            sub = np.linalg.svd(coeffs[sorted(union)], compute_uv=False)
            if sub[2] <= tol * sub[0]:
                raise FiveConcurrentError(f"bitangents {sorted(union)} share a point")
    return hits


def common_point(bits: Sequence[Bitangent], quad: Sequence[int]) -> ProjPoint:
    coeffs = np.array([bits[i].coeffs for i in quad])
    _, _, vh = np.linalg.svd(coeffs)
    return ProjPoint.from_coords(vh[-1].conj())
