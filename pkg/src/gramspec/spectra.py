"""Semidefinite programming over the Gram spectrahedron.

Linear functionals are minimized over the pencil ``G(lam) = G0 + sum lam_i B_i``
with the dense solver in :mod:`gramspec.sdp`.  The resulting extreme points
are classified by rank and face dimension.  This module also restricts the
problem to two-dimensional faces, reports one-dimensional faces, and samples
the determinant of three-parameter slices.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .bitangent import Bitangent, common_point
from .errors import CertificateError, DetectorDisagreementError, InfeasibleError, InputError, SolverError
from .forms import ProjPoint, TernaryForm
from .gram import (
    DEFAULT_RANK_TOL,
    FaceDescriptor,
    GramPencil,
    GramTensor,
    Subspace,
    _sym_from_pairs,
    describe_face,
    gram_map,
    gram_pencil,
    image,
    sym2_product_matrix,
)
from .sdp import LmiResult, solve_lmi
from .steiner import SteinerComplex, SteinerGraph, shared_quadruple

SOLVER_RANK_TOL = 1e-6
KKT_TOL = 1e-9
FEASIBILITY_TOL = 1e-8
INTERIOR_MARGIN = 1e-6
MAX_ONE_DIM_FACES = 6


@dataclass(frozen=True, eq=False)
class SdpProblem:
    pencil: GramPencil
    objective: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        if c.shape != (6, 6):
            raise InputError(f"objective must be 6x6, got {c.shape}")
        object.__setattr__(self, "objective", (c + c.T) / 2)

    @property
    def linear_cost(self) -> np.ndarray:
        """Cost vector ``c_i = <C, B_i>`` on the pencil parameters."""
        return np.einsum("ij,kij->k", self.objective, self.pencil.directions)

    def value(self, tensor: GramTensor) -> float:
        return float(np.sum(self.objective * tensor.real))


@dataclass(frozen=True, eq=False)
class ExtremeSample:
    lam: np.ndarray
    tensor: GramTensor
    face: FaceDescriptor
    objective: float
    kkt: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def rank(self) -> int:
        return self.face.rank


@dataclass(frozen=True, eq=False)
class SamplingSummary:
    samples: list[ExtremeSample]
    failures: list[tuple[int, str]]

    @property
    def histogram(self) -> dict[tuple[int, int], int]:
        return dict(sorted(Counter((s.face.rank, s.face.face_dim) for s in self.samples).items()))


@dataclass(frozen=True)
class OneDimFace:
    u: int
    v: int
    quadruple: tuple[int, ...]
    point: ProjPoint
    face_dim: int


@dataclass(frozen=True, eq=False)
class SliceData:
    """Determinant and minimum eigenvalue of ``theta0 + sum lam_k (theta_k - theta0)``.

    ``coefficients`` are those of the degree-6 interpolant in the box
    coordinates ``u = (lam - lo) / (hi - lo)``, ordered as ``exponents``.
    """

    points: np.ndarray
    det: np.ndarray
    lam_min: np.ndarray
    exponents: list[tuple[int, int, int]]
    coefficients: np.ndarray
    residual: float
    box: tuple[float, float]
    tensors: tuple[GramTensor, ...] = field(repr=False)

    def polynomial(self, lam) -> np.ndarray:
        lo, hi = self.box
        u = (np.atleast_2d(np.asarray(lam, dtype=float)) - lo) / (hi - lo)
        return _monomial_matrix(u, self.exponents) @ self.coefficients

    def rows(self) -> np.ndarray:
        return np.column_stack([self.points, self.det, self.lam_min])


def _pencil_of(f_or_pencil) -> GramPencil:
    return f_or_pencil if isinstance(f_or_pencil, GramPencil) else gram_pencil(f_or_pencil)


def _check_feasible(f: TernaryForm, g: np.ndarray, tol: float = FEASIBILITY_TOL) -> float:
    resid = float(np.linalg.norm(gram_map(g).coeffs - f.coeffs) / max(f.norm, 1e-300))
    if resid > tol:
        raise InfeasibleError(f"tensor does not represent the form (relative residual {resid:.3g})")
    return resid


def interior_point(pencil, tol: float = KKT_TOL) -> np.ndarray:
    """Parameters ``lam0`` with ``G(lam0)`` positive definite.

    Maximizes ``t`` subject to ``G(lam) - t I`` psd.  Raises
    :class:`InfeasibleError` when the optimal ``t`` is below
    ``1e-6 ||G(lam0)||``, i.e. the form is not strictly a sum of squares.
    """
    pencil = _pencil_of(pencil)
    fs = np.concatenate([pencil.directions, -np.eye(6)[None]], axis=0)
    c = np.zeros(7)
    c[-1] = -1.0
    try:
        res = solve_lmi(c, pencil.base.real, fs, tol=tol)
    except SolverError as exc:
        raise InfeasibleError(f"could not find an interior Gram matrix: {exc}") from exc
    lam = res.x[:6]
    g = pencil.at(lam)
    ev = g.eigenvalues()
    if ev[0] < INTERIOR_MARGIN * max(abs(ev[-1]), 1e-300):
        raise InfeasibleError(f"form is not strictly sos (best minimum eigenvalue {ev[0]:.3g})")
    return lam


def _sample_from(pencil: GramPencil, res: LmiResult, value: float, rank_tol: float) -> ExtremeSample:
    tensor = GramTensor(res.slack)
    return ExtremeSample(
        lam=res.x,
        tensor=tensor,
        face=describe_face(tensor, rank_tol),
        objective=value,
        kkt=res.kkt,
        iterations=res.iterations,
    )


def sdp_minimize(problem: SdpProblem, tol: float = KKT_TOL, rank_tol: float = SOLVER_RANK_TOL,
                 check_interior: bool = True) -> ExtremeSample:
    """Minimize ``<C, G(lam)>`` over the Gram spectrahedron."""
    pencil = problem.pencil
    if check_interior:
        interior_point(pencil, tol)
    res = solve_lmi(problem.linear_cost, pencil.base.real, pencil.directions, tol=tol)
    f = gram_map(pencil.base)
    _check_feasible(f, res.slack)
    return _sample_from(pencil, res, problem.value(GramTensor(res.slack)), rank_tol)


def goe_matrix(rng: np.random.Generator, n: int = 6) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return (a + a.T) / np.sqrt(2)


def sample_extreme_points(f: TernaryForm, n: int, seed: int = 0, tol: float = KKT_TOL,
                          rank_tol: float = SOLVER_RANK_TOL) -> SamplingSummary:
    """Minimize ``n`` random linear functionals; objective ``k`` uses seed ``(seed, k)``."""
    pencil = gram_pencil(f)
    interior_point(pencil, tol)
    samples, failures = [], []
    for k in range(n):
        c = goe_matrix(np.random.default_rng([seed, k]))
        try:
            samples.append(sdp_minimize(SdpProblem(pencil, c), tol, rank_tol, check_interior=False))
        except (SolverError, InfeasibleError) as exc:
            failures.append((k, str(exc)))
    return SamplingSummary(samples, failures)


def supporting_face(f: TernaryForm, theta: GramTensor, rank_tol: float = DEFAULT_RANK_TOL,
                    tol: float = FEASIBILITY_TOL) -> FaceDescriptor:
    """Rank and dimension of the smallest face containing ``theta``."""
    _check_feasible(f, theta.entries, tol)
    if not theta.is_psd():
        raise InfeasibleError("tensor is not positive semidefinite")
    return describe_face(theta, rank_tol)


def face_pencil(f: TernaryForm, U: Subspace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Affine parametrization of the Gram matrices of ``f`` with image in ``U``.

    Returns ``(basis, A0, D)``: the tensors are ``basis (A0 + sum t_k D_k) basis^T``
    with ``basis`` a real orthonormal 6 x k matrix.
    """
    basis = U.real_basis()
    k = basis.shape[1]
    m = sym2_product_matrix(basis).real
    coef, *_ = np.linalg.lstsq(m, f.coeffs.real, rcond=None)
    resid = np.linalg.norm(m @ coef - f.coeffs.real) / max(f.norm, 1e-300)
    if resid > FEASIBILITY_TOL:
        raise InfeasibleError(f"form has no Gram matrix with the given image (residual {resid:.3g})")
    _, s, vh = np.linalg.svd(m)
    r = int(np.sum(s > 1e-9 * s[0]))
    null = vh[r:]
    a0 = _sym_from_pairs(coef, k).real
    dirs = np.array([_sym_from_pairs(v, k).real for v in null]).reshape(-1, k, k)
    return basis, a0, dirs


def face_extreme(f: TernaryForm, theta_i: GramTensor, theta_j: GramTensor, objective,
                 tol: float = KKT_TOL, rank_tol: float = SOLVER_RANK_TOL,
                 edge_rank_tol: float = DEFAULT_RANK_TOL) -> ExtremeSample:
    """Minimize ``<C, theta>`` over the face spanned by two adjacent rank-3 tensors.

    For a rank-5 edge the face is two-dimensional and is parametrized inside
    ``Sym^2`` of the image of ``theta_i + theta_j``.  A rank-4 edge is a
    segment, and the better endpoint is returned.
    """
    c = np.asarray(objective, dtype=float)
    c = (c + c.T) / 2
    pencil = gram_pencil(f)
    mid = theta_i + theta_j
    U = image(mid, edge_rank_tol)
    if U.dim == 4:
        best = min((theta_i, theta_j), key=lambda t: float(np.sum(c * t.real)))
        return ExtremeSample(pencil.coordinates(best), best, describe_face(best, rank_tol),
                             float(np.sum(c * best.real)))
    if U.dim != 5:
        raise InputError(f"tensors do not span an edge of the Steiner graph (rank {U.dim})")
    basis, a0, dirs = face_pencil(f, U)
    reduced = basis.T @ c @ basis
    cost = np.einsum("ij,kij->k", reduced, dirs)
    res = solve_lmi(cost, a0, dirs, tol=tol)
    g = basis @ res.slack @ basis.T
    _check_feasible(f, g)
    tensor = GramTensor(g)
    return ExtremeSample(
        lam=pencil.coordinates(tensor),
        tensor=tensor,
        face=describe_face(tensor, rank_tol),
        objective=float(np.sum(c * g)),
        kkt=res.kkt,
        iterations=res.iterations,
    )


def vertex_objective(theta: GramTensor, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """``I - P_U`` for the image ``U`` of ``theta``; minimized exactly on its face."""
    basis = image(theta, rank_tol).real_basis()
    return np.eye(6) - basis @ basis.T


def find_rank4_point(f: TernaryForm, complexes: Sequence[SteinerComplex], graph: SteinerGraph,
                     seed: int = 0, tries: int = 4) -> ExtremeSample | None:
    """First rank-4 extreme point found on a two-dimensional face of the Steiner graph."""
    by_index = {c.index: c for c in complexes}
    for n_edge, e in enumerate(sorted(graph.edges, key=lambda e: (e.u, e.v))):
        if e.rank != 5:
            continue
        for k in range(tries):
            c = goe_matrix(np.random.default_rng([seed, n_edge, k]))
            s = face_extreme(f, by_index[e.u].tensor, by_index[e.v].tensor, c)
            if s.rank == 4:
                return s
    return None


def _concurrent(bits: Sequence[Bitangent], quad: Sequence[int], tol: float) -> bool:
    s = np.linalg.svd(np.array([bits[i].coeffs for i in quad]), compute_uv=False)
    return bool(s[2] <= tol * s[0])


def one_dim_face_report(f: TernaryForm, bits: Sequence[Bitangent], complexes: Sequence[SteinerComplex],
                        graph: SteinerGraph, concurrency_tol: float = 1e-8) -> list[OneDimFace]:
    """One-dimensional faces among the Steiner graph edges.

    An edge is a one-dimensional face when ``theta_u + theta_v`` has rank 4.
    The same edges are detected independently as those whose four shared
    bitangents pass through a point; the two detectors must agree.
    """
    by_index = {c.index: c for c in complexes}
    out = []
    for e in graph.edges:
        quad = shared_quadruple(by_index[e.u], by_index[e.v])
        if len(quad) != 4:
            raise CertificateError(f"complexes {e.u}, {e.v} do not share four bitangents")
        conc = _concurrent(bits, quad, concurrency_tol)
        if conc != (e.rank == 4):
            raise DetectorDisagreementError(
                f"edge ({e.u}, {e.v}): rank {e.rank} but shared bitangents concurrent={conc}"
            )
        if conc:
            if e.face_dim != 1:
                raise DetectorDisagreementError(f"rank-4 edge ({e.u}, {e.v}) has face dimension {e.face_dim}")
            out.append(OneDimFace(e.u, e.v, quad, common_point(bits, quad), e.face_dim))
    if len(out) > MAX_ONE_DIM_FACES:
        raise CertificateError(f"{len(out)} one-dimensional faces exceed the bound {MAX_ONE_DIM_FACES}")
    return out


def slice_quadruple(complexes: Sequence[SteinerComplex], graph: SteinerGraph) -> tuple[GramTensor, ...]:
    """Four tensors of one Steiner graph component, the base vertex first.

    The base is the vertex with the most rank-4 edges (lowest index on ties),
    and the others follow in index order.
    """
    by_index = {c.index: c for c in complexes}
    deg4 = Counter()
    for e in graph.edges:
        if e.rank == 4:
            deg4[e.u] += 1
            deg4[e.v] += 1
    base = min(graph.vertices, key=lambda v: (-deg4[v], v))
    comp = next(c for c in graph.components if base in c)
    order = [base] + sorted(v for v in comp if v != base)
    return tuple(by_index[v].tensor for v in order)


def _lattice_exponents(d: int = 6) -> list[tuple[int, int, int]]:
    return [(a, b, t - a - b) for t in range(d + 1) for a in range(t, -1, -1) for b in range(t - a, -1, -1)]


def _monomial_matrix(u: np.ndarray, exps) -> np.ndarray:
    e = np.array(exps)
    return np.prod(u[:, None, :] ** e[None, :, :], axis=2)


def _slice_eval(theta0: np.ndarray, diffs: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g = theta0[None] + np.einsum("nk,kij->nij", pts, diffs)
    return np.linalg.det(g), np.linalg.eigvalsh(g)[:, 0]


def pencil_determinant_slice(thetas: Sequence[GramTensor], grid: int, box: tuple[float, float] = (0.0, 1.0),
                             holdout: int = 64) -> SliceData:
    """Sample ``det`` and the minimum eigenvalue on a grid and interpolate ``det``.

    ``grid <= 1`` samples only the box centre; otherwise ``grid**3`` nodes in
    row-major order (``lam1`` slowest).  The degree-6 determinant is
    interpolated on the 84 points of the principal lattice of the corner
    simplex and checked on seeded held-out points.
    """
    if len(thetas) != 4:
        raise InputError(f"need four tensors, got {len(thetas)}")
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise InputError("slice box must have lo < hi")
    mats = np.array([t.real for t in thetas])
    forms = [gram_map(m).coeffs for m in mats]
    scale = max(np.linalg.norm(forms[0]), 1e-300)
    if any(np.linalg.norm(v - forms[0]) > FEASIBILITY_TOL * scale for v in forms[1:]):
        raise InputError("tensors represent different forms")
    diffs = mats[1:] - mats[0]
    s = np.linalg.svd(diffs.reshape(3, 36), compute_uv=False)
    if s[2] <= 1e-9 * s[0]:
        raise InputError("tensors are affinely dependent")

    if grid <= 1:
        pts = np.full((1, 3), (lo + hi) / 2)
    else:
        axis = np.linspace(lo, hi, grid)
        pts = np.array(np.meshgrid(axis, axis, axis, indexing="ij")).reshape(3, -1).T
    det, lmin = _slice_eval(mats[0], diffs, pts)

    exps = _lattice_exponents(6)
    nodes = np.array(exps, dtype=float) / 6
    node_det, _ = _slice_eval(mats[0], diffs, lo + (hi - lo) * nodes)
    coef = np.linalg.solve(_monomial_matrix(nodes, exps), node_det)
    held = np.random.default_rng(0).uniform(0.0, 1.0, size=(holdout, 3))
    held_det, _ = _slice_eval(mats[0], diffs, lo + (hi - lo) * held)
    err = np.abs(_monomial_matrix(held, exps) @ coef - held_det)
    resid = float(err.max() / max(np.abs(node_det).max(), np.abs(held_det).max(), 1e-300))
    return SliceData(pts, det, lmin, exps, coef, resid, (lo, hi), tuple(thetas))
