"""Steiner complexes, rank-3 Gram tensors and the Steiner graph.

Two disjoint pairs of bitangents belong to a common Steiner complex exactly
when their eight contact points lie on one conic.  Testing all 61425 such
pair-pairs and merging compatible pairs with union-find partitions the 378
bitangent pairs into the 63 complexes.  Each complex spans a 3-dimensional
space of quadrics which supports exactly one Gram tensor of ``f``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .bitangent import Bitangent
from .errors import CertificateError, GraphShapeError, InputError, PartitionError
from .forms import TernaryForm, line_basis, monomial_gradients, monomial_values, multiply
from .gram import (
    DEFAULT_RANK_TOL,
    GramTensor,
    NoSolutionError,
    Subspace,
    face_dimension,
    gram_from_image,
    gram_map,
    image,
    polish_low_rank,
)

N_COMPLEXES = 63
CONIC_DECISION_TOL = 1e-9
CONIC_CERT_TOL = 1e-8
RESIDUAL_TOL = 1e-8
POLISH_START_TOL = 1e-6  # span-based tensor accepted as a starting point
IMAGE_DRIFT_TOL = 1e-6

BitPair = tuple[int, int]


class InconsistentIntersectionError(CertificateError):
    pass


class SpanError(CertificateError):
    pass


class OverlappingPairsError(InputError):
    pass


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            out.setdefault(self.find(x), []).append(x)
        return sorted(out.values())


@dataclass(frozen=True, eq=False)
class SteinerComplex:
    index: int
    pairs: tuple[BitPair, ...]
    tensor: GramTensor
    real: bool
    psd: bool
    certificate: float
    span_gap: float
    image: Subspace = field(repr=False)

    @property
    def bitangents(self) -> frozenset[int]:
        return frozenset(i for p in self.pairs for i in p)


@dataclass(frozen=True)
class SteinerEdge:
    u: int
    v: int
    rank: int
    face_dim: int
    singular_values: tuple[float, ...]


@dataclass(frozen=True)
class SteinerGraph:
    vertices: tuple[int, ...]  # complex indices
    edges: tuple[SteinerEdge, ...]
    components: tuple[tuple[int, ...], ...]
    pair_ranks: dict = field(default_factory=dict, compare=False)


def all_pairs(n: int = 28) -> list[BitPair]:
    return list(combinations(range(n), 2))


def conic_rows(bits: Sequence[Bitangent]) -> np.ndarray:
    """Two unit rows per bitangent for the conic-through-contacts test.

    A contact point gives its monomial evaluation row.  At a hyperflex the
    second row is the derivative of the monomials along the line, forcing the
    conic to be tangent to the line there.
    """
    rows = np.zeros((len(bits), 2, 6), dtype=complex)
    for k, b in enumerate(bits):
        p1, p2 = b.contacts
        r1 = monomial_values(p1.coords, 2)
        if b.hyperflex:
            basis = line_basis(b.coeffs)
            d = basis[np.argmin(np.abs(basis.conj() @ p1.coords))]
            d = d - np.vdot(p1.coords, d) * p1.coords
            r2 = monomial_gradients(p1.coords, 2) @ d
        else:
            r2 = monomial_values(p2.coords, 2)
        rows[k, 0] = r1 / np.linalg.norm(r1)
        rows[k, 1] = r2 / np.linalg.norm(r2)
    return rows


def _conic_ratio(rows: np.ndarray, quads: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(rows[quads].reshape(len(quads), 8, 6), compute_uv=False)
    return s[:, 5] / s[:, 0]


def syzygetic_pair_test(f: TernaryForm, bits: Sequence[Bitangent], p1: BitPair, p2: BitPair,
                        tol: float = CONIC_DECISION_TOL) -> bool:
    """Do the eight contact points of two disjoint bitangent pairs lie on a conic?"""
    if len(set(p1) | set(p2)) != 4:
        raise OverlappingPairsError(f"pairs {p1} and {p2} share a bitangent")
    rows = conic_rows([bits[i] for i in (*p1, *p2)])
    return bool(_conic_ratio(rows, np.array([[0, 1, 2, 3]]))[0] <= tol)


def points_on_conic(points: np.ndarray, tol: float = CONIC_DECISION_TOL) -> bool:
    """Whether the given points of P^2 (rows) lie on a common conic."""
    m = monomial_values(np.asarray(points, dtype=complex), 2)
    m = m / np.linalg.norm(m, axis=1, keepdims=True)
    s = np.linalg.svd(m, compute_uv=False)
    return bool(s[5] <= tol * s[0]) if len(s) >= 6 else True


def compatible_pair_pairs(bits: Sequence[Bitangent], tol: float = CONIC_DECISION_TOL):
    """All pair-pairs passing the conic test, with their certificate ratios."""
    rows = conic_rows(bits)
    tests = []
    for a, b, c, d in combinations(range(len(bits)), 4):
        tests += [(a, b, c, d), (a, c, b, d), (a, d, b, c)]
    quads = np.array(tests)
    ratio = _conic_ratio(rows, quads)
    ok = ratio <= tol
    accepted = [((int(q[0]), int(q[1])), (int(q[2]), int(q[3])), float(r)) for q, r in zip(quads[ok], ratio[ok])]
    rejected_min = float(ratio[~ok].min()) if (~ok).any() else np.inf
    return accepted, rejected_min


def rank3_tensor(f: TernaryForm, bits: Sequence[Bitangent], pairs: Sequence[BitPair],
                 gap_min: float = 1e4) -> tuple[GramTensor, Subspace, float, bool]:
    """Gram tensor supported on the span of the six bitangent products of a complex.

    Returns ``(tensor, image, span_gap, real)`` where ``span_gap`` is
    ``sigma_3 / sigma_4`` of the six products.
    """
    products = np.array([multiply(bits[i].line, bits[j].line).coeffs for i, j in pairs])
    products /= np.linalg.norm(products, axis=1, keepdims=True)
    u, s, _ = np.linalg.svd(products.T, full_matrices=False)
    gap = float(s[2] / max(s[3], 1e-300))
    if gap < gap_min:
        raise SpanError(f"bitangent products do not span a plane of quadrics (gap {gap:.3g})")
    U = Subspace(u[:, :3])
    real = U.contains(U.conj(), tol=1e-8)
    if real:
        U = Subspace(U.real_basis())
    coarse = gram_from_image(f, U, tol=POLISH_START_TOL)
    if real:
        coarse = GramTensor(coarse.entries.real, coarse.diagnostics)
    tensor = polish_low_rank(f, coarse, 3)
    tensor = GramTensor(tensor.entries, {**tensor.diagnostics, "initial_residual": coarse.diagnostics["residual"]})
    if tensor.diagnostics["residual"] > RESIDUAL_TOL:
        raise NoSolutionError(f"rank-3 tensor residual {tensor.diagnostics['residual']:.3g} after refinement")
    drift = _subspace_gap(U, image(tensor))
    if drift > IMAGE_DRIFT_TOL:
        raise SpanError(f"refined tensor moved off the bitangent span (gap {drift:.3g})")
    return tensor, U, gap, real


def _subspace_gap(a: Subspace, b: Subspace) -> float:
    """Spectral norm of the difference of the orthogonal projectors."""
    if a.dim != b.dim:
        return np.inf
    return float(np.linalg.norm(a.projector() - b.projector(), 2))


def assemble_complexes(f: TernaryForm, bits: Sequence[Bitangent], tol: float = CONIC_DECISION_TOL,
                       cert_tol: float = CONIC_CERT_TOL) -> list[SteinerComplex]:
    """Partition the 378 bitangent pairs into the 63 Steiner complexes."""
    if len(bits) != 28:
        raise InputError(f"need 28 bitangents, got {len(bits)}")
    pairs = all_pairs(len(bits))
    pid = {p: k for k, p in enumerate(pairs)}
    accepted, _ = compatible_pair_pairs(bits, tol)
    uf = UnionFind(len(pairs))
    cert: dict[frozenset, float] = {}
    for p, q, r in accepted:
        uf.union(pid[p], pid[q])
        cert[frozenset((p, q))] = r
    groups = uf.groups()
    sizes = sorted({len(g) for g in groups})
    if len(groups) != N_COMPLEXES or sizes != [6]:
        raise PartitionError(f"compatibility classes: {len(groups)} groups with sizes {sizes}")
    if len(accepted) != N_COMPLEXES * 15:
        raise PartitionError(f"{len(accepted)} compatible pair-pairs, expected 945")
    out = []
    for k, g in enumerate(sorted(groups, key=lambda g: min(g))):
        members = tuple(pairs[i] for i in sorted(g))
        if len({i for p in members for i in p}) != 12:
            raise PartitionError(f"complex {members} repeats a bitangent")
        links = [cert.get(frozenset((p, q))) for p, q in combinations(members, 2)]
        if any(r is None for r in links):
            raise PartitionError(f"complex {members} is not closed under compatibility")
        worst = max(links)
        if worst > cert_tol:
            raise PartitionError(f"conic certificate {worst:.3g} exceeds {cert_tol:g}")
        tensor, U, gap, real = rank3_tensor(f, bits, members)
        psd = real and tensor.is_psd()
        out.append(SteinerComplex(k, members, tensor, real, psd, worst, gap, U))
    return out


def complex_relation(s1: SteinerComplex, s2: SteinerComplex) -> str:
    """``"syzygetic"`` or ``"azygetic"`` from the shared bitangents."""
    if s1.bitangents == s2.bitangents and set(s1.pairs) == set(s2.pairs):
        raise InputError("complex_relation needs two different complexes")
    common = s1.bitangents & s2.bitangents

    def pairs_within(s):
        return [p for p in s.pairs if set(p) <= common]

    def touched(s):
        return [p for p in s.pairs if set(p) & common]

    if len(common) == 4:
        a, b = pairs_within(s1), pairs_within(s2)
        if len(a) == 2 and len(b) == 2 and not set(a) & set(b):
            return "syzygetic"
    elif len(common) == 6:
        if len(touched(s1)) == 6 and len(touched(s2)) == 6:
            return "azygetic"
    raise InconsistentIntersectionError(
        f"complexes {s1.index} and {s2.index} share {len(common)} bitangents in an impossible pattern"
    )


def shared_quadruple(s1: SteinerComplex, s2: SteinerComplex) -> tuple[int, ...]:
    common = s1.bitangents & s2.bitangents
    return tuple(sorted(common)) if len(common) == 4 else ()


def classify_rank3(complexes: Sequence[SteinerComplex]) -> tuple[list[int], list[int]]:
    """Indices of the real and of the real psd rank-3 tensors."""
    real = [c.index for c in complexes if c.real]
    psd = [c.index for c in complexes if c.psd]
    return real, psd


def conjugate_pairing(complexes: Sequence[SteinerComplex], tol: float = 1e-7) -> list[tuple[int, int]]:
    """Pair each non-real tensor with its complex conjugate."""
    nonreal = [c for c in complexes if not c.real]
    pairs, used = [], set()
    for c in nonreal:
        if c.index in used:
            continue
        target = c.tensor.entries.conj()
        scale = max(np.linalg.norm(target), 1e-300)
        match = [d for d in nonreal if d.index not in used and d.index != c.index
                 and np.linalg.norm(d.tensor.entries - target) <= tol * scale]
        if len(match) != 1:
            raise CertificateError(f"tensor {c.index} has {len(match)} conjugate partners")
        used |= {c.index, match[0].index}
        pairs.append((c.index, match[0].index))
    return pairs


def sum_rank(t1: GramTensor, t2: GramTensor, tol: float = DEFAULT_RANK_TOL) -> tuple[int, np.ndarray]:
    s = np.linalg.svd((t1.entries + t2.entries).real, compute_uv=False)
    return int(np.sum(s > tol * s[0])), s


def steiner_graph(f: TernaryForm, complexes: Sequence[SteinerComplex],
                  rank_tol: float = DEFAULT_RANK_TOL, check: bool = True) -> SteinerGraph:
    """Graph on the psd rank-3 tensors; edges where ``rank(theta_i + theta_j) <= 5``."""
    psd = [c for c in complexes if c.psd]
    if check and len(psd) != 8:
        raise GraphShapeError(f"expected 8 psd rank-3 tensors, found {len(psd)}")
    edges, pair_ranks = [], {}
    for a, b in combinations(psd, 2):
        r, s = sum_rank(a.tensor, b.tensor, rank_tol)
        pair_ranks[(a.index, b.index)] = r
        if r <= 5:
            U = image(a.tensor + b.tensor, rank_tol)
            edges.append(SteinerEdge(a.index, b.index, r, face_dimension(U), tuple(float(x) for x in s)))
    verts = tuple(c.index for c in psd)
    uf = UnionFind(len(verts))
    pos = {v: k for k, v in enumerate(verts)}
    for e in edges:
        uf.union(pos[e.u], pos[e.v])
    comps = tuple(tuple(verts[k] for k in g) for g in uf.groups())
    graph = SteinerGraph(verts, tuple(edges), comps, pair_ranks)
    if check:
        verify_two_k4(graph)
    return graph


def verify_two_k4(graph: SteinerGraph) -> None:
    sizes = sorted(len(c) for c in graph.components)
    if len(graph.vertices) != 8 or len(graph.edges) != 12 or sizes != [4, 4]:
        raise GraphShapeError(
            f"Steiner graph has {len(graph.vertices)} vertices, {len(graph.edges)} edges, components {sizes}"
        )
    present = {frozenset((e.u, e.v)) for e in graph.edges}
    for comp in graph.components:
        for a, b in combinations(comp, 2):
            if frozenset((a, b)) not in present:
                raise GraphShapeError(f"component {comp} is not complete")
