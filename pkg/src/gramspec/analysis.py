"""Full analysis pipeline: bitangents to Steiner graph, faces and samples.

:func:`analyze` runs the requested stages in dependency order and collects
plain-data sections into an :class:`AnalysisReport`.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bitangent import Bitangent, check_smooth, compute_bitangents, concurrent_quadruples
from .config import Tolerances
from .errors import CertificateError, InputError
from .gram import gram_map, gram_pencil
from .inputs import QuarticInput
from .spectra import (
    ExtremeSample,
    find_rank4_point,
    interior_point,
    one_dim_face_report,
    sample_extreme_points,
)
from .steiner import SteinerComplex, SteinerGraph, assemble_complexes, complex_relation, steiner_graph

log = logging.getLogger(__name__)

STAGES = ("bitangents", "steiner", "graph", "faces", "sample")
_REQUIRES = {
    "bitangents": (),
    "steiner": ("bitangents",),
    "graph": ("steiner",),
    "faces": ("graph",),
    "sample": (),
}


@dataclass
class AnalysisReport:
    """Plain-data sections of an analysis; absent stages stay ``None``."""

    input: dict
    bitangents: list | None = None
    concurrent_quadruples: list | None = None
    complexes: dict | None = None
    psd_tensors: list | None = None
    graph: dict | None = None
    one_dim_faces: list | None = None
    rank4_point: dict | None = None
    sampling: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        doc = {k: v for k, v in self.__dict__.items() if v is not None}
        doc["version"] = __version__
        return doc

    def check_consistency(self) -> None:
        if self.bitangents is not None and len(self.bitangents) != 28:
            raise CertificateError("bitangent count")
        if self.complexes is not None:
            c = self.complexes
            if len(c["list"]) != c["count"] or sum(x["real"] for x in c["list"]) != c["real"]:
                raise CertificateError("complex counts")
            if self.psd_tensors is not None and len(self.psd_tensors) != c["psd"]:
                raise CertificateError("psd tensor count")
        if self.graph is not None and len(self.graph["edges"]) != 12:
            raise CertificateError("edge count")


def _closure(stages) -> list[str]:
    want = set()

    def add(s):
        if s not in _REQUIRES:
            raise InputError(f"unknown stage {s!r}")
        want.add(s)
        for d in _REQUIRES[s]:
            add(d)

    for s in stages:
        add(s)
    return [s for s in STAGES if s in want]


def _bitangent_doc(b: Bitangent) -> dict:
    return {
        "index": b.index,
        "coefficients": b.coeffs,
        "contacts": [p.coords for p in b.contacts],
        "real": b.real,
        "hyperflex": b.hyperflex,
        "residual": b.residual,
    }


def _relative_residual(f, tensor) -> float:
    return float(np.linalg.norm(gram_map(tensor).coeffs - f.coeffs) / max(f.norm, 1e-300))


def _sample_doc(s: ExtremeSample) -> dict:
    return {
        "rank": s.face.rank,
        "face_dim": s.face.face_dim,
        "objective": s.objective,
        "lambda": s.lam,
        "eigenvalues": s.tensor.eigenvalues(),
    }


def analyze(inp: QuarticInput, stages=STAGES, seed: int | None = None, tolerances: Tolerances | None = None,
            n_samples: int = 50, timings: bool = False) -> AnalysisReport:
    """Run ``stages`` (and everything they depend on) on one quartic.

    ``seed`` overrides the seed stored in the input; the default is 0.  Wall
    clock timings are only recorded on request, since they would make
    reports non-deterministic.
    """
    order = _closure(stages)
    seed = seed if seed is not None else (inp.seed if inp.seed is not None else 0)
    tol = tolerances or inp.resolved_tolerances()
    f = inp.form
    report = AnalysisReport(input={**inp.to_document(), "seed": seed, "tolerances": tol.as_dict()})
    diag = report.diagnostics
    clock: dict[str, float] = {}

    def tick(name, t0):
        clock[name] = time.perf_counter() - t0

    t0 = time.perf_counter()
    check_smooth(f)
    if any(s != "bitangents" for s in order):
        pencil = gram_pencil(f)
        lam0 = interior_point(pencil, tol.kkt)
        diag["interior_min_eigenvalue"] = pencil.at(lam0).min_eigenvalue()
    tick("validation", t0)

    bits: list[Bitangent] = []
    complexes: list[SteinerComplex] = []
    graph: SteinerGraph | None = None
    if "bitangents" in order:
        t0 = time.perf_counter()
        bits = compute_bitangents(f, seed=seed, cert_tol=tol.cert, check=False)
        quads = concurrent_quadruples(bits, tol.concurrency)
        report.bitangents = [_bitangent_doc(b) for b in bits]
        report.concurrent_quadruples = [list(q) for q in quads]
        diag["bitangent_max_residual"] = max(b.residual for b in bits)
        diag["real_bitangents"] = sum(b.real for b in bits)
        tick("bitangents", t0)
    if "steiner" in order:
        t0 = time.perf_counter()
        complexes = assemble_complexes(f, bits, tol.conic_decision, tol.cert)
        report.complexes = {
            "count": len(complexes),
            "real": sum(c.real for c in complexes),
            "psd": sum(c.psd for c in complexes),
            "list": [
                {"index": c.index, "pairs": [list(p) for p in c.pairs], "real": c.real, "psd": c.psd,
                 "certificate": c.certificate}
                for c in complexes
            ],
        }
        report.psd_tensors = [
            {"index": c.index, "entries": c.tensor.real, "eigenvalues": c.tensor.eigenvalues(),
             "residual": _relative_residual(f, c.tensor)}
            for c in complexes if c.psd
        ]
        diag["conic_max_certificate"] = max(c.certificate for c in complexes)
        diag["tensor_max_residual"] = max(_relative_residual(f, c.tensor) for c in complexes)
        diag["tensor_max_condition"] = max(c.tensor.diagnostics.get("condition", 0.0) for c in complexes)
        tick("steiner", t0)
    if "graph" in order:
        t0 = time.perf_counter()
        graph = steiner_graph(f, complexes, tol.rank)
        by_index = {c.index: c for c in complexes}
        report.graph = {
            "vertices": list(graph.vertices),
            "components": [list(c) for c in graph.components],
            "edges": [
                {"u": e.u, "v": e.v, "rank": e.rank, "face_dim": e.face_dim,
                 "relation": complex_relation(by_index[e.u], by_index[e.v])}
                for e in graph.edges
            ],
        }
        tick("graph", t0)
    if "faces" in order:
        t0 = time.perf_counter()
        faces = one_dim_face_report(f, bits, complexes, graph, tol.concurrency)
        report.one_dim_faces = [
            {"u": o.u, "v": o.v, "quadruple": list(o.quadruple), "point": o.point.coords, "face_dim": o.face_dim}
            for o in faces
        ]
        p = find_rank4_point(f, complexes, graph, seed=seed)
        report.rank4_point = None if p is None else _sample_doc(p)
        tick("faces", t0)
    if "sample" in order:
        t0 = time.perf_counter()
        summary = sample_extreme_points(f, n_samples, seed, tol.kkt, tol.solver_rank)
        report.sampling = {
            "n": n_samples,
            "seed": seed,
            "histogram": [{"rank": r, "face_dim": d, "count": n} for (r, d), n in summary.histogram.items()],
            "ranks": [s.rank for s in summary.samples],
            "failures": [{"index": k, "message": m} for k, m in summary.failures],
        }
        if summary.samples:
            diag["solver_max_kkt"] = max(max(s.kkt.values()) for s in summary.samples)
            diag["solver_max_iterations"] = max(s.iterations for s in summary.samples)
        tick("sample", t0)
    if timings:
        diag["timings"] = clock
    report.check_consistency()
    return report
