from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gramspec.bitangent import Bitangent, compute_bitangents
from gramspec.forms import TernaryForm
from gramspec.instances import f_alpha_beta, fermat, random_sos_quartic
from gramspec.steiner import SteinerComplex, SteinerGraph, assemble_complexes, steiner_graph

RANDOM_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class Pipeline:
    f: TernaryForm
    bits: list[Bitangent]
    complexes: list[SteinerComplex]
    graph: SteinerGraph

    @property
    def by_index(self) -> dict[int, SteinerComplex]:
        return {c.index: c for c in self.complexes}


@lru_cache(maxsize=None)
def pipeline(name: str, rank_tol: float = 1e-7) -> Pipeline:
    """Bitangents, complexes and graph of a named instance, computed once per session."""
    if name == "fermat":
        f = fermat()
    elif name.startswith("random"):
        f = random_sos_quartic(int(name[6:]))
    elif name.startswith("fab"):
        a, b = (float(x) for x in name[3:].split(","))
        f = f_alpha_beta(a, b)
    else:
        raise KeyError(name)
    bits = compute_bitangents(f, seed=0)
    complexes = assemble_complexes(f, bits)
    return Pipeline(f, bits, complexes, steiner_graph(f, complexes, rank_tol))


@pytest.fixture(scope="session")
def fermat_pipe() -> Pipeline:
    return pipeline("fermat")


@pytest.fixture(scope="session", params=RANDOM_SEEDS[:3], ids=lambda s: f"random{s}")
def random_pipe(request) -> Pipeline:
    return pipeline(f"random{request.param}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
