"""Numerical tolerances shared by the pipeline stages."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """All thresholds are relative to the natural scale of the quantity tested."""

    rank: float = 1e-7  # singular-value cutoff for exactly constructed tensors
    solver_rank: float = 1e-6  # eigenvalue cutoff for interior-point outputs
    cert: float = 1e-8  # bitangent squares and conic certificates
    conic_decision: float = 1e-9
    concurrency: float = 1e-8
    kkt: float = 1e-9

    def with_overrides(self, **kw) -> "Tolerances":
        return replace(self, **{k: float(v) for k, v in kw.items() if v is not None})

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
