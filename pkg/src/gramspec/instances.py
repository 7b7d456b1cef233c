"""Standard test quartics."""
from __future__ import annotations

import numpy as np

from .forms import TernaryForm, multiply
from .gram import GramTensor, gram_map


def fermat() -> TernaryForm:
    return TernaryForm.from_terms(4, {"400": 1, "040": 1, "004": 1})


def random_sos_quartic(seed: int, shift: float = 0.5) -> TernaryForm:
    """Quartic with Gram matrix ``W W^T / 6 + shift I``, ``W`` standard Gaussian.

    The identity shift keeps the form strictly inside the sos cone; for
    almost every seed the curve is smooth.
    """
    w = np.random.default_rng(seed).standard_normal((6, 6))
    f = gram_map(GramTensor(w @ w.T / 6 + shift * np.eye(6)))
    return TernaryForm(4, f.coeffs.real / f.norm)


def f_alpha_beta(alpha: float, beta: float) -> TernaryForm:
    """``(z^2 + a x^2 + b y^2)^2 + prod_{j=1..4} (j x + y)``.

    Four of its bitangents, the lines ``j x + y``, pass through ``(0:0:1)``.
    """
    q = TernaryForm.from_terms(2, {"002": 1, "200": alpha, "020": beta})
    lines = [TernaryForm.linear(j, 1, 0) for j in range(1, 5)]
    prod = multiply(multiply(lines[0], lines[1]), multiply(lines[2], lines[3]))
    return multiply(q, q) + prod
