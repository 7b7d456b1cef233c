"""Small dense primal-dual interior-point solver for linear matrix inequalities.

Solves ``min c^T x  s.t.  F0 + sum_i x_i F_i >= 0`` together with its dual
``max -<F0, X>  s.t.  <F_i, X> = c_i, X >= 0`` using an infeasible-start
path-following method with the HKM search direction and Mehrotra's
predictor-corrector.  Everything is dense; the matrices are at most a few
dozen rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

DIVERGENCE_BOUND = 1e12


@dataclass(frozen=True)
class LmiResult:
    x: np.ndarray
    slack: np.ndarray  # F0 + sum x_i F_i, recomputed from x
    dual: np.ndarray
    objective: float
    dual_objective: float
    iterations: int
    primal_infeasibility: float
    dual_infeasibility: float
    gap: float

    @property
    def kkt(self) -> dict[str, float]:
        return {
            "primal_infeasibility": self.primal_infeasibility,
            "dual_infeasibility": self.dual_infeasibility,
            "gap": self.gap,
        }


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``a`` with ``x + a dx`` psd, for ``x`` positive definite."""
    try:
        l = np.linalg.cholesky(x)
        li = np.linalg.inv(l)
        m = _sym(li @ dx @ li.T)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(x)
        w = np.maximum(w, 1e-300)
        s = v / np.sqrt(w)
        m = _sym(s.T @ dx @ s)
    lam = np.linalg.eigvalsh(m)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def solve_lmi(c, f0, fs, tol: float = 1e-9, max_iter: int = 200, step_frac: float = 0.95) -> LmiResult:
    """Minimize ``c^T x`` over the spectrahedron ``{x : F0 + sum x_i F_i psd}``.

    ``fs`` has shape ``(m, n, n)``.  Raises :class:`SolverError` when the
    residuals are not below ``tol`` after ``max_iter`` iterations.
    """
    c = np.asarray(c, dtype=float)
    f0 = _sym(np.asarray(f0, dtype=float))
    fs = np.asarray(fs, dtype=float)
    m, n = fs.shape[0], fs.shape[1]
    # standard form: A_i = -F_i, b = -c, C = F0; Z = C - sum y_i A_i
    a = -fs.reshape(m, n * n)
    b = -c
    cmat = f0
    norm_a = np.linalg.norm(a, axis=1)
    xi = max(10.0, np.sqrt(n), n * np.max((1 + np.abs(b)) / (1 + norm_a)))
    eta = max(10.0, np.sqrt(n), np.max(norm_a), np.linalg.norm(cmat))
    x = xi * np.eye(n)
    z = eta * np.eye(n)
    y = np.zeros(m)
    nb, nc = np.linalg.norm(b), np.linalg.norm(cmat)

    def amap(mat):
        return a @ mat.reshape(-1)

    def atmap(v):
        return (a.T @ v).reshape(n, n)

    it = 0
    while True:
        rp = b - amap(x)
        rd = cmat - z - atmap(y)
        pobj = float(np.sum(cmat * x))
        dobj = float(b @ y)
        gap_abs = float(np.sum(x * z))
        pinf = np.linalg.norm(rp) / (1 + nb)
        dinf = np.linalg.norm(rd) / (1 + nc)
        gap = gap_abs / (1 + abs(pobj) + abs(dobj))
        if pinf <= tol and dinf <= tol and gap <= tol:
            break
        # iterates blow up when the primal is unbounded or the dual infeasible
        if not (np.isfinite(gap_abs) and np.isfinite(pinf) and np.isfinite(dinf)) or max(
            np.abs(x).max(), np.abs(z).max(), np.abs(y).max()
        ) > DIVERGENCE_BOUND:
            raise SolverError(f"iterates diverged after {it} iterations (problem unbounded or infeasible)")
        if it >= max_iter:
            raise SolverError(
                f"no convergence after {max_iter} iterations (pinf {pinf:.2e}, dinf {dinf:.2e}, gap {gap:.2e})"
            )
        it += 1
        mu = gap_abs / n
        zinv = np.linalg.inv(z)
        zinv = _sym(zinv)
        # Schur complement M_ij = tr(A_i X A_j Z^-1)
        amats = a.reshape(m, n, n)
        xaz = np.einsum("ij,kjl,lm->kim", x, amats, zinv)
        schur = a @ xaz.reshape(m, n * n).T
        schur = _sym(schur)
        try:
            chol = np.linalg.cholesky(schur)

            def solve(rhs):
                return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
        except np.linalg.LinAlgError:
            pinv = np.linalg.pinv(schur)

            def solve(rhs):
                return pinv @ rhs

        def direction(rc):
            rhs = rp - amap(rc) + amap(x @ rd @ zinv)
            dy = solve(rhs)
            dz = rd - atmap(dy)
            dx = _sym(rc - x @ dz @ zinv)
            return dx, dy, _sym(dz)

        dx, dy, dz = direction(-x)
        ap = min(1.0, _max_step(x, dx))
        ad = min(1.0, _max_step(z, dz))
        mu_aff = float(np.sum((x + ap * dx) * (z + ad * dz))) / n
        sigma = min(1.0, (mu_aff / mu) ** 3)
        rc = sigma * mu * zinv - x - dx @ dz @ zinv
        dx, dy, dz = direction(rc)
        ap = min(1.0, step_frac * _max_step(x, dx))
        ad = min(1.0, step_frac * _max_step(z, dz))
        x = _sym(x + ap * dx)
        y = y + ad * dy
        z = _sym(z + ad * dz)

    slack = f0 + np.tensordot(y, fs, axes=1)
    return LmiResult(
        x=y,
        slack=_sym(slack),
        dual=x,
        objective=float(c @ y),
        dual_objective=float(-np.sum(f0 * x)),
        iterations=it,
        primal_infeasibility=float(pinf),
        dual_infeasibility=float(dinf),
        gap=float(gap),
    )
