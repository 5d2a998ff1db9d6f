"""Damped Newton iteration for sigma_k(lambda(D^2 u)) = 1 on ring grids.

The nonlinear residual per interior node is F(D^2_h u) - 1 with
F = sigma_k^{1/k}, concave on the Garding cone; every accepted step must keep
all interior nodes admissible (spectrum in Gamma_k) and decrease the max-norm
residual, with step halving otherwise. The linearized operator uses the
coefficients dF/dH at the current iterate (elliptic while admissible).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonConvergenceError, PreconditionError
from .grid import RingField

__all__ = ["SolveReport", "newton_solve", "residual", "discrete_hessian"]


@dataclass
class SolveReport:
    """Diagnostics of one solve; the stored final residual is recomputed
    fresh on the final field, never cached from the iteration."""

    residual_history: list = field(default_factory=list)
    final_residual: float = float("nan")
    admissibility_margin: float = float("nan")
    iterations: int = 0
    converged: bool = False
    linear_solver: str = ""
    barrier_violations: dict = field(default_factory=dict)
    boundary_gradient: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)
    timing_s: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_text(self):
        lines = ["hessring-solve-report 1"]
        for key in ("converged", "iterations", "final_residual",
                    "admissibility_margin", "linear_solver", "timing_s"):
            lines.append(f"{key} {getattr(self, key)!r}")
        lines.append("residual_history " + " ".join(f"{r:.6e}" for r in self.residual_history))
        for name, d in (("barrier", self.barrier_violations),
                        ("gradient", self.boundary_gradient),
                        ("decay", self.decay), ("meta", self.meta)):
            for k in sorted(d):
                lines.append(f"{name}.{k} {d[k]!r}")
        return "\n".join(lines) + "\n"


def residual(field_or_grid, u=None):
    """Per-interior-node residual sigma_k^{1/k}(lambda(D^2_h u)) - 1.

    Nodes outside the cone are reported as NaN and flagged by the caller."""
    if isinstance(field_or_grid, RingField):
        grid, u = field_or_grid.grid, field_or_grid.u
    else:
        grid = field_or_grid
    return grid.residual(u)


def discrete_hessian(field, node):
    """Cartesian discrete Hessian at one interior node (exact on quadratics)."""
    grid = field.grid
    if grid.mode == "radial":
        i = int(node)
        if not (1 <= i <= grid.n_nodes - 2):
            raise PreconditionError("discrete_hessian requires an interior node")
        tri = field.u[i - 1 : i + 2][None, :]
        d1 = float(np.sum(grid.w1[i - 1] * tri))
        d2 = float(np.sum(grid.w2[i - 1] * tri))
        h = np.eye(grid.n) * (d1 / grid.r[i])
        h[0, 0] = d2  # radial direction along the first axis representative
        return h
    pos = np.nonzero(grid.interior == node)[0]
    if pos.size == 0:
        raise PreconditionError("discrete_hessian requires an interior node")
    return grid.hessians(field.u)[pos[0]]


def newton_solve(grid, u0, tol=1e-9, max_iter=100, max_halvings=30, verbose=False,
                 lin_tol_factor=1e-3):
    """Damped Newton solve from an admissible initial field satisfying the
    boundary data (boundary rows of u0 are kept fixed).

    Returns (RingField, SolveReport). Raises PreconditionError for an
    inadmissible start and NonConvergenceError when the line search stalls
    even after one restart from a blend with the initial field.
    """
    t0 = time.time()
    u = np.asarray(u0, dtype=float).copy()
    margin0 = grid.admissibility_margin(u)
    if not np.all(np.isfinite(margin0)) or margin0.min() <= 0.0:
        bad = int(np.nanargmin(margin0))
        raise PreconditionError(
            f"initial field is not admissible (margin {margin0.min():.3e} at interior node {bad})"
        )
    report = SolveReport()
    res = grid.residual(u)
    rnorm = float(np.nanmax(np.abs(res)))
    report.residual_history.append(rnorm)
    restarted = False
    it = 0
    while rnorm > tol and it < max_iter:
        it += 1
        delta, lin_info = grid.newton_step(u, res, lin_tol=lin_tol_factor)
        report.linear_solver = lin_info["linear_solver"]
        lam = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            trial = u + lam * delta
            margins = grid.admissibility_margin(trial)
            if np.all(np.isfinite(margins)) and margins.min() > 0.0:
                res_t = grid.residual(trial)
                rt = float(np.nanmax(np.abs(res_t)))
                if rt <= rnorm * (1.0 - 1e-4 * lam) or rt < tol:
                    u, res, rnorm = trial, res_t, rt
                    accepted = True
                    break
            lam *= 0.5
        if verbose:
            print(f"  newton it {it}: |res| = {rnorm:.3e} (step {lam:.2e})")
        report.residual_history.append(rnorm)
        if not accepted:
            if not restarted:
                # one restart from a convex blend with the initial field
                restarted = True
                u = 0.5 * (u + np.asarray(u0, dtype=float))
                res = grid.residual(u)
                rnorm = float(np.nanmax(np.abs(res)))
                continue
            report.timing_s = time.time() - t0
            raise NonConvergenceError(
                f"line search stalled at residual {rnorm:.3e}",
                residual=rnorm, worst_node=int(np.nanargmax(np.abs(res))),
            )
    report.iterations = it
    report.converged = rnorm <= tol
    if not report.converged:
        report.timing_s = time.time() - t0
        raise NonConvergenceError(
            f"no convergence in {max_iter} iterations (residual {rnorm:.3e})",
            residual=rnorm, worst_node=int(np.nanargmax(np.abs(res))),
        )
    fresh = grid.residual(u)
    report.final_residual = float(np.nanmax(np.abs(fresh)))
    report.admissibility_margin = float(grid.admissibility_margin(u).min())
    report.timing_s = time.time() - t0
    return RingField(grid, u), report
