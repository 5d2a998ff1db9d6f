"""Comparison-principle and maximum-principle checks on converged fields."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .fields import glued_on_points

__all__ = ["verify_comparison", "verify_gradient_maximum", "sweep_gradient_exponent"]


def verify_comparison(field, bundle, R, lambda_low=None, tol=1e-8):
    """Ordering of the converged field against the construction envelopes:
    glued subsolution <= u_R <= outer upper barrier, violations reported in
    absolute terms (positive numbers mean a violation beyond `tol`)."""
    grid = field.grid
    X = grid.positions
    lower = glued_on_points(bundle, X)
    upper = bundle.target.s_of(X) + bundle.mu + bundle.cbar * R ** (1.0 - bundle.beta)
    low_gap = float((field.u - lower).min())
    up_gap = float((upper - field.u).min())
    entries = {
        "min_u_minus_glued": low_gap,
        "min_upper_minus_u": up_gap,
        "lower_ok": low_gap > -tol,
        "upper_ok": up_gap > -tol,
    }
    if lambda_low is not None:
        from .fields import lower_barrier_on_points

        lb = lower_barrier_on_points(bundle, X, R, lambda_low)
        entries["min_u_minus_lower_barrier"] = float((field.u - lb).min())
    return entries


def verify_monotone_pair(field_small, field_large, tol=1e-8):
    """u_{R'} <= u_R + tol on the shared nodes of two nested ladders (R' > R).

    Requires grids built with the same base/block counts so the smaller grid
    is literally a prefix of the larger one."""
    gs, gl = field_small.grid, field_large.grid
    if gs.mode != gl.mode:
        raise DomainError("paired fields must share a grid mode")
    if gs.mode == "radial":
        m = gs.n_nodes
        if not np.allclose(gs.r, gl.r[:m], rtol=0.0, atol=1e-13 * gs.r[-1]):
            raise DomainError("radial ladders are not nested")
        # interior overlap only: the outer boundary row of the small grid
        # carries Dirichlet data, not the PDE solution
        diff = field_large.u[: m - 1] - field_small.u[: m - 1]
    else:
        ms = gs.n_nodes
        shells = gs.n_t
        per = gs.n_lat * gs.n_lon
        if not np.allclose(gs.X, gl.X[:ms], rtol=0.0, atol=1e-12 * np.abs(gs.X).max()):
            raise DomainError("ring grids are not nested")
        diff = field_large.u[: ms - per] - field_small.u[: ms - per]
    worst = float(diff.max())
    return {"max_larger_minus_smaller": worst, "monotone_ok": worst <= tol}


def verify_gradient_maximum(field, rel_tol=1e-6):
    """Discrete maximum-principle checks: |Du| and the Laplacian attain their
    maxima on the boundary (within rel_tol times the boundary scale)."""
    grid = field.grid
    gmag = grid.gradient_all(field.u)
    inner_mask, outer_mask = grid.boundary_masks()
    bnd = inner_mask | outer_mask
    g_bnd = float(gmag[bnd].max())
    g_int = float(gmag[~bnd].max()) if np.any(~bnd) else -np.inf
    if grid.mode == "radial":
        lap = grid.laplacian_all(field.u)
        lap_bnd = float(np.max(lap[[0, -1]]))
        lap_int = float(lap[1:-1].max())
    else:
        lap_i = grid.laplacian_interior(field.u)
        lap_int = float(lap_i.max())
        # boundary Laplacian from the nearest interior shell (one-sided
        # second differences across a curved boundary are noise-prone)
        per = grid.n_lat * grid.n_lon
        lap_bnd = float(np.max([lap_i[:per].max(), lap_i[-per:].max()]))
    return {
        "grad_interior_max": g_int,
        "grad_boundary_max": g_bnd,
        "grad_ok": g_int <= g_bnd * (1.0 + rel_tol),
        "grad_outer_max": float(gmag[outer_mask].max()),
        "lap_interior_max": lap_int,
        "lap_boundary_max": lap_bnd,
        "lap_ok": lap_int <= lap_bnd * (1.0 + rel_tol),
    }


def sweep_gradient_exponent(entries):
    """Log-log slope of the outer-boundary gradient maxima against R.

    entries: list of (R, grad_outer_max); returns (slope, r2)."""
    arr = np.asarray(entries, dtype=float)
    if arr.shape[0] < 2:
        raise DomainError("need at least two sweep points")
    x = np.log(arr[:, 0])
    y = np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2
