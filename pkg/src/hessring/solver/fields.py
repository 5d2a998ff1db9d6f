"""Evaluation of the certified constructions on grids: glued subsolution,
outer barriers, boundary data, and initial Newton iterates."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..subsolution import (
    _DirectionCache,
    omega_batch,
    outer_lower_barrier,
    outer_upper_barrier,
)

__all__ = [
    "glued_on_points",
    "upper_barrier_on_points",
    "lower_barrier_on_points",
    "boundary_values",
    "initial_field",
]


def glued_on_points(bundle, X):
    """Glued subsolution values at arbitrary points (vectorized).

    Inner region {s <= 1}: b^N - 1 + phi; outer: omega(s) + s^-Lambda phi~.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = bundle.target
    r = np.linalg.norm(X, axis=1)
    if np.any(r == 0.0):
        raise DomainError("glued subsolution undefined at the origin")
    U = X / r[:, None]
    cache = _DirectionCache(bundle.surface, t, bundle.data, U)
    s = t.s_of(X)
    b = r / cache.rho
    if np.any(b < 1.0 - 1e-9):
        raise DomainError("point inside the excluded domain D")
    out = np.empty(r.size)
    inner = s <= 1.0
    if np.any(inner):
        out[inner] = b[inner] ** bundle.N - 1.0 + cache.phi[inner]
    if np.any(~inner):
        tv = cache.phi_tilde(bundle.N)[0]
        so = s[~inner]
        out[~inner] = omega_batch(so, bundle.alpha, bundle.beta, t.k) \
            + so ** (-bundle.Lambda) * tv[~inner]
    return out


def upper_barrier_on_points(bundle, X, R):
    return outer_upper_barrier(np.atleast_2d(X), R, bundle)


def lower_barrier_on_points(bundle, X, R, lambda_low):
    return outer_lower_barrier(np.atleast_2d(X), R, bundle, lambda_low)


def boundary_values(grid, bundle, R, outer_data="barrier"):
    """(inner values, outer value) Dirichlet data for the ring problem:
    phi on the surface, s + mu (+ C_bar R^{1-beta} in barrier mode) outside."""
    inner_mask, outer_mask = grid.boundary_masks()
    X = grid.positions
    inner_vals = bundle.data.fn.value(
        X[inner_mask] / np.linalg.norm(X[inner_mask], axis=1, keepdims=True)
    )
    outer_const = R + bundle.mu
    if outer_data == "barrier":
        outer_const += bundle.cbar * R ** (1.0 - bundle.beta)
    elif outer_data != "direct":
        raise DomainError(f"unknown outer data mode {outer_data!r}")
    return np.asarray(inner_vals, dtype=float), float(outer_const)


def lambda_low_for(bundle, R, outer_offset, counts=None):
    """Smallest slope for the quadratic bridge 2 lam s - (2 lam R - R - mu -
    outer_offset): it must sit at or below phi on the inner surface."""
    from ..subsolution import _surface_sweep

    t = bundle.target
    U = _surface_sweep(bundle.surface, counts or bundle.grid_counts)
    rho = bundle.surface.rho(U)
    s_gamma = t.s_of(rho[:, None] * U)
    phi_gamma = bundle.data.fn.value(U)
    num = R + bundle.mu + outer_offset - phi_gamma
    den = 2.0 * (R - s_gamma)
    if np.any(den <= 0.0):
        raise DomainError("R must exceed s on the inner surface")
    return max(0.5 * (1.0 + 1e-9), float((num / den).max()) * (1.0 + 1e-9))


def initial_field(grid, bundle, R, outer_data="barrier", lambda_scale=1.0):
    """Admissible Newton start satisfying both Dirichlet rows: the pointwise
    maximum of the glued subsolution and the quadratic bridge
    2 lam s - (2 lam R - R - mu - offset), the sup of two strict
    subsolutions (its crossing kink is convex, so the discrete spectrum
    stays in the cone). lambda_scale > 1 gives a distinct admissible start
    for initialization-independence checks.

    (A cubic blend ramp between the glue and the outer data was tried first
    and rejected: the ramp curvature exceeds the cone margins whenever the
    barrier offset is order one.)
    """
    X = grid.positions
    u = glued_on_points(bundle, X)
    s = grid.s_of_nodes()
    inner_vals, outer_const = boundary_values(grid, bundle, R, outer_data)
    offset = outer_const - (R + bundle.mu)
    lam = lambda_low_for(bundle, R, offset) * float(lambda_scale)
    bridge = 2.0 * lam * s - (2.0 * lam * R - R - bundle.mu - offset)
    u = np.maximum(u, bridge)
    inner_mask, outer_mask = grid.boundary_masks()
    u[inner_mask] = inner_vals
    u[outer_mask] = outer_const
    return u
