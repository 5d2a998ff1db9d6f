"""Hessians in spherical coordinates and the structured Hessians of
b = r/rho(theta) and of phi(b).

Frame convention: {tau_1..tau_{n-1}, tau_r} with tau_a = e_a / r for an
orthonormal frame {e_a} on the unit sphere and tau_r the radial direction.
For a scalar f(theta, r),

    D^2_ab f = f_ab / r^2 + (f_r / r) delta_ab,
    D^2_ar f = f_ar / r - f_a / r^2,
    D^2_rr f = f_rr,

with f_ab the covariant second derivatives on the sphere. In the rotated
frame (first sphere direction along grad rho, trailing shape block diagonal)
the Hessian of b has the closed structure

    [ (w^3/r) a_11   (w^2/r) a_1a   0 ]
    [ (w^2/r) a_1a   (w/r) a_ab     0 ]
    [ 0              0              0 ]

and D^2 phi(b) = M D^2 b + B (grad b)(grad b)^T with M = phi', B = phi''.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .stargeom import RotatedJet, rotated_jet
from .symfunc import sigma_all
from ._batch import sym_invariants

__all__ = [
    "SphericalHessianInput",
    "hessian_spherical",
    "BStructure",
    "b_structure",
    "hessian_of_b",
    "hessian_of_phi_of_b",
    "sigma_m_structured",
    "sigma_m_lower_bound",
    "surface_bound_constants",
    "frame_to_cartesian",
]


@dataclass
class SphericalHessianInput:
    """Derivative data of a scalar at one point (r, theta).

    f_a: orthonormal sphere-frame gradient; f_ab: covariant second
    derivatives (symmetric); f_ar: radial derivative of f_a; f_r, f_rr:
    radial derivatives of f.
    """

    r: float
    f_a: np.ndarray
    f_ab: np.ndarray
    f_ar: np.ndarray
    f_r: float
    f_rr: float

    def __post_init__(self):
        self.f_a = np.asarray(self.f_a, dtype=float)
        self.f_ab = np.asarray(self.f_ab, dtype=float)
        self.f_ar = np.asarray(self.f_ar, dtype=float)
        if self.f_ab.shape != (self.f_a.size, self.f_a.size):
            raise DomainError("f_ab shape does not match f_a")
        if np.abs(self.f_ab - self.f_ab.T).max() > 1e-12 * (1.0 + np.abs(self.f_ab).max()):
            raise DomainError("f_ab must be symmetric")


def hessian_spherical(inp):
    """Ambient Hessian in the frame {tau_1..tau_{n-1}, tau_r}."""
    if inp.r <= 0.0:
        raise DomainError("hessian_spherical requires r > 0")
    d = inp.f_a.size
    n = d + 1
    r = inp.r
    h = np.zeros((n, n))
    h[:d, :d] = inp.f_ab / r**2 + (inp.f_r / r) * np.eye(d)
    mixed = inp.f_ar / r - inp.f_a / r**2
    h[:d, d] = mixed
    h[d, :d] = mixed
    h[d, d] = inp.f_rr
    return h


@dataclass
class BStructure:
    """Rotated-frame data of b = r/rho at a point x, shared by the
    structured-Hessian routines and the subsolution constructions."""

    x: np.ndarray
    r: float
    b: float
    rho: float
    w: float
    rho_1: float
    a_rot: np.ndarray         # (n-1, n-1), trailing block diagonal
    hess_b: np.ndarray        # (n, n) frame components
    grad_b: np.ndarray        # (n,) frame components
    rot: RotatedJet
    frame_full: np.ndarray    # (n, n) ambient columns [e_hat_1.., u]

    @property
    def alpha_diag(self):
        return np.diag(self.a_rot)[1:]


def b_structure(surface, x):
    """Assemble the rotated-frame structure of b = r/rho at x."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0 or not np.all(np.isfinite(x)):
        raise DomainError("point must be nonzero and finite")
    rj = rotated_jet(surface, x / r)
    n = surface.n
    a = rj.shape_rot
    w, rho = rj.w, rj.rho
    hb = np.zeros((n, n))
    hb[0, 0] = (w**3 / r) * a[0, 0]
    hb[0, 1 : n - 1] = (w**2 / r) * a[0, 1:]
    hb[1 : n - 1, 0] = hb[0, 1 : n - 1]
    hb[1 : n - 1, 1 : n - 1] = (w / r) * a[1:, 1:]
    gb = np.zeros(n)
    gb[0] = -rj.rho_1 / rho**2
    gb[n - 1] = 1.0 / rho
    frame_full = np.empty((n, n))
    frame_full[:, : n - 1] = rj.frame_ambient
    frame_full[:, n - 1] = rj.jet.point
    return BStructure(
        x=x, r=r, b=r / rho, rho=rho, w=w, rho_1=rj.rho_1,
        a_rot=a, hess_b=hb, grad_b=gb, rot=rj, frame_full=frame_full,
    )


def hessian_of_b(surface, x):
    """Hessian of b = r/rho in the rotated spherical frame (last row/column
    identically zero)."""
    return b_structure(surface, x).hess_b


def hessian_of_phi_of_b(surface, x, M, B, structure=None):
    """Hessian of phi(b) in the rotated frame, for M = phi'(b), B = phi''(b)."""
    st = structure if structure is not None else b_structure(surface, x)
    return M * st.hess_b + B * np.outer(st.grad_b, st.grad_b)


def frame_to_cartesian(structure, h_frame):
    """Conjugate a frame-component matrix into Cartesian coordinates."""
    f = structure.frame_full
    return f @ np.asarray(h_frame, dtype=float) @ f.T


def sigma_m_structured(surface, x, M, B, m, structure=None):
    """sigma_m of the Hessian of phi(b) by the closed form.

    For m >= 2:
        (M^m w^{m+2}/r^m) [sigma_m(a) - sigma_m(a_alpha)]
        + (B/rho^2) (M^{m-1} w^{m+1}/r^{m-1}) sigma_{m-1}(a)
        + (M w / r)^m sigma_m(a_alpha),
    and for m = 1:  (M w^3 / r) a_11 + (M w / r) sigma_1(a_alpha) + B w^2/rho^2,
    with a the full shape matrix and a_alpha its trailing diagonal block.
    (The m = 1 radial coefficient is B w^2/rho^2 = B (rho_1^2/rho^4 + 1/rho^2),
    the trace of the rank-one part; it reduces to B/rho^2 when grad rho = 0.)
    """
    st = structure if structure is not None else b_structure(surface, x)
    n = surface.n
    if not (1 <= m <= n - 1):
        raise DomainError(f"sigma order m={m} outside [1, {n - 1}]")
    r, w, rho = st.r, st.w, st.rho
    a_full = st.a_rot
    alpha = st.alpha_diag
    if m == 1:
        return float((M * w**3 / r) * a_full[0, 0] + (M * w / r) * alpha.sum() + B * w**2 / rho**2)
    sig_full = sym_invariants(a_full[None, :, :], m)[:, 0]
    sig_alpha = sigma_all(alpha)
    sm_alpha = float(sig_alpha[m]) if m < sig_alpha.size else 0.0
    sm1_full = float(sig_full[m - 2]) if m >= 2 else 1.0
    sm_full = float(sig_full[m - 1])
    t1 = (M**m) * (w ** (m + 2)) / (r**m) * (sm_full - sm_alpha)
    t2 = (B / rho**2) * (M ** (m - 1)) * (w ** (m + 1)) / (r ** (m - 1)) * sm1_full
    t3 = ((M * w / r) ** m) * sm_alpha
    return float(t1 + t2 + t3)


def surface_bound_constants(surface, m, grid=None, safety=1.05):
    """Sweep constants (c0, c1) for the structured lower bound.

    c1 = min over the sweep of sigma_{m-1} of the principal curvatures
    (with c1 = 1 when m = 1). c0 starts from
    n^2 C(n-1, m) (max_sweep w^3 max(1, max|a_ij|))^m and is doubled until
    the M-coefficient of the closed form is >= -c0 at every sweep point, so
    the resulting bound holds for every M, B >= 0.
    """
    from .stargeom import jet_batch, sphere_point, angle_grid

    n = surface.n
    if not (1 <= m <= n - 1):
        raise DomainError(f"order m={m} outside [1, {n - 1}]")
    U = surface.default_grid_points() if grid is None else np.atleast_2d(grid)
    if U.shape[1] == n - 1:
        U = sphere_point(U)
    arrs = jet_batch(surface, U)
    a = arrs["a"]
    w = arrs["w"]
    if m == 1:
        c1 = 1.0
    else:
        sig = sym_invariants(a, m - 1)
        c1 = float(sig[m - 2].min())
        if c1 <= 0.0:
            raise PreconditionError(
                f"surface is not strictly {m - 1}-convex (min sigma_{m - 1}(kappa) = {c1:.3e})"
            )
    # coefficient of (M/r)^m in sigma_m(D^2 phi), maximized in magnitude over
    # admissible rotations: bound it through the rotation-invariant pieces.
    amax = np.abs(a).max(axis=(1, 2))
    s_sweep = float((w**3 * np.maximum(1.0, amax)).max())
    c0 = (n**2) * math.comb(n - 1, m) * s_sweep**m
    sig_full = sym_invariants(a, m)[m - 1]
    # worst M-coefficient over the sweep: w^{m+2}(sig_m(a) - sig_m(a_alpha))
    # + w^m sig_m(a_alpha); |sig_m(a_alpha)| <= C(n-2,m) ((n-2) max|a|)^m.
    alpha_cap = math.comb(max(n - 2, 0), m) * ((n - 2) * amax) ** m if m <= n - 2 else 0.0
    worst = (w ** (m + 2)) * (np.abs(sig_full) + alpha_cap) + (w**m) * alpha_cap
    need = float(worst.max()) * safety
    while c0 < need:
        c0 *= 2.0
    return float(c0), float(c1)


def sigma_m_lower_bound(surface, x, M, B, m, constants=None, grid=None):
    """(M^{m-1}/r^{m-1}) (c1 B / rho^2 - c0 M / r), a certified lower bound
    for sigma_m of the structured Hessian when M, B >= 0."""
    if M < 0.0 or B < 0.0:
        raise PreconditionError("lower bound requires M, B >= 0")
    c0, c1 = constants if constants is not None else surface_bound_constants(surface, m, grid)
    st = b_structure(surface, x)
    return float((M / st.r) ** (m - 1) * (c1 * B / st.rho**2 - c0 * M / st.r))
