"""Explicit strict subsolutions of sigma_k(lambda(D^2 u)) = 1 outside a
star-shaped domain, and their certification.

Three building blocks:

  inner   u_in  = b^N - 1 + phi          on E_1 \\ D  (b = r/rho)
  radial  omega_{alpha,beta}(s)          = int_1^s (1 + alpha t^-beta)^{1/k} dt
  outer   u_out = omega + s^-Lambda phi~ on R^n \\ E_1

with s = x^T A x / 2 the quadratic of the growth target, phi~ the trace of
u_in on the ellipsoid boundary {s = 1}, and beta in (k/2, k/(2 h_k)). The
glued function (u_in inside, u_out outside) is continuous with an outward
gradient jump across {s = 1}, the convex-kink direction that preserves the
subsolution property in the viscosity sense.

The existential constants (N, alpha, the barrier constants) are produced by
deterministic doubling searches over verification grids and re-verified
directly; all sweep evaluations use the ambient Cartesian derivatives of the
0-homogeneous extensions, which agree with the rotated-frame structured
formulas (cross-checked in the test suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import CertificationError, DomainError, PreconditionError
from ._batch import sym_invariants
from .stargeom import StarSurface, householder_frame, is_strictly_jconvex, sphere_point, angle_grid
from .symfunc import QuadraticTarget, hk_lower, sigma_excl

__all__ = [
    "omega", "omega_prime", "omega_double_prime", "omega_batch", "mu_of",
    "grad_omega", "hessian_omega", "sigma_m_omega", "sigma_k_omega_bound",
    "SphereFunction", "BoundaryData", "SubsolutionBundle", "BarrierSet",
    "inner_subsolution", "outer_subsolution", "glued_subsolution",
    "choose_N", "choose_alpha", "certify_bundle",
    "interior_ball_radius", "upper_barrier", "certify_upper_barrier",
    "outer_upper_barrier", "outer_lower_barrier", "cbar_of", "choose_lambda_low",
    "bundle_to_text", "bundle_from_text",
]

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# the radial profile omega and its asymptotic constant mu
# ---------------------------------------------------------------------------

def _binom_frac(p, j):
    """Generalized binomial coefficient C(p, j)."""
    out = 1.0
    for i in range(j):
        out *= (p - i) / (i + 1)
    return out

def _integrand(t, alpha, beta, k):
    return (1.0 + alpha * t ** (-beta)) ** (1.0 / k) - 1.0


def _tail_series(s, alpha, beta, k, tol=1e-16):
    """int_s^inf [(1+alpha t^-beta)^{1/k} - 1] dt by the binomial series,
    valid when y = alpha s^-beta < 1 (used for y <= 0.5)."""
    s = np.asarray(s, dtype=float)
    acc = np.zeros_like(s)
    j = 1
    while True:
        cj = _binom_frac(1.0 / k, j)
        term = cj * alpha**j * s ** (1.0 - j * beta) / (j * beta - 1.0)
        acc += term
        if np.max(np.abs(term)) < tol * max(1.0, float(np.max(np.abs(acc)))) or j > 200:
            break
        j += 1
    return acc


def _tail(s, alpha, beta, k):
    """Scalar tail integral for any s > 0."""
    if alpha == 0.0:
        return 0.0
    y = alpha * s ** (-beta)
    if y <= 0.5:
        return float(_tail_series(np.array([s]), alpha, beta, k)[0])
    s_star = (2.0 * alpha) ** (1.0 / beta)
    head, _ = quad(_integrand, s, s_star, args=(alpha, beta, k), epsabs=1e-14, epsrel=1e-12, limit=200)
    return head + float(_tail_series(np.array([s_star]), alpha, beta, k)[0])


def mu_of(alpha, beta, k):
    """The asymptotic additive constant of omega:
    int_1^inf [(1+alpha t^-beta)^{1/k} - 1] dt - 1.

    Head by adaptive quadrature up to T; tail beyond T by the 3-term binomial
    expansion, with T doubled until the rigorous 4th-order remainder bound
    |C(1/k,4)| alpha^4 T^{1-4 beta} / ((4 beta - 1)(1 - y_T)) is below 1e-12.
    """
    if beta <= 1.0:
        raise DomainError("mu diverges for beta <= 1")
    if alpha < 0.0:
        raise DomainError("alpha must be >= 0")
    if alpha == 0.0:
        return -1.0
    T = max(2.0, (2.0 * alpha) ** (1.0 / beta))
    c4 = abs(_binom_frac(1.0 / k, 4))
    while True:
        yT = alpha * T ** (-beta)
        rem = c4 * alpha**4 * T ** (1.0 - 4.0 * beta) / ((4.0 * beta - 1.0) * (1.0 - yT))
        if rem <= 1e-12:
            break
        T *= 2.0
    head, _ = quad(_integrand, 1.0, T, args=(alpha, beta, k), epsabs=1e-14, epsrel=1e-12, limit=400)
    tail3 = sum(
        _binom_frac(1.0 / k, j) * alpha**j * T ** (1.0 - j * beta) / (j * beta - 1.0)
        for j in (1, 2, 3)
    )
    return head + tail3 - 1.0


def omega_prime(s, alpha, beta, k):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("omega' requires s > 0")
    return (1.0 + alpha * s ** (-beta)) ** (1.0 / k)


def omega_double_prime(s, alpha, beta, k):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("omega'' requires s > 0")
    op = omega_prime(s, alpha, beta, k)
    return -alpha * beta * op / (k * (s ** (beta + 1.0) + alpha * s))


def omega(s, alpha, beta, k, mu=None):
    """omega_{alpha,beta}(s) = int_1^s (1+alpha t^-beta)^{1/k} dt,
    evaluated as (s - 1) + [tail(1) - tail(s)] to relative 1e-10."""
    if s <= 0.0:
        raise DomainError("omega requires s > 0")
    if alpha == 0.0:
        return s - 1.0
    return (s - 1.0) + (_tail(1.0, alpha, beta, k) - _tail(s, alpha, beta, k))


def omega_batch(svals, alpha, beta, k):
    """Vectorized omega over many s values: cumulative composite
    Gauss-Legendre in log t between the sorted query values (panel width
    <= 0.05 in log scale)."""
    svals = np.asarray(svals, dtype=float)
    if np.any(svals <= 0.0):
        raise DomainError("omega requires s > 0")
    if alpha == 0.0:
        return svals - 1.0
    uniq = np.unique(np.concatenate([svals.ravel(), [1.0]]))
    tau = np.log(uniq)
    # subdivide each gap to panels of width <= 0.05
    edges = [np.array([tau[0]])]
    for a, b in zip(tau[:-1], tau[1:]):
        m = max(1, int(math.ceil((b - a) / 0.05)))
        edges.append(np.linspace(a, b, m + 1)[1:])
    tau_e = np.concatenate(edges)
    mid = 0.5 * (tau_e[1:] + tau_e[:-1])
    half = 0.5 * (tau_e[1:] - tau_e[:-1])
    tt = mid[:, None] + half[:, None] * _GL8_X[None, :]
    t = np.exp(tt)
    g = (1.0 + alpha * t ** (-beta)) ** (1.0 / k) - 1.0
    panel = (g * t) @ _GL8_W * half
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    g_at = cum[np.searchsorted(tau_e, tau)]
    g_at = g_at - cum[np.searchsorted(tau_e, 0.0)]  # normalize at s = 1
    lookup = dict(zip(uniq.tolist(), g_at.tolist()))
    flat = np.array([lookup[v] for v in svals.ravel().tolist()])
    return (svals - 1.0) + flat.reshape(svals.shape)


# ---------------------------------------------------------------------------
# omega as a function on R^n: derivatives and sigma_m closed forms
# ---------------------------------------------------------------------------

def _sigma_weights(a):
    """sigma_{m-1}(a|i) for m = 1..n, i = 1..n, as an (n, n) table W[m-1, i]."""
    a = np.asarray(a, dtype=float)
    n = a.size
    w = np.empty((n, n))
    for i in range(n):
        for m in range(1, n + 1):
            w[m - 1, i] = sigma_excl(m - 1, a, i)
    return w


def grad_omega(x, a, alpha, beta, k):
    """D omega = omega'(s) A x."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    s = 0.5 * float(np.sum(a * x * x))
    return float(omega_prime(s, alpha, beta, k)) * (a * x)


def hessian_omega(x, a, alpha, beta, k):
    """D^2 omega = omega'(s) [ diag(a) - alpha beta / (k s (s^beta + alpha))
    (Ax)(Ax)^T ]."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if not np.any(x):
        raise DomainError("hessian_omega undefined at the origin")
    s = 0.5 * float(np.sum(a * x * x))
    op = float(omega_prime(s, alpha, beta, k))
    ax = a * x
    coef = alpha * beta / (k * s * (s**beta + alpha))
    return op * (np.diag(a) - coef * np.outer(ax, ax))


def sigma_m_omega(x, a, alpha, beta, k, m):
    """sigma_m of D^2 omega by the closed form
    [omega'(s)]^m { sigma_m(a) - alpha beta/(k s (s^beta+alpha))
                    sum_i (a_i x_i)^2 sigma_{m-1}(a|i) }."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    from .symfunc import sigma as _sigma

    s = 0.5 * float(np.sum(a * x * x))
    op = float(omega_prime(s, alpha, beta, k))
    coef = alpha * beta / (k * s * (s**beta + alpha))
    cross = sum((a[i] * x[i]) ** 2 * sigma_excl(m - 1, a, i) for i in range(a.size))
    return op**m * (_sigma(m, a) - coef * cross)


def sigma_k_omega_bound(x, bundle):
    """(exact, bound) with exact = sigma_k(D^2 omega) by the closed form and
    bound = 1 + 2 alpha h_k eta / (k s^beta); exact >= bound always (the
    cross sum is at most 2 s h_k)."""
    t = bundle.target
    exact = sigma_m_omega(x, t.a, bundle.alpha, bundle.beta, t.k, t.k)
    s = t.s_of(np.asarray(x, dtype=float))
    bound = 1.0 + 2.0 * bundle.alpha * t.h_k * bundle.eta_gap / (t.k * s**bundle.beta)
    return float(exact), float(bound)


# ---------------------------------------------------------------------------
# boundary data on the sphere
# ---------------------------------------------------------------------------

class SphereFunction:
    """Polynomial-in-u scalar on the sphere with ambient derivatives of its
    0-homogeneous extension. terms: list of (coef, exponent tuple)."""

    def __init__(self, n, terms):
        self.n = int(n)
        self.terms = [(float(c), tuple(int(e) for e in ex)) for c, ex in terms]
        for _, ex in self.terms:
            if len(ex) != self.n:
                raise DomainError("term exponent length must equal n")

    def ambient(self, u):
        from .stargeom import homogeneous_field

        U = np.atleast_2d(np.asarray(u, dtype=float))
        m, n = U.shape
        val = np.zeros(m)
        grad = np.zeros((m, n))
        hess = np.zeros((m, n, n))
        for coef, exps in self.terms:
            v, g, h = homogeneous_field(U, exps, coef)
            val += v
            grad += g
            hess += h
        return val, grad, hess

    def value(self, u):
        single = np.asarray(u).ndim == 1
        v = self.ambient(u)[0]
        return float(v[0]) if single else v

    @classmethod
    def zero(cls, n):
        return cls(n, [])


@dataclass
class BoundaryData:
    """Dirichlet data phi on the inner surface, given on the sphere through
    the star parametrization and extended radially by phi(r, theta) = phi(theta)."""

    fn: SphereFunction

    def __post_init__(self):
        probe = self.fn.ambient(sphere_point(angle_grid(self.fn.n, (8,) * (self.fn.n - 2) + (16,))))
        if not all(np.all(np.isfinite(p)) for p in probe):
            raise DomainError("boundary data is not finite on the sphere")

    @property
    def n(self):
        return self.fn.n

    def max_abs(self, U=None):
        if U is None:
            U = sphere_point(angle_grid(self.n, (16,) * (self.n - 2) + (32,)))
        return float(np.abs(self.fn.value(U)).max())


# ---------------------------------------------------------------------------
# ambient assembly of the constructions (batched)
# ---------------------------------------------------------------------------

def _quadratic_field(target):
    n = target.n
    terms = []
    for i, ai in enumerate(target.a):
        ex = [0] * n
        ex[i] = 2
        terms.append((ai, ex))
    return SphereFunction(n, terms)


class _DirectionCache:
    """Per-direction ambient data shared by the certification sweeps."""

    def __init__(self, surface, target, data, U):
        self.U = U = np.atleast_2d(np.asarray(U, dtype=float))
        self.rho, self.g_rho, self.h_rho = surface.ambient_data(U)
        self.phi, self.g_phi, self.h_phi = data.fn.ambient(U)
        qf = _quadratic_field(target)
        self.q, self.g_q, self.h_q = qf.ambient(U)
        n = U.shape[1]
        eye = np.eye(n)
        rho = self.rho
        # b = r psi(u), psi = 1/rho: r-independent pieces of grad/hess of b
        psi = 1.0 / rho
        g_psi = -self.g_rho / rho[:, None] ** 2
        h_psi = (
            2.0 * self.g_rho[:, :, None] * self.g_rho[:, None, :] / rho[:, None, None] ** 3
            - self.h_rho / rho[:, None, None] ** 2
        )
        self.grad_b = psi[:, None] * U + g_psi
        uu = U[:, :, None] * U[:, None, :]
        self.hess_b_unit = (
            psi[:, None, None] * (eye - uu)
            + U[:, :, None] * g_psi[:, None, :]
            + g_psi[:, :, None] * U[:, None, :]
            + h_psi
        )  # actual Hessian of b at radius r is this / r
        # inner-boundary and ellipsoid radii along each ray
        self.r_gamma = rho.copy()
        self.r_e1 = np.sqrt(2.0 / self.q)
        self.b_e1 = self.r_e1 / rho

    def phi_tilde(self, N):
        """(value, ambient grad, ambient hess at u) of the 0-homogeneous
        extension of phi~ = b_E1^N - 1 + phi."""
        rho, q = self.rho, self.q
        gl = -0.5 * self.g_q / q[:, None] - self.g_rho / rho[:, None]
        hl = -0.5 * (
            self.h_q / q[:, None, None]
            - self.g_q[:, :, None] * self.g_q[:, None, :] / q[:, None, None] ** 2
        ) - (
            self.h_rho / rho[:, None, None]
            - self.g_rho[:, :, None] * self.g_rho[:, None, :] / rho[:, None, None] ** 2
        )
        logb = math.log(math.sqrt(2.0)) - 0.5 * np.log(q) - np.log(rho)
        if np.max(N * logb) > 500.0:
            raise CertificationError(
                f"b_E1^N overflows at N={N}; construction is numerically unusable",
                worst_point=self.U[int(np.argmax(logb))],
            )
        p = np.exp(N * logb)
        val = p - 1.0 + self.phi
        grad = N * p[:, None] * gl + self.g_phi
        hess = (
            p[:, None, None] * (N * hl + N**2 * gl[:, :, None] * gl[:, None, :])
            + self.h_phi
        )
        return val, grad, hess


def _inner_hessian_batch(cache, N, rvals):
    """Hessians of u_in = b^N - 1 + phi at radii rvals (D, R) along every
    cached direction; returns (D, R, n, n)."""
    D, n = cache.U.shape
    r = np.asarray(rvals, dtype=float)
    b = r / cache.rho[:, None]
    M = N * b ** (N - 1)
    B = N * (N - 1) * b ** (N - 2)
    hb = cache.hess_b_unit[:, None, :, :] / r[:, :, None, None]
    gb = cache.grad_b[:, None, :, None] * cache.grad_b[:, None, None, :]
    hphi = cache.h_phi[:, None, :, :] / r[:, :, None, None] ** 2
    return M[:, :, None, None] * hb + B[:, :, None, None] * gb + hphi


def _inner_gradient_batch(cache, N, rvals):
    r = np.asarray(rvals, dtype=float)
    b = r / cache.rho[:, None]
    M = N * b ** (N - 1)
    return M[:, :, None] * cache.grad_b[:, None, :] + cache.g_phi[:, None, :] / r[:, :, None]


def _outer_fields_batch(cache, target, N, alpha, beta, Lambda, svals, need_value=False, mu=None):
    """Gradient/Hessian (and optionally value) of u_out = omega + s^-Lambda
    phi~ on the mesh (direction, s); returns dict of arrays."""
    a = np.asarray(target.a, dtype=float)
    k = target.k
    D = cache.U.shape[0]
    s = np.asarray(svals, dtype=float)  # (S,)
    r = np.sqrt(2.0 * s[None, :] / cache.q[:, None])  # (D, S)
    X = r[:, :, None] * cache.U[:, None, :]
    AX = a[None, None, :] * X
    op = (1.0 + alpha * s ** (-beta)) ** (1.0 / k)  # (S,)
    coef = alpha * beta / (k * s * (s**beta + alpha))  # (S,)
    eyeA = np.diag(a)
    h_om = op[None, :, None, None] * (
        eyeA[None, None, :, :] - coef[None, :, None, None] * AX[:, :, :, None] * AX[:, :, None, :]
    )
    tv, tg_u, th_u = cache.phi_tilde(N)
    f = s ** (-Lambda)
    df = -Lambda * s ** (-Lambda - 1.0)
    ddf = Lambda * (Lambda + 1.0) * s ** (-Lambda - 2.0)
    Df = df[None, :, None] * AX
    D2f = df[None, :, None, None] * eyeA[None, None, :, :] + ddf[None, :, None, None] * AX[:, :, :, None] * AX[:, :, None, :]
    Dg = tg_u[:, None, :] / r[:, :, None]
    D2g = th_u[:, None, :, :] / r[:, :, None, None] ** 2
    h_psi = (
        tv[:, None, None, None] * D2f
        + Df[:, :, :, None] * Dg[:, :, None, :]
        + Dg[:, :, :, None] * Df[:, :, None, :]
        + f[None, :, None, None] * D2g
    )
    grad = op[None, :, None] * AX + tv[:, None, None] * Df + f[None, :, None] * Dg
    out = {"hess": h_om + h_psi, "grad": grad, "X": X, "AX": AX, "r": r}
    if need_value:
        om = omega_batch(s, alpha, beta, k)
        out["value"] = om[None, :] + f[None, :] * tv[:, None]
    return out


# ---------------------------------------------------------------------------
# single-point evaluators
# ---------------------------------------------------------------------------

def inner_subsolution(x, bundle, tol=1e-9):
    """(value, gradient, hessian) of u_in = b^N - 1 + phi at x in the closed
    ring between the surface and the unit ellipsoid level {s = 1}."""
    x = np.asarray(x, dtype=float)
    t = bundle.target
    s = float(t.s_of(x))
    b = float(frak_b_of(bundle.surface, x))
    if s > 1.0 + tol or b < 1.0 - tol:
        raise DomainError(f"point outside closure of E_1 minus D (s={s:.6g}, b={b:.6g})")
    cache = _DirectionCache(bundle.surface, t, bundle.data, x[None, :] / np.linalg.norm(x))
    r = np.array([[np.linalg.norm(x)]])
    H = _inner_hessian_batch(cache, bundle.N, r)[0, 0]
    G = _inner_gradient_batch(cache, bundle.N, r)[0, 0]
    val = b**bundle.N - 1.0 + float(cache.phi[0])
    return val, G, H


def outer_subsolution(x, bundle, tol=1e-9):
    """(value, gradient, hessian) of u_out = omega(s) + s^-Lambda phi~ for x
    outside (the closure allows s = 1)."""
    x = np.asarray(x, dtype=float)
    t = bundle.target
    s = float(t.s_of(x))
    if s < 1.0 - tol:
        raise DomainError(f"point inside E_1 (s={s:.6g})")
    u = x / np.linalg.norm(x)
    cache = _DirectionCache(bundle.surface, t, bundle.data, u[None, :])
    out = _outer_fields_batch(
        cache, t, bundle.N, bundle.alpha, bundle.beta, bundle.Lambda,
        np.array([s]), need_value=True,
    )
    return float(out["value"][0, 0]), out["grad"][0, 0], out["hess"][0, 0]


def frak_b_of(surface, x):
    from .stargeom import frak_b

    return frak_b(surface, x)


def glued_subsolution(x, bundle, tol=1e-9):
    """Piecewise value of the glued subsolution; on the interface {s = 1}
    returns (value, inner normal derivative, outer normal derivative)."""
    x = np.asarray(x, dtype=float)
    t = bundle.target
    s = float(t.s_of(x))
    b = float(frak_b_of(bundle.surface, x))
    if b < 1.0 - tol:
        raise DomainError("point inside the excluded domain D")
    if s < 1.0 - tol:
        return inner_subsolution(x, bundle)[0]
    if s > 1.0 + tol:
        return outer_subsolution(x, bundle)[0]
    vi, gi, _ = inner_subsolution(x, bundle, tol=10 * tol)
    vo, go, _ = outer_subsolution(x, bundle, tol=10 * tol)
    ax = np.asarray(t.a) * x
    nu = ax / np.linalg.norm(ax)
    if abs(vi - vo) > 1e-10 * (1.0 + abs(vi)):
        raise ArithmeticError(f"glued values disagree on the interface: {vi} vs {vo}")
    return vi, float(gi @ nu), float(go @ nu)


# ---------------------------------------------------------------------------
# certification searches
# ---------------------------------------------------------------------------

def _surface_sweep(surface, counts):
    return sphere_point(angle_grid(surface.n, counts))


def _check_containment(surface, target, U):
    """max_s(Gamma) < 1: the closed domain sits inside the unit ellipsoid level."""
    rho = surface.rho(U)
    s_gamma = target.s_of(rho[:, None] * U)
    worst = float(s_gamma.max())
    if worst >= 1.0:
        raise CertificationError(
            f"surface is not contained in E_1 (max s on Gamma = {worst:.6g})",
            worst_point=U[int(np.argmax(s_gamma))], worst_margin=1.0 - worst,
        )
    return 1.0 - worst


def choose_N(surface, target, data, counts=(64, 128), n_radial=16, margin=1e-6, n_max=2**20):
    """Smallest power-of-two N certifying the inner construction: on a dense
    sweep of the ring, sigma_k > 1 + margin and sigma_m > margin for m < k.

    Returns (N, info dict). Raises CertificationError on exhaustion with the
    worst point and margin of the last attempt.
    """
    k = target.k
    ok, conv_margin = is_strictly_jconvex(surface, k - 1)
    if not ok:
        raise PreconditionError(
            f"surface is not strictly {k - 1}-convex (margin {conv_margin:.3e})"
        )
    if surface.n != target.n:
        raise DomainError("surface and target dimensions differ")
    U = _surface_sweep(surface, counts)
    containment = _check_containment(surface, target, U)
    cache = _DirectionCache(surface, target, data, U)
    if np.any(cache.b_e1 <= 1.0):
        raise CertificationError("domain boundary touches the ellipsoid level {s=1}")
    frac = np.linspace(0.0, 1.0, n_radial)
    rvals = cache.r_gamma[:, None] * (cache.r_e1 / cache.r_gamma)[:, None] ** frac[None, :]
    N = 2
    last = None
    while N <= n_max:
        H = _inner_hessian_batch(cache, N, rvals)
        sig = sym_invariants(H, k)
        mk = float(sig[k - 1].min()) - 1.0
        mlow = float(sig[:-1].min()) if k > 1 else mk
        last = (N, mk, mlow)
        if mk >= margin and (k == 1 or mlow >= margin):
            idx = np.unravel_index(int(np.argmin(sig[k - 1])), sig[k - 1].shape)
            return N, {
                "margin_sigma_k": mk,
                "margin_sigma_lower": mlow,
                "surface_convexity": conv_margin,
                "containment": containment,
                "worst_point": rvals[idx] * cache.U[idx[0]],
            }
        N *= 2
    flat = int(np.argmin(sig[k - 1]))
    idx = np.unravel_index(flat, sig[k - 1].shape)
    raise CertificationError(
        f"inner certification failed up to N={n_max} "
        f"(sigma_k margin {last[1]:.3e}, lower margin {last[2]:.3e})",
        worst_point=rvals[idx] * cache.U[idx[0]], worst_margin=min(last[1], last[2]),
    )


def choose_alpha(
    surface, target, data, N, beta, Lambda,
    counts=(64, 128), n_s=256, s_max=1e6, alpha_max=2.0**30,
):
    """Smallest power-of-two alpha certifying the outer construction:

      (i)  sigma_k(D^2 u_out) > 1 and sigma_m > 0 (m < k) on a log sweep
           of {1 <= s <= s_max};
      (ii) outward normal derivative jump D_nu u_out > D_nu u_in on {s = 1};
      (iii) s + mu(alpha, beta) >= phi on the inner surface.

    Returns (alpha, info dict).
    """
    k = target.k
    lo, hi = target.beta_range
    if not (lo < beta < hi):
        raise DomainError(f"beta={beta} outside ({lo}, {hi})")
    if Lambda < beta - 1.0 or Lambda <= 0.0:
        raise DomainError("Lambda must satisfy Lambda >= beta - 1 and Lambda > 0")
    U = _surface_sweep(surface, counts)
    cache = _DirectionCache(surface, target, data, U)
    svals = np.geomspace(1.0, s_max, n_s)
    # inner-side normal derivative on {s = 1} (alpha-independent)
    g_in = _inner_gradient_batch(cache, N, cache.r_e1[:, None])[:, 0, :]
    a = np.asarray(target.a, dtype=float)
    x_e1 = cache.r_e1[:, None] * cache.U
    ax_e1 = a[None, :] * x_e1
    nu = ax_e1 / np.linalg.norm(ax_e1, axis=1, keepdims=True)
    dn_in = np.einsum("di,di->d", g_in, nu)
    s_gamma = target.s_of(cache.rho[:, None] * cache.U)
    phi_gamma = cache.phi
    alpha = 1.0
    history = []
    while alpha <= alpha_max:
        out = _outer_fields_batch(cache, target, N, alpha, beta, Lambda, svals)
        sig = sym_invariants(out["hess"], k)
        mk = float(sig[k - 1].min()) - 1.0
        mlow = float(sig[:-1].min()) if k > 1 else mk
        g_out = _outer_fields_batch(cache, target, N, alpha, beta, Lambda, np.array([1.0]))["grad"][:, 0, :]
        jump = float((np.einsum("di,di->d", g_out, nu) - dn_in).min())
        mu = mu_of(alpha, beta, k)
        gamma_gap = float((s_gamma + mu - phi_gamma).min())
        history.append((alpha, mk, mlow, jump, gamma_gap))
        if mk > 0.0 and mlow > 0.0 and jump > 0.0 and gamma_gap >= 0.0:
            return alpha, {
                "margin_sigma_k": mk,
                "margin_sigma_lower": mlow,
                "margin_jump": jump,
                "margin_gamma_gap": gamma_gap,
                "mu": mu,
            }
        alpha *= 2.0
    raise CertificationError(
        f"outer certification failed up to alpha={alpha_max}; "
        f"last margins sigma_k {history[-1][1]:.3e}, lower {history[-1][2]:.3e}, "
        f"jump {history[-1][3]:.3e}, gamma gap {history[-1][4]:.3e}",
        worst_margin=min(history[-1][1:]),
    )


# ---------------------------------------------------------------------------
# bundle
# ---------------------------------------------------------------------------

@dataclass
class BarrierSet:
    """Constants of the boundary barriers: the tangent-ball harmonic upper
    barrier (C_hat, eta_ball with per-point centers z = p - eta nu), and the
    quadratic outer barriers at level R."""

    C_hat: float
    eta_ball: float
    lambda_low: float
    C_bar: float
    R: float


@dataclass
class SubsolutionBundle:
    """A certified set of construction parameters plus evaluators."""

    target: QuadraticTarget
    surface: StarSurface
    data: BoundaryData
    N: int
    alpha: float
    beta: float
    Lambda: float
    mu: float
    cbar: float = 0.0
    margins: dict = field(default_factory=dict)
    grid_counts: tuple = (64, 128)
    config_hash: str = "-"

    def __post_init__(self):
        lo, hi = self.target.beta_range
        if not (lo < self.beta < hi):
            raise DomainError(f"beta={self.beta} outside ({lo}, {hi})")
        if self.Lambda + 1.0 < self.beta:
            raise DomainError("Lambda + 1 must be >= beta")
        mu_check = mu_of(self.alpha, self.beta, self.target.k)
        if abs(mu_check - self.mu) > 1e-10 * (1.0 + abs(self.mu)):
            raise DomainError(f"mu={self.mu} inconsistent with quadrature {mu_check}")

    @property
    def eta_gap(self):
        return self.target.k / (2.0 * self.target.h_k) - self.beta

    @property
    def n(self):
        return self.target.n

    @property
    def k(self):
        return self.target.k

    def value(self, x):
        v = glued_subsolution(x, self)
        return v[0] if isinstance(v, tuple) else v


def certify_bundle(surface, target, data, beta=None, Lambda=None,
                   counts=(64, 128), n_s=256, margin=1e-6, config_hash="-"):
    """Run the full certification chain and return a SubsolutionBundle."""
    lo, hi = target.beta_range
    if beta is None:
        beta = 0.5 * (lo + hi)  # midpoint of the admissible interval
    if Lambda is None:
        Lambda = max(beta - 1.0, 1e-6)
    N, info_n = choose_N(surface, target, data, counts=counts, margin=margin)
    alpha, info_a = choose_alpha(surface, target, data, N, beta, Lambda, counts=counts, n_s=n_s)
    margins = {
        "surface_convexity": info_n["surface_convexity"],
        "containment": info_n["containment"],
        "inner_sigma_k": info_n["margin_sigma_k"],
        "inner_sigma_lower": info_n["margin_sigma_lower"],
        "outer_sigma_k": info_a["margin_sigma_k"],
        "outer_sigma_lower": info_a["margin_sigma_lower"],
        "jump": info_a["margin_jump"],
        "gamma_gap": info_a["margin_gamma_gap"],
    }
    bundle = SubsolutionBundle(
        target=target, surface=surface, data=data, N=N, alpha=alpha, beta=beta,
        Lambda=Lambda, mu=info_a["mu"], margins=margins, grid_counts=tuple(counts),
        config_hash=config_hash,
    )
    bundle.cbar = cbar_of(bundle)
    return bundle


# ---------------------------------------------------------------------------
# barriers
# ---------------------------------------------------------------------------

def cbar_of(bundle, s_lo=None, s_hi=None, n_sweep=512, safety=1.05):
    """C_bar with |u_glued - (s + mu)| <= C_bar s^{1-beta} on a log sweep,
    padded by a safety factor so the outer barrier dominates strictly."""
    t = bundle.target
    s_lo = 1.0 if s_lo is None else s_lo
    s_hi = 1e7 if s_hi is None else s_hi
    U = _surface_sweep(bundle.surface, tuple(max(c // 4, 6) for c in bundle.grid_counts))
    cache = _DirectionCache(bundle.surface, t, bundle.data, U)
    svals = np.geomspace(s_lo, s_hi, n_sweep)
    out = _outer_fields_batch(cache, t, bundle.N, bundle.alpha, bundle.beta,
                              bundle.Lambda, svals, need_value=True)
    rem = np.abs(out["value"] - (svals[None, :] + bundle.mu)) * svals[None, :] ** (bundle.beta - 1.0)
    return float(rem.max()) * safety


def outer_upper_barrier(x, R, bundle):
    """bar u_R = s + mu + C_bar R^{1-beta}."""
    s = bundle.target.s_of(np.asarray(x, dtype=float))
    return s + bundle.mu + bundle.cbar * R ** (1.0 - bundle.beta)


def outer_lower_barrier(x, R, bundle, lambda_low):
    """lambda x^T A x - (2 lambda R - R - mu - C_bar R^{1-beta}); equals the
    upper barrier on {s = R} and is a strict subsolution for lambda > 1/2."""
    s = bundle.target.s_of(np.asarray(x, dtype=float))
    return 2.0 * lambda_low * s - (2.0 * lambda_low * R - R - bundle.mu
                                   - bundle.cbar * R ** (1.0 - bundle.beta))


def choose_lambda_low(bundle, R, counts=None):
    """Smallest workable lambda for the outer lower barrier: the barrier must
    sit below phi on the inner surface; lambda -> 1/2 as R grows."""
    t = bundle.target
    U = _surface_sweep(bundle.surface, counts or bundle.grid_counts)
    rho = bundle.surface.rho(U)
    s_gamma = t.s_of(rho[:, None] * U)
    phi_gamma = bundle.data.fn.value(U)
    num = R + bundle.mu + bundle.cbar * R ** (1.0 - bundle.beta) - phi_gamma
    den = 2.0 * (R - s_gamma)
    if np.any(den <= 0.0):
        raise DomainError("R must exceed s on the inner surface")
    lam = max(0.5 * (1.0 + 1e-9), float((num / den).max()) * (1.0 + 1e-9))
    worst = float((outer_lower_barrier(rho[:, None] * U, R, bundle, lam) - phi_gamma).max())
    if worst > 1e-9:
        raise CertificationError(f"lower barrier fails on Gamma by {worst:.3e}")
    return lam


def interior_ball_radius(bundle_or_surface, counts=(24, 48), shrink=0.5):
    """Uniform interior tangent-ball radius estimate: curvature-limited
    radius and a pairwise reach proxy over a sample sweep, scaled by a
    conservative factor, then verified (ball centers stay farther than eta
    from every surface sample)."""
    surface = getattr(bundle_or_surface, "surface", bundle_or_surface)
    from .stargeom import jet_batch

    U = _surface_sweep(surface, counts)
    arrs = jet_batch(surface, U)
    kap_max = np.array([np.linalg.eigvalsh(a).max() for a in arrs["a"]])
    r_curv = float(np.min(1.0 / np.maximum(kap_max, 1e-12)))
    P = arrs["rho"][:, None] * U
    nu = _outward_normals(surface, U)
    diff = P[None, :, :] - P[:, None, :]
    dist2 = np.sum(diff * diff, axis=2)
    dots = np.abs(np.einsum("pqi,pi->pq", diff, nu))
    np.fill_diagonal(dots, 1.0)
    np.fill_diagonal(dist2, np.inf)
    reach = float(np.min(dist2 / (2.0 * dots + 1e-300)))
    eta = shrink * min(r_curv, reach)
    # a-posteriori: the center p - eta nu keeps distance >= eta to all samples
    for _ in range(40):
        z = P - eta * nu
        dmin = np.sqrt(((z[:, None, :] - P[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        if np.all(dmin >= eta * (1.0 - 1e-9)):
            return eta
        eta *= 0.5
    raise CertificationError("no verifiable interior ball radius found")


def _outward_normals(surface, U):
    rho, grad, _ = surface.ambient_data(U)
    g = U / rho[:, None] - grad / rho[:, None] ** 2  # ambient gradient of b
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def upper_barrier(p_hat, x, C, eta, bundle):
    """Tangent-ball harmonic barrier at the surface point p_hat:

    -C |x - z|^{2-n} + C eta^{2-n} + phi(p) + <tangential grad phi, x - p>,

    with z = p_hat - eta nu(p_hat) the interior ball center. Harmonic away
    from z; equals phi(p_hat) at x = p_hat.
    """
    n = bundle.n
    p_hat = np.asarray(p_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    u = p_hat / np.linalg.norm(p_hat)
    nu = _outward_normals(bundle.surface, u[None, :])[0]
    z = p_hat - eta * nu
    d = np.linalg.norm(np.atleast_2d(x) - z, axis=1)
    if np.any(d < 1e-14):
        raise DomainError("barrier evaluated at its singular center")
    _, gphi, _ = bundle.data.fn.ambient(u[None, :])
    gphi_t = gphi[0] - (gphi[0] @ nu) * nu  # tangential part on Gamma
    lin = (np.atleast_2d(x) - p_hat) @ gphi_t
    val = -C * d ** (2.0 - n) + C * eta ** (2.0 - n) + bundle.data.fn.value(u) + lin
    return float(val[0]) if np.asarray(x).ndim == 1 else val


def certify_upper_barrier(bundle, R, p_counts=(8, 16), gamma_counts=None, c_max=2.0**40):
    """Doubling search for C such that, for every anchor p_hat on a sweep,
    the barrier dominates phi on the inner surface and dominates the outer
    upper barrier bar u_R on the level {s = 1}. Returns a BarrierSet."""
    eta = interior_ball_radius(bundle)
    U_p = _surface_sweep(bundle.surface, p_counts)
    U_g = _surface_sweep(bundle.surface, gamma_counts or bundle.grid_counts)
    rho_g = bundle.surface.rho(U_g)
    P_g = rho_g[:, None] * U_g
    phi_g = bundle.data.fn.value(U_g)
    q = _quadratic_field(bundle.target).ambient(U_g)[0]
    X_e1 = np.sqrt(2.0 / q)[:, None] * U_g
    ubar_e1 = outer_upper_barrier(X_e1, R, bundle)
    rho_p = bundle.surface.rho(U_p)
    C = 1.0
    while C <= c_max:
        ok = True
        for i in range(U_p.shape[0]):
            p_hat = rho_p[i] * U_p[i]
            vals_g = upper_barrier(p_hat, P_g, C, eta, bundle)
            if np.min(vals_g - phi_g) < -1e-10:
                ok = False
                break
            vals_e = upper_barrier(p_hat, X_e1, C, eta, bundle)
            if np.min(vals_e - ubar_e1) <= 0.0:
                ok = False
                break
        if ok:
            lam = choose_lambda_low(bundle, R)
            return BarrierSet(C_hat=C, eta_ball=eta, lambda_low=lam,
                              C_bar=bundle.cbar, R=R)
        C *= 2.0
    raise CertificationError(f"upper-barrier certification failed up to C={c_max}")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def bundle_to_text(bundle):
    """Deterministic UTF-8 key-value document for a certified bundle."""
    lines = ["hessring-bundle 1"]
    from . import __version__

    lines.append(f"version {__version__}")
    lines.append(f"config_hash {bundle.config_hash}")
    lines.append(f"n {bundle.n}")
    lines.append(f"k {bundle.k}")
    lines.append("a " + " ".join(repr(v) for v in bundle.target.a))
    lines.append(f"N {bundle.N}")
    lines.append(f"alpha {bundle.alpha!r}")
    lines.append(f"beta {bundle.beta!r}")
    lines.append(f"eta_gap {bundle.eta_gap!r}")
    lines.append(f"Lambda {bundle.Lambda!r}")
    lines.append(f"mu {bundle.mu!r}")
    lines.append(f"cbar {bundle.cbar!r}")
    for key in sorted(bundle.margins):
        lines.append(f"margins.{key} {float(bundle.margins[key])!r}")
    lines.append("grid.surface " + " ".join(str(c) for c in bundle.grid_counts))
    return "\n".join(lines) + "\n"


def bundle_from_text(text, surface, data):
    """Rebuild a bundle from its document plus the problem surface/data."""
    fields = {}
    margins = {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("hessring-bundle"):
        raise DomainError("not a bundle document")
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key.startswith("margins."):
            margins[key[len("margins."):]] = float(rest)
        else:
            fields[key] = rest
    target = QuadraticTarget(tuple(float(t) for t in fields["a"].split()), int(fields["k"]))
    bundle = SubsolutionBundle(
        target=target, surface=surface, data=data,
        N=int(fields["N"]), alpha=float(fields["alpha"]), beta=float(fields["beta"]),
        Lambda=float(fields["Lambda"]), mu=float(fields["mu"]),
        cbar=float(fields["cbar"]), margins=margins,
        grid_counts=tuple(int(c) for c in fields["grid.surface"].split()),
        config_hash=fields.get("config_hash", "-"),
    )
    return bundle
