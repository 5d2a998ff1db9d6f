"""Star-shaped surfaces as radial graphs over the unit sphere.

A surface is the set {rho(u) u : u in S^{n-1}} with rho > 0. From first and
second covariant derivatives of rho on the sphere the module assembles the
induced metric, its inverse square root, the second fundamental form

    h_ij = (rho / w) (delta_ij + Phi_i Phi_j - Phi_{i,j}),   Phi = log rho,

and the shape operator a_ij = gamma^{ik} h_kl gamma^{lj}, whose eigenvalues
are the principal curvatures. The sign convention makes the unit sphere have
curvature +1.

Derivatives are taken two ways: closed-form surfaces carry analytic ambient
derivatives of the 0-homogeneous extension rho(x/|x|) (whose ambient Hessian
restricted to tangent directions equals the covariant Hessian on the sphere);
sampled-grid surfaces (n = 3) are interpolated on the colatitude/longitude
chart and corrected with the round-metric Christoffel symbols.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ._batch import sym_invariants
from .errors import DomainError, PreconditionError
from .symfunc import Spectrum, jacobi_eigh, sigma_all

__all__ = [
    "StarSurface",
    "SurfaceJet",
    "RotatedJet",
    "sphere_point",
    "chart_frame",
    "chart_angles",
    "angle_grid",
    "householder_frame",
    "jet_at",
    "jet_batch",
    "rotated_jet",
    "is_strictly_jconvex",
    "frak_b",
    "load_surface",
    "dump_surface",
]

_POLE_TOL = 1e-9


# ---------------------------------------------------------------------------
# hyperspherical chart
# ---------------------------------------------------------------------------

def sphere_point(angles):
    """Unit vector for hyperspherical angles (theta_1..theta_{n-1}).

    u_i = cos(theta_i) prod_{j<i} sin(theta_j), u_n = prod sin(theta_j).
    theta_1..theta_{n-2} in (0, pi), theta_{n-1} in [0, 2 pi).
    """
    th = np.atleast_2d(np.asarray(angles, dtype=float))
    m, d = th.shape
    n = d + 1
    u = np.empty((m, n))
    run = np.ones(m)
    for i in range(d):
        u[:, i] = np.cos(th[:, i]) * run
        run = run * np.sin(th[:, i])
    u[:, n - 1] = run
    return u[0] if np.asarray(angles).ndim == 1 else u


def chart_frame(angles):
    """Orthonormal coordinate tangent frame e_hat_a at the chart point.

    Returns (u, E) with E of shape (n, n-1); column a is the normalized
    theta_a coordinate direction. Undefined at chart poles (sin theta_a = 0
    for a < n-1).
    """
    th = np.asarray(angles, dtype=float)
    d = th.size
    n = d + 1
    u = sphere_point(th)
    E = np.zeros((n, d))
    for a in range(d):
        sa, ca = math.sin(th[a]), math.cos(th[a])
        if a < d - 1 and abs(sa) < _POLE_TOL:
            raise PreconditionError("chart frame requested at a coordinate pole")
        E[a, a] = -sa
        if abs(sa) >= _POLE_TOL:
            cot = ca / sa
            E[a + 1 :, a] = u[a + 1 :] * cot
        # i < a components vanish
    return u, E


def chart_angles(u):
    """Inverse chart: hyperspherical angles of a unit vector."""
    u = np.asarray(u, dtype=float)
    n = u.size
    th = np.empty(n - 1)
    run = 1.0
    for i in range(n - 2):
        c = np.clip(u[i] / max(run, 1e-300), -1.0, 1.0)
        th[i] = math.acos(c)
        run *= math.sin(th[i])
    th[n - 2] = math.atan2(u[n - 1], u[n - 2]) % (2.0 * math.pi)
    return th


def angle_grid(n, counts):
    """Product angle grid with half-cell offsets away from the chart poles.

    counts: sequence of n-1 sample counts. Colatitude-type angles get
    theta = (i + 1/2) pi / N; the last (longitude) angle gets 2 pi i / N.
    Returns an (m, n-1) array in row-major product order.
    """
    if len(counts) != n - 1:
        raise DomainError(f"need {n - 1} grid counts for n={n}")
    axes = []
    for a, cnt in enumerate(counts):
        if cnt < 2:
            raise DomainError("grid counts must be >= 2")
        if a < n - 2:
            axes.append((np.arange(cnt) + 0.5) * math.pi / cnt)
        else:
            axes.append(np.arange(cnt) * 2.0 * math.pi / cnt)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def householder_frame(u):
    """Deterministic orthonormal tangent basis at u (pole-free).

    Columns of the returned (n, n-1) matrix are the images of e_1..e_{n-1}
    under the reflection mapping e_n to u.
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    w = u.copy()
    w[n - 1] -= 1.0
    nw2 = float(w @ w)
    if nw2 < 1e-24:
        return np.eye(n)[:, : n - 1]
    H = np.eye(n) - 2.0 * np.outer(w, w) / nw2
    return H[:, : n - 1]


# ---------------------------------------------------------------------------
# closed-form radial fields: homogeneous-extension derivatives
# ---------------------------------------------------------------------------

def _mono_batch(x, exps):
    """Monomial prod x_i^{e_i} with ambient gradient and Hessian, batched."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape
    e = np.asarray(exps, dtype=int)
    val = np.ones(m)
    for i in range(n):
        if e[i]:
            val = val * x[:, i] ** e[i]
    grad = np.zeros((m, n))
    hess = np.zeros((m, n, n))
    for i in range(n):
        if e[i] == 0:
            continue
        gi = e[i] * np.ones(m)
        for j in range(n):
            pw = e[j] - (1 if j == i else 0)
            if pw:
                gi = gi * x[:, j] ** pw
        grad[:, i] = gi
    for i in range(n):
        for j in range(i, n):
            if i == j:
                if e[i] < 2:
                    continue
                hij = e[i] * (e[i] - 1) * np.ones(m)
                for l in range(n):
                    pw = e[l] - (2 if l == i else 0)
                    if pw:
                        hij = hij * x[:, l] ** pw
            else:
                if e[i] == 0 or e[j] == 0:
                    continue
                hij = e[i] * e[j] * np.ones(m)
                for l in range(n):
                    pw = e[l] - (1 if l in (i, j) else 0)
                    if pw:
                        hij = hij * x[:, l] ** pw
            hess[:, i, j] = hij
            hess[:, j, i] = hij
    return val, grad, hess


def homogeneous_field(x, exps, coef=1.0):
    """f(x) = coef * p(x)/|x|^d for the monomial p of degree d = sum(exps).

    Returns (value, gradient, hessian) of the 0-homogeneous extension,
    batched over rows of x.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = int(sum(exps))
    p, gp, hp = _mono_batch(x, exps)
    if d == 0:
        m, n = x.shape
        return coef * p, np.zeros((m, n)), np.zeros((m, n, n))
    r2 = np.sum(x * x, axis=1)
    rd = r2 ** (d / 2.0)
    rd2 = rd * r2
    rd4 = rd2 * r2
    val = coef * p / rd
    grad = coef * (gp / rd[:, None] - d * p[:, None] * x / rd2[:, None])
    sym = gp[:, :, None] * x[:, None, :] + x[:, :, None] * gp[:, None, :]
    eye = np.eye(x.shape[1])
    hess = coef * (
        hp / rd[:, None, None]
        - d * (sym + p[:, None, None] * eye) / rd2[:, None, None]
        + d * (d + 2) * p[:, None, None] * (x[:, :, None] * x[:, None, :]) / rd4[:, None, None]
    )
    return val, grad, hess


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------

class StarSurface:
    """Radial graph over S^{n-1}; see module docstring.

    kinds:
      sphere           params: radius
      ellipsoid        params: semiaxes (length n)
      perturbed-sphere params: base, terms = [(coef, exps)] polynomial in u
      rho-grid         params: values (n_lat x n_lon), n = 3 only
    """

    def __init__(self, n, kind, params):
        self.n = int(n)
        self.kind = kind
        self.params = params
        if self.n < 3:
            raise DomainError("surfaces require ambient dimension n >= 3")
        if kind == "sphere":
            if params["radius"] <= 0:
                raise DomainError("sphere radius must be positive")
        elif kind == "ellipsoid":
            ax = np.asarray(params["semiaxes"], dtype=float)
            if ax.size != self.n or np.any(ax <= 0):
                raise DomainError("ellipsoid needs n positive semiaxes")
        elif kind == "perturbed-sphere":
            for coef, exps in params["terms"]:
                if len(exps) != self.n or any(e < 0 for e in exps):
                    raise DomainError("bad perturbation term exponents")
        elif kind == "rho-grid":
            if self.n != 3:
                raise DomainError("rho-grid surfaces are implemented for n = 3")
            vals = np.asarray(params["values"], dtype=float)
            if vals.ndim != 2 or np.any(vals <= 0) or not np.all(np.isfinite(vals)):
                raise DomainError("rho grid must be a positive finite 2-d array")
            self._spline = _build_grid_spline(vals)
        else:
            raise DomainError(f"unknown surface kind {kind!r}")
        rmin = float(np.min(self.rho(self.default_grid_points(coarse=True))))
        if rmin <= 0.0:
            raise DomainError(f"rho is not positive on the sphere (min {rmin:.3e})")
        self.rho_min = rmin

    # -- evaluation ---------------------------------------------------------

    def rho(self, u):
        """rho at unit vectors u (single point or batch)."""
        single = np.asarray(u).ndim == 1
        val = self._ambient(u)[0] if self.kind != "rho-grid" else self._grid_rho(u)
        return float(val[0]) if single else val

    def _ambient(self, x):
        """(rho, grad, hess) of the 0-homogeneous extension, closed forms."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m, n = x.shape
        if self.kind == "sphere":
            r0 = float(self.params["radius"])
            return (np.full(m, r0), np.zeros((m, n)), np.zeros((m, n, n)))
        if self.kind == "perturbed-sphere":
            val = np.full(m, float(self.params["base"]))
            grad = np.zeros((m, n))
            hess = np.zeros((m, n, n))
            for coef, exps in self.params["terms"]:
                v, g, h = homogeneous_field(x, exps, coef)
                val += v
                grad += g
                hess += h
            return val, grad, hess
        if self.kind == "ellipsoid":
            ax = np.asarray(self.params["semiaxes"], dtype=float)
            wts = 1.0 / ax**2
            # q = sum w_i x_i^2 / |x|^2, rho = q^{-1/2}
            q = np.zeros(m)
            gq = np.zeros((m, n))
            hq = np.zeros((m, n, n))
            for i in range(n):
                exps = [0] * n
                exps[i] = 2
                v, g, h = homogeneous_field(x, exps, wts[i])
                q += v
                gq += g
                hq += h
            val = q**-0.5
            grad = -0.5 * q[:, None] ** -1.5 * gq
            hess = (
                0.75 * q[:, None, None] ** -2.5 * gq[:, :, None] * gq[:, None, :]
                - 0.5 * q[:, None, None] ** -1.5 * hq
            )
            return val, grad, hess
        raise DomainError("ambient derivatives unavailable for rho-grid surfaces")

    def _grid_rho(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        th = np.array([chart_angles(row) for row in u])
        return self._spline.ev(th[:, 0], th[:, 1])

    def chart_data(self, u):
        """Covariant first/second derivatives of rho in an orthonormal frame.

        Returns (rho (m,), grad (m, n-1), hess (m, n-1, n-1), frame (m, n, n-1))
        with frame columns spanning the tangent space at each point.
        """
        u = np.atleast_2d(np.asarray(u, dtype=float))
        m = u.shape[0]
        if self.kind != "rho-grid":
            rho, G, H = self._ambient(u)
            frames = np.stack([householder_frame(row) for row in u])
            grad = np.einsum("mi,mia->ma", G, frames)
            hess = np.einsum("mia,mij,mjb->mab", frames, H, frames)
            return rho, grad, hess, frames
        # chart route with round-metric Christoffel corrections (n = 3)
        rho = np.empty(m)
        grad = np.empty((m, 2))
        hess = np.empty((m, 2, 2))
        frames = np.empty((m, 3, 2))
        for i, row in enumerate(u):
            th = chart_angles(row)
            st, ct = math.sin(th[0]), math.cos(th[0])
            if abs(st) < 1e-6:
                raise PreconditionError("grid surface evaluated too close to a chart pole")
            sp = self._spline
            f = sp.ev(th[0], th[1])
            ft = sp.ev(th[0], th[1], dx=1)
            fp = sp.ev(th[0], th[1], dy=1)
            ftt = sp.ev(th[0], th[1], dx=2)
            ftp = sp.ev(th[0], th[1], dx=1, dy=1)
            fpp = sp.ev(th[0], th[1], dy=2)
            rho[i] = f
            grad[i] = (ft, fp / st)
            cot = ct / st
            hess[i, 0, 0] = ftt
            hess[i, 0, 1] = hess[i, 1, 0] = (ftp - cot * fp) / st
            hess[i, 1, 1] = fpp / st**2 + cot * ft
            _, frames[i] = chart_frame(th)
        return rho, grad, hess, frames

    def ambient_data(self, u):
        """(rho, grad, hess) of the 0-homogeneous extension rho(x/|x|) at unit
        vectors u, for every surface kind.

        For grid surfaces the ambient tensors are reconstructed from the chart
        covariant data: with E the tangent frame and g, H the covariant
        components, grad = E g and (since x . grad = 0 for a 0-homogeneous
        field) hess = E H E^T - grad u^T - u grad^T.
        """
        U = np.atleast_2d(np.asarray(u, dtype=float))
        if self.kind != "rho-grid":
            return self._ambient(U)
        rho, g, H, E = self.chart_data(U)
        grad = np.einsum("mia,ma->mi", E, g)
        hess = np.einsum("mia,mab,mjb->mij", E, H, E)
        hess = hess - grad[:, :, None] * U[:, None, :] - U[:, :, None] * grad[:, None, :]
        return rho, grad, hess

    def cov_in_frames(self, u, frames):
        """Covariant derivatives of rho projected onto caller-supplied
        orthonormal tangent frames (m, n, n-1)."""
        rho, grad, hess = self.ambient_data(u)
        g = np.einsum("mi,mia->ma", grad, frames)
        H = np.einsum("mia,mij,mjb->mab", frames, hess, frames)
        return rho, g, H

    # -- misc ---------------------------------------------------------------

    def default_grid_points(self, coarse=False):
        if self.n == 3:
            counts = (24, 48) if coarse else (64, 128)
        else:
            counts = (12,) * (self.n - 2) + (24,)
        return sphere_point(angle_grid(self.n, counts))

    def scaled(self, c):
        """Surface with rho replaced by c * rho."""
        if c <= 0:
            raise DomainError("scale factor must be positive")
        if self.kind == "sphere":
            return StarSurface(self.n, "sphere", {"radius": c * self.params["radius"]})
        if self.kind == "ellipsoid":
            ax = [c * s for s in self.params["semiaxes"]]
            return StarSurface(self.n, "ellipsoid", {"semiaxes": ax})
        if self.kind == "perturbed-sphere":
            terms = [(c * coef, exps) for coef, exps in self.params["terms"]]
            return StarSurface(
                self.n, "perturbed-sphere", {"base": c * self.params["base"], "terms": terms}
            )
        return StarSurface(self.n, "rho-grid", {"values": c * np.asarray(self.params["values"])})


def _build_grid_spline(vals):
    """Bicubic spline on the offset colat/long grid, longitude wrapped
    periodically and colatitude extended across the poles by the
    (theta, phi) -> (-theta, phi + pi) reflection rule."""
    from scipy.interpolate import RectBivariateSpline

    n_lat, n_lon = vals.shape
    if n_lon % 2 != 0:
        raise DomainError("rho grid needs an even longitude count for pole reflection")
    dth = math.pi / n_lat
    th = (np.arange(n_lat) + 0.5) * dth
    ph = np.arange(n_lon) * 2.0 * math.pi / n_lon
    pad = 3
    shift = n_lon // 2
    top = np.roll(vals[:pad][::-1], shift, axis=1)
    bot = np.roll(vals[-pad:][::-1], shift, axis=1)
    vals_ext = np.vstack([top, vals, bot])
    # reflected colatitudes: just below 0 and just above pi
    th_ext = np.concatenate([-th[:pad][::-1], th, 2.0 * math.pi - th[-pad:][::-1]])
    ph_ext = np.concatenate([ph - 2.0 * math.pi, ph, ph + 2.0 * math.pi])
    vals_ext = np.hstack([vals_ext, vals_ext, vals_ext])
    return RectBivariateSpline(th_ext, ph_ext, vals_ext, kx=3, ky=3, s=0)


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------

@dataclass
class SurfaceJet:
    """All pointwise surface quantities at one sphere point."""

    point: np.ndarray
    rho: float
    grad_rho: np.ndarray
    hess_rho: np.ndarray
    w: float
    metric: np.ndarray
    inv_metric: np.ndarray
    sqrt_inv: np.ndarray
    second_ff: np.ndarray
    shape: np.ndarray
    curvatures: Spectrum
    frame: np.ndarray
    phi_grad: np.ndarray


def _jet_arrays(surface, U):
    rho, G, H, frames = surface.chart_data(U)
    m, d = G.shape
    phi = G / rho[:, None]
    phi_hess = H / rho[:, None, None] - phi[:, :, None] * phi[:, None, :]
    w = np.sqrt(1.0 + np.sum(phi * phi, axis=1))
    eye = np.eye(d)
    pp = phi[:, :, None] * phi[:, None, :]
    hff = (rho / w)[:, None, None] * (eye + pp - phi_hess)
    g = rho[:, None, None] ** 2 * (eye + pp)
    ginv = (eye - pp / (w**2)[:, None, None]) / rho[:, None, None] ** 2
    gam = (eye - pp / (w * (1.0 + w))[:, None, None]) / rho[:, None, None]
    a = gam @ hff @ gam
    a = 0.5 * (a + np.swapaxes(a, 1, 2))
    return {
        "rho": rho, "grad": G, "hess": H, "frame": frames, "phi": phi,
        "phi_hess": phi_hess, "w": w, "h": hff, "g": g, "ginv": ginv,
        "gamma": gam, "a": a,
    }


def jet_at(surface, p):
    """Full geometric jet at one sphere point p."""
    p = np.asarray(p, dtype=float)
    nrm = np.linalg.norm(p)
    if nrm == 0.0 or not np.all(np.isfinite(p)):
        raise DomainError("jet point must be a nonzero finite vector")
    u = p / nrm
    d = _jet_arrays(surface, u[None, :])
    if d["rho"][0] <= 0.0:
        raise DomainError("rho <= 0 at jet point")
    gam, ginv = d["gamma"][0], d["ginv"][0]
    resid = np.abs(gam @ gam - ginv).max()
    if resid > 1e-10 * (1.0 + np.abs(ginv).max()):
        raise ArithmeticError(f"gamma*gamma - g^inv residual {resid:.2e}")
    vals, _ = jacobi_eigh(d["a"][0])
    return SurfaceJet(
        point=u,
        rho=float(d["rho"][0]),
        grad_rho=d["grad"][0],
        hess_rho=d["hess"][0],
        w=float(d["w"][0]),
        metric=d["g"][0],
        inv_metric=ginv,
        sqrt_inv=gam,
        second_ff=d["h"][0],
        shape=d["a"][0],
        curvatures=Spectrum(tuple(vals)),
        frame=d["frame"][0],
        phi_grad=d["phi"][0],
    )


def jet_batch(surface, U):
    """Vectorized jet arrays over a batch of unit vectors (sweep plumbing)."""
    return _jet_arrays(surface, np.atleast_2d(np.asarray(U, dtype=float)))


@dataclass
class RotatedJet:
    """Jet re-expressed in the frame with e_1 along grad rho and the
    remaining block of the shape operator diagonalized."""

    jet: SurfaceJet
    rotation: np.ndarray
    rho: float
    w: float
    rho_1: float
    shape_rot: np.ndarray
    frame_ambient: np.ndarray

    def rotate_grad(self, vec):
        return self.rotation.T @ np.asarray(vec, dtype=float)

    def rotate_hess(self, mat):
        return self.rotation.T @ np.asarray(mat, dtype=float) @ self.rotation


def _basis_with_first(v1):
    """Orthonormal basis of R^d whose first column is v1 (deterministic)."""
    d = v1.size
    w = v1.copy()
    w[0] -= 1.0
    nw2 = float(w @ w)
    if nw2 < 1e-24:
        return np.eye(d)
    return np.eye(d) - 2.0 * np.outer(w, w) / nw2


def rotated_jet(surface, p):
    """Jet in the rotated frame used by the structured Hessians.

    First frame vector aligned with grad rho (when nonzero); the trailing
    (d-1) block of the shape operator is diagonalized by a symmetric
    eigensolver with deterministic tie-breaking.
    """
    jet = jet_at(surface, p)
    d = jet.phi_grad.size
    nrm = np.linalg.norm(jet.phi_grad)
    r1 = _basis_with_first(jet.phi_grad / nrm) if nrm > 1e-12 else np.eye(d)
    a1 = r1.T @ jet.shape @ r1
    if d > 1:
        vals, q = jacobi_eigh(a1[1:, 1:])
        # deterministic sign: largest-magnitude component positive
        for j in range(q.shape[1]):
            i0 = int(np.argmax(np.abs(q[:, j])))
            if q[i0, j] < 0:
                q[:, j] = -q[:, j]
        r2 = np.eye(d)
        r2[1:, 1:] = q
    else:
        r2 = np.eye(d)
    rot = r1 @ r2
    a_rot = rot.T @ jet.shape @ rot
    off = a_rot[1:, 1:] - np.diag(np.diag(a_rot[1:, 1:]))
    if np.abs(off).max() > 1e-9 * (1.0 + np.abs(a_rot).max()):
        raise ArithmeticError("alpha-block diagonalization failed")
    return RotatedJet(
        jet=jet,
        rotation=rot,
        rho=jet.rho,
        w=jet.w,
        rho_1=float(nrm * jet.rho),
        shape_rot=a_rot,
        frame_ambient=jet.frame @ rot,
    )


# ---------------------------------------------------------------------------
# predicates and scalars
# ---------------------------------------------------------------------------

def is_strictly_jconvex(surface, j, grid=None):
    """Whether the principal-curvature vector lies in Gamma_j at every sample.

    Returns (ok, min_margin) with the margin the smallest sigma_1..sigma_j of
    the curvatures over the sweep (absolute scale).
    """
    if not (1 <= j <= surface.n - 1):
        raise DomainError(f"convexity order j={j} outside [1, {surface.n - 1}]")
    U = surface.default_grid_points() if grid is None else np.atleast_2d(grid)
    if U.shape[1] == surface.n - 1:  # angles supplied
        U = sphere_point(U)
    arrs = jet_batch(surface, U)
    sig = sym_invariants(arrs["a"], j)
    margin = float(sig.min())
    return margin > 0.0, margin


def frak_b(surface, x):
    """The normalized radial coordinate |x| / rho(x/|x|); equals 1 on the surface."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    r = np.linalg.norm(X, axis=1)
    if np.any(r == 0.0) or not np.all(np.isfinite(X)):
        raise DomainError("frak_b undefined at the origin / non-finite input")
    val = r / surface.rho(X / r[:, None])
    return float(val[0]) if single else val


# ---------------------------------------------------------------------------
# fixture file format
# ---------------------------------------------------------------------------

def dump_surface(surface):
    """Serialize a surface to the UTF-8 fixture text format."""
    buf = io.StringIO()
    if surface.kind == "rho-grid":
        vals = np.asarray(surface.params["values"])
        buf.write(f"rho-grid {vals.shape[0]} {vals.shape[1]}\n")
        for row in vals:
            buf.write(" ".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()
    buf.write(f"star-surface {surface.n}\n")
    buf.write(f"kind {surface.kind}\n")
    if surface.kind == "sphere":
        buf.write(f"radius {surface.params['radius']!r}\n")
    elif surface.kind == "ellipsoid":
        buf.write("semiaxes " + " ".join(repr(float(v)) for v in surface.params["semiaxes"]) + "\n")
    else:
        buf.write(f"base {surface.params['base']!r}\n")
        for coef, exps in surface.params["terms"]:
            buf.write("term " + repr(float(coef)) + " " + " ".join(str(e) for e in exps) + "\n")
    return buf.getvalue()


def load_surface(text):
    """Parse the fixture text format (named closed form or rho grid)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DomainError("empty surface document")
    head = lines[0].split()
    if head[0] == "rho-grid":
        n_lat, n_lon = int(head[1]), int(head[2])
        vals = np.array([[float(tok) for tok in ln.split()] for ln in lines[1:]])
        vals = vals.reshape(n_lat, n_lon)
        return StarSurface(3, "rho-grid", {"values": vals})
    if head[0] != "star-surface":
        raise DomainError(f"unrecognized surface header {lines[0]!r}")
    n = int(head[1])
    fields = {}
    terms = []
    for ln in lines[1:]:
        toks = ln.split()
        if toks[0] == "term":
            terms.append((float(toks[1]), tuple(int(t) for t in toks[2:])))
        else:
            fields[toks[0]] = toks[1:]
    kind = fields["kind"][0]
    if kind == "sphere":
        return StarSurface(n, "sphere", {"radius": float(fields["radius"][0])})
    if kind == "ellipsoid":
        return StarSurface(n, "ellipsoid", {"semiaxes": [float(t) for t in fields["semiaxes"]]})
    if kind == "perturbed-sphere":
        return StarSurface(n, "perturbed-sphere", {"base": float(fields["base"][0]), "terms": terms})
    raise DomainError(f"unknown surface kind {kind!r}")
