"""Discrete ring domains between a star surface and an ellipsoid level.

Two grid families share one solver interface:

  RadialGrid  - 1-d in r, valid only for fully radial problems (isotropic
                growth target, spherical inner surface, constant data);
  RingGrid    - mapped structured grid for n = 3: log-radial ladders along
                rays of an offset colatitude/longitude sweep.

Radial ladders are built from a base section [rho, r(R0)] plus one block per
doubling octave of the outer level, so the grids of an R-sweep share their
nodes exactly on overlapping regions (comparisons need no interpolation).

RingGrid derivative stencils are 19-point (center, faces, edge diagonals)
with weights chosen as the minimum-norm solution reproducing all quadratic
polynomials of x exactly; the scheme stays second order on the smoothly
mapped grid and differentiates quadratic fields to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, PreconditionError
from ..stargeom import angle_grid, sphere_point

__all__ = ["radial_ladder", "RadialGrid", "RingGrid", "RingField"]


def radial_ladder(r_in, r_base, octaves, n_base, n_block):
    """Node radii [r_in .. r_base .. r_base * 2^(octaves/2)].

    Base section log-uniform with n_base intervals; each octave of the outer
    level s (factor sqrt(2) in radius) appends a log-uniform block of n_block
    intervals, so ladders for different octave counts are nested prefixes.
    Accepts vector r_in / r_base (per-direction ladders, shape (D, T))."""
    r_in = np.atleast_1d(np.asarray(r_in, dtype=float))
    r_base = np.atleast_1d(np.asarray(r_base, dtype=float))
    if np.any(r_base <= r_in):
        raise DomainError("outer base radius must exceed inner radius")
    parts = [np.exp(np.linspace(np.log(r_in), np.log(r_base), n_base + 1).T)]
    half_log2 = 0.5 * math.log(2.0)
    for i in range(octaves):
        lo = np.log(r_base) + i * half_log2
        seg = np.exp(np.linspace(lo, lo + half_log2, n_block + 1).T[:, 1:])
        parts.append(seg)
    out = np.concatenate(parts, axis=1)
    return out[0] if out.shape[0] == 1 else out


@dataclass
class RingField:
    """Scalar field on a grid; u holds every node including boundary rows."""

    grid: object
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    def copy(self):
        return RingField(self.grid, self.u.copy(), dict(self.meta))


class RadialGrid:
    """1-d radial reduction of the ring problem.

    Valid when the Hessian spectrum of u(|x|) is (u'' once, u'/r repeated):
    isotropic target a = c I, spherical inner boundary, radial data."""

    mode = "radial"

    def __init__(self, n, k, c, r_nodes):
        self.n = int(n)
        self.k = int(k)
        self.c = float(c)
        self.r = np.asarray(r_nodes, dtype=float)
        if np.any(np.diff(self.r) <= 0.0):
            raise DomainError("radial nodes must increase strictly")
        m = self.r.size
        self.n_nodes = m
        self.interior = np.arange(1, m - 1)
        hm = self.r[1:-1] - self.r[:-2]
        hp = self.r[2:] - self.r[1:-1]
        self.w2 = np.stack(
            [2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))], axis=1
        )
        self.w1 = np.stack(
            [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))], axis=1
        )
        self._binom_k = math.comb(n - 1, k)
        self._binom_k1 = math.comb(n - 1, k - 1)

    # -- discrete calculus ----------------------------------------------------

    def derivs(self, u):
        """(u', u'') at interior nodes by quadratic-exact 3-point weights."""
        tri = np.stack([u[:-2], u[1:-1], u[2:]], axis=1)
        return np.sum(self.w1 * tri, axis=1), np.sum(self.w2 * tri, axis=1)

    def gradient_all(self, u):
        """|Du| = |u'| at every node (one-sided quadratic fit at the ends)."""
        du = np.empty_like(u)
        du[1:-1] = self.derivs(u)[0]
        du[0] = _onesided_d1(self.r[:3], u[:3], self.r[0])
        du[-1] = _onesided_d1(self.r[-3:], u[-3:], self.r[-1])
        return np.abs(du)

    def laplacian_all(self, u):
        lap = np.empty_like(u)
        d1, d2 = self.derivs(u)
        lap[1:-1] = d2 + (self.n - 1) * d1 / self.r[1:-1]
        for idx, sl in ((0, slice(0, 3)), (-1, slice(-3, None))):
            dd1 = _onesided_d1(self.r[sl], u[sl], self.r[idx])
            dd2 = _onesided_d2(self.r[sl], u[sl])
            lap[idx] = dd2 + (self.n - 1) * dd1 / self.r[idx]
        return lap

    def spectra(self, u):
        """(p, q) = (u'/r, u'') at interior nodes; the Hessian spectrum is p
        repeated n-1 times plus q."""
        d1, d2 = self.derivs(u)
        return d1 / self.r[1:-1], d2

    def sigma_j(self, p, q, j):
        return math.comb(self.n - 1, j) * p**j + math.comb(self.n - 1, j - 1) * p ** (j - 1) * q

    def admissibility_margin(self, u):
        p, q = self.spectra(u)
        margin = np.full(p.shape, np.inf)
        for j in range(1, self.k + 1):
            margin = np.minimum(margin, self.sigma_j(p, q, j))
        return margin

    def residual(self, u):
        p, q = self.spectra(u)
        sig = self._binom_k * p**self.k + self._binom_k1 * p ** (self.k - 1) * q
        with np.errstate(invalid="ignore"):
            return np.where(sig > 0.0, np.abs(sig) ** (1.0 / self.k), np.nan) - 1.0

    def newton_step(self, u, res, lin_tol=None):
        """Solve the linearized system on interior unknowns (banded direct)."""
        from scipy.linalg import solve_banded

        p, q = self.spectra(u)
        k = self.k
        sig = self._binom_k * p**k + self._binom_k1 * p ** (k - 1) * q
        fpre = (1.0 / k) * sig ** (1.0 / k - 1.0)
        dsig_dp = k * self._binom_k * p ** (k - 1) + (k - 1) * self._binom_k1 * p ** (k - 2) * q
        dsig_dq = self._binom_k1 * p ** (k - 1)
        cp = fpre * dsig_dp / self.r[1:-1]
        cq = fpre * dsig_dq
        # tridiagonal: rows i over interior; columns i-1, i, i+1 in full index
        lower = cp * self.w1[:, 0] + cq * self.w2[:, 0]
        diag = cp * self.w1[:, 1] + cq * self.w2[:, 1]
        upper = cp * self.w1[:, 2] + cq * self.w2[:, 2]
        m = diag.size
        ab = np.zeros((3, m))
        ab[0, 1:] = upper[:-1]
        ab[1, :] = diag
        ab[2, :-1] = lower[1:]
        delta = solve_banded((1, 1), ab, -res)
        out = np.zeros_like(u)
        out[1:-1] = delta
        return out, {"linear_solver": "banded", "linear_ok": True}

    # -- geometry / export ----------------------------------------------------

    @property
    def positions(self):
        x = np.zeros((self.n_nodes, self.n))
        x[:, 0] = self.r
        return x

    def s_of_nodes(self):
        return 0.5 * self.c * self.r**2

    def boundary_masks(self):
        inner = np.zeros(self.n_nodes, dtype=bool)
        outer = np.zeros(self.n_nodes, dtype=bool)
        inner[0] = True
        outer[-1] = True
        return inner, outer


def _onesided_d1(rs, us, at):
    """Derivative at `at` of the quadratic through (rs, us)."""
    r0, r1, r2 = rs
    l0 = (2 * at - r1 - r2) / ((r0 - r1) * (r0 - r2))
    l1 = (2 * at - r0 - r2) / ((r1 - r0) * (r1 - r2))
    l2 = (2 * at - r0 - r1) / ((r2 - r0) * (r2 - r1))
    return us[0] * l0 + us[1] * l1 + us[2] * l2


def _onesided_d2(rs, us):
    r0, r1, r2 = rs
    l0 = 2.0 / ((r0 - r1) * (r0 - r2))
    l1 = 2.0 / ((r1 - r0) * (r1 - r2))
    l2 = 2.0 / ((r2 - r0) * (r2 - r1))
    return us[0] * l0 + us[1] * l1 + us[2] * l2


_STENCIL_OFFSETS = [(0, 0, 0)]
_STENCIL_OFFSETS += [
    tuple(s * e for e in axis)
    for axis in ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    for s in (1, -1)
]
_STENCIL_OFFSETS += [
    (s1 * a[0] + s2 * b[0], s1 * a[1] + s2 * b[1], s1 * a[2] + s2 * b[2])
    for a, b in (((1, 0, 0), (0, 1, 0)), ((1, 0, 0), (0, 0, 1)), ((0, 1, 0), (0, 0, 1)))
    for s1 in (1, -1)
    for s2 in (1, -1)
]


class RingGrid:
    """Mapped structured grid on E_R minus D for n = 3.

    Index layout (it, ilat, ilon), row-major flat ordering. Longitude wraps
    periodically; colatitude reflects across the poles with a half-turn of
    longitude (offset grid keeps nodes away from the poles themselves).
    """

    mode = "full"

    def __init__(self, surface, target, R, n_lat=16, n_lon=32, n_base=24,
                 n_block=8, r_base_level=None):
        if surface.n != 3 or target.n != 3:
            raise DomainError("RingGrid is implemented for n = 3")
        if n_lon % 2 != 0:
            raise DomainError("n_lon must be even (pole reflection)")
        self.surface = surface
        self.target = target
        self.k = target.k
        self.n = 3
        self.R = float(R)
        r0 = 1.0 if r_base_level is None else float(r_base_level)
        octaves = math.log2(self.R / r0)
        if abs(octaves - round(octaves)) > 1e-12:
            raise DomainError("R must be r_base_level * 2^j for nested ladders")
        octaves = int(round(octaves))
        self.angles = angle_grid(3, (n_lat, n_lon))
        self.U = sphere_point(self.angles)
        self.n_lat, self.n_lon = n_lat, n_lon
        rho = surface.rho(self.U)
        a = np.asarray(target.a)
        q = np.einsum("i,di->d", a, self.U**2)
        r_base = np.sqrt(2.0 * r0 / q)
        if np.any(rho >= r_base):
            raise DomainError("surface not strictly inside the base ellipsoid level")
        ladders = radial_ladder(rho, r_base, octaves, n_base, n_block)  # (D, T)
        self.n_t = ladders.shape[1]
        self.radii = ladders
        D = self.U.shape[0]
        X = ladders[:, :, None] * self.U[:, None, :]          # (D, T, 3)
        self.X = np.transpose(X, (1, 0, 2)).reshape(-1, 3)    # flat (T*D, 3)
        self.n_nodes = self.X.shape[0]
        self.direction_index = np.tile(np.arange(D), self.n_t)
        it = np.repeat(np.arange(self.n_t), D)
        self.inner_mask = it == 0
        self.outer_mask = it == self.n_t - 1
        self.interior = np.nonzero(~self.inner_mask & ~self.outer_mask)[0]
        self._build_stencils()
        self._build_weights()
        self._check_mapping()

    # -- structure ------------------------------------------------------------

    def _flat(self, it, ilat, ilon):
        """Flat index with pole/periodic wrapping (arrays ok)."""
        ilat = np.asarray(ilat).copy()
        ilon = np.asarray(ilon).copy()
        half = self.n_lon // 2
        under = ilat < 0
        ilat = np.where(under, -1 - ilat, ilat)
        ilon = np.where(under, ilon + half, ilon)
        over = ilat >= self.n_lat
        ilat = np.where(over, 2 * self.n_lat - 1 - ilat, ilat)
        ilon = np.where(over, ilon + half, ilon)
        ilon = np.mod(ilon, self.n_lon)
        return (np.asarray(it) * self.n_lat + ilat) * self.n_lon + ilon

    def _build_stencils(self):
        T, LAT, LON = self.n_t, self.n_lat, self.n_lon
        it, ilat, ilon = np.meshgrid(
            np.arange(1, T - 1), np.arange(LAT), np.arange(LON), indexing="ij"
        )
        it, ilat, ilon = it.ravel(), ilat.ravel(), ilon.ravel()
        cols = []
        for (dt, dlat, dlon) in _STENCIL_OFFSETS:
            cols.append(self._flat(it + dt, ilat + dlat, ilon + dlon))
        self.stencil = np.stack(cols, axis=1)  # (Ni, 19)
        self.interior = self._flat(it, ilat, ilon)

    def _build_weights(self):
        delta = self.X[self.stencil] - self.X[self.interior][:, None, :]  # (Ni,19,3)
        scale = np.abs(delta).max(axis=(1, 2))
        d = delta / scale[:, None, None]
        P = np.stack(
            [
                np.ones_like(d[:, :, 0]),
                d[:, :, 0], d[:, :, 1], d[:, :, 2],
                d[:, :, 0] * d[:, :, 0], d[:, :, 0] * d[:, :, 1], d[:, :, 0] * d[:, :, 2],
                d[:, :, 1] * d[:, :, 1], d[:, :, 1] * d[:, :, 2],
                d[:, :, 2] * d[:, :, 2],
            ],
            axis=2,
        )  # (Ni, 19, 10)
        G = np.einsum("nsa,nsb->nab", P, P)
        Ni = G.shape[0]
        B = np.zeros((Ni, 10, 9))
        inv_s = 1.0 / scale
        inv_s2 = inv_s * inv_s
        for i in range(3):  # gradient operators
            B[:, 1 + i, i] = inv_s
        hess_ops = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
        basis_of = {(0, 0): 4, (0, 1): 5, (0, 2): 6, (1, 1): 7, (1, 2): 8, (2, 2): 9}
        for col, (i, j) in enumerate(hess_ops):
            B[:, basis_of[(i, j)], 3 + col] = (2.0 if i == j else 1.0) * inv_s2
        sol = np.linalg.solve(G, B)
        self.weights = np.einsum("nsa,nab->nsb", P, sol)  # (Ni, 19, 9)
        self.hess_ops = hess_ops

    def _check_mapping(self):
        """Bijectivity: positive Jacobian determinant of the index->space map
        at every interior node (finite-difference tangents)."""
        T = self.n_t
        D = self.n_lat * self.n_lon
        Xg = self.X.reshape(T, self.n_lat, self.n_lon, 3)
        e_t = Xg[2:, :, :, :] - Xg[:-2, :, :, :]
        it = np.repeat(np.arange(T), D)
        ilat = np.tile(np.repeat(np.arange(self.n_lat), self.n_lon), T)
        ilon = np.tile(np.arange(self.n_lon), T * self.n_lat)
        up = self.X[self._flat(it, ilat + 1, ilon)].reshape(T, self.n_lat, self.n_lon, 3)
        dn = self.X[self._flat(it, ilat - 1, ilon)].reshape(T, self.n_lat, self.n_lon, 3)
        e_lat = up - dn
        up = self.X[self._flat(it, ilat, ilon + 1)].reshape(T, self.n_lat, self.n_lon, 3)
        dn = self.X[self._flat(it, ilat, ilon - 1)].reshape(T, self.n_lat, self.n_lon, 3)
        e_lon = up - dn
        det = np.einsum(
            "tabi,tabi->tab",
            e_t,
            np.cross(e_lat[1:-1], e_lon[1:-1]),
        )
        if not np.all(det > 0.0):
            bad = int(np.argmin(det))
            raise DomainError(f"grid mapping fails positivity at node {bad}")
        # quadratic-exactness self check of the stencil weights
        rng = np.random.default_rng(0)
        A = rng.normal(size=(3, 3))
        A = A + A.T
        b = rng.normal(size=3)
        f = 0.5 * np.einsum("ni,ij,nj->n", self.X, A, self.X) + self.X @ b + 0.7
        H = self.hessians(f)
        Gr = self.gradients_interior(f)
        exact_h = np.array([A[i, j] for (i, j) in self.hess_ops])
        err_h = np.abs(H_to_components(H) - exact_h[None, :]).max()
        g_true = self.X[self.interior] @ A + b
        err_g = np.abs(Gr - g_true).max()
        scale = 1.0 + np.abs(f).max()
        if err_h > 5e-9 * scale or err_g > 5e-9 * scale:
            raise ArithmeticError(
                f"stencil weights fail quadratic exactness: hess {err_h:.2e}, grad {err_g:.2e}"
            )

    # -- discrete calculus ----------------------------------------------------

    def hessians(self, u):
        """(Ni, 3, 3) Cartesian Hessians at interior nodes."""
        ust = u[self.stencil]
        comp = np.einsum("nsc,ns->nc", self.weights[:, :, 3:], ust)
        H = np.empty((comp.shape[0], 3, 3))
        for c, (i, j) in enumerate(self.hess_ops):
            H[:, i, j] = comp[:, c]
            H[:, j, i] = comp[:, c]
        return H

    def gradients_interior(self, u):
        ust = u[self.stencil]
        return np.einsum("nsc,ns->nc", self.weights[:, :, :3], ust)

    def gradient_all(self, u):
        """|Du| at every node. Boundary shells reconstruct the full gradient
        from directional differences (one-sided along the ray, central along
        the shell) by solving the 3x3 chain-rule system per node."""
        gmag = np.zeros(self.n_nodes)
        gmag[self.interior] = np.linalg.norm(self.gradients_interior(u), axis=1)
        D = self.n_lat * self.n_lon
        T = self.n_t
        ilat = np.repeat(np.arange(self.n_lat), self.n_lon)
        ilon = np.tile(np.arange(self.n_lon), self.n_lat)
        for row, nxt in ((0, (1, 2)), (T - 1, (T - 2, T - 3))):
            idx0 = self._flat(np.full(D, row), ilat, ilon)
            idx1 = self._flat(np.full(D, nxt[0]), ilat, ilon)
            idx2 = self._flat(np.full(D, nxt[1]), ilat, ilon)
            lat_p = self._flat(np.full(D, row), ilat + 1, ilon)
            lat_m = self._flat(np.full(D, row), ilat - 1, ilon)
            lon_p = self._flat(np.full(D, row), ilat, ilon + 1)
            lon_m = self._flat(np.full(D, row), ilat, ilon - 1)
            # rays are straight lines: a one-sided quadratic fit along the
            # into-domain direction gives the 2nd-order normal-ish component
            t1 = np.linalg.norm(self.X[idx1] - self.X[idx0], axis=1)
            t2 = np.linalg.norm(self.X[idx2] - self.X[idx0], axis=1)
            e_ray = (self.X[idx1] - self.X[idx0]) / t1[:, None]
            du_ray = np.empty(D)
            for j in range(D):
                du_ray[j] = _onesided_d1(
                    (0.0, t1[j], t2[j]), (u[idx0[j]], u[idx1[j]], u[idx2[j]]), 0.0
                )
            E = np.stack(
                [
                    e_ray,
                    0.5 * (self.X[lat_p] - self.X[lat_m]),
                    0.5 * (self.X[lon_p] - self.X[lon_m]),
                ],
                axis=1,
            )  # rows: secant directions
            rhs = np.stack(
                [du_ray, 0.5 * (u[lat_p] - u[lat_m]), 0.5 * (u[lon_p] - u[lon_m])],
                axis=1,
            )
            g = np.linalg.solve(E, rhs)
            gmag[idx0] = np.linalg.norm(g, axis=1)
        return gmag

    def laplacian_interior(self, u):
        H = self.hessians(u)
        return np.trace(H, axis1=1, axis2=2)

    def admissibility_margin(self, u):
        from .._batch import sym_invariants

        sig = sym_invariants(self.hessians(u), self.k)
        return sig.min(axis=0)

    def residual(self, u):
        from .._batch import sym_invariants

        sig = sym_invariants(self.hessians(u), self.k)
        sk = sig[self.k - 1]
        with np.errstate(invalid="ignore"):
            return np.where(sk > 0.0, np.abs(sk) ** (1.0 / self.k), np.nan) - 1.0

    def newton_step(self, u, res, lin_tol=1e-3):
        from scipy.sparse import coo_matrix
        from scipy.sparse.linalg import bicgstab, spsolve
        from .._batch import newton_tensor, sym_invariants

        H = self.hessians(u)
        sig = sym_invariants(H, self.k)
        sk = sig[self.k - 1]
        fpre = (1.0 / self.k) * sk ** (1.0 / self.k - 1.0)
        T = newton_tensor(H, self.k)  # d sigma_k / d H
        Ni = self.interior.size
        glob_to_int = -np.ones(self.n_nodes, dtype=np.int64)
        glob_to_int[self.interior] = np.arange(Ni)
        cols_int = glob_to_int[self.stencil]  # (Ni, 19), -1 where boundary
        vals = np.zeros((Ni, 19))
        for c, (i, j) in enumerate(self.hess_ops):
            mult = 1.0 if i == j else 2.0
            vals += (mult * fpre * T[:, i, j])[:, None] * self.weights[:, :, 3 + c]
        mask = cols_int >= 0
        rows = np.repeat(np.arange(Ni), 19).reshape(Ni, 19)
        J = coo_matrix(
            (vals[mask], (rows[mask], cols_int[mask])), shape=(Ni, Ni)
        ).tocsr()
        rhs = -res
        diag = J.diagonal()
        if np.any(diag == 0.0):
            raise ArithmeticError("zero diagonal in Newton linearization")
        from scipy.sparse import diags

        M = diags(1.0 / diag)
        tol = max(lin_tol, 1e-12)
        delta_int, code = bicgstab(J, rhs, rtol=tol, atol=0.0, maxiter=400, M=M)
        info = {"linear_solver": "bicgstab+diag", "linear_ok": code == 0}
        if code != 0:
            delta_int = spsolve(J, rhs)
            info = {"linear_solver": "spsolve-fallback", "linear_ok": True}
        out = np.zeros_like(u)
        out[self.interior] = delta_int
        return out, info

    # -- geometry / export ----------------------------------------------------

    @property
    def positions(self):
        return self.X

    def s_of_nodes(self):
        return self.target.s_of(self.X)

    def boundary_masks(self):
        return self.inner_mask.copy(), self.outer_mask.copy()


def H_to_components(H):
    ops = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    return np.stack([H[:, i, j] for (i, j) in ops], axis=1)
