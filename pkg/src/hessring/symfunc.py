"""Elementary symmetric functions, Garding cones, and spectral helpers.

Conventions: sigma_0 = 1; Gamma_m is the open cone where sigma_1..sigma_m are
all positive; h_k(a) = max_i sigma_{k-1}(a|i) a_i for a positive vector a,
where (a|i) drops entry i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError

__all__ = [
    "Spectrum",
    "QuadraticTarget",
    "sigma",
    "sigma_all",
    "sigma_excl",
    "in_gamma",
    "eigenvalues",
    "jacobi_eigh",
    "hk",
    "hk_lower",
    "maclaurin_holds",
]


def _values(lam):
    if isinstance(lam, Spectrum):
        arr = np.asarray(lam.values, dtype=float)
    else:
        arr = np.asarray(lam, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise DomainError("spectrum must be a 1-d sequence of reals")
    if not np.all(np.isfinite(arr)):
        raise DomainError("spectrum contains non-finite entries")
    return arr


def sigma_all(lam):
    """All elementary symmetric functions sigma_0..sigma_n of a sequence.

    Computed by incrementally expanding prod_i (1 + lam_i t); O(n^2) and
    stable, no subset enumeration.
    """
    arr = np.atleast_2d(np.asarray(lam, dtype=float))
    m, n = arr.shape
    e = np.zeros((m, n + 1))
    e[:, 0] = 1.0
    for i in range(n):
        li = arr[:, i, None]
        e[:, 1 : i + 2] += li * e[:, 0 : i + 1].copy()
    if np.asarray(lam).ndim == 1:
        return e[0]
    return e


def sigma(m, lam):
    """sigma_m(lam), the m-th elementary symmetric function."""
    arr = _values(lam)
    n = arr.size
    if not (0 <= m <= n):
        raise DomainError(f"sigma order m={m} outside [0, {n}]")
    return float(sigma_all(arr)[m])


def sigma_excl(m, a, i):
    """sigma_m of the sequence with entry i removed."""
    arr = _values(a)
    n = arr.size
    if not (0 <= i < n):
        raise DomainError(f"index {i} invalid for length {n}")
    if not (0 <= m <= n - 1):
        raise DomainError(f"sigma order m={m} outside [0, {n - 1}]")
    rest = np.delete(arr, i)
    return float(sigma_all(rest)[m]) if rest.size else (1.0 if m == 0 else 0.0)


def in_gamma(m, lam):
    """Membership of lam in the Garding cone Gamma_m.

    Returns (ok, margin) with margin = min_{1<=j<=m} sigma_j(lam), reported in
    absolute terms; callers decide scale-relative thresholds.
    """
    arr = _values(lam)
    n = arr.size
    if not (1 <= m <= n):
        raise DomainError(f"cone order m={m} outside [1, {n}]")
    sig = sigma_all(arr)
    margin = float(np.min(sig[1 : m + 1]))
    return margin > 0.0, margin


def jacobi_eigh(mat, tol=1e-13, max_sweeps=60):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns (vals ascending, vecs with columns matching vals). Convergence:
    off-diagonal Frobenius norm <= tol * ||M||_F, at most max_sweeps sweeps.
    Deterministic for identical input.
    """
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix contains non-finite entries")
    if not np.allclose(a, a.T, atol=1e-12 * (1.0 + np.abs(a).max()), rtol=0.0):
        raise DomainError("matrix is not symmetric")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        # off-diagonal Frobenius norm, summed directly (the difference
        # ||A||_F^2 - sum diag^2 cancels catastrophically near convergence)
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 += 2.0 * a[p, q] * a[p, q]
        if math.sqrt(off2) <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) >= 1e150:
                    t = 1.0 / (2.0 * tau)
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    v = v[:, order]
    m0 = np.asarray(mat, dtype=float)
    resid = np.abs(m0 - (v * vals) @ v.T).max()
    if resid > 1e-12 * (1.0 + np.abs(m0).max()):
        raise ArithmeticError(f"Jacobi reconstruction residual {resid:.3e} too large")
    return vals, v


def eigenvalues(mat):
    """Spectrum of a symmetric matrix, ascending, via cyclic Jacobi."""
    vals, _ = jacobi_eigh(mat)
    return Spectrum(tuple(float(x) for x in vals))


def hk(a, k):
    """h_k(a) = max_i sigma_{k-1}(a|i) a_i for a positive sequence a.

    Also equals sigma_k(a) - sigma_k(a|i0) with a_{i0} = max a; the two
    routes are cross-checked internally.
    """
    arr = _values(a)
    n = arr.size
    if np.any(arr <= 0.0):
        raise DomainError("h_k requires strictly positive entries")
    if not (2 <= k <= n - 1):
        raise DomainError(f"h_k requires 2 <= k <= n-1, got k={k}, n={n}")
    vals = np.array([sigma_excl(k - 1, arr, i) * arr[i] for i in range(n)])
    h = float(vals.max())
    i0 = int(np.argmax(arr))
    alt = sigma(k, arr) - sigma_excl(k, arr, i0)
    if abs(h - alt) > 1e-10 * (1.0 + abs(h)):
        raise ArithmeticError(f"h_k identity mismatch: {h} vs {alt}")
    return h


def hk_lower(a, k):
    """min_i sigma_{k-1}(a|i) a_i, the counterpart of h_k with the minimum."""
    arr = _values(a)
    if np.any(arr <= 0.0):
        raise DomainError("requires strictly positive entries")
    n = arr.size
    if not (1 <= k <= n - 1):
        raise DomainError(f"requires 1 <= k <= n-1, got k={k}, n={n}")
    return float(min(sigma_excl(k - 1, arr, i) * arr[i] for i in range(n)))


def maclaurin_holds(m, k, lam, rel_slack=1e-12):
    """Maclaurin inequality sigma_m/C(n,m) >= (sigma_k/C(n,k))^{m/k} on Gamma_k."""
    arr = _values(lam)
    n = arr.size
    if not (1 <= m <= k <= n):
        raise DomainError(f"need 1 <= m <= k <= n, got m={m}, k={k}, n={n}")
    ok, _ = in_gamma(k, arr)
    if not ok:
        raise PreconditionError("spectrum is not in Gamma_k")
    lhs = sigma(m, arr) / math.comb(n, m)
    rhs = (sigma(k, arr) / math.comb(n, k)) ** (m / k)
    return (lhs - rhs) >= -rel_slack * max(abs(rhs), 1.0)


@dataclass(frozen=True)
class Spectrum:
    """Ordered eigenvalue list of a symmetric matrix (ascending)."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 1:
            raise DomainError("empty spectrum")
        if any(not math.isfinite(v) for v in vals):
            raise DomainError("non-finite eigenvalue")
        object.__setattr__(self, "values", tuple(sorted(vals)))

    @property
    def n(self):
        return len(self.values)

    @classmethod
    def from_matrix(cls, mat):
        return eigenvalues(mat)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class QuadraticTarget:
    """Diagonal positive matrix A with sigma_k(a) = 1: the quadratic growth
    target s = x^T A x / 2 together with the derived decay-exponent data.

    beta_range is the open interval (k/2, k/(2 h_k)); it is nonempty exactly
    because h_k < 1 when sigma_k(a) = 1 with 2 <= k <= n-1.
    """

    a: tuple
    k: int
    h_k: float = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=float)
        n = arr.size
        if n < 3:
            raise DomainError("quadratic target needs n >= 3")
        if np.any(arr <= 0.0):
            raise DomainError("diagonal of A must be positive")
        if not (2 <= self.k <= n - 1):
            raise DomainError(f"need 2 <= k <= n-1, got k={self.k}, n={n}")
        sk = sigma(self.k, arr)
        if abs(sk - 1.0) > 1e-12 * max(1.0, abs(sk)):
            raise DomainError(f"sigma_k(a) = {sk!r}, not 1 to 1e-12")
        object.__setattr__(self, "a", tuple(float(v) for v in arr))
        h = hk(arr, self.k)
        if not (0.0 < h < 1.0):
            raise DomainError(f"h_k = {h} outside (0, 1)")
        object.__setattr__(self, "h_k", h)

    @property
    def n(self):
        return len(self.a)

    @property
    def beta_range(self):
        return (self.k / 2.0, self.k / (2.0 * self.h_k))

    def contains_beta(self, beta):
        lo, hi = self.beta_range
        return lo < beta < hi

    def s_of(self, x):
        """s(x) = x^T A x / 2 for one point or a batch of points."""
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(np.asarray(self.a) * x * x, axis=-1)
