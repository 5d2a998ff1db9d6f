"""Batched symmetric-matrix invariants for sweep loops.

sigma_m of a symmetric matrix equals the sum of its m x m principal minors;
for the small dimensions used here (n <= 5) that is evaluated directly, with
closed forms in the n = 3 hot path.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def sym_invariants(h, kmax):
    """sigma_1..sigma_kmax of a batch of symmetric matrices.

    h: (..., n, n) symmetric. Returns (kmax, ...) array.
    """
    h = np.asarray(h, dtype=float)
    n = h.shape[-1]
    out = np.empty((kmax,) + h.shape[:-2])
    if n == 3 and kmax <= 3:
        tr = h[..., 0, 0] + h[..., 1, 1] + h[..., 2, 2]
        if kmax >= 1:
            out[0] = tr
        if kmax >= 2:
            tr2 = np.einsum("...ij,...ji->...", h, h)
            out[1] = 0.5 * (tr * tr - tr2)
        if kmax >= 3:
            out[2] = np.linalg.det(h)
        return out
    for m in range(1, kmax + 1):
        acc = np.zeros(h.shape[:-2])
        for idx in combinations(range(n), m):
            sub = h[..., idx, :][..., :, idx]
            acc = acc + np.linalg.det(sub)
        out[m - 1] = acc
    return out


def newton_tensor(h, k):
    """d sigma_k / d H for a batch of symmetric matrices.

    T_{k-1}(H) = sigma_{k-1} I - sigma_{k-2} H + ... +- H^{k-1}
    via the recursion T_j = sigma_j I - H T_{j-1}, T_0 = I.
    """
    h = np.asarray(h, dtype=float)
    n = h.shape[-1]
    eye = np.broadcast_to(np.eye(n), h.shape).copy()
    if k == 1:
        return eye
    sig = sym_invariants(h, k - 1)
    t = eye
    for j in range(1, k):
        t = sig[j - 1][..., None, None] * eye - h @ t
    return t
