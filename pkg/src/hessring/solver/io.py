"""Field export formats: CSV, and a binary array file with a 64-byte header
(magic "HRNG", version, n, grid dims, float64 row-major payload)."""

from __future__ import annotations

import struct

import numpy as np

from ..errors import DomainError

__all__ = ["export_csv", "export_binary", "read_binary"]

_MAGIC = b"HRNG"
_VERSION = 1
_HEADER_LEN = 64


def export_csv(field, path, bundle=None):
    """Node table: node-index, coordinates, s, u, residual, admissibility margin."""
    grid = field.grid
    X = grid.positions
    s = grid.s_of_nodes()
    res = np.full(grid.n_nodes, np.nan)
    marg = np.full(grid.n_nodes, np.nan)
    if grid.mode == "radial":
        res[1:-1] = grid.residual(field.u)
        marg[1:-1] = grid.admissibility_margin(field.u)
    else:
        res[grid.interior] = grid.residual(field.u)
        marg[grid.interior] = grid.admissibility_margin(field.u)
    n = grid.n
    cols = ",".join(f"x{i + 1}" for i in range(n))
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"node,{cols},s,u,residual,admissibility_margin\n")
        for i in range(grid.n_nodes):
            xs = ",".join(repr(float(v)) for v in X[i])
            f.write(f"{i},{xs},{s[i]!r},{float(field.u[i])!r},{res[i]!r},{marg[i]!r}\n")


def export_binary(field, path):
    grid = field.grid
    if grid.mode == "radial":
        dims = (grid.n_nodes,)
    else:
        dims = (grid.n_t, grid.n_lat, grid.n_lon)
    if len(dims) > 12:
        raise DomainError("too many grid dimensions for the header")
    header = bytearray(_HEADER_LEN)
    header[0:4] = _MAGIC
    struct.pack_into("<III", header, 4, _VERSION, grid.n, len(dims))
    for i, d in enumerate(dims):
        struct.pack_into("<I", header, 16 + 4 * i, d)
    with open(path, "wb") as f:
        f.write(bytes(header))
        f.write(np.ascontiguousarray(field.u, dtype="<f8").tobytes())


def read_binary(path):
    with open(path, "rb") as f:
        header = f.read(_HEADER_LEN)
        if header[0:4] != _MAGIC:
            raise DomainError("bad magic in binary field file")
        version, n, ndims = struct.unpack_from("<III", header, 4)
        if version != _VERSION:
            raise DomainError(f"unsupported binary version {version}")
        dims = [struct.unpack_from("<I", header, 16 + 4 * i)[0] for i in range(ndims)]
        payload = np.frombuffer(f.read(), dtype="<f8")
    expect = int(np.prod(dims))
    if payload.size != expect:
        raise DomainError("payload size mismatch")
    return {"n": n, "dims": tuple(dims), "values": payload.reshape(dims)}
