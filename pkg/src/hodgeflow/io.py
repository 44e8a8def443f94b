"""OHFL binary files for fields and Euler trajectories.

Header (little endian, 32 bytes)::

    magic  4s   b"OHFL"
    version u4  1
    backend 8s  b"torus" or b"sphere", NUL padded
    d       u4  spatial dimension (2 or 3; 2 for the sphere)
    size    u4  N on the torus, L_max on the sphere
    ncomp   u4  vector components (d on the torus, 2 on the sphere)
    kind    u4  0 = field, 1 = trajectory, 2 = trajectory cut short (invalid)

The payload is float64 ``(re, im)`` pairs.  Torus coefficients are written
component by component in row-major order over the FFT index grid
(``k_i = 0, 1, ..., N/2 - 1, -N/2, ..., -1`` on each axis).  Sphere
coefficients are written for ``l = 0..L_max`` and ``m = -l..l`` in that
lexicographic order, first the curl block and then the gradient block.

A trajectory file continues with ``count u4, dt f8, stride u4`` and then one
block per snapshot: ``t f8, energy f8``, the velocity coefficients and the
pressure coefficients.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .sphere import SphereBasis, SphereField
from .torus import TorusField, TorusGrid, TorusScalar

MAGIC = b"OHFL"
VERSION = 1
_HEADER = struct.Struct("<4sI8sIIII")
_TRAJ = struct.Struct("<IdI")
_SNAP = struct.Struct("<dd")
KIND_FIELD = 0
KIND_TRAJECTORY = 1
KIND_TRAJECTORY_INVALID = 2


def _pack_complex(a):
    a = np.ascontiguousarray(a, dtype="<c16")
    return a.tobytes()


def _unpack_complex(buf, offset, count):
    nbytes = 16 * count
    if offset + nbytes > len(buf):
        raise FormatError("truncated payload")
    return np.frombuffer(buf, dtype="<c16", count=count, offset=offset).astype(complex), offset + nbytes


def _sphere_block(basis, c):
    L = basis.L_max
    return np.concatenate([c[l, L - l : L + l + 1] for l in range(L + 1)])


def _sphere_unblock(basis, flat):
    L = basis.L_max
    c = np.zeros(basis.coeff_shape, dtype=complex)
    pos = 0
    for l in range(L + 1):
        c[l, L - l : L + l + 1] = flat[pos : pos + 2 * l + 1]
        pos += 2 * l + 1
    return c


def _header(backend, d, size, ncomp, kind):
    return _HEADER.pack(MAGIC, VERSION, backend.encode().ljust(8, b"\0"), d, size, ncomp, kind)


def encode_field(u):
    if isinstance(u, TorusField):
        g = u.grid
        return _header("torus", g.d, g.N, g.d, KIND_FIELD) + _pack_complex(u.coeffs)
    if isinstance(u, SphereField):
        b = u.basis
        body = _pack_complex(_sphere_block(b, u.curl)) + _pack_complex(_sphere_block(b, u.grad))
        return _header("sphere", 2, b.L_max, 2, KIND_FIELD) + body
    raise TypeError(f"cannot encode {type(u).__name__}")


def _read_header(buf):
    if len(buf) < _HEADER.size:
        raise FormatError("file shorter than the OHFL header")
    magic, version, backend, d, size, ncomp, kind = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    backend = backend.rstrip(b"\0").decode()
    if backend not in ("torus", "sphere"):
        raise FormatError(f"unknown backend {backend!r}")
    return backend, d, size, ncomp, kind


def _decode_field_body(buf, offset, backend, d, size, ncomp):
    if backend == "torus":
        try:
            grid = TorusGrid(d, size)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
        if ncomp != d:
            raise FormatError(f"torus field with {ncomp} components in d = {d}")
        flat, offset = _unpack_complex(buf, offset, d * size**d)
        return TorusField(grid, flat.reshape((d,) + grid.shape)), offset
    basis = SphereBasis(size)
    n = (size + 1) ** 2
    curl, offset = _unpack_complex(buf, offset, n)
    grad, offset = _unpack_complex(buf, offset, n)
    return SphereField(basis, _sphere_unblock(basis, curl), _sphere_unblock(basis, grad)), offset


def decode_field(buf):
    backend, d, size, ncomp, kind = _read_header(buf)
    if kind != KIND_FIELD:
        raise FormatError("not a field file")
    u, offset = _decode_field_body(buf, _HEADER.size, backend, d, size, ncomp)
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes after payload")
    return u


def write_field(path, u):
    Path(path).write_bytes(encode_field(u))


def read_field(path):
    return decode_field(Path(path).read_bytes())


def write_trajectory(path, traj):
    g = traj.grid
    kind = KIND_TRAJECTORY if traj.valid else KIND_TRAJECTORY_INVALID
    parts = [_header("torus", g.d, g.N, g.d, kind), _TRAJ.pack(len(traj), traj.dt, traj.stride)]
    for t, e, v, p in zip(traj.times, traj.energy, traj.velocity, traj.pressure):
        parts.append(_SNAP.pack(float(t), float(e)))
        parts.append(_pack_complex(v.coeffs))
        parts.append(_pack_complex(p.coeffs))
    Path(path).write_bytes(b"".join(parts))


def read_trajectory(path):
    from .euler2d import EulerTrajectory

    buf = Path(path).read_bytes()
    backend, d, size, ncomp, kind = _read_header(buf)
    if kind not in (KIND_TRAJECTORY, KIND_TRAJECTORY_INVALID) or backend != "torus":
        raise FormatError("not a torus trajectory file")
    offset = _HEADER.size
    if offset + _TRAJ.size > len(buf):
        raise FormatError("truncated trajectory header")
    count, dt, stride = _TRAJ.unpack_from(buf, offset)
    offset += _TRAJ.size
    grid = TorusGrid(d, size)
    times, energies, vel, prs = [], [], [], []
    for _ in range(count):
        if offset + _SNAP.size > len(buf):
            raise FormatError("truncated snapshot")
        t, e = _SNAP.unpack_from(buf, offset)
        offset += _SNAP.size
        v, offset = _unpack_complex(buf, offset, d * size**d)
        p, offset = _unpack_complex(buf, offset, size**d)
        times.append(t)
        energies.append(e)
        vel.append(TorusField(grid, v.reshape((d,) + grid.shape)))
        prs.append(TorusScalar(grid, p.reshape(grid.shape)))
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes after payload")
    return EulerTrajectory(
        np.array(times), vel, prs, np.array(energies), dt, stride, size, valid=kind == KIND_TRAJECTORY
    )
