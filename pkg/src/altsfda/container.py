"""Binary tensor container used for checkpoints and bank exports.

Layout (all integers little-endian)::

    magic        8 bytes   b"ALTSFDA\\0"
    version      uint32    FORMAT_VERSION
    kind         uint32    length, then utf-8 bytes ("checkpoint", "bank", ...)
    n_tensors    uint32
    per tensor:
        name     uint32 length, then utf-8 bytes
        ndim     uint32
        dims     ndim x uint64
        data     prod(dims) x float64, little-endian, C order
    trailer      8 bytes   b"ALTEND\\0\\0"

The trailer makes truncation detectable even when a cut happens to land on
a tensor boundary.
"""

import struct

import numpy as np

MAGIC = b"ALTSFDA\0"
TRAILER = b"ALTEND\0\0"
FORMAT_VERSION = 1


class ContainerError(ValueError):
    pass


def _pack_str(s):
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def write_container(path, kind, tensors):
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION), _pack_str(kind), struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        parts.append(_pack_str(name))
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    parts.append(TRAILER)
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, buf, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise ContainerError(f"{self.path}: truncated container at byte {self.pos}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def string(self):
        return self.take(self.u32()).decode("utf-8")


def read_container(path, expect_kind=None):
    """Return (kind, {name: array}); raises ContainerError on any format problem."""
    with open(path, "rb") as fh:
        buf = fh.read()
    r = _Reader(buf, path)
    if r.take(len(MAGIC)) != MAGIC:
        raise ContainerError(f"{path}: not an altsfda container")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise ContainerError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    kind = r.string()
    if expect_kind is not None and kind != expect_kind:
        raise ContainerError(f"{path}: container holds {kind!r}, expected {expect_kind!r}")
    tensors = {}
    for _ in range(r.u32()):
        name = r.string()
        ndim = r.u32()
        dims = struct.unpack(f"<{ndim}Q", r.take(8 * ndim))
        count = int(np.prod(dims)) if ndim else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64)
        tensors[name] = data.reshape(dims)
    if r.take(len(TRAILER)) != TRAILER:
        raise ContainerError(f"{path}: missing trailer")
    if r.pos != len(buf):
        raise ContainerError(f"{path}: {len(buf) - r.pos} trailing bytes")
    return kind, tensors
