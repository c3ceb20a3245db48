"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 13, 2026

Little endian tensor files.

B2S1 holds shape targets, B2T1 token batches and B2C1 checkpoints. Each file
starts with a fixed `struct` header followed by contiguous row major arrays:
float64 values, uint8 masks and int64 indices.

"""

from __future__ import annotations

import struct
from collections import OrderedDict
from typing import Mapping

import numpy as np
from atom.api import Atom, Bytes, Int, Typed

from ..components.sampling import ShapeTargets
from ..components.tokenize import TokenBatch
from ..core.errors import ParseError
from .files import PathType, atomic_write
from .lxml_model import read_file

TARGETS_HEADER = struct.Struct("<4s6I")
BATCH_HEADER = struct.Struct("<4s11I")
CHECKPOINT_HEADER = struct.Struct("<4sqII")
TENSOR_HEADER = struct.Struct("<HB")


class _Reader:
    """Sequential reads that fail with a `ParseError` on truncation."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if size < 0 or end > len(self.data):
            raise ParseError(f"Truncated file at byte {self.offset}", self.path)
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, st: struct.Struct) -> tuple:
        return st.unpack(self.take(st.size))

    def array(self, dtype: str, shape: tuple[int, ...]) -> np.ndarray:
        dt = np.dtype(dtype)
        count = int(np.prod(shape, dtype=np.int64))
        raw = self.take(count * dt.itemsize)
        return np.frombuffer(raw, dtype=dt).reshape(shape).copy()

    def finish(self):
        if self.offset != len(self.data):
            extra = len(self.data) - self.offset
            raise ParseError(f"{extra} trailing byte(s)", self.path)


def _f8(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _u1(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="u1").tobytes()


def _i8(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<i8").tobytes()


def _magic(reader: _Reader, found: bytes, expected: bytes):
    if found != expected:
        raise ParseError(f"Bad magic {found!r}, expected {expected!r}", reader.path)


# -----------------------------------------------------------------------------
# Targets
# -----------------------------------------------------------------------------
def targets_to_bytes(targets: ShapeTargets) -> bytes:
    nm = len(targets.scales)
    header = TARGETS_HEADER.pack(
        b"B2S1",
        nm,
        targets.n_faces,
        targets.n_edges,
        targets.m,
        targets.face_cap,
        targets.edge_cap,
    )
    return b"".join(
        [
            header,
            _f8(targets.centers),
            _f8(targets.scales),
            _f8(targets.face_points),
            _u1(targets.face_mask),
            _f8(targets.edge_points),
            _u1(targets.edge_mask),
        ]
    )


def targets_from_bytes(data: bytes, path: str = "") -> ShapeTargets:
    r = _Reader(data, path)
    magic, nm, nf, ne, m, fcap, ecap = r.unpack(TARGETS_HEADER)
    _magic(r, magic, b"B2S1")
    sf, se = fcap * m, ecap * m
    targets = ShapeTargets(
        centers=r.array("<f8", (nm, 3)),
        scales=r.array("<f8", (nm,)),
        face_points=r.array("<f8", (nf, sf, 3)),
        face_mask=r.array("u1", (nf, sf)).astype(bool),
        edge_points=r.array("<f8", (ne, se, 3)),
        edge_mask=r.array("u1", (ne, se)).astype(bool),
        m=m,
        face_cap=fcap,
        edge_cap=ecap,
    )
    r.finish()
    return targets


def write_targets(targets: ShapeTargets, path: PathType):
    atomic_write(path, targets_to_bytes(targets))


def read_targets(path: PathType) -> ShapeTargets:
    return targets_from_bytes(read_file(path), str(path))


# -----------------------------------------------------------------------------
# Token batches
# -----------------------------------------------------------------------------
def batch_to_bytes(batch: TokenBatch) -> bytes:
    header = BATCH_HEADER.pack(
        b"B2T1",
        batch.n_models,
        batch.n_faces,
        batch.n_edges,
        batch.face_cap,
        batch.edge_cap,
        batch.face_tensor.shape[2],
        batch.edge_tensor.shape[2],
        batch.triangle_degree,
        batch.curve_degree,
        len(batch.face_adjacency),
        len(batch.edge_adjacency),
    )
    return b"".join(
        [
            header,
            _i8(batch.counts),
            _f8(batch.centers),
            _f8(batch.scales),
            _f8(batch.face_tensor),
            _u1(batch.face_mask),
            _f8(batch.edge_tensor),
            _u1(batch.edge_mask),
            _i8(batch.face_adjacency),
            _i8(batch.edge_adjacency),
        ]
    )


def batch_from_bytes(data: bytes, path: str = "") -> TokenBatch:
    r = _Reader(data, path)
    magic, nm, nf, ne, fcap, ecap, nt, ns, d, p, kf, ke = r.unpack(BATCH_HEADER)
    _magic(r, magic, b"B2T1")
    batch = TokenBatch(
        counts=r.array("<i8", (nm, 2)),
        centers=r.array("<f8", (nm, 3)),
        scales=r.array("<f8", (nm,)),
        face_tensor=r.array("<f8", (nf, fcap, nt, 4)),
        face_mask=r.array("u1", (nf, fcap)).astype(bool),
        edge_tensor=r.array("<f8", (ne, ecap, ns, 4)),
        edge_mask=r.array("u1", (ne, ecap)).astype(bool),
        face_adjacency=r.array("<i8", (kf, 3)),
        edge_adjacency=r.array("<i8", (ke, 3)),
        triangle_degree=d,
        curve_degree=p,
    )
    r.finish()
    return batch.validate()


def write_batch(batch: TokenBatch, path: PathType):
    atomic_write(path, batch_to_bytes(batch))


def read_batch(path: PathType) -> TokenBatch:
    return batch_from_bytes(read_file(path), str(path))


# -----------------------------------------------------------------------------
# Checkpoints
# -----------------------------------------------------------------------------
class Checkpoint(Atom):
    """Named float64 tensors with the configuration they belong to."""

    #: Name to array, in the order they were written
    tensors = Typed(OrderedDict, ())

    #: Serialized configuration document
    config = Bytes()

    #: Initialization seed
    seed = Int()


def checkpoint_to_bytes(ckpt: Checkpoint) -> bytes:
    header = CHECKPOINT_HEADER.pack(
        b"B2C1", ckpt.seed, len(ckpt.tensors), len(ckpt.config)
    )
    parts = [header, ckpt.config]
    for name, value in ckpt.tensors.items():
        value = np.asarray(value)
        key = name.encode("utf-8")
        parts.append(TENSOR_HEADER.pack(len(key), value.ndim))
        parts.append(key)
        parts.append(struct.pack(f"<{value.ndim}Q", *value.shape))
        parts.append(_f8(value))
    return b"".join(parts)


def checkpoint_from_bytes(data: bytes, path: str = "") -> Checkpoint:
    r = _Reader(data, path)
    magic, seed, count, config_len = r.unpack(CHECKPOINT_HEADER)
    _magic(r, magic, b"B2C1")
    config = r.take(config_len)
    tensors: OrderedDict[str, np.ndarray] = OrderedDict()
    for _ in range(count):
        key_len, ndim = r.unpack(TENSOR_HEADER)
        try:
            name = r.take(key_len).decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError("Tensor name is not utf-8", path) from e
        shape = struct.unpack(f"<{ndim}Q", r.take(8 * ndim))
        tensors[name] = r.array("<f8", shape)
    r.finish()
    return Checkpoint(tensors=tensors, config=config, seed=seed)


def write_checkpoint(
    tensors: Mapping[str, np.ndarray], config: bytes, seed: int, path: PathType
):
    ckpt = Checkpoint(tensors=OrderedDict(tensors), config=config, seed=seed)
    atomic_write(path, checkpoint_to_bytes(ckpt))


def read_checkpoint(path: PathType) -> Checkpoint:
    return checkpoint_from_bytes(read_file(path), str(path))
