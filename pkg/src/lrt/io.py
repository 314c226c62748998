"""Binary dataset and model files.

All integers and floats are little-endian.

Dataset file::

    b"LRTD" | version u32 | n_samples u32 | N u32 | n_omega u32
    per sample: band u8 | k u8 | vertices f64[2k] (x0 y0 x1 y1 ...)
                | chi bitset u8[ceil(N/8)] (bit order little) | y f64[n_omega]
                | y_noisy f64[n_omega] | delta f64 | seed u64

Model file::

    b"LRTM" | version u32 | tag u8 | N u32 | M u32 | m u32 | n_omega u32 | n_blocks u32
    per block: ndim u8 | dims u32[ndim] | values f64[prod(dims)] (C order)

Block order: ``W, b, c`` for band networks; ``W1, b1, W2, b2`` for the
classifier; ``W0, b0, W1, b1, W2, b2`` per band, bands 1..3, for the
fully connected baseline.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import ClassifierParams
from .data import Dataset
from .evalkit import BaselineMlpParams
from .geometry import Polygon
from .lrtnet import LrtParams

DATASET_MAGIC = b"LRTD"
MODEL_MAGIC = b"LRTM"
VERSION = 1

TAGS = {"phi1": 1, "phi2": 2, "phi3": 3, "classifier": 4, "mlp_baseline": 5}
TAG_NAMES = {v: k for k, v in TAGS.items()}


class FormatError(ValueError):
    pass


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError("truncated file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def f64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise FormatError(f"{len(self.buf) - self.pos} trailing bytes")


def _check_magic(r: _Reader, magic: bytes) -> None:
    if r.take(4) != magic:
        raise FormatError(f"bad magic, expected {magic!r}")
    (version,) = r.unpack("I")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")


def _circumcenter(v: np.ndarray) -> np.ndarray:
    (ax, ay), (bx, by), (cx, cy) = v[:3]
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    return np.array([(a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d,
                     (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d])


# --- datasets -------------------------------------------------------------------------


def dataset_bytes(ds: Dataset) -> bytes:
    n, n_pts = ds.chi.shape
    n_omega = ds.y.shape[1]
    parts = [DATASET_MAGIC, struct.pack("<IIII", VERSION, n, n_pts, n_omega)]
    for k in range(n):
        v = ds.polygons[k].vertices
        if len(v) > 255:
            raise FormatError("polygons are limited to 255 vertices")
        parts.append(struct.pack("<BB", int(ds.bands[k]), len(v)))
        parts.append(np.ascontiguousarray(v, dtype="<f8").tobytes())
        parts.append(np.packbits(ds.chi[k].astype(np.uint8), bitorder="little").tobytes())
        parts.append(np.ascontiguousarray(ds.y[k], dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(ds.y_noisy[k], dtype="<f8").tobytes())
        parts.append(struct.pack("<dQ", ds.delta, int(ds.seeds[k])))
    return b"".join(parts)


def dataset_from_bytes(buf: bytes) -> Dataset:
    r = _Reader(buf)
    _check_magic(r, DATASET_MAGIC)
    n, n_pts, n_omega = r.unpack("III")
    n_bytes = (n_pts + 7) // 8
    bands, polys, chis, ys, yns, deltas, seeds = [], [], [], [], [], [], []
    for _ in range(n):
        band, k = r.unpack("BB")
        bands.append(band)
        polys.append(Polygon(r.f64(2 * k).reshape(k, 2)))
        bits = np.frombuffer(r.take(n_bytes), dtype=np.uint8)
        chis.append(np.unpackbits(bits, count=n_pts, bitorder="little"))
        ys.append(r.f64(n_omega))
        yns.append(r.f64(n_omega))
        delta, seed = r.unpack("dQ")
        deltas.append(delta)
        seeds.append(seed)
    r.done()
    if len(set(deltas)) > 1:
        raise FormatError("mixed noise levels in one dataset")
    offsets = np.array([np.hypot(*_circumcenter(p.vertices)) for p in polys])
    return Dataset(bands=np.asarray(bands, dtype=np.uint8), polygons=polys,
                   chi=np.asarray(chis, dtype=np.uint8).reshape(n, n_pts),
                   y=np.asarray(ys).reshape(n, n_omega), y_noisy=np.asarray(yns).reshape(n, n_omega),
                   delta=deltas[0] if deltas else 0.0, seeds=np.asarray(seeds, dtype=np.uint64),
                   offsets=offsets)


def save_dataset(path, ds: Dataset) -> None:
    Path(path).write_bytes(dataset_bytes(ds))


def load_dataset(path) -> Dataset:
    return dataset_from_bytes(Path(path).read_bytes())


# --- models ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShapeHeader:
    N: int
    M: int
    m: int
    n_omega: int


@dataclass
class ModelFile:
    component: str
    shape: ShapeHeader
    blocks: list[np.ndarray]

    def to_bytes(self) -> bytes:
        s = self.shape
        parts = [MODEL_MAGIC, struct.pack("<IBIIIII", VERSION, TAGS[self.component],
                                          s.N, s.M, s.m, s.n_omega, len(self.blocks))]
        for block in self.blocks:
            a = np.ascontiguousarray(block, dtype="<f8")
            parts.append(struct.pack(f"<B{a.ndim}I", a.ndim, *a.shape))
            parts.append(a.tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "ModelFile":
        r = _Reader(buf)
        _check_magic(r, MODEL_MAGIC)
        tag, N, M, m, n_omega, n_blocks = r.unpack("BIIIII")
        if tag not in TAG_NAMES:
            raise FormatError(f"unknown component tag {tag}")
        blocks = []
        for _ in range(n_blocks):
            (ndim,) = r.unpack("B")
            dims = r.unpack(f"{ndim}I")
            blocks.append(r.f64(int(np.prod(dims, dtype=np.int64))).reshape(dims))
        r.done()
        return cls(TAG_NAMES[tag], ShapeHeader(N, M, m, n_omega), blocks)

    def check_shape(self, expected: ShapeHeader) -> None:
        if self.shape != expected:
            raise FormatError(f"{self.component} model shape {self.shape} does not match "
                              f"the configuration {expected}")


def pack_phi(theta: LrtParams, band: int, shape: ShapeHeader) -> ModelFile:
    return ModelFile(f"phi{band}", shape, [theta.W, theta.b, theta.c])


def unpack_phi(mf: ModelFile) -> LrtParams:
    W, b, c = mf.blocks
    return LrtParams(W=W, b=b, c=c, n_rot=mf.shape.M + 1, m=mf.shape.m)


def pack_classifier(theta: ClassifierParams, shape: ShapeHeader) -> ModelFile:
    return ModelFile("classifier", shape, [theta.W1, theta.b1, theta.W2, theta.b2])


def unpack_classifier(mf: ModelFile) -> ClassifierParams:
    return ClassifierParams(*mf.blocks)


def pack_baseline(mlps: list[BaselineMlpParams], shape: ShapeHeader) -> ModelFile:
    blocks = []
    for net in mlps:
        for W, b in zip(net.weights, net.biases):
            blocks += [W, b]
    return ModelFile("mlp_baseline", shape, blocks)


def unpack_baseline(mf: ModelFile, n_layers: int = 3) -> list[BaselineMlpParams]:
    per_net = 2 * n_layers
    if len(mf.blocks) % per_net:
        raise FormatError("baseline block count is not a multiple of the layer count")
    nets = []
    for k in range(0, len(mf.blocks), per_net):
        chunk = mf.blocks[k:k + per_net]
        nets.append(BaselineMlpParams(list(chunk[0::2]), list(chunk[1::2])))
    return nets


def save_model(path, mf: ModelFile) -> None:
    Path(path).write_bytes(mf.to_bytes())


def load_model(path, expected: ShapeHeader | None = None) -> ModelFile:
    mf = ModelFile.from_bytes(Path(path).read_bytes())
    if expected is not None:
        mf.check_shape(expected)
    return mf
