import struct

import numpy as np
import pytest

from lrt import io
from lrt.classifier import ClassifierParams
from lrt.data import generate_training
from lrt.evalkit import BaselineMlpParams
from lrt.geometry import make_grid
from lrt.lrtnet import random_initialization

SHAPE = io.ShapeHeader(N=9, M=1, m=3, n_omega=5)


@pytest.fixture(scope="module")
def dataset():
    return generate_training((2, 1, 1), make_grid((-2, 2, -2, 2), 7, 5), 0.03, base_seed=3)


def test_dataset_round_trip_is_byte_identical(dataset, tmp_path):
    path = tmp_path / "d.lrtd"
    io.save_dataset(path, dataset)
    back = io.load_dataset(path)
    assert io.dataset_bytes(back) == path.read_bytes()
    np.testing.assert_array_equal(back.chi, dataset.chi)
    assert back.y_noisy.tobytes() == dataset.y_noisy.tobytes()
    np.testing.assert_array_equal(back.seeds, dataset.seeds)
    np.testing.assert_allclose(back.offsets, dataset.offsets, atol=1e-12)
    assert back.delta == 0.03


def test_dataset_layout(dataset):
    raw = io.dataset_bytes(dataset)
    assert raw[:4] == b"LRTD"
    assert struct.unpack("<IIII", raw[4:20]) == (1, 4, 35, 400)
    k = len(dataset.polygons[0])
    per_sample = 2 + 16 * k + 5 + 2 * 8 * 400 + 16
    band, kk = struct.unpack("<BB", raw[20:22])
    assert (band, kk) == (1, k)
    assert struct.unpack("<dQ", raw[20 + per_sample - 16:20 + per_sample]) == (0.03, int(dataset.seeds[0]))


def test_dataset_errors(dataset):
    raw = io.dataset_bytes(dataset)
    with pytest.raises(io.FormatError, match="magic"):
        io.dataset_from_bytes(b"XXXX" + raw[4:])
    with pytest.raises(io.FormatError, match="version"):
        io.dataset_from_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    with pytest.raises(io.FormatError, match="truncated"):
        io.dataset_from_bytes(raw[:-1])
    with pytest.raises(io.FormatError, match="trailing"):
        io.dataset_from_bytes(raw + b"\0")


def _models():
    phi = random_initialization(SHAPE.N, SHAPE.M + 1, SHAPE.m, SHAPE.n_omega, seed=0)
    cls = ClassifierParams.random(SHAPE.n_omega, seed=1, n_hidden=4)
    mlps = [BaselineMlpParams.random(SHAPE.n_omega, SHAPE.N, seed=s, hidden=(3, 2)) for s in range(3)]
    return phi, cls, mlps


def test_model_round_trips(tmp_path):
    phi, cls, mlps = _models()
    for name, mf in (("p", io.pack_phi(phi, 2, SHAPE)), ("c", io.pack_classifier(cls, SHAPE)),
                     ("b", io.pack_baseline(mlps, SHAPE))):
        path = tmp_path / f"{name}.lrtm"
        io.save_model(path, mf)
        back = io.load_model(path, SHAPE)
        assert back.component == mf.component and back.to_bytes() == path.read_bytes()
    p2 = io.unpack_phi(io.load_model(tmp_path / "p.lrtm"))
    assert p2.W.tobytes() == phi.W.tobytes() and p2.n_rot == 2 and p2.m == 3
    c2 = io.unpack_classifier(io.load_model(tmp_path / "c.lrtm"))
    assert c2.b2.tobytes() == cls.b2.tobytes()
    b2 = io.unpack_baseline(io.load_model(tmp_path / "b.lrtm"))
    assert len(b2) == 3 and b2[2].weights[1].tobytes() == mlps[2].weights[1].tobytes()


def test_model_header():
    phi, _, _ = _models()
    raw = io.pack_phi(phi, 3, SHAPE).to_bytes()
    assert raw[:4] == b"LRTM"
    assert struct.unpack("<IBIIIII", raw[4:29]) == (1, 3, 9, 1, 3, 5, 3)
    assert struct.unpack("<B2I", raw[29:38]) == (2, 54, 5)


def test_model_shape_mismatch(tmp_path):
    phi, _, _ = _models()
    io.save_model(tmp_path / "p.lrtm", io.pack_phi(phi, 1, SHAPE))
    with pytest.raises(io.FormatError, match="does not match"):
        io.load_model(tmp_path / "p.lrtm", io.ShapeHeader(N=9, M=2, m=3, n_omega=5))


def test_model_bad_tag_and_magic():
    phi, _, _ = _models()
    raw = bytearray(io.pack_phi(phi, 1, SHAPE).to_bytes())
    raw[8] = 99
    with pytest.raises(io.FormatError, match="tag"):
        io.ModelFile.from_bytes(bytes(raw))
    with pytest.raises(io.FormatError, match="magic"):
        io.ModelFile.from_bytes(b"LRTD" + bytes(raw[4:]))


def test_baseline_block_count():
    with pytest.raises(io.FormatError):
        io.unpack_baseline(io.ModelFile("mlp_baseline", SHAPE, [np.zeros(2)] * 5))
