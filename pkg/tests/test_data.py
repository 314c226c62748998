import numpy as np
import pytest

from lrt import data
from lrt.forward import add_noise, solve_omega
from lrt.geometry import InclusionSampleSpec, band_of, indicator_image, make_grid

GRID = make_grid((-2, 2, -2, 2), 21, 21)


@pytest.fixture(scope="module")
def train():
    return data.generate_training((3, 2, 2), GRID, 0.03, base_seed=5)


def test_seed_derivation():
    assert data.split_seed(7, 0) == 112 and data.split_seed(7, 3) == 115
    assert data.sample_seed(3, 5) == (3 << 32) ^ 5
    seeds = {data.sample_seed(s, k) for s in range(50) for k in range(50)}
    assert len(seeds) == 2500
    assert data.noise_seed(4) == 4 | (1 << 63)


def test_training_layout(train):
    assert len(train) == 7
    np.testing.assert_array_equal(train.bands, [1, 1, 1, 2, 2, 3, 3])
    assert train.chi.shape == (7, 441) and train.chi.dtype == np.uint8
    assert train.y.shape == train.y_noisy.shape == (7, 400)
    assert train.seeds.dtype == np.uint64
    for ell, off in zip(train.bands, train.offsets):
        assert band_of(off) == ell


def test_records_match_independent_recomputation(train):
    for k in (0, 4, 6):
        poly = train.polygons[k]
        np.testing.assert_array_equal(train.chi[k], indicator_image(poly, GRID))
        y = solve_omega(poly).values
        assert train.y[k].tobytes() == y.tobytes()
        yn = add_noise(y, 0.03, data.noise_seed(int(train.seeds[k]))).values
        assert train.y_noisy[k].tobytes() == yn.tobytes()


def test_generation_is_reproducible(train):
    again = data.generate_training((3, 2, 2), GRID, 0.03, base_seed=5)
    assert again.y_noisy.tobytes() == train.y_noisy.tobytes()
    assert again.seeds.tobytes() == train.seeds.tobytes()
    other = data.generate_training((3, 2, 2), GRID, 0.03, base_seed=6)
    assert other.y.tobytes() != train.y.tobytes()


def test_with_noise_round_trip(train):
    clean = train.with_noise(0.0)
    np.testing.assert_array_equal(clean.y_noisy, train.y)
    back = clean.with_noise(0.03)
    assert back.y_noisy.tobytes() == train.y_noisy.tobytes()
    assert back.delta == 0.03


def test_subset_band_concat(train):
    b2 = train.band(2)
    assert len(b2) == 2 and set(b2.bands) == {2}
    joined = data.Dataset.concat([train.band(1), b2, train.band(3)])
    assert joined.y.tobytes() == train.y.tobytes()
    np.testing.assert_array_equal(train.subset([0, 6]).seeds, train.seeds[[0, 6]])
    np.testing.assert_array_equal(train.inputs(noisy=False), train.y)


def test_test_set_labels_follow_offsets():
    test = data.generate_test(12, GRID, 0.0, base_seed=5)
    assert test.offsets.max() < 1.2
    np.testing.assert_array_equal(test.bands, [band_of(o) for o in test.offsets])
    np.testing.assert_array_equal(test.y, test.y_noisy)
    assert test.seeds[0] == data.sample_seed(data.split_seed(5, 0), 0)


def test_custom_spec_is_respected():
    spec = InclusionSampleSpec(side_counts=(3,), circumradius_range=(0.45, 0.45))
    ds = data.generate_training((2, 0, 0), GRID, 0.0, base_seed=1, spec=spec)
    assert all(len(p) == 3 for p in ds.polygons)
