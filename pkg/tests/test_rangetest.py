import math

import numpy as np
import pytest

from lrt import rangetest as rt
from lrt.forward import solve_omega
from lrt.geometry import Grid, Polygon, make_grid, square_template
from lrt.potential import assemble_R, sample_circle, sample_polygon_boundary, tikhonov_pinv

DIAMOND = Polygon([[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]])


@pytest.fixture(scope="module")
def y_diamond():
    return solve_omega(DIAMOND).values


@pytest.fixture(scope="module")
def small():
    cfg = rt.RtConfig(grid=make_grid((-1, 1, -1, 1), 5, 5), M=3, m_nodes=12)
    return cfg, rt.build_operator_bank(cfg)


def _block(G, alpha=1e-8, m=20):
    s = sample_polygon_boundary(G, m)
    om = sample_circle(10, 400)
    return tikhonov_pinv(assemble_R(s, om), alpha, s.weights, om.weights), s.weights


def test_config_validation():
    grid = make_grid((-1, 1, -1, 1), 3, 3)
    with pytest.raises(ValueError):
        rt.RtConfig(grid=grid, alpha=0)
    with pytest.raises(ValueError):
        rt.RtConfig(grid=grid, C=-1.0)
    with pytest.raises(ValueError):
        rt.RtConfig(grid=grid, percentile=0)


def test_bank_shape_reduced_profile():
    cfg = rt.RtConfig(grid=make_grid((-2, 2, -2, 2), 21, 21))
    bank = rt.build_operator_bank(cfg, dtype=np.float32)
    assert bank.shape == (441, 9, 20, 400)
    assert bank.weights.shape == (441, 9, 20)


def test_bank_blocks_match_direct_assembly(small):
    cfg, bank = small
    i, j = 7, 2
    G = rt.test_domains(cfg.grid.points[i], cfg)[j]
    W, w = _block(G, cfg.alpha, cfg.m_nodes)
    assert bank.block(i, j)[0].tobytes() == W.tobytes()
    np.testing.assert_array_equal(bank.block(i, j)[1], w)


def test_bank_rotation_relation():
    a = np.array([1.0, 0.4])
    b = np.array([-0.4, 1.0])  # a turned by 90 degrees
    grid = Grid(points=np.array([a, b]), nx=2, ny=1, bounds=(-1.0, 1.0, 0.4, 1.0))
    bank = rt.build_operator_bank(rt.RtConfig(grid=grid, M=3, m_nodes=16))
    for j in range(4):
        Wa = bank.pinv[0, j]
        Wb = bank.pinv[1, (j + 1) % 4]
        # node order on the test domain is unchanged; circle nodes shift by a quarter
        np.testing.assert_allclose(np.roll(Wa, 100, axis=1), Wb, rtol=1e-6, atol=1e-9 * np.abs(Wa).max())


def test_larger_alpha_never_increases_indicator(y_diamond):
    G = square_template((0.0, 0.0), 3.2)
    vals = []
    for alpha in (1e-8, 2e-8, 4e-8):
        W, w = _block(G, alpha)
        vals.append(rt.indicator(W, w, y_diamond))
    assert vals[0] >= vals[1] >= vals[2]


def test_indicator_linear(y_diamond):
    W, w = _block(square_template((-1.6, -1.6), 3.2))
    assert rt.indicator(W, w, np.zeros(400)) == 0.0
    assert rt.indicator(W, w, 3.0 * y_diamond) == pytest.approx(3.0 * rt.indicator(W, w, y_diamond), rel=1e-12)


def test_indicator_separates_contained_from_not(y_diamond):
    inside = rt.indicator(*_block(square_template((-1.6, -1.6), 3.2)), y_diamond)
    outside = rt.indicator(*_block(square_template((0.0, 0.0), 3.2)), y_diamond)
    assert outside >= 10 * inside


def test_indicator_table_matches_double_loop(small, y_diamond):
    cfg, bank = small
    table = rt.indicator_table(bank, y_diamond)
    brute = np.array([[rt.indicator(*bank.block(i, j), y_diamond) for j in range(4)] for i in range(25)])
    np.testing.assert_allclose(table, brute, rtol=1e-12)
    np.testing.assert_array_equal(rt.grid_minima(bank, y_diamond), table.min(axis=1))
    plain = rt.indicator_table(bank, y_diamond, weighted=False)
    assert plain[3, 1] == pytest.approx(np.linalg.norm(bank.pinv[3, 1] @ y_diamond), rel=1e-12)


def test_grid_minima_single_rotation(y_diamond):
    cfg = rt.RtConfig(grid=make_grid((-1, 1, -1, 1), 3, 3), M=0, m_nodes=8)
    bank = rt.build_operator_bank(cfg)
    np.testing.assert_array_equal(rt.grid_minima(bank, y_diamond), rt.indicator_table(bank, y_diamond)[:, 0])


def test_grid_minima_equal_blocks():
    W = np.random.default_rng(0).normal(size=(4, 6))
    bank = rt.OperatorBank(pinv=np.broadcast_to(W, (3, 2, 4, 6)).copy(), weights=np.ones((3, 2, 4)), alpha=1.0)
    y = np.arange(6.0)
    np.testing.assert_allclose(rt.grid_minima(bank, y), np.linalg.norm(W @ y))


@pytest.mark.parametrize("I,f", [(2.0, 1.0), (0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])
def test_rt_reconstruct_ramp(I, f):
    assert rt.rt_reconstruct([I], 1.0)[0] == f


def test_rt_reconstruct_range_and_monotone():
    I = np.sort(np.random.default_rng(1).uniform(0, 5, 100))
    f = rt.rt_reconstruct(I, 2.0)
    assert f.min() >= 0 and f.max() <= 1
    assert np.all(np.diff(f) >= 0)
    with pytest.raises(ValueError):
        rt.rt_reconstruct(I, 0.0)


def test_scale_covariance_exact(small, y_diamond):
    cfg, bank = small
    fixed = rt.RtConfig(grid=cfg.grid, M=3, m_nodes=12, C=0.01)
    f, _ = rt.reconstruct(bank, y_diamond, fixed)
    scaled = rt.RtConfig(grid=cfg.grid, M=3, m_nodes=12, C=0.04)
    g, _ = rt.reconstruct(bank, 4.0 * y_diamond, scaled)
    np.testing.assert_array_equal(f, g)


def test_percentile_threshold(small, y_diamond):
    cfg, bank = small
    f, C = rt.reconstruct(bank, y_diamond, cfg)
    I = rt.grid_minima(bank, y_diamond)
    assert C == np.percentile(I, 90)
    assert np.sum(f == 1.0) == np.sum(I >= C)


def test_reconstruction_deterministic(small, y_diamond):
    cfg, bank = small
    again = rt.build_operator_bank(cfg)
    assert again.pinv.tobytes() == bank.pinv.tobytes()
    assert rt.reconstruct(bank, y_diamond, cfg)[0].tobytes() == rt.reconstruct(again, y_diamond, cfg)[0].tobytes()


def test_family_failure_identifies_block():
    grid = Grid(points=np.array([[0.0, 0.0]]), nx=1, ny=1, bounds=(0.0, 0.0, 0.0, 0.0))
    with pytest.raises(Exception, match="leaves the disk"):
        rt.build_operator_bank(rt.RtConfig(grid=grid, side=math.sqrt(60.0)))
