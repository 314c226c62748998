import math

import numpy as np
import pytest

from lrt import forward as fw
from lrt.geometry import Polygon, regular_polygon, rotate_polygon, square_template
from lrt.potential import sample_circle

RADII = (0.4, 0.5, 0.6)


def test_background_solution_values():
    assert fw.background_solution([0.0, 0.0]) == 0.0
    assert fw.background_solution([3.0, 4.0]) == 12.0


def test_background_solution_harmonic():
    rng = np.random.default_rng(0)
    h = 1e-3
    for p in rng.uniform(-5, 5, size=(20, 2)):
        lap = sum(fw.background_solution(p + d) for d in ([h, 0], [-h, 0], [0, h], [0, -h]))
        lap -= 4 * fw.background_solution(p)
        assert abs(lap / h ** 2) < 1e-6


def test_boundary_datum_is_xy():
    c = sample_circle(10, 16)
    np.testing.assert_array_equal(fw.boundary_datum(c), c.points[:, 0] * c.points[:, 1])


def test_annulus_flux_closed_form():
    # theta = pi/4 at node 50 of 400
    assert fw.annulus_flux(0.5, 400)[50] == pytest.approx(2 * 0.5 ** 4 * 10 / (1e4 - 0.5 ** 4))
    assert fw.annulus_flux(0.5, 400)[0] == 0.0


@pytest.mark.parametrize("rho", RADII)
def test_equal_area_polygon_matches_disk(rho):
    y = fw.solve_omega(fw.equal_area_ngon(rho, 64), "data_grade").values
    ref = fw.annulus_flux(rho)
    assert np.linalg.norm(y - ref) / np.linalg.norm(ref) <= 1e-3


@pytest.mark.parametrize("rho", RADII)
def test_circle_source_curve_matches_disk(rho):
    y = fw.solve_omega_curve(fw.circle_curve(rho)).values
    ref = fw.annulus_flux(rho)
    assert np.linalg.norm(y - ref) / np.linalg.norm(ref) <= 1e-6


def test_equal_area_ngon_area():
    assert fw.equal_area_ngon(0.5, 64).area == pytest.approx(math.pi * 0.25, rel=1e-13)


def test_point_symmetric_inclusion_gives_pi_periodic_data():
    B = Polygon([[0.6, 0.0], [0.2, 0.4], [-0.6, 0.0], [-0.2, -0.4]])
    y = fw.solve_omega(B).values
    np.testing.assert_allclose(y, np.roll(y, 200), atol=1e-10 * np.abs(y).max())


def test_half_turn_equivariance():
    rng = np.random.default_rng(1)
    B = regular_polygon((0.5, -0.3), 0.5, np.sort(rng.uniform(0, 2 * math.pi, 5)))
    y = fw.solve_omega(B).values
    y_rot = fw.solve_omega(rotate_polygon(B, math.pi)).values
    assert np.abs(y_rot - np.roll(y, -200)).max() <= 1e-8 * np.abs(y).max()


def test_flux_decreases_away_from_boundary():
    norms = []
    for t in (2.0, 1.5, 1.0, 0.5, 0.0):
        B = square_template((t - 0.4, 0.1), 0.8)
        norms.append(np.linalg.norm(fw.solve_omega(B).values))
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_total_flux_equals_minus_coefficient_sum():
    B = regular_polygon((0.3, 0.2), 0.5, [0.1, 1.5, 3.0, 4.4])
    m = fw.solve_omega(B)
    total = m.values.sum() * (2 * math.pi * 10 / 400)
    assert abs(total + m.coefficients.sum()) <= 1e-8 * np.abs(m.coefficients).sum()


def test_inverse_crime_guard():
    data, op = fw.FIDELITY["data_grade"], fw.FIDELITY["operator_grade"]
    assert data.n_src >= 2 * op.n_src and data.n_col >= 2 * op.n_col
    B = regular_polygon((0, 0), 0.5, [0, 2, 4])
    src_d = fw.polygon_nodes(B, data)[1]
    src_o = fw.polygon_nodes(B, op)[1]
    d = np.hypot(*(src_d[:, None] - src_o[None]).transpose(2, 0, 1))
    assert d.min() > 1e-6


def test_operator_grade_close_to_data_grade():
    B = regular_polygon((0.2, -0.4), 0.5, [0.3, 1.7, 3.5, 5.0])
    a = fw.solve_omega(B, "data_grade").values
    b = fw.solve_omega(B, "operator_grade").values
    assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-2


def test_residual_failure_reported():
    B = regular_polygon((0, 0), 0.5, [0, 2, 4])
    with pytest.raises(fw.ForwardSolveError, match="residual"):
        fw.solve_omega(B, fw.Fidelity(3, 12), rtol=1e-9)


def test_solve_is_deterministic():
    B = regular_polygon((0.1, 0.2), 0.45, [0.0, 2.0, 3.5, 5.0])
    assert fw.solve_omega(B).values.tobytes() == fw.solve_omega(B).values.tobytes()


def test_add_noise_zero_delta():
    y = np.linspace(-1, 1, 400)
    out = fw.add_noise(y, 0.0, 5)
    np.testing.assert_array_equal(out.values, y)
    assert out.noise_level == 0.0 and out.seed is None
    assert out.values is not y


def test_add_noise_formula_and_determinism():
    y = fw.annulus_flux(0.5)
    out = fw.add_noise(y, 0.03, 99)
    assert out.values.tobytes() == fw.add_noise(y, 0.03, 99).values.tobytes()
    psi = np.random.default_rng(99).standard_normal(400)
    np.testing.assert_array_equal(out.values, y * (1 + 0.03 * psi / np.linalg.norm(psi)))
    err = np.linalg.norm(out.values - y)
    assert err == pytest.approx(0.03 * np.linalg.norm(y * psi) / np.linalg.norm(psi), rel=1e-12)
    assert err <= 0.03 * np.abs(y).max()
    assert out.noise_level == 0.03 and out.seed == 99


def test_add_noise_rejects_negative():
    with pytest.raises(ValueError):
        fw.add_noise(np.ones(4), -0.1, 0)
