import math

import numpy as np
import pytest

from nldiff.errors import InvalidArgument, LambdaOutOfRange, NotNonnegative
from nldiff.grid import Circle, Interval, build_grid
from nldiff.model import catalog_by_name
from nldiff.operators import assemble_A, assemble_J
from nldiff.spectral import (check_monotone, left_endpoint_limit,
                             matrix_spectral_radius, rank_one_radius,
                             spectral_radius, spr_curve, upper_bound,
                             write_curve_csv)


def test_matrix_spectral_radius_known_matrix():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    res = matrix_spectral_radius(M)
    assert res.converged
    assert res.radius == pytest.approx(3.0, abs=1e-9)
    assert res.perron_vector == pytest.approx([0.5, 0.5], abs=1e-8)


def test_matrix_spectral_radius_reducible_with_shift():
    # Permutation matrix: plain power iteration oscillates, the shift fixes it.
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    res = matrix_spectral_radius(M)
    assert res.converged
    assert res.radius == pytest.approx(1.0, abs=1e-8)


def test_negative_matrix_rejected():
    with pytest.raises(NotNonnegative):
        matrix_spectral_radius(np.array([[1.0, -0.1], [0.0, 1.0]]))


def test_warm_start_agrees_with_cold_start():
    rng = np.random.default_rng(7)
    M = rng.uniform(0.0, 1.0, size=(40, 40))
    cold = matrix_spectral_radius(M)
    warm = matrix_spectral_radius(M, v0=cold.perron_vector)
    assert warm.radius == pytest.approx(cold.radius, rel=1e-10)
    assert warm.iterations <= cold.iterations


def test_warm_start_rejects_bad_vector():
    M = np.eye(3)
    with pytest.raises(InvalidArgument):
        matrix_spectral_radius(M, v0=np.array([1.0, -1.0, 0.0]))
    with pytest.raises(InvalidArgument):
        matrix_spectral_radius(M, v0=np.zeros(3))


def test_const_circle_radius_closed_form():
    m = catalog_by_name()["const_circle"]
    g = build_grid(m.domain, 64)
    for lam in (0.0, 0.5, 2.0):
        A = assemble_A(m.kernel, m.death_rate, g, lam)
        res = spectral_radius(A)
        assert res.radius == pytest.approx(1.0 / (lam + 0.5), abs=1e-10)


def test_rank_one_radius_oracle_matches_power_iteration():
    m = catalog_by_name()["rank_one_log"]
    g = build_grid(m.domain, 201, "gauss_legendre_composite")
    for lam in (-1.0, 0.0, 1.0):
        oracle = rank_one_radius(m.kernel, m.death_rate, g, lam)
        power = spectral_radius(assemble_A(m.kernel, m.death_rate, g, lam)).radius
        assert power == pytest.approx(oracle, rel=1e-9)
        # and the quadrature itself matches the analytic log expression
        assert oracle == pytest.approx(math.log((lam + 3.0) / (lam + 2.0)), abs=1e-9)


def test_rank_one_radius_requires_structure():
    m = catalog_by_name()["prop1_gauss"]
    g = build_grid(m.domain, 64)
    with pytest.raises(InvalidArgument):
        rank_one_radius(m.kernel, m.death_rate, g, 0.0)


def test_spr_curve_monotone_and_validated():
    m = catalog_by_name()["rank_one_log"]
    g = build_grid(m.domain, 201)
    lams = np.linspace(-1.9, 2.0, 30)
    curve = spr_curve(m.kernel, m.death_rate, g, lams)
    ok, idx = check_monotone(curve)
    assert ok and idx is None
    assert all(s.converged for s in curve.samples)
    assert curve.supremum == pytest.approx(curve.samples[0].radius)


def test_spr_curve_input_validation():
    m = catalog_by_name()["rank_one_log"]
    g = build_grid(m.domain, 51)
    with pytest.raises(InvalidArgument):
        spr_curve(m.kernel, m.death_rate, g, [])
    with pytest.raises(InvalidArgument):
        spr_curve(m.kernel, m.death_rate, g, [0.0, 0.0, 1.0])
    with pytest.raises(LambdaOutOfRange):
        spr_curve(m.kernel, m.death_rate, g, [-2.5, 0.0])


def test_check_monotone_flags_violation():
    from nldiff.spectral import CurveSample, SprCurve
    curve = SprCurve((CurveSample(0.0, 2.0, True, 0.0),
                      CurveSample(1.0, 2.5, True, 0.0)), inf_a=1.0)
    ok, idx = check_monotone(curve)
    assert not ok and idx == 1


def test_upper_bound_dominates_curve():
    m = catalog_by_name()["prop1_gauss"]
    g = build_grid(m.domain, 201)
    J_norm = 1.0  # probability profile: unit mass
    lams = np.linspace(-0.9, 3.0, 15)
    curve = spr_curve(m.kernel, m.death_rate, g, lams)
    for s in curve.samples:
        assert s.radius <= upper_bound(s.lam, J_norm, m.death_rate.inf_value) * (1 + 1e-9)
    with pytest.raises(LambdaOutOfRange):
        upper_bound(-2.0, 1.0, 1.0)


def test_left_endpoint_limit_diverges_for_log_model():
    m = catalog_by_name()["rank_one_log"]
    g = build_grid(m.domain, 201, "gauss_legendre_composite")
    est = left_endpoint_limit(m.kernel, m.death_rate, g)
    assert not est.diverged  # log divergence is slow; no cap hit at eta = 1e-8
    # at a well-resolved offset the radius follows ln(1 + 1/eta)
    lam, r = est.samples[0]
    eta = lam + 2.0
    assert r == pytest.approx(math.log1p(1.0 / eta), rel=1e-6)
    # radii keep growing as eta shrinks even though the fixed grid
    # underestimates the near-singular rows
    radii = [rad for _, rad in est.samples]
    assert all(b > a for a, b in zip(radii, radii[1:]))
    assert est.supremum > 1.0


def test_left_endpoint_limit_schedule_validation():
    m = catalog_by_name()["rank_one_log"]
    g = build_grid(m.domain, 51)
    with pytest.raises(InvalidArgument):
        left_endpoint_limit(m.kernel, m.death_rate, g, schedule=[1e-1, 1e-1])
    with pytest.raises(InvalidArgument):
        left_endpoint_limit(m.kernel, m.death_rate, g, schedule=[1e-1, 1e-12])
    with pytest.raises(InvalidArgument):
        left_endpoint_limit(m.kernel, m.death_rate, g, schedule=[])


def test_left_endpoint_cap_triggers_divergence_flag():
    m = catalog_by_name()["const_circle"]
    g = build_grid(m.domain, 64)
    est = left_endpoint_limit(m.kernel, m.death_rate, g)
    # radius 1/eta blows past the default cap of 1e6 before the schedule ends
    assert est.diverged
    assert len(est.samples) < 8


def test_write_curve_csv(tmp_path):
    m = catalog_by_name()["const_circle"]
    g = build_grid(m.domain, 64)
    curve = spr_curve(m.kernel, m.death_rate, g, [0.0, 1.0, 2.0])
    path = tmp_path / "curve.csv"
    write_curve_csv(curve, path, J_norm=1.0)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "lambda,spr,converged,residual,upper_bound"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert float(first[1]) == pytest.approx(2.0, abs=1e-9)
