import math

import numpy as np
import pytest

import mvoed


def test_models_registered():
    names = mvoed.registered_models()
    assert "lingauss-1d" in names
    assert "nonlinear-1d" in names


def test_lingauss_estimate_matches_closed_form():
    problem = mvoed.make_problem("lingauss-1d")
    config = mvoed.EstimatorConfig(n=20000, seed=3)
    report = mvoed.estimate(problem, [1.0], config)
    exact = mvoed.lg_exact_expected_utility(1.0)
    assert exact == pytest.approx(0.5 * math.log(10.0))
    assert abs(report.u_hat - exact) < 5 * report.u_std_error + 1e-3
    assert report.j_hat == pytest.approx(report.u_hat - config.lambda_ * report.v_hat)
    assert report.dropped == 0


def test_estimate_is_deterministic():
    problem = mvoed.make_problem("nonlinear-1d")
    config = mvoed.EstimatorConfig(n=500, lambda_=1.0, crs_seed=4)
    a = mvoed.estimate(problem, [0.3], config)
    b = mvoed.estimate(problem, [0.3], config)
    assert a.j_hat == b.j_hat
    assert a.bank_seed == 4


def test_config_errors_surface_as_value_error():
    with pytest.raises(mvoed.ConfigError):
        mvoed.EstimatorConfig(n=1)
    with pytest.raises(ValueError):
        mvoed.make_problem("no-such-model")


def test_optimize_trace():
    problem = mvoed.make_problem("lingauss-1d")
    config = mvoed.EstimatorConfig(n=300, crs_seed=2)
    result = mvoed.optimize(problem, config, n_init=3, budget=4, seed=1)
    trace = result["trace"]
    assert len(trace) == 7
    best = [row["best_so_far"] for row in trace]
    assert best == sorted(best)
    assert result["best_value"] == max(row["j_hat"] for row in trace)


def test_rate_study_shape():
    problem = mvoed.make_problem("lingauss-1d")
    study = mvoed.rate_study(problem, [1.0], "U", ladder=[50, 100, 200], replicates=10)
    assert study["truth_is_closed_form"]
    assert [r["n"] for r in study["rungs"]] == [50, 100, 200]
    with pytest.raises(mvoed.ConfigError):
        mvoed.rate_study(problem, [1.0], "U", ladder=[50, 100, 200], replicates=3)


def test_solve_diffusion_returns_array():
    field = mvoed.solve_diffusion(0.5, 0.5, cells=16, dt=1 / 512, final_time=0.0625)
    assert isinstance(field, np.ndarray)
    assert field.shape == (16, 16)
    assert np.allclose(field, field[::-1, :], atol=1e-12)
    assert field.min() >= 0.0
