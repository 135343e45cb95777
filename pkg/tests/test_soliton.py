import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bachflow.bachforms import SolitonSolution, closed_form_bach
from bachflow.nilalg import TriBracket
from bachflow.soliton import (
    PRINTED_LAMBDA,
    _diag_bach_grad,
    _equations,
    _jacobian,
    best_fit_residual,
    classify,
    newton,
    slice_scan,
    solve_soliton,
    verify_soliton_dynamics,
)

ROOT = SolitonSolution(1.0, 1.0, -7 / 12, -7 / 6)


@pytest.fixture(scope="module")
def report():
    return solve_soliton()


def test_unique_root(report):
    assert len(report.solutions) == 1
    s = report.solutions[0]
    assert abs(s.a - 1) < 1e-12 and abs(s.c - 1) < 1e-12
    assert abs(s.alpha + 7 / 12) < 1e-9 and abs(s.beta + 7 / 6) < 1e-9
    assert s.residual < 1e-12


def test_lambda_flagged(report):
    pc = report.paper_comparison
    assert pc["lambda_derived"] == pytest.approx(35 / 24)
    assert pc["lambda_printed"] == PRINTED_LAMBDA == -21 / 16
    assert pc["lambda_discrepancy"] is True


def test_report_serializes(report):
    data = json.loads(json.dumps(report.to_json()))
    assert data["grid_stats"]["starts"] == 400
    assert sum(data["grid_stats"]["outcomes"].values()) == 400
    assert data["classification"]["label"] == "expanding"
    assert "1.458333" in report.table() and "MISMATCH" in report.table()


def test_slice_scan_no_other_minimum(report):
    scan = report.slice_scan
    assert scan["min_residual"] < 1e-12
    assert scan["argmin_a_over_c"] == pytest.approx(1.0)
    assert scan["min_residual_away_from_a_eq_c"] > 1e-2


def test_best_fit_at_1_2():
    res, _, _ = best_fit_residual(1.0, 2.0)
    assert res > 1e-2


def test_best_fit_at_root():
    res, al, be = best_fit_residual(1.0, 1.0)
    assert res < 1e-12 and al == pytest.approx(-7 / 12) and be == pytest.approx(-7 / 6)


def test_best_fit_is_minimax():
    # perturbing the optimum never lowers the max residual
    bdiag = np.array([closed_form_bach(TriBracket(1, 0, 2)).matrix()[i, i] for i in range(4)])
    res, al, be = best_fit_residual(1.0, 2.0)
    rng = np.random.default_rng(1)
    for _ in range(200):
        da, db = rng.normal(0, 0.1, 2)
        s = SolitonSolution(1.0, 2.0, al + da, be + db)
        assert s.residual >= res - 1e-12
    assert np.abs(bdiag).max() > res


def test_jacobian_matches_differences():
    x = np.array([0.8, 1.3, -0.2, 0.4])
    J = _jacobian(x)
    h = 1e-6
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fd = (_equations(x + e) - _equations(x - e)) / (2 * h)
        assert np.abs(fd - J[:, k]).max() < 1e-6
    assert _diag_bach_grad(1.0, 1.0).shape == (3, 2)


def test_newton_statuses():
    x, status = newton([1.1, 0.9, -0.5, -1.0])
    assert status == "converged" and np.allclose(x, [1, 1, -7 / 12, -7 / 6])
    assert newton([0.0, 0.0, 0.0, 0.0])[1] in {"singular", "diverged", "left O", "no convergence"}


def test_region_must_be_positive():
    with pytest.raises(ValueError):
        solve_soliton(region=((0.0, 1.0), (0.1, 1.0)), starts=4)


@given(st.floats(0.2, 5.0))
def test_scaling_covariance(k):
    s = ROOT.scaled(k)
    assert s.residual < 1e-10 * k**4
    assert s.lam == pytest.approx(k**4 * ROOT.lam)


def test_classify():
    assert classify(35 / 24)["label"] == "expanding"
    assert classify(-1.0)["label"] == "shrinking"
    assert classify(0.0)["label"] == "steady"
    assert classify(float("nan"))["label"] == "none"


class TestDynamics:
    def test_soliton_stays_on_ray(self):
        out = verify_soliton_dynamics(ROOT, 50)
        assert out["max_ratio_drift"] < 1e-8
        assert out["max_abs_b"] < 1e-14
        assert out["ray_deviation"] < 1e-8

    def test_every_root_is_dynamic_soliton(self, report):
        for s in report.solutions:
            assert verify_soliton_dynamics(s, 20)["ray_deviation"] < 1e-8

    def test_heisenberg_full_flow(self):
        out = verify_soliton_dynamics(TriBracket(1, 0, 0), 10, full=True)
        assert out["ray_deviation"] < 1e-8
        assert out["off_structure_max"] < 1e-12

    def test_non_soliton_drifts(self):
        out = verify_soliton_dynamics(TriBracket(1, 0, 2), 20)
        assert out["ratio_monotone"]
        assert out["final_ratio"] > 0.5 and abs(out["final_ratio"] - 1) < 0.5
        assert out["ray_deviation"] > 1e-2

    def test_rejects_non_soliton_candidate(self):
        with pytest.raises(ValueError):
            verify_soliton_dynamics(SolitonSolution(1, 2, 0, 0), 1)


def test_gauge_circle_point():
    assert math.hypot(ROOT.a, ROOT.c) ** 2 == pytest.approx(2)
    assert slice_scan(0.2)["n_points"] == 7
