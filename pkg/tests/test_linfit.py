import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_minimax_sine
from phasecell.errors import PreconditionError
from phasecell.linfit import (equioscillation_points, equioscillates, error_vs_lr,
                              max_admissible_deviation, minimax_line_data, minimax_line_sine,
                              required_lr)

# Frozen from oracles.brute_minimax_sine (0.001 deg theta grid, 1e-5 slope grid).
ORACLE = {
    90.0: (61.93843, 1.2029210),
    95.75: (62.58574, 1.4562055),
    120.0: (65.88394, 2.9428378),
    128.0: (67.19236, 3.6079120),
}


@pytest.mark.parametrize("lr", sorted(ORACLE))
def test_sine_fit_matches_frozen_oracle(lr):
    slope, err = ORACLE[lr]
    fit = minimax_line_sine(lr)
    assert fit.intercept == 0.0
    assert fit.max_err == pytest.approx(err, abs=0.005)
    assert fit.slope == pytest.approx(slope, abs=1e-3)


def test_sine_fit_small_range():
    fit = minimax_line_sine(1.0)
    assert fit.max_err < 1e-3
    assert fit.slope == pytest.approx(180 / np.pi, abs=1e-3)


@pytest.mark.parametrize("lr", [0.0, -5.0, 180.0, 200.0])
def test_sine_fit_range_guard(lr):
    with pytest.raises(PreconditionError):
        minimax_line_sine(lr)


@pytest.mark.parametrize("lr", [30.0, 90.0, 128.0, 170.0])
def test_sine_fit_equioscillates(lr):
    fit = minimax_line_sine(lr)
    th = np.linspace(-lr / 2, lr / 2, 200001)
    e = fit.slope * np.sin(np.radians(th)) - th
    assert np.max(np.abs(e)) == pytest.approx(fit.max_err, abs=1e-6)
    # -E at the range end, +E at an interior point (and mirrored by symmetry).
    assert e[-1] == pytest.approx(-fit.max_err, abs=0.01)
    interior = th[np.argmax(e[len(th) // 2:]) + len(th) // 2]
    assert 0 < interior < lr / 2
    assert np.max(e) == pytest.approx(fit.max_err, abs=0.01)


def test_sine_fit_random_oracle_equivalence():
    rng = np.random.default_rng(2024)
    for lr in rng.uniform(20.0, 170.0, size=10):
        _, err = brute_minimax_sine(float(lr), 40.0, 120.0)
        assert minimax_line_sine(float(lr)).max_err == pytest.approx(err, abs=0.005)


def test_data_fit_collinear():
    pts = [(v, 2 * v + 5) for v in np.linspace(-1, 1, 7)]
    fit = minimax_line_data(pts)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(5.0, abs=1e-12)
    assert fit.max_err == pytest.approx(0.0, abs=1e-12)


def test_data_fit_three_points():
    fit = minimax_line_data([(0, 0), (1, 0), (0.5, 1)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.intercept == pytest.approx(0.5)
    assert fit.max_err == pytest.approx(0.5)


def test_data_fit_on_sine_samples_matches_analytic():
    th = np.arange(-45.0, 45.0 + 1e-9, 0.1)
    fit = minimax_line_data(np.column_stack([np.sin(np.radians(th)), th]))
    ref = minimax_line_sine(90.0)
    assert abs(fit.max_err - ref.max_err) < 0.01
    assert fit.slope == pytest.approx(ref.slope, rel=1e-3)
    assert abs(fit.intercept) < 1e-6


@pytest.mark.parametrize("lr", [60.0, 120.0, 150.0])
def test_data_fit_converges_to_sine_fit(lr):
    th = np.arange(-lr / 2, lr / 2 + 1e-9, 0.05)
    fit = minimax_line_data(np.column_stack([np.sin(np.radians(th)), th]))
    assert abs(fit.max_err - minimax_line_sine(lr).max_err) < 0.01


@pytest.mark.parametrize("pts", [[(0, 1), (1, 2)], [(1, 0), (1, 1), (1, 2)], [(0, np.nan), (1, 1), (2, 2)]])
def test_data_fit_degenerate(pts):
    with pytest.raises(PreconditionError):
        minimax_line_data(pts)


def _brute_line(v, t):
    """O(n^3) reference: best line through each pair, widened to the remainder."""
    best = np.inf
    for i in range(len(v)):
        for j in range(len(v)):
            if v[j] == v[i]:
                continue
            with np.errstate(over="ignore", invalid="ignore"):
                s = (t[j] - t[i]) / (v[j] - v[i])
                r = t - s * v
            if not np.all(np.isfinite(r)):
                continue
            best = min(best, (r.max() - r.min()) / 2)
    return best


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-100, 100)), min_size=3, max_size=12)
       .filter(lambda p: len({round(x, 6) for x, _ in p}) >= 2))
def test_data_fit_is_optimal_and_certified(pts):
    arr = np.asarray(pts, dtype=float)
    fit = minimax_line_data(pts)
    resid = arr[:, 1] - fit(arr[:, 0])
    assert np.max(np.abs(resid)) == pytest.approx(fit.max_err, rel=1e-9, abs=1e-9)
    assert fit.max_err <= _brute_line(arr[:, 0], arr[:, 1]) * (1 + 1e-9) + 1e-9
    assert equioscillates(pts, fit)
    assert equioscillation_points(pts, fit) is not None


def test_certificate_accepts_vertical_pair():
    pts = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]
    fit = minimax_line_data(pts)
    assert fit.max_err == pytest.approx(0.5)
    assert equioscillates(pts, fit)


def test_certificate_rejects_suboptimal_line():
    th = np.arange(-45.0, 45.1, 1.0)
    pts = np.column_stack([np.sin(np.radians(th)), th])
    fit = minimax_line_data(pts)
    idx = equioscillation_points(pts, fit)
    assert idx is not None and len(idx) == 3
    worse = type(fit)(fit.slope * 1.01, fit.intercept, None)
    assert not equioscillates(pts, worse)


def test_error_vs_lr_curve():
    curve = error_vs_lr(60.0, 170.0, 1.0)
    assert curve.lr[0] == 60.0 and curve.lr[-1] == 170.0
    assert np.all(np.diff(curve.max_err) >= 0)
    assert curve.max_err[list(curve.lr).index(90.0)] == pytest.approx(ORACLE[90.0][1], abs=0.005)
    assert curve.max_err[list(curve.lr).index(128.0)] == pytest.approx(ORACLE[128.0][1], abs=0.005)
    with pytest.raises(PreconditionError):
        error_vs_lr(100.0, 90.0, 1.0)
    with pytest.raises(PreconditionError):
        error_vs_lr(10.0, 90.0, 0.0)


@pytest.mark.parametrize("dev,lr", [(0.0, 90.0), (30.0, 120.0), (-30.0, 120.0), (38.0, 128.0)])
def test_required_lr(dev, lr):
    assert required_lr(dev) == lr


def test_required_lr_guard():
    with pytest.raises(PreconditionError):
        required_lr(90.0)


def test_max_admissible_deviation():
    # 3 deg budget admits about 30 deg; 1.46 deg admits about 5.75 deg.
    assert max_admissible_deviation(3.0) == pytest.approx(30.74, abs=0.02)
    assert max_admissible_deviation(1.46) == pytest.approx(5.83, abs=0.02)
    floor = minimax_line_sine(90.0).max_err
    assert max_admissible_deviation(floor) == pytest.approx(0.0, abs=0.01)
    with pytest.raises(PreconditionError):
        max_admissible_deviation(floor - 0.01)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 85.0))
def test_required_lr_round_trip(dev):
    budget = minimax_line_sine(required_lr(dev)).max_err
    assert max_admissible_deviation(budget) == pytest.approx(dev, abs=0.02)
