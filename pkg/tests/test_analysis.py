"""Log-log fitting and the chi-square landscape."""

import math
import warnings

import numpy as np
import pytest

from spinprobe.analysis import (
    LN10,
    LogLogFit,
    chi2_map,
    confidence_ellipse_area,
    fit_loglog,
    fit_loglog_arrays,
    polyline_area,
)
from spinprobe.experiment import SensitivityPoint


def make_point(t, value, err):
    return SensitivityPoint(
        observation_time=t, target="frequency", controlled=True,
        inverse_sensitivity=value, std_error=err, slope=1.0, slope_err=0.1,
        significant=True, halfwidth=1.0, scan_points=7, n_shots=100,
        replicates=22, replicates_used=22, failures=0,
    )


def synthetic(seed, slope=-1.5, amp=2.0, rel_err=0.04, n=10):
    rng = np.random.default_rng(seed)
    t = np.geomspace(0.2, 5.0, n)
    v = amp * t**slope
    e = rel_err * v
    sigma = e / (LN10 * v)
    noisy = v * 10 ** rng.normal(0.0, sigma)
    return t, noisy, e


def test_exact_power_law():
    t = np.geomspace(1e-5, 1e-4, 8)
    v = 3.7 * t**-2.0
    fit = fit_loglog_arrays(t, v, 0.01 * v)
    assert fit.slope == pytest.approx(-2.0, abs=1e-6)
    assert fit.intercept == pytest.approx(math.log10(3.7), abs=1e-6)
    assert fit.chi2_reduced == pytest.approx(0.0, abs=1e-12)
    assert fit.dof == 6
    assert fit.flagged == ()


def test_weighted_residual_orthogonality():
    t, v, e = synthetic(3)
    fit = fit_loglog_arrays(t, v, e)
    x = np.log10(t)
    y = np.log10(v)
    w = (LN10 * v / e) ** 2
    r = y - fit.slope * x - fit.intercept
    scale = float(np.sum(w * x * x))
    assert abs(np.sum(w * r * x)) / scale < 1e-10
    assert abs(np.sum(w * r)) / float(np.sum(w)) < 1e-10


def test_covariance_matches_normal_equations():
    t, v, e = synthetic(4)
    fit = fit_loglog_arrays(t, v, e)
    x = np.log10(t)
    w = (LN10 * v / e) ** 2
    sw, sx, sxx = np.sum(w), np.sum(w * x), np.sum(w * x * x)
    det = sw * sxx - sx * sx
    assert fit.covariance[0, 0] == pytest.approx(sw / det, rel=1e-12)
    assert fit.covariance[1, 1] == pytest.approx(sxx / det, rel=1e-12)
    assert fit.covariance[0, 1] == pytest.approx(-sx / det, rel=1e-12)


def test_fit_from_points_equals_arrays():
    t, v, e = synthetic(5)
    direct = fit_loglog_arrays(t, v, e)
    via_points = fit_loglog([make_point(*z) for z in zip(t, v, e)])
    assert via_points.slope == direct.slope
    assert via_points.intercept == direct.intercept


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_loglog_arrays([1.0, 2.0], [1.0, 2.0], [0.1, 0.1])
    with pytest.raises(ValueError):
        fit_loglog_arrays([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [0.1, 0.1, 0.1])
    with pytest.raises(ValueError):
        fit_loglog_arrays([1.0, 2.0, 3.0], [1.0, -2.0, 3.0], [0.1, 0.1, 0.1])
    with pytest.raises(ValueError):
        fit_loglog_arrays([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.1, 0.0, 0.1])


def test_large_relative_errors_flagged():
    t = np.array([1.0, 2.0, 4.0, 8.0])
    v = t**-1.0
    e = np.array([0.1, 0.6, 0.1, 0.1]) * v
    fit = fit_loglog_arrays(t, v, e)
    assert fit.flagged == (1,)


def test_affine_invariance():
    t, v, e = synthetic(6)
    a = fit_loglog_arrays(t, v, e)
    b = fit_loglog_arrays(7.3 * t, v, e)
    assert b.slope == pytest.approx(a.slope, abs=1e-12)
    assert b.intercept != pytest.approx(a.intercept, abs=1e-3)


def test_loglogfit_validation():
    with pytest.raises(ValueError):
        LogLogFit(-2.0, 0.0, np.array([[1.0, 0.5], [0.4, 1.0]]), 1.0, 5)
    with pytest.raises(ValueError):
        LogLogFit(-2.0, 0.0, np.eye(2), -1.0, 5)
    with pytest.raises(ValueError):
        LogLogFit(-2.0, 0.0, np.eye(2), 1.0, 0)


def test_chi2_map_minimum_matches_fit():
    t, v, e = synthetic(7)
    points = [make_point(*z) for z in zip(t, v, e)]
    fit = fit_loglog(points)
    sr = (fit.slope - 5 * fit.slope_err, fit.slope + 5 * fit.slope_err)
    br = (fit.intercept - 5 * fit.intercept_err, fit.intercept + 5 * fit.intercept_err)
    cmap = chi2_map(points, sr, br, 201)
    i, j = cmap.min_index
    assert cmap.slope_axis[i] == pytest.approx(fit.slope, abs=(sr[1] - sr[0]) / 200)
    assert cmap.intercept_axis[j] == pytest.approx(fit.intercept, abs=(br[1] - br[0]) / 200)
    assert cmap.chi2_values[i, j] == pytest.approx(fit.chi2_reduced, abs=1e-3)


def test_chi2_contour_areas_match_covariance_ellipse():
    t, v, e = synthetic(11)
    points = [make_point(*z) for z in zip(t, v, e)]
    fit = fit_loglog(points)
    sr = (fit.slope - 5 * fit.slope_err, fit.slope + 5 * fit.slope_err)
    br = (fit.intercept - 5 * fit.intercept_err, fit.intercept + 5 * fit.intercept_err)
    cmap = chi2_map(points, sr, br, 201)
    levels = [level for level, _ in cmap.contours]
    assert levels == [0.90, 0.95]
    for level, poly in cmap.contours:
        assert poly.shape[0] > 20
        area = polyline_area(poly)
        assert area == pytest.approx(confidence_ellipse_area(fit, level), rel=0.05)


def test_chi2_map_warns_on_boundary():
    t, v, e = synthetic(8)
    points = [make_point(*z) for z in zip(t, v, e)]
    fit = fit_loglog(points)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        chi2_map(points, (fit.slope + 1.0, fit.slope + 2.0), (-10.0, 10.0), 21)
    assert len(caught) == 1
    assert "boundary" in str(caught[0].message)


def test_confidence_ellipse_area_rejects_unknown_level():
    t, v, e = synthetic(9)
    fit = fit_loglog_arrays(t, v, e)
    with pytest.raises(ValueError):
        confidence_ellipse_area(fit, 0.5)
