"""Power-law extraction from sensitivity datasets.

Scaling exponents are read off as straight-line fits in log-log space,
weighted by the per-point standard errors propagated through the log10
transform.  Because the model is linear in its two parameters the
chi-square surface over (slope, intercept) is an exact paraboloid, so the
weighted normal equations give the global optimum and the joint confidence
regions are ellipses.  ``chi2_map`` evaluates that surface on a grid anyway
and traces the 90% and 95% contours from the gridded values, which keeps
the map honest as an independent check on the closed-form fit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .experiment import SensitivityPoint

LN10 = math.log(10.0)

# Delta chi-square thresholds for joint confidence regions of two
# parameters: P(chi2_2 <= 4.61) = 0.90, P(chi2_2 <= 5.99) = 0.95.
DELTA_CHI2_TWO_PARAM = {0.90: 4.605170185988092, 0.95: 5.991464547107979}

# Points whose relative error exceeds this are kept in the fit but flagged,
# since the first-order log-transform of their error bar is unreliable.
RELATIVE_ERROR_FLAG = 0.5


@dataclass(frozen=True, eq=False)
class LogLogFit:
    """Weighted straight-line fit y = intercept + slope * x in log10 space.

    ``intercept`` is the log10 of the fitted quantity at T = 1 s.
    ``covariance`` is the 2x2 parameter covariance in (slope, intercept)
    order, derived from the supplied error bars (not rescaled by chi2).
    ``flagged`` lists indices of input points with relative error above
    RELATIVE_ERROR_FLAG.
    """

    slope: float
    intercept: float
    covariance: np.ndarray
    chi2_reduced: float
    dof: int
    flagged: tuple[int, ...] = field(default=())

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2):
            raise ValueError("covariance must be a 2x2 matrix")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, abs(cov).max())):
            raise ValueError("covariance must be symmetric")
        if cov[0, 0] < 0.0 or cov[1, 1] < 0.0 or np.linalg.det(cov) < -1e-300:
            raise ValueError("covariance must be positive semidefinite")
        if self.dof < 1:
            raise ValueError("need at least one degree of freedom")
        if self.chi2_reduced < 0.0:
            raise ValueError("chi2_reduced must be nonnegative")
        object.__setattr__(self, "covariance", cov)

    @property
    def slope_err(self) -> float:
        return float(math.sqrt(self.covariance[0, 0]))

    @property
    def intercept_err(self) -> float:
        return float(math.sqrt(self.covariance[1, 1]))


def fit_loglog_arrays(times, values, errors) -> LogLogFit:
    """Weighted least squares of log10(values) against log10(times).

    ``errors`` are one-sigma uncertainties on ``values``; they enter the fit
    as sigma_y = errors / (ln10 * values) by the first-order delta method.
    Raises ValueError on fewer than 3 points, nonpositive values or errors,
    or a degenerate (constant) abscissa.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.shape != e.shape:
        raise ValueError("times, values and errors must be 1-d arrays of equal length")
    if t.size < 3:
        raise ValueError("need at least 3 points for a two-parameter fit")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)) or not np.all(np.isfinite(e)):
        raise ValueError("fit inputs must be finite")
    if np.any(t <= 0.0) or np.any(v <= 0.0):
        raise ValueError("times and values must be positive for a log-log fit")
    if np.any(e <= 0.0):
        raise ValueError("errors must be positive (zero weights are not allowed)")

    x = np.log10(t)
    y = np.log10(v)
    sigma = e / (LN10 * v)
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate abscissa: all times are equal")
    flagged = tuple(int(i) for i in np.flatnonzero(e / v > RELATIVE_ERROR_FLAG))

    w = 1.0 / sigma**2
    sw = float(np.sum(w))
    sx = float(np.sum(w * x))
    sxx = float(np.sum(w * x * x))
    sy = float(np.sum(w * y))
    sxy = float(np.sum(w * x * y))
    det = sw * sxx - sx * sx
    if det <= 0.0:
        raise ValueError("singular normal equations")

    slope = (sw * sxy - sx * sy) / det
    intercept = (sxx * sy - sx * sxy) / det
    cov = np.array([[sw, -sx], [-sx, sxx]]) / det

    resid = y - slope * x - intercept
    chi2 = float(np.sum(w * resid**2))
    dof = t.size - 2
    return LogLogFit(slope, intercept, cov, chi2 / dof, dof, flagged)


def fit_loglog(points: Iterable[SensitivityPoint]) -> LogLogFit:
    """Fit a power law to a sensitivity dataset.

    Uses (observation_time, inverse_sensitivity, std_error) of each point.
    All points must carry a positive value and a positive error; filter out
    failed (NaN) points before calling.
    """
    pts = list(points)
    times = [p.observation_time for p in pts]
    values = [p.inverse_sensitivity for p in pts]
    errors = [p.std_error for p in pts]
    return fit_loglog_arrays(times, values, errors)


@dataclass(frozen=True, eq=False)
class Chi2Map:
    """Reduced chi-square surface over (slope, intercept) with contours.

    ``chi2_values[i, j]`` is chi2_reduced at slope_axis[i], intercept_axis[j].
    ``contours`` holds (confidence_level, polyline) pairs, each polyline a
    closed (K, 2) array of (slope, intercept) vertices traced from the grid.
    """

    slope_axis: np.ndarray
    intercept_axis: np.ndarray
    chi2_values: np.ndarray
    contours: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        s = np.asarray(self.slope_axis, dtype=float)
        b = np.asarray(self.intercept_axis, dtype=float)
        c = np.asarray(self.chi2_values, dtype=float)
        if c.shape != (s.size, b.size):
            raise ValueError("chi2_values shape must match the axes")
        if np.any(c < 0.0):
            raise ValueError("chi2 values must be nonnegative")
        object.__setattr__(self, "slope_axis", s)
        object.__setattr__(self, "intercept_axis", b)
        object.__setattr__(self, "chi2_values", c)

    @property
    def min_index(self) -> tuple[int, int]:
        flat = int(np.argmin(self.chi2_values))
        return tuple(int(k) for k in np.unravel_index(flat, self.chi2_values.shape))


def _trace_level(slope_axis, intercept_axis, chi2, level, center):
    """Collect the level crossing points on grid edges, sorted by angle.

    The chi-square surface of a linear model is convex, so its level sets
    are ellipses and ordering the edge crossings by angle around the
    minimum yields a simple closed polyline.
    """
    pts = []
    # crossings along rows (varying intercept)
    below = chi2 <= level
    for i in range(chi2.shape[0]):
        for j in range(chi2.shape[1] - 1):
            if below[i, j] != below[i, j + 1]:
                f = (level - chi2[i, j]) / (chi2[i, j + 1] - chi2[i, j])
                b = intercept_axis[j] + f * (intercept_axis[j + 1] - intercept_axis[j])
                pts.append((slope_axis[i], b))
    # crossings along columns (varying slope)
    for j in range(chi2.shape[1]):
        for i in range(chi2.shape[0] - 1):
            if below[i, j] != below[i + 1, j]:
                f = (level - chi2[i, j]) / (chi2[i + 1, j] - chi2[i, j])
                s = slope_axis[i] + f * (slope_axis[i + 1] - slope_axis[i])
                pts.append((s, intercept_axis[j]))
    if not pts:
        return np.empty((0, 2))
    arr = np.asarray(pts)
    ang = np.arctan2(arr[:, 1] - center[1], arr[:, 0] - center[0])
    arr = arr[np.argsort(ang)]
    return np.vstack([arr, arr[:1]])


def chi2_map(
    points: Sequence[SensitivityPoint],
    slope_range: tuple[float, float],
    intercept_range: tuple[float, float],
    resolution: int = 101,
) -> Chi2Map:
    """Evaluate reduced chi-square on a (slope, intercept) grid.

    Contours are emitted at the delta-chi-square thresholds for 90% and 95%
    joint confidence of the two parameters (4.61 and 5.99 above the grid
    minimum, divided by the fit's degrees of freedom since the map stores
    reduced values).  Warns if the best-fit optimum lies outside or on the
    boundary of the requested ranges.
    """
    if resolution < 3:
        raise ValueError("resolution must be at least 3")
    fit = fit_loglog(points)

    pts = list(points)
    t = np.array([p.observation_time for p in pts])
    v = np.array([p.inverse_sensitivity for p in pts])
    e = np.array([p.std_error for p in pts])
    x = np.log10(t)
    y = np.log10(v)
    w = (LN10 * v / e) ** 2

    slope_axis = np.linspace(slope_range[0], slope_range[1], resolution)
    intercept_axis = np.linspace(intercept_range[0], intercept_range[1], resolution)

    lo_s, hi_s = min(slope_range), max(slope_range)
    lo_b, hi_b = min(intercept_range), max(intercept_range)
    ds = (hi_s - lo_s) / (resolution - 1)
    db = (hi_b - lo_b) / (resolution - 1)
    if not (lo_s + ds < fit.slope < hi_s - ds) or not (lo_b + db < fit.intercept < hi_b - db):
        warnings.warn(
            "fit optimum lies on or outside the chi2_map boundary; "
            "widen the requested ranges",
            stacklevel=2,
        )

    mm, bb = np.meshgrid(slope_axis, intercept_axis, indexing="ij")
    resid2 = np.zeros_like(mm)
    for xi, yi, wi in zip(x, y, w):
        resid2 += wi * (yi - mm * xi - bb) ** 2
    chi2_red = resid2 / fit.dof

    cmin = float(chi2_red.min())
    i0, j0 = np.unravel_index(int(np.argmin(chi2_red)), chi2_red.shape)
    center = (slope_axis[i0], intercept_axis[j0])
    contours = []
    for conf in (0.90, 0.95):
        level = cmin + DELTA_CHI2_TWO_PARAM[conf] / fit.dof
        poly = _trace_level(slope_axis, intercept_axis, chi2_red, level, center)
        contours.append((conf, poly))
    return Chi2Map(slope_axis, intercept_axis, chi2_red, tuple(contours))


def confidence_ellipse_area(fit: LogLogFit, confidence: float = 0.95) -> float:
    """Area of the joint confidence ellipse in the (slope, intercept) plane.

    For a quadratic chi-square surface the region delta_chi2 <= c is an
    ellipse of area pi * c * sqrt(det covariance).
    """
    if confidence not in DELTA_CHI2_TWO_PARAM:
        raise ValueError(f"confidence must be one of {sorted(DELTA_CHI2_TWO_PARAM)}")
    c = DELTA_CHI2_TWO_PARAM[confidence]
    det = float(np.linalg.det(fit.covariance))
    return math.pi * c * math.sqrt(max(det, 0.0))


def polyline_area(poly: np.ndarray) -> float:
    """Shoelace area of a closed polyline given as an (K, 2) vertex array."""
    p = np.asarray(poly, dtype=float)
    if p.shape[0] < 4:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])))
