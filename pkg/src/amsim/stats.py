"""Small statistical utilities: unimodality (dip) testing, least-squares
fitting, and histogram binning.

The dip statistic implemented here measures the distance from the empirical
distribution to the nearest unimodal distribution through a convex-hull
formulation.  Write L_i = i/n and U_i = (i+1)/n for the lower/upper values
of the empirical cdf at the i-th order statistic.  A cdf within uniform
distance d of the sample must pass through the band [U_i - d, L_i + d] at
every x_i; a convex function threads such bands on a left region exactly
when the greatest convex minorant of the upper band stays above the lower
band, and symmetrically for a concave function on a right region.  Scanning
the mode location k therefore gives

    dip = (1/2) min_k max( max_{i<=k} U_i - gcm_k(x_i),
                           max_{i>=k} lcm_k(x_i) - L_i )

with gcm_k the greatest convex minorant of {(x_i, L_i)}_{i<=k} and lcm_k
the least concave majorant of {(x_i, U_i)}_{i>=k}.  On an equispaced grid
this evaluates to the minimal attainable value 1/(2n); for two points {0, 1}
it gives 1/4.  P-values are calibrated by Monte-Carlo sampling of the same
statistic under the uniform null.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidArgumentError


@njit(cache=True, nogil=True)
def _hull_deviation(x, lo, hi, start, stop, sign):
    """Deviation of one side of the band from the hull of the other.

    With sign=+1: greatest convex minorant of (x, lo) over [start, stop),
    returning max(hi - hull).  With sign=-1 the same code runs on negated
    values, which computes the least concave majorant of (x, hi) and
    max(hull - lo).
    """
    m = stop - start
    stack = np.empty(m, np.int64)
    top = 0
    for idx in range(start, stop):
        if sign > 0:
            y = lo[idx]
        else:
            y = -hi[idx]
        # pop while the new point lies below the last hull edge (keeps the
        # hull convex); cross-multiplied slope test, robust to tiny dx
        while top >= 2:
            i1 = stack[top - 2]
            i2 = stack[top - 1]
            if sign > 0:
                y1, y2 = lo[i1], lo[i2]
            else:
                y1, y2 = -hi[i1], -hi[i2]
            if (y2 - y1) * (x[idx] - x[i2]) <= (y - y2) * (x[i2] - x[i1]):
                break
            top -= 1
        stack[top] = idx
        top += 1
    best = 0.0
    seg = 0
    for idx in range(start, stop):
        while seg + 1 < top and stack[seg + 1] < idx:
            seg += 1
        i1 = stack[seg]
        if seg + 1 < top:
            i2 = stack[seg + 1]
        else:
            i2 = i1
        if sign > 0:
            y1 = lo[i1]
            y2 = lo[i2]
        else:
            y1 = -hi[i1]
            y2 = -hi[i2]
        if i2 == i1 or x[i2] == x[i1]:
            hull = y1
        else:
            hull = y1 + (y2 - y1) * (x[idx] - x[i1]) / (x[i2] - x[i1])
        if sign > 0:
            dev = hi[idx] - hull
        else:
            # hull holds negated values; the concave majorant is -hull
            dev = -hull - lo[idx]
        if dev > best:
            best = dev
    return best


@njit(cache=True, nogil=True)
def _dip_sorted(x):
    n = x.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lo[i] = i / n
        hi[i] = (i + 1.0) / n
    best = 1e300
    for k in range(n):
        left = _hull_deviation(x, lo, hi, 0, k + 1, 1)
        if left >= best:
            continue
        right = _hull_deviation(x, lo, hi, k, n, -1)
        d = left if left > right else right
        if d < best:
            best = d
    return 0.5 * best


def dip_statistic(sample) -> float:
    """Departure of a one-dimensional sample from unimodality (see module doc).

    Lies in [1/(2n), 1/4]; larger values indicate stronger multimodality.
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n < 2:
        raise InvalidArgumentError("dip statistic needs at least 2 observations")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("sample contains non-finite values")
    if x[-1] == x[0]:
        return 0.5 / n
    if np.any(np.diff(x) == 0.0):
        # break exact ties deterministically; the offset is far below any
        # resolvable structure in the sample
        x = x + np.linspace(0.0, (x[-1] - x[0]) * 1e-12, n)
    return float(_dip_sorted(x))


@dataclass(frozen=True)
class DipTest:
    statistic: float
    p_value: float
    n_boot: int


def dip_test(sample, n_boot: int = 200, seed: int = 0) -> DipTest:
    """Monte-Carlo dip test of unimodality against the uniform null.

    The p-value is (1 + #{null dips >= observed}) / (n_boot + 1).
    """
    if n_boot < 1:
        raise InvalidArgumentError("n_boot must be positive")
    d = dip_statistic(sample)
    n = len(np.asarray(sample).ravel())
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(n_boot):
        if dip_statistic(rng.random(n)) >= d:
            exceed += 1
    return DipTest(statistic=d, p_value=(1 + exceed) / (n_boot + 1), n_boot=n_boot)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares y ~ slope*x + intercept with R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise InvalidArgumentError("linear_fit needs two equal-length 1-d arrays, n >= 2")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return LinearFit(float(slope), float(intercept), r2)


def freedman_diaconis_bins(data) -> int:
    """Histogram bin count by the Freedman-Diaconis rule (Sturges fallback)."""
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        return 1
    span = float(x.max() - x.min())
    if span == 0:
        return 1
    q75, q25 = np.percentile(x, [75, 25])
    width = 2.0 * (q75 - q25) / x.size ** (1.0 / 3.0)
    if width <= 0:
        return int(np.ceil(np.log2(x.size) + 1))
    return max(1, int(np.ceil(span / width)))
