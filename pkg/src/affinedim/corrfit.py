"""Pair-correlation scaling fits shared by the Grassmannian and spatial estimators.

The correlation integral C(r) is the fraction of unordered point pairs at
distance <= r; the dimension estimate is the least-squares slope of
log C(r) against log r over a logarithmic radius grid.  Pair distances are
consumed blockwise through a caller-supplied kernel so clouds never
materialize an n x n matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

DEGENERATE_DIAMETER = 1e-12
DEFAULT_N_RADII = 24
MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class CorrDimDiagnostics:
    radii: np.ndarray
    pair_counts: np.ndarray
    c_r: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    r_lo: float
    r_hi: float
    n_points: int
    n_pairs_total: int
    degenerate: bool
    nn_median: float
    diameter: float

    def to_record(self) -> dict:
        return {
            "estimate": self.slope,
            "r_squared": self.r_squared,
            "r_lo": self.r_lo,
            "r_hi": self.r_hi,
            "n_radii": int(len(self.radii)),
            "n_points": self.n_points,
            "degenerate": self.degenerate,
            "nn_median": self.nn_median,
            "diameter": self.diameter,
            "radii": [float(r) for r in self.radii],
            "c_r": [float(c) for c in self.c_r],
        }


def scan_extremes(n: int, dist_rows, block: int = 1024) -> tuple[np.ndarray, float]:
    """Nearest-neighbor distance per point and the cloud diameter.

    dist_rows(lo, hi) must return the (hi-lo) x n distance matrix of points
    lo:hi against the whole cloud.
    """
    nn = np.empty(n)
    diameter = 0.0
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        d = np.array(dist_rows(lo, hi))
        diameter = max(diameter, float(d.max()))
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        nn[lo:hi] = d.min(axis=1)
    return nn, diameter


def count_pairs(n: int, dist_rows, radii: np.ndarray, block: int = 1024) -> np.ndarray:
    """Unordered pair counts with distance <= r for each radius."""
    edges = np.concatenate([[0.0], np.asarray(radii, dtype=float), [np.inf]])
    ordered = np.zeros(len(radii), dtype=np.int64)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        d = np.array(dist_rows(lo, hi))
        # exclude self-pairs from every radius bucket
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        hist, _ = np.histogram(d, bins=edges)
        ordered += np.cumsum(hist[:-1])
    return ordered // 2


def fit_correlation_dimension(n: int, dist_rows, r_lo: float | None = None,
                              r_hi: float | None = None,
                              n_r: int = DEFAULT_N_RADII,
                              block: int = 1024,
                              nn_and_diameter: tuple[np.ndarray, float] | None = None,
                              pair_counter=None) -> tuple[float, CorrDimDiagnostics]:
    """Correlation-dimension estimate over a blockwise distance source.

    Default window: r_lo = 2 x median nearest-neighbor distance,
    r_hi = diameter / 4.  A degenerate cloud (diameter ~ 0) returns
    estimate 0 with the degenerate flag set.
    """
    if n < 2:
        raise ValueError("need at least two points")
    if nn_and_diameter is None:
        nn, diameter = scan_extremes(n, dist_rows, block=block)
    else:
        nn, diameter = nn_and_diameter
    nn_median = float(np.median(nn[np.isfinite(nn)]))

    if diameter <= DEGENERATE_DIAMETER:
        diag = CorrDimDiagnostics(
            radii=np.array([]), pair_counts=np.array([], dtype=np.int64),
            c_r=np.array([]), slope=0.0, intercept=0.0, r_squared=float("nan"),
            r_lo=0.0, r_hi=0.0, n_points=n, n_pairs_total=n * (n - 1) // 2,
            degenerate=True, nn_median=nn_median, diameter=diameter)
        return 0.0, diag

    if r_hi is None:
        r_hi = diameter / 4.0
    if r_lo is None:
        r_lo = 2.0 * nn_median
    if not 0 < r_lo < r_hi:
        # collapsed window (e.g. extremely concentrated cloud): fall back to
        # a fixed two-decade window below r_hi
        r_lo = r_hi / 100.0
    radii = np.geomspace(r_lo, r_hi, n_r)

    if pair_counter is None:
        counts = count_pairs(n, dist_rows, radii, block=block)
    else:
        counts = np.asarray(pair_counter(radii), dtype=np.int64)
    total = n * (n - 1) // 2
    c_r = counts / total

    keep = counts > 0
    if keep.sum() < MIN_FIT_POINTS:
        slope, intercept, r2 = 0.0, 0.0, float("nan")
        degenerate = True
    else:
        fit = stats.linregress(np.log(radii[keep]), np.log(c_r[keep]))
        slope, intercept, r2 = float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)
        degenerate = False

    diag = CorrDimDiagnostics(
        radii=radii, pair_counts=counts, c_r=c_r, slope=slope, intercept=intercept,
        r_squared=r2, r_lo=float(r_lo), r_hi=float(r_hi), n_points=n,
        n_pairs_total=total, degenerate=degenerate, nn_median=nn_median,
        diameter=float(diameter))
    return slope, diag
