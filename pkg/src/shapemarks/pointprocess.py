"""Marked point patterns and the mark-weighted K function estimator.

A pattern is a rectangular observation window, point locations, and one SRV
curve mark per point.  The second-order statistic accumulates, over all ordered
pairs of distinct points within distance r, an edge-corrected and
intensity-weighted test-function value of the two marks; the test function is
half the squared SRV distance of the template-aligned marks, and the dispersion
of the aligned sample normalizes the statistic so random labeling yields
pi * r^2.  With the test function identically one the same machinery yields the
inhomogeneous K function of the ground process.

Conventions: the kernel intensity estimate is leave-one-out with a per-point
mass correction (every kernel is divided by its own retained mass inside the
window); pair test-function values reuse the single alignment of each mark to
the Karcher-mean template rather than a fresh pairwise registration; bin sums
use exact (compensated) summation so results are independent of point order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .curves import TWO_PI, Curve, SrvCurve, require_common_grid
from .errors import DegenerateInputError, InvalidInputError
from .karcher import KarcherResult, karcher_mean
from .registration import SymmetryGroup

CORRECTIONS = ("translational", "minus", "isotropic")
DEFAULT_CORRECTION = "translational"
GROUND = "ground"

#: relative floor applied to kernel intensity estimates
_INTENSITY_FLOOR_REL = 1e-8

#: relative threshold below which the mark dispersion counts as degenerate
_DISPERSION_RTOL = 1e-12

_BANDWIDTH_GRID_SIZE = 32


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangular observation window."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidInputError("window must have positive side lengths")

    @property
    def sides(self) -> tuple[float, float]:
        return (self.xmax - self.xmin, self.ymax - self.ymin)

    @property
    def area(self) -> float:
        sx, sy = self.sides
        return sx * sy

    @property
    def diameter(self) -> float:
        return math.hypot(*self.sides)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (
            (pts[:, 0] >= self.xmin)
            & (pts[:, 0] <= self.xmax)
            & (pts[:, 1] >= self.ymin)
            & (pts[:, 1] <= self.ymax)
        )


@dataclass
class MarkedPattern:
    """Point locations in a window with one SRV curve mark per point.

    ``mark_curves`` optionally keeps the raw vertex curves the marks came from,
    for file round trips and rendering; analysis only uses the SRVs.
    """

    window: Window
    locations: np.ndarray
    marks: list[SrvCurve]
    mark_curves: list[Curve] | None = None

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise InvalidInputError(f"locations must be (N, 2), got {loc.shape}")
        if loc.shape[0] < 1:
            raise InvalidInputError("a pattern needs at least one point")
        if loc.shape[0] != len(self.marks):
            raise InvalidInputError(
                f"{loc.shape[0]} locations but {len(self.marks)} marks"
            )
        if not np.all(self.window.contains(loc)):
            raise InvalidInputError("all locations must lie inside the window")
        require_common_grid(*self.marks)
        if self.mark_curves is not None and len(self.mark_curves) != len(self.marks):
            raise InvalidInputError("mark_curves length does not match marks")
        self.locations = loc

    @property
    def n_points(self) -> int:
        return self.locations.shape[0]

    @property
    def grid_size(self) -> int:
        return self.marks[0].grid_size


@dataclass
class KEstimate:
    r_grid: np.ndarray
    k_values: np.ndarray
    l_values: np.ndarray
    c_f: float
    correction: str
    group: str
    bandwidth: float


def default_r_grid(window: Window, r_max: float | None = None, r_steps: int = 50) -> np.ndarray:
    """Equally spaced radii covering (0, r_max]; r_max defaults to a quarter of
    the shorter window side."""
    if r_steps < 1:
        raise InvalidInputError("r_steps must be positive")
    side = min(window.sides)
    if r_max is None:
        r_max = side / 4.0
    if not 0.0 < r_max <= side / 2.0:
        raise InvalidInputError(
            f"r_max must lie in (0, {side / 2.0}] for this window, got {r_max}"
        )
    return np.linspace(0.0, r_max, r_steps + 1)[1:]


def _check_r_grid(window: Window, r_grid: np.ndarray) -> np.ndarray:
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise InvalidInputError("r_grid must be a non-empty 1-d array")
    if np.any(np.diff(r) <= 0.0) or r[0] <= 0.0:
        raise InvalidInputError("r_grid must be strictly increasing and positive")
    if r[-1] > min(window.sides) / 2.0:
        raise InvalidInputError("max radius exceeds half the shorter window side")
    return r


# ---------------------------------------------------------------------------
# intensity estimation


def _squared_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sum(diff**2, axis=2)


def _kernel_mass(points: np.ndarray, window: Window, bandwidth: float) -> np.ndarray:
    # mass of a Gaussian kernel centered at each point retained inside the window
    px, py = points[:, 0], points[:, 1]
    mx = ndtr((window.xmax - px) / bandwidth) - ndtr((window.xmin - px) / bandwidth)
    my = ndtr((window.ymax - py) / bandwidth) - ndtr((window.ymin - py) / bandwidth)
    return mx * my


def _intensity_from_d2(d2: np.ndarray, points: np.ndarray, window: Window,
                       bandwidth: float) -> np.ndarray:
    n = points.shape[0]
    kern = np.exp(-d2 / (2.0 * bandwidth**2)) / (2.0 * np.pi * bandwidth**2)
    np.fill_diagonal(kern, 0.0)
    mass = _kernel_mass(points, window, bandwidth)
    rho = (kern / mass[None, :]).sum(axis=1)
    floor = _INTENSITY_FLOOR_REL * n / window.area
    return np.maximum(rho, floor)


def kernel_intensity(pattern: MarkedPattern, bandwidth: float) -> np.ndarray:
    """Leave-one-out Gaussian kernel intensity of the ground process at the
    data points, edge corrected by each kernel's retained mass in the window."""
    if bandwidth <= 0.0:
        raise InvalidInputError("bandwidth must be positive")
    if pattern.n_points < 2:
        raise InvalidInputError("intensity estimation needs at least 2 points")
    d2 = _squared_distances(pattern.locations)
    return _intensity_from_d2(d2, pattern.locations, pattern.window, bandwidth)


def select_bandwidth(pattern: MarkedPattern) -> float:
    """Bandwidth minimizing the squared gap between the summed reciprocal
    intensities and the window area, over a logarithmic candidate grid.

    At the optimum the reciprocal intensities add up to roughly the window
    area, which calibrates the intensity-weighted pair sums of the K
    estimators.  Ties resolve to the smallest bandwidth.
    """
    if pattern.n_points < 2:
        raise InvalidInputError("bandwidth selection needs at least 2 points")
    diam = pattern.window.diameter
    candidates = np.geomspace(diam / 200.0, diam / 4.0, _BANDWIDTH_GRID_SIZE)
    d2 = _squared_distances(pattern.locations)
    area = pattern.window.area
    best_h = candidates[0]
    best_crit = np.inf
    for h in candidates:
        rho = _intensity_from_d2(d2, pattern.locations, pattern.window, h)
        crit = (float(np.sum(1.0 / rho)) - area) ** 2
        if crit < best_crit:
            best_crit = crit
            best_h = h
    return float(best_h)


# ---------------------------------------------------------------------------
# edge corrections


def _translational_weights(dx: np.ndarray, dy: np.ndarray, window: Window) -> np.ndarray:
    sx, sy = window.sides
    adx, ady = np.abs(dx), np.abs(dy)
    if np.any(adx >= sx) or np.any(ady >= sy):
        raise InvalidInputError(
            "translational correction undefined: pair separation reaches a window side"
        )
    return window.area / ((sx - adx) * (sy - ady))


def _minus_weights(x: np.ndarray, r: np.ndarray, window: Window) -> np.ndarray:
    sx, sy = window.sides
    inner_x = sx - 2.0 * r
    inner_y = sy - 2.0 * r
    with np.errstate(divide="ignore", invalid="ignore"):
        area = np.where((inner_x > 0.0) & (inner_y > 0.0), inner_x * inner_y, np.nan)
    inside = (
        (x[:, 0] >= window.xmin + r)
        & (x[:, 0] <= window.xmax - r)
        & (x[:, 1] >= window.ymin + r)
        & (x[:, 1] <= window.ymax - r)
    )
    w = np.where(inside & np.isfinite(area), window.area / area, 0.0)
    return w


def _isotropic_weights(x: np.ndarray, r: np.ndarray, window: Window) -> np.ndarray:
    # exterior angle of the circle of radius r around x that leaves the window:
    # 2*arccos(d/r) per crossed side, overlaps at a crossed corner removed
    r = np.asarray(r, dtype=float)
    d_sides = np.stack(
        [
            x[:, 0] - window.xmin,  # W
            x[:, 1] - window.ymin,  # S
            window.xmax - x[:, 0],  # E
            window.ymax - x[:, 1],  # N
        ]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.clip(np.where(r > 0.0, d_sides / r, 2.0), 0.0, None)
    ang = np.arccos(np.clip(ratio, -1.0, 1.0))
    crossed = ratio < 1.0
    exterior = np.sum(np.where(crossed, 2.0 * ang, 0.0), axis=0)
    for a, b in ((0, 1), (1, 2), (2, 3), (3, 0)):  # adjacent side pairs: corners
        corner_in = (d_sides[a] ** 2 + d_sides[b] ** 2) < r**2
        overlap = ang[a] + ang[b] - 0.5 * np.pi
        exterior = exterior - np.where(corner_in, overlap, 0.0)
    interior = 2.0 * np.pi - exterior
    return np.where(r > 0.0, 2.0 * np.pi / interior, 1.0)


def _pair_weights(kind: str, xi: np.ndarray, xj: np.ndarray, window: Window) -> np.ndarray:
    dx = xj[:, 0] - xi[:, 0]
    dy = xj[:, 1] - xi[:, 1]
    r = np.hypot(dx, dy)
    if kind == "translational":
        return _translational_weights(dx, dy, window)
    if kind == "minus":
        return _minus_weights(xi, r, window)
    if kind == "isotropic":
        return _isotropic_weights(xi, r, window)
    raise InvalidInputError(f"unknown edge correction {kind!r}; use one of {CORRECTIONS}")


def edge_correction(kind: str, x, x1, window: Window) -> float:
    """Edge-correction weight for the ordered point pair (x, x1).

    Weights compensate for neighborhoods clipped by the window so that, for any
    fixed separation, integrating the weight over all valid first points
    recovers the window area (for the isotropic kind, after averaging over
    separation directions).
    """
    xi = np.asarray(x, dtype=float).reshape(1, 2)
    xj = np.asarray(x1, dtype=float).reshape(1, 2)
    inside = window.contains(np.vstack([xi, xj]))
    if not bool(np.all(inside)):
        raise InvalidInputError("edge correction requires both points inside the window")
    return float(_pair_weights(kind, xi, xj, window)[0])


# ---------------------------------------------------------------------------
# pair accumulation


@dataclass
class PairTable:
    """Precomputed geometry of all ordered pairs within the largest radius.

    Holds, per ordered pair (i, j): the mark indices, the combined
    edge-correction and intensity factor w(x_i, x_j) / (rho_i * rho_j), and the
    first r-grid bin the pair falls into.  Bin sums use ``math.fsum`` so the
    result is exact regardless of pair order.
    """

    i_idx: np.ndarray
    j_idx: np.ndarray
    factors: np.ndarray
    n_bins: int
    _order: np.ndarray = field(repr=False, default=None)
    _bounds: np.ndarray = field(repr=False, default=None)

    def cumulative(self, pair_values: np.ndarray) -> np.ndarray:
        """Sum pair contributions into r bins and return the cumulative curve."""
        contrib = (pair_values * self.factors)[self._order]
        sums = np.empty(self.n_bins)
        for b in range(self.n_bins):
            lo, hi = self._bounds[b], self._bounds[b + 1]
            sums[b] = math.fsum(contrib[lo:hi].tolist())
        return np.cumsum(sums)


def build_pair_table(locations: np.ndarray, window: Window, r_grid: np.ndarray,
                     correction: str, intensities: np.ndarray) -> PairTable:
    n = locations.shape[0]
    d = np.sqrt(_squared_distances(locations))
    ii, jj = np.nonzero((d <= r_grid[-1]) & ~np.eye(n, dtype=bool))
    xi = locations[ii]
    xj = locations[jj]
    w = _pair_weights(correction, xi, xj, window)
    factors = w / (intensities[ii] * intensities[jj])
    bins = np.searchsorted(r_grid, d[ii, jj], side="left")
    order = np.argsort(bins, kind="stable")
    counts = np.bincount(bins, minlength=r_grid.size)
    bounds = np.concatenate(([0], np.cumsum(counts)))
    return PairTable(i_idx=ii, j_idx=jj, factors=factors, n_bins=r_grid.size,
                     _order=order, _bounds=bounds)


def aligned_sqdist_matrix(aligned: list[SrvCurve]) -> np.ndarray:
    """Matrix of squared SRV distances between template-aligned curves."""
    n = aligned[0].grid_size
    flat = np.stack([q.values.reshape(-1) for q in aligned])
    gram = (TWO_PI / n) * (flat @ flat.T)
    sq = np.diag(gram)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    return np.maximum(d2, 0.0)


class KEngine:
    """Shared state for repeated K evaluations on one pattern.

    Computes the template alignment, intensities and pair geometry once; the
    marked statistic can then be re-evaluated under any relabeling of the marks
    (a gather over the fixed aligned-distance matrix), which is what the
    permutation tests need.
    """

    def __init__(self, pattern: MarkedPattern, group: SymmetryGroup | str,
                 r_grid: np.ndarray | None = None,
                 correction: str = DEFAULT_CORRECTION,
                 template: KarcherResult | None = None,
                 bandwidth: float | None = None):
        if pattern.n_points < 2:
            raise InvalidInputError("second-order analysis needs at least 2 points")
        if correction not in CORRECTIONS:
            raise InvalidInputError(
                f"unknown edge correction {correction!r}; use one of {CORRECTIONS}"
            )
        self.pattern = pattern
        self.group = SymmetryGroup(group)
        self.correction = correction
        self.r_grid = (default_r_grid(pattern.window) if r_grid is None
                       else _check_r_grid(pattern.window, r_grid))

        self.template = template if template is not None else karcher_mean(
            pattern.marks, self.group
        )
        if len(self.template.aligned) != pattern.n_points:
            raise InvalidInputError("template alignment count does not match the pattern")
        self.c_f = float(self.template.dispersion)
        mean_sq = float(np.mean([q.squared_norm for q in pattern.marks]))
        if self.c_f <= _DISPERSION_RTOL * max(mean_sq, np.finfo(float).tiny):
            raise DegenerateInputError(
                "mark dispersion is zero (all marks identical); statistic undefined"
            )

        self.bandwidth = float(bandwidth) if bandwidth is not None else select_bandwidth(pattern)
        if self.bandwidth <= 0.0:
            raise InvalidInputError("bandwidth must be positive")
        self.intensities = kernel_intensity(pattern, self.bandwidth)
        self.pairs = build_pair_table(pattern.locations, pattern.window, self.r_grid,
                                      correction, self.intensities)
        self.sqdist = aligned_sqdist_matrix(self.template.aligned)

    def marked_k(self, relabeling: np.ndarray | None = None) -> np.ndarray:
        """Mark-weighted K values, optionally with marks reassigned to
        locations by the given index permutation."""
        ii, jj = self.pairs.i_idx, self.pairs.j_idx
        if relabeling is not None:
            ii = relabeling[ii]
            jj = relabeling[jj]
        values = 0.5 * self.sqdist[ii, jj]
        return self.pairs.cumulative(values) / (self.pattern.window.area * self.c_f)

    def ground_k(self) -> np.ndarray:
        """Ground-process K values (test function identically one)."""
        ones = np.ones(self.pairs.i_idx.shape[0])
        return self.pairs.cumulative(ones) / self.pattern.window.area


def _l_transform(k_values: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(k_values, 0.0) / np.pi)


def _ground_only_k(pattern: MarkedPattern, r_grid, correction, bandwidth) -> KEstimate:
    if pattern.n_points < 2:
        raise InvalidInputError("second-order analysis needs at least 2 points")
    if correction not in CORRECTIONS:
        raise InvalidInputError(
            f"unknown edge correction {correction!r}; use one of {CORRECTIONS}"
        )
    r = (default_r_grid(pattern.window) if r_grid is None
         else _check_r_grid(pattern.window, r_grid))
    h = float(bandwidth) if bandwidth is not None else select_bandwidth(pattern)
    rho = kernel_intensity(pattern, h)
    table = build_pair_table(pattern.locations, pattern.window, r, correction, rho)
    k = table.cumulative(np.ones(table.i_idx.shape[0])) / pattern.window.area
    return KEstimate(r_grid=r, k_values=k, l_values=_l_transform(k), c_f=1.0,
                     correction=correction, group=GROUND, bandwidth=h)


def mark_weighted_k(pattern: MarkedPattern, group: SymmetryGroup | str,
                    r_grid: np.ndarray | None = None,
                    correction: str = DEFAULT_CORRECTION,
                    template: KarcherResult | None = None,
                    bandwidth: float | None = None) -> KEstimate:
    """Mark-weighted K function of a pattern under the chosen symmetry group.

    When no ``template`` is passed, the Karcher mean of the marks is computed
    and every mark aligned to it; pair test-function values are half the
    squared SRV distance between the aligned representatives, normalized by the
    dispersion of the aligned sample.
    """
    engine = KEngine(pattern, group, r_grid=r_grid, correction=correction,
                     template=template, bandwidth=bandwidth)
    k = engine.marked_k()
    return KEstimate(r_grid=engine.r_grid, k_values=k, l_values=_l_transform(k),
                     c_f=engine.c_f, correction=correction,
                     group=SymmetryGroup(group).value, bandwidth=engine.bandwidth)


def ground_k(pattern: MarkedPattern, r_grid: np.ndarray | None = None,
             correction: str = DEFAULT_CORRECTION,
             bandwidth: float | None = None) -> KEstimate:
    """Inhomogeneous K function of the ground process (marks ignored); the null
    reference for the envelope tests."""
    return _ground_only_k(pattern, r_grid, correction, bandwidth)
