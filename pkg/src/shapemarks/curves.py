"""Discrete closed planar curves and the square-root velocity (SRV) representation.

A curve is an ordered list of vertices of a closed polygon; the edge from the
last vertex back to the first is implied.  Its SRV representation samples
q(t) = velocity / sqrt(|velocity|) on the uniform grid t_k = 2*pi*k/n, using
forward differences with circular wraparound.  That choice makes the closure
integral of q|q| telescope to exactly zero for any closed polygon, so no
projection step is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, GridMismatchError, InvalidInputError

TWO_PI = 2.0 * np.pi

#: Default number of grid points used when resampling curves for analysis.
DEFAULT_GRID_SIZE = 100

#: Minimum grid size for SRV-based analysis.
MIN_GRID_SIZE = 8

#: Closure tolerance for externally supplied SRV data, relative to curve length.
CLOSURE_RTOL = 1e-8


def _as_vertex_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInputError(f"expected an (n, 2) vertex array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("curve vertices must be finite")
    return arr


@dataclass(frozen=True)
class Curve:
    """Closed polygon in the plane.

    Vertices are ordered; closure is implicit.  Construction validates that no
    two consecutive vertices coincide (every edge, including the wraparound
    edge, has positive length) and that the perimeter is positive.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = _as_vertex_array(self.points)
        if pts.shape[0] < 3:
            raise InvalidInputError(f"a closed curve needs at least 3 vertices, got {pts.shape[0]}")
        edges = np.roll(pts, -1, axis=0) - pts
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        if np.any(lengths == 0.0):
            raise DegenerateInputError("consecutive curve vertices coincide (zero-length edge)")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def edge_vectors(self) -> np.ndarray:
        """Edges including the implied closing edge, shape (n, 2)."""
        return np.roll(self.points, -1, axis=0) - self.points

    def edge_lengths(self) -> np.ndarray:
        e = self.edge_vectors()
        return np.hypot(e[:, 0], e[:, 1])

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths().sum())


@dataclass(frozen=True)
class SrvCurve:
    """SRV representation sampled on the uniform circular grid t_k = 2*pi*k/n."""

    values: np.ndarray

    def __post_init__(self):
        vals = _as_vertex_array(self.values)
        if vals.shape[0] < MIN_GRID_SIZE:
            raise InvalidInputError(
                f"SRV grid needs at least {MIN_GRID_SIZE} points, got {vals.shape[0]}"
            )
        if not np.any(vals):
            raise DegenerateInputError("SRV with identically zero values (constant curve)")
        object.__setattr__(self, "values", vals)

    @property
    def grid_size(self) -> int:
        return self.values.shape[0]

    @property
    def squared_norm(self) -> float:
        """Integral of |q|^2 over the circle; equals the curve length for SRVs
        produced by :func:`to_srv`."""
        n = self.grid_size
        return float((TWO_PI / n) * np.sum(self.values**2))

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.squared_norm))


def require_common_grid(*srvs: SrvCurve) -> int:
    sizes = {q.grid_size for q in srvs}
    if len(sizes) != 1:
        raise GridMismatchError(f"curves live on different grids: {sorted(sizes)}")
    return sizes.pop()


def srv_inner(q1: SrvCurve, q2: SrvCurve) -> float:
    """L2 inner product of two SRVs on their common grid."""
    n = require_common_grid(q1, q2)
    return float((TWO_PI / n) * np.sum(q1.values * q2.values))


def srv_distance(q1: SrvCurve, q2: SrvCurve) -> float:
    """Plain (unaligned) L2 distance between two SRVs."""
    n = require_common_grid(q1, q2)
    diff = q1.values - q2.values
    return float(np.sqrt((TWO_PI / n) * np.sum(diff**2)))


def resample_closed(curve: Curve, n: int) -> Curve:
    """Resample a closed polygon to n vertices equally spaced in arc length.

    The output vertices lie on the input polygon at arc positions k*P/n
    measured from the first vertex, where P is the input perimeter.
    """
    if n < MIN_GRID_SIZE:
        raise InvalidInputError(f"resample target must be >= {MIN_GRID_SIZE}, got {n}")
    pts = curve.points
    n_in = pts.shape[0]
    lengths = curve.edge_lengths()
    cum = np.concatenate(([0.0], np.cumsum(lengths)))
    perimeter = cum[-1]
    if perimeter <= 0.0:
        raise DegenerateInputError("cannot resample a curve with zero perimeter")
    targets = np.arange(n) * (perimeter / n)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, n_in - 1)
    frac = (targets - cum[idx]) / lengths[idx]
    nxt = (idx + 1) % n_in
    out = pts[idx] + frac[:, None] * (pts[nxt] - pts[idx])
    return Curve(out)


def to_srv(curve: Curve) -> SrvCurve:
    """SRV transform of a uniformly sampled closed curve.

    Velocities are forward differences with wraparound, d_k = (p_{k+1} - p_k) * n / (2*pi),
    and q_k = d_k / sqrt(|d_k|) (zero velocity maps to the zero vector).  The squared
    SRV norm then equals the polygon perimeter exactly, and the closure integral of
    q|q| is zero by telescoping.
    """
    n = curve.n
    if n < MIN_GRID_SIZE:
        raise InvalidInputError(f"SRV transform needs at least {MIN_GRID_SIZE} vertices, got {n}")
    d = curve.edge_vectors() * (n / TWO_PI)
    speed = np.hypot(d[:, 0], d[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(speed[:, None] > 0.0, d / np.sqrt(speed)[:, None], 0.0)
    return SrvCurve(q)


def from_srv(srv: SrvCurve, basepoint=(0.0, 0.0)) -> Curve:
    """Integrate q|q| back to a closed curve anchored at ``basepoint``.

    Cumulative left-point integration is used because it inverts the forward
    differences of :func:`to_srv` exactly: the round trip reproduces the SRV to
    machine precision.
    """
    vals = srv.values
    n = srv.grid_size
    speed = np.hypot(vals[:, 0], vals[:, 1])
    velocity = vals * speed[:, None]
    steps = velocity * (TWO_PI / n)
    pts = np.empty_like(vals)
    pts[0] = np.asarray(basepoint, dtype=float)
    pts[1:] = pts[0] + np.cumsum(steps[:-1], axis=0)
    return Curve(pts)


def closure_defect(srv: SrvCurve) -> np.ndarray:
    """Quadrature value of the closure integral of q|q| over the circle.

    Zero (to roundoff) for SRVs of closed polygons; used as an invariant check
    on externally supplied SRV data, never as a projection.
    """
    vals = srv.values
    n = srv.grid_size
    speed = np.hypot(vals[:, 0], vals[:, 1])
    return (TWO_PI / n) * np.sum(vals * speed[:, None], axis=0)


def validate_closure(srv: SrvCurve, rtol: float = CLOSURE_RTOL) -> None:
    """Raise if the closure defect exceeds ``rtol`` times the curve length."""
    defect = float(np.hypot(*closure_defect(srv)))
    if defect > rtol * max(srv.squared_norm, np.finfo(float).tiny):
        raise InvalidInputError(
            f"SRV violates the closure constraint (defect {defect:.3e}, "
            f"length {srv.squared_norm:.3e})"
        )


def unit_norm(srv: SrvCurve) -> SrvCurve:
    """Rescale an SRV to unit L2 norm."""
    nrm = srv.norm
    if nrm == 0.0:
        raise DegenerateInputError("cannot normalize a zero SRV")
    return SrvCurve(srv.values / nrm)
