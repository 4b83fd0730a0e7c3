"""Surfaces as chart atlases and diffeomorphisms as per-chart maps.

Three surface models are supported:

* ``plane``  -- one chart, the whole of R^2 restricted to a large box;
* ``torus``  -- one chart, coordinates taken modulo 1;
* ``sphere`` -- two charts ``z`` and ``w = z/|z|^2`` glued on the annulus
  ``1/2 < |z| < 2``.  The inversion reverses the raw orientation, so chart 1
  carries orientation convention -1.

Maps are vectorized: a per-chart callable receives an ``(N, 2)`` array of
coordinates in one chart and returns the images expressed in the same chart
(possibly outside its normalized region; :meth:`SurfaceModel.normalize` picks
the canonical chart afterwards).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ChartEscape, NoInverse, NonOrientationPreserving

ChartMap = Callable[[int, np.ndarray], np.ndarray]
ChartJacobian = Callable[[int, np.ndarray], np.ndarray]

FD_STEP = 1e-6
SPHERE_CHART_RADIUS = 2.0
TANGENCY_DET = 1e-12


@dataclass(frozen=True)
class SurfacePoint:
    chart: int
    coords: tuple[float, float]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


@dataclass(frozen=True)
class SurfaceModel:
    kind: str
    plane_bound: float = 1e3

    def __post_init__(self):
        if self.kind not in ("plane", "torus", "sphere"):
            raise ValueError(f"unknown surface kind {self.kind!r}")

    @property
    def n_charts(self) -> int:
        return 2 if self.kind == "sphere" else 1

    def orientation(self, chart: int) -> int:
        return -1 if (self.kind == "sphere" and chart == 1) else 1

    @property
    def chart_scale(self) -> float:
        return 1.0

    # -- chart bookkeeping -------------------------------------------------

    def in_domain(self, chart: int, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        if self.kind == "torus":
            return np.all((xy >= 0.0) & (xy < 1.0), axis=-1)
        if self.kind == "plane":
            return np.all(np.abs(xy) <= self.plane_bound, axis=-1)
        r = np.hypot(xy[:, 0], xy[:, 1])
        return r < SPHERE_CHART_RADIUS

    def transition(self, src: int, dst: int, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        if src == dst:
            return xy.copy()
        if self.kind != "sphere":
            raise ValueError(f"{self.kind} has a single chart")
        r2 = np.sum(xy * xy, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return xy / r2

    def transition_jacobian(self, src: int, dst: int, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        if src == dst:
            return np.broadcast_to(np.eye(2), (len(xy), 2, 2)).copy()
        r2 = np.sum(xy * xy, axis=-1)[:, None, None]
        outer = xy[:, :, None] * xy[:, None, :]
        return (r2 * np.eye(2) - 2.0 * outer) / r2**2

    def normalize(self, charts: np.ndarray, xy: np.ndarray, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Map points into their canonical chart.

        With ``strict=False`` points escaping the plane box become NaN instead
        of raising :class:`ChartEscape`.
        """
        charts = np.array(charts, dtype=int, copy=True)
        xy = np.array(xy, dtype=float, copy=True)
        if self.kind == "torus":
            xy = np.mod(xy, 1.0)
            xy[xy >= 1.0] = 0.0
            return charts, xy
        if self.kind == "plane":
            bad = ~np.all(np.isfinite(xy), axis=-1) | ~self.in_domain(0, xy)
            if np.any(bad):
                if not strict:
                    xy[bad] = np.nan
                    return charts, xy
                raise ChartEscape(f"point left the plane chart: {xy[bad][0]}")
            return charts, xy
        r2 = np.sum(xy * xy, axis=-1)
        flip = r2 > 1.0
        if np.any(flip):
            xy[flip] = xy[flip] / r2[flip, None]
            charts[flip] = 1 - charts[flip]
        return charts, xy

    def to_chart(self, charts: np.ndarray, xy: np.ndarray, target: int) -> np.ndarray:
        out = np.array(xy, dtype=float, copy=True)
        other = np.asarray(charts) != target
        if np.any(other):
            out[other] = self.transition(1 - target, target, out[other])
        return out

    def delta(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Displacement ``b - a`` in chart coordinates (minimal image on the torus)."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.kind == "torus":
            d = d - np.round(d)
        return d

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        a = p.array
        b = q.array if q.chart == p.chart else self.transition(q.chart, p.chart, q.array[None])[0]
        return float(np.linalg.norm(self.delta(a, b)))

    def point(self, chart: int, coords) -> SurfacePoint:
        c, xy = self.normalize(np.array([chart]), np.asarray(coords, dtype=float)[None])
        return SurfacePoint(int(c[0]), (float(xy[0, 0]), float(xy[0, 1])))


@dataclass(frozen=True)
class MapSpec:
    name: str
    surface: SurfaceModel
    forward: ChartMap
    inverse: Optional[ChartMap] = None
    jacobian: Optional[ChartJacobian] = None
    params: dict = field(default_factory=dict, compare=False)
    search_box: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)

    @property
    def has_inverse(self) -> bool:
        return self.inverse is not None


# -- vectorized kernels ------------------------------------------------------

def _per_chart(surface: SurfaceModel, fn: ChartMap, charts: np.ndarray, xy: np.ndarray) -> np.ndarray:
    out = np.empty_like(xy)
    for c in range(surface.n_charts):
        mask = charts == c
        if np.any(mask):
            out[mask] = fn(c, xy[mask])
    return out


def step(m: MapSpec, charts: np.ndarray, xy: np.ndarray, n: int = 1,
         strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``f^n`` to a batch of points, renormalizing after every step."""
    charts = np.asarray(charts, dtype=int)
    xy = np.asarray(xy, dtype=float)
    if n < 0 and m.inverse is None:
        raise NoInverse(f"map {m.name!r} has no inverse")
    fn = m.forward if n >= 0 else m.inverse
    for _ in range(abs(n)):
        xy = _per_chart(m.surface, fn, charts, xy)
        charts, xy = m.surface.normalize(charts, xy, strict)
    return charts, xy


def jacobians(m: MapSpec, charts: np.ndarray, xy: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Jacobian of ``f`` (or ``f^{-1}``) in the chart of each input point.

    The image is expressed in the same chart as the input; a chart switch at
    the image is the caller's business (see :func:`orbit_jacobian`).
    """
    charts = np.asarray(charts, dtype=int)
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    fn = m.inverse if inverse else m.forward
    if fn is None:
        raise NoInverse(f"map {m.name!r} has no inverse")
    if m.jacobian is not None and not inverse:
        return _per_chart_jac(m.surface, m.jacobian, charts, xy)
    out = np.empty((len(xy), 2, 2))
    h = FD_STEP
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        plus = _per_chart(m.surface, fn, charts, xy + e)
        minus = _per_chart(m.surface, fn, charts, xy - e)
        out[:, :, j] = m.surface.delta(minus, plus) / (2 * h)
    return out


def _per_chart_jac(surface, fn, charts, xy):
    out = np.empty((len(xy), 2, 2))
    for c in range(surface.n_charts):
        mask = charts == c
        if np.any(mask):
            out[mask] = fn(c, xy[mask])
    return out


def orbit_jacobian(m: MapSpec, charts: np.ndarray, xy: np.ndarray, n: int,
                   strict: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(charts_n, xy_n, D(f^n))`` for a batch, chaining through chart switches."""
    charts = np.asarray(charts, dtype=int)
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    total = np.broadcast_to(np.eye(2), (len(xy), 2, 2)).copy()
    for _ in range(n):
        J = jacobians(m, charts, xy)
        img = _per_chart(m.surface, m.forward, charts, xy)
        new_charts, new_xy = m.surface.normalize(charts, img, strict)
        switched = new_charts != charts
        if np.any(switched):
            T = m.surface.transition_jacobian(0, 1, img[switched])
            J[switched] = T @ J[switched]
        total = J @ total
        charts, xy = new_charts, new_xy
    return charts, xy, total


# -- public point-level API --------------------------------------------------

def apply_map(m: MapSpec, x: SurfacePoint, n: int = 1) -> SurfacePoint:
    if n == 0:
        return x
    c, xy = step(m, np.array([x.chart]), x.array[None], n)
    return SurfacePoint(int(c[0]), (float(xy[0, 0]), float(xy[0, 1])))


def apply_jacobian(m: MapSpec, x: SurfacePoint) -> np.ndarray:
    J = jacobians(m, np.array([x.chart]), x.array[None])[0]
    if np.linalg.det(J) <= 0:
        raise NonOrientationPreserving(f"det Df <= 0 at {x} for map {m.name!r}")
    return J


def frame_sign(s: SurfaceModel, x: SurfacePoint, u, v) -> int:
    """Orientation of the ordered frame ``(u, v)`` at ``x``; 0 flags a tangency."""
    d = float(u[0] * v[1] - u[1] * v[0])
    if abs(d) < TANGENCY_DET:
        return 0
    return int(np.sign(d)) * s.orientation(x.chart)


def newton_inverse(forward: ChartMap, surface: SurfaceModel, tol: float = 1e-12, max_iter: int = 50) -> ChartMap:
    """Numerical inverse by Newton iteration, started from the target point itself."""

    def inverse(chart: int, target: np.ndarray) -> np.ndarray:
        target = np.atleast_2d(target)
        y = target.copy()
        h = FD_STEP
        for _ in range(max_iter):
            r = surface.delta(target, forward(chart, y))
            if np.max(np.abs(r), initial=0.0) < tol:
                break
            J = np.empty((len(y), 2, 2))
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                J[:, :, j] = surface.delta(forward(chart, y - e), forward(chart, y + e)) / (2 * h)
            y = y - np.linalg.solve(J, r[..., None])[..., 0]
        return y

    return inverse
