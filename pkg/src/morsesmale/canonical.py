"""The canonical saddle ``a_nu``, its invariant neighbourhood, and affine linearizing charts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartTooLarge, DegenerateEigenframe, MorseSmaleError, OutsideN
from .periodic import PeriodicOrbit
from .surface import MapSpec, SurfacePoint, step

MIN_CHART_SIZE = 2.0**-30
RESIDUAL_FACTOR = 0.1


@dataclass(frozen=True)
class CanonicalSaddle:
    nu: int

    def __post_init__(self):
        if self.nu not in (-1, 1):
            raise ValueError("nu must be +1 or -1")


def canonical_apply(c: CanonicalSaddle, x) -> tuple[float, float]:
    x1, x2 = x
    return (c.nu * x1 / 2, c.nu * 2 * x2)


def canonical_apply_array(nu: int, xy: np.ndarray) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    return np.stack([nu * xy[..., 0] / 2, nu * 2 * xy[..., 1]], axis=-1)


def in_model_neighborhood(x) -> bool:
    return abs(x[0] * x[1]) <= 1.0


@dataclass(frozen=True)
class Leaf:
    which: str   # "u" (x1 = const) or "s" (x2 = const)
    c: float

    def image(self, nu: int) -> "Leaf":
        # a_nu sends {x1 = c} to {x1 = nu c / 2} and {x2 = c} to {x2 = 2 nu c}
        return Leaf(self.which, nu * self.c / 2 if self.which == "u" else 2 * nu * self.c)


def leaf_through(x, which: str) -> Leaf:
    if which not in ("u", "s"):
        raise ValueError("which must be 'u' or 's'")
    if not in_model_neighborhood(x):
        raise OutsideN(f"{x} is outside the model neighbourhood |x1 x2| <= 1")
    return Leaf(which, float(x[0]) if which == "u" else float(x[1]))


@dataclass(frozen=True)
class LinearizingChart:
    """Affine chart ``y = P^{-1} (x - origin) / r`` with ``P`` the eigenframe."""

    owner: PeriodicOrbit
    origin: SurfacePoint
    frame: tuple            # columns: stable (x1 axis), unstable (x2 axis)
    r: float
    model_matrix: tuple     # P^{-1} D(f^m) P
    residual: float         # measured nonlinear residual on the box boundary

    @property
    def P(self) -> np.ndarray:
        return np.array(self.frame)

    @property
    def P_inv(self) -> np.ndarray:
        return np.linalg.inv(self.P)

    def to_model(self, m: MapSpec, charts: np.ndarray, xy: np.ndarray) -> np.ndarray:
        s = m.surface
        xy = s.to_chart(np.asarray(charts), np.atleast_2d(xy), self.origin.chart) if s.kind == "sphere" else np.atleast_2d(xy)
        d = s.delta(self.origin.array, xy)
        return d @ self.P_inv.T / self.r

    def from_model(self, m: MapSpec, y: np.ndarray, normalize: bool = True):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        xy = self.origin.array + self.r * y @ self.P.T
        charts = np.full(len(xy), self.origin.chart)
        if normalize:
            return m.surface.normalize(charts, xy)
        return charts, xy

    def in_box(self, m: MapSpec, charts, xy, size: float = 1.0) -> np.ndarray:
        y = self.to_model(m, charts, xy)
        return np.all(np.abs(y) <= size, axis=-1)


def _eigenframe(o: PeriodicOrbit, J: np.ndarray, index: int = 0) -> np.ndarray:
    if o.kind == "saddle":
        P = np.column_stack([o.stable_vector(index), o.unstable_vector(index)])
    else:
        w, V = np.linalg.eig(J)
        if np.iscomplexobj(w) and abs(np.imag(w[0])) > 1e-12:
            v = V[:, 0]
            P = np.column_stack([np.real(v), np.imag(v)])
            P = P / np.linalg.norm(P[:, 0])
        else:
            order = np.argsort(np.abs(np.real(w)))
            P = np.real(V[:, order])
            if np.allclose(J, J[0, 0] * np.eye(2), atol=1e-10):
                # scalar matrix: every frame is an eigenframe, use the standard one
                P = np.eye(2)
    for k in range(2):
        P[:, k] /= np.linalg.norm(P[:, k])
    if abs(np.linalg.det(P)) < 1e-8:
        raise DegenerateEigenframe(f"eigenvectors of orbit {o.id} are nearly collinear")
    if np.linalg.det(P) < 0 and o.kind != "saddle":
        P[:, 1] = -P[:, 1]
    return P


def _fits(m: MapSpec, origin: SurfacePoint, P: np.ndarray, r: float) -> bool:
    corners = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    ext = np.abs(r * corners @ P.T)
    s = m.surface
    if s.kind == "torus":
        return bool(np.all(ext < 0.25))
    pts = origin.array + r * corners @ P.T
    if s.kind == "plane":
        return bool(np.all(np.abs(pts) <= s.plane_bound))
    return bool(np.all(np.hypot(pts[:, 0], pts[:, 1]) < 2.0))


def _residual(m: MapSpec, o: PeriodicOrbit, origin: SurfacePoint, P: np.ndarray, M: np.ndarray, r: float) -> float:
    """``max |f^m(chart^-1 y) - chart^-1(M y)|`` over the box boundary, in surface units."""
    t = np.linspace(-1, 1, 33)
    one = np.ones_like(t)
    y = np.concatenate([np.column_stack([t, one]), np.column_stack([t, -one]),
                        np.column_stack([one, t]), np.column_stack([-one, t])])
    xy = origin.array + r * y @ P.T
    charts = np.full(len(xy), origin.chart)
    s = m.surface
    c_img, img = step(m, charts, xy, o.period, strict=False)
    if s.kind == "sphere":
        img = s.to_chart(c_img, img, origin.chart)
    lin = origin.array + r * (y @ M.T) @ P.T
    err = np.linalg.norm(s.delta(lin, img), axis=1)
    return float(np.nanmax(err)) if np.all(np.isfinite(err)) else np.inf


def build_linearizing_chart(m: MapSpec, o: PeriodicOrbit, r: float | None = None,
                            index: int = 0) -> LinearizingChart:
    """Affine eigenframe chart around point ``index`` of a periodic orbit (the base point by default).

    With ``r=None`` the size is the largest power of 1/2 (starting from 1)
    whose box fits in the chart and whose nonlinear residual is below
    ``0.1 r``.
    """
    if o.kind not in ("saddle", "sink", "source"):
        raise MorseSmaleError(f"no linearizing chart for kind {o.kind}")
    origin = o.points[index]
    J = np.array(o.jacobian[index])
    P = _eigenframe(o, J, index)
    M = np.linalg.solve(P, J @ P)
    if r is None:
        r = 1.0
        while True:
            if _fits(m, origin, P, r):
                res = _residual(m, o, origin, P, M, r)
                if res < RESIDUAL_FACTOR * r:
                    break
            r *= 0.5
            if r < MIN_CHART_SIZE:
                raise ChartTooLarge(f"no admissible linearizing box for orbit {o.id}")
    else:
        if not _fits(m, origin, P, r):
            raise ChartTooLarge(f"box of size {r} escapes the chart of orbit {o.id}")
        res = _residual(m, o, origin, P, M, r)
    return LinearizingChart(o, origin, tuple(map(tuple, P)), float(r), tuple(map(tuple, M)), res)
