"""One-dimensional separatrices grown by fundamental-domain continuation.

A branch of ``W^u`` (or ``W^s``, grown as ``W^u`` of the inverse) is
parametrized globally by ``tau``: the vertex with ``tau = n + t``,
``t in (0, 1]``, is ``F^n(seed(t))`` where ``F = f^{+-m_gamma}`` and
``seed(t) = p + eps * Lambda^t * v`` lies on the eigenline.  Applying ``F``
shifts ``tau`` by exactly one, which is what the heteroclinic refinement and
the orbit identification rely on.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .canonical import LinearizingChart
from .errors import NoInverse, NotASaddle, TooShort
from .periodic import PeriodicOrbit, separatrix_period
from .surface import MapSpec, SurfacePoint, step

SEED_OFFSET = 1e-5
SEED_SAMPLES = 16
MAX_STEP = 0.01
MAX_ANGLE_DEG = 10.0
MIN_DTAU = 1e-4
MAX_DOMAINS = 400
INVARIANCE_TOL = 1e-6


@dataclass
class Separatrix:
    owner: PeriodicOrbit
    stability: str                  # "unstable" | "stable"
    side: str                       # "+" | "-"
    period: int                     # m_gamma
    multiplier: float               # eigenvalue of F along the branch (> 1)
    direction: tuple[float, float]  # signed eigenvector at the base point
    eps: float
    charts: np.ndarray
    xy: np.ndarray
    tau: np.ndarray
    arclength_budget: float
    truncated: bool = False
    stop_reason: str = "budget"
    stop_orbit: Optional[int] = None
    invariance_residual: float = float("nan")
    extras: dict = field(default_factory=dict)

    @property
    def id(self) -> str:
        return f"{self.owner.id}{self.stability[0]}{self.side}"

    @property
    def n_vertices(self) -> int:
        return len(self.tau)

    @property
    def step_sign(self) -> int:
        return 1 if self.stability == "unstable" else -1

    def vertex(self, i: int) -> SurfacePoint:
        return SurfacePoint(int(self.charts[i]), (float(self.xy[i, 0]), float(self.xy[i, 1])))

    def seed(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        p = self.owner.base.array
        v = np.asarray(self.direction)
        return p + self.eps * (self.multiplier ** t)[..., None] * v

    def points_at(self, m: MapSpec, tau: np.ndarray, n: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate the manifold parametrization at ``tau`` (vectorized).

        ``n`` fixes the number of ``F`` applications; by default
        ``ceil(tau) - 1`` so that the seed parameter lies in ``(0, 1]``.
        """
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if n is None:
            n = np.maximum(np.ceil(tau) - 1, 0).astype(int)
        n = np.broadcast_to(np.asarray(n, dtype=int), tau.shape)
        xy = self.seed(tau - n)
        charts = np.full(len(tau), self.owner.base.chart)
        charts, xy = m.surface.normalize(charts, xy, strict=False)
        out_c = charts.copy()
        out_x = xy.copy()
        for k in range(int(n.max(initial=0))):
            live = n > k
            if not np.any(live):
                break
            c, x = step(m, out_c[live], out_x[live], self.step_sign * self.period, strict=False)
            out_c[live], out_x[live] = c, x
        return out_c, out_x

    def segment_vectors(self, m: MapSpec) -> np.ndarray:
        return _seg_vectors(m, self.charts, self.xy)

    def arclength(self, m: MapSpec) -> np.ndarray:
        """Cumulative arclength at each vertex, measured from the owner point."""
        d = np.linalg.norm(self.segment_vectors(m), axis=1)
        start = float(np.linalg.norm(m.surface.delta(self.owner.base.array, self.xy[0]))) if self.charts[0] == self.owner.base.chart else self.eps
        return start + np.concatenate([[0.0], np.cumsum(d)])

    def to_csv_rows(self):
        for i in range(self.n_vertices):
            yield (self.id, i, int(self.charts[i]), repr(float(self.xy[i, 0])), repr(float(self.xy[i, 1])))


def _seg_vectors(m: MapSpec, charts: np.ndarray, xy: np.ndarray) -> np.ndarray:
    s = m.surface
    a, b = xy[:-1], xy[1:]
    if s.kind == "sphere":
        b = b.copy()
        other = charts[1:] != charts[:-1]
        if np.any(other):
            b[other] = s.transition(1, 0, b[other])
    return s.delta(a, b)


def _violations(m: MapSpec, charts, xy, max_step, max_angle_deg) -> np.ndarray:
    """Indices ``i`` of segments ``(i, i+1)`` that need a midpoint."""
    d = _seg_vectors(m, charts, xy)
    ln = np.linalg.norm(d, axis=1)
    bad = ln > max_step
    if len(d) >= 2:
        cosang = np.einsum("ij,ij->i", d[:-1], d[1:]) / np.maximum(ln[:-1] * ln[1:], 1e-300)
        turn = cosang < np.cos(np.radians(max_angle_deg))
        # skip the angle test on tiny segments; they are already resolved
        turn &= np.maximum(ln[:-1], ln[1:]) > 1e-6 * max_step
        bad[:-1] |= turn
        bad[1:] |= turn
    return np.flatnonzero(bad | ~np.isfinite(ln))


def _refine(sep: Separatrix, m: MapSpec, charts, xy, tau, lo: int, max_step, max_angle_deg):
    """Insert parameter midpoints into vertices ``lo:`` until the step/angle criteria hold."""
    while True:
        bad = _violations(m, charts, xy, max_step, max_angle_deg)
        bad = bad[bad >= lo]
        if len(bad) == 0:
            return charts, xy, tau
        dt = tau[bad + 1] - tau[bad]
        bad = bad[dt > MIN_DTAU * 2]
        if len(bad) == 0:
            return charts, xy, tau
        new_tau = 0.5 * (tau[bad] + tau[bad + 1])
        # keep each midpoint in the representation of its right neighbour's domain
        n = np.maximum(np.ceil(new_tau) - 1, 0).astype(int)
        nc, nx = sep.points_at(m, new_tau, n)
        charts = np.insert(charts, bad + 1, nc)
        xy = np.insert(xy, bad + 1, nx, axis=0)
        tau = np.insert(tau, bad + 1, new_tau)


def grow_separatrix(
    m: MapSpec,
    o: PeriodicOrbit,
    stability: str,
    side: str,
    arclength_budget: float,
    stop_charts: Sequence[LinearizingChart] = (),
    max_step: float = MAX_STEP,
    max_angle_deg: float = MAX_ANGLE_DEG,
) -> Separatrix:
    """Grow one branch of the stable or unstable manifold of ``o`` up to ``arclength_budget``.

    Growth also stops when a vertex enters one of ``stop_charts`` boxes
    (sinks for unstable branches, sources for stable ones), when the branch
    leaves the plane chart, or when a fundamental domain collapses to a point.
    """
    if o.kind != "saddle":
        raise NotASaddle(f"orbit {o.id} is a {o.kind}")
    if stability not in ("unstable", "stable") or side not in ("+", "-"):
        raise ValueError(f"bad branch {stability}{side}")
    if stability == "stable" and m.inverse is None:
        raise NoInverse(f"stable branch of orbit {o.id} needs the inverse of {m.name!r}")
    mg = separatrix_period(o, ("u" if stability == "unstable" else "s") + side)
    lam = o.lam_u if stability == "unstable" else 1.0 / o.lam_s
    mult = abs(lam) ** (mg // o.period)
    v = o.unstable_vector(0) if stability == "unstable" else o.stable_vector(0)
    if side == "-":
        v = -v
    eps = SEED_OFFSET * m.surface.chart_scale
    sep = Separatrix(o, stability, side, mg, float(mult), (float(v[0]), float(v[1])), eps,
                     np.zeros(0, dtype=int), np.zeros((0, 2)), np.zeros(0), float(arclength_budget))

    t0 = np.linspace(0.0, 1.0, SEED_SAMPLES + 1)
    charts, xy = sep.points_at(m, t0, np.zeros(len(t0), dtype=int))
    tau = t0.copy()
    charts, xy, tau = _refine(sep, m, charts, xy, tau, 0, max_step, max_angle_deg)
    stop, stop_orbit = "budget", None
    base = o.base.array
    start_len = float(np.linalg.norm(m.surface.delta(base, xy[0])))
    total = start_len + float(np.sum(np.linalg.norm(_seg_vectors(m, charts, xy), axis=1)))

    for n in range(1, MAX_DOMAINS + 1):
        if total >= arclength_budget:
            break
        prev = (tau > n - 1) if n > 1 else np.ones(len(tau), dtype=bool)
        prev &= tau <= n
        if n == 1:
            prev[0] = False
        src_c, src_x, src_t = charts[prev], xy[prev], tau[prev]
        nc, nx = step(m, src_c, src_x, sep.step_sign * mg, strict=False)
        if not np.all(np.isfinite(nx)):
            ok = np.isfinite(nx).all(axis=1)
            first_bad = int(np.argmin(ok))
            nc, nx, src_t = nc[:first_bad], nx[:first_bad], src_t[:first_bad]
            stop = "escape"
        lo = len(tau) - 1
        charts = np.concatenate([charts, nc])
        xy = np.concatenate([xy, nx])
        tau = np.concatenate([tau, src_t + 1])
        charts, xy, tau = _refine(sep, m, charts, xy, tau, lo, max_step, max_angle_deg)
        seg = np.linalg.norm(_seg_vectors(m, charts[lo:], xy[lo:]), axis=1)
        total += float(np.sum(seg))

        entered = _first_box_entry(m, charts[lo + 1:], xy[lo + 1:], stop_charts)
        if entered is not None:
            k, orb = entered
            keep = lo + 1 + k + 1
            charts, xy, tau = charts[:keep], xy[:keep], tau[:keep]
            stop, stop_orbit = "box", orb
            break
        if stop == "escape":
            break
        if float(np.sum(seg)) < 1e-13:
            stop = "converged"
            break

    if stop == "budget":
        charts, xy, tau, sep.truncated = _truncate(m, base, charts, xy, tau, arclength_budget)
    sep.charts, sep.xy, sep.tau = charts, xy, tau
    sep.stop_reason, sep.stop_orbit = stop, stop_orbit
    if tau[-1] >= 2.0:
        sep.invariance_residual = invariance_residual(m, sep)
    return sep


def _first_box_entry(m, charts, xy, stop_charts):
    best = None
    for ch in stop_charts:
        inside = ch.in_box(m, charts, xy)
        if np.any(inside):
            k = int(np.argmax(inside))
            if best is None or k < best[0]:
                best = (k, ch.owner.id)
    return best


def _truncate(m, base, charts, xy, tau, budget):
    seg = np.linalg.norm(_seg_vectors(m, charts, xy), axis=1)
    cum = float(np.linalg.norm(m.surface.delta(base, xy[0]))) + np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] <= budget:
        return charts, xy, tau, False
    k = int(np.searchsorted(cum, budget))  # cum[k-1] < budget <= cum[k]
    if k == 0:
        return charts[:1], xy[:1], tau[:1], True
    w = (budget - cum[k - 1]) / (cum[k] - cum[k - 1])
    d = _seg_vectors(m, charts[k - 1:k + 1], xy[k - 1:k + 1])[0]
    end = xy[k - 1] + w * d
    ec, ex = m.surface.normalize(charts[k - 1:k], end[None])
    t_end = tau[k - 1] + w * (tau[k] - tau[k - 1])
    return (np.concatenate([charts[:k], ec]), np.concatenate([xy[:k], ex]),
            np.concatenate([tau[:k], [t_end]]), True)


# -- distances to polylines ----------------------------------------------------

def _point_segment_distance(p, a, d):
    dd = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / np.maximum(dd, 1e-300), 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * d), axis=1)


def distance_to_polyline(m: MapSpec, sep: Separatrix, charts: np.ndarray, pts: np.ndarray, k: int = 8) -> np.ndarray:
    """Distance from each query point to the polyline of ``sep`` (same chart only on the sphere)."""
    s = m.surface
    xy = sep.xy
    if s.kind == "sphere":
        xy = s.to_chart(sep.charts, xy, 0)
        pts = s.to_chart(charts, pts, 0)
    tree = cKDTree(xy, boxsize=1.0 if s.kind == "torus" else None)
    k = min(k, len(xy))
    _, idx = tree.query(pts, k=k)
    idx = np.atleast_2d(idx.reshape(len(pts), -1))
    d = np.full(len(pts), np.inf)
    segv = _seg_vectors(m, sep.charts, sep.xy) if s.kind != "sphere" else xy[1:] - xy[:-1]
    nseg = len(segv)
    for col in range(idx.shape[1]):
        for off in (-1, 0):
            j = np.clip(idx[:, col] + off, 0, max(nseg - 1, 0))
            if nseg == 0:
                dist = np.linalg.norm(s.delta(xy[0], pts), axis=1)
            else:
                a = xy[j]
                rel = a + s.delta(a, pts)  # query point in the unwrapped frame of a
                dist = _point_segment_distance(rel, a, segv[j])
            d = np.minimum(d, dist)
    return d


def invariance_residual(m: MapSpec, sep: Separatrix) -> float:
    """Max distance from ``F(x)`` to the polyline over vertices outside the last fundamental domain."""
    if len(sep.tau) < 2 or sep.tau[-1] < 2.0:
        raise TooShort(f"separatrix {sep.id} spans fewer than two fundamental domains")
    use = sep.tau + 1.0 <= sep.tau[-1]
    c, x = step(m, sep.charts[use], sep.xy[use], sep.step_sign * sep.period, strict=False)
    return float(np.max(distance_to_polyline(m, sep, c, x)))


SEPARATRIX_CSV_HEADER = ("separatrix_id", "vertex_index", "chart_id", "x1", "x2")


def separatrices_csv(seps: Iterable[Separatrix]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SEPARATRIX_CSV_HEADER)
    for s in seps:
        w.writerows(s.to_csv_rows())
    return buf.getvalue()
