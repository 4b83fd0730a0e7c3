"""Orbit space of a punctured sink basin and projections of separatrices into it.

The fundamental annulus is ``A = D \\ f^m(D)`` where ``D`` is the disc of
radius ``r`` in the sink's linearizing chart and ``m`` the sink period.
Outer boundary included, inner boundary excluded, so every basin point has
exactly one integer ``n`` with ``f^(n m)(x)`` in ``A``.  ``n`` is positive for
points outside ``D`` and non-positive for points already inside it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .canonical import LinearizingChart, build_linearizing_chart
from .errors import MorseSmaleError, NotInBasin, NotTrapping
from .manifold import Separatrix
from .periodic import PeriodicOrbit
from .surface import MapSpec, newton_inverse, step

BOUNDARY_SAMPLES = 256
MAX_STEPS = 400
BISECT_ITERS = 60
CLOSURE_TOL = 1e-6


@dataclass
class QuotientChart:
    m: MapSpec
    sink: PeriodicOrbit
    chart: LinearizingChart
    r: float                 # radius of C in model coordinates of ``chart``
    m_omega: int
    m_V: int
    trapping_margin: float   # max |f^m(C)| / r over the boundary samples
    _inverse: object = field(default=None, repr=False)

    def model_radius(self, charts, xy) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            y = self.chart.to_model(self.m, charts, xy)
        return np.hypot(y[:, 0], y[:, 1])

    def forward(self, charts, xy, k: int = 1):
        return step(self.m, charts, xy, k * self.m_omega, strict=False)

    def backward(self, charts, xy, k: int = 1):
        fn = self.m.inverse if self.m.inverse is not None else self._inverse
        for _ in range(k * self.m_omega):
            xy = np.array(xy, dtype=float, copy=True)
            out = np.full_like(xy, np.nan)
            for c in range(self.m.surface.n_charts):
                mask = (charts == c) & np.isfinite(xy).all(axis=1)
                if np.any(mask):
                    out[mask] = fn(c, xy[mask])
            charts, xy = self.m.surface.normalize(charts, out, strict=False)
        return charts, xy


def _inside(q: QuotientChart, charts, xy) -> np.ndarray:
    rad = q.model_radius(charts, xy)
    return np.isfinite(rad) & (rad <= q.r)


def build_sink_quotient(m: MapSpec, sink: PeriodicOrbit, r: float = 1.0,
                        chart: LinearizingChart | None = None) -> QuotientChart:
    """Quotient chart of the basin component of ``sink.base`` under ``f^(m_omega)``."""
    if sink.kind != "sink":
        raise MorseSmaleError(f"orbit {sink.id} is a {sink.kind}, not a sink")
    if not 0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1] (model units of the linearizing box)")
    chart = chart or build_linearizing_chart(m, sink)
    q = QuotientChart(m, sink, chart, float(r), sink.period, sink.period, np.nan)
    if m.inverse is None:
        q._inverse = newton_inverse(m.forward, m.surface)
    th = np.linspace(0.0, 2 * np.pi, BOUNDARY_SAMPLES, endpoint=False)
    yc = r * np.column_stack([np.cos(th), np.sin(th)])
    c, x = chart.from_model(m, yc, normalize=True)
    c1, x1 = q.forward(c, x)
    rad = q.model_radius(c1, x1)
    q.trapping_margin = float(np.nanmax(rad) / r) if np.all(np.isfinite(rad)) else np.inf
    if not q.trapping_margin < 1.0:
        raise NotTrapping(f"f^{q.m_omega}(C) is not inside C for sink {sink.id} at r={r} "
                          f"(max ratio {q.trapping_margin:.4g}); decrease r")
    return q


def annulus_step(q: QuotientChart, charts, xy, max_steps: int = MAX_STEPS):
    """Signed exponents ``n`` and annulus representatives ``f^(n m)(x)``.

    Points not reaching the annulus within ``max_steps`` get ``n`` = nan-marked
    via a boolean ``found`` mask.
    """
    charts = np.atleast_1d(np.asarray(charts, dtype=int)).copy()
    xy = np.atleast_2d(np.asarray(xy, dtype=float)).copy()
    n = np.zeros(len(xy), dtype=int)
    found = np.zeros(len(xy), dtype=bool)
    rep_c, rep_x = charts.copy(), xy.copy()

    inside = _inside(q, charts, xy)
    # outside D: march forward until the first entry into D
    cur_c, cur_x = charts.copy(), xy.copy()
    todo = ~inside & np.isfinite(xy).all(axis=1)
    for k in range(1, max_steps + 1):
        idx = np.nonzero(todo)[0]
        if len(idx) == 0:
            break
        cc, cx = q.forward(cur_c[idx], cur_x[idx])
        cur_c[idx], cur_x[idx] = cc, cx
        hit = _inside(q, cc, cx)
        dead = ~np.isfinite(cx).all(axis=1)
        n[idx[hit]] = k
        found[idx[hit]] = True
        rep_c[idx[hit]], rep_x[idx[hit]] = cc[hit], cx[hit]
        todo[idx[hit | dead]] = False

    # inside D: march backward until the preimage leaves D
    cur_c, cur_x = charts.copy(), xy.copy()
    todo = inside.copy()
    for k in range(0, max_steps):
        idx = np.nonzero(todo)[0]
        if len(idx) == 0:
            break
        pc, px = q.backward(cur_c[idx], cur_x[idx])
        out = ~_inside(q, pc, px)
        n[idx[out]] = -k
        found[idx[out]] = True
        rep_c[idx[out]], rep_x[idx[out]] = cur_c[idx[out]], cur_x[idx[out]]
        todo[idx[out]] = False
        cur_c[idx[~out]], cur_x[idx[~out]] = pc[~out], px[~out]
    return n, found, rep_c, rep_x


def _inner_radius(q: QuotientChart, theta: np.ndarray) -> np.ndarray:
    """Model radius at which the ray of angle ``theta`` meets ``f^m(C)``.

    Bisection on ``rho`` for the predicate ``|f^-m(rho e^{i theta})| <= r``.
    """
    lo = np.zeros_like(theta)
    hi = np.full_like(theta, q.r)
    d = np.column_stack([np.cos(theta), np.sin(theta)])
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        c, x = q.chart.from_model(q.m, mid[:, None] * d, normalize=True)
        pc, px = q.backward(c, x)
        ins = _inside(q, pc, px)
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    return 0.5 * (lo + hi)


def annulus_coords(q: QuotientChart, rep_c, rep_x) -> np.ndarray:
    """``(s, theta)`` in ``[0, 1)^2`` for annulus points: ``s = 0`` on ``C``, ``s -> 1`` at ``f^m(C)``."""
    y = q.chart.to_model(q.m, rep_c, rep_x)
    rho = np.hypot(y[:, 0], y[:, 1])
    ang = np.arctan2(y[:, 1], y[:, 0])
    rin = _inner_radius(q, ang)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.log(q.r / rho) / np.log(q.r / rin)
    s = np.clip(s, 0.0, np.nextafter(1.0, 0.0))
    return np.column_stack([s, np.mod(ang / (2 * np.pi), 1.0)])


def project_points(q: QuotientChart, charts, xy):
    n, found, rc, rx = annulus_step(q, charts, xy)
    if not np.all(found):
        raise NotInBasin(f"{int(np.sum(~found))} point(s) do not reach the annulus of sink {q.sink.id}")
    return n, annulus_coords(q, rc, rx), rx


@dataclass
class ProjectedCurve:
    source_id: str
    arcs: list            # list of (k, 2) arrays of (s, theta)
    closed: bool
    winding: int
    gap: float
    crossings: int        # unsigned count of gluing-circle crossings

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)


def _curve_from_samples(q: QuotientChart, source_id: str, charts, xy) -> ProjectedCurve:
    n, st, rep = project_points(q, charts, xy)
    jumps = n[:-1] - n[1:]
    cuts = np.nonzero(jumps != 0)[0]
    arcs, lo = [], 0
    for c in cuts:
        arcs.append(st[lo:c + 1])
        lo = c + 1
    arcs.append(st[lo:])
    gap = float(np.linalg.norm(q.m.surface.delta(rep[0], rep[-1])))
    return ProjectedCurve(source_id, arcs, gap < CLOSURE_TOL, int(np.sum(jumps)), gap,
                          int(np.sum(np.abs(jumps))))


def _align_to_component(q: QuotientChart, charts, xy):
    """Move points of another basin component onto the component of ``sink.base``."""
    if q.m_omega == 1:
        return charts, xy
    base = q.sink.base
    for j in range(q.m_omega):
        c, x = step(q.m, charts, xy, j, strict=False)
        n, found, _, _ = annulus_step(q, c[-1:], x[-1:])
        if found[0]:
            return c, x
    raise NotInBasin(f"curve does not accumulate on the orbit of sink {q.sink.id} at {base.coords}")


def project_curve(q: QuotientChart, sep: Separatrix, samples_per_domain: int = 0) -> ProjectedCurve:
    """Project one fundamental segment ``[x, f^(m_gamma)(x)]`` of an unstable separatrix tail."""
    if sep.stability != "unstable":
        raise MorseSmaleError("only unstable separatrices are projected into sink basins")
    t_end = float(sep.tau[-1])
    if t_end < 1.0:
        raise NotInBasin(f"separatrix {sep.id} is shorter than one fundamental domain")
    t0 = t_end - 1.0
    inner = sep.tau[(sep.tau > t0) & (sep.tau < t_end)]
    if samples_per_domain:
        inner = np.union1d(inner, np.linspace(t0, t_end, samples_per_domain + 1)[1:-1])
    taus = np.concatenate([[t0], inner, [t_end]])
    n_steps = np.maximum(np.ceil(taus) - 1, 0).astype(int)
    n_steps[-1] = n_steps[0] + 1          # end point is exactly F(start)
    c, x = sep.points_at(q.m, taus, n_steps)
    if not np.all(np.isfinite(x)):
        raise NotInBasin(f"separatrix {sep.id} leaves the chart before reaching sink {q.sink.id}")
    c, x = _align_to_component(q, c, x)
    if sep.period % q.m_omega:
        raise MorseSmaleError(f"separatrix period {sep.period} is not a multiple of the sink period {q.m_omega}")
    return _curve_from_samples(q, sep.id, c, x)


def project_neighborhood_boundary(q: QuotientChart, saddle: PeriodicOrbit, sep: Separatrix,
                                  delta: float = 0.25, samples: int = 96) -> tuple[ProjectedCurve, ProjectedCurve]:
    """Project the two boundary curves of a model neighbourhood of ``sep``.

    In the saddle's linearizing chart each boundary curve is a fundamental
    segment of the hyperbola ``x1 x2 = const`` from ``p = (+-delta, a)`` to
    ``f^(m_gamma)(p)``; it closes up in the orbit space by construction.
    """
    if sep.owner.id != saddle.id:
        raise MorseSmaleError("separatrix does not belong to this saddle")
    L = build_linearizing_chart(q.m, saddle)
    M = np.array(L.model_matrix)
    lam_u = abs(M[1, 1]) ** (sep.period // saddle.period)
    side = 1.0 if sep.side == "+" else -1.0
    a = 0.5 / lam_u
    out = []
    for c1 in (delta, -delta):
        pc, p = L.from_model(q.m, np.array([[c1, side * a]]))
        fc, fp = step(q.m, pc, p, sep.period, strict=False)
        y0 = np.array([c1, side * a])
        y1 = L.to_model(q.m, fc, fp)[0]
        if np.sign(y1[0]) != np.sign(y0[0]) or np.sign(y1[1]) != np.sign(y0[1]):
            raise MorseSmaleError("boundary leaf leaves its quadrant; linearizing chart too coarse")
        t = np.linspace(0.0, 1.0, samples + 1)[:, None]
        y = y0 * (y1 / y0) ** t
        cc, xx = L.from_model(q.m, y)
        xx[-1] = fp[0]
        cc[-1] = fc[0]
        # carry the segment along the separatrix into the basin component of sink.base
        for _ in range(MAX_STEPS):
            hit = None
            for j in range(q.m_omega):
                c2, x2 = step(q.m, cc, xx, j, strict=False)
                if np.all(annulus_step(q, c2, x2)[1]):
                    hit = (c2, x2)
                    break
            if hit is not None:
                cc, xx = hit
                break
            cc, xx = step(q.m, cc, xx, sep.period, strict=False)
        else:
            raise NotInBasin(f"boundary of {sep.id} does not reach the basin of sink {q.sink.id}")
        out.append(_curve_from_samples(q, f"{sep.id}:boundary{'+' if c1 > 0 else '-'}", cc, xx))
    return out[0], out[1]
