"""Heteroclinic points: transversal crossings of stable and unstable separatrices.

Crossings are first located exactly on the two polylines (segment against
segment), then refined onto the true manifolds by Newton iteration in the
two global manifold parameters.  Frames are the manifold tangents pointing
toward the image of the point under the separatrix period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import MorseSmaleError, TangencyDetected
from .manifold import Separatrix, _seg_vectors
from .surface import MapSpec, SurfacePoint, frame_sign

TANGENCY_TOL = 1e-8
REFINE_TOL = 1e-12
REFINE_MAX_ITER = 30
TAU_FD = 1e-7
ORBIT_MATCH_TOL = 1e-8
OFFSETS_TORUS = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]


@dataclass(frozen=True)
class HeteroclinicPoint:
    location: SurfacePoint
    polyline_location: SurfacePoint
    from_saddle: int          # owner of W^u
    to_saddle: int            # owner of W^s
    unstable_id: str
    stable_id: str
    tau_u: float
    tau_s: float
    v_u: tuple[float, float]
    v_s: tuple[float, float]
    sign: int
    segment_u: int
    segment_s: int
    refine_residual: float
    orbit_id: int = -1
    extras: dict = field(default_factory=dict, compare=False)


# -- polyline crossings ------------------------------------------------------

@dataclass(frozen=True)
class _Segments:
    start: np.ndarray   # (n, 2)
    vec: np.ndarray     # (n, 2)
    chart: np.ndarray   # (n,)
    index: np.ndarray   # segment index in the source polyline

    def bbox(self):
        end = self.start + self.vec
        return np.minimum(self.start, end), np.maximum(self.start, end)


def _segments(m: MapSpec, sep: Separatrix) -> _Segments:
    s = m.surface
    xy, charts = sep.xy, sep.charts
    if s.kind == "sphere":
        start = xy[:-1].copy()
        vec = _seg_vectors(m, charts, xy)
        return _Segments(start, vec, charts[:-1].copy(), np.arange(len(vec)))
    vec = _seg_vectors(m, charts, xy)
    return _Segments(xy[:-1].copy(), vec, charts[:-1].copy(), np.arange(len(vec)))


def _translates(m: MapSpec, seg: _Segments) -> tuple[_Segments, np.ndarray]:
    if m.surface.kind != "torus":
        return seg, np.zeros(len(seg.index), dtype=int)
    parts, offs = [], []
    for k, (i, j) in enumerate(OFFSETS_TORUS):
        parts.append(seg.start + np.array([i, j], dtype=float))
        offs.append(np.full(len(seg.index), k))
    n = len(OFFSETS_TORUS)
    return (_Segments(np.concatenate(parts), np.tile(seg.vec, (n, 1)), np.tile(seg.chart, n), np.tile(seg.index, n)),
            np.concatenate(offs))


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _crossing_params(A: _Segments, B: _Segments, ia: np.ndarray, ib: np.ndarray):
    """Exact crossing test on candidate pairs; half-open on both segments."""
    p, d = A.start[ia], A.vec[ia]
    q, e = B.start[ib], B.vec[ib]
    den = _cross2(d, e)
    w = q - p
    with np.errstate(divide="ignore", invalid="ignore"):
        s = _cross2(w, e) / den
        u = _cross2(w, d) / den
    ok = (den != 0) & (A.chart[ia] == B.chart[ib]) & (s >= 0) & (s < 1) & (u >= 0) & (u < 1)
    return ok, s, u


def _pairs_bruteforce(A: _Segments, B: _Segments):
    """All segment pairs, evaluated as dense blocks with the same arithmetic as :func:`_crossing_params`."""
    na, nb = len(A.index), len(B.index)
    out = ([], [], [], [])
    chunk = max(1, 4_000_000 // max(nb, 1))
    e = B.vec
    for lo in range(0, na, chunk):
        hi = min(na, lo + chunk)
        p, d = A.start[lo:hi, None, :], A.vec[lo:hi, None, :]
        w = B.start[None, :, :] - p
        den = _cross2(d, e[None])
        with np.errstate(divide="ignore", invalid="ignore"):
            s = _cross2(w, e[None]) / den
            u = _cross2(w, d) / den
        ok = ((den != 0) & (A.chart[lo:hi, None] == B.chart[None, :])
              & (s >= 0) & (s < 1) & (u >= 0) & (u < 1))
        ia, ib = np.nonzero(ok)
        out[0].append(ia + lo)
        out[1].append(ib)
        out[2].append(s[ok])
        out[3].append(u[ok])
    if not out[0]:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0), np.zeros(0)
    return tuple(np.concatenate(o) for o in out)


def _pairs_sweep(A: _Segments, B: _Segments):
    """Sweep along x: each A segment meets only B segments whose x-interval overlaps its own."""
    amin, amax = A.bbox()
    bmin, bmax = B.bbox()
    order = np.argsort(bmin[:, 0], kind="stable")
    bx0 = bmin[order, 0]
    width = float(np.max(bmax[:, 0] - bmin[:, 0])) if len(order) else 0.0
    lo = np.searchsorted(bx0, amin[:, 0] - width, side="left")
    hi = np.searchsorted(bx0, amax[:, 0], side="right")
    counts = hi - lo
    ia = np.repeat(np.arange(len(amin)), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    ib = order[np.repeat(lo, counts) + offs]
    keep = ((bmax[ib, 0] >= amin[ia, 0]) & (bmin[ib, 1] <= amax[ia, 1]) & (bmax[ib, 1] >= amin[ia, 1]))
    ia, ib = ia[keep], ib[keep]
    ok, s, u = _crossing_params(A, B, ia, ib)
    return ia[ok], ib[ok], s[ok], u[ok]


def polyline_crossings(m: MapSpec, su: Separatrix, ss: Separatrix, method: str = "sweep"):
    """Raw crossings ``(seg_u, seg_s, s, u, offset)`` sorted by ``(seg_u, s)``."""
    A = _segments(m, su)
    B, offs = _translates(m, _segments(m, ss))
    if len(A.index) == 0 or len(B.index) == 0:
        return []
    fn = _pairs_sweep if method == "sweep" else _pairs_bruteforce
    ia, ib, s, u = fn(A, B)
    out = sorted(zip(A.index[ia].tolist(), B.index[ib].tolist(), s.tolist(), u.tolist(), offs[ib].tolist()),
                 key=lambda r: (r[0], r[2], r[1], r[3]))
    return out


# -- refinement onto the manifolds -------------------------------------------

def _in_chart(m: MapSpec, charts, xy, chart):
    if m.surface.kind != "sphere":
        return xy
    chart = np.broadcast_to(np.asarray(chart), (len(xy),))
    out = xy.copy()
    for c in (0, 1):
        mask = chart == c
        if np.any(mask):
            out[mask] = m.surface.to_chart(charts[mask], xy[mask], c)
    return out


def _eval_with_tangent(m, sep, tau, n, chart):
    """Points and parameter derivatives of ``sep`` at ``tau`` (batched, one pass through the map)."""
    h = TAU_FD
    k = len(tau)
    taus = np.concatenate([tau, tau - h, tau + h])
    ns = np.tile(n, 3)
    c, x = sep.points_at(m, taus, ns)
    x = _in_chart(m, c, x, np.tile(chart, 3))
    p, a, b = x[:k], x[k:2 * k], x[2 * k:]
    return p, m.surface.delta(a, b) / (2 * h)


def refine_crossings(m: MapSpec, su: Separatrix, ss: Separatrix, tau_u, tau_s, chart):
    """Batched Newton on ``P_u(tau_u) = P_s(tau_s)``.

    Returns ``(points, tau_u, tau_s, residuals, n_u, n_s, t_u, t_s)`` where
    ``t_u``, ``t_s`` are the parameter derivatives at the solution.
    """
    tau_u = np.array(tau_u, dtype=float)
    tau_s = np.array(tau_s, dtype=float)
    chart = np.asarray(chart, dtype=int)
    nu = np.maximum(np.ceil(tau_u) - 1, 0).astype(int)
    ns = np.maximum(np.ceil(tau_s) - 1, 0).astype(int)
    s = m.surface
    active = np.ones(len(tau_u), dtype=bool)
    res = np.full(len(tau_u), np.inf)
    for _ in range(REFINE_MAX_ITER):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        pu, tu = _eval_with_tangent(m, su, tau_u[idx], nu[idx], chart[idx])
        ps, ts = _eval_with_tangent(m, ss, tau_s[idx], ns[idx], chart[idx])
        G = s.delta(ps, pu)
        r = np.max(np.abs(G), axis=1)
        res[idx] = r
        done = ~(r >= REFINE_TOL)
        active[idx[done]] = False
        go = ~done
        if not np.any(go):
            break
        J = np.stack([tu[go], -ts[go]], axis=-1)
        ok = np.abs(np.linalg.det(J)) > 0
        dt = np.zeros((int(go.sum()), 2))
        dt[ok] = np.linalg.solve(J[ok], -G[go][ok][..., None])[..., 0]
        active[idx[go][~ok]] = False
        tau_u[idx[go]] += dt[:, 0]
        tau_s[idx[go]] += dt[:, 1]
    pu, tu = _eval_with_tangent(m, su, tau_u, nu, chart)
    ps, ts = _eval_with_tangent(m, ss, tau_s, ns, chart)
    res = np.max(np.abs(s.delta(ps, pu)), axis=1)
    return pu, tau_u, tau_s, res, nu, ns, tu, ts


def refine_crossing(m: MapSpec, su: Separatrix, ss: Separatrix, tau_u: float, tau_s: float, chart: int):
    """Single-crossing form of :func:`refine_crossings`; returns ``(point, tau_u, tau_s, residual, n_u, n_s)``."""
    pu, tu, ts, res, nu, ns, _, _ = refine_crossings(m, su, ss, [tau_u], [tau_s], [chart])
    return pu[0], float(tu[0]), float(ts[0]), float(res[0]), int(nu[0]), int(ns[0])


def detect_intersections(m: MapSpec, su: Separatrix, ss: Separatrix, method: str = "sweep") -> list[HeteroclinicPoint]:
    if su.stability != "unstable" or ss.stability != "stable":
        raise ValueError("need an unstable and a stable separatrix")
    if su.owner.id == ss.owner.id:
        raise MorseSmaleError("homoclinic pairs (same saddle orbit) are out of scope")
    s = m.surface
    raw = polyline_crossings(m, su, ss, method)
    if not raw:
        return []
    seg_u = np.array([r[0] for r in raw])
    seg_s = np.array([r[1] for r in raw])
    a = np.array([r[2] for r in raw])
    b = np.array([r[3] for r in raw])
    chart = su.charts[seg_u].astype(int)
    d_u = _seg_vectors(m, su.charts, su.xy)[seg_u]
    pc, px = s.normalize(chart, su.xy[seg_u] + a[:, None] * d_u)
    t_u0 = su.tau[seg_u] + a * (su.tau[seg_u + 1] - su.tau[seg_u])
    t_s0 = ss.tau[seg_s] + b * (ss.tau[seg_s + 1] - ss.tau[seg_s])
    loc, t_u, t_s, res, _, _, du, ds = refine_crossings(m, su, ss, t_u0, t_s0, chart)
    vu = du / np.linalg.norm(du, axis=1, keepdims=True)
    vs = -ds / np.linalg.norm(ds, axis=1, keepdims=True)
    det = vu[:, 0] * vs[:, 1] - vu[:, 1] * vs[:, 0]
    lc, lx = s.normalize(chart, loc)
    out = []
    for i in range(len(raw)):
        where = SurfacePoint(int(lc[i]), (float(lx[i, 0]), float(lx[i, 1])))
        if not abs(det[i]) >= TANGENCY_TOL:
            raise TangencyDetected(f"W^u {su.id} and W^s {ss.id} are tangent near {where.coords} (det={det[i]:.3g})")
        sign = frame_sign(s, SurfacePoint(int(chart[i]), tuple(loc[i])), vu[i], vs[i])
        out.append(HeteroclinicPoint(
            where, SurfacePoint(int(pc[i]), (float(px[i, 0]), float(px[i, 1]))),
            su.owner.id, ss.owner.id, su.id, ss.id, float(t_u[i]), float(t_s[i]),
            (float(vu[i, 0]), float(vu[i, 1])), (float(vs[i, 0]), float(vs[i, 1])), sign,
            int(seg_u[i]), int(seg_s[i]), float(res[i])))
    return out


# -- orbit identification ----------------------------------------------------

def orbit_image(m: MapSpec, su: Separatrix, ss: Separatrix, x: HeteroclinicPoint, k: int) -> Optional[np.ndarray]:
    """``f^k(x)`` computed along the well-conditioned manifold parametrization.

    Forward images run along ``W^u`` (``tau_u`` grows by ``k/m_u``), backward
    images along ``W^s``.  Returns ``None`` unless ``k`` preserves both
    separatrices.
    """
    if k % su.period or k % ss.period:
        return None
    if k >= 0:
        c, p = su.points_at(m, np.array([x.tau_u + k / su.period]))
    else:
        c, p = ss.points_at(m, np.array([x.tau_s - k / ss.period]))
    return _in_chart(m, c, p, x.location.chart)[0]


def dedup_by_orbit(pts: list[HeteroclinicPoint], m: MapSpec, su: Separatrix, ss: Separatrix,
                   k_max: int) -> list[HeteroclinicPoint]:
    """Label every point with its orbit class; returns one representative per class.

    Two points are identified when ``f^k(x) = y`` within 1e-8 for some
    ``|k| <= k_max``.  The representative is the one with the smallest
    ``tau_s`` (nearest the stable saddle along its separatrix).
    """
    if not pts:
        return []
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    step_k = math.lcm(su.period, ss.period)
    ks = [k for k in range(-(k_max // step_k) * step_k, k_max + 1, step_k) if k != 0]
    locs = np.array([p.location.array for p in pts])
    chart = np.array([p.location.chart for p in pts])
    fwd = [k for k in ks if k > 0]
    bwd = [k for k in ks if k < 0]
    src, imgs = [], []
    if fwd:
        tau = np.concatenate([[p.tau_u + k / su.period for p in pts] for k in fwd])
        c, x = su.points_at(m, tau)
        imgs.append(_in_chart(m, c, x, np.tile(chart, len(fwd))))
        src.append(np.tile(np.arange(n), len(fwd)))
    if bwd:
        tau = np.concatenate([[p.tau_s - k / ss.period for p in pts] for k in bwd])
        c, x = ss.points_at(m, tau)
        imgs.append(_in_chart(m, c, x, np.tile(chart, len(bwd))))
        src.append(np.tile(np.arange(n), len(bwd)))
    if imgs:
        img = np.concatenate(imgs)
        src_i = np.concatenate(src)
        d = np.linalg.norm(m.surface.delta(img[:, None, :], locs[None, :, :]), axis=-1)
        same_chart = chart[src_i][:, None] == chart[None, :]
        hit_r, hit_c = np.nonzero(np.isfinite(d) & (d < ORBIT_MATCH_TOL) & same_chart)
        for r, j in sorted(zip(src_i[hit_r].tolist(), hit_c.tolist())):
            if r != j:
                a_, b_ = find(r), find(j)
                if a_ != b_:
                    parent[max(a_, b_)] = min(a_, b_)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    reps = []
    for members in groups.values():
        best = min(members, key=lambda i: (pts[i].tau_s, pts[i].tau_u))
        reps.append((best, members))
    reps.sort(key=lambda r: (pts[r[0]].tau_s, pts[r[0]].tau_u))
    labelled = list(pts)
    out = []
    for cls, (best, members) in enumerate(reps):
        for i in members:
            labelled[i] = replace(pts[i], orbit_id=cls)
        out.append(labelled[best])
    pts[:] = labelled
    return out


def classify_orientability(all_pts: list[HeteroclinicPoint]) -> str:
    if not all_pts:
        return "vacuous"
    signs = {p.sign for p in all_pts}
    if 0 in signs:
        raise ValueError("heteroclinic point with zero sign")
    return "orientable" if len(signs) == 1 else "non-orientable"


def default_k_max(max_separatrix_period: int, arclength_budget: float) -> int:
    return 3 * max_separatrix_period * int(math.ceil(arclength_budget))
