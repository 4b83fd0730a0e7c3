"""Hyperbolic periodic orbits: Newton search, classification, eigendata."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonHyperbolicOrbit, NotASaddle
from .surface import MapSpec, SurfaceModel, SurfacePoint, orbit_jacobian, step

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
MAX_HALVINGS = 12
DEDUP_RADIUS = 1e-6
PERIOD_TOL = 1e-9
HYPERBOLIC_MARGIN = 1e-6


@dataclass(frozen=True)
class PeriodicOrbit:
    id: int
    points: tuple[SurfacePoint, ...]
    kind: str
    eigenvalues: tuple[complex, complex]
    # per orbit point: (stable eigenvector, unstable eigenvector); saddles only
    eigenvectors: tuple[tuple[tuple[float, float], tuple[float, float]], ...] = ()
    nu: Optional[int] = None
    jacobian: tuple = field(default=(), compare=False, repr=False)

    @property
    def period(self) -> int:
        return len(self.points)

    @property
    def base(self) -> SurfacePoint:
        return self.points[0]

    @property
    def lam_s(self) -> float:
        return float(np.real(self.eigenvalues[0]))

    @property
    def lam_u(self) -> float:
        return float(np.real(self.eigenvalues[1]))

    @property
    def label(self) -> str:
        return f"{self.kind}{self.id}"

    def stable_vector(self, i: int = 0) -> np.ndarray:
        return np.array(self.eigenvectors[i][0])

    def unstable_vector(self, i: int = 0) -> np.ndarray:
        return np.array(self.eigenvectors[i][1])


def _orient(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    a = np.abs(v)
    k = 0 if a[0] >= a[1] - 1e-12 else 1
    return v if v[k] > 0 else -v


def _seed_grid(m: MapSpec, density: int) -> tuple[np.ndarray, np.ndarray]:
    s = m.surface
    if s.kind == "torus":
        boxes = [(0, (0.0, 1.0, 0.0, 1.0))]
    elif s.kind == "plane":
        boxes = [(0, m.search_box)]
    else:
        boxes = [(0, (-1.0, 1.0, -1.0, 1.0)), (1, (-1.0, 1.0, -1.0, 1.0))]
    charts, pts = [], []
    for chart, (x0, x1, y0, y1) in boxes:
        # cell centres, so torus seeds never sit on the identification seam
        gx = x0 + (np.arange(density) + 0.5) * (x1 - x0) / density
        gy = y0 + (np.arange(density) + 0.5) * (y1 - y0) / density
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        pts.append(np.column_stack([X.ravel(), Y.ravel()]))
        charts.append(np.full(X.size, chart))
    return np.concatenate(charts), np.concatenate(pts)


def _return_map(m: MapSpec, charts, xy, period):
    """``f^p(x) - x`` and ``D(f^p) - I`` expressed in the chart of ``x``."""
    c_n, xy_n, J = orbit_jacobian(m, charts, xy, period, strict=False)
    s = m.surface
    back = c_n != charts
    if np.any(back):
        T = s.transition_jacobian(0, 1, xy_n[back])
        J[back] = T @ J[back]
        xy_n = xy_n.copy()
        xy_n[back] = s.transition(0, 1, xy_n[back])
    return s.delta(xy, xy_n), J - np.eye(2)


def _newton(m: MapSpec, charts, xy, period):
    s = m.surface
    F, A = _return_map(m, charts, xy, period)
    res = np.linalg.norm(F, axis=1)
    alive = np.isfinite(res)
    for _ in range(NEWTON_MAX_ITER):
        todo = alive & (res >= NEWTON_TOL)
        if not np.any(todo):
            break
        idx = np.flatnonzero(todo)
        with np.errstate(all="ignore"):
            try:
                dx = np.linalg.solve(A[idx], -F[idx][..., None])[..., 0]
            except np.linalg.LinAlgError:
                dx = np.stack([_safe_solve(a, -f) for a, f in zip(A[idx], F[idx])])
        lam = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        for _h in range(MAX_HALVINGS):
            trial = xy[idx] + lam[:, None] * dx
            if s.kind == "sphere":
                # iterate in the seed's chart; the chart domain covers the overlap
                tc, tx = charts[idx], trial
            else:
                tc, tx = s.normalize(charts[idx], trial, strict=False)
            Ft, At = _return_map(m, tc, tx, period)
            rt = np.linalg.norm(Ft, axis=1)
            ok = np.isfinite(rt) & (rt < res[idx])
            accept = pending & ok
            if np.any(accept):
                a = idx[accept]
                xy[a], charts[a] = tx[accept], tc[accept]
                F[a], A[a], res[a] = Ft[accept], At[accept], rt[accept]
            pending &= ~ok
            if not np.any(pending):
                break
            lam[pending] *= 0.5
        stalled = idx[pending]
        alive[stalled] = False
    converged = alive & (res < NEWTON_TOL)
    charts, xy, res = charts[converged], xy[converged], res[converged]
    # polish: plain Newton steps kept only while the residual does not grow
    for _ in range(2):
        if len(xy) == 0:
            break
        F, A = _return_map(m, charts, xy, period)
        dx = np.stack([_safe_solve(a, -f) for a, f in zip(A, F)])
        trial = xy + dx
        if s.kind != "sphere":
            tc, trial = s.normalize(charts, trial, strict=False)
        else:
            tc = charts
        Ft, _ = _return_map(m, tc, trial, period)
        better = np.isfinite(Ft).all(axis=1) & (np.linalg.norm(Ft, axis=1) <= np.linalg.norm(F, axis=1))
        xy[better], charts[better] = trial[better], tc[better]
    return charts, xy


def _safe_solve(a, b):
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return np.full(2, np.nan)


def _canonical(s: SurfaceModel, chart: int, xy: np.ndarray) -> tuple[int, np.ndarray]:
    c, x = s.normalize(np.array([chart]), xy[None])
    x = x[0]
    if s.kind == "torus":
        x = np.where(1.0 - x < 1e-10, 0.0, x)
    return int(c[0]), x


def _same_point(s: SurfaceModel, a: SurfacePoint, b: SurfacePoint, tol: float) -> bool:
    if s.kind == "sphere" and a.chart != b.chart:
        # overlap test in chart of a
        bx = s.transition(b.chart, a.chart, b.array[None])[0]
        return float(np.linalg.norm(bx - a.array)) < tol
    return a.chart == b.chart and float(np.linalg.norm(s.delta(a.array, b.array))) < tol


def _minimal_period(m: MapSpec, chart: int, x: np.ndarray, p: int) -> int:
    s = m.surface
    pt = SurfacePoint(chart, (float(x[0]), float(x[1])))
    for d in range(1, p + 1):
        if p % d:
            continue
        c, y = step(m, np.array([chart]), x[None], d, strict=False)
        img = SurfacePoint(int(c[0]), (float(y[0, 0]), float(y[0, 1])))
        if np.all(np.isfinite(y)) and _same_point(s, pt, img, PERIOD_TOL):
            return d
    return p


def classify(eigs: np.ndarray) -> str:
    mods = np.abs(eigs)
    if np.any(np.abs(mods - 1.0) < HYPERBOLIC_MARGIN):
        raise NonHyperbolicOrbit(f"eigenvalue modulus within {HYPERBOLIC_MARGIN} of 1: {eigs}")
    if np.all(mods < 1):
        return "sink"
    if np.all(mods > 1):
        return "source"
    return "saddle"


def _build_orbit(m: MapSpec, chart: int, x: np.ndarray, period: int, oid: int) -> PeriodicOrbit:
    s = m.surface
    charts = [chart]
    pts = [x]
    c, y = np.array([chart]), x[None]
    for _ in range(period - 1):
        c, y = step(m, c, y, 1)
        charts.append(int(c[0]))
        pts.append(y[0].copy())
    canon = [_canonical(s, ci, xi) for ci, xi in zip(charts, pts)]
    start = min(range(period), key=lambda i: (canon[i][0], round(canon[i][1][0], 9), round(canon[i][1][1], 9)))
    canon = canon[start:] + canon[:start]
    points = tuple(SurfacePoint(ci, (float(xi[0]), float(xi[1]))) for ci, xi in canon)

    jacs = []
    for ci, xi in canon:
        _, J = _return_map(m, np.array([ci]), xi[None], period)
        jacs.append(J[0] + np.eye(2))
    eigs = np.linalg.eigvals(jacs[0])
    kind = classify(eigs)
    vecs = ()
    nu = None
    if kind == "saddle":
        order = np.argsort(np.abs(eigs))
        eigs = np.real(eigs[order])
        lam_s, lam_u = float(eigs[0]), float(eigs[1])
        if np.sign(lam_s) != np.sign(lam_u):
            raise NonHyperbolicOrbit(f"saddle eigenvalues of opposite sign {lam_s}, {lam_u}: map reverses orientation")
        per_point = []
        for J in jacs:
            w, V = np.linalg.eig(J)
            w = np.real(w)
            iu = int(np.argmax(np.abs(w)))
            vs, vu = _orient(np.real(V[:, 1 - iu])), _orient(np.real(V[:, iu]))
            per_point.append((tuple(map(float, vs)), tuple(map(float, vu))))
        vecs = tuple(per_point)
        nu = 1 if lam_u > 0 else -1
        eig_pair = (lam_s, lam_u)
    else:
        order = np.lexsort((np.imag(eigs), np.abs(eigs)))
        eigs = eigs[order]
        eig_pair = tuple(complex(e) if abs(np.imag(e)) > 1e-14 else float(np.real(e)) for e in eigs)
    return PeriodicOrbit(oid, points, kind, eig_pair, vecs, nu, tuple(map(lambda J: J.tolist(), jacs)))


def find_periodic_points(m: MapSpec, max_period: int, grid_density: int = 32) -> list[PeriodicOrbit]:
    """All hyperbolic periodic orbits of period <= ``max_period`` reached from a seed grid."""
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    if grid_density < 8:
        raise ValueError("grid_density must be >= 8")
    s = m.surface
    found: list[tuple[int, np.ndarray, int]] = []  # (chart, point, period)
    for p in range(1, max_period + 1):
        charts, xy = _seed_grid(m, grid_density)
        rc, rx = _newton(m, charts.copy(), xy.copy(), p)
        roots = sorted(
            (_canonical(s, int(c), x) for c, x in zip(rc, rx)),
            key=lambda t: (t[0], t[1][0], t[1][1]),
        )
        for c, x in roots:
            pt = SurfacePoint(c, (float(x[0]), float(x[1])))
            if any(_same_point(s, pt, SurfacePoint(fc, tuple(fx)), DEDUP_RADIUS) for fc, fx, _ in found):
                continue
            d = _minimal_period(m, c, x, p)
            # register the whole orbit so later roots on it are recognised
            oc, ox = np.array([c]), x[None]
            for _ in range(d):
                found.append((int(oc[0]), ox[0].copy(), -1))
                oc, ox = step(m, oc, ox, 1, strict=False)
            found[-d] = (found[-d][0], found[-d][1], d)
    reps = [(c, x, d) for c, x, d in found if d > 0]
    orbits = [_build_orbit(m, c, x, d, 0) for c, x, d in reps]
    orbits.sort(key=lambda o: (o.base.chart, round(o.base.coords[0], 9), round(o.base.coords[1], 9)))
    return [PeriodicOrbit(i, o.points, o.kind, o.eigenvalues, o.eigenvectors, o.nu, o.jacobian)
            for i, o in enumerate(orbits)]


def orientation_type(o: PeriodicOrbit) -> int:
    if o.kind != "saddle":
        raise NotASaddle(f"orbit {o.id} is a {o.kind}")
    return 1 if o.lam_u > 0 else -1


def separatrix_period(o: PeriodicOrbit, branch: str) -> int:
    """Smallest ``mu`` with ``f^mu`` fixing the separatrix ``branch`` in {u+, u-, s+, s-}."""
    if o.kind != "saddle":
        raise NotASaddle(f"orbit {o.id} is a {o.kind}")
    if branch not in ("u+", "u-", "s+", "s-"):
        raise ValueError(f"unknown branch {branch!r}")
    lam = o.lam_u if branch[0] == "u" else o.lam_s
    return o.period if lam > 0 else 2 * o.period
