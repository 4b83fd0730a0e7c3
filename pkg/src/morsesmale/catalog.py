"""Built-in example maps.

The torus examples are skew products of circle maps
``g(x) = x - eps sin(2 pi n x) / (2 pi n)`` (sinks at ``k/n``, sources
halfway between) composed with shears supported away from the fixed points.
The shears create the heteroclinic crossings; the fixed point set of the
product is left untouched.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .surface import MapSpec, SurfaceModel

TWO_PI = 2.0 * np.pi


# -- building blocks -----------------------------------------------------------

def _e(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a, b = _e(t), _e(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def bump(t, lo: float, hi: float):
    """Smooth bump supported on ``(lo, hi)`` with peak 1 at the midpoint."""
    w = 0.5 * (hi - lo)
    return smoothstep((t - lo) / w) * smoothstep((hi - t) / w)


def circle_map(eps: float, n: int):
    k = TWO_PI * n

    def g(x):
        return x - eps * np.sin(k * x) / k

    def dg(x):
        return 1.0 - eps * np.cos(k * x)

    def g_inv(y):
        x = np.array(y, dtype=float, copy=True)
        for _ in range(60):
            dx = (g(x) - y) / dg(x)
            x = x - dx
            if np.max(np.abs(dx), initial=0.0) < 1e-15:
                break
        return x

    return g, dg, g_inv


def _scalar_real_newton(g, dg, y):
    x = np.array(y, dtype=float, copy=True)
    for _ in range(80):
        dx = (g(x) - y) / dg(x)
        x = x - dx
        if np.max(np.abs(dx), initial=0.0) < 1e-15:
            break
    return x


# -- plane maps ----------------------------------------------------------------

def canonical_saddle_map(nu: int) -> MapSpec:
    D = np.diag([nu * 0.5, nu * 2.0])
    Dinv = np.diag([nu * 2.0, nu * 0.5])

    def fwd(chart, xy):
        return xy @ D.T

    def inv(chart, xy):
        return xy @ Dinv.T

    def jac(chart, xy):
        return np.broadcast_to(D, (len(xy), 2, 2)).copy()

    name = "canonical-a1" if nu == 1 else "canonical-a-1"
    return MapSpec(name, SurfaceModel("plane"), fwd, inv, jac, {"nu": nu}, (-1.0, 1.0, -1.0, 1.0))


def saddle_sink_map() -> MapSpec:
    """``(x, y) -> (x/2, g(y))`` with a saddle at 0 feeding sinks at ``(0, +-1)``."""

    def g(y):
        return y + 0.5 * y * (1 - y * y) / (1 + y * y)

    def dg(y):
        y2 = y * y
        return 1.0 + 0.5 * (1 - 4 * y2 - y2 * y2) / (1 + y2) ** 2

    def fwd(chart, xy):
        return np.column_stack([0.5 * xy[:, 0], g(xy[:, 1])])

    def inv(chart, xy):
        return np.column_stack([2.0 * xy[:, 0], _scalar_real_newton(g, dg, xy[:, 1])])

    def jac(chart, xy):
        J = np.zeros((len(xy), 2, 2))
        J[:, 0, 0] = 0.5
        J[:, 1, 1] = dg(xy[:, 1])
        return J

    return MapSpec("saddle-sink-plane", SurfaceModel("plane"), fwd, inv, jac, {}, (-1.6, 1.6, -1.6, 1.6))


def triple_saddle_map(c: float = 0.15, a: float = 1.5) -> MapSpec:
    """Rotation by a third of a turn composed with a radial sink/repeller.

    The invariant unit circle carries a period-3 saddle orbit whose inner
    unstable separatrices fall into the fixed sink at the origin.
    """

    def fwd(chart, xy):
        z = xy[:, 0] + 1j * xy[:, 1]
        u = np.abs(z) ** 2
        m = (0.5 + a * u) / (1 + (a - 0.5) * u)
        phase = TWO_PI / 3 - c * 2 * np.imag(z**3) / (1 + u**3)
        w = m * z * np.exp(1j * phase)
        return np.column_stack([w.real, w.imag])

    def inv(chart, xy):
        w = xy[:, 0] + 1j * xy[:, 1]
        # radial part: solve R(r) = |w| with R(r) = r m(r^2), monotone
        rho = np.abs(w)

        def R(r):
            u = r * r
            return r * (0.5 + a * u) / (1 + (a - 0.5) * u)

        def dR(r, h=1e-7):
            return (R(r + h) - R(r - h)) / (2 * h)

        r = _scalar_real_newton(R, lambda r: np.maximum(dR(r), 1e-3), rho)
        # angular part: solve theta + 2pi/3 - c s(r) sin(3 theta) = arg w
        s = 2 * r**3 / (1 + r**6)
        target = np.angle(w) - TWO_PI / 3
        th = target.copy()
        for _ in range(80):
            F = th - c * s * np.sin(3 * th) - target
            dth = F / (1 - 3 * c * s * np.cos(3 * th))
            th = th - dth
            if np.max(np.abs(dth), initial=0.0) < 1e-15:
                break
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    return MapSpec("triple-saddle-sink", SurfaceModel("plane"), fwd, inv, None,
                   {"c": c, "a": a}, (-1.4, 1.4, -1.4, 1.4))


# -- sphere --------------------------------------------------------------------

def north_south_map() -> MapSpec:
    def fwd(chart, xy):
        return xy * (0.5 if chart == 0 else 2.0)

    def inv(chart, xy):
        return xy * (2.0 if chart == 0 else 0.5)

    def jac(chart, xy):
        return np.broadcast_to(np.eye(2) * (0.5 if chart == 0 else 2.0), (len(xy), 2, 2)).copy()

    return MapSpec("north-south-sphere", SurfaceModel("sphere"), fwd, inv, jac, {}, (-1.0, 1.0, -1.0, 1.0))


# -- torus skew products -------------------------------------------------------

def _torus_map(name, g1, g2, kick, kick_inv, params) -> MapSpec:
    gx, _, gx_inv = g1
    gy, _, gy_inv = g2

    def fwd(chart, xy):
        p = np.column_stack([gx(xy[:, 0]), gy(xy[:, 1])])
        return kick(p)

    def inv(chart, xy):
        p = kick_inv(np.asarray(xy, dtype=float))
        return np.column_stack([gx_inv(p[:, 0]), gy_inv(p[:, 1])])

    return MapSpec(name, SurfaceModel("torus"), fwd, inv, None, params, (0.0, 1.0, 0.0, 1.0))


def gradient_torus_map(eps: float = 0.5) -> MapSpec:
    g = circle_map(eps, 1)
    ident = lambda p: p  # noqa: E731
    return _torus_map("gradient-torus-4pt", g, g, ident, ident, {"eps": eps})


def twist_torus_map(eps: float = 0.5, band=(0.2, 0.3)) -> MapSpec:
    """Gradient torus map followed by a Dehn twist supported in a horizontal band."""
    g = circle_map(eps, 1)
    lo, hi = band

    def tau(y):
        return smoothstep((np.mod(y, 1.0) - lo) / (hi - lo))

    def kick(p):
        return np.column_stack([p[:, 0] + tau(p[:, 1]), p[:, 1]])

    def kick_inv(p):
        return np.column_stack([p[:, 0] - tau(p[:, 1]), p[:, 1]])

    return _torus_map("orientable-two-saddle", g, g, kick, kick_inv, {"eps": eps, "band": list(band)})


def chain_torus_map(eps: float = 0.5, A: float = 0.35, B: float = 0.35,
                    y_band=(0.62, 0.66), x_band=(0.36, 0.40)) -> MapSpec:
    """Eight-saddle gradient torus map with two bump shears.

    A rightward shear in ``y_band`` links the saddle (0, 3/4) to (1/4, 1/2);
    a downward shear in ``x_band`` links (1/4, 1/2) to (1/2, 1/4).
    """
    g = circle_map(eps, 2)

    def phi(y):
        return bump(np.mod(y, 1.0), *y_band)

    def chi(x):
        return bump(np.mod(x, 1.0), *x_band)

    def kick(p):
        x = p[:, 0] + A * phi(p[:, 1])
        y = p[:, 1] - B * chi(x)
        return np.column_stack([x, y])

    def kick_inv(p):
        y = p[:, 1] + B * chi(p[:, 0])
        x = p[:, 0] - A * phi(y)
        return np.column_stack([x, y])

    return _torus_map("nonorientable-chain", g, g, kick, kick_inv,
                      {"eps": eps, "A": A, "B": B, "y_band": list(y_band), "x_band": list(x_band)})


# -- catalog -------------------------------------------------------------------

@dataclass(frozen=True)
class ExampleCatalogEntry:
    name: str
    description: str
    build: Callable[[], MapSpec]
    expected: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)


CATALOG: dict[str, ExampleCatalogEntry] = {
    e.name: e
    for e in [
        ExampleCatalogEntry(
            "canonical-a1", "linear saddle (x1/2, 2 x2) on the plane",
            lambda: canonical_saddle_map(1),
            {"orientability": "vacuous", "beh": 0, "counts": {"saddle": 1}},
            {"max_period": 2, "grid": 16, "budget": 2.0},
        ),
        ExampleCatalogEntry(
            "canonical-a-1", "linear saddle (-x1/2, -2 x2) on the plane",
            lambda: canonical_saddle_map(-1),
            {"orientability": "vacuous", "beh": 0, "counts": {"saddle": 1}},
            {"max_period": 2, "grid": 16, "budget": 2.0},
        ),
        ExampleCatalogEntry(
            "north-south-sphere", "z -> z/2 on the Riemann sphere: one sink, one source",
            north_south_map,
            {"orientability": "vacuous", "beh": 0, "counts": {"sink": 1, "source": 1}},
            {"max_period": 2, "grid": 16, "budget": 2.0},
        ),
        ExampleCatalogEntry(
            "gradient-torus-4pt", "product of two gradient circle maps; no saddle connections",
            gradient_torus_map,
            {"orientability": "vacuous", "beh": 0, "counts": {"sink": 1, "saddle": 2, "source": 1}},
            {"max_period": 2, "grid": 24, "budget": 3.0},
        ),
        ExampleCatalogEntry(
            "orientable-two-saddle", "gradient torus map followed by a Dehn twist in a band",
            twist_torus_map,
            {"orientability": "orientable", "beh": 1, "counts": {"sink": 1, "saddle": 2, "source": 1},
             "heteroclinic_orbits": 1},
            {"max_period": 2, "grid": 24, "budget": 3.0},
        ),
        ExampleCatalogEntry(
            "nonorientable-chain", "sixteen-point gradient torus map with two bump shears forming a saddle chain",
            chain_torus_map,
            {"orientability": "non-orientable", "beh": 2, "counts": {"sink": 4, "saddle": 8, "source": 4}},
            {"max_period": 2, "grid": 32, "budget": 3.0},
        ),
        ExampleCatalogEntry(
            "saddle-sink-plane", "saddle whose unstable separatrices fall into two sinks (m_gamma = m_omega = 1)",
            saddle_sink_map,
            {"orientability": "vacuous", "beh": 0, "counts": {"sink": 2, "saddle": 1}, "winding": 1},
            {"max_period": 2, "grid": 24, "budget": 3.0},
        ),
        ExampleCatalogEntry(
            "triple-saddle-sink", "period-3 saddle orbit feeding a fixed sink (m_gamma / m_omega = 3)",
            triple_saddle_map,
            {"orientability": "vacuous", "beh": 0, "counts": {"sink": 1, "saddle": 1, "source": 1}, "winding": 3},
            {"max_period": 3, "grid": 32, "budget": 3.0},
        ),
    ]
}


def get_entry(name: str) -> ExampleCatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; known: {', '.join(CATALOG)}") from None
