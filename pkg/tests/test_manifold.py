from __future__ import annotations

import csv
import io
from dataclasses import replace

import numpy as np
import pytest

from morsesmale.canonical import build_linearizing_chart
from morsesmale.catalog import CATALOG, canonical_saddle_map, saddle_sink_map, triple_saddle_map
from morsesmale.errors import NoInverse, NotASaddle, TooShort
from morsesmale.manifold import (SEPARATRIX_CSV_HEADER, distance_to_polyline, grow_separatrix,
                                 invariance_residual, separatrices_csv)
from morsesmale.periodic import find_periodic_points
from morsesmale.surface import step


@pytest.mark.parametrize("nu", [1, -1])
@pytest.mark.parametrize("stability,side", [("unstable", "+"), ("unstable", "-"), ("stable", "+"), ("stable", "-")])
def test_linear_model_axes_recovered(nu, stability, side):
    m = canonical_saddle_map(nu)
    (o,) = find_periodic_points(m, 1, 16)
    s = grow_separatrix(m, o, stability, side, 2.0)
    off_axis = s.xy[:, 0] if stability == "unstable" else s.xy[:, 1]
    along = s.xy[:, 1] if stability == "unstable" else s.xy[:, 0]
    assert np.max(np.abs(off_axis)) < 1e-9
    sgn = 1.0 if side == "+" else -1.0
    assert np.all(sgn * along > 0)
    assert s.period == (1 if nu == 1 else 2)
    assert s.invariance_residual < 1e-12
    assert s.stop_reason == "budget" and s.truncated
    assert np.isclose(s.arclength(m)[-1], 2.0)


def test_tau_parametrization_is_shift_equivariant():
    m = triple_saddle_map()
    o = next(o for o in find_periodic_points(m, 3, 32) if o.kind == "saddle")
    s = grow_separatrix(m, o, "unstable", "+", 1.5)
    tau = np.linspace(0.2, 1.6, 9)
    c0, x0 = s.points_at(m, tau)
    c1, x1 = step(m, c0, x0, s.period)
    c2, x2 = s.points_at(m, tau + 1)
    assert np.allclose(x1, x2, atol=1e-12)
    # seed parameter choice does not matter
    c3, x3 = s.points_at(m, tau + 1, np.ceil(tau + 1).astype(int) - 1)
    assert np.allclose(x2, x3)


def test_polyline_stays_on_manifold_between_vertices():
    m = saddle_sink_map()
    o = next(o for o in find_periodic_points(m, 1, 24) if o.kind == "saddle")
    s = grow_separatrix(m, o, "unstable", "+", 3.0)
    mid = 0.5 * (s.tau[1:] + s.tau[:-1])
    c, x = s.points_at(m, mid)
    assert np.max(distance_to_polyline(m, s, c, x)) < 1e-4


def test_unstable_branches_stop_in_sink_boxes():
    m = saddle_sink_map()
    orbits = find_periodic_points(m, 1, 24)
    sinks = [build_linearizing_chart(m, o) for o in orbits if o.kind == "sink"]
    saddle = next(o for o in orbits if o.kind == "saddle")
    for side in "+-":
        s = grow_separatrix(m, saddle, "unstable", side, 3.0, sinks)
        assert s.stop_reason == "box"
        sink = next(o for o in orbits if o.id == s.stop_orbit)
        assert np.sign(sink.base.coords[1]) == (1 if side == "+" else -1)
        assert sinks[0].in_box(m, s.charts[-1:], s.xy[-1:])[0] or sinks[1].in_box(m, s.charts[-1:], s.xy[-1:])[0]


def test_residual_needs_two_domains_and_inverse_needed_for_stable():
    m = canonical_saddle_map(1)
    (o,) = find_periodic_points(m, 1, 16)
    short = grow_separatrix(m, o, "unstable", "+", 1e-5)
    assert np.isnan(short.invariance_residual)
    with pytest.raises(TooShort):
        invariance_residual(m, short)
    with pytest.raises(NoInverse):
        grow_separatrix(replace(m, inverse=None), o, "stable", "+", 1.0)
    with pytest.raises(ValueError):
        grow_separatrix(m, o, "neutral", "+", 1.0)


def test_sinks_have_no_separatrices():
    m = CATALOG["north-south-sphere"].build()
    sink = next(o for o in find_periodic_points(m, 1, 16) if o.kind == "sink")
    with pytest.raises(NotASaddle):
        grow_separatrix(m, sink, "unstable", "+", 1.0)


def test_torus_branches_wrap_and_stay_invariant(report):
    r = report("nonorientable-chain")
    for s in r.separatrices:
        assert s.invariance_residual < 1e-6
        assert np.all((s.xy >= 0) & (s.xy < 1))


def test_csv_layout():
    m = canonical_saddle_map(1)
    (o,) = find_periodic_points(m, 1, 16)
    seps = [grow_separatrix(m, o, "unstable", sd, 0.5) for sd in "+-"]
    rows = list(csv.reader(io.StringIO(separatrices_csv(seps))))
    assert tuple(rows[0]) == SEPARATRIX_CSV_HEADER
    assert len(rows) == 1 + sum(s.n_vertices for s in seps)
    assert rows[1][0] == "0u+" and rows[1][1] == "0"
    assert float(rows[1][4]) == seps[0].xy[0, 1]
