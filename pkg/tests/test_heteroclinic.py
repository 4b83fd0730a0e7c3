from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morsesmale import heteroclinic as het
from morsesmale.catalog import canonical_saddle_map
from morsesmale.errors import MorseSmaleError, TangencyDetected
from morsesmale.heteroclinic import (classify_orientability, default_k_max, detect_intersections, orbit_image,
                                     polyline_crossings)
from morsesmale.manifold import grow_separatrix
from morsesmale.periodic import find_periodic_points
from morsesmale.surface import step


def _sep_pairs(r):
    us = [s for s in r.separatrices if s.stability == "unstable"]
    ss = [s for s in r.separatrices if s.stability == "stable"]
    return [(a, b) for a in us for b in ss if a.owner.id != b.owner.id]


def _locations(m, su, raw):
    seg = np.array([c[0] for c in raw], dtype=int)
    s = np.array([c[2] for c in raw])
    d = het._seg_vectors(m, su.charts, su.xy)[seg]
    return su.xy[seg] + s[:, None] * d


@pytest.mark.parametrize("name", ["orientable-two-saddle", "gradient-torus-4pt", "saddle-sink-plane"])
def test_sweep_matches_brute_force(report, name):
    r = report(name)
    for su, ss in _sep_pairs(r):
        a = polyline_crossings(r.m, su, ss, "sweep")
        b = polyline_crossings(r.m, su, ss, "brute")
        assert len(a) == len(b)
        if a:
            assert [c[:2] for c in a] == [c[:2] for c in b]
            assert np.max(np.abs(_locations(r.m, su, a) - _locations(r.m, su, b))) <= 1e-9


def _polyline_sep(template, xy):
    return replace(template, xy=np.asarray(xy, dtype=float), charts=np.zeros(len(xy), dtype=int),
                   tau=np.linspace(0, 1, len(xy)))


walk = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=40)


@settings(max_examples=60, deadline=None)
@given(walk, walk)
def test_sweep_matches_brute_force_on_random_polylines(pa, pb):
    m = canonical_saddle_map(1)
    (o,) = find_periodic_points(m, 1, 16)
    t = grow_separatrix(m, o, "unstable", "+", 0.1)
    su = _polyline_sep(t, np.cumsum(pa, axis=0))
    ss = _polyline_sep(replace(t, stability="stable"), np.cumsum(pb, axis=0))
    assert polyline_crossings(m, su, ss, "sweep") == polyline_crossings(m, su, ss, "brute")


def test_refined_points_lie_on_both_manifolds(report):
    r = report("orientable-two-saddle")
    pts = r.points
    assert pts
    for p in pts:
        assert p.refine_residual < 1e-10
        assert np.linalg.norm(r.m.surface.delta(p.location.array, p.polyline_location.array)) < 1e-3
        assert p.sign in (1, -1)


@pytest.mark.parametrize("name", ["orientable-two-saddle", "nonorientable-chain"])
def test_sign_is_constant_along_each_heteroclinic_orbit(report, name):
    r = report(name)
    for pair in r.pairs:
        signs: dict[int, set] = {}
        for p in pair.points:
            signs.setdefault(p.orbit_id, set()).add(p.sign)
        assert all(len(v) == 1 for v in signs.values())
        assert [rep.orbit_id for rep in pair.reps] == list(range(len(pair.reps)))


def test_orbit_image_agrees_with_iteration(report):
    r = report("orientable-two-saddle")
    pair = r.pairs[0]
    p = pair.points[0]
    for k in (1, 2, -1, -2):
        img = orbit_image(r.m, pair.unstable, pair.stable, p, k)
        c, x = step(r.m, np.array([p.location.chart]), p.location.array[None], k)
        assert np.linalg.norm(r.m.surface.delta(img, x[0])) < 1e-7


def test_dedup_merges_points_of_one_orbit(report):
    r = report("orientable-two-saddle")
    (pair,) = r.pairs
    assert len(pair.reps) == 1 and len(pair.points) > 1
    assert {p.orbit_id for p in pair.points} == {0}


def test_tangency_is_flagged(report, monkeypatch):
    r = report("orientable-two-saddle")
    pair = r.pairs[0]
    monkeypatch.setattr(het, "TANGENCY_TOL", 2.0)
    with pytest.raises(TangencyDetected):
        detect_intersections(r.m, pair.unstable, pair.stable)


def test_argument_checks(report):
    r = report("orientable-two-saddle")
    u = next(s for s in r.separatrices if s.stability == "unstable")
    s_same = next(s for s in r.separatrices if s.stability == "stable" and s.owner.id == u.owner.id)
    with pytest.raises(MorseSmaleError):
        detect_intersections(r.m, u, s_same)
    with pytest.raises(ValueError):
        detect_intersections(r.m, s_same, u)


def test_orientability_classes():
    assert classify_orientability([]) == "vacuous"
    p = type("P", (), {"sign": 1})
    q = type("Q", (), {"sign": -1})
    z = type("Z", (), {"sign": 0})
    assert classify_orientability([p, p]) == "orientable"
    assert classify_orientability([q]) == "orientable"
    assert classify_orientability([p, q]) == "non-orientable"
    with pytest.raises(ValueError):
        classify_orientability([p, z])
    assert default_k_max(2, 3.0) == 18
