"""End-to-end analysis of one map: periodic data, separatrices, heteroclinic
signs, the order graph and the orbit-space projections, plus report emission.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .canonical import LinearizingChart, build_linearizing_chart
from .catalog import CATALOG, get_entry
from .config import load_config
from .errors import MorseSmaleError, NonOrientationPreserving, NotTrapping
from .heteroclinic import (HeteroclinicPoint, classify_orientability, dedup_by_orbit, default_k_max,
                           detect_intersections)
from .manifold import Separatrix, grow_separatrix, separatrices_csv
from .order import OrderGraph, build_order_graph, to_dot
from .periodic import PeriodicOrbit, _seed_grid, find_periodic_points, orientation_type
from .quotient import (ProjectedCurve, QuotientChart, build_sink_quotient, project_curve,
                       project_neighborhood_boundary)
from .surface import MapSpec, jacobians, newton_inverse
from .svg import phase_portrait_svg, quotient_svg

DEFAULTS = {"max_period": 2, "grid": 32, "budget": 3.0}
SIG_DIGITS = 12
QUOTIENT_RADII = (1.0, 0.5, 0.25, 0.125)
ALL_FORMATS = ("json", "csv", "dot", "svg")


@dataclass
class AnalysisOptions:
    max_period: int = DEFAULTS["max_period"]
    grid: int = DEFAULTS["grid"]
    budget: float = DEFAULTS["budget"]
    method: str = "sweep"
    # fault injection: global indices of heteroclinic points whose sign is inverted
    flip: tuple[int, ...] = ()


@dataclass
class HeteroclinicPair:
    unstable: Separatrix
    stable: Separatrix
    points: list[HeteroclinicPoint]
    reps: list[HeteroclinicPoint]

    @property
    def key(self) -> tuple[int, int]:
        return (self.unstable.owner.id, self.stable.owner.id)


@dataclass
class SinkQuotient:
    sink: PeriodicOrbit
    chart: Optional[QuotientChart]
    curves: list[tuple[Separatrix, ProjectedCurve]] = field(default_factory=list)
    boundaries: dict[str, tuple[int, int]] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)


@dataclass
class TheoremCheck:
    verdict: str
    orientability: str
    beh: int
    implication_holds: bool
    inconsistent_orbits: list[str]
    longest_chain: list[int]
    diagnostics: list[str]


@dataclass
class AnalysisReport:
    m: MapSpec
    options: AnalysisOptions
    orbits: list[PeriodicOrbit]
    separatrices: list[Separatrix]
    pairs: list[HeteroclinicPair]
    graph: OrderGraph
    quotients: list[SinkQuotient]
    theorem: TheoremCheck
    k_max: int

    @property
    def points(self) -> list[HeteroclinicPoint]:
        return [p for pair in self.pairs for p in pair.points]

    @property
    def orientability(self) -> str:
        return self.theorem.orientability

    @property
    def beh(self) -> int:
        return self.graph.beh

    def quotient(self, sink_id: int) -> SinkQuotient:
        for q in self.quotients:
            if q.sink.id == sink_id:
                return q
        raise KeyError(f"orbit {sink_id} is not a sink of {self.m.name!r}")

    def to_dict(self) -> dict:
        return canonical_json(_report_dict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


# -- map resolution ------------------------------------------------------------

def resolve_map(ref, config: str | Path | None = None) -> tuple[MapSpec, dict]:
    """A catalog name, a config path or a ready MapSpec, with its default options."""
    if config is not None:
        m, opts = load_config(config)
    elif isinstance(ref, MapSpec):
        m, opts = ref, {}
    elif isinstance(ref, str) and ref in CATALOG:
        e = get_entry(ref)
        m, opts = e.build(), dict(e.options)
    elif isinstance(ref, str) and (ref.endswith(".toml") or Path(ref).is_file()):
        m, opts = load_config(ref)
    else:
        get_entry(str(ref))  # raises with the list of known names
    if m.inverse is None:
        m = replace(m, inverse=newton_inverse(m.forward, m.surface))
    return m, opts


def check_orientation(m: MapSpec, density: int = 24) -> None:
    charts, xy = _seed_grid(m, density)
    det = np.linalg.det(jacobians(m, charts, xy))
    bad = np.nonzero(~(det > 0))[0]
    if len(bad):
        i = bad[0]
        raise NonOrientationPreserving(
            f"det Df = {det[i]:.4g} at chart {charts[i]} point {xy[i].tolist()}: "
            "only orientation-preserving maps are in scope")


# -- the pipeline -----------------------------------------------------------------

def _stop_charts(m: MapSpec, orbits, kind: str) -> list[LinearizingChart]:
    out = []
    for o in orbits:
        if o.kind == kind:
            out.extend(build_linearizing_chart(m, o, index=i) for i in range(o.period))
    return out


def grow_all(m: MapSpec, orbits, budget: float) -> list[Separatrix]:
    sinks, sources = _stop_charts(m, orbits, "sink"), _stop_charts(m, orbits, "source")
    seps = []
    for o in orbits:
        if o.kind != "saddle":
            continue
        for stability in ("unstable", "stable"):
            for side in ("+", "-"):
                stops = sinks if stability == "unstable" else sources
                seps.append(grow_separatrix(m, o, stability, side, budget, stops))
    return seps


def find_heteroclinics(m: MapSpec, seps: Sequence[Separatrix], k_max: int,
                       method: str = "sweep") -> list[HeteroclinicPair]:
    pairs = []
    for su in seps:
        if su.stability != "unstable":
            continue
        for ss in seps:
            if ss.stability != "stable" or ss.owner.id == su.owner.id:
                continue
            pts = detect_intersections(m, su, ss, method)
            if not pts:
                continue
            reps = dedup_by_orbit(pts, m, su, ss, k_max)
            pts = sorted(pts, key=lambda p: (p.orbit_id, p.tau_u, p.tau_s))
            pairs.append(HeteroclinicPair(su, ss, pts, reps))
    return pairs


def orbit_label(p: HeteroclinicPoint) -> str:
    return f"{p.unstable_id}/{p.stable_id}#{p.orbit_id}"


def inject_flips(pairs: list[HeteroclinicPair], flip: Sequence[int]) -> list[str]:
    """Invert the sign of the heteroclinic points with the given global indices."""
    total = sum(len(p.points) for p in pairs)
    notes, idx = [], 0
    wanted = set(int(i) for i in flip)
    for i in wanted:
        if not 0 <= i < total:
            raise IndexError(f"flip index {i} out of range: {total} heteroclinic point(s)")
    for pair in pairs:
        for j, p in enumerate(pair.points):
            if idx in wanted:
                q = replace(p, sign=-p.sign, extras={**p.extras, "flipped": True})
                pair.points[j] = q
                pair.reps = [q if (r.orbit_id == q.orbit_id and r.tau_u == q.tau_u and r.tau_s == q.tau_s) else r
                             for r in pair.reps]
                notes.append(f"injected sign flip at heteroclinic point {idx} on orbit {orbit_label(q)} "
                             f"({p.sign:+d} -> {q.sign:+d})")
            idx += 1
    return notes


def order_witnesses(pairs: Sequence[HeteroclinicPair], seps: Sequence[Separatrix]):
    het: dict[tuple[int, int], list] = {}
    for pair in pairs:
        het.setdefault(pair.key, []).extend(orbit_label(r) for r in pair.reps)
    basin: dict[tuple[int, int], list] = {}
    for s in seps:
        if s.stop_reason != "box" or s.stop_orbit is None:
            continue
        # W^u of a saddle entering a sink box puts the sink below it; W^s reaching
        # a source box puts the source above it
        key = (s.owner.id, s.stop_orbit) if s.stability == "unstable" else (s.stop_orbit, s.owner.id)
        basin.setdefault(key, []).append(s.id)
    return het, basin


def longest_saddle_chain(g: OrderGraph) -> list[int]:
    best: dict[int, list[int]] = {}

    def chain(j: int) -> list[int]:
        if j not in best:
            tails = [chain(i) for i in g.saddle_successors(j)]
            best[j] = [j] + max(tails, key=len, default=[])
        return best[j]

    return max((chain(s) for s in g.saddles), key=len, default=[])


def check_theorem(pairs: Sequence[HeteroclinicPair], g: OrderGraph, notes: Sequence[str] = ()) -> TheoremCheck:
    """Verdict on "orientable implies beh <= 1", plus the per-orbit sign consistency check.

    A sign that is not constant along a heteroclinic orbit cannot come from a
    diffeomorphism, so it is reported as FAIL like a violated implication.
    """
    pts = [p for pair in pairs for p in pair.points]
    orient = classify_orientability(pts)
    inconsistent = []
    for pair in pairs:
        by_orbit: dict[int, set] = {}
        for p in pair.points:
            by_orbit.setdefault(p.orbit_id, set()).add(p.sign)
        for oid in sorted(by_orbit):
            if len(by_orbit[oid]) > 1:
                inconsistent.append(f"{pair.unstable.id}/{pair.stable.id}#{oid}")
    chain = longest_saddle_chain(g)
    holds = not (orient == "orientable" and g.beh > 1)
    diag = list(notes)
    if not holds:
        diag.append(f"orientable map with beh={g.beh}: saddle chain {' -> '.join(map(str, chain))}")
        for a, b in zip(chain, chain[1:]):
            diag.append(f"  edge {a}->{b} witnessed by {', '.join(g.edges[(a, b)])}")
    for lab in inconsistent:
        diag.append(f"sign not constant along heteroclinic orbit {lab}")
    verdict = "PASS" if holds and not inconsistent else "FAIL"
    return TheoremCheck(verdict, orient, g.beh, holds, inconsistent, chain, diag)


def build_quotients(m: MapSpec, orbits, seps, heteroclinic_ids=frozenset()) -> list[SinkQuotient]:
    """Orbit spaces of all sink basins with the projected unstable separatrices.

    Separatrices carrying heteroclinic points are not contained in one basin
    and are listed as skipped.
    """
    out = []
    saddles = {o.id: o for o in orbits}
    for sink in (o for o in orbits if o.kind == "sink"):
        sq = SinkQuotient(sink, None)
        out.append(sq)
        for r in QUOTIENT_RADII:
            try:
                sq.chart = build_sink_quotient(m, sink, r)
                break
            except NotTrapping as exc:
                err = str(exc)
        if sq.chart is None:
            sq.errors.append(err)
            continue
        for s in seps:
            if s.stability != "unstable" or s.stop_orbit != sink.id:
                continue
            if s.id in heteroclinic_ids:
                sq.skipped[s.id] = "meets a stable separatrix, so it is not contained in the basin"
                continue
            try:
                sq.curves.append((s, project_curve(sq.chart, s)))
                b1, b2 = project_neighborhood_boundary(sq.chart, saddles[s.owner.id], s)
                sq.boundaries[s.id] = (b1.winding, b2.winding)
            except MorseSmaleError as exc:
                sq.errors.append(f"{s.id}: {exc}")
    return out


def run_analyze(map_ref, options: AnalysisOptions | dict | None = None,
                config: str | Path | None = None) -> AnalysisReport:
    """Run the full analysis.  Raises :class:`OutOfScope` subclasses for non Morse-Smale input."""
    m, defaults = resolve_map(map_ref, config)
    if isinstance(options, AnalysisOptions):
        opts = options
    else:
        merged = {**DEFAULTS, **defaults, **{k: v for k, v in (options or {}).items() if v is not None}}
        opts = AnalysisOptions(**merged)
    check_orientation(m)
    orbits = find_periodic_points(m, int(opts.max_period), int(opts.grid))
    seps = grow_all(m, orbits, float(opts.budget))
    k_max = default_k_max(max((s.period for s in seps), default=1), float(opts.budget))
    pairs = find_heteroclinics(m, seps, k_max, opts.method)
    notes = inject_flips(pairs, opts.flip) if opts.flip else []
    het, basin = order_witnesses(pairs, seps)
    g = build_order_graph(orbits, het, basin)
    quotients = build_quotients(m, orbits, seps, {p.unstable.id for p in pairs})
    theorem = check_theorem(pairs, g, notes)
    return AnalysisReport(m, opts, orbits, seps, pairs, g, quotients, theorem, k_max)


def run_verify_theorem(names: Sequence[str] | None = None, flip: dict | None = None) -> list[AnalysisReport]:
    """Analyze catalog entries (all of them for ``names=None``); ``flip`` maps names to injected flips."""
    names = list(CATALOG) if names is None else list(names)
    flip = flip or {}
    return [run_analyze(n, AnalysisOptions(**{**DEFAULTS, **get_entry(n).options,
                                              "flip": tuple(flip.get(n, ()))}))
            for n in names]


# -- serialization -----------------------------------------------------------------

def _num(x: float):
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    y = float(f"{x:.{SIG_DIGITS}g}")
    return 0.0 if y == 0 else y


def canonical_json(obj):
    """Floats to 12 significant digits, ``-0.0`` to ``0.0``, numpy scalars to Python."""
    if isinstance(obj, dict):
        return {str(k): canonical_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical_json(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, complex):
        return [_num(obj.real), _num(obj.imag)]
    return obj


def _pt(p) -> dict:
    return {"chart": p.chart, "xy": list(p.coords)}


def _orbit_dict(o: PeriodicOrbit) -> dict:
    d = {
        "id": o.id, "kind": o.kind, "period": o.period,
        "points": [_pt(p) for p in o.points],
        "eigenvalues": [[complex(e).real, complex(e).imag] for e in o.eigenvalues],
    }
    if o.kind == "saddle":
        d["nu"] = o.nu
        d["orientation_type"] = orientation_type(o)
        d["eigenvectors"] = [{"stable": list(s), "unstable": list(u)} for s, u in o.eigenvectors]
    return d


def _sep_dict(s: Separatrix) -> dict:
    return {
        "id": s.id, "owner": s.owner.id, "stability": s.stability, "side": s.side,
        "period": s.period, "multiplier": s.multiplier, "vertices": s.n_vertices,
        "tau_end": float(s.tau[-1]), "arclength_budget": s.arclength_budget,
        "truncated": s.truncated, "stop_reason": s.stop_reason, "stop_orbit": s.stop_orbit,
        "invariance_residual": s.invariance_residual,
    }


def _het_dict(r: AnalysisReport) -> dict:
    pairs, points, idx = [], [], 0
    for pair in r.pairs:
        orbits = []
        for rep in pair.reps:
            members = [p for p in pair.points if p.orbit_id == rep.orbit_id]
            orbits.append({"orbit": orbit_label(rep), "sign": rep.sign, "points": len(members),
                           "representative": _pt(rep.location), "tau_u": rep.tau_u, "tau_s": rep.tau_s})
        pairs.append({"unstable": pair.unstable.id, "stable": pair.stable.id,
                      "from": pair.key[0], "to": pair.key[1],
                      "crossings": len(pair.points), "orbits": orbits})
        for p in pair.points:
            points.append({"index": idx, "orbit": orbit_label(p), "sign": p.sign,
                           "location": _pt(p.location), "polyline_location": _pt(p.polyline_location),
                           "tau_u": p.tau_u, "tau_s": p.tau_s, "refine_residual": p.refine_residual})
            idx += 1
    return {"k_max": r.k_max, "method": r.options.method, "arclength_budget": r.options.budget,
            "orbit_count": sum(len(p.reps) for p in r.pairs), "point_count": idx,
            "pairs": pairs, "points": points}


def _quotient_dict(q: SinkQuotient) -> dict:
    d = {"sink": q.sink.id, "errors": list(q.errors), "curves": [],
         "skipped": [{"separatrix": k, "reason": v} for k, v in sorted(q.skipped.items())]}
    if q.chart is not None:
        d.update(r=q.chart.r, m_omega=q.chart.m_omega, m_V=q.chart.m_V,
                 trapping_margin=q.chart.trapping_margin)
    for s, c in q.curves:
        d["curves"].append({"separatrix": s.id, "m_gamma": s.period,
                            "expected_winding": s.period // q.sink.period,
                            "winding": c.winding, "crossings": c.crossings, "arcs": c.n_arcs,
                            "closed": c.closed, "gap": c.gap,
                            "boundary_windings": list(q.boundaries.get(s.id, ()))})
    return d


def _report_dict(r: AnalysisReport) -> dict:
    g, m = r.graph, r.m
    th = r.theorem
    return {
        "map": {"name": m.name, "surface": m.surface.kind,
                "params": {k: m.params[k] for k in sorted(m.params)},
                "search_box": list(m.search_box),
                "options": {"max_period": r.options.max_period, "grid": r.options.grid,
                            "budget": r.options.budget}},
        "orbits": [_orbit_dict(o) for o in r.orbits],
        "separatrices": [_sep_dict(s) for s in r.separatrices],
        "heteroclinic": _het_dict(r),
        "orientability": th.orientability,
        "beh": g.beh,
        "layers": {"sinks": g.layers[0], "saddle_layers": g.layers[1:-1], "sources": g.layers[-1],
                   "edges": [{"from": j, "to": i, "witnesses": sorted(g.edges[(j, i)])}
                             for (j, i) in sorted(g.edges)]},
        "quotients": [_quotient_dict(q) for q in r.quotients],
        "theorem": {"verdict": th.verdict, "orientable": th.orientability == "orientable",
                    "beh": th.beh, "implication_holds": th.implication_holds,
                    "inconsistent_orbits": th.inconsistent_orbits,
                    "longest_chain": th.longest_chain, "diagnostics": th.diagnostics},
    }


def emit_outputs(r: AnalysisReport, out_dir: str | Path, formats: Sequence[str] = ALL_FORMATS) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    unknown = set(formats) - set(ALL_FORMATS)
    if unknown:
        raise ValueError(f"unknown output formats {sorted(unknown)}; choose from {', '.join(ALL_FORMATS)}")
    files: list[tuple[str, str]] = []
    if "json" in formats:
        files.append(("report.json", r.to_json()))
    if "csv" in formats:
        files.append(("separatrices.csv", separatrices_csv(r.separatrices)))
    if "dot" in formats:
        files.append(("graph.dot", to_dot(r.graph, r.m.name)))
    if "svg" in formats:
        files.append(("phase.svg", phase_portrait_svg(r.m, r.orbits, r.separatrices, r.points)))
        for q in r.quotients:
            files.append((f"quotient_{q.sink.id}.svg", quotient_svg(q.sink.id, [c for _, c in q.curves])))
    written = []
    for name, text in files:
        path = out / name
        path.write_text(text)
        written.append(path)
    return written
