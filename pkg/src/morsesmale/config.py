"""TOML map definitions.

A config has three tables::

    [surface]
    kind = "torus"            # plane | torus | sphere

    [map]
    name = "my-map"
    params = { eps = 0.5 }
    forward = ["x1 - eps*sin(2*pi*x1)/(2*pi)", "x2 - eps*sin(2*pi*x2)/(2*pi)"]
    inverse = [...]           # optional; Newton inversion otherwise
    search_box = [-1, 1, -1, 1]

    [options]
    max_period = 2
    grid = 32
    budget = 3.0

On the sphere ``forward`` (and ``inverse``) hold one pair of expressions per
chart: ``[[f1, f2], [g1, g2]]`` for the ``z`` and ``w`` charts.
"""
from __future__ import annotations

import sys
from pathlib import Path

from .errors import ConfigError
from .expr import compile_component_map
from .surface import MapSpec, SurfaceModel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OPTION_KEYS = ("max_period", "grid", "budget")


def _chart_maps(spec, n_charts: int, params: dict, what: str):
    if spec is None:
        return None
    if n_charts == 1:
        if len(spec) != 2 or not all(isinstance(s, str) for s in spec):
            raise ConfigError(f"[map] {what} must be a list of two expression strings")
        fns = [compile_component_map(list(spec), params)]
    else:
        if len(spec) != 2 or not all(isinstance(s, list) for s in spec):
            raise ConfigError(f"[map] {what} on the sphere needs one expression pair per chart")
        fns = [compile_component_map(list(s), params) for s in spec]

    def fn(chart, xy):
        return fns[chart](xy)

    return fn


def map_from_dict(data: dict, default_name: str = "config") -> tuple[MapSpec, dict]:
    for key in ("surface", "map"):
        if key not in data:
            raise ConfigError(f"config lacks a [{key}] table")
    surf = data["surface"]
    try:
        surface = SurfaceModel(surf.get("kind", "plane"), float(surf.get("plane_bound", 1e3)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    mp = data["map"]
    params = {k: float(v) for k, v in mp.get("params", {}).items()}
    if "forward" not in mp:
        raise ConfigError("[map] needs a 'forward' entry")
    fwd = _chart_maps(mp["forward"], surface.n_charts, params, "forward")
    inv = _chart_maps(mp.get("inverse"), surface.n_charts, params, "inverse")
    box = tuple(float(v) for v in mp.get("search_box", (-1.0, 1.0, -1.0, 1.0)))
    if len(box) != 4:
        raise ConfigError("[map] search_box needs four numbers x0, x1, y0, y1")
    m = MapSpec(str(mp.get("name", default_name)), surface, fwd, inv, None, params, box)
    opts = dict(data.get("options", {}))
    unknown = set(opts) - set(OPTION_KEYS)
    if unknown:
        raise ConfigError(f"unknown [options] keys: {sorted(unknown)}")
    return m, opts


def load_config(path: str | Path) -> tuple[MapSpec, dict]:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return map_from_dict(data, path.stem)
