from __future__ import annotations

import numpy as np
import pytest

from morsesmale.config import load_config, map_from_dict
from morsesmale.errors import ConfigError
from morsesmale.expr import Expression, compile_component_map
from morsesmale.pipeline import run_analyze


def test_expression_evaluates_vectorized():
    e = Expression("a*sin(2*pi*x1) + x2**2")
    out = e({"a": 2.0, "x1": np.array([0.25, 0.0]), "x2": np.array([1.0, 3.0])})
    assert np.allclose(out, [3.0, 9.0])


@pytest.mark.parametrize("src", ["__import__('os')", "x1.real", "[x1]", "lambda: 1", "x1 if x2 else 0", "open('f')"])
def test_expression_rejects_unsafe_syntax(src):
    with pytest.raises(ConfigError):
        Expression(src)


def test_unknown_name_is_reported():
    fn = compile_component_map(["x1 + b", "x2"])
    with pytest.raises(ConfigError, match="'b'"):
        fn(np.zeros((1, 2)))


def test_component_map_broadcasts_constants():
    fn = compile_component_map(["1", "x1"])
    assert np.allclose(fn(np.array([[2.0, 3.0], [4.0, 5.0]])), [[1, 2], [1, 4]])


def test_load_torus_config(tmp_path):
    p = tmp_path / "g.toml"
    p.write_text('[surface]\nkind = "torus"\n[map]\nparams = { eps = 0.5 }\n'
                 'forward = ["x1 - eps*sin(2*pi*x1)/(2*pi)", "x2 - eps*sin(2*pi*x2)/(2*pi)"]\n'
                 '[options]\ngrid = 24\n')
    m, opts = load_config(p)
    assert m.name == "g" and m.surface.kind == "torus" and opts == {"grid": 24}
    assert m.inverse is None
    r = run_analyze(str(p))
    assert sorted(o.kind for o in r.orbits) == ["saddle", "saddle", "sink", "source"]
    assert r.orientability == "vacuous" and r.theorem.verdict == "PASS"


def test_sphere_config_has_one_pair_per_chart():
    m, _ = map_from_dict({"surface": {"kind": "sphere"},
                          "map": {"forward": [["x1/2", "x2/2"], ["2*x1", "2*x2"]]}})
    assert np.allclose(m.forward(1, np.array([[0.1, 0.2]])), [[0.2, 0.4]])
    with pytest.raises(ConfigError):
        map_from_dict({"surface": {"kind": "sphere"}, "map": {"forward": ["x1", "x2"]}})


@pytest.mark.parametrize("data", [
    {"map": {"forward": ["x1", "x2"]}},
    {"surface": {"kind": "klein"}, "map": {"forward": ["x1", "x2"]}},
    {"surface": {}, "map": {}},
    {"surface": {}, "map": {"forward": ["x1"]}},
    {"surface": {}, "map": {"forward": ["x1", "x2"]}, "options": {"speed": 1}},
])
def test_bad_configs(data):
    with pytest.raises(ConfigError):
        map_from_dict(data)


def test_unparsable_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[surface\n")
    with pytest.raises(ConfigError):
        load_config(p)
