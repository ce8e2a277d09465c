"""
Test fixtures and configuration for pytest
"""
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from geometry.catalog import catalog_instantiate  # noqa: E402
from geometry.polymap import PolyMap  # noqa: E402
from geometry.variety import PolynomialSpec, VarietySpec, enumerate_points  # noqa: E402


@pytest.fixture
def rng():
    """Seeded generator for randomized oracle instances"""
    return np.random.default_rng(20240617)


@pytest.fixture
def catalog_points():
    """Factory: (name, p, **params) -> (spec, points)"""
    def _make(name, p, **params):
        spec = catalog_instantiate(name, p, params)
        return spec, enumerate_points(spec, p)
    return _make


@pytest.fixture
def line_spec():
    """x2 = x1 in A^2"""
    poly = PolynomialSpec.from_terms((1, (0, 1)), (-1, (1, 0)))
    return VarietySpec("line_diag", 2, (poly,), n=1, d=1, delta=-1)


@pytest.fixture
def diagonal_map():
    """g = (x^3 + x, y^2); equal on y^2 = x^3 + x"""
    return PolyMap((
        PolynomialSpec.from_terms((1, (3, 0)), (1, (1, 0))),
        PolynomialSpec.from_terms((1, (0, 2))),
    ), r=2)


@pytest.fixture
def x_map():
    """h(x, y) = x"""
    return PolyMap((PolynomialSpec.from_terms((1, (1, 0))),), r=2)


@pytest.fixture
def xy_map():
    """g(x, y) = x y"""
    return PolyMap((PolynomialSpec.from_terms((1, (1, 1))),), r=2)


@pytest.fixture
def map_file(tmp_path):
    """Writes a map JSON file and returns its path"""
    def _write(components, name="map.json"):
        path = tmp_path / name
        path.write_text(json.dumps({"map": components}), encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def hyperbola_spec_file(tmp_path):
    """x1 x2 = 1 as a spec file (delta omitted)"""
    path = tmp_path / "hyperbola.json"
    path.write_text(json.dumps({
        "name": "hyperbola_file",
        "r": 2,
        "n": 1,
        "d": 2,
        "polys": [[{"coeff": 1, "exps": [1, 1]}, {"coeff": -1, "exps": [0, 0]}]],
    }), encoding="utf-8")
    return str(path)
