"""
Tests for polynomial systems, enumeration and spec files
"""
import json
import logging
from unittest.mock import patch

import numpy as np
import pytest

from config import GuardExceededError
from geometry.ffgrid import DimensionMismatchError
from geometry.variety import (
    MonomialTerm, PointSet, PolynomialSpec, VarietySpec, VarietySpecError, enumerate_points,
    evaluate_poly, evaluate_poly_columns, lang_weil_deviation_exceeded, lang_weil_residual,
    load_variety, point_count, variety_from_dict,
)


def _hyperbola(c=1):
    return VarietySpec("hyperbola", 2, (PolynomialSpec.from_terms((1, (1, 1)), (-c, (0, 0))),),
                       n=1, d=2, delta=-1)


def _elliptic():
    poly = PolynomialSpec.from_terms((1, (0, 2)), (-1, (3, 0)), (-1, (1, 0)))
    return VarietySpec("elliptic", 2, (poly,), n=1, d=3, delta=-1)


class TestPolynomialSpec:
    """Tests for polynomial metadata and evaluation"""

    def test_degree_ignores_zero_terms(self):
        poly = PolynomialSpec.from_terms((0, (4, 0)), (1, (1, 1)))
        assert poly.degree == 2

    def test_terms_must_agree_on_variables(self):
        with pytest.raises(VarietySpecError):
            PolynomialSpec((MonomialTerm(1, (1, 0)), MonomialTerm(1, (1,))))

    def test_negative_exponent_rejected(self):
        with pytest.raises(VarietySpecError):
            MonomialTerm(1, (-1, 0))

    def test_evaluate_reduces_mod_p(self):
        poly = PolynomialSpec.from_terms((1, (3, 0)), (1, (1, 0)))
        assert evaluate_poly(poly, (2, 0), 5) == 0
        assert evaluate_poly(poly, (1, 0), 5) == 2

    def test_evaluate_dimension_mismatch(self):
        poly = PolynomialSpec.from_terms((1, (1, 1)))
        with pytest.raises(DimensionMismatchError):
            evaluate_poly(poly, (1,), 5)

    def test_columns_match_scalar(self):
        poly = PolynomialSpec.from_terms((3, (2, 1)), (-1, (0, 3)), (4, (0, 0)))
        xs, ys = np.indices((7, 7)).reshape(2, -1)
        vectorized = evaluate_poly_columns(poly, [xs, ys], 7)
        scalar = [evaluate_poly(poly, (int(x), int(y)), 7) for x, y in zip(xs, ys)]
        assert vectorized.tolist() == scalar


class TestVarietySpec:
    """Tests for declared metadata validation"""

    def test_valid_spec(self):
        spec = _hyperbola()
        assert (spec.r, spec.n, spec.d, spec.delta) == (2, 1, 2, -1)

    def test_dimension_must_be_below_r(self):
        with pytest.raises(VarietySpecError, match="0 < n < r"):
            VarietySpec("bad", 2, _hyperbola().polys, n=2, d=2)

    def test_delta_bounded_by_n_minus_2(self):
        poly = PolynomialSpec.from_terms((1, (2, 0, 0)), (1, (0, 2, 0)), (-1, (0, 0, 0)))
        with pytest.raises(VarietySpecError, match="delta"):
            VarietySpec("bad", 3, (poly,), n=2, d=2, delta=1)

    def test_nonsingular_curve_flag_requires_curve(self):
        poly = PolynomialSpec.from_terms((1, (2, 0, 0)), (-1, (0, 0, 0)))
        with pytest.raises(VarietySpecError, match="nonsingular curve"):
            VarietySpec("bad", 3, (poly,), n=2, d=2, delta=0, flags={"nonsingular_curve"})

    def test_constant_polynomial_rejected(self):
        with pytest.raises(VarietySpecError, match="constant"):
            VarietySpec("bad", 2, (PolynomialSpec.from_terms((1, (0, 0))),), n=1, d=1)

    def test_errors_are_aggregated(self):
        with pytest.raises(VarietySpecError) as exc:
            VarietySpec("bad", 1, (), n=3, d=0)
        message = str(exc.value)
        assert "ambient dimension" in message
        assert "degree" in message
        assert "empty" in message


class TestEnumeration:
    """Tests for exhaustive point enumeration"""

    def test_hyperbola_p5(self):
        points = enumerate_points(_hyperbola(), 5)
        assert points.points == [(1, 1), (2, 3), (3, 2), (4, 4)]

    def test_elliptic_p5(self):
        points = enumerate_points(_elliptic(), 5)
        assert points.points == [(0, 0), (2, 0), (3, 0)]

    def test_elliptic_p7(self):
        points = enumerate_points(_elliptic(), 7)
        assert points.points == [(0, 0), (1, 3), (1, 4), (3, 3), (3, 4), (5, 2), (5, 5)]

    def test_hyperbola_count_is_p_minus_1(self):
        assert point_count(_hyperbola(3), 13) == 12

    @pytest.mark.parametrize("p", [5, 7, 11])
    def test_polynomial_order_does_not_matter(self, p):
        hyperbola = PolynomialSpec.from_terms((1, (1, 1, 0)), (-1, (0, 0, 0)))
        parabola = PolynomialSpec.from_terms((1, (0, 0, 1)), (-1, (2, 0, 0)))
        forward = VarietySpec("twisted", 3, (hyperbola, parabola), n=1, d=4)
        backward = VarietySpec("twisted", 3, (parabola, hyperbola), n=1, d=4)
        a, b = enumerate_points(forward, p), enumerate_points(backward, p)
        assert len(a) == p - 1
        assert np.array_equal(a.coords, b.coords)

    def test_chunked_and_threaded_match(self):
        spec = _elliptic()
        serial = enumerate_points(spec, 11)
        with patch("geometry.variety._CHUNK_CELLS", 11):
            chunked = enumerate_points(spec, 11, workers=3)
        assert np.array_equal(serial.coords, chunked.coords)

    def test_guard(self):
        with patch("geometry.variety.MAX_CELLS", 100):
            with pytest.raises(GuardExceededError):
                enumerate_points(_hyperbola(), 11)

    def test_guard_forced(self):
        with patch("geometry.variety.MAX_CELLS", 100):
            assert len(enumerate_points(_hyperbola(), 11, force=True)) == 10

    def test_indicator(self):
        points = enumerate_points(_hyperbola(), 5)
        field = points.indicator()
        assert field.total() == 4
        assert field.is_indicator()
        assert field.at((2, 3)) == 1
        assert field.at((2, 2)) == 0

    def test_point_set_is_frozen(self):
        points = enumerate_points(_hyperbola(), 5)
        with pytest.raises(ValueError):
            points.coords[0, 0] = 0

    def test_point_set_rejects_out_of_range(self):
        with pytest.raises(VarietySpecError):
            PointSet(5, 2, np.array([[5, 0]]))


class TestLangWeil:
    """Tests for the Lang-Weil sanity signal"""

    @pytest.mark.parametrize("p", [11, 13, 101])
    def test_nonsingular_curves_within_two(self, p):
        for spec in (_hyperbola(), _elliptic()):
            assert abs(lang_weil_residual(spec, p)) <= 2

    def test_wrong_dimension_warns(self, caplog):
        # x1 = 0 in A^3 is a plane, declared as a curve
        plane = VarietySpec("mislabeled", 3, (PolynomialSpec.from_terms((1, (1, 0, 0))),),
                            n=1, d=1, delta=-1)
        assert lang_weil_deviation_exceeded(plane, 11, 121)
        with caplog.at_level(logging.WARNING, logger="geometry.variety"):
            enumerate_points(plane, 11)
        assert "mislabeled" in caplog.text

    def test_flagged_input_warns(self, caplog):
        axes = VarietySpec("axes", 2, (PolynomialSpec.from_terms((1, (1, 1))),), n=1, d=2,
                           flags={"reducible"})
        with caplog.at_level(logging.WARNING, logger="geometry.variety"):
            points = enumerate_points(axes, 7)
        assert len(points) == 13
        assert "reducible" in caplog.text


class TestSpecFiles:
    """Tests for JSON variety specs"""

    def test_load_defaults_curve_delta(self, hyperbola_spec_file):
        spec = load_variety(hyperbola_spec_file)
        assert spec.delta == -1
        assert point_count(spec, 7) == 6

    def test_surface_delta_defaults_to_n_minus_2(self):
        spec = variety_from_dict({
            "r": 3, "n": 2, "d": 2,
            "polys": [[{"coeff": 1, "exps": [2, 0, 0]}, {"coeff": 1, "exps": [0, 2, 0]},
                       {"coeff": 1, "exps": [0, 0, 2]}, {"coeff": -1, "exps": [0, 0, 0]}]],
        })
        assert spec.delta == 0

    def test_missing_keys(self):
        with pytest.raises(VarietySpecError, match="missing"):
            variety_from_dict({"r": 2})

    def test_wrong_exponent_width(self):
        with pytest.raises(VarietySpecError, match="exponents"):
            variety_from_dict({"r": 2, "n": 1, "d": 2,
                               "polys": [[{"coeff": 1, "exps": [1, 1, 0]}]]})

    def test_missing_file(self, tmp_path):
        with pytest.raises(VarietySpecError, match="not found"):
            load_variety(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(VarietySpecError, match="valid JSON"):
            load_variety(path)

    def test_round_trip_through_to_json(self):
        spec = _elliptic()
        again = variety_from_dict(json.loads(json.dumps(spec.to_json())))
        assert again.polys == spec.polys
