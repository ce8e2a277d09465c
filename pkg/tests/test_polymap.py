"""
Tests for polynomial maps, joint counts and the independence test
"""

import numpy as np
import pytest

from geometry.boxes import CyclicBox
from geometry.ffgrid import DimensionMismatchError
from geometry.polymap import (
    PolyMap, apply_map, evaluation_matrix, graph_points, hyperplane_report, independence_rank,
    joint_count, joint_count_via_graph, load_map, map_from_json, witness_vanishes,
)
from geometry.variety import PointSet, PolynomialSpec, VarietySpecError, enumerate_points


class TestPolyMap:
    """Tests for map evaluation and graphs"""

    def test_apply_map(self, diagonal_map):
        assert apply_map(diagonal_map, (2, 0), 5) == (0, 0)
        assert apply_map(diagonal_map, (1, 3), 7) == (2, 2)

    def test_apply_map_dimension(self, x_map):
        with pytest.raises(DimensionMismatchError):
            apply_map(x_map, (1, 2, 3), 5)

    def test_needs_a_component(self):
        with pytest.raises(VarietySpecError):
            PolyMap((), r=2)

    def test_component_variable_count(self):
        with pytest.raises(VarietySpecError, match="expected 2"):
            PolyMap((PolynomialSpec.from_terms((1, (1, 0, 0))),), r=2)

    def test_columns_match_pointwise(self, catalog_points, xy_map):
        _, points = catalog_points("graph_square", 11)
        columns = xy_map.apply_columns(points)
        assert [tuple(row) for row in columns.tolist()] == \
            [apply_map(xy_map, z, 11) for z in points.points]

    def test_graph_of_diagonal_map(self, catalog_points, diagonal_map):
        _, points = catalog_points("elliptic_x3px", 13)
        graph = graph_points(points, diagonal_map)
        assert graph.r == 4
        assert len(graph) == len(points)
        assert np.array_equal(graph.coords[:, 2], graph.coords[:, 3])
        assert np.array_equal(graph.coords[:, :2], points.coords)

    def test_to_json_round_trips(self, diagonal_map):
        assert map_from_json({"map": diagonal_map.to_json()}, 2) == diagonal_map


class TestJointCount:
    """Tests for N_{B,B'}(V, g)"""

    def test_direct_matches_graph(self, catalog_points, xy_map, rng):
        p = 11
        _, points = catalog_points("hyperbola", p)
        for _ in range(6):
            box = CyclicBox.from_lengths([int(v) for v in rng.integers(1, p + 1, size=2)], p,
                                         [int(v) for v in rng.integers(0, p, size=2)])
            box2 = CyclicBox.from_lengths([int(rng.integers(1, p + 1))], p,
                                          [int(rng.integers(0, p))])
            assert joint_count(points, xy_map, box, box2) == \
                joint_count_via_graph(points, xy_map, box, box2)

    def test_full_second_box_is_plain_count(self, catalog_points, x_map):
        _, points = catalog_points("elliptic_x3px", 7)
        box = CyclicBox.from_lengths([3, 7], 7)
        # x in {0, 1, 2}: (0,0), (1,3), (1,4)
        assert joint_count(points, x_map, box, CyclicBox.full(7, 1)) == 3

    @pytest.mark.parametrize("p", [5, 13, 29])
    def test_diagonal_image_misses_off_diagonal_box(self, catalog_points, diagonal_map, p):
        _, points = catalog_points("elliptic_x3px", p)
        half = (p - 1) // 2
        box2 = CyclicBox.from_lengths([half, half], p, [0, (p + 1) // 2])
        assert joint_count(points, diagonal_map, CyclicBox.full(p, 2), box2) == 0

    @pytest.mark.parametrize("p", [5, 13, 29])
    def test_coordinate_map_misses_disjoint_box(self, catalog_points, x_map, p):
        _, points = catalog_points("elliptic_x3px", p)
        box = CyclicBox.from_lengths([(p + 1) // 2, p], p)
        box2 = CyclicBox.from_lengths([(p - 1) // 2], p, [(p + 1) // 2])
        assert joint_count(points, x_map, box, box2) == 0

    def test_second_box_dimension(self, catalog_points, x_map):
        _, points = catalog_points("hyperbola", 5)
        with pytest.raises(DimensionMismatchError):
            joint_count(points, x_map, CyclicBox.full(5, 2), CyclicBox.full(5, 2))


class TestIndependence:
    """Tests for the rank of {1, x, g} on V"""

    @pytest.mark.parametrize("p", [7, 11, 13])
    def test_curve_not_in_hyperplane(self, catalog_points, p):
        _, points = catalog_points("elliptic_x3px", p)
        report = independence_rank(points)
        assert report.independent
        assert report.rank == 3
        assert report.witness is None

    @pytest.mark.parametrize("p", [7, 11])
    def test_diagonal_map_witness(self, catalog_points, diagonal_map, p):
        _, points = catalog_points("elliptic_x3px", p)
        report = independence_rank(points, diagonal_map)
        assert not report.independent
        assert report.rank == 4
        assert report.witness == (0, 0, 0, 1, p - 1)
        assert report.signed_witness(p) == (0, 0, 0, 1, -1)
        assert witness_vanishes(points, report.witness, diagonal_map)

    def test_coordinate_map_witness(self, catalog_points, x_map):
        _, points = catalog_points("elliptic_x3px", 7)
        report = independence_rank(points, x_map)
        assert report.witness == (0, 1, 0, 6)
        assert len(report.kernel) == 1

    @pytest.mark.parametrize("name", ["elliptic_x3px", "graph_square", "axes_union"])
    def test_rank_ignores_point_order(self, catalog_points, xy_map, rng, name):
        _, points = catalog_points(name, 11)
        shuffled = PointSet(points.p, points.r, points.coords[rng.permutation(len(points))])
        for poly_map in (None, xy_map):
            assert independence_rank(shuffled, poly_map).rank == \
                independence_rank(points, poly_map).rank

    def test_rank_ignores_component_order(self, catalog_points, diagonal_map):
        _, points = catalog_points("elliptic_x3px", 11)
        swapped = PolyMap(tuple(reversed(diagonal_map.components)), r=2)
        report = independence_rank(points, swapped)
        assert report.rank == independence_rank(points, diagonal_map).rank == 4
        assert report.witness == (0, 0, 0, 1, 10)
        assert witness_vanishes(points, report.witness, swapped)

    def test_line_lies_in_hyperplane(self, line_spec, caplog):
        import logging

        points = enumerate_points(line_spec, 11)
        with caplog.at_level(logging.WARNING):
            report = hyperplane_report(points)
        assert report.witness == (0, 1, 10)
        assert "hyperplane" in caplog.text

    def test_every_kernel_vector_vanishes(self, catalog_points, xy_map):
        _, points = catalog_points("axes_union", 7)
        report = independence_rank(points, xy_map)
        # x y = 0 on the axes
        assert report.witness == (0, 0, 0, 1)
        for vec in report.kernel:
            assert witness_vanishes(points, vec, xy_map)

    def test_evaluation_matrix_shape(self, catalog_points, diagonal_map):
        _, points = catalog_points("elliptic_x3px", 7)
        M = evaluation_matrix(points, diagonal_map)
        assert M.shape == (7, 5)
        assert np.all(M[:, 0] == 1)

    def test_empty_variety(self):
        empty = PointSet(7, 2, np.empty((0, 2), dtype=np.int64))
        with pytest.raises(VarietySpecError):
            independence_rank(empty)

    def test_witness_length_checked(self, catalog_points):
        _, points = catalog_points("hyperbola", 5)
        with pytest.raises(DimensionMismatchError):
            witness_vanishes(points, (1, 0))


class TestLoadMap:
    """Tests for map files"""

    def test_load(self, map_file):
        path = map_file([[{"coeff": 1, "exps": [1, 1]}], [{"coeff": 2, "exps": [0, 3]}]])
        poly_map = load_map(path, 2)
        assert poly_map.s == 2
        assert apply_map(poly_map, (2, 3), 7) == (6, 5)

    def test_bare_list(self):
        assert map_from_json([[{"coeff": 1, "exps": [1, 0]}]], 2).s == 1

    def test_wrong_arity(self, map_file):
        path = map_file([[{"coeff": 1, "exps": [1, 1, 1]}]])
        with pytest.raises(VarietySpecError, match="exps must list 2 exponents"):
            load_map(path, 2)

    def test_missing_key(self):
        with pytest.raises(VarietySpecError, match="'map'"):
            map_from_json({"components": []}, 2)

    def test_missing_file(self, tmp_path):
        with pytest.raises(VarietySpecError, match="not found"):
            load_map(tmp_path / "nope.json", 2)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{map: ", encoding="utf-8")
        with pytest.raises(VarietySpecError, match="not valid JSON"):
            load_map(path, 2)


def test_joint_count_brute_force_definition(catalog_points, xy_map):
    p = 7
    _, points = catalog_points("graph_square", p)
    box = CyclicBox.from_lengths([4, 2], p, [5, 1])
    box2 = CyclicBox.from_lengths([3], p, [6])
    expected = sum(
        1 for z in points.points
        if all((c - s) % p < l for c, s, l in zip(z, box.starts, box.lengths))
        and (z[0] * z[1] - 6) % p < 3
    )
    assert joint_count(points, xy_map, box, box2) == expected
