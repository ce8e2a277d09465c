"""
Tests for cyclic intervals, boxes and direct counting
"""
import itertools
from fractions import Fraction

import numpy as np
import pytest

from geometry.boxes import (
    BoxError, CyclicBox, CyclicInterval, box_volume, contains, count_in_box, expected_count,
    expected_count_exact, membership_mask, parse_box, product_box, translate,
)
from geometry.ffgrid import DimensionMismatchError


class TestCyclicInterval:
    """Tests for cyclic membership"""

    def test_wrapping_membership(self):
        iv = CyclicInterval(4, 2, 5)
        assert 4 in iv
        assert 0 in iv
        assert 1 not in iv

    def test_members_wrap(self):
        assert CyclicInterval(5, 4, 7).members().tolist() == [5, 6, 0, 1]

    def test_full_length_allowed(self):
        iv = CyclicInterval(3, 7, 7)
        assert all(m in iv for m in range(7))

    @pytest.mark.parametrize("length", [0, 8])
    def test_length_out_of_range(self, length):
        with pytest.raises(BoxError):
            CyclicInterval(0, length, 7)

    def test_start_out_of_range(self):
        with pytest.raises(BoxError):
            CyclicInterval(7, 1, 7)

    def test_str(self):
        assert str(CyclicInterval(2, 3, 5)) == "2:3"


class TestCyclicBox:
    """Tests for boxes and translation"""

    def test_volume(self):
        box = CyclicBox.from_lengths([2, 3, 5], 7)
        assert box.volume == 30
        assert box_volume(box) == 30

    def test_full_box(self):
        box = CyclicBox.full(5, 2)
        assert box.volume == 25

    def test_translate_wraps(self):
        box = translate(CyclicBox.from_lengths([2, 2], 5), (4, 4))
        assert box.starts == (4, 4)
        assert box.lengths == (2, 2)
        assert contains(box, (0, 0))
        assert not contains(box, (1, 4))

    def test_translate_composes(self):
        box = CyclicBox.from_lengths([3, 2], 7, starts=[1, 6])
        assert translate(translate(box, (3, 5)), (6, 4)) == translate(box, (9 % 7, 9 % 7))

    def test_translate_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            translate(CyclicBox.from_lengths([2, 2], 5), (1,))

    def test_mixed_primes_rejected(self):
        with pytest.raises(BoxError):
            CyclicBox((CyclicInterval(0, 1, 5), CyclicInterval(0, 1, 7)))

    def test_membership_is_translation_equivariant(self):
        p = 7
        box = CyclicBox.from_lengths([3, 2], p, starts=[5, 1])
        for x, z in [((1, 2), (0, 4)), ((6, 6), (3, 0)), ((2, 5), (6, 6))]:
            shifted = tuple((zi - xi) % p for zi, xi in zip(z, x))
            assert contains(translate(box, x), z) == contains(box, shifted)

    def test_mask_matches_contains(self):
        p = 5
        box = CyclicBox.from_lengths([2, 4], p, starts=[4, 3])
        coords = np.array(list(itertools.product(range(p), repeat=2)))
        mask = membership_mask(box, coords)
        assert mask.tolist() == [contains(box, tuple(c)) for c in coords]

    def test_product_box(self):
        box = product_box(CyclicBox.from_lengths([2, 3], 7), CyclicBox.from_lengths([4], 7))
        assert box.dims == 3
        assert box.volume == 24


class TestCounting:
    """Tests for N_B(V) and expected counts"""

    def test_full_box_counts_everything(self, catalog_points):
        _, points = catalog_points("hyperbola", 7)
        assert count_in_box(points, CyclicBox.full(7, 2)) == len(points)

    def test_unit_box(self, catalog_points):
        _, points = catalog_points("hyperbola", 5)
        assert count_in_box(points, CyclicBox.from_lengths([1, 1], 5, starts=[2, 3])) == 1
        assert count_in_box(points, CyclicBox.from_lengths([1, 1], 5, starts=[2, 2])) == 0

    def test_translate_sum_is_mass(self, catalog_points):
        p = 7
        _, points = catalog_points("elliptic_x3px", p)
        box = CyclicBox.from_lengths([3, 4], p)
        total = sum(count_in_box(points, translate(box, x))
                    for x in itertools.product(range(p), repeat=2))
        assert total == len(points) * box.volume

    def test_expected_count(self):
        box = CyclicBox.from_lengths([2, 5], 5)
        assert expected_count_exact(4, box, 5) == Fraction(8, 5)
        assert expected_count(4, box, 5) == pytest.approx(1.6)

    def test_dimension_mismatch(self, catalog_points):
        _, points = catalog_points("hyperbola", 5)
        with pytest.raises(DimensionMismatchError):
            count_in_box(points, CyclicBox.from_lengths([1, 1, 1], 5))


class TestParseBox:
    """Tests for the start:len box syntax"""

    def test_starts_and_lengths(self):
        box = parse_box("2:3,0:5", 7)
        assert box.starts == (2, 0)
        assert box.lengths == (3, 5)

    def test_start_optional(self):
        assert parse_box("3,4", 7).starts == (0, 0)

    def test_full_axis(self):
        assert parse_box("0:p,1:1", 11).lengths == (11, 1)

    def test_power_length(self):
        assert parse_box("0:p^0.5,0:p^0.5", 101).lengths == (11, 11)

    def test_power_length_exact_square(self):
        # ceil must not overshoot when p^a is (numerically) an integer
        assert parse_box("p^1", 13).lengths == (13,)

    def test_start_reduced_mod_p(self):
        assert parse_box("9:2", 7).starts == (2,)

    def test_dims_checked(self):
        with pytest.raises(BoxError, match="expected 3"):
            parse_box("1,1", 5, dims=3)

    @pytest.mark.parametrize("text", ["", "a:1", "0:x", "0:0", "0:p^z"])
    def test_bad_syntax(self, text):
        with pytest.raises(BoxError):
            parse_box(text, 5)
