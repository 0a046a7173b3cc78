"""Inscribed polygons: length/turning control, genericity, perturbation."""

import numpy as np
import pytest

from polyplateau import (
    Polygon,
    check_generic,
    circle,
    inscribe,
    load_polygon,
    perturb_to_generic,
    perturbed_circle,
    polygon_curve,
    polygon_length,
    polygon_total_curvature,
    save_polygon,
    total_curvature,
    verify_approximation,
)
from polyplateau.errors import GenericityError, ParameterError

TWO_PI = 2.0 * np.pi
SQUARE = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
THIRDS = (0.0, TWO_PI / 3, 2 * TWO_PI / 3)


class TestPolygonBasics:
    def test_square_length(self, square_polygon):
        assert polygon_length(square_polygon) == pytest.approx(4.0, abs=1e-15)

    def test_hexagon_in_unit_circle_has_length_six(self):
        hexagon = inscribe(circle(), 6, THIRDS)
        assert polygon_length(hexagon) == pytest.approx(6.0, abs=1e-12)

    def test_tetra_length(self, tetra_polygon):
        assert polygon_length(tetra_polygon) == pytest.approx(8.0 * np.sqrt(2.0), rel=1e-15)

    def test_square_turning(self, square_polygon):
        assert polygon_total_curvature(square_polygon) == pytest.approx(TWO_PI, abs=1e-12)

    def test_convex_polygon_turning_is_2pi(self, gon64_polygon):
        assert polygon_total_curvature(gon64_polygon) == pytest.approx(TWO_PI, abs=1e-10)

    def test_tetra_turning(self, tetra_polygon):
        # consecutive tetrahedron edge directions meet at 120 degrees
        assert polygon_total_curvature(tetra_polygon) == pytest.approx(8 * np.pi / 3, rel=1e-14)

    def test_backtracking_polygon_rejected(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [1, 0, 0.0]])
        with pytest.raises(ParameterError):
            Polygon(verts, (0, 1, 2))

    def test_too_few_vertices_rejected(self):
        with pytest.raises(ParameterError, match="at least 4"):
            Polygon(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]), (0, 1, 2))


class TestCheckGeneric:
    def test_planar_square_fails(self, square_polygon):
        cert = check_generic(square_polygon)
        assert not cert.passes
        assert cert.min_pair_angle == pytest.approx(0.0, abs=1e-12)  # parallel sides
        assert cert.min_triple_volume == pytest.approx(0.0, abs=1e-12)

    def test_tetra_passes_with_hand_computed_volume(self, tetra_polygon):
        cert = check_generic(tetra_polygon)
        assert cert.passes
        # |det| of three unit edge directions = 16 / (2*sqrt(2))^3 = 1/sqrt(2)
        assert cert.min_triple_volume == pytest.approx(16.0 / (2.0 * np.sqrt(2.0)) ** 3, rel=1e-12)
        assert cert.min_pair_angle == pytest.approx(np.pi / 3, rel=1e-12)

    def test_lifted_square_certificate_is_recorded(self):
        verts = SQUARE.copy()
        verts[3, 2] = 0.1
        cert = check_generic(Polygon(verts, (0, 1, 2)))
        assert np.isfinite(cert.min_pair_angle) and np.isfinite(cert.min_triple_volume)


class TestInscribe:
    def test_circle_hexagon_with_anchor_thirds_is_regular(self):
        hexagon = inscribe(circle(), 6, THIRDS)
        th = TWO_PI * np.arange(6) / 6
        expected = np.column_stack([np.cos(th), np.sin(th), np.zeros(6)])
        assert np.allclose(hexagon.vertices, expected, atol=1e-12)
        assert hexagon.anchor_indices == (0, 2, 4)

    def test_square_curve_n4_is_the_square(self):
        sq = polygon_curve(SQUARE)
        poly = inscribe(sq, 4, (0.0, 1.0, 2.0))  # anchors on three corners
        assert np.allclose(poly.vertices, SQUARE, atol=1e-14)
        assert polygon_total_curvature(poly) == pytest.approx(
            total_curvature(sq), abs=1e-12
        )

    def test_n_below_mandatory_count_rejected(self):
        sq = polygon_curve(SQUARE)
        with pytest.raises(ParameterError, match="mandatory"):
            inscribe(sq, 5, (0.5, 1.5, 2.5))  # 4 corners + 3 anchors > 5

    def test_inscribed_turning_never_exceeds_curve_total_curvature(self):
        for n in (16, 64, 128):
            poly = inscribe(perturbed_circle(0.1, 3), n, THIRDS)
            gap = polygon_total_curvature(poly) - total_curvature(perturbed_circle(0.1, 3))
            assert gap <= 1e-10

    def test_circle_length_gap_halves_monotonically(self):
        gaps = {}
        for n in (8, 16, 32, 64, 128, 256):
            poly = inscribe(circle(), n, THIRDS)
            gaps[n] = TWO_PI - polygon_length(poly)
        for n in (8, 16, 32, 64, 128):
            assert gaps[2 * n] < gaps[n]

    def test_anchor_vertices_sampled_exactly(self):
        poly = inscribe(perturbed_circle(0.1, 3), 32, THIRDS)
        anchors = np.asarray(poly.anchor_indices)
        expected = perturbed_circle(0.1, 3).sample(np.asarray(THIRDS))
        assert np.array_equal(poly.vertices[anchors], expected)


class TestPerturbToGeneric:
    def test_generic_input_returned_unchanged(self, tetra_polygon):
        out = perturb_to_generic(tetra_polygon, 1e-3, seed=1)
        assert out is tetra_polygon

    def test_planar_hexagon_becomes_generic_within_delta(self):
        hexagon = inscribe(circle(), 6, THIRDS)
        out = perturb_to_generic(hexagon, 1e-3, seed=4)
        assert check_generic(out).passes
        assert np.abs(out.vertices - hexagon.vertices).max() <= 1e-3

    def test_zero_delta_rejected(self):
        hexagon = inscribe(circle(), 6, THIRDS)
        with pytest.raises(ParameterError, match="delta"):
            perturb_to_generic(hexagon, 0.0)

    def test_seeded_perturbation_is_bit_identical(self):
        hexagon = inscribe(circle(), 8, THIRDS)
        a = perturb_to_generic(hexagon, 1e-3, seed=9)
        b = perturb_to_generic(hexagon, 1e-3, seed=9)
        assert np.array_equal(a.vertices, b.vertices)

    def test_anchors_never_move(self):
        poly = inscribe(circle(), 16, THIRDS)
        out = perturb_to_generic(poly, 1e-3, seed=2)
        idx = np.asarray(out.anchor_indices)
        assert np.array_equal(out.vertices[idx], poly.vertices[idx])
        assert np.array_equal(out.vertices[idx], circle().sample(np.asarray(THIRDS)))


class TestVerifyApproximation:
    def test_square_against_itself(self):
        sq = polygon_curve(SQUARE)
        poly = inscribe(sq, 4, (0.0, 1.0, 2.0))
        rep = verify_approximation(sq, poly, 0.01)
        assert rep.length_gap == pytest.approx(0.0, abs=1e-12)
        assert rep.curvature_gap == pytest.approx(0.0, abs=1e-12)
        assert rep.sup_deviation == pytest.approx(0.0, abs=1e-12)
        assert not rep.passes  # planar square is not generic

    def test_circle_64gon_closed_form_length_gap(self):
        poly = inscribe(circle(), 64, TWO_PI * np.array([0.0, 21.0, 43.0]) / 64)
        rep = verify_approximation(circle(), poly, 0.01)
        assert -rep.length_gap == pytest.approx(TWO_PI - 128 * np.sin(np.pi / 64), abs=1e-12)
        assert rep.curvature_gap <= 1e-10

    def test_perturbed_circle_n256_passes_after_perturbation(self):
        curve = perturbed_circle(0.1, 3)
        poly = inscribe(curve, 256, THIRDS)
        poly = perturb_to_generic(poly, 1e-4, seed=3)
        rep = verify_approximation(curve, poly, 0.01)
        assert rep.passes
        assert rep.length_gap < 0.01 and rep.curvature_gap < 0.01

    def test_missing_source_params_rejected(self, square_polygon):
        with pytest.raises(ParameterError, match="source_params"):
            verify_approximation(polygon_curve(SQUARE), square_polygon, 0.01)


class TestSaveLoad:
    def test_roundtrip(self, tmp_path):
        poly = inscribe(perturbed_circle(0.1, 3), 16, THIRDS)
        path = tmp_path / "poly.txt"
        save_polygon(poly, path, seed=42)
        back = load_polygon(path)
        assert np.allclose(back.vertices, poly.vertices, atol=1e-15)
        assert back.anchor_indices == poly.anchor_indices

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0 0\n1 0 0\n1 1 0\n0 1 0\n")
        with pytest.raises(ParameterError, match="header"):
            load_polygon(path)
