"""Length, corner angles and total curvature of piecewise-C2 curves.

Reference values for the non-closed-form cases were computed with an
independent composite-Simpson oracle on 10^4+1 nodes (see oracle constants).
"""

import numpy as np
import pytest

from polyplateau import (
    FourierArc,
    ParametricArc,
    PiecewiseC2Curve,
    arc_length,
    circle,
    circular_arc,
    corner_angles,
    ellipse,
    perturbed_circle,
    polygon_curve,
    total_curvature,
)
from polyplateau.errors import ParameterError

TWO_PI = 2.0 * np.pi

# composite Simpson at 10001 nodes of |gamma'| and |gamma' x gamma''|/|gamma'|^2
PERTURBED_LENGTH = 6.422256623396209
PERTURBED_TC = 7.238018909405646
ELLIPSE21_LENGTH = 9.688448220547675

SQUARE = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)


def lens_curve():
    """Convex planar lens of two circular arcs with corner angles pi/3.

    Circles of radius 2/sqrt(3) centered at (0, +-1/sqrt(3)) through
    (+-1, 0); the tangents at the junctions differ by exactly pi/3.
    """
    c = 1.0 / np.sqrt(3.0)
    r = 2.0 / np.sqrt(3.0)
    lower = circular_arc(0.0, 1.0, (0.0, c, 0.0), r, np.pi + np.pi / 6, TWO_PI - np.pi / 6)
    upper = circular_arc(1.0, 2.0, (0.0, -c, 0.0), r, np.pi / 6, np.pi - np.pi / 6)
    return PiecewiseC2Curve([lower, upper])


def split_circle(t_split=np.pi):
    """Unit circle artificially split into two Fourier arcs."""
    C = np.array([[1.0, 0.0, 0.0]])
    S = np.array([[0.0, 1.0, 0.0]])
    return PiecewiseC2Curve(
        [FourierArc(0.0, t_split, np.zeros(3), C, S), FourierArc(t_split, TWO_PI, np.zeros(3), C, S)]
    )


class TestArcLength:
    def test_unit_circle(self):
        assert arc_length(circle()) == pytest.approx(TWO_PI, abs=1e-12)

    def test_unit_square(self):
        assert arc_length(polygon_curve(SQUARE)) == pytest.approx(4.0, abs=1e-12)

    def test_perturbed_circle_matches_simpson_oracle(self):
        assert arc_length(perturbed_circle(0.1, 3)) == pytest.approx(PERTURBED_LENGTH, abs=1e-8)

    def test_ellipse_matches_simpson_oracle(self):
        assert arc_length(ellipse(2.0, 1.0)) == pytest.approx(ELLIPSE21_LENGTH, abs=1e-8)

    def test_additive_under_arc_subdivision(self):
        assert arc_length(split_circle(1.234)) == pytest.approx(TWO_PI, abs=1e-10)

    def test_nonfinite_derivative_reported(self):
        bad = ParametricArc(
            0.0,
            1.0,
            lambda t: np.array([t, 0.0, 0.0]),
            lambda t: np.array([1.0 / (t - 0.5) if abs(t - 0.5) > 1e-9 else np.inf, 0, 0]),
            lambda t: np.zeros(3),
        )
        from polyplateau.errors import EvaluationError, PolyplateauError

        with pytest.raises(PolyplateauError):
            # either construction-time regularity or quadrature evaluation trips
            c = PiecewiseC2Curve([bad, ParametricArc(1.0, 2.0, lambda t: np.array([2 - t, 0, 0]), lambda t: np.array([-1.0, 0, 0]), lambda t: np.zeros(3))])
            arc_length(c)


class TestCornerAngles:
    def test_square_has_four_right_angles(self):
        angles = corner_angles(polygon_curve(SQUARE))
        assert len(angles) == 4
        assert np.allclose([a.angle for a in angles], np.pi / 2, atol=1e-12)

    def test_split_circle_has_no_corners(self):
        assert corner_angles(split_circle()) == []

    def test_lens_has_two_pi_over_three_corners(self):
        angles = corner_angles(lens_curve())
        assert len(angles) == 2
        assert np.allclose([a.angle for a in angles], np.pi / 3, atol=1e-12)

    def test_cusp_rejected(self):
        # two parabolic branches meeting at (1, 0) with exactly reversed
        # tangents (a cusp), closed up by a straight segment
        fwd = ParametricArc(
            0.0, 1.0,
            lambda t: np.array([t, -((1.0 - t) ** 2), 0.0]),
            lambda t: np.array([1.0, 2.0 * (1.0 - t), 0.0]),
            lambda t: np.array([0.0, -2.0, 0.0]),
        )
        back = ParametricArc(
            1.0, 2.0,
            lambda t: np.array([2.0 - t, -2.0 * (t - 1.0) ** 2, 0.0]),
            lambda t: np.array([-1.0, -4.0 * (t - 1.0), 0.0]),
            lambda t: np.array([0.0, -4.0, 0.0]),
        )
        close = ParametricArc(
            2.0, 3.0,
            lambda t: np.array([0.0, t - 4.0, 0.0]),
            lambda t: np.array([0.0, 1.0, 0.0]),
            lambda t: np.zeros(3),
        )
        curve = PiecewiseC2Curve([fwd, back, close])
        with pytest.raises(ParameterError, match="cusp"):
            corner_angles(curve)


class TestTotalCurvature:
    def test_unit_circle(self):
        assert total_curvature(circle()) == pytest.approx(TWO_PI, abs=1e-10)

    def test_square(self):
        assert total_curvature(polygon_curve(SQUARE)) == pytest.approx(TWO_PI, abs=1e-12)

    def test_perturbed_circle_matches_simpson_oracle(self):
        assert total_curvature(perturbed_circle(0.1, 3)) == pytest.approx(PERTURBED_TC, abs=1e-7)

    @pytest.mark.parametrize(
        "curve_fn",
        [circle, lambda: ellipse(2.0, 1.0), lens_curve, lambda: polygon_curve(SQUARE)],
        ids=["circle", "ellipse", "lens", "square"],
    )
    def test_fenchel_equality_for_planar_convex(self, curve_fn):
        assert total_curvature(curve_fn()) == pytest.approx(TWO_PI, abs=1e-6)

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(5)
        base = perturbed_circle(0.1, 3)
        tc0 = total_curvature(base)
        for _ in range(3):
            q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
            if np.linalg.det(q) < 0:
                q[:, 0] = -q[:, 0]
            moved = base.transformed(q, rng.normal(size=3))
            assert abs(total_curvature(moved) - tc0) < 1e-9


class TestSample:
    def test_circle_axis_points(self):
        c = circle()
        assert np.allclose(c.sample(0.0), [1, 0, 0], atol=1e-15)
        assert np.allclose(c.sample(np.pi / 2), [0, 1, 0], atol=1e-15)

    def test_parameters_reduced_mod_period(self):
        c = circle()
        assert np.allclose(c.sample(TWO_PI + 0.3), c.sample(0.3), atol=1e-12)

    def test_square_side_midpoint(self):
        sq = polygon_curve(SQUARE)
        assert np.allclose(sq.sample(0.5), [0.5, 0, 0], atol=1e-15)


class TestValidation:
    def test_open_chain_rejected(self):
        a = ParametricArc(0, 1, lambda t: np.array([t, 0, 0]),
                          lambda t: np.array([1.0, 0, 0]), lambda t: np.zeros(3))
        b = ParametricArc(1, 2, lambda t: np.array([1.0, t - 1, 0]),
                          lambda t: np.array([0, 1.0, 0]), lambda t: np.zeros(3))
        with pytest.raises(ParameterError, match="close"):
            PiecewiseC2Curve([a, b])

    def test_self_touching_rejected(self):
        # figure-eight: passes through the origin twice
        C = np.array([[1.0, 0.0, 0.0]])
        S = np.array([[0.0, 0.0, 0.0], [0.0, 0.5, 0.0]])
        Cz = np.vstack([C, np.zeros((1, 3))])
        with pytest.raises(ParameterError, match="injective"):
            PiecewiseC2Curve([FourierArc(0.0, TWO_PI, np.zeros(3), Cz, S)])
