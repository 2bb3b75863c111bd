import io
import math

import numpy as np
import pytest

from helpers import random_manifold_points
from hyperloom import geometry as geo
from hyperloom.errors import DimensionError, DomainError, ParseError
from hyperloom.rng import substream

SQRT2 = math.sqrt(2.0)


class TestLorentzInner:
    def test_on_manifold_self_inner(self):
        assert geo.lorentz_inner((1, 0, 0), (1, 0, 0)) == -1.0

    def test_closed_form(self):
        assert geo.lorentz_inner((SQRT2, 1, 0), (1, 0, 0)) == pytest.approx(-SQRT2)

    def test_orthogonal_spatial(self):
        assert geo.lorentz_inner((0, 1, 0), (0, 0, 1)) == 0.0

    def test_symmetry(self):
        rng = substream(11)
        for _ in range(20):
            x, y = rng.normal(size=(2, 3))
            assert geo.lorentz_inner(x, y) == pytest.approx(geo.lorentz_inner(y, x))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            geo.lorentz_inner((1, 0, 0), (1, 0))


class TestLorentzDistance:
    def test_identity_of_indiscernibles(self):
        # Round-off in <x, x>_L can leave a sqrt(eps)-sized residual.
        x = np.array([SQRT2, 1.0, 0.0])
        assert geo.lorentz_distance(x, x) == pytest.approx(0.0, abs=1e-7)
        origin = np.array([1.0, 0.0, 0.0])
        assert geo.lorentz_distance(origin, origin) == 0.0

    def test_arcosh_sqrt2(self):
        d = geo.lorentz_distance((1, 0, 0), (SQRT2, 1, 0))
        assert d == pytest.approx(math.log(1 + SQRT2), abs=1e-12)

    def test_geodesic_parameterization(self):
        t = 2.0
        x = (math.cosh(t), math.sinh(t), 0.0)
        assert geo.lorentz_distance(x, (1, 0, 0)) == pytest.approx(2.0, abs=1e-12)

    def test_off_manifold_rejected(self):
        with pytest.raises(DomainError):
            geo.lorentz_distance((1.5, 0, 0), (1, 0, 0))


class TestPoincareDistance:
    def test_zero_at_identity(self):
        p = np.array([0.3, -0.2])
        assert geo.poincare_distance(p, p) == 0.0

    def test_matches_lorentz_preimages(self):
        # Disk points (0,0) and (sqrt(2)-1, 0) are the projections of
        # (1,0,0) and (sqrt(2),1,0); the distances must agree.
        p = np.zeros(2)
        q = np.array([1.0 / (1.0 + SQRT2), 0.0])
        d = geo.poincare_distance(p, q)
        assert d == pytest.approx(math.log(1 + SQRT2), abs=1e-12)

    def test_symmetry(self):
        rng = substream(12)
        for _ in range(20):
            p, q = rng.uniform(-0.6, 0.6, size=(2, 2))
            assert geo.poincare_distance(p, q) == pytest.approx(
                geo.poincare_distance(q, p))

    def test_outside_ball_rejected(self):
        with pytest.raises(DomainError):
            geo.poincare_distance((1.0, 0.0), (0.0, 0.0))


class TestModelBijection:
    def test_origin_to_origin(self):
        np.testing.assert_allclose(geo.to_poincare((1, 0, 0)), [0, 0])
        np.testing.assert_allclose(geo.from_poincare((0, 0)), [1, 0, 0])

    def test_to_poincare_closed_form(self):
        np.testing.assert_allclose(geo.to_poincare((SQRT2, 1, 0)),
                                   [1.0 / (1.0 + SQRT2), 0.0])

    def test_from_poincare_half(self):
        np.testing.assert_allclose(geo.from_poincare((0.5, 0.0)),
                                   [5.0 / 3.0, 4.0 / 3.0, 0.0], atol=1e-15)

    def test_from_poincare_on_manifold(self):
        x = geo.from_poincare((0.9, 0.0))
        assert abs(geo.lorentz_inner(x, x) + 1.0) < 1e-12

    def test_roundtrip_identity(self):
        rng = substream(13)
        for _ in range(200):
            p = rng.uniform(-0.7, 0.7, size=2)
            if np.linalg.norm(p) > 0.99:
                continue
            np.testing.assert_allclose(geo.to_poincare(geo.from_poincare(p)), p,
                                       atol=1e-12)

    def test_outside_ball_rejected(self):
        with pytest.raises(DomainError):
            geo.from_poincare((0.8, 0.8))

    def test_distance_equivalence_bulk(self):
        # Bijection preserves distances on random on-manifold pairs.
        rng = substream(14)
        pts = random_manifold_points(rng, 200, scale=1.5)
        for _ in range(300):
            i, j = rng.integers(len(pts), size=2)
            dl = geo.lorentz_distance(pts[i], pts[j])
            dp = geo.poincare_distance(geo.to_poincare(pts[i]),
                                       geo.to_poincare(pts[j]))
            assert abs(dl - dp) < 1e-9


class TestProjectTangent:
    def test_origin_projection(self):
        out = geo.project_tangent(np.array([1.0, 0, 0]),
                                  np.array([0.3, 0.5, -0.2]))
        np.testing.assert_allclose(out, [0.0, 0.5, -0.2], atol=1e-15)

    def test_idempotent(self):
        rng = substream(15)
        theta = random_manifold_points(rng, 1)[0]
        x = rng.normal(size=3)
        once = geo.project_tangent(theta, x)
        twice = geo.project_tangent(theta, once)
        np.testing.assert_allclose(twice, once, atol=1e-10)

    def test_orthogonality(self):
        theta = np.array([SQRT2, 1.0, 0.0])
        out = geo.project_tangent(theta, np.array([1.0, 0.0, 0.0]))
        assert abs(geo.lorentz_inner(theta, out)) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            geo.project_tangent(np.array([1.0, 0, 0]), np.array([1.0, 0]))


class TestExpMap:
    def test_zero_vector(self):
        theta = np.array([SQRT2, 1.0, 0.0])
        np.testing.assert_allclose(geo.exp_map(theta, np.zeros(3)), theta)

    def test_closed_form_geodesic(self):
        t = 1.5
        out = geo.exp_map(np.array([1.0, 0, 0]), np.array([0.0, t, 0.0]))
        np.testing.assert_allclose(out, [math.cosh(t), math.sinh(t), 0.0],
                                   atol=1e-12)

    def test_geodesic_length(self):
        rng = substream(16)
        for _ in range(100):
            theta = random_manifold_points(rng, 1)[0]
            v = geo.project_tangent(theta, rng.normal(size=3))
            out = geo.exp_map(theta, v)
            assert abs(geo.lorentz_inner(out, out) + 1.0) < 1e-9
            assert abs(geo.lorentz_distance(theta, out)
                       - geo.lorentz_norm(v)) < 1e-8

    def test_non_tangent_rejected(self):
        with pytest.raises(DomainError):
            geo.exp_map(np.array([1.0, 0, 0]), np.array([1.0, 0.0, 0.0]))


class TestHyperbolicRotation:
    def test_identity(self):
        assert geo.is_hyperbolic_rotation(np.eye(3), 1e-10)

    def test_sheet_flip_rejected(self):
        assert not geo.is_hyperbolic_rotation(np.diag([-1.0, 1.0, 1.0]), 1e-10)

    def test_three_factor_product(self):
        # Spatial rotation times boosts along each spatial axis, all with
        # parameter x = 0.3, is a sheet-preserving member of the group.
        x = 0.3
        rot = np.array([[1, 0, 0],
                        [0, math.cos(x), -math.sin(x)],
                        [0, math.sin(x), math.cos(x)]])
        boost1 = np.array([[math.cosh(x), math.sinh(x), 0],
                           [math.sinh(x), math.cosh(x), 0],
                           [0, 0, 1]])
        boost2 = np.array([[math.cosh(x), 0, math.sinh(x)],
                           [0, 1, 0],
                           [math.sinh(x), 0, math.cosh(x)]])
        assert geo.is_hyperbolic_rotation(rot @ boost1 @ boost2, 1e-10)

    def test_distance_invariance(self):
        rng = substream(17)
        pts = random_manifold_points(rng, 10)
        r_mat = geo.random_hyperbolic_rotation(rng, 2, max_boost=1.0)
        assert geo.is_hyperbolic_rotation(r_mat, 1e-10)
        rotated = pts @ r_mat.T
        for i in range(5):
            for j in range(i + 1, 5):
                assert geo.lorentz_distance(pts[i], pts[j]) == pytest.approx(
                    geo.lorentz_distance(rotated[i], rotated[j]), abs=1e-9)


class TestPositionsIO:
    def test_roundtrip(self):
        rng = substream(18)
        pts = random_manifold_points(rng, 7)
        buf = io.StringIO()
        geo.write_positions(pts, buf)
        back = geo.read_positions(io.StringIO(buf.getvalue()))
        np.testing.assert_array_equal(back, pts)

    def test_euclidean_columns(self):
        pts = np.array([[0.1, 0.2], [0.3, -0.4]])
        buf = io.StringIO()
        geo.write_positions(pts, buf, r=2)
        back = geo.read_positions(io.StringIO(buf.getvalue()))
        np.testing.assert_array_equal(back, pts)

    def test_missing_header(self):
        with pytest.raises(ParseError):
            geo.read_positions(io.StringIO("0\t1.0\t0.0\t0.0\n"))

    def test_byte_identical_writes(self):
        rng = substream(19)
        pts = random_manifold_points(rng, 5)
        bufs = [io.StringIO(), io.StringIO()]
        for buf in bufs:
            geo.write_positions(pts, buf)
        assert bufs[0].getvalue() == bufs[1].getvalue()
