import numpy as np
import pytest

from diskpatch.geometry import (ClosedCurve, DiskDomain, GeometryError,
                                circle_nodes, curvature, curve_is_simple,
                                ellipse_nodes, invert_point, min_distance,
                                resample_constant_speed, signed_area)

from conftest import polygon_hausdorff


class TestInvertPoint:
    def test_unit_disk_interior(self, unit_disk):
        assert np.allclose(invert_point((0.5, 0.0), unit_disk), (2.0, 0.0))

    def test_boundary_fixed_point(self, unit_disk):
        assert np.allclose(invert_point((0.0, 1.0), unit_disk), (0.0, 1.0))

    def test_shifted_disk(self):
        disk = DiskDomain((0.0, 1.0), 1.0)
        assert np.allclose(invert_point((0.0, 0.5), disk), (0.0, -1.0))

    def test_center_rejected(self, unit_disk):
        with pytest.raises(GeometryError):
            invert_point((0.0, 0.0), unit_disk)

    def test_involution_property(self, unit_disk):
        rng = np.random.default_rng(11)
        r = np.exp(rng.uniform(np.log(1e-6), np.log(1e6), size=200))
        th = rng.uniform(0, 2 * np.pi, size=200)
        pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        back = invert_point(invert_point(pts, unit_disk), unit_disk)
        rel = np.hypot(*(back - pts).T) / np.maximum(1.0, r)
        assert rel.max() < 1e-12


class TestResample:
    def test_circle_uniformizes(self):
        # nodes crowded on one side of the circle
        th = np.sort(np.concatenate([np.linspace(0, np.pi, 160, endpoint=False),
                                     np.linspace(np.pi, 2 * np.pi, 40, endpoint=False)]))
        curve = ClosedCurve(np.stack([np.cos(th), np.sin(th)], axis=1))
        out = resample_constant_speed(curve, 64)
        gaps = out.chord_lengths()
        assert np.ptp(gaps) / gaps.mean() < 1e-3
        assert abs(np.hypot(*out.nodes.T) - 1).max() < 1e-4

    def test_ellipse_gaps_match_perimeter_oracle(self):
        curve = ClosedCurve(ellipse_nodes((0, 0), 2.0, 1.0, 512))
        out = resample_constant_speed(curve, 256)
        # independent oracle: fine-grained arclength summation on the ellipse
        th = np.linspace(0, 2 * np.pi, 2 ** 18, endpoint=False)
        dense = np.stack([2.0 * np.cos(th), np.sin(th)], axis=1)
        perim = np.hypot(*np.diff(dense, axis=0, append=dense[:1]).T).sum()
        gaps = out.chord_lengths()
        assert np.abs(gaps - perim / 256).max() / (perim / 256) < 1e-3

    def test_identity_on_uniform_curve(self):
        curve = ClosedCurve(circle_nodes((0.2, -0.1), 0.7, 128))
        out = resample_constant_speed(curve, 128)
        assert np.abs(out.nodes - curve.nodes).max() < 1e-12

    def test_orientation_preserved_and_hausdorff(self):
        curve = ClosedCurve(ellipse_nodes((0.1, 0.2), 0.5, 0.3, 200, angle=0.4))
        out = resample_constant_speed(curve, 300)
        assert out.signed_area() > 0
        h = polygon_hausdorff(out.nodes, curve.nodes)
        assert h < (curve.perimeter() / 200) ** 2 * 5

    def test_too_few_nodes_rejected(self):
        curve = ClosedCurve(circle_nodes((0, 0), 1.0, 32))
        with pytest.raises(GeometryError):
            resample_constant_speed(curve, 4)


class TestCurvature:
    def test_circle_constant(self):
        c = ClosedCurve(circle_nodes((0, 0), 0.5, 256))
        k = curvature(c)
        assert np.abs(k - 2.0).max() < 1e-3

    def test_ellipse_tip_value(self):
        c = ClosedCurve(ellipse_nodes((0, 0), 2.0, 1.0, 512))
        k = curvature(c)
        i = np.argmin(np.abs(c.nodes[:, 0] - 2.0) + np.abs(c.nodes[:, 1]))
        assert abs(k[i] - 2.0) < 1e-2    # kappa = a/b^2

    def test_matches_dense_spline_refit(self):
        # random smooth closed curve from a low-order Fourier series
        rng = np.random.default_rng(3)
        th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
        r = 1.0 + 0.15 * np.cos(3 * th + rng.uniform(0, 2 * np.pi)) \
            + 0.08 * np.sin(5 * th + rng.uniform(0, 2 * np.pi))
        nodes = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        k = curvature(ClosedCurve(nodes))
        # oracle: dense 8x resampled periodic spline, analytic curvature
        from scipy.interpolate import CubicSpline
        thd = np.linspace(0, 2 * np.pi, 4096 + 1)
        closed = np.vstack([nodes, nodes[:1]])
        spl = CubicSpline(np.linspace(0, 2 * np.pi, 513), closed, bc_type="periodic")
        d1 = spl(th, 1)
        d2 = spl(th, 2)
        k_oracle = ((d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
                    / np.hypot(d1[:, 0], d1[:, 1]) ** 3)
        assert np.abs(k - k_oracle).max() / np.abs(k_oracle).max() < 0.01

    def test_circle_convergence_order(self):
        devs = []
        for n in (64, 128, 256):
            k = curvature(ClosedCurve(circle_nodes((0, 0), 1.0, n)))
            devs.append(np.abs(k - 1.0).max())
        order1 = np.log2(devs[0] / devs[1])
        order2 = np.log2(devs[1] / devs[2])
        assert order1 >= 1.8 and order2 >= 1.8

    def test_reversed_circle_negative(self):
        c = ClosedCurve(circle_nodes((0, 0), 1.0, 64)[::-1].copy(),
                        check_orientation=False)
        assert np.all(curvature(c) < 0)


class TestSignedArea:
    def test_unit_circle(self):
        c = ClosedCurve(circle_nodes((0, 0), 1.0, 1024))
        assert abs(c.signed_area() - np.pi) < 1e-4

    def test_ellipse(self):
        c = ClosedCurve(ellipse_nodes((0.3, -0.2), 2.0, 1.0, 2048))
        assert abs(c.signed_area() - 2 * np.pi) < 1e-3

    def test_reversal_negates(self):
        nodes = ellipse_nodes((0, 0), 1.0, 0.5, 64)
        a = signed_area(nodes)
        assert abs(signed_area(nodes[::-1]) + a) < 1e-14 * abs(a)

    def test_resample_invariance(self):
        c = ClosedCurve(ellipse_nodes((0, 0), 0.6, 0.4, 512))
        out = resample_constant_speed(c, 512)
        assert abs(out.signed_area() - c.signed_area()) / c.signed_area() < 1e-4


class TestMinDistance:
    def test_two_circles(self):
        a = ClosedCurve(circle_nodes((0.5, 0), 0.25, 512))
        b = ClosedCurve(circle_nodes((-0.5, 0), 0.25, 512))
        assert abs(min_distance(a, b) - 0.5) < 1e-4

    def test_identical_curves(self):
        a = ClosedCurve(circle_nodes((0, 0), 0.5, 64))
        assert min_distance(a, a) == 0.0

    def test_against_brute_force(self):
        rng = np.random.default_rng(5)
        a = ClosedCurve(ellipse_nodes((0.4, 0.1), 0.3, 0.2, 40, angle=0.3))
        b = ClosedCurve(ellipse_nodes((-0.45, -0.2), 0.25, 0.15, 36, angle=1.2))
        d = min_distance(a, b)
        # brute force: all node pairs plus point-to-segment projections
        best = np.inf
        na, nb = a.nodes, b.nodes
        for p in na:
            for j in range(len(nb)):
                q0, q1 = nb[j], nb[(j + 1) % len(nb)]
                best = min(best, _pt_seg(p, q0, q1))
        for p in nb:
            for j in range(len(na)):
                q0, q1 = na[j], na[(j + 1) % len(na)]
                best = min(best, _pt_seg(p, q0, q1))
        assert abs(d - best) < 1e-12


def _pt_seg(p, a, b):
    d = b - a
    t = np.clip(np.dot(p - a, d) / np.dot(d, d), 0, 1)
    return np.hypot(*(p - (a + t * d)))


class TestCurveValidation:
    def test_too_few_nodes(self):
        with pytest.raises(GeometryError):
            ClosedCurve(circle_nodes((0, 0), 1.0, 4))

    def test_clockwise_rejected(self):
        with pytest.raises(GeometryError):
            ClosedCurve(circle_nodes((0, 0), 1.0, 64)[::-1].copy())

    def test_duplicate_nodes_rejected(self):
        nodes = circle_nodes((0, 0), 1.0, 64)
        nodes[10] = nodes[9]
        with pytest.raises(GeometryError):
            ClosedCurve(nodes)

    def test_simplicity_check(self):
        assert curve_is_simple(ClosedCurve(circle_nodes((0, 0), 1.0, 64)))
        # segments 0 and 2 cross at (1, 1)
        c = ClosedCurve(np.array([[0, 0], [2, 2], [2, 0], [0, 2],
                                  [-0.2, 2.1], [-0.5, 1.8], [-0.5, 1.0],
                                  [-0.3, 0.2]]),
                        check_orientation=False)
        assert not curve_is_simple(c)

    def test_curvature_rejects_duplicates(self):
        nodes = circle_nodes((0, 0), 1.0, 64)
        c = ClosedCurve(nodes)
        nodes2 = nodes.copy()
        nodes2[1] = nodes2[0] + 1e-300
        # duplicate neighbours caught at construction already
        with pytest.raises(GeometryError):
            ClosedCurve(np.repeat(nodes[:32], 2, axis=0))
