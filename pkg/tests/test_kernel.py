import numpy as np
import pytest

from diskpatch.geometry import ClosedCurve, DiskDomain, circle_nodes, ellipse_nodes
from diskpatch.kernel import (DomainError, NearSingularError, PatchSet,
                              QuadratureSpec, free_velocity, image_velocity,
                              log_lipschitz_check, oracle_velocity_area,
                              total_velocity, total_velocity_many,
                              velocity_gradient, velocity_hessian, velocity_jet)

from conftest import rankine, rankine_exact, random_ellipse_patchset

Q4 = QuadratureSpec(refinement=4)


class TestFreeVelocity:
    def test_rankine_interior(self):
        ps = rankine(0.5, 1024)
        u = free_velocity(ps, (0.25, 0.0), Q4)
        assert np.allclose(u, (0.0, 0.125), atol=2e-7)

    def test_rankine_exterior(self):
        ps = rankine(0.5, 1024)
        u = free_velocity(ps, (0.75, 0.0), Q4)
        assert np.allclose(u, (0.0, 1.0 / 6.0), atol=2e-7)

    def test_patch_center_stagnates(self):
        ps = rankine(0.5, 512)
        assert np.hypot(*free_velocity(ps, (0.0, 0.0), Q4)) < 1e-14

    def test_point_on_boundary_finite(self):
        # the log kernel is integrable; evaluation at a node must work
        ps = rankine(0.5, 256)
        x = ps.patches[0].boundary.nodes[7]
        u = free_velocity(ps, x, QuadratureSpec())
        assert np.all(np.isfinite(u))
        assert abs(np.hypot(*u) - 0.25) < 1e-3


class TestImageVelocity:
    def test_concentric_patch_vanishes(self):
        ps = rankine(0.7, 512)
        rng = np.random.default_rng(1)
        for _ in range(12):
            r = rng.uniform(0.05, 0.95)
            th = rng.uniform(0, 2 * np.pi)
            u = image_velocity(ps, (r * np.cos(th), r * np.sin(th)), Q4)
            assert np.hypot(*u) < 1e-8

    def test_point_image_prediction(self, unit_disk):
        # tiny patch at y0: image behaves like a point vortex at y0/|y0|^2
        n = 256
        y0 = np.array([0.6, 0.0])
        ps = PatchSet(unit_disk, [(1.0, ClosedCurve(circle_nodes(y0, 1e-2, n)))])
        x = np.array([0.3, 0.0])
        u = image_velocity(ps, x, Q4)
        area = np.pi * 1e-4
        ystar = np.array([5.0 / 3.0, 0.0])
        z = x - ystar
        pred = area / (2 * np.pi) * np.array([z[1], -z[0]]) / (z @ z)
        assert np.hypot(*(u - pred)) < 1e-3 * np.hypot(*pred)
        assert abs(u[0]) < 1e-12          # direction along e2

    def test_matches_area_oracle_far_from_boundary(self, unit_disk):
        nodes = ellipse_nodes((0.15, -0.1), 0.3, 0.2, 512, angle=0.5)
        ps = PatchSet(unit_disk, [(1.0, ClosedCurve(nodes))])
        u_img = image_velocity(ps, (0.0, 0.0), Q4)
        u_tot = total_velocity(ps, (0.0, 0.0), Q4)
        u_orc = oracle_velocity_area(ps, (0.0, 0.0), 2048)
        assert np.hypot(*(u_tot - u_orc)) <= 1e-4 * max(1.0, np.hypot(*u_tot))
        u_free = free_velocity(ps, (0.0, 0.0), Q4)
        assert np.allclose(u_img, u_orc - u_free, atol=2e-4)

    def test_outside_disk_rejected(self):
        ps = rankine(0.5, 256)
        with pytest.raises(DomainError):
            image_velocity(ps, (1.5, 0.0))


class TestTotalVelocity:
    def test_rankine_total(self):
        ps = rankine(0.5, 1024)
        u = total_velocity(ps, (0.75, 0.0), Q4)
        assert np.allclose(u, (0.0, 1.0 / 6.0), rtol=1e-6, atol=1e-9)

    def test_no_penetration(self, unit_disk):
        rng = np.random.default_rng(2)
        ps = PatchSet(unit_disk, [
            (1.0, ClosedCurve(ellipse_nodes((0.3, 0.2), 0.25, 0.15, 512, 0.3))),
            (-2.0, ClosedCurve(ellipse_nodes((-0.35, -0.3), 0.2, 0.12, 512, 1.1)))])
        for ang in np.linspace(0, 2 * np.pi, 64, endpoint=False):
            x = unit_disk.boundary_point(ang)
            u = total_velocity(ps, x, Q4)
            n = x - unit_disk.center
            assert abs(u @ n) <= 1e-6 * max(1.0, np.hypot(*u))

    def test_odd_symmetry_axis(self, unit_disk):
        base = ellipse_nodes((0.4, 0.1), 0.2, 0.15, 256, 0.7)
        mirror = (base * [-1, 1])[::-1]
        ps = PatchSet(unit_disk, [(1.0, ClosedCurve(base)),
                                  (-1.0, ClosedCurve(np.roll(mirror, 1, axis=0)))])
        for x2 in (-0.5, 0.0, 0.4, 0.9):
            u = total_velocity(ps, (0.0, x2), Q4)
            assert abs(u[1]) < 1e-12 * max(1.0, abs(u[0]))


class TestVelocityGradient:
    def test_rankine_interior_rotation(self):
        ps = rankine(0.5, 512)
        G = velocity_gradient(ps, (0.2, 0.1), Q4)
        assert np.allclose(G, [[0, -0.5], [0.5, 0]], atol=1e-9)

    def test_exterior_matches_finite_differences(self):
        ps = rankine(0.5, 512)
        x = np.array([0.75, 0.0])
        G = velocity_gradient(ps, x, Q4)
        h = 1e-5
        fd = np.empty((2, 2))
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = h
            fd[:, j] = (total_velocity(ps, x + dp, Q4)
                        - total_velocity(ps, x - dp, Q4)) / (2 * h)
        assert np.abs(G - fd).max() < 1e-5

    def test_empty_patchset_zero(self, unit_disk):
        ps = PatchSet(unit_disk, [])
        assert np.all(velocity_gradient(ps, (0.3, 0.1)) == 0.0)

    def test_trace_free(self):
        rng = np.random.default_rng(7)
        ps = random_ellipse_patchset(rng)
        for _ in range(10):
            x = rng.uniform(-0.6, 0.6, size=2)
            if np.hypot(*x) > 0.95:
                continue
            try:
                G = velocity_gradient(ps, x, Q4)
            except NearSingularError:
                continue
            assert abs(np.trace(G)) <= 1e-6

    def test_near_boundary_rejected(self):
        ps = rankine(0.5, 256)
        with pytest.raises(NearSingularError):
            velocity_gradient(ps, (0.5 + 1e-5, 0.0), QuadratureSpec())

    def test_gradient_fd_consistency_random(self):
        rng = np.random.default_rng(9)
        ps = random_ellipse_patchset(rng)
        checked = 0
        while checked < 5:
            x = rng.uniform(-0.7, 0.7, size=2)
            if np.hypot(*x) > 0.9:
                continue
            try:
                G = velocity_gradient(ps, x, Q4)
            except NearSingularError:
                continue
            h = 1e-5
            fd = np.empty((2, 2))
            for j in range(2):
                dp = np.zeros(2)
                dp[j] = h
                fd[:, j] = (total_velocity(ps, x + dp, Q4)
                            - total_velocity(ps, x - dp, Q4)) / (2 * h)
            assert np.abs(G - fd).max() < 1e-4
            checked += 1

    def test_inside_reflected_patch(self, unit_disk):
        # evaluation inside the reflected set exercises the jump correction
        ps = rankine(0.5, 512)
        x = np.array([2.5, 0.0])      # reflection of (0.4, 0): inside the image
        G = velocity_gradient(ps, x, Q4)
        h = 1e-5
        fd = np.empty((2, 2))
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = h
            f0, g0 = _parts(ps, x + dp)
            f1, g1 = _parts(ps, x - dp)
            fd[:, j] = ((f0 + g0) - (f1 + g1)) / (2 * h)
        assert np.abs(G - fd).max() < 1e-5
        # image vorticity at x is -theta R^4/|x|^4
        curl = G[1, 0] - G[0, 1]
        assert abs(curl - (-1.0 / np.hypot(*x) ** 4)) < 1e-6


def _parts(ps, x):
    from diskpatch.kernel import velocity_parts_many
    f, g = velocity_parts_many(ps, x, Q4)
    return f[0], g[0]


class TestVelocityHessian:
    def test_zero_inside_rankine(self):
        ps = rankine(0.5, 512)
        H = velocity_hessian(ps, (0.2, 0.05), Q4)
        assert np.abs(H).max() < 1e-12

    def test_point_vortex_far_field(self, unit_disk):
        ps = PatchSet(unit_disk, [(1.0, ClosedCurve(circle_nodes((0.0, 0.0), 1e-2, 256)))])
        x = np.array([0.5, 0.0])
        H = velocity_hessian(ps, x, Q4)
        area = np.pi * 1e-4
        # |hess|_F of a point vortex: 2 * area/pi / d^3 (image term negligible)
        frob = np.sqrt(np.einsum("ijk,ijk->", H, H))
        pred = 2 * area / np.pi / 0.5 ** 3
        assert abs(frob - pred) / pred < 0.05

    def test_matches_second_differences(self):
        rng = np.random.default_rng(13)
        ps = random_ellipse_patchset(rng)
        x = np.array([0.1, -0.65])
        from diskpatch.geometry import min_distance
        from diskpatch.kernel import _boundary_distance
        if _boundary_distance(ps, x[None, :], 4)[0] < 0.05:
            x = np.array([0.0, 0.8])
        H = velocity_hessian(ps, x, Q4)
        h = 1e-4
        fd = np.empty((2, 2, 2))
        for k in range(2):
            dp = np.zeros(2)
            dp[k] = h
            dG = (velocity_gradient(ps, x + dp, Q4)
                  - velocity_gradient(ps, x - dp, Q4)) / (2 * h)
            fd[:, :, k] = dG
        assert np.abs(H - fd).max() < 1e-4

    def test_symmetric_last_slots(self):
        ps = rankine(0.5, 512)
        H = velocity_hessian(ps, (0.8, 0.1), Q4)
        assert np.abs(H[:, 0, 1] - H[:, 1, 0]).max() < 1e-12

    def test_inside_reflection_rejected(self):
        ps = rankine(0.5, 512)
        with pytest.raises(DomainError):
            velocity_hessian(ps, (2.5, 0.0), Q4)


class TestOracle:
    def test_rankine_against_closed_form(self):
        ps = rankine(0.5, 1024)
        u = oracle_velocity_area(ps, (0.75, 0.0), 2048)
        assert np.hypot(*(u - (0, 1 / 6))) < 1e-3

    def test_empty(self, unit_disk):
        ps = PatchSet(unit_disk, [])
        assert np.all(oracle_velocity_area(ps, (0.1, 0.1), 256) == 0.0)

    def test_contour_agreement_random(self):
        rng = np.random.default_rng(21)
        for _ in range(3):
            ps = random_ellipse_patchset(rng, n=256)
            x = rng.uniform(-0.5, 0.5, size=2)
            u_c = total_velocity(ps, x, QuadratureSpec(refinement=8))
            u_o = oracle_velocity_area(ps, x, 2048)
            assert np.hypot(*(u_c - u_o)) <= 1e-4 * max(1.0, np.hypot(*u_c))

    def test_refinement_convergence(self, unit_disk):
        # coarse node polygon; refinement converges to the smooth curve value
        nodes = ellipse_nodes((0.2, 0.1), 0.35, 0.22, 48, angle=0.9)
        ps = PatchSet(unit_disk, [(1.0, ClosedCurve(nodes))])
        x = np.array([-0.3, 0.25])
        ref = oracle_velocity_area(ps, x, 4096)
        errs = []
        for r in (1, 2, 4):
            u = total_velocity(ps, x, QuadratureSpec(refinement=r))
            errs.append(np.hypot(*(u - ref)))
        order1 = np.log2(errs[0] / errs[1])
        order2 = np.log2(errs[1] / errs[2])
        assert order1 >= np.log2(3) and order2 >= 1.0


class TestLogLipschitz:
    def test_empty_patchset(self, unit_disk):
        ps = PatchSet(unit_disk, [])
        assert log_lipschitz_check(ps, [((0.1, 0), (0.2, 0))]) == 0.0

    def test_identical_pair_skipped(self):
        ps = rankine(0.5, 256)
        assert log_lipschitz_check(ps, [((0.1, 0.0), (0.1, 0.0))]) == 0.0

    def test_bounded_under_refinement(self):
        ps = rankine(0.5, 256)
        rng = np.random.default_rng(3)
        pairs = []
        while len(pairs) < 200:
            a, b = rng.uniform(-0.95, 0.95, size=(2, 2))
            if np.hypot(*a) < 0.97 and np.hypot(*b) < 0.97:
                pairs.append((a, b))
        v1 = log_lipschitz_check(ps, pairs, QuadratureSpec(refinement=1))
        v2 = log_lipschitz_check(ps, pairs, QuadratureSpec(refinement=4))
        assert 0 < v1 < 10
        assert abs(v2 - v1) < 0.1 * v1


class TestVelocityJet:
    def test_jet_assembles(self):
        ps = rankine(0.5, 256)
        jet = velocity_jet(ps, (0.7, 0.1), Q4, with_hessian=True)
        assert abs(np.trace(jet.grad_u)) < 1e-8
        assert jet.hess_u.shape == (2, 2, 2)


class TestPatchSetValidation:
    def test_overlapping_patches_rejected(self, unit_disk):
        a = ClosedCurve(circle_nodes((0.1, 0), 0.3, 64))
        b = ClosedCurve(circle_nodes((0.2, 0), 0.3, 64))
        with pytest.raises(Exception):
            PatchSet(unit_disk, [(1.0, a), (-1.0, b)])

    def test_zero_strength_rejected(self, unit_disk):
        a = ClosedCurve(circle_nodes((0.1, 0), 0.3, 64))
        with pytest.raises(Exception):
            PatchSet(unit_disk, [(0.0, a)])

    def test_node_outside_disk_rejected(self, unit_disk):
        a = ClosedCurve(circle_nodes((0.8, 0), 0.3, 64))
        with pytest.raises(Exception):
            PatchSet(unit_disk, [(1.0, a)])
