import numpy as np
import pytest

from diskpatch.geometry import ClosedCurve, DiskDomain, circle_nodes, ellipse_nodes
from diskpatch.kernel import PatchSet, QuadratureSpec


@pytest.fixture
def unit_disk():
    return DiskDomain((0.0, 0.0), 1.0)


@pytest.fixture
def ks_disk():
    return DiskDomain((0.0, 1.0), 1.0)


def rankine(radius=0.5, n=1024, disk=None):
    disk = disk or DiskDomain((0.0, 0.0), 1.0)
    return PatchSet(disk, [(1.0, ClosedCurve(circle_nodes(disk.center, radius, n)))])


def rankine_exact(x, radius=0.5, theta=1.0):
    """Velocity of the concentric circular patch in its own disk."""
    x = np.asarray(x, float)
    r = np.hypot(*x)
    if r < radius:
        return theta * 0.5 * np.array([-x[1], x[0]])
    return theta * radius ** 2 / (2 * r * r) * np.array([-x[1], x[0]])


def random_ellipse_patchset(rng, disk=None, n=512):
    """A random eccentric ellipse patch strictly inside the unit disk."""
    disk = disk or DiskDomain((0.0, 0.0), 1.0)
    while True:
        a = rng.uniform(0.1, 0.45)
        b = rng.uniform(0.08, a)
        cx, cy = rng.uniform(-0.4, 0.4, size=2)
        ang = rng.uniform(0, np.pi)
        nodes = ellipse_nodes((cx, cy), a, b, n, ang)
        if np.hypot(nodes[:, 0], nodes[:, 1]).max() < 0.97:
            theta = rng.choice([-1.5, -0.5, 1.0, 2.0])
            return PatchSet(disk, [(float(theta), ClosedCurve(nodes))])


def polygon_hausdorff(a, b):
    from diskpatch._compiled import points_to_polyline_distance
    pa = np.ascontiguousarray(a)
    pb = np.ascontiguousarray(b)
    return max(points_to_polyline_distance(pa, pb).max(),
               points_to_polyline_distance(pb, pa).max())
