import numpy as np
import pytest

from regdom import NullPlane, validate

ROOT3 = np.sqrt(3.0)


def plane(ux, uy, a=0.0):
    return NullPlane(u_hat=np.array([ux, uy], dtype=float), a=float(a))


@pytest.fixture(scope="session")
def wedge():
    # two opposite null planes through the origin; horizon h(y) = |y1|
    return validate([plane(1.0, 0.0), plane(-1.0, 0.0)])


@pytest.fixture(scope="session")
def tripod():
    return validate([
        plane(1.0, 0.0),
        plane(-0.5, ROOT3 / 2),
        plane(-0.5, -ROOT3 / 2),
    ])


@pytest.fixture(scope="session")
def square():
    return validate([
        plane(1.0, 0.0, 0.2),
        plane(-1.0, 0.0, 0.2),
        plane(0.0, 1.0, 0.2),
        plane(0.0, -1.0, 0.2),
    ])


@pytest.fixture(scope="session")
def slab4():
    # two opposite planes in R^{1,3}; levels are the cylinder sqrt(a^2 + y1^2)
    u = np.zeros(3)
    u[0] = 1.0
    return validate([NullPlane(u_hat=u.copy(), a=0.0),
                     NullPlane(u_hat=-u, a=0.0)])


def random_domain(seed, count):
    """Planar domain with `count` well-separated directions and small offsets."""
    rng = np.random.default_rng(seed)
    while True:
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=count))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * np.pi]]))
        if gaps.min() > 0.3:
            break
    offsets = rng.uniform(-0.3, 0.3, size=count)
    planes = [NullPlane(u_hat=np.array([np.cos(t), np.sin(t)]), a=float(a))
              for t, a in zip(angles, offsets)]
    return validate(planes)
