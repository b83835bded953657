import numpy as np
import pytest

from regdom import (
    DomainError,
    NullPlane,
    UsageError,
    initial_singularity,
    validate,
)
from regdom.domain import min_norm_in_hull

from conftest import plane


def test_nullplane_height_and_conormal():
    p = plane(0.6, 0.8, a=0.25)
    assert p.height([1.0, 0.0]) == pytest.approx(0.6 - 0.25)
    c = p.conormal()
    assert c.t == 1.0
    # conormal (1, u_hat) is null
    assert -c.t * c.t + np.dot(c.y, c.y) == pytest.approx(0.0, abs=1e-15)


def test_validate_rejects_non_unit():
    with pytest.raises(UsageError, match="unit"):
        validate([NullPlane(np.array([1.0, 1.0]), 0.0), plane(-1, 0)])


def test_validate_rejects_empty_and_single():
    with pytest.raises(UsageError, match="at least two elements"):
        validate([])
    with pytest.raises(UsageError, match="at least two"):
        validate([plane(1, 0)])


def test_validate_collapses_duplicates():
    dom = validate([plane(1, 0), plane(1, 0), plane(-1, 0)])
    assert dom.plane_count == 2
    with pytest.raises(UsageError, match="distinct"):
        validate([plane(1, 0), plane(1, 0)])


def test_validate_rejects_shared_direction():
    # same direction, different offsets: a slab of parallel planes
    with pytest.raises(UsageError, match="share one null direction"):
        validate([plane(1, 0, 0.0), plane(1, 0, 0.5)])


def test_validate_rejects_mixed_dimensions():
    p3 = NullPlane(np.array([1.0, 0.0, 0.0]), 0.0)
    with pytest.raises(UsageError, match="mix"):
        validate([plane(1, 0), p3])


def test_wedge_horizon(wedge):
    ys = np.array([[0.7, 2.0], [-0.4, -1.0], [0.0, 5.0]])
    vals = wedge.horizon_height(ys)
    assert vals == pytest.approx([0.7, 0.4, 0.0])
    assert wedge.horizon_height([0.3, 9.0]) == pytest.approx(0.3)


def test_contains_is_strict(wedge):
    assert wedge.contains((1.0, 0.5, 3.0))
    assert not wedge.contains((0.5, 0.5, 3.0))
    assert not wedge.contains((0.4, 0.5, 3.0))


def test_require_member_message(wedge):
    with pytest.raises(DomainError, match="not in the open domain"):
        wedge.require_member((0.0, 1.0, 0.0))


def test_subdifferential_active_sets(wedge):
    ridge = wedge.subdifferential([0.0, 2.0])
    assert ridge.active == (0, 1)
    # on the ridge the one-sided slope is +1 both ways
    assert ridge.support([1.0, 0.0]) == pytest.approx(1.0)
    assert ridge.support([-1.0, 0.0]) == pytest.approx(1.0)
    off = wedge.subdifferential([0.5, 2.0])
    assert off.active == (0,)
    assert off.support([-1.0, 0.0]) == pytest.approx(-1.0)


def test_horizon_is_one_lipschitz(tripod):
    rng = np.random.default_rng(3)
    a = rng.uniform(-3, 3, size=(200, 2))
    b = rng.uniform(-3, 3, size=(200, 2))
    ha = tripod.horizon_height(a)
    hb = tripod.horizon_height(b)
    gaps = np.abs(ha - hb) - np.linalg.norm(a - b, axis=1)
    assert gaps.max() <= 1e-12


def test_fingerprint_stability(wedge, tripod):
    again = validate([plane(1, 0), plane(-1, 0)])
    assert wedge.fingerprint() == again.fingerprint()
    assert wedge.fingerprint() != tripod.fingerprint()


def test_min_norm_in_hull_known_values():
    assert min_norm_in_hull(np.array([[1.0, 0.0], [-1.0, 0.0]])) == pytest.approx(0.0, abs=1e-12)
    assert min_norm_in_hull(np.array([[1.0, 0.0], [0.0, 1.0]])) == pytest.approx(np.sqrt(0.5))
    assert min_norm_in_hull(np.array([[0.6, 0.8]])) == pytest.approx(1.0)
    tri = np.array([[1.0, 0.0], [-0.5, np.sqrt(3) / 2], [-0.5, -np.sqrt(3) / 2]])
    assert min_norm_in_hull(tri) == pytest.approx(0.0, abs=1e-12)


def test_singularity_wedge_is_a_line(wedge):
    cx = initial_singularity(wedge)
    assert len(cx.vertices) == 0
    assert len(cx.edges) == 1
    e = cx.edges[0]
    assert e.kind == "line"
    assert abs(e.direction[0]) <= 1e-12
    assert cx.distance([0.0, 7.3]) == pytest.approx(0.0, abs=1e-12)
    assert cx.distance([0.5, -2.0]) == pytest.approx(0.5)


def test_singularity_tripod_rays(tripod):
    cx = initial_singularity(tripod)
    assert len(cx.vertices) == 1
    v = cx.vertices[0]
    assert np.linalg.norm(v.y) <= 1e-9
    assert v.t == pytest.approx(0.0, abs=1e-9)
    assert len(v.active) == 3
    assert len(cx.edges) == 3
    # each ray leaves the vertex opposite one plane direction
    dirs = sorted(tuple(np.round(-e.direction, 9)) for e in cx.edges)
    expect = sorted(tuple(np.round(u, 9)) for u in tripod.directions)
    for got, want in zip(dirs, expect):
        assert got == pytest.approx(want, abs=1e-9)


def test_singularity_square_diagonals(square):
    cx = initial_singularity(square)
    assert len(cx.vertices) == 1
    v = cx.vertices[0]
    assert np.linalg.norm(v.y) <= 1e-9
    # offsets 0.2 push the horizon down, so the vertex sits below t = 0
    assert v.t == pytest.approx(-0.2, abs=1e-9)
    assert len(cx.edges) == 4
    for e in cx.edges:
        assert e.kind == "ray"
        assert abs(abs(e.direction[0]) - abs(e.direction[1])) <= 1e-9


def test_singularity_rejects_higher_dimension(slab4):
    with pytest.raises(UsageError):
        initial_singularity(slab4)
