import numpy as np
import pytest

from regdom import (
    DomainError,
    GraphSurface,
    MinkVector,
    UsageError,
    cosmological_time,
    cosmological_time_batch,
    level_height,
    make_axes,
    reflect_time,
    sample_level,
    time_mirror,
)
from regdom.cosmotime import axes_around

from conftest import random_domain


def wedge_expected(t, y1):
    return np.sqrt(t * t - y1 * y1)


def test_wedge_sample_point(wedge):
    s = cosmological_time(wedge, (2.0, 1.0, 5.0))
    assert s.tau == pytest.approx(np.sqrt(3.0), rel=1e-12)
    assert s.r.t == pytest.approx(0.0, abs=1e-12)
    assert s.r.y == pytest.approx([0.0, 5.0], abs=1e-12)
    assert s.v.as_array() == pytest.approx(np.array([2.0, 1.0, 0.0]) / np.sqrt(3.0), rel=1e-12)
    assert s.active == (0, 1)
    assert s.q_star == pytest.approx([0.0, 5.0], abs=1e-12)
    assert s.objective_gap <= 1e-9


def test_wedge_closed_form_random(wedge):
    rng = np.random.default_rng(11)
    for _ in range(200):
        y1 = rng.uniform(-4, 4)
        y2 = rng.uniform(-4, 4)
        tau = rng.uniform(0.1, 6.0)
        t = np.hypot(tau, y1)
        s = cosmological_time(wedge, (t, y1, y2))
        assert s.tau == pytest.approx(tau, rel=1e-10)
        assert s.r.y[1] == pytest.approx(y2, abs=1e-9 * (1 + abs(y2)))
        assert s.v.y[1] == pytest.approx(0.0, abs=1e-9)


def test_velocity_is_unit_timelike_and_future(tripod):
    rng = np.random.default_rng(23)
    for _ in range(40):
        y = rng.uniform(-1.5, 1.5, size=2)
        t = tripod.horizon_height(y) + rng.uniform(0.2, 3.0)
        s = cosmological_time(tripod, (t, *y))
        norm = -s.v.t**2 + float(np.dot(s.v.y, s.v.y))
        assert norm == pytest.approx(-1.0, abs=1e-9)
        assert s.v.t > 0
        # x = r + tau * v reconstructs the query point
        x = s.r.as_array() + s.tau * s.v.as_array()
        assert x == pytest.approx([t, *y], abs=1e-8 * (1 + abs(t)))


def test_tripod_symmetric_point(tripod):
    s = cosmological_time(tripod, (1.0, 0.0, 0.0))
    assert s.tau == pytest.approx(1.0, rel=1e-12)
    assert len(s.active) == 3
    assert s.q_star == pytest.approx([0.0, 0.0], abs=1e-12)


def test_outside_and_boundary_rejected(wedge):
    with pytest.raises(DomainError):
        cosmological_time(wedge, (1.0, 1.0, 0.0))
    with pytest.raises(DomainError):
        cosmological_time(wedge, (-0.5, 0.0, 0.0))


def test_level_height_inverts_tau(tripod):
    rng = np.random.default_rng(5)
    for _ in range(25):
        y = rng.uniform(-2, 2, size=2)
        a = rng.uniform(0.2, 3.0)
        t = level_height(tripod, a, y)
        s = cosmological_time(tripod, (t, *y))
        # bisection stops at |tau - a| <= 1e-9 absolute
        assert s.tau == pytest.approx(a, abs=2e-9)


def test_batch_matches_pointwise(wedge):
    rng = np.random.default_rng(40)
    y = rng.uniform(-3, 3, size=(64, 2))
    t = wedge.horizon_height(y) + rng.uniform(0.1, 4.0, size=64)
    taus = cosmological_time_batch(wedge, t, y)
    for k in range(64):
        s = cosmological_time(wedge, MinkVector(t[k], y[k]))
        assert taus[k] == pytest.approx(s.tau, rel=1e-12)


def test_batch_worker_count_is_invisible(tripod):
    rng = np.random.default_rng(41)
    y = rng.uniform(-2, 2, size=(1000, 2))
    t = tripod.horizon_height(y) + rng.uniform(0.1, 3.0, size=1000)
    a = cosmological_time_batch(tripod, t, y, workers=1)
    b = cosmological_time_batch(tripod, t, y, workers=4)
    assert np.array_equal(a, b)


def test_sample_level_wedge_exact(wedge):
    surf = sample_level(wedge, 1.0, half_width=1.0, delta=0.02)
    y1 = surf.axes[0][:, None]
    expect = np.broadcast_to(np.sqrt(1.0 + y1 * y1), surf.shape)
    assert np.max(np.abs(surf.heights - expect)) <= 1e-12
    assert surf.max_gradient_norm() < 1.0
    assert surf.domain_hash == wedge.fingerprint()
    assert surf.label == "level_a=1"


def test_sample_level_regions_and_workers(square):
    s1, regions = sample_level(square, 0.5, half_width=1.0, delta=0.04,
                               workers=1, return_regions=True)
    s4 = sample_level(square, 0.5, half_width=1.0, delta=0.04, workers=4)
    assert np.array_equal(s1.heights, s4.heights)
    assert regions.shape == s1.shape
    assert len(np.unique(regions)) >= 2


def test_level_surface_has_no_kinks(square):
    # slope jumps across a cell would blow the second difference up to
    # O(1/delta); a bounded Hessian keeps it O(1)
    surf = sample_level(square, 0.5, half_width=1.0, delta=0.02)
    w = surf.heights
    d2 = np.abs(w[2:, :] - 2 * w[1:-1, :] + w[:-2, :]) / surf.delta**2
    assert d2.max() < 10.0
    d2 = np.abs(w[:, 2:] - 2 * w[:, 1:-1] + w[:, :-2]) / surf.delta**2
    assert d2.max() < 10.0


def test_sample_level_rejects_bad_inputs(wedge):
    with pytest.raises(UsageError):
        sample_level(wedge, -1.0, half_width=1.0, delta=0.1)
    with pytest.raises(UsageError):
        sample_level(wedge, 1.0, half_width=1.0, delta=0.3)


def test_time_mirror_identities(wedge, tripod):
    x = MinkVector(-2.0, np.array([1.0, 5.0]))
    m = time_mirror(x)
    assert m.t == 2.0 and np.array_equal(m.y, x.y)
    # the wedge family is symmetric under reflection up to plane order
    s = cosmological_time(reflect_time(wedge), (2.0, 1.0, 5.0))
    assert s.tau == pytest.approx(np.sqrt(3.0), rel=1e-12)
    twice = reflect_time(reflect_time(tripod))
    assert np.array_equal(twice.directions, tripod.directions)
    assert np.array_equal(twice.offsets, tripod.offsets)
    # tau of the past component at (-1, 0, 0) through the mirror
    s = cosmological_time(reflect_time(tripod), time_mirror(MinkVector(-1.0, np.zeros(2))))
    assert s.tau == pytest.approx(1.0, rel=1e-12)


def test_make_axes_and_patch_axes():
    axes = make_axes(1.0, 0.25, 2)
    assert len(axes) == 2
    assert axes[0] == pytest.approx(np.arange(-4, 5) * 0.25)
    patch = axes_around([0.3, -0.1], radius=0.05, delta=0.01)
    assert patch[0].size == 11
    assert patch[0][5] == pytest.approx(0.3)
    assert patch[1][0] == pytest.approx(-0.15)


def test_graph_surface_utilities(tmp_path):
    axes = make_axes(0.5, 0.25, 2)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    heights = grid[..., 0] + 2.0 * grid[..., 1]
    surf = GraphSurface(axes=axes, heights=heights, delta=0.25, label="probe")
    assert surf.spatial_dim == 2
    assert surf.shape == (5, 5)
    assert surf.index_of([0.25, -0.5]) == (3, 0)
    with pytest.raises(UsageError):
        surf.index_of([0.3, 0.0])
    mask = surf.interior_mask(0.5)
    assert mask.sum() == 9
    assert surf.value_at([[0.1, 0.1]]) == pytest.approx([0.3])
    other = surf.with_heights(heights + 1.0, label="probe+1")
    assert other.label == "probe+1"
    assert other.delta == surf.delta

    path = tmp_path / "surf.csv"
    surf.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "y1,y2,value"
    assert lines[1] == "-0.5,-0.5,-1.5"
    assert len(lines) == 26


def test_graph_surface_shape_mismatch():
    axes = make_axes(0.5, 0.25, 2)
    with pytest.raises(UsageError):
        GraphSurface(axes=axes, heights=np.zeros((4, 5)), delta=0.25)
