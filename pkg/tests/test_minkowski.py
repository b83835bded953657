import numpy as np
import pytest

from regdom import MinkVector, UsageError, classify, inner
from regdom.minkowski import FUTURE, NONE, NULL, PAST, SPACELIKE, TIMELIKE, ZERO


def test_inner_signature():
    assert inner((1, 0, 0), (1, 0, 0)) == -1.0
    assert inner((0, 1, 0), (0, 1, 0)) == 1.0
    assert inner((0, 0, 1), (0, 0, 1)) == 1.0
    assert inner((2, 1, 3), (1, 4, 5)) == pytest.approx(-2 + 4 + 15)


def test_inner_symmetric_bitwise():
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = rng.standard_normal(4)
        y = rng.standard_normal(4)
        assert inner(x, y) == inner(y, x)


def test_inner_dimension_mismatch():
    with pytest.raises(UsageError):
        inner((1, 0, 0), (1, 0, 0, 0))


def test_of_accepts_sequences_and_passthrough():
    v = MinkVector.of([2.0, 1.0, 5.0])
    assert v.t == 2.0
    assert np.array_equal(v.y, [1.0, 5.0])
    assert MinkVector.of(v) is v
    assert v.dim == 3
    assert np.array_equal(v.as_array(), [2.0, 1.0, 5.0])


def test_of_rejects_short_input():
    with pytest.raises(UsageError):
        MinkVector.of([1.0, 2.0])


@pytest.mark.parametrize("coords,kind,orientation", [
    ((2, 1, 0), TIMELIKE, FUTURE),
    ((-2, 1, 0), TIMELIKE, PAST),
    ((1, 1, 0), NULL, FUTURE),
    ((-1, 0, 1), NULL, PAST),
    ((0.5, 1, 0), SPACELIKE, NONE),
    ((0, 0, 0), ZERO, NONE),
])
def test_classify_cases(coords, kind, orientation):
    c = classify(coords)
    assert c.kind == kind
    assert c.orientation == orientation


def test_classify_null_snap_scales_with_magnitude():
    # |<v,v>| = 2e-4 is far above any absolute cutoff but tiny against |v|^2
    big = 1.0e6
    v = (big, big + 1e-10, 0.0)
    assert classify(v).kind == NULL
    # the same absolute defect on a unit-scale vector is spacelike
    w = (1.0, np.sqrt(1.0 + 2e-4), 0.0)
    assert classify(w).kind == SPACELIKE


def test_classify_tol_widening():
    w = (1.0, np.sqrt(1.0 + 2e-4), 0.0)
    assert classify(w, tol=1e-3).kind == NULL
