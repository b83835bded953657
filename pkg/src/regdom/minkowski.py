"""Lorentzian linear algebra on R^{1,n-1} with signature (-, +, ..., +).

Points and vectors are split as (t, y) with y holding the n-1 spatial
coordinates; n >= 3 throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError

TIMELIKE = "timelike"
NULL = "null"
SPACELIKE = "spacelike"
ZERO = "zero"

FUTURE = "future"
PAST = "past"
NONE = "none"


@dataclass(frozen=True, eq=False)
class MinkVector:
    """A point or tangent vector (t, y)."""

    t: float
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 2:
            raise UsageError("spatial part must be a flat sequence of >= 2 coordinates")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "y", y)

    @classmethod
    def of(cls, coords) -> "MinkVector":
        """Coerce (t, y1, ..., y_{n-1}) sequences; MinkVectors pass through."""
        if isinstance(coords, MinkVector):
            return coords
        arr = np.asarray(coords, dtype=float).ravel()
        if arr.size < 3:
            raise UsageError("need at least (t, y1, y2)")
        return cls(arr[0], arr[1:])

    @property
    def dim(self) -> int:
        return 1 + self.y.size

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.t], self.y))

    def __repr__(self) -> str:
        coords = ", ".join(repr(float(c)) for c in self.as_array())
        return f"MinkVector({coords})"


@dataclass(frozen=True)
class CausalClass:
    kind: str
    orientation: str


def inner(x, y) -> float:
    """Minkowski product <x, y> = -x.t*y.t + x.y . y.y.

    The product terms commute bitwise, so inner(x, y) == inner(y, x)
    exactly in floating point.
    """
    x = MinkVector.of(x)
    y = MinkVector.of(y)
    if x.dim != y.dim:
        raise UsageError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return -x.t * y.t + float(np.dot(x.y, y.y))


def classify(v, tol: float = 1e-9) -> CausalClass:
    """Causal type of v, with |<v,v>| <= tol * (1 + t^2 + |y|^2) snapping to null.

    Orientation is future/past for causal vectors and none otherwise, so the
    result is invariant under positive rescaling of v away from the cone.
    """
    v = MinkVector.of(v)
    if v.t == 0.0 and not v.y.any():
        return CausalClass(ZERO, NONE)
    s = inner(v, v)
    scale = 1.0 + v.t * v.t + float(np.dot(v.y, v.y))
    if abs(s) <= tol * scale:
        kind = NULL
    elif s < 0.0:
        kind = TIMELIKE
    else:
        kind = SPACELIKE
    if kind == SPACELIKE:
        return CausalClass(kind, NONE)
    return CausalClass(kind, FUTURE if v.t > 0.0 else PAST)
