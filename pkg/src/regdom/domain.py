"""Regular domains bounded by null hyperplanes.

A plane datum (u_hat, a) with |u_hat|_2 = 1 encodes the null hyperplane
{x : <x, (1, u_hat)> = a}; its open future half-space is {t > u_hat.y - a}.
A regular domain is the intersection of at least two such futures with at
least two distinct null directions.  Its past boundary is the graph of

    h(y) = max_i (u_hat_i . y - a_i),

a convex piecewise affine function whose every facet has unit gradient.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError, UsageError
from .minkowski import MinkVector

_UNIT_TOL = 1e-12
_DUP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class NullPlane:
    """Null hyperplane datum: unit spatial direction u_hat and offset a."""

    u_hat: np.ndarray
    a: float

    def __post_init__(self):
        u = np.asarray(self.u_hat, dtype=float)
        if u.ndim != 1 or u.size < 2:
            raise UsageError("u_hat must be a flat sequence of >= 2 coordinates")
        object.__setattr__(self, "u_hat", u)
        object.__setattr__(self, "a", float(self.a))

    def height(self, y) -> float:
        """Horizon contribution u_hat . y - a at the spatial point y."""
        return float(np.dot(self.u_hat, np.asarray(y, dtype=float)) - self.a)

    def conormal(self) -> MinkVector:
        """Future null conormal (1, u_hat)."""
        return MinkVector(1.0, self.u_hat)


@dataclass(frozen=True, eq=False)
class RegularDomain:
    """Validated plane family with vectorized horizon queries.

    directions is the (N, n-1) stack of the u_hat rows and offsets the
    matching offsets, so h(y) = max(directions @ y - offsets).
    """

    planes: tuple
    directions: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 1 + self.directions.shape[1]

    @property
    def plane_count(self) -> int:
        return len(self.planes)

    def horizon_height(self, y) -> np.ndarray | float:
        """h(y) for y of shape (..., n-1)."""
        y = np.asarray(y, dtype=float)
        vals = y @ self.directions.T - self.offsets
        h = vals.max(axis=-1)
        return float(h) if h.ndim == 0 else h

    def plane_heights(self, y) -> np.ndarray:
        """Per-plane values u_hat_i . y - a_i, shape (..., N)."""
        return np.asarray(y, dtype=float) @ self.directions.T - self.offsets

    def contains(self, x) -> bool:
        """Strict membership t > h(y); boundary points are excluded."""
        x = MinkVector.of(x)
        if x.dim != self.dim:
            raise UsageError(f"point has dimension {x.dim}, domain has {self.dim}")
        return x.t > self.horizon_height(x.y)

    def subdifferential(self, y, tol: float | None = None) -> "Subdifferential":
        y = np.asarray(y, dtype=float)
        vals = self.plane_heights(y)
        h = float(vals.max())
        if tol is None:
            tol = 1e-9 * (1.0 + abs(h))
        active = tuple(int(i) for i in np.flatnonzero(vals >= h - tol))
        return Subdifferential(
            point=y,
            height=h,
            active=active,
            vertices=self.directions[list(active)].copy(),
        )

    def require_member(self, x) -> MinkVector:
        x = MinkVector.of(x)
        if not self.contains(x):
            gap = x.t - self.horizon_height(x.y)
            raise DomainError(f"point not in the open domain (t - h(y) = {gap:.6g})")
        return x

    def fingerprint(self) -> str:
        """Short stable hash of the normalized plane data."""
        blob = self.directions.tobytes() + self.offsets.tobytes()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class Subdifferential:
    """Subdifferential of the horizon graph at a spatial point.

    The set is the convex hull of the active plane directions; vertices
    stacks those directions row-wise.
    """

    point: np.ndarray
    height: float
    active: tuple
    vertices: np.ndarray

    def support(self, direction) -> float:
        """One-sided directional derivative h'(point; direction)."""
        d = np.asarray(direction, dtype=float)
        return float((self.vertices @ d).max())


def validate(planes, unit_tol: float = _UNIT_TOL, dup_tol: float = _DUP_TOL) -> RegularDomain:
    """Check a plane family and build the domain.

    Raises UsageError for non-unit directions, for families that collapse to
    fewer than two distinct planes, and for families whose planes all share
    one null direction (those have infinite cosmological time, so no regular
    time function exists on them).
    """
    planes = [p if isinstance(p, NullPlane) else NullPlane(*p) for p in planes]
    if not planes:
        raise UsageError("not regular: the plane family must contain at least two elements")
    width = planes[0].u_hat.size
    for p in planes:
        if p.u_hat.size != width:
            raise UsageError("planes mix spatial dimensions")
        norm = float(np.linalg.norm(p.u_hat))
        if abs(norm - 1.0) > unit_tol:
            raise UsageError(f"u_hat is not unit length (|u| = {norm!r})")

    kept: list[NullPlane] = []
    for p in planes:
        dup = any(
            np.max(np.abs(p.u_hat - q.u_hat)) <= dup_tol and abs(p.a - q.a) <= dup_tol
            for q in kept
        )
        if not dup:
            kept.append(p)
    if len(kept) < 2:
        raise UsageError("not regular: the plane family must contain at least two distinct elements")

    first = kept[0].u_hat
    if all(np.max(np.abs(p.u_hat - first)) <= dup_tol for p in kept[1:]):
        raise UsageError("not regular: all planes share one null direction")

    directions = np.vstack([p.u_hat for p in kept])
    offsets = np.array([p.a for p in kept])
    directions.setflags(write=False)
    offsets.setflags(write=False)
    return RegularDomain(planes=tuple(kept), directions=directions, offsets=offsets)


def affine_coordinates(vertices: np.ndarray, target: np.ndarray):
    """Affine coordinates of target over the given vertex rows.

    Solves min |vertices.T c - target| subject to sum(c) = 1 and returns
    (coords, residual, independent).  independent is False when the vertices
    are affinely dependent, in which case the coordinates are not unique.
    """
    v = np.asarray(vertices, dtype=float)
    k = v.shape[0]
    ext = np.hstack([v, np.ones((k, 1))])
    independent = np.linalg.matrix_rank(ext, tol=1e-10) == k
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * (v @ v.T)
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([2.0 * (v @ np.asarray(target, dtype=float)), [1.0]])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    coords = sol[:k]
    residual = float(np.linalg.norm(v.T @ coords - target))
    return coords, residual, independent


def min_norm_in_hull(vectors: np.ndarray) -> float:
    """Norm of the minimum-norm point of conv(rows of vectors).

    Solved exactly by enumerating faces; the family is expected to be small
    (an active set), so the subset count stays tiny.
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    k = v.shape[0]
    if k == 0:
        raise UsageError("empty vector family")
    if k > 12:
        raise NumericError(f"active set too large for exact face search ({k})")
    best = min(float(np.linalg.norm(row)) for row in v)
    for size in range(2, k + 1):
        for subset in itertools.combinations(range(k), size):
            sub = v[list(subset)]
            coords, _, _ = affine_coordinates(sub, np.zeros(v.shape[1]))
            if np.all(coords >= -1e-12):
                best = min(best, float(np.linalg.norm(sub.T @ coords)))
    return best


@dataclass(frozen=True, eq=False)
class SingularVertex:
    y: np.ndarray
    t: float
    active: tuple


@dataclass(frozen=True, eq=False)
class SingularEdge:
    """Piece of a pairwise tie line that survives dominance clipping.

    kind is "segment" (p0 to p1), "ray" (p0 plus s*direction, s >= 0) or
    "line" (p0 plus s*direction, s unrestricted).
    """

    planes: tuple
    kind: str
    p0: np.ndarray
    direction: np.ndarray
    p1: np.ndarray | None = None

    def points(self, span: float = 1.0) -> np.ndarray:
        if self.kind == "segment":
            return np.vstack([self.p0, self.p1])
        if self.kind == "ray":
            return np.vstack([self.p0, self.p0 + span * self.direction])
        return np.vstack([self.p0 - span * self.direction, self.p0 + span * self.direction])

    def distance(self, y) -> float:
        """Euclidean distance from a spatial point to the piece."""
        y = np.asarray(y, dtype=float)
        rel = y - self.p0
        s = float(np.dot(rel, self.direction))
        if self.kind == "ray":
            s = max(s, 0.0)
        elif self.kind == "segment":
            length = float(np.dot(self.p1 - self.p0, self.direction))
            s = min(max(s, 0.0), length)
        return float(np.linalg.norm(rel - s * self.direction))


@dataclass(frozen=True, eq=False)
class SingularityComplex:
    vertices: tuple
    edges: tuple

    def distance(self, y) -> float:
        best = np.inf
        for e in self.edges:
            best = min(best, e.distance(y))
        for v in self.vertices:
            best = min(best, float(np.linalg.norm(np.asarray(y) - v.y)))
        return best


def initial_singularity(domain: RegularDomain, tol: float = 1e-9) -> SingularityComplex:
    """Spatial shadow of the initial singularity for n = 3.

    Pairwise tie lines are clipped by the dominance inequalities of the
    remaining planes; finite clip endpoints where three or more planes tie
    become vertices.
    """
    if domain.dim != 3:
        raise UsageError("initial_singularity supports n = 3 only")
    U = domain.directions
    a = domain.offsets
    n_planes = len(a)
    edges = []
    vertex_candidates = []

    for i, j in itertools.combinations(range(n_planes), 2):
        w = U[i] - U[j]
        wn = float(np.linalg.norm(w))
        if wn <= tol:
            continue  # parallel directions never tie
        base = w * ((a[i] - a[j]) / (wn * wn))
        direction = np.array([-w[1], w[0]]) / wn
        lo, hi = -np.inf, np.inf
        empty = False
        for k in range(n_planes):
            if k in (i, j):
                continue
            # dominance: (u_k - u_i).(base + s*dir) <= a_k - a_i
            c0 = float(np.dot(U[k] - U[i], base) - (a[k] - a[i]))
            slope = float(np.dot(U[k] - U[i], direction))
            if abs(slope) <= tol:
                if c0 > tol:
                    empty = True
                    break
                continue
            bound = -c0 / slope
            if slope > 0:
                hi = min(hi, bound)
            else:
                lo = max(lo, bound)
        if empty or lo > hi + tol:
            continue
        finite_lo = np.isfinite(lo)
        finite_hi = np.isfinite(hi)
        if finite_lo:
            vertex_candidates.append(base + lo * direction)
        if finite_hi:
            vertex_candidates.append(base + hi * direction)
        if finite_lo and finite_hi and hi - lo <= tol:
            continue  # degenerate piece, kept only as a vertex
        if not finite_lo and not finite_hi:
            edges.append(SingularEdge((i, j), "line", base, direction))
        elif finite_lo and finite_hi:
            edges.append(
                SingularEdge((i, j), "segment", base + lo * direction, direction,
                             p1=base + hi * direction)
            )
        elif finite_lo:
            edges.append(SingularEdge((i, j), "ray", base + lo * direction, direction))
        else:
            edges.append(SingularEdge((i, j), "ray", base + hi * direction, -direction))

    vertices = []
    for y in vertex_candidates:
        if any(np.linalg.norm(y - v.y) <= 1e-9 for v in vertices):
            continue
        sub = domain.subdifferential(y)
        if len(sub.active) >= 3:
            vertices.append(SingularVertex(y=y, t=sub.height, active=sub.active))

    return SingularityComplex(vertices=tuple(vertices), edges=tuple(edges))
