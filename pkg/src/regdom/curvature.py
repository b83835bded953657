"""Discrete curvature of graph surfaces and one-sided support surfaces.

Sign convention: the future unit normal of a spacelike graph t = w(y) is
(1, grad w)/W with W = sqrt(1 - |grad w|^2), and

    H[w] = -(1/(n-1)) div( grad w / W ),

so future hyperboloids t = sqrt(a^2 + |y|^2) have H = -1/a.  Eigenvalues of
the shape operator are the generalized eigenvalues of the pair
(-Hess w / W, I - grad w grad w^T).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .cosmotime import GraphSurface, cosmological_time, sample_level
from .domain import RegularDomain, affine_coordinates
from .errors import NumericError, UsageError
from .minkowski import MinkVector


@dataclass(frozen=True, eq=False)
class CurvatureSample:
    H: float
    eigenvalues: np.ndarray
    grad_norm: float


def _core(shape) -> tuple:
    return tuple(slice(1, -1) for _ in shape)


def _shifted(w: np.ndarray, offsets) -> np.ndarray:
    sl = tuple(slice(1 + o, size - 1 + o if size - 1 + o != 0 else None)
               for size, o in zip(w.shape, offsets))
    return w[sl]


def _derivatives(w: np.ndarray, delta: float):
    """Central-difference gradient and Hessian on the interior block."""
    d = w.ndim
    zero = (0,) * d

    def off(i, v, base=zero):
        o = list(base)
        o[i] += v
        return tuple(o)

    center = _shifted(w, zero)
    grads = [(_shifted(w, off(i, 1)) - _shifted(w, off(i, -1))) / (2 * delta)
             for i in range(d)]
    hess = {}
    for i in range(d):
        hess[i, i] = (_shifted(w, off(i, 1)) - 2 * center + _shifted(w, off(i, -1))) / delta**2
        for j in range(i + 1, d):
            hess[i, j] = (
                _shifted(w, off(j, 1, off(i, 1)))
                - _shifted(w, off(j, -1, off(i, 1)))
                - _shifted(w, off(j, 1, off(i, -1)))
                + _shifted(w, off(j, -1, off(i, -1)))
            ) / (4 * delta**2)
    return grads, hess


def curvature_grid(s: GraphSurface):
    """Mean curvature and gradient norm at every interior node.

    Returns full-shape arrays with NaN on the boundary ring and at any
    node failing the spacelike condition.
    """
    d = s.spatial_dim
    grads, hess = _derivatives(s.heights, s.delta)
    g2 = sum(g * g for g in grads)
    w2 = 1.0 - g2
    spacelike = w2 > 0.0
    safe = np.where(spacelike, w2, 1.0)
    W = np.sqrt(safe)
    lap = sum(hess[i, i] for i in range(d))
    quad = sum(grads[i] ** 2 * hess[i, i] for i in range(d))
    for i in range(d):
        for j in range(i + 1, d):
            quad = quad + 2.0 * grads[i] * grads[j] * hess[i, j]
    h_core = -(lap / W + quad / W**3) / d
    h_core = np.where(spacelike, h_core, np.nan)

    H = np.full(s.shape, np.nan)
    gn = np.full(s.shape, np.nan)
    H[_core(s.shape)] = h_core
    gn[_core(s.shape)] = np.where(spacelike, np.sqrt(np.maximum(g2, 0.0)), np.nan)
    return H, gn


def mean_curvature_of_graph(s: GraphSurface, node) -> CurvatureSample:
    """Curvature data at one interior grid node."""
    node = tuple(int(k) for k in node)
    d = s.spatial_dim
    if len(node) != d or any(k < 1 or k > s.shape[i] - 2 for i, k in enumerate(node)):
        raise UsageError(f"node {node} is not interior to the grid")
    block = s.heights[tuple(slice(k - 1, k + 2) for k in node)]
    grads, hess = _derivatives(block, s.delta)
    g = np.array([gr.item() for gr in grads])
    hmat = np.empty((d, d))
    for i in range(d):
        hmat[i, i] = hess[i, i].item()
        for j in range(i + 1, d):
            hmat[i, j] = hmat[j, i] = hess[i, j].item()
    w2 = 1.0 - float(g @ g)
    if w2 <= 0.0:
        raise UsageError(f"not spacelike at node {node} (|grad w| >= 1)")
    W = np.sqrt(w2)
    metric = np.eye(d) - np.outer(g, g)
    second = -hmat / W
    eigs = eigh(second, metric, eigvals_only=True)
    H = -(hmat.trace() / W + float(g @ hmat @ g) / W**3) / d
    return CurvatureSample(H=float(H), eigenvalues=np.asarray(eigs),
                           grad_norm=float(np.sqrt(g @ g)))


# ---------------------------------------------------------------------------
# One-sided support surfaces.

@dataclass(frozen=True, eq=False)
class UpperSupport:
    """Future hyperboloid of radius a centered at the retraction point.

    Touches the level set from the future; all eigenvalues are -1/a.
    """

    center: MinkVector
    a: float

    def height(self, y) -> np.ndarray | float:
        y = np.asarray(y, dtype=float)
        r2 = ((y - self.center.y) ** 2).sum(axis=-1)
        h = self.center.t + np.sqrt(self.a**2 + r2)
        return float(h) if h.ndim == 0 else h

    def normal_at(self, y) -> MinkVector:
        y = np.asarray(y, dtype=float)
        t = float(self.height(y))
        return MinkVector((t - self.center.t) / self.a, (y - self.center.y) / self.a)

    def eigenvalues(self, spatial_dim: int) -> np.ndarray:
        return np.full(spatial_dim, -1.0 / self.a)

    def sample(self, axes, domain_hash: str = "") -> GraphSurface:
        axes = tuple(np.asarray(ax, dtype=float) for ax in axes)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return GraphSurface(axes=axes, heights=self.height(pts),
                            delta=float(axes[0][1] - axes[0][0]),
                            label="upper_support", domain_hash=domain_hash)


@dataclass(frozen=True, eq=False)
class LowerSupport:
    """Product of a d-dimensional hyperboloid in the timelike span F of the
    chosen null conormals with the Euclidean factor orthogonal to F.

    Touches the level set from the past; eigenvalues are -1/a with
    multiplicity d and 0 with multiplicity n-1-d.
    """

    center: MinkVector
    a: float
    members: tuple
    dirs: np.ndarray
    gram: np.ndarray

    @property
    def d(self) -> int:
        return len(self.members) - 1

    def _quadratic(self, y):
        """Coefficients of Q(xi) = c2 xi^2 - 2 c1 xi + c0 for the F-part."""
        y = np.asarray(y, dtype=float)
        m = (y - self.center.y) @ self.dirs.T
        ginv_m = np.linalg.solve(self.gram, m[..., None])[..., 0]
        ones = np.ones(len(self.members))
        ginv_1 = np.linalg.solve(self.gram, ones)
        c2 = float(ones @ ginv_1)
        c1 = ginv_m @ ones
        c0 = (m * ginv_m).sum(axis=-1)
        return c2, c1, c0

    def height(self, y) -> np.ndarray | float:
        c2, c1, c0 = self._quadratic(y)
        disc = c1 * c1 - c2 * (c0 + self.a**2)
        if np.any(disc <= 0.0) or c2 >= 0.0:
            raise NumericError("support quadratic lost its future root")
        xi = (c1 - np.sqrt(disc)) / c2
        h = self.center.t + xi
        return float(h) if np.ndim(h) == 0 else h

    def normal_at(self, y) -> MinkVector:
        y = np.asarray(y, dtype=float)
        xi = float(self.height(y)) - self.center.t
        b = (y - self.center.y) @ self.dirs.T - xi
        c = np.linalg.solve(self.gram, b)
        zf_t = float(c.sum())
        zf_s = c @ self.dirs
        return MinkVector(zf_t / self.a, zf_s / self.a)

    def eigenvalues(self, spatial_dim: int) -> np.ndarray:
        out = np.zeros(spatial_dim)
        out[: self.d] = -1.0 / self.a
        return out

    def mean_curvature(self, spatial_dim: int) -> float:
        return -self.d / (spatial_dim * self.a)

    def sample(self, axes, domain_hash: str = "") -> GraphSurface:
        axes = tuple(np.asarray(ax, dtype=float) for ax in axes)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return GraphSurface(axes=axes, heights=self.height(pts),
                            delta=float(axes[0][1] - axes[0][0]),
                            label="lower_support", domain_hash=domain_hash)


def upper_support(domain: RegularDomain, x) -> UpperSupport:
    sample = cosmological_time(domain, x)
    return UpperSupport(center=sample.r, a=sample.tau)


def lower_support(domain: RegularDomain, x) -> LowerSupport:
    """Minimal active subset whose hull holds the tightness vector strictly.

    Subsets are tried in order of increasing size, lexicographic within a
    size; relative-interior membership means affine coordinates >= 1e-9
    over an affinely independent subset.
    """
    sample = cosmological_time(domain, x)
    active = sample.active
    if len(active) < 2:
        raise NumericError(
            "lower support undefined: retraction point has a single active "
            f"plane {active}; the tightness vector is null-degenerate there"
        )
    vertical = sample.tau * sample.v.t  # equals t - h(q*)
    g_star = (np.asarray(MinkVector.of(x).y) - sample.q_star) / vertical
    dirs_all = domain.directions
    for size in range(2, len(active) + 1):
        for members in itertools.combinations(active, size):
            dirs = dirs_all[list(members)]
            coords, resid, independent = affine_coordinates(dirs, g_star)
            if not independent:
                continue
            if resid > 1e-9 * (1.0 + np.linalg.norm(g_star)):
                continue
            if np.all(coords >= 1e-9):
                gram = dirs @ dirs.T - 1.0
                return LowerSupport(center=sample.r, a=sample.tau,
                                    members=tuple(members), dirs=dirs, gram=gram)
    raise NumericError(
        "no affinely independent active subset holds the tightness vector "
        f"in its relative interior (active={active}, g*={g_star}, "
        f"gap={sample.objective_gap:.3e})"
    )


# ---------------------------------------------------------------------------
# Level-set curvature verification.

def verify_theorem1(domain: RegularDomain, a: float, half_width: float | None = None,
                    delta: float | None = None, epsilon: float | None = None,
                    workers: int | None = None) -> dict:
    """Check the two-sided curvature bound on the level set S_a.

    Interior nodes whose full difference stencil stays inside one smooth
    piece of the surface (constant winning tie subset over the 3^d block)
    are tested against [-1/a - eps, -1/((n-1)a) + eps]; straddling nodes
    are excluded and counted.
    """
    if a <= 0.0:
        raise UsageError("level value a must be positive")
    if delta is None:
        delta = 0.02 * a
    if half_width is None:
        half_width = 2.0 * a
    if epsilon is None:
        epsilon = 0.05 / a
    surf, regions = sample_level(domain, a, half_width, delta,
                                 workers=workers, return_regions=True)
    H, _ = curvature_grid(surf)

    d = surf.spatial_dim
    same = np.ones(tuple(m - 2 for m in surf.shape), dtype=bool)
    center = _shifted(regions, (0,) * d)
    for offsets in itertools.product((-1, 0, 1), repeat=d):
        if all(o == 0 for o in offsets):
            continue
        same &= _shifted(regions, offsets) == center
    h_core = H[_core(surf.shape)]
    usable = same & np.isfinite(h_core)
    excluded = int(same.size - usable.sum())

    lo = -1.0 / a - epsilon
    hi = -1.0 / ((domain.dim - 1) * a) + epsilon
    vals = h_core[usable]
    if vals.size == 0:
        raise NumericError("all interior nodes were excluded")
    in_bounds = (vals >= lo) & (vals <= hi)
    return {
        "fraction_in_bounds": float(in_bounds.mean()),
        "H_min": float(vals.min()),
        "H_max": float(vals.max()),
        "excluded_nodes": excluded,
        "epsilon": float(epsilon),
        "delta": float(delta),
    }
