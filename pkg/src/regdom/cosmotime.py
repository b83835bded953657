"""Cosmological time of a regular domain and its level-set surfaces.

For x = (t, y) in the open domain the cosmological time is the Lorentzian
distance to the horizon graph,

    tau(x)^2 = max_q (t - h(q))^2 - |y - q|^2,

a concave piecewise-quadratic maximization.  The maximizer q* sits on a tie
set of at least two plane directions, which gives the retraction
r(x) = (h(q*), q*) to the initial singularity and the unit timelike
direction v = (x - r)/tau of the realizing geodesic.

The point evaluator runs subgradient ascent with Polyak steps plus exact
jumps on the observed active set; the batch evaluators enumerate the tie
subsets of the plane family once per domain and take the envelope of the
per-subset closed forms, which is exact for finite families.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .domain import NullPlane, RegularDomain, min_norm_in_hull, validate
from .errors import NumericError, UsageError
from .minkowski import MinkVector

# fixed work unit so numeric results never depend on the worker count
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class CosmoSample:
    """Cosmological time at one query point with the realizing data."""

    tau: float
    r: MinkVector
    v: MinkVector
    q_star: np.ndarray
    active: tuple
    objective_gap: float


@dataclass(frozen=True, eq=False)
class GraphSurface:
    """Spacelike hypersurface given as a height field over a uniform grid.

    axes holds one strictly increasing coordinate array per spatial
    dimension, all with spacing delta; heights has the matching shape.
    """

    axes: tuple
    heights: np.ndarray
    delta: float
    label: str = ""
    domain_hash: str = ""

    def __post_init__(self):
        axes = tuple(np.asarray(ax, dtype=float) for ax in self.axes)
        heights = np.asarray(self.heights, dtype=float)
        if heights.shape != tuple(ax.size for ax in axes):
            raise UsageError("heights shape does not match the axes")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def spatial_dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return self.heights.shape

    def grid(self) -> np.ndarray:
        """Node coordinates, shape (*shape, spatial_dim)."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def points(self) -> np.ndarray:
        return self.grid().reshape(-1, self.spatial_dim)

    def gradients(self) -> list:
        """Central-difference partials (one-sided on the boundary)."""
        grads = np.gradient(self.heights, self.delta)
        return [grads] if isinstance(grads, np.ndarray) else list(grads)

    def max_gradient_norm(self) -> float:
        grads = self.gradients()
        core = tuple(slice(1, -1) for _ in range(self.spatial_dim))
        sq = sum(g[core] ** 2 for g in grads)
        return float(np.sqrt(sq.max()))

    def interpolator(self):
        return RegularGridInterpolator(self.axes, self.heights, method="linear")

    def value_at(self, pts) -> np.ndarray:
        return self.interpolator()(np.asarray(pts, dtype=float))

    def index_of(self, y) -> tuple:
        """Grid index of a node coinciding with y (within 1e-9)."""
        y = np.asarray(y, dtype=float)
        idx = []
        for ax, coord in zip(self.axes, y):
            k = int(round((coord - ax[0]) / self.delta))
            if k < 0 or k >= ax.size or abs(ax[k] - coord) > 1e-9:
                raise UsageError(f"{y} is not a grid node")
            idx.append(k)
        return tuple(idx)

    def interior_mask(self, fraction: float) -> np.ndarray:
        """Boolean grid mask keeping the central `fraction` of each axis."""
        masks = []
        for ax in self.axes:
            center = 0.5 * (ax[0] + ax[-1])
            half = 0.5 * (ax[-1] - ax[0])
            masks.append(np.abs(ax - center) <= fraction * half + 1e-12)
        out = masks[0]
        for m in masks[1:]:
            out = np.logical_and.outer(out, m)
        return out

    def with_heights(self, heights, label: str | None = None) -> "GraphSurface":
        return GraphSurface(
            axes=self.axes,
            heights=heights,
            delta=self.delta,
            label=self.label if label is None else label,
            domain_hash=self.domain_hash,
        )

    def to_csv(self, path) -> None:
        pts = self.points()
        vals = self.heights.reshape(-1)
        d = self.spatial_dim
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(f"y{i + 1}" for i in range(d)) + ",value\n")
            for row, v in zip(pts, vals):
                fh.write(",".join("%.17g" % c for c in row) + ",%.17g\n" % v)


def make_axes(half_width: float, delta: float, spatial_dim: int) -> tuple:
    """Symmetric axes over [-half_width, half_width] with spacing delta."""
    if half_width <= 0 or delta <= 0:
        raise UsageError("half_width and delta must be positive")
    k = half_width / delta
    kr = round(k)
    if kr < 1 or abs(k - kr) > 1e-9 * max(1.0, k):
        raise UsageError("delta must evenly divide the box half-width")
    ax = (np.arange(2 * kr + 1) - kr) * delta
    return tuple(ax.copy() for _ in range(spatial_dim))


def axes_around(center, radius: float, delta: float) -> tuple:
    """Axes for a small patch centered at an arbitrary spatial point."""
    center = np.asarray(center, dtype=float)
    k = max(1, round(radius / delta))
    offsets = (np.arange(2 * k + 1) - k) * delta
    return tuple(c + offsets for c in center)


# ---------------------------------------------------------------------------
# Tie-subset candidates.
#
# For a subset A of planes with nonempty tie locus L_A = {q : h_i(q) equal
# on A}, the restriction of the objective to L_A is a strictly concave
# quadratic with closed-form maximizer.  Writing H_A(y) = c0 + g.(y - q0)
# for the common height extended along its gradient g (the projection of
# any member direction onto L_A's direction space, |g| < 1):
#
#     v_A(t, y) = (t - H_A(y))^2 / (1 - |g|^2) - dist(y, L_A)^2
#
# attained at q = q0 + P(y - q0) - s g, s = (t - H_A(y)) / (1 - |g|^2).
# A candidate is admissible at its maximizer iff s > 0 and no plane outside
# A exceeds the common height there; tau^2 is the max over admissible
# candidates, exactly: the true active set contains a spanning subset of
# size <= n with the same tie locus, and every admissible value is a lower
# bound because its maximizer is a feasible q.

@dataclass(frozen=True, eq=False)
class _Candidate:
    members: tuple
    q0: np.ndarray
    basis: np.ndarray  # (d, m) orthonormal columns; m = 0 for a point locus
    g_hat: np.ndarray
    g2: float
    c0: float


def _build_candidate(domain: RegularDomain, members: tuple) -> _Candidate | None:
    U = domain.directions
    a = domain.offsets
    i0 = members[0]
    diff = U[list(members[1:])] - U[i0]
    rhs = a[list(members[1:])] - a[i0]
    q0, *_ = np.linalg.lstsq(diff, rhs, rcond=None)
    if np.linalg.norm(diff @ q0 - rhs) > 1e-9 * (1.0 + np.linalg.norm(rhs)):
        return None  # the planes never tie
    _, sv, vt = np.linalg.svd(diff, full_matrices=True)
    cutoff = 1e-10 * max(1.0, sv[0] if sv.size else 0.0)
    rank = int((sv > cutoff).sum())
    basis = vt[rank:].T  # (d, m)
    if basis.shape[1]:
        g_hat = basis @ (basis.T @ U[i0])
    else:
        g_hat = np.zeros(U.shape[1])
    g2 = float(g_hat @ g_hat)
    if g2 >= 1.0 - 1e-12:
        return None  # degenerate: members share one direction
    c0 = float(U[i0] @ q0 - a[i0])
    return _Candidate(tuple(members), q0, basis, g_hat, g2, c0)


@lru_cache(maxsize=32)
def _candidates(domain: RegularDomain) -> tuple:
    top = min(domain.plane_count, domain.dim)
    out = []
    for size in range(2, top + 1):
        for members in itertools.combinations(range(domain.plane_count), size):
            cand = _build_candidate(domain, members)
            if cand is not None:
                out.append(cand)
    if not out:
        raise NumericError("no tie subset found; domain should not have validated")
    return tuple(out)


def _dominance_ok(domain: RegularDomain, cand: _Candidate, qhat: np.ndarray):
    """Whether no outside plane exceeds the members' common height at qhat."""
    h_all = qhat @ domain.directions.T - domain.offsets
    h_ref = h_all[..., cand.members[0]]
    tol = 1e-9 * (1.0 + np.abs(h_ref))
    return h_all.max(axis=-1) <= h_ref + tol


def _tau_sq_batch(domain: RegularDomain, t: np.ndarray, y: np.ndarray):
    """Exact tau^2 and winning candidate index for rows of (t, y)."""
    best = np.full(t.shape, -np.inf)
    winner = np.full(t.shape, -1, dtype=np.int64)
    for idx, cand in enumerate(_candidates(domain)):
        w = y - cand.q0
        pw = (w @ cand.basis) @ cand.basis.T if cand.basis.shape[1] else np.zeros_like(w)
        rad = t - (cand.c0 + w @ cand.g_hat)
        s = rad / (1.0 - cand.g2)
        dist2 = np.maximum((w * w).sum(axis=-1) - (pw * pw).sum(axis=-1), 0.0)
        val = rad * s - dist2
        qhat = cand.q0 + pw - s[..., None] * cand.g_hat
        ok = (s > 0.0) & _dominance_ok(domain, cand, qhat) & (val > best)
        best[ok] = val[ok]
        winner[ok] = idx
    return best, winner


def _level_batch(domain: RegularDomain, a: float, y: np.ndarray):
    """Exact level-set heights w_a(y) and winning candidate index.

    Per candidate the height solves v_A(t, y) = a^2 for the future root;
    the level height is the minimum over admissible candidates (each
    admissible root certifies tau >= a at that height, and the true active
    set attains it).
    """
    best = np.full(y.shape[:-1], np.inf)
    winner = np.full(y.shape[:-1], -1, dtype=np.int64)
    for idx, cand in enumerate(_candidates(domain)):
        w = y - cand.q0
        pw = (w @ cand.basis) @ cand.basis.T if cand.basis.shape[1] else np.zeros_like(w)
        hy = cand.c0 + w @ cand.g_hat
        dist2 = np.maximum((w * w).sum(axis=-1) - (pw * pw).sum(axis=-1), 0.0)
        s = np.sqrt((a * a + dist2) / (1.0 - cand.g2))
        t_cand = hy + (1.0 - cand.g2) * s
        qhat = cand.q0 + pw - s[..., None] * cand.g_hat
        ok = _dominance_ok(domain, cand, qhat) & (t_cand < best)
        best[ok] = t_cand[ok]
        winner[ok] = idx
    if not np.all(np.isfinite(best)):
        raise NumericError("no admissible tie subset at some grid node")
    return best, winner


def _map_chunks(fn, y: np.ndarray, workers: int | None):
    """Apply fn to fixed-size row blocks of y and concatenate the results.

    Blocks are the same for every worker count, so the output bits are too.
    """
    m = y.shape[0]
    blocks = [slice(i, min(i + _CHUNK, m)) for i in range(0, m, _CHUNK)]
    if workers and workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda sl: fn(y[sl]), blocks))
    else:
        parts = [fn(y[sl]) for sl in blocks]
    return tuple(np.concatenate(cols) for cols in zip(*parts))


# ---------------------------------------------------------------------------
# Point evaluator.

def _certificate(domain: RegularDomain, t: float, y: np.ndarray, q: np.ndarray):
    """Distance of the tightness vector (y - q)/(t - h(q)) to the active hull."""
    sub = domain.subdifferential(q)
    margin = t - sub.height
    if margin <= 0.0:
        return np.inf, sub, margin
    g_star = (y - q) / margin
    gap = min_norm_in_hull(g_star - sub.vertices)
    return gap, sub, margin


def _candidate_jump(domain: RegularDomain, t: float, y: np.ndarray, members: tuple):
    """Exact restricted maximizer for one tie subset, or None if inadmissible."""
    cand = _build_candidate(domain, members)
    if cand is None:
        return None
    w = y - cand.q0
    pw = cand.basis @ (cand.basis.T @ w) if cand.basis.shape[1] else np.zeros_like(w)
    rad = t - (cand.c0 + float(w @ cand.g_hat))
    s = rad / (1.0 - cand.g2)
    if s <= 0.0:
        return None
    dist2 = max(float(w @ w) - float(pw @ pw), 0.0)
    qhat = cand.q0 + pw - s * cand.g_hat
    if not bool(_dominance_ok(domain, cand, qhat)):
        return None
    return qhat, rad * s - dist2


def cosmological_time(domain: RegularDomain, x, max_iter: int = 200) -> CosmoSample:
    """Cosmological time, retraction, and realizing direction at x.

    Subgradient ascent with adaptive Polyak steps on the concave objective
    min_i [(t - h_i(q))^2 - |y - q|^2], with exact jumps whenever the
    near-active subset changes; falls back to a full candidate sweep before
    giving up.  The returned objective_gap certifies stationarity.
    """
    x = domain.require_member(x)
    t, y = x.t, x.y
    U = domain.directions
    aoff = domain.offsets

    def objective(q):
        margins = t - (U @ q - aoff)
        return margins * margins - float((y - q) @ (y - q)), margins

    q = y.copy()
    phis, margins = objective(q)
    f_cur = float(phis.min())
    f_best, q_best = f_cur, q.copy()
    delta_t = max(1.0, f_cur)
    stall = 0
    tried: set = set()
    cert_tol = 1e-9

    for _ in range(max_iter):
        # exact jump on the near-active subset, once per distinct subset
        loose = 1e-3 * (1.0 + abs(f_cur))
        near = tuple(int(i) for i in np.flatnonzero(phis <= f_cur + loose))
        if len(near) >= 2 and near not in tried:
            tried.add(near)
            jump = _candidate_jump(domain, t, y, near)
            if jump is not None and jump[1] >= f_best - 1e-12 * (1.0 + abs(f_best)):
                qhat, val = jump
                gap, sub, margin = _certificate(domain, t, y, qhat)
                if gap <= cert_tol:
                    return _finish(domain, x, qhat, val, sub, gap, margin)
                if val > f_best:
                    f_best, q_best = val, qhat.copy()
                    q = qhat.copy()
                    phis, margins = objective(q)
                    f_cur = float(phis.min())
                    continue
        j = int(phis.argmin())
        grad = -2.0 * margins[j] * U[j] + 2.0 * (y - q)
        gnorm2 = float(grad @ grad)
        if gnorm2 <= 1e-30:
            break
        step = (f_best + delta_t - f_cur) / gnorm2
        q = q + step * grad
        phis, margins = objective(q)
        f_cur = float(phis.min())
        if f_cur > f_best + 1e-12 * (1.0 + abs(f_best)):
            f_best, q_best = f_cur, q.copy()
            stall = 0
        else:
            stall += 1
            if stall >= 4:
                delta_t = max(delta_t * 0.5, 1e-12)
                stall = 0

    # exhaustive sweep over all tie subsets; exact for finite families
    val, _ = _tau_sq_batch(domain, np.array([t]), y[None])
    best_val = float(val[0])
    if best_val <= 0.0:
        raise NumericError(
            f"candidate sweep found no admissible maximizer at {x!r}"
        )
    qhat = _best_candidate_point(domain, t, y)
    gap, sub, margin = _certificate(domain, t, y, qhat)
    if gap > cert_tol:
        raise NumericError(
            "optimizer did not certify: objective_gap "
            f"{gap:.3e} > {cert_tol:.0e} at q={qhat}, best={f_best:.17g}"
        )
    return _finish(domain, x, qhat, best_val, sub, gap, margin)


def _best_candidate_point(domain: RegularDomain, t: float, y: np.ndarray):
    best_val, best_q = -np.inf, None
    for cand in _candidates(domain):
        jump = _candidate_jump(domain, t, y, cand.members)
        if jump is not None and jump[1] > best_val:
            best_q, best_val = jump[0], jump[1]
    if best_q is None:
        raise NumericError("no admissible tie subset for this query point")
    return best_q


def _finish(domain, x, q_star, tau_sq, sub, gap, margin) -> CosmoSample:
    tau = float(np.sqrt(max(tau_sq, 0.0)))
    if tau <= 0.0:
        raise NumericError(f"vanishing cosmological time at {x!r}")
    r = MinkVector(sub.height, q_star)
    v = MinkVector((x.t - r.t) / tau, (x.y - r.y) / tau)
    return CosmoSample(
        tau=tau,
        r=r,
        v=v,
        q_star=q_star,
        active=sub.active,
        objective_gap=float(gap),
    )


def cosmological_time_batch(domain: RegularDomain, t, y, workers: int | None = None):
    """Vectorized tau over rows of (t, y); raises if any point is outside."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    gap = t - domain.horizon_height(y)
    if np.any(gap <= 0.0):
        bad = int((gap <= 0.0).sum())
        raise UsageError(f"{bad} query points are not in the open domain")
    rows = np.hstack([t[:, None], y])

    def block(b):
        val, _ = _tau_sq_batch(domain, b[:, 0], b[:, 1:])
        return (np.sqrt(np.maximum(val, 0.0)),)

    (tau,) = _map_chunks(block, rows, workers)
    return tau


# ---------------------------------------------------------------------------
# Level sets.

def level_height(domain: RegularDomain, a: float, y, tol: float = 1e-9,
                 max_iter: int = 240) -> float:
    """Height t with |tau(t, y) - a| <= tol, found by bisection.

    The bracket starts at [h + eps, h + a n] and is widened if needed;
    tau(t, y) >= t - h(y) makes the upper end safe for n >= 2.
    """
    if a <= 0.0:
        raise UsageError("level value a must be positive")
    y = np.asarray(y, dtype=float)
    h = float(domain.horizon_height(y))

    def tau_at(tt: float) -> float:
        val, _ = _tau_sq_batch(domain, np.array([tt]), y[None])
        return float(np.sqrt(max(val[0], 0.0)))

    off = min(1e-9 * (1.0 + abs(h)), 0.25 * a)
    lo = h + off
    for _ in range(80):
        if tau_at(lo) < a:
            break
        off *= 0.25
        lo = h + off
    else:
        raise NumericError(f"no lower bracket for level {a} at y={y}")
    hi = h + a * domain.dim
    for _ in range(80):
        if tau_at(hi) >= a:
            break
        hi += a * domain.dim
    else:
        raise NumericError(f"no upper bracket for level {a} at y={y}")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        tm = tau_at(mid)
        if abs(tm - a) <= tol:
            return mid
        if tm < a:
            lo = mid
        else:
            hi = mid
    raise NumericError(f"level bisection did not converge at y={y}")


def sample_level_on_axes(domain: RegularDomain, a: float, axes: tuple,
                         workers: int | None = None, label: str = "",
                         return_regions: bool = False):
    """Level surface S_a sampled on the given axes via the exact envelope.

    Every node satisfies tau(w(y), y) = a by construction of the candidate
    closed form, matching the per-node bisection to full precision.
    """
    if a <= 0.0:
        raise UsageError("level value a must be positive")
    axes = tuple(np.asarray(ax, dtype=float) for ax in axes)
    if len(axes) != domain.dim - 1:
        raise UsageError("axes count must equal the spatial dimension")
    delta = float(axes[0][1] - axes[0][0])
    shape = tuple(ax.size for ax in axes)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))

    def block(b):
        return _level_batch(domain, a, b)

    heights, winners = _map_chunks(block, pts, workers)
    heights = heights.reshape(shape)
    horizon = domain.horizon_height(pts).reshape(shape)
    if not np.all(heights > horizon):
        raise NumericError("sampled level surface dips to the horizon")
    surf = GraphSurface(
        axes=axes,
        heights=heights,
        delta=delta,
        label=label or f"level_a={a:g}",
        domain_hash=domain.fingerprint(),
    )
    if return_regions:
        return surf, winners.reshape(shape)
    return surf


def sample_level(domain: RegularDomain, a: float, half_width: float, delta: float,
                 workers: int | None = None, label: str = "",
                 return_regions: bool = False):
    """Level surface S_a over the symmetric box [-half_width, half_width]^d."""
    axes = make_axes(half_width, delta, domain.dim - 1)
    return sample_level_on_axes(domain, a, axes, workers=workers, label=label,
                                return_regions=return_regions)


# ---------------------------------------------------------------------------
# Time reflection.

def time_mirror(x) -> MinkVector:
    x = MinkVector.of(x)
    return MinkVector(-x.t, x.y.copy())


def reflect_time(domain: RegularDomain) -> RegularDomain:
    """Domain describing the past-complete mirror image.

    Queries about the past component of the original family are answered by
    applying time_mirror to the query point and asking the reflected domain;
    reflecting twice restores the original plane data bit for bit.
    """
    return validate([NullPlane(-p.u_hat, -p.a) for p in domain.planes])
