"""Invariant battery behind the verify-all command.

Every check is pure computation on the scenario's domain, seeded from the
scenario, so two runs (at any worker count) produce identical reports.
Failures are folded into the report with the exit severity they would have
carried as an error: 2 usage, 3 numeric, 4 assertion.
"""

from __future__ import annotations

import numpy as np

from .cmc import CmcTimeConfig, cmc_time, solve_cmc, verify_sandwich
from .cosmotime import cosmological_time, sample_level
from .curvature import lower_support, mean_curvature_of_graph, upper_support, verify_theorem1
from .domain import initial_singularity
from .errors import CheckError, NumericError, UsageError
from .evolution import gauss_flow, riccati_mean_curvature
from .minkowski import MinkVector, inner


def _severity(exc: Exception) -> int:
    if isinstance(exc, UsageError):
        return 2
    if isinstance(exc, NumericError):
        return 3
    if isinstance(exc, CheckError):
        return 4
    raise exc


def _interior_points(domain, seed: int, half_width: float, count: int):
    """Seeded sample of points strictly inside the domain, above the horizon."""
    rng = np.random.default_rng(seed)
    d = domain.dim - 1
    y = rng.uniform(-0.6 * half_width, 0.6 * half_width, size=(count, d))
    gap = 0.3 * half_width * 10.0 ** rng.uniform(-1.0, 0.5, size=count)
    t = domain.horizon_height(y) + gap
    return t, y


def _check_validate(scn, domain, workers):
    dirs = domain.directions
    return {
        "dimension": int(domain.dim),
        "plane_count": int(domain.plane_count),
        "distinct_directions": int(np.unique(np.round(dirs, 12), axis=0).shape[0]),
        "fingerprint": domain.fingerprint(),
    }


def _check_tau(scn, domain, workers):
    t, y = _interior_points(domain, scn.seed + 11, scn.half_width, 25)
    worst_gap = 0.0
    worst_unit = 0.0
    worst_horizon = 0.0
    worst_geodesic = 0.0
    for k in range(t.size):
        x = MinkVector(t[k], y[k])
        s = cosmological_time(domain, x)
        worst_gap = max(worst_gap, s.objective_gap)
        worst_unit = max(worst_unit, abs(inner(s.v, s.v) + 1.0))
        worst_horizon = max(
            worst_horizon,
            abs(s.r.t - domain.horizon_height(s.r.y))
            / (1.0 + abs(s.r.t)))
        step = MinkVector(x.t - s.r.t, x.y - s.r.y)
        worst_geodesic = max(
            worst_geodesic,
            abs(np.sqrt(-inner(step, step)) - s.tau) / s.tau)
        if s.v.t <= 0.0:
            raise CheckError(f"realizing direction not future at {x}")
    if worst_gap > 1e-9:
        raise CheckError(f"certificate gap {worst_gap:.3e} exceeds 1e-9")
    if worst_unit > 1e-9:
        raise CheckError(f"|<v,v>+1| = {worst_unit:.3e} exceeds 1e-9")
    if worst_horizon > 1e-9:
        raise CheckError(f"retraction off the horizon by {worst_horizon:.3e}")
    if worst_geodesic > 1e-9:
        raise CheckError(f"tau vs geodesic length off by {worst_geodesic:.3e}")
    return {
        "points": int(t.size),
        "max_certificate_gap": float(worst_gap),
        "max_unit_defect": float(worst_unit),
        "max_horizon_defect": float(worst_horizon),
        "max_geodesic_defect": float(worst_geodesic),
    }


def _check_curvature(scn, domain, workers):
    a = float(scn.task_params("curvature-verify").get("a", 1.0))
    rep = verify_theorem1(domain, a, workers=workers)
    if rep["fraction_in_bounds"] < 0.99:
        raise CheckError(
            f"only {rep['fraction_in_bounds']:.4f} of nodes inside the "
            "curvature bounds (need 0.99)")
    return rep


def _check_supports(scn, domain, workers):
    from .cosmotime import _level_batch

    t, y = _interior_points(domain, scn.seed + 23, scn.half_width, 25)
    d = domain.dim - 1
    rng = np.random.default_rng(scn.seed + 24)
    worst_normal = 0.0
    worst_order = 0.0
    skipped = 0
    for k in range(t.size):
        x = MinkVector(t[k], y[k])
        s = cosmological_time(domain, x)
        up = upper_support(domain, x)
        try:
            low = lower_support(domain, x)
        except NumericError:
            skipped += 1  # single active plane: no lower support reported
            low = None
        a = up.a
        offs = rng.normal(size=(8, d))
        offs *= (1e-2 * a) / np.linalg.norm(offs, axis=1)[:, None]
        pts = y[k] + offs
        level, _ = _level_batch(domain, a, pts)
        hi = np.array([up.height(p) for p in pts])
        worst_order = max(worst_order, float((level - hi).max()))
        worst_normal = max(worst_normal, _normal_gap(up, x, s.v))
        if low is not None:
            lo = np.array([low.height(p) for p in pts])
            worst_order = max(worst_order, float((lo - level).max()))
            worst_normal = max(worst_normal, _normal_gap(low, x, s.v))
    if worst_order > 1e-9:
        raise CheckError(f"support ordering violated by {worst_order:.3e}")
    if worst_normal > 1e-8:
        raise CheckError(f"support normal mismatch {worst_normal:.3e}")
    return {
        "points": int(t.size),
        "skipped_single_plane": int(skipped),
        "max_order_violation": float(worst_order),
        "max_normal_mismatch": float(worst_normal),
    }


def _normal_gap(support, x: MinkVector, v: MinkVector) -> float:
    nu = support.normal_at(x.y)
    return float(max(abs(nu.t - v.t), np.abs(nu.y - v.y).max()))


def _check_riccati(scn, domain, workers):
    rng = np.random.default_rng(scn.seed + 37)
    worst = -np.inf
    for _ in range(100):
        d = int(rng.integers(2, 5))
        lam = rng.normal(scale=1.0, size=d)
        top = np.inf if lam.max() <= 0 else 1.0 / lam.max()
        times = np.linspace(0.0, min(0.9 * top, 2.0), 7)[1:]
        for t in times:
            h, eig = riccati_mean_curvature(lam, float(t), 0.0)
            slope = float((eig**2).mean())
            worst = max(worst, h * h - slope)
    if worst > 1e-10:
        raise CheckError(f"dH/dt >= H^2 violated by {worst:.3e}")
    return {"samples": 100, "max_defect": float(worst)}


def smooth_interior_nodes(surface, regions, margin: float = 0.6,
                          count: int = 1, seed: int | None = None) -> list:
    """Interior nodes whose full stencil shares one level-set region.

    Nodes straddling a region boundary carry a curvature jump, so the
    discrete estimator is only meaningful away from them.  With a seed the
    scan order is a seeded shuffle, otherwise lexicographic.
    """
    interior = surface.interior_mask(margin)
    d = surface.spatial_dim
    idx = np.argwhere(interior)
    if seed is not None:
        idx = idx[np.random.default_rng(seed).permutation(idx.shape[0])]
    found = []
    for flat in idx:
        node = tuple(int(v) for v in flat)
        block = regions[tuple(slice(i - 1, i + 2) for i in node)]
        if block.size == 3**d and np.all(block == block.flat[0]) and block.flat[0] >= 0:
            found.append(node)
            if len(found) == count:
                return found
    if found:
        return found
    raise NumericError("no smooth interior node found")


def _check_flow(scn, domain, workers):
    a = float(scn.task_params("gauss-flow").get("a", 1.0))
    surface, regions = sample_level(domain, a, half_width=scn.half_width,
                                    delta=scn.delta, workers=workers,
                                    return_regions=True)
    node = smooth_interior_nodes(surface, regions)[0]
    eig0 = mean_curvature_of_graph(surface, node).eigenvalues
    worst = 0.0
    for t in (0.2 * a, 0.4 * a):
        pushed = gauss_flow(surface, t)
        h_closed, _ = riccati_mean_curvature(eig0, t, 0.0)
        h_est = mean_curvature_of_graph(pushed, node).H
        worst = max(worst, abs(h_est - h_closed))
    bound = 10.0 * scn.delta**2
    if worst > bound:
        raise CheckError(
            f"flow estimator off closed form by {worst:.3e} (bound {bound:.3e})")
    return {"node": list(node), "max_estimator_gap": float(worst),
            "bound": float(bound)}


def _check_cmc(scn, domain, workers):
    c = float(scn.task_params("cmc-solve").get("c", -1.0))
    sol = solve_cmc(domain, c, half_width=scn.half_width, delta=scn.delta,
                    workers=workers)
    rep = verify_sandwich(domain, sol, workers=workers)
    if not rep["sandwich_pass"]:
        raise CheckError(
            f"tau range [{rep['tau_min']:.4f}, {rep['tau_max']:.4f}] escapes "
            "the sandwich")
    return rep


def _check_cmc_time(scn, domain, workers):
    params = scn.task_params("cmc-time")
    cs = tuple(float(c) for c in params.get("c_values", (-2.0, -1.0, -0.5, -0.25)))
    queries = foliation_queries(domain, cs, scn.seed + 53, scn.half_width,
                                scn.delta, workers)
    rep = cmc_time(domain, CmcTimeConfig(c_values=cs, queries=queries),
                   half_width=scn.half_width, delta=scn.delta, workers=workers)
    return {"c_values": rep["c_values"], "min_gap": rep["min_gap"],
            "queries": len(queries),
            "comparability_pass": rep["comparability_pass"]}


def foliation_queries(domain, cs, seed: int, half_width: float, delta: float,
                      workers) -> tuple:
    """Seeded query points on and between the exact bracketing level sets.

    Level sets of the time function bracket each solved surface, so points
    interpolated between the extreme levels stay inside the solved range.
    """
    from .cosmotime import _level_batch

    rng = np.random.default_rng(seed)
    d = domain.dim - 1
    y = rng.uniform(-0.55 * half_width, 0.55 * half_width, size=(8, d))
    # each solved surface sits between S_{a/(n-1)} and S_a for a = -1/c, so
    # the band [S_{a_first}, S_{a_last/(n-1)}] is inside the solved range
    bottom, _ = _level_batch(domain, -1.0 / cs[0], y)
    top, _ = _level_batch(domain, (-1.0 / cs[-1]) / d, y)
    rows = []
    for frac in np.linspace(0.08, 0.92, 6):
        t = bottom + frac * np.maximum(top - bottom, 0.0)
        rows.extend(np.column_stack([t, y]))
    return tuple(tuple(float(v) for v in row) for row in rows)


def _check_singularity(scn, domain, workers):
    if domain.dim != 3:
        return {"skipped": True, "reason": "complex is computed for n = 3 only"}
    complex_ = initial_singularity(domain)
    t, y = _interior_points(domain, scn.seed + 61, scn.half_width, 30)
    hits = 0
    worst = 0.0
    for k in range(t.size):
        s = cosmological_time(domain, MinkVector(t[k], y[k]))
        if len(s.active) >= 2:
            hits += 1
            dist = complex_.distance(s.r.y)
            worst = max(worst, dist / (1.0 + float(np.abs(s.r.y).max())))
    if hits and worst > 1e-8:
        raise CheckError(
            f"retraction census misses the complex by {worst:.3e}")
    return {
        "vertices": len(complex_.vertices),
        "edges": len(complex_.edges),
        "census_points": int(t.size),
        "census_on_complex": int(hits),
        "max_census_distance": float(worst),
    }


_CHECKS = (
    ("validate", _check_validate),
    ("tau-certificates", _check_tau),
    ("curvature-bounds", _check_curvature),
    ("support-ordering", _check_supports),
    ("riccati-monotonicity", _check_riccati),
    ("gauss-flow", _check_flow),
    ("cmc-sandwich", _check_cmc),
    ("cmc-time-comparability", _check_cmc_time),
    ("singularity-census", _check_singularity),
)


def run_suite(scn, workers: int | None = None) -> dict:
    domain = scn.domain()
    checks = []
    max_sev = 0
    for name, fn in _CHECKS:
        try:
            data = fn(scn, domain, workers)
            checks.append({"name": name, "pass": True, "severity": 0,
                           "data": data})
        except (UsageError, NumericError, CheckError) as exc:
            sev = _severity(exc)
            max_sev = max(max_sev, sev)
            checks.append({"name": name, "pass": False, "severity": sev,
                           "error": str(exc)})
    return {
        "checks": checks,
        "pass": max_sev == 0,
        "max_severity": max_sev,
    }
