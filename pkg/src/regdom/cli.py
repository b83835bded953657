"""Command dispatch: scenario in, deterministic reports and artifacts out.

Exit codes: 0 success, 2 validation failure, 3 numeric failure, 4 failed
assertion.  verify-all aggregates its checks and exits with the highest
severity among them.  Artifacts land in the first of --output-dir, the
scenario's output_dir, $REGDOM_OUTPUT_DIR, or the working directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import report as rpt
from .cmc import CmcTimeConfig, cmc_time, solve_cmc, verify_sandwich
from .cosmotime import cosmological_time, sample_level
from .curvature import curvature_grid, mean_curvature_of_graph, verify_theorem1
from .domain import initial_singularity
from .errors import CheckError, NumericError, UsageError
from .evolution import flow_trace, trace_csv_rows
from .minkowski import MinkVector
from .scenario import load_scenario
from .suite import foliation_queries, run_suite, smooth_interior_nodes

_ENV_OUTPUT = "REGDOM_OUTPUT_DIR"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regdom",
        description="Cosmological time, curvature bounds, and CMC foliations "
                    "of flat regular domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="path to the scenario JSON file")
        p.add_argument("--output-dir", default=None,
                       help=f"artifact directory (else scenario, ${_ENV_OUTPUT}, cwd)")
        p.add_argument("--workers", type=int, default=None,
                       help="cap on worker threads; results do not depend on it")
        p.add_argument("--box", type=float, default=None,
                       help="override grid half-width")
        p.add_argument("--delta", type=float, default=None,
                       help="override grid spacing")
        p.add_argument("--json", action="store_true",
                       help="print the report JSON instead of summary lines")
        p.add_argument("--quiet", action="store_true",
                       help="suppress stdout (artifacts and exit code only)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
        return p

    cmd("validate", "check the plane family and echo the normalized domain")
    p = cmd("tau", "cosmological time at a point")
    p.add_argument("--point", required=True,
                   help="comma-separated coordinates t,y1,...")
    p = cmd("level", "sample a level set of the time function to CSV")
    p.add_argument("--a", type=float, default=None, help="level value")
    cmd("singularity", "initial singularity complex (n = 3)")
    p = cmd("curvature-verify", "level-set curvature bound report")
    p.add_argument("--a", type=float, default=None, help="level value")
    p = cmd("gauss-flow", "normal flow with exact curvature transport")
    p.add_argument("--a", type=float, default=None, help="level to flow")
    p.add_argument("--t", type=float, default=None, help="total flow time")
    p.add_argument("--steps", type=int, default=None, help="time samples")
    p = cmd("cmc-solve", "constant mean curvature Dirichlet solve")
    p.add_argument("--c", type=float, default=None, help="mean curvature")
    p.add_argument("--bc-level", type=float, default=None,
                   help="Dirichlet data from this level set")
    p = cmd("cmc-time", "CMC foliation time function vs cosmological time")
    p.add_argument("--c-values", default=None,
                   help="comma-separated negative c grid")
    cmd("verify-all", "run the full invariant battery")
    return parser


def _resolve_out(args, scn) -> Path:
    chosen = args.output_dir or scn.output_dir or os.environ.get(_ENV_OUTPUT) or "."
    out = Path(chosen)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(args, scn):
    half = args.box if args.box is not None else scn.half_width
    delta = args.delta if args.delta is not None else scn.delta
    if half <= 0 or delta <= 0:
        raise UsageError("grid overrides must be positive")
    if delta > half / 8.0:
        raise UsageError(f"delta must be at most box/8 = {half / 8.0:g}")
    return float(half), float(delta)


def _param(args, scn, command, name, default, cast=float):
    flag = getattr(args, name.replace("-", "_"), None)
    if flag is not None:
        return cast(flag)
    task = scn.task_params(command)
    if name in task:
        return cast(task[name])
    return default


def _cmd_validate(args, scn, domain, out, figures):
    echo = scn.echo()
    result = {
        "dimension": int(domain.dim),
        "plane_count": int(domain.plane_count),
        "planes": echo["planes"],
        "fingerprint": domain.fingerprint(),
    }
    lines = [f"valid regular domain in R^(1,{domain.dim - 1}): "
             f"{domain.plane_count} planes, fingerprint {domain.fingerprint()}"]
    for p in echo["planes"]:
        u = ",".join(f"{c:.17g}" for c in p["u"])
        lines.append(f"  plane u=({u}) a={p['a']:.17g}")
    return result, True, lines, {}


def _cmd_tau(args, scn, domain, out, figures):
    coords = [float(v) for v in args.point.split(",")]
    if len(coords) != domain.dim:
        raise UsageError(
            f"--point needs {domain.dim} coordinates, got {len(coords)}")
    x = MinkVector(coords[0], coords[1:])
    s = cosmological_time(domain, x)
    result = {
        "point": coords,
        "tau": s.tau,
        "r": [s.r.t, *map(float, s.r.y)],
        "v": [s.v.t, *map(float, s.v.y)],
        "active": [int(i) for i in s.active],
        "objective_gap": s.objective_gap,
    }
    fmt = lambda vec: "(" + ",".join(f"{c:.17g}" for c in vec) + ")"
    lines = [f"tau={s.tau:.17g}",
             f"r={fmt(result['r'])}",
             f"v={fmt(result['v'])}",
             f"active={result['active']} gap={s.objective_gap:.3g}"]
    return result, True, lines, {"task": {"point": coords}}


def _cmd_level(args, scn, domain, out, figures):
    half, delta = _grid(args, scn)
    a = _param(args, scn, "level", "a", 1.0)
    if a <= 0:
        raise UsageError("level value a must be positive")
    surface = sample_level(domain, a, half_width=half, delta=delta,
                           workers=args.workers)
    csv = out / "level.csv"
    surface.to_csv(csv)
    if figures:
        from .figures import level_figure
        level_figure(surface, out / "level.png", f"level a={a:g}")
    result = {
        "a": a,
        "grid": {"box_half_width": half, "delta": delta,
                 "shape": list(surface.shape)},
        "height_min": float(surface.heights.min()),
        "height_max": float(surface.heights.max()),
        "max_gradient_norm": surface.max_gradient_norm(),
        "csv": csv.name,
    }
    lines = [f"level a={a:g}: heights in [{result['height_min']:.6g}, "
             f"{result['height_max']:.6g}], {csv.name} written"]
    return result, True, lines, {"task": {"a": a, "box": half, "delta": delta}}


def _cmd_singularity(args, scn, domain, out, figures):
    complex_ = initial_singularity(domain)
    vrows = [[*map(float, v.y), float(v.t), ";".join(map(str, v.active))]
             for v in complex_.vertices]
    rpt.write_csv(out / "singularity_vertices.csv",
                  ["y1", "y2", "t", "planes"], vrows)
    erows = []
    for e in complex_.edges:
        p1 = e.p1 if e.p1 is not None else (float("nan"), float("nan"))
        erows.append([e.kind, ";".join(map(str, e.planes)),
                      float(e.p0[0]), float(e.p0[1]),
                      float(e.direction[0]), float(e.direction[1]),
                      f"{p1[0]:.17g}" if e.p1 is not None else "",
                      f"{p1[1]:.17g}" if e.p1 is not None else ""])
    rpt.write_csv(out / "singularity_edges.csv",
                  ["kind", "planes", "p0_1", "p0_2", "dir_1", "dir_2",
                   "p1_1", "p1_2"], erows)
    if figures:
        from .figures import singularity_figure
        singularity_figure(complex_, scn.half_width, out / "singularity.png")
    result = {
        "vertices": [
            {"y": [float(c) for c in v.y], "t": float(v.t),
             "planes": [int(i) for i in v.active]}
            for v in complex_.vertices],
        "edges": [
            {"kind": e.kind, "planes": [int(i) for i in e.planes],
             "p0": [float(c) for c in e.p0],
             "direction": [float(c) for c in e.direction],
             "p1": None if e.p1 is None else [float(c) for c in e.p1]}
            for e in complex_.edges],
    }
    lines = [f"singularity complex: {len(complex_.vertices)} vertices, "
             f"{len(complex_.edges)} edges"]
    return result, True, lines, {}


def _cmd_curvature(args, scn, domain, out, figures):
    a = _param(args, scn, "curvature-verify", "a", 1.0)
    if a <= 0:
        raise UsageError("level value a must be positive")
    result = verify_theorem1(domain, a, workers=args.workers)
    ok = result["fraction_in_bounds"] >= 0.99
    surface = sample_level(domain, a, half_width=2.0 * a, delta=0.02 * a,
                           workers=args.workers)
    H, _ = curvature_grid(surface)
    mask = np.isfinite(H)
    grid = surface.grid()[mask]
    rows = np.column_stack([grid, H[mask]])
    d = surface.spatial_dim
    rpt.write_csv(out / "curvature_nodes.csv",
                  [f"y{i + 1}" for i in range(d)] + ["H"], rows)
    if figures:
        from .figures import curvature_figure
        curvature_figure(H[mask], a, d, out / "curvature.png")
    result = dict(result)
    result["csv"] = "curvature_nodes.csv"
    lines = [f"level a={a:g}: fraction_in_bounds="
             f"{result['fraction_in_bounds']:.6f} "
             f"H in [{result['H_min']:.6g}, {result['H_max']:.6g}], "
             f"{result['excluded_nodes']} nodes excluded"]
    if not ok:
        lines.append("FAIL: fraction below 0.99")
    return result, ok, lines, {"task": {"a": a}}


def _cmd_flow(args, scn, domain, out, figures):
    half, delta = _grid(args, scn)
    a = _param(args, scn, "gauss-flow", "a", 1.0)
    t_total = _param(args, scn, "gauss-flow", "t", 0.5 * a)
    steps = _param(args, scn, "gauss-flow", "steps", 6, cast=int)
    if a <= 0 or steps < 2:
        raise UsageError("need a > 0 and at least two time samples")
    surface, regions = sample_level(domain, a, half_width=half, delta=delta,
                                    workers=args.workers, return_regions=True)
    nodes = smooth_interior_nodes(surface, regions, count=4,
                                  seed=scn.seed + 71)
    times = np.linspace(0.0, t_total, steps)
    states = flow_trace(surface, times, nodes, k=0.0)
    rows = trace_csv_rows(states)
    d = surface.spatial_dim
    rpt.write_csv(out / "flow_trace.csv",
                  ["t", "node_id", "H"] + [f"lambda_{i + 1}" for i in range(d)],
                  rows)
    closed = {n: [] for n in nodes}
    est = {n: [] for n in nodes}
    worst = 0.0
    for state in states:
        for node, h, _ in state.tracked:
            closed[node].append(h)
            h_est = mean_curvature_of_graph(state.surface, node).H
            est[node].append(h_est)
            worst = max(worst, abs(h_est - h))
    bound = 10.0 * delta**2
    ok = worst <= bound
    if figures:
        from .figures import flow_figure
        flow_figure(list(times), closed, est, out / "flow.png")
    result = {
        "a": a, "t_total": t_total,
        "times": [float(t) for t in times],
        "nodes": [list(n) for n in nodes],
        "max_estimator_gap": float(worst),
        "bound": float(bound),
        "csv": "flow_trace.csv",
    }
    lines = [f"flowed level a={a:g} to t={t_total:g} in {steps} samples; "
             f"estimator vs closed form {worst:.3e} (bound {bound:.3e})"]
    if not ok:
        lines.append("FAIL: estimator drifted past the bound")
    return result, ok, lines, {"task": {"a": a, "t": t_total, "steps": steps}}


def _cmd_cmc_solve(args, scn, domain, out, figures):
    half, delta = _grid(args, scn)
    c = _param(args, scn, "cmc-solve", "c", -1.0)
    bc_level = _param(args, scn, "cmc-solve", "bc_level", None)
    bc = None if bc_level is None else ("level", float(bc_level))
    sol = solve_cmc(domain, c, half_width=half, delta=delta, bc=bc,
                    workers=args.workers)
    sandwich = verify_sandwich(domain, sol, workers=args.workers)
    sol.surface.to_csv(out / "cmc_solution.csv")
    if figures:
        from .figures import cmc_figure
        cmc_figure(sol, out / "cmc.png")
    ok = bool(sandwich["sandwich_pass"])
    result = dict(sandwich)
    result["residual_history"] = [float(v) for v in sol.residual_history]
    result["bc_level"] = bc_level
    result["csv"] = "cmc_solution.csv"
    lines = [f"c={c:g}: residual {sol.residual:.3e} after {sol.iterations} "
             f"iterations, tau in [{sandwich['tau_min']:.4f}, "
             f"{sandwich['tau_max']:.4f}], sandwich "
             f"{'pass' if ok else 'FAIL'}"]
    return result, ok, lines, {"task": {"c": c, "bc_level": bc_level,
                                        "box": half, "delta": delta}}


def _cmd_cmc_time(args, scn, domain, out, figures):
    half, delta = _grid(args, scn)
    if args.c_values is not None:
        cs = tuple(float(v) for v in args.c_values.split(","))
    else:
        task = scn.task_params("cmc-time")
        cs = tuple(float(v) for v in task.get("c_values",
                                              (-2.0, -1.0, -0.5, -0.25)))
    queries = foliation_queries(domain, cs, scn.seed + 53, half, delta,
                                args.workers)
    rep = cmc_time(domain, CmcTimeConfig(c_values=cs, queries=queries),
                   half_width=half, delta=delta, workers=args.workers)
    rows = [[*q, tau, tc, ni] for q, tau, tc, ni in
            zip(queries, rep["tau"], rep["tau_cmc"], rep["neg_inv_tau_cmc"])]
    d = domain.dim - 1
    rpt.write_csv(out / "cmc_queries.csv",
                  ["t"] + [f"y{i + 1}" for i in range(d)]
                  + ["tau", "tau_cmc", "neg_inv_tau_cmc"], rows)
    if figures:
        from .figures import cmc_time_figure
        cmc_time_figure(rep["tau"], rep["neg_inv_tau_cmc"], d,
                        out / "cmc_time.png")
    rep = dict(rep)
    rep["csv"] = "cmc_queries.csv"
    lines = [f"foliation {list(cs)}: ordering ok (min gap "
             f"{rep['min_gap']:.4f}), comparability holds at "
             f"{len(queries)} queries"]
    return rep, True, lines, {"task": {"c_values": list(cs), "box": half,
                                       "delta": delta}}


def _cmd_verify_all(args, scn, domain, out, figures):
    rep = run_suite(scn, workers=args.workers)
    lines = []
    for chk in rep["checks"]:
        status = "PASS" if chk["pass"] else f"FAIL({chk['severity']})"
        lines.append(f"{status:8s} {chk['name']}"
                     + ("" if chk["pass"] else f": {chk['error']}"))
    lines.append(f"overall: {'pass' if rep['pass'] else 'fail'}")
    return rep, rep["pass"], lines, {"exit": rep["max_severity"]}


_HANDLERS = {
    "validate": _cmd_validate,
    "tau": _cmd_tau,
    "level": _cmd_level,
    "singularity": _cmd_singularity,
    "curvature-verify": _cmd_curvature,
    "gauss-flow": _cmd_flow,
    "cmc-solve": _cmd_cmc_solve,
    "cmc-time": _cmd_cmc_time,
    "verify-all": _cmd_verify_all,
}

_NO_FIGURE_COMMANDS = {"validate", "tau", "verify-all"}


def _dispatch(args) -> int:
    scn = load_scenario(args.scenario)
    domain = scn.domain()
    out = _resolve_out(args, scn)
    figures = not args.no_figures and args.command not in _NO_FIGURE_COMMANDS
    result, ok, lines, extra = _HANDLERS[args.command](
        args, scn, domain, out, figures)
    report = rpt.build_report(args.command, scn.echo(),
                              extra.get("task", {}), result, ok)
    name = args.command.replace("-", "_")
    path = rpt.write_report(report, out, name)
    if not args.quiet:
        if args.json:
            print(rpt.render_json(report))
        else:
            for line in lines:
                print(line)
            print(f"report: {path}")
    if "exit" in extra:
        return int(extra["exit"])
    return 0 if ok else 4


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except CheckError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
