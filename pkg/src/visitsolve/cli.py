"""Command-line driver: solve, synthesize, transport, couple, check.

Every command reads a scenario JSON, writes its artifacts into --out, and
maintains a manifest listing what was emitted. Numeric failures exit 3
with the offending (level, state); argument and scenario problems exit 2;
the check command exits 1 when any invariant is violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _kernels, hjb, io, mfg, trajectory, transport
from .errors import NumericFailure, ScenarioError
from .scenario import Scenario, load_scenario, save_normalized


def _parse_vector(text: str, dim: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise ScenarioError(f"{what} must be comma-separated numbers, got '{text}'")
    if len(vals) != dim:
        raise ScenarioError(f"{what} must have {dim} components, got {len(vals)}")
    return vals


def _solve(sc: Scenario, density_totals=None):
    grid = sc.build_grid()
    ss = sc.build_statespace()
    cost = sc.build_cost(ss)
    solution = hjb.backward_solve(grid, ss, cost, a_max=sc.a_max,
                                  max_iter=sc.descent_max_iter, tol=sc.descent_tol,
                                  density_totals=density_totals)
    return grid, ss, cost, solution


def _write_solution_slices(out: Path, solution, levels) -> dict:
    grid, ss = solution.grid, solution.statespace
    files = {"values": [], "control": [], "switch": []}
    for k in levels:
        t = float(grid.times[k])
        for p in range(ss.n_states):
            label = io.bits_label(p, ss.n_targets)
            name = io.slice_name("V", label, k)
            io.write_field_slice(out / name, grid, solution.values[k, p], t, label)
            files["values"].append(name)
            for c in range(grid.dim):
                name = io.slice_name(f"alpha{c}", label, k)
                io.write_field_slice(out / name, grid, solution.control[k, p, c], t, label)
                files["control"].append(name)
            name = io.slice_name("sigma", label, k)
            io.write_field_slice(out / name, grid, solution.switch[k, p], t, label,
                                 integer=True)
            files["switch"].append(name)
    return files


def _write_density_slices(out: Path, ensemble, n_targets: int, levels) -> list:
    names = []
    grid = ensemble.grid
    for k in levels:
        t = float(grid.times[k])
        for p in range(ensemble.n_states):
            label = io.bits_label(p, n_targets)
            name = io.slice_name("mu", label, k)
            io.write_field_slice(out / name, grid, ensemble.densities[k, p], t, label)
            names.append(name)
    return names


def cmd_solve_hjb(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid, ss, cost, solution = _solve(sc)
    levels = io.parse_levels(args.levels, grid.n_levels)
    files = _write_solution_slices(out, solution, levels)
    io.save_solution(out / io.SOLUTION_NAME, solution)
    save_normalized(sc, out / io.NORMALIZED_NAME)
    files["solution"] = [io.SOLUTION_NAME]
    files["scenario"] = [io.NORMALIZED_NAME]
    manifest = io.update_manifest(out, "solve-hjb", sc, grid, ss.n_states, files)
    print(f"solve-hjb: backend={solution.backend} nonconverged={solution.nonconverged}")
    print(f"wrote {manifest}")
    return 0


def cmd_trajectory(args) -> int:
    run = Path(args.run)
    solution = io.load_solution(run / io.SOLUTION_NAME)
    sc = load_scenario(run / io.NORMALIZED_NAME)
    out = Path(args.out) if args.out else run
    out.mkdir(parents=True, exist_ok=True)
    grid, ss = solution.grid, solution.statespace
    x0 = _parse_vector(args.x0, grid.dim, "--x0")
    p0 = args.p0 if args.p0 is not None else "0" * ss.n_targets
    if len(p0) != ss.n_targets or any(ch not in "01" for ch in p0):
        raise ScenarioError(f"--p0 must be a bitstring of length {ss.n_targets}")
    try:
        traj = trajectory.synthesize(solution, x0, int(p0, 2))
    except ValueError as exc:
        raise ScenarioError(str(exc))
    prefix = "trajectory" if not args.tag else f"trajectory_{args.tag}"
    main, events = io.write_trajectory(out, traj, ss.n_targets, prefix=prefix)
    manifest = io.update_manifest(out, "trajectory", sc, grid, ss.n_states,
                                  {"trajectory": [main], "events": [events]})
    print(f"trajectory: {len(traj.events)} switch events, "
          f"final state {io.bits_label(int(traj.states[-1]), ss.n_targets)}")
    print(f"wrote {manifest}")
    return 0


def cmd_transport(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid, ss, cost, solution = _solve(sc)
    mu0 = transport.initialize_density(grid, sc.initial_density_fn())
    ensemble = transport.run_transport(solution, mu0, sc.initial_state_bits(),
                                       absorb_to_exterior=(sc.transport_mode == "absorb"))
    levels = io.parse_levels(args.levels, grid.n_levels)
    files = _write_solution_slices(out, solution, levels)
    files["density"] = _write_density_slices(out, ensemble, ss.n_targets, levels)
    io.write_ledger(out / "ledger.csv", ensemble.ledger, ss.n_targets)
    files["ledger"] = ["ledger.csv"]
    io.save_solution(out / io.SOLUTION_NAME, solution)
    save_normalized(sc, out / io.NORMALIZED_NAME)
    files["solution"] = [io.SOLUTION_NAME]
    files["scenario"] = [io.NORMALIZED_NAME]
    manifest = io.update_manifest(out, "transport", sc, grid, ss.n_states, files)
    defect = ensemble.conservation_defect()
    print(f"transport: mode={sc.transport_mode} conservation_defect={defect:.3e}")
    print(f"wrote {manifest}")
    return 0


def cmd_mfg(args) -> int:
    sc = load_scenario(args.scenario)
    if not sc.coupled:
        raise ScenarioError("mfg requires a scenario with coupled=true")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = sc.build_grid()
    ss = sc.build_statespace()
    cost = sc.build_cost(ss)
    mu0 = transport.initialize_density(grid, sc.initial_density_fn())
    max_iters = args.max_iters if args.max_iters is not None else sc.max_iters
    theta = args.theta if args.theta is not None else sc.theta
    levels = io.parse_levels(args.levels, grid.n_levels)

    snapshot_files: list[str] = []

    def callback(z, value, ensemble, err):
        if not args.snapshots:
            return
        totals = ensemble.total_density_history()
        for k in levels:
            name = f"mu_total_z{z}_k{k}.csv"
            io.write_field_slice(out / name, grid, totals[k], float(grid.times[k]), "-")
            snapshot_files.append(name)

    result = mfg.fixed_point_solve(
        grid, ss, cost, mu0, sc.initial_state_bits(),
        absorb_to_exterior=(sc.transport_mode == "absorb"),
        max_iters=max_iters, theta=theta, a_max=sc.a_max, callback=callback)

    files = _write_solution_slices(out, result.value, levels)
    files["density"] = _write_density_slices(out, result.density, ss.n_targets, levels)
    io.write_error_history(out / "error_history.csv", result.error_history)
    files["error_history"] = ["error_history.csv"]
    io.write_ledger(out / "ledger.csv", result.density.ledger, ss.n_targets)
    files["ledger"] = ["ledger.csv"]
    io.save_solution(out / io.SOLUTION_NAME, result.value)
    save_normalized(sc, out / io.NORMALIZED_NAME)
    files["solution"] = [io.SOLUTION_NAME]
    files["scenario"] = [io.NORMALIZED_NAME]
    if snapshot_files:
        files["snapshots"] = snapshot_files
    manifest = io.update_manifest(out, "mfg", sc, grid, ss.n_states, files)
    final_e = result.error_history[-1] if result.error_history else float("nan")
    print(f"mfg: iterations={result.iterations} converged={result.converged} "
          f"final_E={final_e:.6g} threshold={result.threshold:.6g}")
    print(f"wrote {manifest}")
    return 0


def _parse_sink(args, grid):
    if (args.sink_ball is None) == (args.sink_halfspace is None):
        raise ScenarioError("give exactly one of --sink-ball or --sink-halfspace")
    coords = grid.node_coords
    if args.sink_ball is not None:
        vals = _parse_vector(args.sink_ball, grid.dim + 1, "--sink-ball")
        center, radius = vals[:-1], vals[-1]
        if radius <= 0:
            raise ScenarioError("--sink-ball radius must be positive")
        d2 = sum((coords[c] - center[c]) ** 2 for c in range(grid.dim))
        return d2 <= radius ** 2
    try:
        axis_s, thresh_s = args.sink_halfspace.split(",")
        axis, thresh = int(axis_s), float(thresh_s)
    except ValueError:
        raise ScenarioError("--sink-halfspace takes 'axis,threshold'")
    if not 0 <= axis < grid.dim:
        raise ScenarioError(f"--sink-halfspace axis must be in 0..{grid.dim - 1}")
    return coords[axis] >= thresh


def cmd_arrival_time(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = sc.build_grid()
    b = _parse_vector(args.b, grid.dim, "--b")
    mask = _parse_sink(args, grid)
    if not np.any(mask):
        raise ScenarioError("sink contains no grid nodes")
    tau = transport.arrival_time_solve(grid, np.asarray(b), mask)
    levels = io.parse_levels(args.levels, grid.n_levels)
    names = []
    for k in levels:
        name = io.slice_name("tau", None, k)
        io.write_field_slice(out / name, grid, tau[k], float(grid.times[k]), "-")
        names.append(name)
    save_normalized(sc, out / io.NORMALIZED_NAME)
    manifest = io.update_manifest(out, "arrival-time", sc, grid,
                                  sc.build_statespace().n_states,
                                  {"arrival": names, "scenario": [io.NORMALIZED_NAME]})
    print(f"arrival-time: sink nodes={int(mask.sum())}")
    print(f"wrote {manifest}")
    return 0


def cmd_check(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid, ss, cost, solution = _solve(sc)
    report = hjb.verify_invariants(solution, cost, tol=1e-10, interior_only=True)
    report["backend"] = solution.backend
    report["nonconverged_nodes"] = solution.nonconverged
    (out / "check_report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    save_normalized(sc, out / io.NORMALIZED_NAME)
    io.update_manifest(out, "check", sc, grid, ss.n_states,
                       {"report": ["check_report.json"], "scenario": [io.NORMALIZED_NAME]})
    ok = report["violations"] == 0
    print(f"check: worst_update_gap={report['worst_update_gap']:.3e} "
          f"violations={report['violations']} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="visitsolve",
        description="Optimal-visiting solver suite: values, trajectories, "
                    "densities, coupled fixed points.")
    parser.add_argument("--version", action="version", version="visitsolve 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--levels", default="0",
                       help="'all' or comma-separated time level indices (default 0)")

    p = sub.add_parser("solve-hjb", help="value functions and feedback maps")
    common(p)
    p.set_defaults(fn=cmd_solve_hjb)

    p = sub.add_parser("trajectory", help="single-agent path from solve artifacts")
    p.add_argument("--run", required=True, help="directory holding solution.npz")
    p.add_argument("--out", default=None, help="output directory (default: --run)")
    p.add_argument("--x0", required=True, help="start point, e.g. '0.0,0.0'")
    p.add_argument("--p0", default=None, help="start state bitstring (default all zeros)")
    p.add_argument("--tag", default=None, help="suffix for the output file names")
    p.set_defaults(fn=cmd_trajectory)

    p = sub.add_parser("transport", help="density push-forward with ledger")
    common(p)
    p.set_defaults(fn=cmd_transport)

    p = sub.add_parser("mfg", help="congestion-coupled fixed point")
    common(p)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--snapshots", action="store_true",
                   help="write per-iteration total density slices")
    p.set_defaults(fn=cmd_mfg)

    p = sub.add_parser("arrival-time", help="first-arrival-time field for a prescribed drift")
    common(p)
    p.add_argument("--b", required=True, help="constant drift, e.g. '1,0'")
    p.add_argument("--sink-ball", default=None, help="'cx,cy,radius' (or 'c,r' in 1-D)")
    p.add_argument("--sink-halfspace", default=None, help="'axis,threshold' for coord >= threshold")
    p.set_defaults(fn=cmd_arrival_time)

    p = sub.add_parser("check", help="re-derive the update identities and report")
    common(p)
    p.set_defaults(fn=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
