"""Command-line entry points: analysis, optimization, simulation, sweeps.

Every command reads a scenario (a YAML recipe, or the stock 3x3 grid when
none is given), prints one JSON summary line to stdout, and optionally
writes a CSV artifact.  CSV output is UTF-8, comma-separated, decimal
point, 12 significant digits; runs are single-threaded and seeded, so a
fixed command line reproduces its artifacts byte for byte.

Commands:

* ``analyze``: closed-form latency and rate of every candidate route at one
  window position.
* ``optimize-global``: best shared window and route.
* ``optimize-distributed``: best per-hop windows and route.
* ``simulate``: Monte Carlo on the selected route, empirical vs closed-form
  readings side by side.
* ``compare``: coordinated selection against shortest-path and geographic
  baselines, each at its own best window.
* ``sweep``: grid sweeps over the window, the trade-off weight, a traffic
  scale factor, or scheme beam counts, with CSV output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .closedform import QuadratureError, RouteEvaluator
from .model import Route, SystemParams
from .optimize import build_normalization, solve_distributed, solve_global, weighted_objective
from .routing import (
    GreedyLoopError,
    NoRouteError,
    enumerate_routes,
    gpsr_route,
    spr_route,
)
from .scenario import Scenario, build_grid_scenario, default_scenario, load_scenario
from .simulate import (
    BackhaulConfig,
    Branch,
    SimConfig,
    delta_t_for_scheme,
    simulate_route,
    sweep_windows,
)

__all__ = ["run_command", "main"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _emit(record: dict) -> None:
    print(json.dumps(record, separators=(", ", ": ")))


def _json_ready(value):
    if isinstance(value, float):
        return float(format(value, ".12g"))
    if isinstance(value, (np.floating, np.integer)):
        return _json_ready(value.item())
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _nodes_label(route: Route) -> str:
    return "-".join(str(n) for n in route.nodes)


def _load(args) -> Scenario:
    scenario = load_scenario(args.scenario) if args.scenario else default_scenario()
    params = scenario.params
    if getattr(args, "alpha", None) is not None:
        if not 0.0 <= args.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        params = replace(params, weight=args.alpha)
    if getattr(args, "scheme", None) is not None:
        params = replace(params, trial_time=delta_t_for_scheme(args.scheme, args.beams))
    if params is not scenario.params:
        scenario = replace(scenario, params=params)
    return scenario


def _routes(scenario: Scenario, args) -> list[Route]:
    max_hops = getattr(args, "max_hops", None)
    if max_hops is None:
        max_hops = scenario.route_filter
    return enumerate_routes(scenario.topology, scenario.source, scenario.destination, max_hops)


def _backhaul(args) -> BackhaulConfig | None:
    return BackhaulConfig() if getattr(args, "backhaul", False) else None


def _cmd_analyze(args) -> int:
    scenario = _load(args)
    params = scenario.params
    t = params.hop_dwell / 2 if args.t is None else args.t
    routes = _routes(scenario, args)
    rows = []
    records = []
    for i, route in enumerate(routes):
        ev = RouteEvaluator(route, params)
        lat = ev.latency(t)
        rate = ev.rate_closed(t)
        rate_mm = ev.rate_min_of_means(t)
        rows.append([i, _nodes_label(route), len(route), lat, rate, rate_mm])
        records.append(
            {
                "route": i,
                "nodes": _nodes_label(route),
                "hops": len(route),
                "latency": lat,
                "rate": rate,
                "rate_min_means": rate_mm,
            }
        )
    if args.out:
        _write_csv(args.out, ["route", "nodes", "hops", "latency", "rate", "rate_min_means"], rows)
    best_rate = max(records, key=lambda r: r["rate"])
    best_latency = min(records, key=lambda r: r["latency"])
    _emit(
        _json_ready(
            {
                "command": "analyze",
                "t": t,
                "routes": records,
                "best_rate_route": best_rate["route"],
                "best_latency_route": best_latency["route"],
                "out": args.out,
            }
        )
    )
    return 0


def _cmd_optimize_global(args) -> int:
    scenario = _load(args)
    routes = _routes(scenario, args)
    outcome = solve_global(routes, scenario.params)
    route = routes[outcome.route_index]
    if args.out:
        rows = [
            [i, _nodes_label(r), t_i, val_i]
            for i, (r, (t_i, val_i)) in enumerate(zip(routes, outcome.per_route_best))
        ]
        _write_csv(args.out, ["route", "nodes", "t_star", "objective"], rows)
    _emit(
        _json_ready(
            {
                "command": "optimize-global",
                "alpha": scenario.params.weight,
                "t_star": outcome.t_star,
                "objective": outcome.objective,
                "route": outcome.route_index,
                "nodes": _nodes_label(route),
                "latency": outcome.latency,
                "rate": outcome.rate,
                "stationarity_ok": bool(outcome.kkt.get("ok", False)),
                "out": args.out,
            }
        )
    )
    return 0


def _cmd_optimize_distributed(args) -> int:
    scenario = _load(args)
    routes = _routes(scenario, args)
    outcome = solve_distributed(routes, scenario.params)
    route = routes[outcome.route_index]
    if args.out:
        rows = []
        for i, (windows, val) in enumerate(outcome.per_route):
            for h, w in enumerate(windows):
                rows.append([i, _nodes_label(routes[i]), h, w, val])
        _write_csv(args.out, ["route", "nodes", "hop", "window", "objective"], rows)
    _emit(
        _json_ready(
            {
                "command": "optimize-distributed",
                "alpha": scenario.params.weight,
                "windows": list(outcome.windows),
                "objective": outcome.objective,
                "route": outcome.route_index,
                "nodes": _nodes_label(route),
                "latency": outcome.latency,
                "rate": outcome.rate,
                "out": args.out,
            }
        )
    )
    return 0


def _branch_fractions(result) -> tuple[float, float, float]:
    frac = result.branch_counts.sum(axis=0) / (result.snapshots * len(result.branch_counts))
    forward = float(frac[Branch.COURIER_FORWARD])
    success = float(frac[Branch.DISCOVERY_SUCCESS])
    failure = float(frac[Branch.DISCOVERY_FAILURE] + frac[Branch.BACKHAUL_FORWARD])
    return forward, success, failure


def _cmd_simulate(args) -> int:
    scenario = _load(args)
    params = scenario.params
    routes = _routes(scenario, args)
    outcome = solve_global(routes, params, with_kkt=False)
    route = routes[outcome.route_index]
    t = outcome.t_star if args.t is None else args.t
    config = SimConfig(snapshots=args.snapshots, seed=args.seed, mode=args.mode)
    result = simulate_route(route, t, params, config, backhaul=_backhaul(args))
    ev = RouteEvaluator(route, params)
    lat_closed = ev.latency(t)
    rate_closed = ev.rate_closed(t)
    rate_mm = ev.rate_min_of_means(t)
    rel = lambda emp, ana: abs(emp - ana) / abs(ana) if ana != 0 else float("inf")
    p_fwd, p_succ, p_fail = _branch_fractions(result)
    if args.out:
        _write_csv(
            args.out,
            ["t", "mean_latency", "se_latency", "mean_rate", "se_rate", "p_fwd", "p_succ", "p_fail"],
            [[t, result.mean_latency, result.se_latency, result.mean_rate, result.se_rate, p_fwd, p_succ, p_fail]],
        )
    _emit(
        _json_ready(
            {
                "command": "simulate",
                "t": t,
                "nodes": _nodes_label(route),
                "snapshots": result.snapshots,
                "mode": result.mode,
                "backhaul": bool(args.backhaul),
                "empirical": {
                    "latency": result.mean_latency,
                    "se_latency": result.se_latency,
                    "rate": result.mean_rate,
                    "se_rate": result.se_rate,
                    "rate_mean_subst": result.mean_rate_mean_subst,
                },
                "analytic": {
                    "latency": lat_closed,
                    "rate": rate_closed,
                    "rate_min_means": rate_mm,
                },
                "relative_error": {
                    "latency": rel(result.mean_latency, lat_closed),
                    "rate": rel(result.mean_rate, rate_closed),
                    "rate_mean_subst_vs_min_means": rel(result.mean_rate_mean_subst, rate_mm),
                },
                "out": args.out,
            }
        )
    )
    return 0


def _cmd_compare(args) -> int:
    scenario = _load(args)
    params = scenario.params
    routes = _routes(scenario, args)
    context = build_normalization(routes, params)
    outcome = solve_global(routes, params, context=context, with_kkt=False)
    entries = [
        (
            "global",
            routes[outcome.route_index],
            outcome.t_star,
            outcome.objective,
        )
    ]
    for name, pick in (("spr", spr_route), ("gpsr", gpsr_route)):
        route = pick(scenario.topology, scenario.source, scenario.destination)
        sub = solve_global([route], params, context=context, with_kkt=False)
        entries.append((name, route, sub.t_star, sub.objective))
    rows = []
    records = []
    for name, route, t_star, objective in entries:
        ev = RouteEvaluator(route, params)
        rows.append(
            [name, _nodes_label(route), len(route), t_star, objective, ev.latency(t_star), ev.rate_closed(t_star)]
        )
        records.append(
            {
                "strategy": name,
                "nodes": _nodes_label(route),
                "hops": len(route),
                "t_star": t_star,
                "objective": objective,
                "latency": ev.latency(t_star),
                "rate": ev.rate_closed(t_star),
            }
        )
    if args.out:
        _write_csv(
            args.out,
            ["strategy", "nodes", "hops", "t_star", "objective", "latency", "rate"],
            rows,
        )
    _emit(
        _json_ready(
            {
                "command": "compare",
                "alpha": params.weight,
                "strategies": records,
                "out": args.out,
            }
        )
    )
    return 0


def _parse_grid(args, default: np.ndarray) -> np.ndarray:
    if args.grid:
        values = np.array([float(v) for v in args.grid.split(",")], dtype=float)
        if len(values) == 0:
            raise ValueError("empty sweep grid")
        if np.any(np.diff(values) < 0):
            raise ValueError("sweep grid must be sorted ascending")
        return values
    return default


def _sweep_t(args, scenario: Scenario) -> tuple[list[str], list[list], dict]:
    params = scenario.params
    T = params.hop_dwell
    grid = _parse_grid(args, np.linspace(0.0, T, args.points))
    if np.any(grid < 0) or np.any(grid > T):
        raise ValueError("window grid must lie within [0, hop_dwell]")
    routes = _routes(scenario, args)
    context = build_normalization(routes, params)
    outcome = solve_global(routes, params, context=context, with_kkt=False)
    route = routes[outcome.route_index]
    ev = RouteEvaluator(route, params)
    config = SimConfig(snapshots=args.snapshots, seed=args.seed, mode=args.mode)
    results = sweep_windows(route, [float(t) for t in grid], params, config, backhaul=_backhaul(args))
    rows = []
    for t, res in zip(grid, results):
        p_fwd, p_succ, p_fail = _branch_fractions(res)
        objective = weighted_objective(ev, float(t), context)
        rows.append(
            [
                float(t),
                res.mean_latency,
                res.se_latency,
                res.mean_rate,
                res.se_rate,
                p_fwd,
                p_succ,
                p_fail,
                objective,
            ]
        )
    header = ["t", "mean_latency", "se_latency", "mean_rate", "se_rate", "p_fwd", "p_succ", "p_fail", "objective"]
    best = max(rows, key=lambda r: r[-1])
    summary = {"nodes": _nodes_label(route), "argmax_objective_t": best[0]}
    return header, rows, summary


def _sweep_alpha(args, scenario: Scenario) -> tuple[list[str], list[list], dict]:
    params = scenario.params
    grid = _parse_grid(args, np.linspace(0.0, 1.0, 11))
    if np.any(grid < 0) or np.any(grid > 1):
        raise ValueError("alpha grid must lie within [0, 1]")
    routes = _routes(scenario, args)
    context = build_normalization(routes, params)
    rows = []
    for alpha in grid:
        g = solve_global(routes, params, weight=float(alpha), context=context, with_kkt=False)
        d = solve_distributed(routes, params, weight=float(alpha), context=context)
        rows.append(
            [
                float(alpha),
                g.t_star,
                g.objective,
                g.latency,
                g.rate,
                d.objective,
                d.latency,
                d.rate,
            ]
        )
    header = [
        "alpha",
        "t_star_global",
        "objective_global",
        "latency_global",
        "rate_global",
        "objective_distributed",
        "latency_distributed",
        "rate_distributed",
    ]
    return header, rows, {"routes": len(routes)}


def _sweep_lambda_scale(args, scenario: Scenario) -> tuple[list[str], list[list], dict]:
    grid = _parse_grid(args, np.array([0.5, 0.75, 1.0, 1.25, 1.5]))
    if np.any(grid <= 0):
        raise ValueError("traffic scale factors must be positive")
    rows = []
    for scale in grid:
        low, high = scenario.arrival_interval
        scaled = build_grid_scenario(
            rows=scenario.rows,
            cols=scenario.cols,
            block_length=scenario.block_length,
            params=scenario.params,
            seed=scenario.seed,
            arrival_interval=(low * float(scale), high * float(scale)),
            source=scenario.source,
            destination=scenario.destination,
            route_filter=scenario.route_filter,
        )
        routes = _routes(scaled, args)
        outcome = solve_distributed(routes, scaled.params)
        route = routes[outcome.route_index]
        for h, w in enumerate(outcome.windows):
            rows.append([float(scale), outcome.route_index, _nodes_label(route), h, w, outcome.objective])
    header = ["lambda_scale", "route", "nodes", "hop", "window", "objective"]
    return header, rows, {"entries": len(rows)}


def _sweep_scheme_beams(args, scenario: Scenario) -> tuple[list[str], list[list], dict]:
    grid = _parse_grid(args, np.arange(1.0, 9.0))
    beams = [int(b) for b in grid]
    if any(b < 1 or b != g for b, g in zip(beams, grid)):
        raise ValueError("beam counts must be positive integers")
    routes = _routes(scenario, args)
    rows = []
    for scheme in ("TD", "SD", "FD", "CD"):
        for m in beams:
            if scheme == "TD" and m != 1:
                continue
            dt = delta_t_for_scheme(scheme, m)
            params = replace(scenario.params, trial_time=dt)
            outcome = solve_global(routes, params, with_kkt=False)
            rows.append(
                [scheme, m, dt, outcome.t_star, outcome.objective, outcome.latency, outcome.rate]
            )
    header = ["scheme", "beams", "delta_t", "t_star", "objective", "latency", "rate"]
    return header, rows, {"routes": len(routes)}


def _cmd_sweep(args) -> int:
    scenario = _load(args)
    runner = {
        "t": _sweep_t,
        "alpha": _sweep_alpha,
        "lambda_scale": _sweep_lambda_scale,
        "scheme_beams": _sweep_scheme_beams,
    }[args.variable]
    header, rows, extra = runner(args, scenario)
    if args.out:
        _write_csv(args.out, header, rows)
    record = {
        "command": "sweep",
        "variable": args.variable,
        "rows": len(rows),
        "columns": header,
        "out": args.out,
    }
    record.update(extra)
    _emit(_json_ready(record))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2xdelivery",
        description="Multihop store-carry-forward delivery: analysis, optimization, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, alpha=True, out=True) -> None:
        p.add_argument("--scenario", help="scenario YAML recipe; omit for the stock 3x3 grid")
        p.add_argument("--max-hops", type=int, default=None, help="route length cap")
        p.add_argument("--scheme", choices=["TD", "SD", "FD", "CD"], default=None,
                       help="derive the trial duration from a discovery scheme")
        p.add_argument("--beams", type=int, default=1, help="beam count for --scheme")
        if alpha:
            p.add_argument("--alpha", type=float, default=None, help="trade-off weight in [0, 1]")
        if out:
            p.add_argument("--out", default=None, help="CSV output path")

    p = sub.add_parser("analyze", help="closed-form readings per route at one window")
    common(p)
    p.add_argument("--t", type=float, default=None, help="window position; default half the dwell")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("optimize-global", help="best shared window over all routes")
    common(p)
    p.set_defaults(func=_cmd_optimize_global)

    p = sub.add_parser("optimize-distributed", help="best per-hop windows over all routes")
    common(p)
    p.set_defaults(func=_cmd_optimize_distributed)

    p = sub.add_parser("simulate", help="Monte Carlo vs closed forms on the selected route")
    common(p)
    p.add_argument("--t", type=float, default=None, help="window; default: the optimizer's choice")
    p.add_argument("--snapshots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["physical", "analytic"], default="physical")
    p.add_argument("--backhaul", action="store_true", help="wire every consecutive RSU pair")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="coordinated selection vs SPR and GPSR baselines")
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep", help="grid sweep with CSV output")
    common(p)
    p.add_argument("--variable", choices=["t", "alpha", "lambda_scale", "scheme_beams"], default="t")
    p.add_argument("--grid", default=None, help="comma-separated ascending grid values")
    p.add_argument("--points", type=int, default=41, help="grid size for --variable t when --grid is omitted")
    p.add_argument("--snapshots", type=int, default=2_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["physical", "analytic"], default="physical")
    p.add_argument("--backhaul", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    return parser


def run_command(argv: Sequence[str] | None = None) -> int:
    """Parse and run one command; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ValueError,
        NoRouteError,
        GreedyLoopError,
        QuadratureError,
        OSError,
        yaml.YAMLError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
