"""Window optimization over one or many candidate routes.

The decision variable is the discovery window t, shared by every hop of a
route in the coordinated setting or chosen per hop in the distributed one.
The objective trades the end-to-end rate against the end-to-end latency:

    F(t) = weight * rate_norm(t) - (1 - weight) * latency_norm(t)

where both readings are min-max normalized over a shared context so the
trade-off weight is meaningful across routes.  The objective is piecewise
smooth in t: every multiple of the trial time admits one more whole trial
into the window, which moves probability mass between branches in a jump.
The solver therefore works piece by piece, combining a vectorized
derivative-sign scan with the piece endpoints and the jump points
themselves; sign-change brackets are polished by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .closedform import RouteEvaluator
from .model import Route, SystemParams

__all__ = [
    "NormalizationContext",
    "OptimizationOutcome",
    "DistributedOutcome",
    "build_normalization",
    "weighted_objective",
    "solve_global",
    "solve_distributed",
    "kkt_stationarity_check",
    "verify_concavity",
]

# Window values closer than this (relative to the dwell) are considered equal.
_REL_T_TOL = 1e-9
# Step used by derivative probes, relative to the trial time.
_REL_PROBE = 1e-4
# Interior sample count per smooth piece in the scan grids.
_PIECE_SAMPLES = 7


@dataclass(frozen=True)
class NormalizationContext:
    """Min-max envelopes that map raw readings onto [0, 1].

    Built once from the candidate routes and reused for every evaluation so
    objective values stay comparable.  Degenerate envelopes (max == min)
    normalize to zero.
    """

    latency_min: float
    latency_max: float
    rate_min: float
    rate_max: float

    def latency_norm(self, value):
        span = self.latency_max - self.latency_min
        if span <= 0.0:
            return np.zeros_like(value, dtype=float) if isinstance(value, np.ndarray) else 0.0
        return (value - self.latency_min) / span

    def rate_norm(self, value):
        span = self.rate_max - self.rate_min
        if span <= 0.0:
            return np.zeros_like(value, dtype=float) if isinstance(value, np.ndarray) else 0.0
        return (value - self.rate_min) / span


@dataclass(frozen=True)
class OptimizationOutcome:
    """Result of a shared-window search over candidate routes."""

    t_star: float
    objective: float
    route_index: int
    latency: float
    rate: float
    per_route_best: tuple[tuple[float, float], ...] = ()
    kkt: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DistributedOutcome:
    """Result of per-hop window selection, reported against the shared scale."""

    windows: tuple[float, ...]
    objective: float
    route_index: int
    latency: float
    rate: float
    per_route: tuple[tuple[tuple[float, ...], float], ...] = ()


@dataclass(frozen=True)
class _ScanGrid:
    """Piecewise sample grid of one evaluator: edges, insets, interiors."""

    ts: np.ndarray
    pieces: np.ndarray  # (pieces, _PIECE_SAMPLES + 2) indices, -1 where absent
    edges: np.ndarray
    probe: float


def _scan_grid(evaluator: RouteEvaluator) -> _ScanGrid:
    """Sample grid holding, per smooth piece [a, b): the left edge a, up to
    _PIECE_SAMPLES interior points, and the inset b - probe standing in for
    the left limit at b; plus the domain end T."""
    T = evaluator.params.hop_dwell
    h = _REL_PROBE * evaluator.params.trial_time
    edges = evaluator.breakpoints()
    ts: list[float] = []
    rows: list[list[int]] = []
    for a, b in zip(edges[:-1], edges[1:]):
        a, b = float(a), float(b)
        # Row = [edge, interiors..., inset] so sign-change bracketing sees the
        # whole piece; a peak between the edge and the first interior sample
        # would otherwise never produce a rising difference.
        row = [-1] * (_PIECE_SAMPLES + 2)
        row[0] = len(ts)
        ts.append(a)
        if b - a >= 6 * h:
            xs = np.linspace(a + 2 * h, b - 2 * h, _PIECE_SAMPLES)
            for i, x in enumerate(xs):
                row[1 + i] = len(ts)
                ts.append(float(x))
        if b - h > a:
            row[-1] = len(ts)
            ts.append(b - h)
        rows.append(row)
    ts.append(T)
    return _ScanGrid(
        ts=np.asarray(ts),
        pieces=np.asarray(rows, dtype=int),
        edges=np.asarray(edges, dtype=float),
        probe=h,
    )


def build_normalization(
    routes: Sequence[Route],
    params: SystemParams,
    evaluators: Sequence[RouteEvaluator] | None = None,
) -> NormalizationContext:
    """Min-max envelopes over all candidate routes and the whole window range.

    Latency extremes sit at the window ends, but the grid keeps every piece
    edge anyway.  The rate envelope is widened to cover the per-hop
    bottleneck readings as well, so distributed aggregates normalize into
    the same [0, 1] box: no hop anywhere reads below the lower end or above
    the upper end.
    """
    if not routes:
        raise ValueError("need at least one route")
    evs = list(evaluators) if evaluators is not None else [RouteEvaluator(r, params) for r in routes]
    lat_lo = math.inf
    lat_hi = -math.inf
    rate_lo = math.inf
    rate_hi = -math.inf
    for ev in evs:
        out = ev.series(_scan_grid(ev).ts)
        lat_lo = min(lat_lo, float(out["latency"].min()))
        lat_hi = max(lat_hi, float(out["latency"].max()))
        rate_lo = min(rate_lo, float(out["rate_closed"].min()), float(out["hop_rate"].min()))
        rate_hi = max(rate_hi, float(out["rate_closed"].max()), float(out["hop_rate"].max()))
    return NormalizationContext(lat_lo, lat_hi, rate_lo, rate_hi)


def weighted_objective(
    evaluator: RouteEvaluator,
    t: float,
    context: NormalizationContext,
    weight: float | None = None,
) -> float:
    """Normalized trade-off value at one window position."""
    w = evaluator.params.weight if weight is None else weight
    rate = evaluator.rate_closed(t)
    lat = evaluator.latency(t)
    return w * context.rate_norm(rate) - (1.0 - w) * context.latency_norm(lat)


def _bisect_sign_change(
    deriv: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
) -> float:
    # Precondition: deriv(lo) > 0 >= deriv(hi); the function is smooth here.
    for _ in range(80):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if deriv(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _maximize_scan(
    grid: _ScanGrid,
    values: np.ndarray,
    scalar_value: Callable[[float], float],
    T: float,
) -> tuple[float, float]:
    """Best window from grid values plus bisection of interior sign changes.

    ``values`` are the objective readings over ``grid.ts``; interior maxima
    are bracketed by first differences of each piece's samples and polished
    by bisection on the scalar objective.
    """
    h = grid.probe
    tol = _REL_T_TOL * T
    candidates: list[tuple[float, float]] = [(float(t), float(v)) for t, v in zip(grid.ts, values)]

    def deriv(x: float) -> float:
        return (scalar_value(x + h) - scalar_value(x - h)) / (2 * h)

    for row in grid.pieces:
        idx = row[row >= 0]
        if len(idx) < 3:
            continue
        xs = grid.ts[idx]
        vs = values[idx]
        d = np.diff(vs)
        for i in range(len(d) - 1):
            if d[i] > 0.0 >= d[i + 1]:
                # Keep the bracket one probe inside the domain so the central
                # difference never reads past it; the raw samples already
                # cover a peak hiding in that sliver.
                lo = max(float(xs[i]), h)
                hi = min(float(xs[i + 2]), T - h)
                if lo < hi:
                    t_star = _bisect_sign_change(deriv, lo, hi, tol)
                    candidates.append((t_star, scalar_value(t_star)))
    best_t, best_val = 0.0, -math.inf
    for t, v in candidates:
        t = min(max(t, 0.0), T)
        if v > best_val + 1e-15 or (abs(v - best_val) <= 1e-15 and t < best_t):
            best_val, best_t = v, t
    return best_t, best_val


def _route_objective_series(
    evaluator: RouteEvaluator,
    ts: np.ndarray,
    context: NormalizationContext,
    weight: float,
) -> np.ndarray:
    out = evaluator.series(ts)
    return weight * context.rate_norm(out["rate_closed"]) - (1.0 - weight) * context.latency_norm(
        out["latency"]
    )


def _best_window(
    evaluator: RouteEvaluator,
    context: NormalizationContext,
    weight: float,
    grid: _ScanGrid | None = None,
) -> tuple[float, float]:
    """Best shared window and objective for one route under a context."""
    g = grid or _scan_grid(evaluator)
    values = _route_objective_series(evaluator, g.ts, context, weight)
    return _maximize_scan(
        g,
        values,
        lambda t: weighted_objective(evaluator, t, context, weight),
        evaluator.params.hop_dwell,
    )


def solve_global(
    routes: Sequence[Route],
    params: SystemParams,
    weight: float | None = None,
    context: NormalizationContext | None = None,
    with_kkt: bool = True,
) -> OptimizationOutcome:
    """Coordinated search: one shared window per route, best route wins.

    Ties between routes break toward the smaller window and then the lower
    route index.  The returned outcome carries a first-order optimality
    report for the winning point.
    """
    if not routes:
        raise ValueError("need at least one route")
    w = params.weight if weight is None else weight
    if not 0.0 <= w <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    evaluators = [RouteEvaluator(r, params) for r in routes]
    ctx = context or build_normalization(routes, params, evaluators)
    per_route: list[tuple[float, float]] = []
    best = (-math.inf, math.inf, -1)  # value, window, index
    for i, ev in enumerate(evaluators):
        t_i, val_i = _best_window(ev, ctx, w)
        per_route.append((t_i, val_i))
        if val_i > best[0] + 1e-15 or (
            abs(val_i - best[0]) <= 1e-15 and (t_i, i) < (best[1], best[2])
        ):
            best = (val_i, t_i, i)
    val, t_star, idx = best
    ev = evaluators[idx]
    kkt = kkt_stationarity_check(ev, t_star, ctx, w) if with_kkt else {}
    return OptimizationOutcome(
        t_star=t_star,
        objective=val,
        route_index=idx,
        latency=ev.latency(t_star),
        rate=ev.rate_closed(t_star),
        per_route_best=tuple(per_route),
        kkt=kkt,
    )


def _best_hop_windows(evaluator: RouteEvaluator, weight: float) -> tuple[float, ...]:
    """Window each hop picks from its own readings alone.

    Every hop normalizes over its own reading range (a hop knows nothing of
    the rest of the route) and maximizes the same weighted trade-off.
    """
    grid = _scan_grid(evaluator)
    out = evaluator.series(grid.ts)
    T = evaluator.params.hop_dwell
    windows = []
    for hidx in range(evaluator.k):
        lats = out["hop_latency"][hidx]
        rates = out["hop_rate"][hidx]
        ctx = NormalizationContext(
            float(lats.min()), float(lats.max()), float(rates.min()), float(rates.max())
        )
        values = weight * ctx.rate_norm(rates) - (1.0 - weight) * ctx.latency_norm(lats)

        def scalar_value(t: float, hidx=hidx, ctx=ctx) -> float:
            lat = float(evaluator.hop_latencies(t)[hidx])
            rate = float(evaluator.hop_rates(t)[hidx])
            return weight * ctx.rate_norm(rate) - (1.0 - weight) * ctx.latency_norm(lat)

        t_h, _ = _maximize_scan(grid, values, scalar_value, T)
        windows.append(t_h)
    return tuple(windows)


def solve_distributed(
    routes: Sequence[Route],
    params: SystemParams,
    weight: float | None = None,
    context: NormalizationContext | None = None,
) -> DistributedOutcome:
    """Uncoordinated search: every hop picks its own window locally.

    Each hop optimizes the trade-off over its own normalized readings; the
    route-level outcome aggregates the hops' choices (latency sums, rate is
    the weakest hop's mean reading) and is scored on the shared context so
    it can be compared with the coordinated solution.
    """
    if not routes:
        raise ValueError("need at least one route")
    w = params.weight if weight is None else weight
    if not 0.0 <= w <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    evaluators = [RouteEvaluator(r, params) for r in routes]
    ctx = context or build_normalization(routes, params, evaluators)

    def aggregate(ev: RouteEvaluator, windows: tuple[float, ...]) -> tuple[float, float, float]:
        lat = float(sum(ev.hop_latencies(t)[h] for h, t in enumerate(windows)))
        rate = float(min(ev.hop_rates(t)[h] for h, t in enumerate(windows)))
        val = w * ctx.rate_norm(rate) - (1.0 - w) * ctx.latency_norm(lat)
        return val, lat, rate

    per_route: list[tuple[tuple[float, ...], float]] = []
    best = (-math.inf, -1)
    for i, ev in enumerate(evaluators):
        windows = _best_hop_windows(ev, w)
        val, _, _ = aggregate(ev, windows)
        per_route.append((windows, val))
        if val > best[0] + 1e-15:
            best = (val, i)
    val, idx = best
    windows = per_route[idx][0]
    _, lat, rate = aggregate(evaluators[idx], windows)
    return DistributedOutcome(
        windows=windows,
        objective=val,
        route_index=idx,
        latency=lat,
        rate=rate,
        per_route=tuple(per_route),
    )


def kkt_stationarity_check(
    evaluator: RouteEvaluator,
    t_star: float,
    context: NormalizationContext,
    weight: float | None = None,
) -> dict:
    """First-order optimality report for a solved window.

    Interior points away from trial-count jumps must have a vanishing
    derivative; jump points and the domain ends are checked through
    one-sided differences and local value comparison instead.  The report
    carries the classification, the measured derivatives, and a boolean
    verdict under ``ok``.
    """
    params = evaluator.params
    w = params.weight if weight is None else weight
    T = params.hop_dwell
    h = _REL_PROBE * params.trial_time

    def F(t: float) -> float:
        return weighted_objective(evaluator, min(max(t, 0.0), T), context, w)

    edges = evaluator.breakpoints()
    near_edge = bool(np.any(np.abs(edges - t_star) < 2.5 * h))
    at_left = t_star < 2.5 * h
    at_right = t_star > T - 2.5 * h

    # Derivative scale from a coarse sweep, so the tolerance tracks the
    # objective's actual variation.
    sweep = np.linspace(2 * h, T - 2 * h, 64)
    lo = _route_objective_series(evaluator, sweep - h, context, w)
    hi = _route_objective_series(evaluator, sweep + h, context, w)
    scale = float(np.max(np.abs((hi - lo) / (2 * h))))
    tol = 1e-6 * max(scale, 1e-12)

    report: dict = {"t_star": t_star, "weight": w, "scale": scale, "tolerance": tol}
    if at_left:
        # t = 0 is also a trial-count edge; a value comparison is the robust
        # boundary condition there.
        d_right = (F(t_star + h) - F(t_star)) / h
        ok = F(t_star) >= F(t_star + h) - tol
        report.update(kind="boundary_left", derivative=d_right, ok=bool(ok))
    elif at_right:
        d_left = (F(t_star) - F(t_star - h)) / h
        report.update(kind="boundary_right", derivative=d_left, ok=bool(d_left >= -tol))
    elif near_edge:
        # Jump point: the point must beat its immediate neighborhood on both
        # sides; a two-sided derivative across the jump is meaningless.
        left_ok = F(t_star) >= F(t_star - h) - tol
        right_ok = F(t_star) >= F(t_star + h) - tol
        d_left = (F(t_star) - F(t_star - h)) / h
        d_right = (F(t_star + h) - F(t_star)) / h
        report.update(
            kind="piece_edge",
            derivative_left=d_left,
            derivative_right=d_right,
            ok=bool(left_ok and right_ok),
        )
    else:
        d = (F(t_star + h) - F(t_star - h)) / (2 * h)
        report.update(kind="interior", derivative=d, ok=bool(abs(d) < tol))
    return report


def verify_concavity(
    evaluator: RouteEvaluator,
    weight: float | None = None,
    context: NormalizationContext | None = None,
    points_per_piece: int = 16,
) -> dict:
    """Second-difference probe of the trade-off inside each smooth piece.

    Informational: reports the fraction of interior sample points whose
    second central difference stays at or below +1e-9 (a per-piece concavity
    witness) along with the worst offender.  The objective is only piecewise
    concave at best; jumps between pieces are excluded by construction.
    """
    params = evaluator.params
    w = params.weight if weight is None else weight
    ctx = context or build_normalization([evaluator.route], params, [evaluator])
    edges = evaluator.breakpoints()
    h = _REL_PROBE * params.trial_time
    xs = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < 8 * h:
            continue
        xs.append(np.linspace(float(a) + 2 * h, float(b) - 2 * h, points_per_piece))
    if not xs:
        return {
            "max_second_difference": -math.inf,
            "at": math.nan,
            "fraction": 1.0,
            "points": 0,
            "concave": True,
        }
    x = np.concatenate(xs)
    f0 = _route_objective_series(evaluator, x - h, ctx, w)
    f1 = _route_objective_series(evaluator, x, ctx, w)
    f2 = _route_objective_series(evaluator, x + h, ctx, w)
    second = f2 - 2 * f1 + f0
    i = int(np.argmax(second))
    fraction = float(np.mean(second <= 1e-9))
    return {
        "max_second_difference": float(second[i]),
        "at": float(x[i]),
        "fraction": fraction,
        "points": int(second.size),
        "concave": bool(fraction == 1.0),
    }
