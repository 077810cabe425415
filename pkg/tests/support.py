"""Helpers shared across test modules."""

from __future__ import annotations

import numpy as np

from v2xdelivery import Hop, Route, SystemParams


def window_grid(params: SystemParams, n: int) -> np.ndarray:
    """n-point window grid over [0, T] containing every whole-trial edge.

    The closed forms jump wherever one more trial fits into the window, so
    identity and monotonicity checks must sample those points exactly.
    """
    T = params.hop_dwell
    breaks = np.unique(np.minimum(np.arange(0.0, T + params.trial_time, params.trial_time), T))
    if len(breaks) > n:
        raise ValueError(f"{n} points cannot contain {len(breaks)} breakpoints")
    fill = np.linspace(0.0, T, n - len(breaks) + 2)[1:-1]
    grid = np.union1d(breaks, fill)
    while len(grid) < n:
        mids = 0.5 * (grid[:-1] + grid[1:])
        grid = np.union1d(grid, mids[: n - len(grid)])
    assert len(grid) == n and grid[0] == 0.0 and grid[-1] == T
    return grid


def make_route(rng: np.random.Generator, k: int | None = None, degs=(2, 3)) -> Route:
    """Random route with arrival rates in the stock interval."""
    k = int(rng.integers(2, 7)) if k is None else k
    hops = tuple(
        Hop(
            arrival_rate=float(rng.uniform(0.05, 0.3)),
            deg=int(rng.choice(degs)),
            rsu_id=f"r{i}",
        )
        for i in range(k)
    )
    nodes = tuple(str(i) for i in range(k + 1))
    return Route(hops=hops, source=nodes[0], destination=nodes[-1], nodes=nodes)
