"""Monte Carlo snapshot simulator for multihop delivery routes.

Every snapshot samples each hop's branch independently: the courier keeps
the content and drives on, a discovered candidate relays it, or the hop
falls back to its roadside unit and waits for the next outbound vehicle.
Per-snapshot end-to-end latency sums the hop latencies; the end-to-end rate
is the weakest hop's realized rate.

Two discovery timings are available:

* ``physical``: a candidate arriving at time A can only start probing at
  the next whole trial boundary, so late arrivals inside the window may run
  out of trials.
* ``analytic``: the trial count is decoupled from the arrival instant,
  matching the independence assumptions of the closed forms exactly; use
  this mode to validate them.

Sampling uses counter-based Philox streams, one jump per hop, and draws a
fixed block of variates per hop regardless of branch outcomes.  Evaluations
at different windows therefore share sample paths, which makes sweep curves
smooth and paired comparisons exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np

from .model import Hop, Route, SystemParams, max_trials

__all__ = [
    "Branch",
    "HopOutcome",
    "SimConfig",
    "BackhaulConfig",
    "SimulationResult",
    "simulate_hop",
    "simulate_route",
    "sweep_windows",
    "physical_branch_probs",
    "delta_t_for_scheme",
    "DEFAULT_SCHEME_TABLE",
]


class Branch(IntEnum):
    """Outcome of one hop in one snapshot."""

    COURIER_FORWARD = 0
    DISCOVERY_SUCCESS = 1
    DISCOVERY_FAILURE = 2
    BACKHAUL_FORWARD = 3


@dataclass(frozen=True)
class HopOutcome:
    """One sampled hop traversal.

    ``discovery_time`` is the successful trial's completion time on
    discovery success, the sampled RSU wait on failure, and zero when the
    courier forwards the content itself.
    """

    branch: Branch
    latency: float
    discovery_time: float
    hop_rate: float


@dataclass(frozen=True)
class SimConfig:
    """Sampling settings.

    Attributes:
        snapshots: number of independent route snapshots.
        seed: Philox key; equal seeds give identical sample paths.
        mode: ``physical`` or ``analytic`` discovery timing.
    """

    snapshots: int = 10_000
    seed: int = 0
    mode: str = "physical"

    def __post_init__(self):
        if self.snapshots < 1:
            raise ValueError("snapshots must be positive")
        if self.mode not in ("physical", "analytic"):
            raise ValueError("mode must be 'physical' or 'analytic'")


@dataclass(frozen=True)
class BackhaulConfig:
    """Wired links between consecutive roadside units.

    A hop that falls back while its RSU has a wired link to the next hop's
    RSU skips the wait for an outbound vehicle entirely: the upload window
    still costs a dwell, the wait is zero.  The last hop has no next RSU,
    so it never uses the wire.

    Attributes:
        links: directed (rsu_a, rsu_b) pairs that are wired; None wires
            every consecutive pair of the simulated route.
        rate: wire throughput; None defaults to four times the V2I rate.
    """

    links: frozenset | None = None
    rate: float | None = None

    def wire_rate(self, params: SystemParams) -> float:
        return 4.0 * params.rate_v2i if self.rate is None else self.rate

    def linked(self, rsu_a: str, rsu_b: str) -> bool:
        return self.links is None or (rsu_a, rsu_b) in self.links


@dataclass(frozen=True)
class SimulationResult:
    """Aggregates of one simulated window position.

    ``branch_counts`` has one row per hop with columns indexed by
    :class:`Branch`.  ``mean_rate_mean_subst`` replaces each realized wait
    by its mean before taking the per-snapshot bottleneck, mirroring the
    per-hop closed forms; the gap to ``mean_rate`` is the cost of that
    substitution.
    """

    windows: tuple[float, ...]
    snapshots: int
    mode: str
    mean_latency: float
    se_latency: float
    mean_rate: float
    se_rate: float
    mean_rate_mean_subst: float
    se_rate_mean_subst: float
    branch_counts: np.ndarray
    latencies: np.ndarray = field(repr=False)
    rates: np.ndarray = field(repr=False)

    @property
    def t(self) -> float:
        """Shared window when every hop uses the same one."""
        return self.windows[0]

    @property
    def branch_fractions(self) -> np.ndarray:
        """Per-hop branch frequencies, rows summing to one."""
        return self.branch_counts / self.snapshots


def _hop_stream(seed: int, hop_index: int) -> np.random.Generator:
    # One Philox jump (2**128 counter steps) per hop keeps streams disjoint
    # for any realistic draw volume.
    return np.random.Generator(np.random.Philox(key=seed).jumped(hop_index))


def _draw_hop(gen: np.random.Generator, hop: Hop, params: SystemParams, n: int):
    """Fixed draw block of one hop: direction, arrival, trials, RSU wait."""
    u = gen.random(n)
    arrival = gen.exponential(scale=1.0 / hop.arrival_rate, size=n)
    trials = gen.geometric(p=params.decode_ok_pair, size=n)
    rsu_wait = gen.exponential(scale=1.0 / hop.arrival_rate, size=n)
    return u, arrival, trials, rsu_wait


def _evaluate_hop(
    draws,
    hop: Hop,
    t: float,
    params: SystemParams,
    mode: str,
    wired: bool,
    wire_rate: float,
):
    """Branch index, latency, realized rate, mean-substituted rate arrays."""
    u, arrival, trials, rsu_wait = draws
    T = params.hop_dwell
    dt = params.trial_time
    m = max_trials(t, dt)

    forward = u < 1.0 / hop.deg
    if mode == "physical":
        slot = np.ceil(arrival / dt)
        done = slot + trials - 1
        success = ~forward & (arrival <= t) & (done <= m)
        tau = done * dt
    else:
        success = ~forward & (arrival <= t) & (trials <= m)
        tau = trials * dt
    failure = ~forward & ~success

    branch = np.full(len(u), int(Branch.DISCOVERY_FAILURE), dtype=np.int8)
    branch[forward] = int(Branch.COURIER_FORWARD)
    branch[success] = int(Branch.DISCOVERY_SUCCESS)

    latency = np.full(len(u), T)
    latency[failure] = 2.0 * T + rsu_wait[failure]

    rate = np.full(len(u), params.rate_cell)
    succ_rate = (params.rate_v2v * (T - tau) + params.rate_cell * (T - t)) / T
    rate[success] = succ_rate[success]
    fail_rate = (params.rate_v2i * (T - t) + params.rate_cell * t) / (2.0 * T + rsu_wait)
    rate[failure] = fail_rate[failure]

    mean_wait = 1.0 / hop.arrival_rate
    rate_ms = np.full(len(u), params.rate_cell)
    rate_ms[success] = params.rate_v2v * (T - mean_wait) / T + params.rate_cell * (T - t) / T
    rate_ms[failure] = (params.rate_v2i * (T - t) + params.rate_cell * t) / (2.0 * T + mean_wait)

    if wired:
        branch[failure] = int(Branch.BACKHAUL_FORWARD)
        latency[failure] = 2.0 * T
        wired_rate = (min(params.rate_v2i, wire_rate) * (T - t) + params.rate_cell * t) / (2.0 * T)
        rate[failure] = wired_rate
        rate_ms[failure] = wired_rate

    return branch, latency, rate, rate_ms


def simulate_hop(
    hop: Hop,
    t: float,
    params: SystemParams,
    rng: np.random.Generator,
) -> HopOutcome:
    """Sample a single hop traversal under physical discovery timing.

    Args:
        hop: the hop to traverse.
        t: discovery window in [0, hop_dwell].
        params: scenario parameters.
        rng: any numpy generator; one fixed draw block is consumed.

    Returns:
        The sampled branch with its realized latency, wait, and rate.
    """
    T = params.hop_dwell
    if not 0.0 <= t <= T * (1 + 1e-12):
        raise ValueError("window must lie within the hop dwell")
    t = min(t, T)
    draws = _draw_hop(rng, hop, params, 1)
    branch, latency, rate, _ = _evaluate_hop(draws, hop, t, params, "physical", False, 0.0)
    b = Branch(int(branch[0]))
    if b is Branch.COURIER_FORWARD:
        disc = 0.0
    elif b is Branch.DISCOVERY_SUCCESS:
        _, arrival, trials, _ = draws
        slot = math.ceil(float(arrival[0]) / params.trial_time)
        disc = (slot + float(trials[0]) - 1.0) * params.trial_time
    else:
        disc = float(draws[3][0])
    return HopOutcome(branch=b, latency=float(latency[0]), discovery_time=disc, hop_rate=float(rate[0]))


def _as_window_vector(t, k: int, T: float) -> np.ndarray:
    ts = np.asarray(t, dtype=float)
    if ts.ndim == 0:
        ts = np.full(k, float(ts))
    if ts.shape != (k,):
        raise ValueError(f"expected a scalar window or one per hop ({k}), got shape {ts.shape}")
    if np.any(ts < 0) or np.any(ts > T * (1 + 1e-12)):
        raise ValueError("windows must lie within the hop dwell")
    return np.minimum(ts, T)


def _summary(
    windows: np.ndarray,
    config: SimConfig,
    lat_sum: np.ndarray,
    rate_min: np.ndarray,
    rate_ms_min: np.ndarray,
    counts: np.ndarray,
) -> SimulationResult:
    n = config.snapshots
    se = lambda x: float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SimulationResult(
        windows=tuple(float(w) for w in windows),
        snapshots=n,
        mode=config.mode,
        mean_latency=float(lat_sum.mean()),
        se_latency=se(lat_sum),
        mean_rate=float(rate_min.mean()),
        se_rate=se(rate_min),
        mean_rate_mean_subst=float(rate_ms_min.mean()),
        se_rate_mean_subst=se(rate_ms_min),
        branch_counts=counts,
        latencies=lat_sum,
        rates=rate_min,
    )


def _simulate_windows(
    route: Route,
    window_rows: Sequence[np.ndarray],
    params: SystemParams,
    config: SimConfig,
    backhaul: BackhaulConfig | None,
) -> list[SimulationResult]:
    n = config.snapshots
    k = len(route.hops)
    nt = len(window_rows)
    lat_sum = np.zeros((nt, n))
    rate_min = np.full((nt, n), np.inf)
    rate_ms_min = np.full((nt, n), np.inf)
    counts = np.zeros((nt, k, len(Branch)), dtype=np.int64)
    wire = backhaul.wire_rate(params) if backhaul is not None else 0.0
    for h, hop in enumerate(route.hops):
        draws = _draw_hop(_hop_stream(config.seed, h), hop, params, n)
        wired = (
            backhaul is not None
            and h + 1 < k
            and backhaul.linked(hop.rsu_id, route.hops[h + 1].rsu_id)
        )
        for i, row in enumerate(window_rows):
            branch, latency, rate, rate_ms = _evaluate_hop(
                draws, hop, float(row[h]), params, config.mode, wired, wire
            )
            lat_sum[i] += latency
            np.minimum(rate_min[i], rate, out=rate_min[i])
            np.minimum(rate_ms_min[i], rate_ms, out=rate_ms_min[i])
            counts[i, h] = np.bincount(branch, minlength=len(Branch))
    return [
        _summary(row, config, lat_sum[i], rate_min[i], rate_ms_min[i], counts[i])
        for i, row in enumerate(window_rows)
    ]


def simulate_route(
    route: Route,
    t: float | Sequence[float],
    params: SystemParams,
    config: SimConfig | None = None,
    backhaul: BackhaulConfig | None = None,
) -> SimulationResult:
    """Simulate one route at one window assignment.

    Args:
        route: the hops to traverse.
        t: discovery window shared by every hop, or one window per hop.
        params: scenario parameters.
        config: sampling settings; defaults to 10k snapshots, seed 0,
            physical timing.
        backhaul: optional wired fallback between consecutive RSUs.

    Returns:
        Aggregated :class:`SimulationResult` for the window assignment.
    """
    cfg = config or SimConfig()
    row = _as_window_vector(t, len(route.hops), params.hop_dwell)
    return _simulate_windows(route, [row], params, cfg, backhaul)[0]


def sweep_windows(
    route: Route,
    ts: Sequence[float | Sequence[float]],
    params: SystemParams,
    config: SimConfig | None = None,
    backhaul: BackhaulConfig | None = None,
) -> list[SimulationResult]:
    """Simulate one route over a grid of window assignments.

    The same snapshots are reused for every grid entry, so differences
    between entries carry no resampling noise.
    """
    cfg = config or SimConfig()
    rows = [_as_window_vector(t, len(route.hops), params.hop_dwell) for t in ts]
    return _simulate_windows(route, rows, params, cfg, backhaul)


def physical_branch_probs(hop: Hop, t: float, params: SystemParams) -> tuple[float, float, float]:
    """Exact branch probabilities under physical discovery timing.

    A candidate arriving in trial slot a (the interval ((a-1) dt, a dt])
    first probes at slot a and succeeds within the window iff its geometric
    trial count fits into the m - a + 1 remaining slots.

    Returns:
        (forward, success, failure) probabilities.
    """
    T = params.hop_dwell
    if not 0.0 <= t <= T * (1 + 1e-12):
        raise ValueError("window must lie within the hop dwell")
    t = min(t, T)
    dt = params.trial_time
    m = max_trials(t, dt)
    lam = hop.arrival_rate
    q = 1.0 - params.decode_ok_pair
    p_fwd = 1.0 / hop.deg
    rest = 1.0 - p_fwd
    p_succ_given = 0.0
    for a in range(1, m + 1):
        slot_mass = math.exp(-lam * (a - 1) * dt) - math.exp(-lam * a * dt)
        p_succ_given += slot_mass * (1.0 - q ** (m - a + 1))
    p_succ = rest * p_succ_given
    p_fail = rest - p_succ
    return p_fwd, p_succ, p_fail


#: Trial duration per discovery scheduling scheme, as (base, per_beam)
#: pairs: duration = base * (1 + per_beam * beams).  Synthetic defaults; the
#: table is meant to be overridden from measured hardware numbers.
DEFAULT_SCHEME_TABLE: Mapping[str, tuple[float, float]] = {
    "TD": (0.1, 0.0),
    "SD": (0.1, 0.05),
    "FD": (0.1, 0.1),
    "CD": (0.1, 0.1),
}


def delta_t_for_scheme(
    scheme: str,
    beams: int = 1,
    table: Mapping[str, tuple[float, float]] | None = None,
) -> float:
    """Per-trial duration of a discovery scheduling scheme.

    Args:
        scheme: one of the table's schemes (``TD``, ``SD``, ``FD``, ``CD``
            by default), case-insensitive.
        beams: antenna beam count, a positive integer; ``TD`` sweeps beams
            one at a time and therefore accepts only ``beams=1``.
        table: optional scheme table overriding the synthetic defaults.

    Returns:
        The trial duration in seconds.

    Warns:
        UserWarning: when the configured table breaks the expected ordering
            (TD no longer minimal, or FD and CD diverging).
    """
    if not isinstance(beams, int) or isinstance(beams, bool) or beams < 1:
        raise ValueError("beams must be a positive integer")
    tbl = DEFAULT_SCHEME_TABLE if table is None else table
    s = scheme.upper()
    if s not in tbl:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {sorted(tbl)}")
    if s == "TD" and beams != 1:
        raise ValueError("TD probes a single beam; beams must be 1")

    def duration(name: str, m: int) -> float:
        base, per_beam = tbl[name]
        return base * (1.0 + per_beam * m)

    value = duration(s, beams)
    if "TD" in tbl and value < duration("TD", 1) - 1e-15:
        warnings.warn(
            f"scheme table gives {s}@{beams} a shorter trial than TD@1; "
            "single-beam scanning is expected to be the fastest",
            UserWarning,
            stacklevel=2,
        )
    if "FD" in tbl and "CD" in tbl and not math.isclose(
        duration("FD", beams), duration("CD", beams), rel_tol=1e-12
    ):
        warnings.warn(
            f"scheme table decouples FD and CD at beams={beams}; "
            "they are expected to pair",
            UserWarning,
            stacklevel=2,
        )
    return value
