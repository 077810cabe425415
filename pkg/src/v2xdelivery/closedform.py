"""Closed-form route expectations and the order statistics behind them.

The hop model in :mod:`v2xdelivery.model` weighs each hop independently.
This module reorganizes the same model so a whole route can be evaluated
directly:

* the end-to-end latency collapses to one term per hop
  (:func:`e2e_latency_closed`), algebraically identical to summing
  :func:`v2xdelivery.model.expected_hop_latency`;
* the end-to-end rate is decomposed over three joint outcomes, every hop
  succeeding, every hop falling back, or a mixture
  (:func:`e2e_rate_closed`), with the bottleneck rate of each outcome
  obtained from the maximum of per-hop waits: a maximum of geometric trial
  counts when all hops succeed, a maximum of exponential RSU waits when all
  hops fall back, and a capped minimum across both families for the mixture.

The module also houses :class:`RouteEvaluator`, a vectorized evaluator that
precomputes everything reusable for a fixed route so optimizers and sweeps
can evaluate thousands of window positions cheaply.  Its outputs are checked
against the direct quadrature forms in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .model import (
    Hop,
    Route,
    SystemParams,
    expected_hop_rate,
    max_trials,
    p_courier_forward,
    p_failure,
    p_success,
)

__all__ = [
    "QuadratureError",
    "HopCoefficients",
    "RateDecomposition",
    "hop_coefficients",
    "hop_latency_closed",
    "e2e_latency_closed",
    "hop_rate_closed",
    "geometric_max_pmf",
    "expected_max_trial_time",
    "exponential_max_pdf",
    "expected_max_exponential",
    "expectation_from_survival",
    "scenario_probabilities",
    "expected_rate_all_success",
    "expected_rate_all_failure",
    "expected_rate_mixture",
    "e2e_rate_closed",
    "rate_decomposition",
    "RouteEvaluator",
]

# Quadrature settings shared by every integral in this module.
_QUAD_ABS_TOL = 1e-8
_QUAD_LIMIT = 200
# Integration domains are truncated where the integrand's survival mass
# drops below this.
_SURVIVAL_CUTOFF = 1e-9
# Probability mass below which further geometric-max support is ignored.
_PMF_TAIL_CUTOFF = 1e-15


class QuadratureError(RuntimeError):
    """A numerical integral failed to reach the requested tolerance."""


@dataclass(frozen=True)
class HopCoefficients:
    """Window-independent constants of one hop, given the scenario params.

    Splitting a hop's expectations into these constants times simple window
    functions is what makes the closed forms and the optimizer cheap.

    Attributes:
        forward_prob: chance the courier already heads to the next hop.
        failure_excess: extra expected latency a fallback adds on top of the
            dwell: one more dwell plus the mean RSU wait.
        forward_rate_term: rate contribution of the forwarding branch,
            forward_prob times the cellular rate.
        success_rate_base: success-branch rate at a zero-length window with
            the candidate wait at its mean.
        success_rate_slope: per-second change of the success rate as the
            window grows (cellular service displaced by probing).
        failure_rate_base: fallback-branch rate at a zero-length window.
        failure_rate_slope: per-second change of the fallback rate as the
            window grows (V2I upload time traded for cellular service).
        arrival_rate: candidate arrival rate, kept for the window functions.
    """

    forward_prob: float
    failure_excess: float
    forward_rate_term: float
    success_rate_base: float
    success_rate_slope: float
    failure_rate_base: float
    failure_rate_slope: float
    arrival_rate: float

    def p_no_arrival(self, t: float) -> float:
        """Chance that no candidate shows up within the window."""
        return math.exp(-self.arrival_rate * t)

    def discovery_miss(self, t: float, params: SystemParams) -> float:
        """Conditional failure probability given the courier is not forwarding.

        Combines "nobody arrived" with "somebody arrived but every trial in
        the window failed".
        """
        m = max_trials(t, params.trial_time)
        beta = self.p_no_arrival(t)
        theta = (1.0 - params.decode_ok_pair) ** m
        return beta + theta - beta * theta


def hop_coefficients(hop: Hop, params: SystemParams) -> HopCoefficients:
    """Precompute the window-independent constants of one hop."""
    T = params.hop_dwell
    mean_wait = 1.0 / hop.arrival_rate
    forward_prob = p_courier_forward(hop)
    return HopCoefficients(
        forward_prob=forward_prob,
        failure_excess=T + mean_wait,
        forward_rate_term=forward_prob * params.rate_cell,
        success_rate_base=params.rate_v2v * (T - mean_wait) / T + params.rate_cell,
        success_rate_slope=-params.rate_cell / T,
        failure_rate_base=params.rate_v2i * T / (2.0 * T + mean_wait),
        failure_rate_slope=(params.rate_cell - params.rate_v2i) / (2.0 * T + mean_wait),
        arrival_rate=hop.arrival_rate,
    )


def hop_latency_closed(hop: Hop, t: float, params: SystemParams) -> float:
    """Expected hop latency in coefficient form: T plus the failure excess."""
    c = hop_coefficients(hop, params)
    z = c.discovery_miss(t, params)
    return params.hop_dwell + (1.0 - c.forward_prob) * c.failure_excess * z


def e2e_latency_closed(route: Route, t: float, params: SystemParams) -> float:
    """Route latency: k dwells plus each hop's weighted failure excess.

    Algebraically identical to summing the branch-weighted hop latencies;
    the identity is enforced to 1e-9 by the acceptance suite.
    """
    return sum(hop_latency_closed(h, t, params) for h in route.hops)


def hop_rate_closed(hop: Hop, t: float, params: SystemParams) -> float:
    """Expected hop rate in coefficient form.

    Combines the three branches through the conditional miss probability z:
    forwarding contributes its fixed term, success carries weight
    (1 - forward_prob)(1 - z) and failure (1 - forward_prob) z, each with an
    affine-in-window rate.  Matches
    :func:`v2xdelivery.model.expected_hop_rate` exactly.
    """
    c = hop_coefficients(hop, params)
    z = c.discovery_miss(t, params)
    rest = 1.0 - c.forward_prob
    succ = c.success_rate_base + c.success_rate_slope * t
    fail = c.failure_rate_base + c.failure_rate_slope * t
    return c.forward_rate_term + rest * (1.0 - z) * succ + rest * z * fail


def geometric_max_pmf(x: int | np.ndarray, n: int, p: float) -> float | np.ndarray:
    """PMF of the maximum of n iid geometric(p) trial counts.

    Args:
        x: support point(s), integers >= 1.
        n: number of independent geometric variables, >= 1.
        p: per-trial success probability in (0, 1].

    Returns:
        P(max = x) = (1 - (1-p)**x)**n - (1 - (1-p)**(x-1))**n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 1):
        raise ValueError("support starts at 1")
    q = 1.0 - p
    out = (1.0 - q**xs) ** n - (1.0 - q ** (xs - 1.0)) ** n
    return float(out) if np.isscalar(x) else out


def expected_max_trial_time(k: int, m: int, p: float, trial_time: float) -> float:
    """Expected slowest successful-trial time across k hops, truncated at m.

    Sums x * P(max = x) * trial_time for x = 1..m only; the tail beyond m
    is deliberately dropped rather than renormalized, because the joint
    success outcome already conditions every hop on finishing within the
    window's m trials.
    """
    if m < 1:
        raise ValueError("needs at least one trial in the window")
    xs = np.arange(1, m + 1, dtype=float)
    f = geometric_max_pmf(xs, k, p)
    return float(np.sum(xs * f) * trial_time)


def exponential_max_pdf(rates: Sequence[float], x: float | np.ndarray) -> float | np.ndarray:
    """Density of the maximum of independent exponential waits.

    Args:
        rates: the exponential rates, all positive.
        x: evaluation point(s) >= 0.

    Returns:
        sum_i rate_i exp(-rate_i x) prod_{j != i} (1 - exp(-rate_j x)).
    """
    mus = np.asarray(rates, dtype=float)
    if mus.ndim != 1 or len(mus) < 1 or np.any(mus <= 0):
        raise ValueError("rates must be a non-empty sequence of positives")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    terms = mus[:, None] * np.exp(-mus[:, None] * xs[None, :])
    cdfs = 1.0 - np.exp(-mus[:, None] * xs[None, :])
    out = np.zeros_like(xs)
    for i in range(len(mus)):
        others = np.prod(np.delete(cdfs, i, axis=0), axis=0) if len(mus) > 1 else 1.0
        out += terms[i] * others
    out = np.where(xs < 0, 0.0, out)
    return float(out[0]) if np.isscalar(x) else out


def _exp_max_upper(rates: Sequence[float]) -> float:
    # Union bound: survival <= sum exp(-mu x) <= k exp(-mu_min x).
    mus = np.asarray(rates, dtype=float)
    return float(math.log(len(mus) / _SURVIVAL_CUTOFF) / mus.min())


def expected_max_exponential(rates: Sequence[float]) -> float:
    """E[max] of independent exponentials by integrating x times the density.

    The domain is truncated where the survival of the maximum falls below
    1e-9; the quadrature is adaptive Gauss-Kronrod with absolute tolerance
    1e-8.
    """
    upper = _exp_max_upper(rates)
    val, err = integrate.quad(
        lambda x: x * exponential_max_pdf(rates, x),
        0.0,
        upper,
        epsabs=_QUAD_ABS_TOL,
        limit=_QUAD_LIMIT,
    )
    if err > 100 * _QUAD_ABS_TOL * max(1.0, abs(val)):
        raise QuadratureError(f"E[max exponential] error estimate {err:g} too large")
    return val


def _expected_max_exponential_exact(rates: Sequence[float]) -> float:
    # Inclusion-exclusion over subsets; exact, used by RouteEvaluator and as
    # a cross-check of the quadrature route.  Fine for the short routes here.
    mus = list(rates)
    k = len(mus)
    if k > 20:
        raise ValueError("inclusion-exclusion limited to 20 rates")
    total = 0.0
    for mask in range(1, 1 << k):
        s = 0.0
        bits = 0
        for i in range(k):
            if mask >> i & 1:
                s += mus[i]
                bits += 1
        total += (1.0 if bits % 2 else -1.0) / s
    return total


def expectation_from_survival(
    cdf: Callable[[float], float],
    upper: float,
    points: Sequence[float] | None = None,
) -> float:
    """E[X] of a non-negative variable as the integral of its survival.

    Args:
        cdf: the distribution function; must be non-decreasing with
            cdf(x) -> 1 fast enough that mass beyond ``upper`` is below 1e-9.
        upper: truncation point of the integral.
        points: optional interior breakpoints (step discontinuities) to pass
            to the quadrature.

    Returns:
        integral of (1 - cdf(x)) over [0, upper].
    """
    if upper < 0:
        raise ValueError("upper must be non-negative")
    if upper == 0:
        return 0.0
    pts = [p for p in (points or []) if 0.0 < p < upper] or None
    val, err = integrate.quad(
        lambda x: 1.0 - cdf(x),
        0.0,
        upper,
        epsabs=_QUAD_ABS_TOL,
        limit=_QUAD_LIMIT,
        points=pts,
    )
    if err > 100 * _QUAD_ABS_TOL * max(1.0, abs(val)):
        raise QuadratureError(f"survival integral error estimate {err:g} too large")
    return val


@dataclass(frozen=True)
class RateDecomposition:
    """Joint-outcome split of the end-to-end rate of one route at one window."""

    p_all_success: float
    p_all_failure: float
    p_mixture: float
    rate_all_success: float
    rate_all_failure: float
    rate_mixture: float

    @property
    def e2e_rate(self) -> float:
        return (
            self.p_all_success * self.rate_all_success
            + self.p_all_failure * self.rate_all_failure
            + self.p_mixture * self.rate_mixture
        )


def scenario_probabilities(route: Route, t: float, params: SystemParams) -> tuple[float, float, float]:
    """(all hops succeed, all hops fall back, anything else) probabilities."""
    p_as = math.prod(p_success(h, t, params) for h in route.hops)
    p_af = math.prod(p_failure(h, t, params) for h in route.hops)
    return p_as, p_af, 1.0 - p_as - p_af


def expected_rate_all_success(route: Route, t: float, params: SystemParams) -> float:
    """Bottleneck rate when every hop's discovery succeeds.

    The binding wait is the slowest hop's successful trial; its expectation
    comes from the truncated geometric-max sum.  Raises ValueError when the
    window holds no whole trial, because the all-success outcome then has
    probability zero.
    """
    m = max_trials(t, params.trial_time)
    if m < 1:
        raise ValueError("window shorter than one trial: all-success outcome impossible")
    T = params.hop_dwell
    wait = expected_max_trial_time(len(route.hops), m, params.decode_ok_pair, params.trial_time)
    return (params.rate_v2v * (T - wait) + params.rate_cell * (T - t)) / T


def expected_rate_all_failure(route: Route, t: float, params: SystemParams) -> float:
    """Bottleneck rate when every hop falls back to its roadside unit.

    The binding wait is the slowest RSU's wait for an outbound vehicle, the
    maximum of the hops' exponential waits, evaluated by quadrature.
    """
    T = params.hop_dwell
    wait = expected_max_exponential([h.arrival_rate for h in route.hops])
    return (params.rate_v2i * (T - t) + params.rate_cell * t) / (2.0 * T + wait)


def _success_support(k: int, m: int, t: float, params: SystemParams) -> tuple[np.ndarray, np.ndarray, float]:
    """Support and weights of the all-success bottleneck rate.

    Returns (rates descending in trial count, their probabilities, leftover
    mass of trial counts beyond the window).
    """
    T = params.hop_dwell
    if m < 1:
        return np.empty(0), np.empty(0), 1.0
    p = params.decode_ok_pair
    q = 1.0 - p
    # Drop support whose max-PMF tail mass is negligible.
    if q > 0.0:
        tail_cut = int(math.ceil(math.log(_PMF_TAIL_CUTOFF) / math.log(q))) + 1
        hi = min(m, max(tail_cut, 1))
    else:
        hi = 1
    xs = np.arange(1, hi + 1, dtype=float)
    f = geometric_max_pmf(xs, k, p)
    # cdf of the max at m equals (1-q^m)^k; anything beyond is "no success".
    leftover = 1.0 - (1.0 - q**m) ** k
    rates = params.rate_v2v * (T - xs * params.trial_time) / T + params.rate_cell * (T - t) / T
    return rates, f, leftover


def _failure_min_survival(route: Route, t: float, params: SystemParams) -> tuple[Callable[[float], float], float]:
    """Survival function of the bottleneck fallback rate, plus its sup.

    The slowest fallback hop has rate A / (2T + max-wait); the survival of
    that rate at x equals the CDF of the max-wait at A/x - 2T.
    """
    T = params.hop_dwell
    mus = np.array([h.arrival_rate for h in route.hops], dtype=float)
    amount = params.rate_v2i * (T - t) + params.rate_cell * t
    sup = amount / (2.0 * T)

    def survival(x: float) -> float:
        if x <= 0.0:
            return 1.0
        if x >= sup:
            return 0.0
        wait = amount / x - 2.0 * T
        return float(np.prod(1.0 - np.exp(-mus * wait)))

    return survival, sup


def expected_rate_mixture(route: Route, t: float, params: SystemParams) -> float:
    """Expected bottleneck rate when hop outcomes are mixed.

    Treats the two wait families as independent over all hops: the success
    family's bottleneck from the geometric trial maxima, the fallback
    family's from the exponential wait maxima, the whole thing capped by the
    carrying (cellular) rate contributed by forwarded hops.  Evaluates the
    expectation of min(cellular rate, success bottleneck, fallback
    bottleneck) through the survival integral.
    """
    if len(route.hops) < 2:
        raise ValueError("mixture outcome needs at least two hops")
    T = params.hop_dwell
    m = max_trials(t, params.trial_time)
    s_rates, s_probs, s_leftover = _success_support(len(route.hops), m, t, params)
    f_survival, f_sup = _failure_min_survival(route, t, params)
    cap = params.rate_cell

    def success_survival(x: float) -> float:
        # P(success bottleneck > x): mass of trial counts small enough to
        # beat x, plus the "no success within the window" leftover.
        return float(s_probs[s_rates > x].sum()) + s_leftover

    def capped_cdf(x: float) -> float:
        if x >= cap:
            return 1.0
        return 1.0 - success_survival(x) * f_survival(x)

    upper = min(cap, f_sup) if f_sup > 0 else 0.0
    pts = sorted(set(float(v) for v in s_rates if 0.0 < v < upper))
    return expectation_from_survival(capped_cdf, upper, points=pts)


def e2e_rate_closed(route: Route, t: float, params: SystemParams) -> float:
    """End-to-end rate averaged over the three joint outcomes.

    Degenerate corners are taken directly: a route whose every hop always
    forwards just carries at the cellular rate, and a single-hop route has
    no mixed outcome beyond plain forwarding.
    """
    if all(h.deg == 1 for h in route.hops):
        return params.rate_cell
    if len(route.hops) == 1:
        # One hop: the leftover probability is the courier-forward branch,
        # not a mixture, so the hop-level mean reading is the whole value.
        return expected_hop_rate(route.hops[0], t, params)
    p_as, p_af, p_mix = scenario_probabilities(route, t, params)
    total = 0.0
    if p_as > 0.0:
        total += p_as * expected_rate_all_success(route, t, params)
    if p_af > 0.0:
        total += p_af * expected_rate_all_failure(route, t, params)
    if p_mix > 0.0:
        total += p_mix * expected_rate_mixture(route, t, params)
    return total


def rate_decomposition(route: Route, t: float, params: SystemParams) -> RateDecomposition:
    """Full joint-outcome breakdown of the route rate at one window."""
    p_as, p_af, p_mix = scenario_probabilities(route, t, params)
    m = max_trials(t, params.trial_time)
    c_as = expected_rate_all_success(route, t, params) if (p_as > 0 and m >= 1) else 0.0
    c_af = expected_rate_all_failure(route, t, params) if p_af > 0 else 0.0
    if all(h.deg == 1 for h in route.hops) or len(route.hops) < 2:
        c_mix = params.rate_cell
    else:
        c_mix = expected_rate_mixture(route, t, params)
    return RateDecomposition(p_as, p_af, p_mix, c_as, c_af, c_mix)


class RouteEvaluator:
    """Vectorized evaluator of one route's closed forms over many windows.

    Precomputes everything that does not depend on the window: the hop
    coefficient arrays, the geometric-max prefix sums, the exact expected
    exponential maximum, and a spline antiderivative that turns the mixture
    integral into a table lookup.  Scalar calls are smooth to machine
    precision inside each whole-trial piece, which the optimizer's
    derivative probes rely on; agreement with the direct quadrature forms is
    pinned by tests.
    """

    #: v-grid resolution of the mixture antiderivative table.
    _TABLE_POINTS = 4001

    def __init__(self, route: Route, params: SystemParams):
        self.route = route
        self.params = params
        T = params.hop_dwell
        self.lam = np.array([h.arrival_rate for h in route.hops], dtype=float)
        self.deg = np.array([h.deg for h in route.hops], dtype=float)
        self.k = len(route.hops)
        self.fwd = 1.0 / self.deg
        self.rest = 1.0 - self.fwd
        self.mean_wait = 1.0 / self.lam
        self.failure_excess = T + self.mean_wait
        self.succ_base = params.rate_v2v * (T - self.mean_wait) / T + params.rate_cell
        self.succ_slope = np.full(self.k, -params.rate_cell / T)
        self.fail_base = params.rate_v2i * T / (2.0 * T + self.mean_wait)
        self.fail_slope = (params.rate_cell - params.rate_v2i) / (2.0 * T + self.mean_wait)
        self.trial_ok = params.decode_ok_pair
        self.trial_fail = 1.0 - self.trial_ok
        self.max_m = max_trials(T, params.trial_time)
        self.all_forward = bool(np.all(self.deg == 1))

        # Geometric-max table, truncated where the tail mass dies.
        if self.trial_fail > 0.0:
            tail = int(math.ceil(math.log(_PMF_TAIL_CUTOFF) / math.log(self.trial_fail))) + 1
            hi = max(1, min(self.max_m, tail))
        else:
            hi = 1
        xs = np.arange(1, hi + 1, dtype=float)
        pmf = geometric_max_pmf(xs, self.k, self.trial_ok) if self.max_m >= 1 else np.empty(0)
        self._pmf_support = xs[: len(pmf)]
        self._pmf = pmf
        self._pmf_cum = np.concatenate([[0.0], np.cumsum(pmf)])
        self._xf_cum = np.concatenate([[0.0], np.cumsum(self._pmf_support * pmf)])

        self.exp_max_wait = _expected_max_exponential_exact(self.lam)

        # Mixture antiderivative: J(c) = integral_0^c W(v) dv where W is the
        # fallback bottleneck's survival in normalized rate coordinates
        # v = x / sup.  The coordinate change makes W window-independent.
        v = np.linspace(0.0, 1.0, self._TABLE_POINTS)
        with np.errstate(divide="ignore", over="ignore"):
            wait = np.where(v > 0.0, 2.0 * T * (1.0 - v) / np.maximum(v, 1e-300), np.inf)
        W = np.ones_like(v)
        for mu in self.lam:
            W *= 1.0 - np.exp(-mu * wait)
        W[0] = 1.0
        self._mixture_table = CubicSpline(v, W).antiderivative()

    # -- window pieces -----------------------------------------------------

    def trial_count(self, t: float) -> int:
        return max_trials(t, self.params.trial_time)

    def breakpoints(self) -> np.ndarray:
        """Window values where a new whole trial fits; includes 0 and T."""
        T = self.params.hop_dwell
        js = np.arange(self.max_m + 1, dtype=float) * self.params.trial_time
        js = np.minimum(js, T)
        if js[-1] < T:
            js = np.append(js, T)
        return np.unique(js)

    # -- scalar closed forms ------------------------------------------------

    def _miss(self, t, m):
        beta = np.exp(-self.lam * np.asarray(t))
        theta = self.trial_fail ** np.asarray(m)
        return beta + theta - beta * theta

    def branch_probs(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-hop (forward, success, failure) probabilities at one window."""
        z = self._miss(t, self.trial_count(t))
        return self.fwd, self.rest * (1.0 - z), self.rest * z

    def hop_latencies(self, t: float) -> np.ndarray:
        z = self._miss(t, self.trial_count(t))
        return self.params.hop_dwell + self.rest * self.failure_excess * z

    def hop_rates(self, t: float) -> np.ndarray:
        z = self._miss(t, self.trial_count(t))
        succ = self.succ_base + self.succ_slope * t
        fail = self.fail_base + self.fail_slope * t
        return (
            self.fwd * self.params.rate_cell
            + self.rest * (1.0 - z) * succ
            + self.rest * z * fail
        )

    def latency(self, t: float) -> float:
        return float(np.sum(self.hop_latencies(t)))

    def rate_min_of_means(self, t: float) -> float:
        return float(np.min(self.hop_rates(t)))

    def _mixture_fast(self, t: float, m: int) -> float:
        """Table-lookup version of the mixture expectation."""
        params = self.params
        T = params.hop_dwell
        amount = params.rate_v2i * (T - t) + params.rate_cell * t
        sup = amount / (2.0 * T)
        if sup <= 0.0:
            return 0.0
        cap = params.rate_cell
        J = self._mixture_table
        mm = min(m, len(self._pmf))
        if mm >= 1:
            xs = self._pmf_support[:mm]
            pmf = self._pmf[:mm]
            s_rates = (
                params.rate_v2v * (T - xs * params.trial_time) / T
                + params.rate_cell * (T - t) / T
            )
            leftover = 1.0 - (1.0 - self.trial_fail ** m) ** self.k
            # Truncated support mass beyond mm is folded into the leftover.
            leftover += float(self._pmf_cum[-1] - self._pmf_cum[mm]) if m > mm else 0.0
            caps = np.clip(np.minimum(s_rates, cap), 0.0, sup) / sup
            val = float(np.sum(pmf * J(caps)))
        else:
            leftover = 1.0
            val = 0.0
        val += leftover * float(J(min(cap / sup, 1.0)))
        return sup * val

    def rate_closed(self, t: float) -> float:
        """Joint-outcome route rate, identical in value to e2e_rate_closed."""
        params = self.params
        if self.all_forward:
            return params.rate_cell
        if self.k == 1:
            # No mixed outcome exists with one hop; the leftover probability
            # is the courier-forward branch, so the hop mean is the value.
            return float(self.hop_rates(t)[0])
        T = params.hop_dwell
        m = self.trial_count(t)
        _, p_s, p_f = self.branch_probs(t)
        p_as = float(np.prod(p_s))
        p_af = float(np.prod(p_f))
        p_mix = 1.0 - p_as - p_af
        total = 0.0
        if p_as > 0.0 and m >= 1:
            wait = float(self._xf_cum[min(m, len(self._pmf))]) * params.trial_time
            total += p_as * (params.rate_v2v * (T - wait) + params.rate_cell * (T - t)) / T
        if p_af > 0.0:
            total += p_af * (params.rate_v2i * (T - t) + params.rate_cell * t) / (
                2.0 * T + self.exp_max_wait
            )
        if p_mix > 0.0:
            total += p_mix * self._mixture_fast(t, m)
        return total

    # -- vectorized series ---------------------------------------------------

    def series(self, ts: np.ndarray) -> dict[str, np.ndarray]:
        """Evaluate latency and both rate readings over a window grid.

        Args:
            ts: array of window values inside [0, hop_dwell].

        Returns:
            dict with route-level arrays under ``latency``, ``rate_closed``,
            ``rate_min_means`` and per-hop (k, len(ts)) arrays under
            ``hop_latency``, ``hop_rate``.
        """
        params = self.params
        T = params.hop_dwell
        ts = np.asarray(ts, dtype=float)
        ms = np.floor(ts / params.trial_time + 1e-9).astype(int)
        beta = np.exp(-np.outer(self.lam, ts))
        theta = self.trial_fail ** ms[None, :]
        z = beta + theta - beta * theta
        hop_lat = T + self.rest[:, None] * self.failure_excess[:, None] * z
        lat = np.sum(hop_lat, axis=0)
        succ = self.succ_base[:, None] + self.succ_slope[:, None] * ts[None, :]
        fail = self.fail_base[:, None] + self.fail_slope[:, None] * ts[None, :]
        hop_rates = (
            self.fwd[:, None] * params.rate_cell
            + self.rest[:, None] * (1.0 - z) * succ
            + self.rest[:, None] * z * fail
        )
        rate_mm = np.min(hop_rates, axis=0)

        if self.all_forward or self.k == 1:
            # Degenerate cases: all-forward routes always fall back to the
            # cellular rate; single-hop routes have no mixed outcome, so the
            # hop mean reading is already the joint-outcome value.
            rate_cf = np.full_like(ts, params.rate_cell) if self.all_forward else hop_rates[0].copy()
            return {
                "latency": lat,
                "rate_closed": rate_cf,
                "rate_min_means": rate_mm,
                "hop_latency": hop_lat,
                "hop_rate": hop_rates,
            }

        p_s = self.rest[:, None] * (1.0 - z)
        p_f = self.rest[:, None] * z
        p_as = np.prod(p_s, axis=0)
        p_af = np.prod(p_f, axis=0)
        p_mix = 1.0 - p_as - p_af
        # all-success term
        mm = np.minimum(ms, len(self._pmf))
        waits = self._xf_cum[mm] * params.trial_time
        c_as = (params.rate_v2v * (T - waits) + params.rate_cell * (T - ts)) / T
        c_as = np.where(ms >= 1, c_as, 0.0)
        # all-failure term
        c_af = (params.rate_v2i * (T - ts) + params.rate_cell * ts) / (2.0 * T + self.exp_max_wait)
        # mixture by m-piece, vectorized inside each piece
        c_mix = np.empty_like(ts)
        J = self._mixture_table
        cap = params.rate_cell
        amount = params.rate_v2i * (T - ts) + params.rate_cell * ts
        sup = amount / (2.0 * T)
        for m in np.unique(ms):
            idx = np.nonzero(ms == m)[0]
            s = sup[idx]
            mmi = int(min(m, len(self._pmf)))
            if mmi >= 1:
                xs = self._pmf_support[:mmi, None]
                pmf = self._pmf[:mmi, None]
                s_rates = (
                    params.rate_v2v * (T - xs * params.trial_time) / T
                    + params.rate_cell * (T - ts[idx][None, :]) / T
                )
                leftover = 1.0 - (1.0 - self.trial_fail ** int(m)) ** self.k
                caps = np.clip(np.minimum(s_rates, cap), 0.0, s[None, :]) / s[None, :]
                vals = np.sum(pmf * J(caps), axis=0)
            else:
                leftover = 1.0
                vals = np.zeros(len(idx))
            vals = vals + leftover * J(np.minimum(cap / s, 1.0))
            c_mix[idx] = s * vals
        c_mix = np.where(sup > 0.0, c_mix, 0.0)
        rate_cf = p_as * c_as + p_af * c_af + p_mix * c_mix
        return {
            "latency": lat,
            "rate_closed": rate_cf,
            "rate_min_means": rate_mm,
            "hop_latency": hop_lat,
            "hop_rate": hop_rates,
        }
