"""Tests of the coefficient reformulations, order statistics, and route rates.

Every derived quantity is checked against an independent oracle: a frozen
hand computation, a sampling experiment, or a second implementation route
(quadrature vs. inclusion-exclusion, scalar vs. vectorized evaluator).
"""

import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from support import make_route, window_grid
from v2xdelivery import (
    Hop,
    QuadratureError,
    Route,
    RouteEvaluator,
    SystemParams,
    e2e_latency_closed,
    e2e_rate_closed,
    expectation_from_survival,
    expected_e2e_latency,
    expected_hop_latency,
    expected_hop_rate,
    expected_max_exponential,
    expected_max_trial_time,
    expected_rate_all_failure,
    expected_rate_all_success,
    expected_rate_mixture,
    exponential_max_pdf,
    geometric_max_pmf,
    hop_latency_closed,
    hop_rate_closed,
    max_trials,
    rate_decomposition,
    scenario_probabilities,
)
from v2xdelivery.closedform import _expected_max_exponential_exact


class TestHopReformulation:
    """The coefficient split must equal the direct branch-weighted forms."""

    def test_latency_identity(self, coarse_params):
        rng = np.random.default_rng(3)
        for _ in range(10):
            hop = Hop(float(rng.uniform(0.05, 0.3)), int(rng.choice([1, 2, 3])))
            for t in window_grid(coarse_params, 100):
                assert hop_latency_closed(hop, t, coarse_params) == pytest.approx(
                    expected_hop_latency(hop, t, coarse_params), abs=1e-12
                )

    def test_rate_identity(self, coarse_params):
        rng = np.random.default_rng(4)
        for _ in range(10):
            hop = Hop(float(rng.uniform(0.05, 0.3)), int(rng.choice([1, 2, 3])))
            for t in window_grid(coarse_params, 100):
                assert hop_rate_closed(hop, t, coarse_params) == pytest.approx(
                    expected_hop_rate(hop, t, coarse_params), abs=1e-12
                )


class TestE2ELatencyClosed:
    def test_matches_hop_sum_on_breakpoint_grid(self, coarse_params):
        rng = np.random.default_rng(11)
        grid = window_grid(coarse_params, 100)
        for _ in range(8):
            route = make_route(rng)
            for t in grid:
                assert abs(
                    e2e_latency_closed(route, t, coarse_params)
                    - expected_e2e_latency(route, t, coarse_params)
                ) <= 1e-9

    def test_always_forwarding_route_costs_exactly_the_dwells(self, params):
        hops = tuple(Hop(0.1, 1, rsu_id=f"d{i}") for i in range(4))
        route = Route(hops=hops)
        for t in (0.0, 7.7, 20.0):
            assert e2e_latency_closed(route, t, params) == 4 * params.hop_dwell

    def test_zero_window_closed_form(self, params):
        # At t=0 every non-forwarding hop falls back with certainty.
        rng = np.random.default_rng(12)
        route = make_route(rng, k=3)
        expected = sum(
            params.hop_dwell
            + (1.0 - 1.0 / h.deg) * (params.hop_dwell + 1.0 / h.arrival_rate)
            for h in route.hops
        )
        assert e2e_latency_closed(route, 0.0, params) == pytest.approx(expected, abs=1e-12)


class TestGeometricMaxPmf:
    def test_single_variable_reduces_to_geometric(self):
        assert geometric_max_pmf(3, 1, 0.5) == pytest.approx(0.125, abs=0.0)

    @pytest.mark.parametrize("p", [0.2, 0.5, 0.998001])
    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_pmf_sums_to_one(self, p, n):
        q = 1.0 - p
        hi = 1 if q == 0.0 else int(math.ceil(math.log(1e-12) / math.log(q))) + 1
        xs = np.arange(1, hi + 1)
        assert geometric_max_pmf(xs, n, p).sum() == pytest.approx(1.0, abs=1e-9)

    def test_matches_empirical_pmf_of_sampled_maxima(self):
        n, p, draws = 3, 0.36, 1_000_000
        rng = np.random.default_rng(2024)
        maxima = rng.geometric(p, size=(draws, n)).max(axis=1)
        for x in range(1, 9):
            freq = float(np.mean(maxima == x))
            prob = float(geometric_max_pmf(x, n, p))
            se = math.sqrt(prob * (1.0 - prob) / draws)
            assert abs(freq - prob) <= 3.0 * se + 1e-12


class TestExpectedMaxTrialTime:
    def test_error_free_trials_always_finish_first_round(self):
        # With certain decoding the maximum trial count is 1 for any k.
        assert expected_max_trial_time(1, 10, 1.0, 0.5) == pytest.approx(0.5)
        assert expected_max_trial_time(2, 10, 1.0, 0.5) == pytest.approx(0.5)

    def test_truncated_sum_matches_hand_computation(self):
        # k=2, p=0.64, m=2: f(1) = 0.64^2, f(2) = (1-0.36^2)^2 - 0.64^2.
        f1 = 0.64**2
        f2 = (1.0 - 0.36**2) ** 2 - f1
        expected = (1.0 * f1 + 2.0 * f2) * 0.5
        assert expected_max_trial_time(2, 2, 0.64, 0.5) == pytest.approx(expected, abs=1e-15)

    def test_truncation_is_not_renormalized(self):
        # The truncated mean must stay below the full mean.
        full = expected_max_trial_time(3, 10_000, 0.64, 0.5)
        cut = expected_max_trial_time(3, 3, 0.64, 0.5)
        assert cut < full

    def test_matches_sampled_windowed_maxima(self):
        # Draws beyond the window contribute zero, mirroring the truncation.
        k, p, dt, m, draws = 3, 0.64, 0.5, 20, 1_000_000
        rng = np.random.default_rng(99)
        maxima = rng.geometric(p, size=(draws, k)).max(axis=1)
        vals = np.where(maxima <= m, maxima * dt, 0.0)
        se = vals.std(ddof=1) / math.sqrt(draws)
        assert abs(vals.mean() - expected_max_trial_time(k, m, p, dt)) <= 3.0 * se


class TestExponentialMax:
    def test_single_rate_is_plain_exponential_density(self):
        for x in (0.0, 0.3, 2.0, 11.0):
            assert exponential_max_pdf([0.2], x) == pytest.approx(0.2 * math.exp(-0.2 * x))

    def test_density_normalizes_over_two_orders_of_magnitude(self):
        rates = [0.05, 0.1, 0.3, 1.0, 2.0, 5.0]
        val, err = integrate.quad(lambda x: exponential_max_pdf(rates, x), 0.0, 400.0, limit=200)
        assert err < 1e-8
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_iid_mean_matches_harmonic_identity(self):
        expected = (1.0 + 0.5 + 1.0 / 3.0) / 0.1
        assert expected_max_exponential([0.1, 0.1, 0.1]) == pytest.approx(
            expected, rel=1e-6
        )

    def test_dominates_each_individual_mean(self):
        rates = [0.05, 0.15, 0.3]
        assert expected_max_exponential(rates) >= 1.0 / min(rates)

    def test_quadrature_agrees_with_inclusion_exclusion(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            rates = list(rng.uniform(0.05, 0.5, size=int(rng.integers(1, 7))))
            quad_val = expected_max_exponential(rates)
            exact = _expected_max_exponential_exact(rates)
            assert quad_val == pytest.approx(exact, rel=1e-6)

    def test_matches_sampled_maxima(self):
        rates = np.array([0.05, 0.15, 0.3])
        draws = 1_000_000
        rng = np.random.default_rng(77)
        maxima = (rng.exponential(1.0, size=(draws, 3)) / rates).max(axis=1)
        se = maxima.std(ddof=1) / math.sqrt(draws)
        assert abs(maxima.mean() - expected_max_exponential(rates)) <= 3.0 * se


class TestExpectationFromSurvival:
    def test_exponential_mean(self):
        assert expectation_from_survival(
            lambda x: 1.0 - math.exp(-0.2 * x), math.log(1e9) / 0.2
        ) == pytest.approx(5.0, abs=1e-8)

    def test_degenerate_step(self):
        c = 3.7
        cdf = lambda x: 0.0 if x < c else 1.0
        assert expectation_from_survival(cdf, 10.0, points=[c]) == pytest.approx(c, abs=1e-8)

    def test_max_of_two_exponentials(self):
        lam = 0.1
        cdf = lambda x: (1.0 - math.exp(-lam * x)) ** 2
        upper = math.log(2e9) / lam
        assert expectation_from_survival(cdf, upper) == pytest.approx(15.0, abs=1e-6)

    def test_unresolvable_integrand_raises(self):
        cdf = lambda x: 0.5 + 0.5 * math.sin(4.0e5 * x * x)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(QuadratureError):
                expectation_from_survival(cdf, 50.0)


class TestScenarioProbabilities:
    def test_sum_to_one_and_match_hop_products(self, params, grid_routes):
        for route in grid_routes[:4]:
            for t in (0.0, 3.3, 8.0, 20.0):
                p_as, p_af, p_mix = scenario_probabilities(route, t, params)
                assert p_as + p_af + p_mix == pytest.approx(1.0, abs=1e-12)
                from v2xdelivery import p_failure, p_success

                assert p_as == pytest.approx(
                    math.prod(p_success(h, t, params) for h in route.hops), abs=1e-12
                )
                assert p_af == pytest.approx(
                    math.prod(p_failure(h, t, params) for h in route.hops), abs=1e-12
                )

    def test_forwarding_hop_forces_the_mixed_outcome(self, params):
        route = Route(hops=(Hop(0.1, 1, rsu_id="a"), Hop(0.1, 3, rsu_id="b")))
        p_as, p_af, p_mix = scenario_probabilities(route, 8.0, params)
        assert p_as == 0.0 and p_af == 0.0 and p_mix == 1.0

    def test_zero_window_kills_all_success(self, params):
        rng = np.random.default_rng(21)
        route = make_route(rng, k=3)
        p_as, p_af, _ = scenario_probabilities(route, 0.0, params)
        assert p_as == 0.0
        assert p_af == pytest.approx(
            math.prod(1.0 - 1.0 / h.deg for h in route.hops), abs=1e-12
        )


class TestAllSuccessRate:
    def test_window_without_a_whole_trial_rejected(self, params):
        rng = np.random.default_rng(31)
        with pytest.raises(ValueError):
            expected_rate_all_success(make_route(rng, k=2), 0.05, params)

    def test_single_hop_error_free(self):
        params = SystemParams(decode_error=0.0)
        route = Route(hops=(Hop(0.1, 2, rsu_id="a"),))
        t, T, dt = 10.0, params.hop_dwell, params.trial_time
        expected = (params.rate_v2v * (T - dt) + params.rate_cell * (T - t)) / T
        assert expected_rate_all_success(route, t, params) == pytest.approx(expected, abs=1e-12)

    def test_two_hops_error_free_match_single_hop(self):
        params = SystemParams(decode_error=0.0)
        one = Route(hops=(Hop(0.1, 2, rsu_id="a"),))
        two = Route(hops=(Hop(0.1, 2, rsu_id="a"), Hop(0.2, 3, rsu_id="b")))
        assert expected_rate_all_success(two, 10.0, params) == pytest.approx(
            expected_rate_all_success(one, 10.0, params), abs=1e-12
        )

    def test_non_increasing_in_hop_count(self, params):
        t = 8.0
        vals = []
        for k in range(1, 7):
            hops = tuple(Hop(0.1, 2, rsu_id=f"h{i}") for i in range(k))
            vals.append(expected_rate_all_success(Route(hops=hops), t, params))
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestAllFailureRate:
    def test_single_hop_closed_value(self, params):
        # Zero window: full dwell for the upload, mean wait 10 s.
        route = Route(hops=(Hop(0.1, 2, rsu_id="a"),))
        assert expected_rate_all_failure(route, 0.0, params) == pytest.approx(0.6, rel=1e-6)

    def test_two_iid_hops_use_the_harmonic_max_wait(self, params):
        route = Route(hops=(Hop(0.1, 2, rsu_id="a"), Hop(0.1, 2, rsu_id="b")))
        t = 5.0
        T = params.hop_dwell
        expected = (params.rate_v2i * (T - t) + params.rate_cell * t) / (2.0 * T + 15.0)
        assert expected_rate_all_failure(route, t, params) == pytest.approx(expected, rel=1e-7)

    def test_matches_sampled_maxima(self, params):
        lams = np.array([0.05, 0.15, 0.3])
        hops = tuple(Hop(float(l), 2, rsu_id=f"h{i}") for i, l in enumerate(lams))
        route = Route(hops=hops)
        t, T = 8.0, params.hop_dwell
        draws = 1_000_000
        rng = np.random.default_rng(55)
        maxima = (rng.exponential(1.0, size=(draws, 3)) / lams).max(axis=1)
        amount = params.rate_v2i * (T - t) + params.rate_cell * t
        denom_mean = 2.0 * T + maxima.mean()
        se = maxima.std(ddof=1) / math.sqrt(draws)
        lo = amount / (denom_mean + 3.0 * se)
        hi = amount / (denom_mean - 3.0 * se)
        assert lo <= expected_rate_all_failure(route, t, params) <= hi


class TestMixtureRate:
    def test_single_hop_rejected(self, params):
        with pytest.raises(ValueError):
            expected_rate_mixture(Route(hops=(Hop(0.1, 2, rsu_id="a"),)), 8.0, params)

    def test_zero_cellular_rate_gives_zero(self):
        params = SystemParams(rate_cell=0.0)
        route = Route(hops=(Hop(0.1, 2, rsu_id="a"), Hop(0.2, 3, rsu_id="b")))
        assert expected_rate_mixture(route, 8.0, params) == pytest.approx(0.0, abs=1e-12)

    def test_generous_cap_leaves_the_bottlenecks_in_charge(self):
        # With a huge carrying rate the value is E[min of the two families].
        params = SystemParams(rate_cell=50.0)
        route = Route(hops=(Hop(0.1, 2, rsu_id="a"), Hop(0.2, 3, rsu_id="b")))
        val = expected_rate_mixture(route, 8.0, params)
        assert 0.0 < val < 10.0  # far below the cap: the families bind

    @pytest.mark.parametrize("t", [1.0, 8.0])
    def test_matches_direct_sampling(self, params, grid_routes, t):
        route = Route(hops=grid_routes[0].hops[:2])
        T = params.hop_dwell
        m = max_trials(t, params.trial_time)
        k = len(route.hops)
        lams = np.array([h.arrival_rate for h in route.hops])
        draws = 1_000_000
        rng = np.random.default_rng(404)
        xi = rng.geometric(params.decode_ok_pair, size=(draws, k)).max(axis=1)
        s_rate = np.where(
            xi <= m,
            params.rate_v2v * (T - xi * params.trial_time) / T
            + params.rate_cell * (T - t) / T,
            np.inf,
        )
        eta = (rng.exponential(1.0, size=(draws, k)) / lams).max(axis=1)
        amount = params.rate_v2i * (T - t) + params.rate_cell * t
        f_rate = amount / (2.0 * T + eta)
        vals = np.minimum(np.minimum(s_rate, f_rate), params.rate_cell)
        se = vals.std(ddof=1) / math.sqrt(draws)
        assert abs(vals.mean() - expected_rate_mixture(route, t, params)) <= 3.0 * se


class TestE2ERateClosed:
    def test_always_forwarding_route_carries_at_cellular_rate(self, params):
        hops = tuple(Hop(0.1, 1, rsu_id=f"d{i}") for i in range(3))
        route = Route(hops=hops)
        for t in (0.0, 8.0, 20.0):
            assert e2e_rate_closed(route, t, params) == params.rate_cell

    def test_single_hop_equals_the_hop_mean(self, params):
        hop = Hop(0.12, 3, rsu_id="solo")
        route = Route(hops=(hop,))
        for t in (0.0, 2.5, 10.0, 20.0):
            assert e2e_rate_closed(route, t, params) == pytest.approx(
                expected_hop_rate(hop, t, params), abs=1e-12
            )

    def test_zero_window_has_no_all_success_scenario(self, params):
        route = make_route(np.random.default_rng(71), k=3)
        dec = rate_decomposition(route, 0.0, params)
        assert dec.p_all_success == 0.0
        # Only the fallback and mixed terms remain.
        assert dec.p_all_failure * dec.rate_all_failure > 0.0
        assert e2e_rate_closed(route, 0.0, params) == pytest.approx(
            dec.p_all_failure * dec.rate_all_failure + dec.p_mixture * dec.rate_mixture,
            rel=1e-9,
        )

    def test_decomposition_reassembles_the_rate(self, params, grid_routes):
        for route in grid_routes[:3]:
            for t in (0.5, 8.0, 20.0):
                dec = rate_decomposition(route, t, params)
                assert dec.p_all_success + dec.p_all_failure + dec.p_mixture == pytest.approx(
                    1.0, abs=1e-12
                )
                assert e2e_rate_closed(route, t, params) == pytest.approx(
                    dec.e2e_rate, rel=1e-9
                )


class TestRouteEvaluator:
    def test_breakpoints_cover_the_window_range(self, coarse_params):
        rng = np.random.default_rng(61)
        ev = RouteEvaluator(make_route(rng), coarse_params)
        edges = ev.breakpoints()
        assert edges[0] == 0.0 and edges[-1] == coarse_params.hop_dwell
        assert np.all(np.diff(edges) > 0)

    def test_scalar_calls_match_canonical_functions(self, params, grid_routes):
        for route in grid_routes[:3]:
            ev = RouteEvaluator(route, params)
            for t in (0.0, 0.05, 3.7, 8.0, 19.99, 20.0):
                assert ev.latency(t) == pytest.approx(
                    expected_e2e_latency(route, t, params), abs=1e-9
                )
                assert ev.rate_closed(t) == pytest.approx(
                    e2e_rate_closed(route, t, params), rel=1e-9, abs=1e-12
                )

    def test_series_matches_scalar_calls(self, params):
        rng = np.random.default_rng(62)
        route = make_route(rng)
        ev = RouteEvaluator(route, params)
        # Mix of arbitrary points and exact whole-trial edges.
        ts = np.union1d(np.linspace(0.0, 20.0, 111), np.arange(0.0, 20.5, 2.5))
        out = ev.series(ts)
        for i in (0, 17, 63, len(ts) - 1):
            t = float(ts[i])
            assert out["latency"][i] == pytest.approx(ev.latency(t), abs=1e-12)
            assert out["rate_closed"][i] == pytest.approx(ev.rate_closed(t), abs=1e-10)
            assert out["rate_min_means"][i] == pytest.approx(ev.rate_min_of_means(t), abs=1e-12)
            np.testing.assert_allclose(out["hop_latency"][:, i], ev.hop_latencies(t), atol=1e-12)
            np.testing.assert_allclose(out["hop_rate"][:, i], ev.hop_rates(t), atol=1e-12)

    def test_hop_readings_match_the_hop_model(self, params, grid_routes):
        route = grid_routes[0]
        ev = RouteEvaluator(route, params)
        for t in (0.0, 8.0, 20.0):
            expected_lat = [expected_hop_latency(h, t, params) for h in route.hops]
            expected_rate = [expected_hop_rate(h, t, params) for h in route.hops]
            np.testing.assert_allclose(ev.hop_latencies(t), expected_lat, atol=1e-12)
            np.testing.assert_allclose(ev.hop_rates(t), expected_rate, atol=1e-12)


def test_joint_rate_sits_below_the_bottleneck_of_means(params, grid_routes):
    """The joint-outcome average weighs in slow scenarios that the per-hop
    bottleneck reading ignores, so it reads systematically lower."""
    route = grid_routes[0]
    for t in (4.0, 8.0, 16.0):
        assert e2e_rate_closed(route, t, params) < min(
            expected_hop_rate(h, t, params) for h in route.hops
        )
