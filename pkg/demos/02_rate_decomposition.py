"""Decompose the end-to-end rate instead of taking the hop-wise minimum.

Averaging the bottleneck per hop and then taking the minimum of those
means underestimates nothing and overestimates nothing consistently; the
closed form instead conditions on how the whole route went.  All hops
succeeding, all hops failing, and everything in between get their own
expected bottleneck, built from the order statistics of the slowest hop.
"""

import numpy as np
from scipy import integrate

from v2xdelivery import (
    Hop,
    Route,
    SystemParams,
    e2e_rate_closed,
    e2e_rate_min_of_means,
    expected_max_exponential,
    expected_max_trial_time,
    exponential_max_pdf,
    geometric_max_pmf,
    rate_decomposition,
    scenario_probabilities,
)

params = SystemParams()
route = Route(
    hops=(
        Hop(arrival_rate=0.15, deg=3, rsu_id="A"),
        Hop(arrival_rate=0.25, deg=4, rsu_id="B"),
        Hop(arrival_rate=0.10, deg=2, rsu_id="C"),
    )
)

print("== scenario weights ==")
print("%8s %12s %12s %12s" % ("t [s]", "all succeed", "all fail", "mixed"))
for t in (0.5, 2.0, 8.0):
    p_as, p_af, p_mix = scenario_probabilities(route, t, params)
    print("%8.1f %12.6f %12.6f %12.6f  (sum %.12f)" % (t, p_as, p_af, p_mix, p_as + p_af + p_mix))

print("\n== conditional rates at t = 8 ==")
dec = rate_decomposition(route, 8.0, params)
print("  all-success rate  %.6f  (weight %.6f)" % (dec.rate_all_success, dec.p_all_success))
print("  all-failure rate  %.6f  (weight %.6f)" % (dec.rate_all_failure, dec.p_all_failure))
print("  mixture rate      %.6f  (weight %.6f)" % (dec.rate_mixture, dec.p_mixture))
print("  combined          %.6f" % dec.e2e_rate)
print("  closed form       %.6f" % e2e_rate_closed(route, 8.0, params))
print("  min-of-means      %.6f" % e2e_rate_min_of_means(route, 8.0, params))

# The two route-level readings answer different questions.  The closed
# form weights whole-route outcomes; min-of-means averages each hop in
# isolation first.  They coincide exactly on single-hop routes.
single = Route(hops=(Hop(arrival_rate=0.15, deg=3),))
a = e2e_rate_closed(single, 8.0, params)
b = e2e_rate_min_of_means(single, 8.0, params)
print("\nsingle hop: closed %.12f vs min-of-means %.12f (diff %.1e)" % (a, b, abs(a - b)))

print("\n== order statistics underneath ==")
# Slowest of k successful discoveries: the trial count of each hop is
# geometric, so the maximum has an explicit pmf.  Check it is a pmf and
# that its mean matches the helper.
n, p, m, dt = 3, 0.36, 12, params.trial_time
xs = np.arange(1, 400)
pmf = geometric_max_pmf(xs, n, p)
mean_trials = float(np.sum(xs * pmf))
print("geometric max (n=%d, p=%.2f): pmf sums to %.12f" % (n, p, float(np.sum(pmf))))
print("  untruncated mean %.6f trials = %.6f s" % (mean_trials, mean_trials * dt))
print("  truncated-at-m=%d helper: %.6f s" % (m, expected_max_trial_time(n, m, p, dt)))

# Slowest of k roadside waits: independent exponentials with per-hop
# rates.  The density integrates to one, and for equal rates the mean
# collapses to the harmonic-number formula.
rates = [h.arrival_rate for h in route.hops]
mass, _ = integrate.quad(lambda x: exponential_max_pdf(rates, x), 0.0, np.inf)
print("\nexponential max over rates %s:" % rates)
print("  pdf mass %.12f" % mass)
print("  E[max wait] %.6f s" % expected_max_exponential(rates))
print("  iid check at rate 0.15, k=3: %.6f s vs harmonic %.6f s" % (
    expected_max_exponential([0.15] * 3),
    (1 + 1 / 2 + 1 / 3) / 0.15,
))
