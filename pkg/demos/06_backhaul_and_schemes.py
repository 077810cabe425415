"""Wired roadside backhaul and the cost of the discovery scheme.

Two deployment levers sit outside the per-hop model proper.  A wired link
between consecutive roadside units turns the failure branch's wait into a
direct transfer, and the discovery scheduling scheme sets how long one
trial takes, which decides how many trials fit in a window.
"""

import numpy as np

from v2xdelivery import (
    BackhaulConfig,
    Hop,
    Route,
    SimConfig,
    SystemParams,
    build_grid_scenario,
    delta_t_for_scheme,
    simulate_route,
    spr_route,
)

params = SystemParams()
scn = build_grid_scenario(rows=3, cols=3, seed=104, arrival_interval=(0.25, 0.3))
route = spr_route(scn.topology, scn.source, scn.destination)
config = SimConfig(snapshots=50_000, seed=9)

print("== wired backhaul on route %s ==" % "-".join(map(str, route.nodes)))
print("a failed hop with a wire skips the roadside wait entirely\n")
print("%8s %16s %16s %12s" % ("t [s]", "plain [s]", "wired [s]", "saved [s]"))
for t in (0.0, 2.0, 8.0, 19.0):
    plain = simulate_route(route, t, scn.params, config)
    wired = simulate_route(route, t, scn.params, config, backhaul=BackhaulConfig())
    print("%8.1f %16.4f %16.4f %12.4f" % (
        t, plain.mean_latency, wired.mean_latency,
        plain.mean_latency - wired.mean_latency,
    ))

# Selective wiring: only the named directed pairs get the shortcut, and
# the final hop never uses one because there is no next unit to wire to.
partial = BackhaulConfig(links=frozenset({("1", "2")}), rate=8.0)
sim = simulate_route(route, 2.0, scn.params, config, backhaul=partial)
print("\nwiring only RSU 1 -> 2 at rate 8.0: mean latency %.4f s" % sim.mean_latency)

print("\n== discovery schemes ==")
print("per-trial duration; more beams cost more except for one-at-a-time TD\n")
print("%8s %10s %10s %10s" % ("scheme", "1 beam", "4 beams", "8 beams"))
for scheme in ("TD", "SD", "FD", "CD"):
    cells = []
    for beams in (1, 4, 8):
        try:
            cells.append("%.3f s" % delta_t_for_scheme(scheme, beams))
        except ValueError:
            cells.append("-")  # TD sweeps beams one at a time
    print("%8s %10s %10s %10s" % (scheme, *cells))

# The trial duration only bites when the window is tight: at t = 0.12 a
# 0.10 s trial fits (one try at handing the packet off) while a 0.14 s
# trial does not (zero tries, discovery cannot start).
single = Route(hops=(Hop(arrival_rate=8.0, deg=4),))
fast = SystemParams(trial_time=delta_t_for_scheme("TD"))
slow = SystemParams(trial_time=delta_t_for_scheme("SD", beams=8))
t = 0.12
print("\ntight window t = %.2f s on a busy 4-exit street:" % t)
for name, p in (("TD @ 1 beam (0.10 s trials)", fast), ("SD @ 8 beams (0.14 s trials)", slow)):
    sim = simulate_route(single, t, p, SimConfig(snapshots=100_000, seed=5))
    m = int(np.floor(t / p.trial_time + 1e-9))
    print("  %-28s trials that fit: %d  mean latency %8.4f s" % (name, m, sim.mean_latency))
