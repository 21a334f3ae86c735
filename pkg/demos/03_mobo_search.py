"""A small end-to-end search, compared against random sampling.

Runs the GP-guided multi-objective search with the synthetic accuracy proxy,
prints the resulting nondominated set, and measures the dominated
hypervolume of both searches against a shared reference point.
"""

import numpy as np

from splitnas import DeviceProfile, WirelessProfile, hypervolume
from splitnas.accuracy import proxy_error
from splitnas.mobo import SearchConfig, SpaceConfig, run_random_search, run_search

device = DeviceProfile.default()
wireless = WirelessProfile.default("lte")
space = SpaceConfig.default()

config = SearchConfig(c_init=15, n_iter=45, pool_size=256, seed=1)
print(f"guided search: {config.c_init} random + {config.n_iter} guided evaluations ...")
guided = run_search(config, space, device, wireless, proxy_error)
random_run = run_random_search(
    config.c_init + config.n_iter, space, device, wireless, proxy_error, seed=901
)

print(f"\nnondominated set ({len(guided.archive)} architectures):")
print(f"{'error %':>8} {'latency ms':>11} {'energy J':>9}  split (L/E)")
for entry in sorted(guided.archive, key=lambda e: e.objectives[0]):
    error_pct, latency_s, energy_j = entry.objectives
    ev = entry.evaluation
    print(f"{error_pct:8.2f} {latency_s * 1e3:11.1f} {energy_j:9.3f}  "
          f"{ev.index_latency}/{ev.index_energy}")

both = np.vstack([guided.objectives_array(), random_run.objectives_array()])
reference = both.max(axis=0) * 1.1
print(f"\nhypervolume vs reference {np.round(reference, 3).tolist()}:")
print(f"  guided: {hypervolume(guided.archive, reference):.3f}")
print(f"  random: {hypervolume(random_run.archive, reference):.3f}")
