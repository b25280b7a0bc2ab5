"""How much do cheap proxy models cost?

Each source gets a proxy fit on only a handful of samples (add-one
smoothed counts). Weights chosen from the weak proxies are then scored by
the exact loss of training on that mixture.
"""

import numpy as np

from mixmin import SolverConfig, exact_expectation_matrix, mixmin_fit
from mixmin.synthworld import WorldSpec, dm_grid_argmin, dm_oracle, gen_world, train_proxies

SIZES = (10, 100, 1000, 10_000)


def main(n_worlds=20):
    excess = {n: [] for n in ("exact", *SIZES)}
    for seed in range(n_worlds):
        v = int(np.random.default_rng(seed).integers(2, 11))
        world = gen_world(WorldSpec(v, 3, seed=seed))
        _, best = dm_grid_argmin(world, 0.01)

        w, _ = mixmin_fit(exact_expectation_matrix(world, world.sources))
        excess["exact"].append(dm_oracle(world, w) - best)
        for n in SIZES:
            proxies = train_proxies(world, n, alpha=1.0, seed=seed)
            w, _ = mixmin_fit(exact_expectation_matrix(world, proxies), SolverConfig(record_trace=False))
            excess[n].append(dm_oracle(world, w) - best)

    print(f"excess loss over the best 0.01-grid mixture, {n_worlds} worlds")
    print(f"{'proxy samples':>14}  {'median':>10}  {'max':>10}")
    for key, values in excess.items():
        print(f"{key!s:>14}  {np.median(values):10.2e}  {np.max(values):10.2e}")
    # negative entries mean the fit landed between grid points and beat them


if __name__ == "__main__":
    main()
