"""MixMin against the comparison methods on one five-source world."""

import numpy as np

from mixmin import mixmin_fit
from mixmin.baselines import grid_search, random_search, regmix_lite_search, static_mixtures
from mixmin.objectives import objective
from mixmin.synthworld import WorldSpec, dm_oracle, gen_world, sample_target, sampled_matrix, train_proxies


def main(seed=7):
    world = gen_world(WorldSpec(12, 5, concentration=0.5, seed=seed))
    proxies = train_proxies(world, 500, alpha=1.0, seed=seed)
    m = sampled_matrix(world, proxies, sample_target(world, 2000, seed))
    sizes = np.random.default_rng(seed).integers(1, 100, size=5)

    natural, balanced = static_mixtures(sizes)
    picks = {
        "mixmin": mixmin_fit(m)[0],
        "random (k=7)": random_search(m, 7, seed)[0],
        "regmix-lite": regmix_lite_search(m, seed=seed)[0],
        "grid (0.1)": grid_search(m, 0.1)[0],
        "natural": natural,
        "balanced": balanced,
    }
    print(f"{'method':>14}  {'ensemble CE':>11}  {'mixture loss':>12}  weights")
    for name, w in picks.items():
        print(f"{name:>14}  {objective(m, w):11.5f}  {dm_oracle(world, w):12.5f}  {np.round(w.values, 3)}")


if __name__ == "__main__":
    main()
