"""Recover a known mixture from exact and sampled target data.

Two sources over a two-symbol alphabet, (0.8, 0.2) and (0.2, 0.8), and a
target (0.6, 0.4). The target is the 2/3 : 1/3 mixture of the sources, so
the best weights are known in closed form.
"""

import numpy as np

from mixmin import SolverConfig, exact_expectation_matrix, mixmin_fit
from mixmin.synthworld import CategoricalWorld, dm_oracle, entropy, sample_target, sampled_matrix


def main():
    world = CategoricalWorld([[0.8, 0.2], [0.2, 0.8]], [0.6, 0.4], source_ids=("left", "right"))
    print("sources:", world.sources.tolist(), "target:", world.target.tolist())

    # exact expectation over the target, using the sources themselves as proxies
    w, trace = mixmin_fit(exact_expectation_matrix(world, world.sources), SolverConfig())
    print(f"\nexact objective, 100 steps: weights {np.round(w.values, 6)}")
    for step in (0, 1, 5, 20, 100):
        print(f"  step {step:3d}  objective {trace.objectives[step]:.8f}  weights {np.round(trace.weights[step], 4)}")
    print(f"target entropy {entropy(world.target):.8f}; loss of the mixture at the fitted weights {dm_oracle(world, w):.8f}")

    # finite target samples move the answer by sampling noise only
    for n in (100, 1000, 50_000):
        samples = sample_target(world, n, seed=0)
        w_n, _ = mixmin_fit(sampled_matrix(world, world.sources, samples), SolverConfig(record_trace=False))
        print(f"{n:6d} target samples -> weights {np.round(w_n.values, 4)}")


if __name__ == "__main__":
    main()
