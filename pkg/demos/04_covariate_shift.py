"""Where the linear ensemble stops being the right model.

With two sources that cover disjoint inputs, the Bayes optimal model for a
mixture picks the conditional of whichever source owns the input. The
linear ensemble averages them instead.
"""

import numpy as np

from mixmin.synthworld import ShiftedConditionalWorld, bayes_mixture_with_shift, linear_ensemble


def main():
    world = ShiftedConditionalWorld([[1.0, 0.0], [0.0, 1.0]], [[0.9, 0.2], [0.2, 0.2]])
    print("covariate shift:", world.has_covariate_shift)
    for lam in ([0.5, 0.5], [0.9, 0.1], [0.1, 0.9]):
        b = bayes_mixture_with_shift(world, lam, 0)
        lin = linear_ensemble(world, lam, 0)
        print(f"weights {lam}: p(y=1 | x=0) Bayes {b:.3f}, linear {lin:.3f}")

    # identical input marginals remove the gap
    rng = np.random.default_rng(0)
    marg = rng.dirichlet(np.ones(4))
    same = ShiftedConditionalWorld(np.tile(marg, (2, 1)), rng.uniform(size=(2, 4)))
    gap = max(abs(bayes_mixture_with_shift(same, [0.3, 0.7], x) - linear_ensemble(same, [0.3, 0.7], x))
              for x in range(4))
    print(f"\nshared input marginal: max gap {gap:.1e}")


if __name__ == "__main__":
    main()
