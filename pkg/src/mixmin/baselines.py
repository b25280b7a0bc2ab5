"""Reference mixture-selection methods to compare against the solver.

All methods that take a :class:`PredictionMatrix` score candidates with the
same ensemble objective the solver minimizes. Ties always go to the lowest
candidate index (or the lexicographically first grid point).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mixmin.errors import MixMinError
from mixmin.objectives import PredictionMatrix, batch_objective, objective
from mixmin.simplex import (
    MixtureWeights,
    compositions,
    default_source_ids,
    n_compositions,
    resolution_to_m,
    sample_simplex,
    uniform_weights,
    weights_array,
)

GRID_CAP = 10**7


@dataclass(frozen=True)
class CandidateEvaluation:
    weights: MixtureWeights
    objective: float


def random_search(
    matrix: PredictionMatrix, k: int = 7, seed: int = 0
) -> tuple[MixtureWeights, list[CandidateEvaluation]]:
    """Best of ``k`` mixtures drawn uniformly from the simplex.

    The default of 7 candidates matches a budget of one proxy model per
    source on a 7-domain corpus.
    """
    if k < 1:
        raise MixMinError("need at least one candidate")
    rng = np.random.default_rng(seed)
    points = sample_simplex(rng, k, matrix.n_sources)
    evals = []
    for lam in points:
        w = MixtureWeights(lam / lam.sum(), matrix.source_ids)
        evals.append(CandidateEvaluation(w, objective(matrix, w)))
    best = min(range(k), key=lambda i: (evals[i].objective, i))
    return evals[best].weights, evals


def grid_search(
    matrix: PredictionMatrix, resolution: float, cap: int = GRID_CAP
) -> tuple[MixtureWeights, float]:
    """Exhaustive search over weights that are multiples of ``resolution``.

    ``resolution`` must be ``1/m`` for a positive integer ``m``. Every
    composition of ``m`` into P parts is evaluated, so this is also the
    brute-force oracle for the solver on small problems.
    """
    m = resolution_to_m(resolution)
    p = matrix.n_sources
    count = n_compositions(m, p)
    if count > cap:
        raise MixMinError(
            f"grid has {count} points (cap {cap}); use a coarser resolution"
        )
    points = compositions(m, p) / m
    values = batch_objective(matrix, points)
    if not np.any(np.isfinite(values)):
        raise MixMinError("every grid point gives some sample zero probability")
    best = int(np.argmin(values))
    weights = MixtureWeights(points[best], matrix.source_ids)
    return weights, objective(matrix, weights)


@dataclass(frozen=True, eq=False)
class RegressionSurrogate:
    """Linear model ``loss ~ intercept + coefficients . lam``.

    Because weights sum to one, the intercept and a constant shift of the
    coefficients are interchangeable. The fit pins ``coefficients[0] = 0``;
    compare predictions, not raw coefficients.
    """

    coefficients: np.ndarray
    intercept: float
    source_ids: tuple[str, ...]

    def predict(self, weights) -> np.ndarray:
        lam = np.atleast_2d(weights_array(weights))
        return lam @ self.coefficients + self.intercept


def regmix_lite_fit(
    observations: Sequence[tuple[MixtureWeights, float]],
) -> RegressionSurrogate:
    """Least-squares linear surrogate of loss as a function of the mixture."""
    if not observations:
        raise MixMinError("no observations")
    lams = np.array([weights_array(w) for w, _ in observations], dtype=np.float64)
    losses = np.array([loss for _, loss in observations], dtype=np.float64)
    n, p = lams.shape
    if n < p + 1:
        raise MixMinError(f"need at least {p + 1} observations for {p} sources, got {n}")
    design = np.column_stack([np.ones(n), lams[:, 1:]])
    if np.linalg.matrix_rank(design) < p:
        raise MixMinError("observed mixtures do not span the simplex (rank deficient)")
    beta, *_ = np.linalg.lstsq(design, losses, rcond=None)
    first = observations[0][0]
    ids = first.source_ids if isinstance(first, MixtureWeights) else default_source_ids(p)
    coef = np.concatenate([[0.0], beta[1:]])
    return RegressionSurrogate(coef, float(beta[0]), ids)


def regmix_lite_select(
    surrogate: RegressionSurrogate,
    candidates: int = 10_000,
    seed: int = 0,
    include_vertices: bool = False,
) -> MixtureWeights:
    """Candidate with the lowest predicted loss among uniform simplex draws.

    With ``include_vertices`` the P simplex vertices are appended after the
    random draws; for a linear surrogate the best vertex is the exact
    minimizer.
    """
    p = surrogate.coefficients.size
    rng = np.random.default_rng(seed)
    points = sample_simplex(rng, candidates, p)
    if include_vertices:
        points = np.vstack([points, np.eye(p)])
    pred = surrogate.predict(points)
    lo = pred.min()
    # predictions equal up to rounding count as ties
    tied = np.flatnonzero(pred <= lo + 1e-12 * max(1.0, abs(lo)))
    lam = points[tied[0]]
    return MixtureWeights(lam / lam.sum(), surrogate.source_ids)


def regmix_lite_search(
    matrix: PredictionMatrix,
    observations: int | None = None,
    candidates: int = 10_000,
    seed: int = 0,
) -> tuple[MixtureWeights, RegressionSurrogate]:
    """Observe the objective at random mixtures, fit the surrogate, select.

    ``observations`` defaults to ``max(7, P + 1)``.
    """
    p = matrix.n_sources
    n_obs = max(7, p + 1) if observations is None else observations
    rng = np.random.default_rng(seed)
    obs_seed, select_seed = rng.integers(0, 2**63 - 1, size=2)
    points = sample_simplex(np.random.default_rng(obs_seed), n_obs, p)
    obs = []
    for lam in points:
        w = MixtureWeights(lam / lam.sum(), matrix.source_ids)
        obs.append((w, objective(matrix, w)))
    surrogate = regmix_lite_fit(obs)
    return regmix_lite_select(surrogate, candidates, int(select_seed)), surrogate


def static_mixtures(
    source_sizes, source_ids: Sequence[str] | None = None
) -> tuple[MixtureWeights, MixtureWeights]:
    """Natural (size-proportional) and balanced (uniform) mixtures."""
    sizes = np.asarray(source_sizes, dtype=np.float64)
    if sizes.ndim != 1 or sizes.size == 0:
        raise MixMinError("need at least one source size")
    if not np.all(np.isfinite(sizes)) or np.any(sizes <= 0):
        raise MixMinError("source sizes must be positive")
    ids = default_source_ids(sizes.size) if source_ids is None else tuple(source_ids)
    natural = MixtureWeights(sizes / sizes.sum(), ids)
    return natural, uniform_weights(ids)
