"""Fit mixture weights by entropic descent on the ensemble objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mixmin.errors import MixMinError
from mixmin.objectives import LossKind, PredictionMatrix, gradient, objective
from mixmin.simplex import MixtureWeights, entropic_update, uniform_weights


@dataclass(frozen=True)
class SolverConfig:
    """Step size, step count and seed for :func:`mixmin_fit`.

    The defaults (``eta=1.0``, 100 steps) are the settings used for every
    language-modelling run in the original experiments. ``seed`` is reserved
    for a minibatch mode; the full-batch solver is deterministic.
    """

    eta: float = 1.0
    steps: int = 100
    seed: int = 0
    record_trace: bool = True

    def __post_init__(self):
        if not (isinstance(self.eta, (int, float)) and np.isfinite(self.eta) and self.eta > 0):
            raise MixMinError(f"eta must be a positive number, got {self.eta!r}")
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            raise MixMinError(f"steps must be a positive integer, got {self.steps!r}")


@dataclass(frozen=True, eq=False)
class SolverTrace:
    """Per-step history; row 0 is the uniform initialization.

    Attributes
    ----------
    objectives : ndarray of shape (steps + 1,)
    weights : ndarray of shape (steps + 1, P)
    grad_max_norms : ndarray of shape (steps + 1,)
    """

    objectives: np.ndarray
    weights: np.ndarray
    grad_max_norms: np.ndarray
    source_ids: tuple[str, ...]

    def __len__(self) -> int:
        return self.objectives.shape[0]


def mixmin_fit(
    matrix: PredictionMatrix, config: SolverConfig | None = None
) -> tuple[MixtureWeights, SolverTrace | None]:
    """Minimize the ensemble objective over the simplex.

    Starts from uniform weights and takes ``config.steps`` multiplicative
    steps with constant step size. Per step the work is one pass over the
    N x P score matrix.

    Returns
    -------
    weights : MixtureWeights
    trace : SolverTrace or None
        ``None`` when ``config.record_trace`` is false.
    """
    config = config or SolverConfig()
    lam = uniform_weights(matrix.source_ids).values.copy()
    record = config.record_trace
    if record:
        objs = np.empty(config.steps + 1)
        snaps = np.empty((config.steps + 1, matrix.n_sources))
        norms = np.empty(config.steps + 1)

    for step in range(config.steps + 1):
        try:
            g = gradient(matrix, lam)
            if record:
                objs[step] = objective(matrix, lam)
        except MixMinError as exc:
            raise type(exc)(f"step {step}: {exc}") from exc
        if record:
            snaps[step] = lam
            norms[step] = np.max(np.abs(g))
        if step == config.steps:
            break
        if not np.all(np.isfinite(g)):
            raise MixMinError(f"step {step}: non-finite gradient")
        lam = entropic_update(lam, g, config.eta)

    weights = MixtureWeights(lam, matrix.source_ids)
    if not record:
        return weights, None
    return weights, SolverTrace(objs, snaps, norms, matrix.source_ids)


def exact_expectation_matrix(world, proxies, source_ids=None) -> PredictionMatrix:
    """CE matrix whose objective is the exact cross-entropy under the target.

    One row per symbol with positive target mass, weighted by that mass, so
    ``ce_objective(M, lam) == H(target, sum_p lam_p proxy_p)``.

    Parameters
    ----------
    world : CategoricalWorld or array-like
        Anything with a ``target`` pmf attribute, or the target pmf itself.
    proxies : array-like of shape (P, V)
        One pmf per source.
    """
    target = np.asarray(getattr(world, "target", world), dtype=np.float64)
    q = np.atleast_2d(np.asarray(proxies, dtype=np.float64))
    if q.shape[1] != target.size:
        raise MixMinError(
            f"proxies cover {q.shape[1]} symbols, target has {target.size}"
        )
    support = np.flatnonzero(target > 0)
    if source_ids is None:
        source_ids = getattr(world, "source_ids", None)
    with np.errstate(divide="ignore"):
        scores = np.log(q[:, support].T)
    zero = np.all(scores == -np.inf, axis=1)
    if np.any(zero):
        sym = int(support[np.flatnonzero(zero)[0]])
        raise MixMinError(f"no proxy gives symbol {sym} positive mass")
    return PredictionMatrix(
        LossKind.CE_UNCONDITIONAL,
        scores,
        sample_ids=tuple(f"x{v}" for v in support),
        source_ids=tuple(source_ids) if source_ids is not None else (),
        row_weights=target[support] / target[support].sum(),
    )
