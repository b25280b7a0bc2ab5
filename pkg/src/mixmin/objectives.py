"""Ensemble risk of a weighted mixture of per-source models, and its gradient.

A :class:`PredictionMatrix` holds, for every target sample and every source,
what that source's proxy model says about the sample:

* ``ce_unconditional`` -- natural-log mass the model assigns to the sample;
* ``ce_conditional`` -- natural-log probability of the sample's true label
  (only meaningful when the sources share one input marginal);
* ``mse`` -- a real-valued prediction, paired with a scalar target.

For cross-entropy the mixture is formed in probability space and evaluated in
log space with a shifted log-sum-exp, so sequence-level log-likelihoods of
-1000 nats and below are handled without underflow. Either way the objective
is convex in the weights.

All reductions use fixed-shape numpy sums (no BLAS), so results are
bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from mixmin.errors import MixMinError, ZeroProbabilityError
from mixmin.simplex import MixtureWeights, default_source_ids, weights_array


class LossKind(str, Enum):
    CE_UNCONDITIONAL = "ce_unconditional"
    CE_CONDITIONAL = "ce_conditional"
    MSE = "mse"

    @property
    def is_ce(self) -> bool:
        return self is not LossKind.MSE


@dataclass(frozen=True, eq=False)
class PredictionMatrix:
    """Per-source proxy outputs on N target samples.

    Attributes
    ----------
    loss_kind : LossKind
    scores : ndarray of shape (N, P)
        Log scores for the CE kinds (``-inf`` marks a zero-probability
        prediction), raw predictions for MSE.
    targets : ndarray of shape (N,) or None
        Regression targets; required for MSE, forbidden otherwise.
    sample_ids, source_ids : tuple of str
    row_weights : ndarray of shape (N,) or None
        Optional probability weights over rows. ``None`` means the plain
        empirical mean. Weighted rows let an exact expectation over a finite
        alphabet be written as one row per symbol.
    """

    loss_kind: LossKind
    scores: np.ndarray
    targets: np.ndarray | None = None
    sample_ids: tuple[str, ...] = field(default=())
    source_ids: tuple[str, ...] = field(default=())
    row_weights: np.ndarray | None = None

    def __post_init__(self):
        kind = LossKind(self.loss_kind)
        object.__setattr__(self, "loss_kind", kind)
        scores = np.array(self.scores, dtype=np.float64)
        if scores.ndim != 2 or scores.shape[0] < 1 or scores.shape[1] < 1:
            raise MixMinError("scores must be a non-empty N x P matrix")
        n, p = scores.shape
        if np.any(np.isnan(scores)):
            raise MixMinError("scores contain NaN")
        if kind.is_ce:
            if np.any(scores == np.inf):
                raise MixMinError("log scores must not be +inf")
        elif not np.all(np.isfinite(scores)):
            raise MixMinError("predictions must be finite")
        if kind is LossKind.CE_CONDITIONAL and np.any(scores > 0):
            raise MixMinError("conditional log-probabilities must be <= 0")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

        if kind is LossKind.MSE:
            if self.targets is None:
                raise MixMinError("mse requires targets")
            y = np.array(self.targets, dtype=np.float64)
            if y.shape != (n,):
                raise MixMinError(f"targets have shape {y.shape}, expected ({n},)")
            if not np.all(np.isfinite(y)):
                raise MixMinError("targets must be finite")
            y.setflags(write=False)
            object.__setattr__(self, "targets", y)
        elif self.targets is not None:
            raise MixMinError("targets are only used by the mse loss")

        sample_ids = tuple(self.sample_ids) or tuple(f"s{i}" for i in range(n))
        source_ids = tuple(self.source_ids) or default_source_ids(p)
        if len(sample_ids) != n:
            raise MixMinError(f"{len(sample_ids)} sample ids for {n} rows")
        if len(source_ids) != p:
            raise MixMinError(f"{len(source_ids)} source ids for {p} columns")
        if len(set(sample_ids)) != n:
            raise MixMinError("duplicate sample id")
        if len(set(source_ids)) != p:
            raise MixMinError("duplicate source id")
        object.__setattr__(self, "sample_ids", sample_ids)
        object.__setattr__(self, "source_ids", source_ids)

        if self.row_weights is not None:
            w = np.array(self.row_weights, dtype=np.float64)
            if w.shape != (n,) or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise MixMinError("row weights must be a nonnegative vector of length N")
            if abs(w.sum() - 1.0) > 1e-9:
                raise MixMinError("row weights must sum to 1")
            w = w / w.sum()
            w.setflags(write=False)
            object.__setattr__(self, "row_weights", w)

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]

    @property
    def n_sources(self) -> int:
        return self.scores.shape[1]

    def take(self, rows) -> "PredictionMatrix":
        """Sub-matrix on the given row indices (row weights are renormalized)."""
        rows = np.asarray(rows, dtype=np.int64)
        w = None
        if self.row_weights is not None:
            w = self.row_weights[rows]
            w = w / w.sum()
        return PredictionMatrix(
            self.loss_kind,
            self.scores[rows],
            None if self.targets is None else self.targets[rows],
            tuple(self.sample_ids[i] for i in rows),
            self.source_ids,
            w,
        )


def _weights_for(matrix: PredictionMatrix, weights) -> np.ndarray:
    if isinstance(weights, MixtureWeights) and weights.source_ids != matrix.source_ids:
        raise MixMinError(
            f"weights are over sources {weights.source_ids}, "
            f"matrix has {matrix.source_ids}"
        )
    lam = weights_array(weights)
    if lam.shape != (matrix.n_sources,):
        raise MixMinError(
            f"expected {matrix.n_sources} weights, got shape {lam.shape}"
        )
    return lam


def _row_mean(matrix: PredictionMatrix, values: np.ndarray) -> float:
    if matrix.row_weights is None:
        return float(np.sum(values) / values.shape[0])
    return float(np.sum(matrix.row_weights * values))


def _col_mean(matrix: PredictionMatrix, values: np.ndarray) -> np.ndarray:
    if matrix.row_weights is None:
        return np.sum(values, axis=0) / values.shape[0]
    return np.sum(matrix.row_weights[:, None] * values, axis=0)


def _mix_log_rows(log_scores: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """log sum_p lam_p exp(l_ip) for each row; -inf where the mixture is zero."""
    live = lam > 0
    sub = log_scores[:, live]
    shift = sub.max(axis=1)
    dead = shift == -np.inf
    safe = np.where(dead, 0.0, shift)
    total = np.sum(lam[live] * np.exp(sub - safe[:, None]), axis=1)
    with np.errstate(divide="ignore"):
        out = safe + np.log(total)
    out[dead] = -np.inf
    return out


def mix_log_scores(log_row, weights) -> float:
    """Log of the weighted mixture ``log sum_p lam_p exp(l_p)``.

    Sources with zero weight are skipped, so their score may be ``-inf``.

    Raises
    ------
    ZeroProbabilityError
        If every weighted source gives the sample zero probability.
    """
    row = np.asarray(log_row, dtype=np.float64)
    lam = weights_array(weights)
    if row.shape != lam.shape:
        raise MixMinError(f"{row.size} scores for {lam.size} weights")
    if np.any(np.isnan(row)) or np.any(row == np.inf):
        raise MixMinError("log scores must be finite or -inf")
    value = _mix_log_rows(row[None, :], lam)[0]
    if value == -np.inf:
        raise ZeroProbabilityError("mixture assigns zero probability")
    return float(value)


def _checked_mix(matrix: PredictionMatrix, lam: np.ndarray) -> np.ndarray:
    mixed = _mix_log_rows(matrix.scores, lam)
    bad = np.flatnonzero(mixed == -np.inf)
    if bad.size:
        sid = matrix.sample_ids[bad[0]]
        raise ZeroProbabilityError(
            f"mixture assigns zero probability to sample {sid!r}"
        )
    return mixed


def _require_ce(matrix: PredictionMatrix) -> None:
    if not matrix.loss_kind.is_ce:
        raise MixMinError(f"cross-entropy needs a CE matrix, got {matrix.loss_kind.value}")


def _require_mse(matrix: PredictionMatrix) -> None:
    if matrix.loss_kind is not LossKind.MSE:
        raise MixMinError(f"squared error needs an mse matrix, got {matrix.loss_kind.value}")


def ce_objective(matrix: PredictionMatrix, weights) -> float:
    """Mean negative log-likelihood of the weighted ensemble, in nats."""
    _require_ce(matrix)
    lam = _weights_for(matrix, weights)
    return -_row_mean(matrix, _checked_mix(matrix, lam))


def ce_gradient(matrix: PredictionMatrix, weights) -> np.ndarray:
    """Gradient of :func:`ce_objective` with respect to the weights.

    ``g_p = -mean_i f_p(x_i) / f_lam(x_i)``, evaluated as
    ``exp(l_ip - log f_lam(x_i))``. Note ``dot(lam, g) == -1`` exactly in
    real arithmetic.
    """
    _require_ce(matrix)
    lam = _weights_for(matrix, weights)
    mixed = _checked_mix(matrix, lam)
    ratio = np.exp(matrix.scores - mixed[:, None])
    return -_col_mean(matrix, ratio)


def mse_objective(matrix: PredictionMatrix, weights) -> float:
    """Mean squared error of the weighted ensemble of predictions."""
    _require_mse(matrix)
    lam = _weights_for(matrix, weights)
    resid = np.sum(matrix.scores * lam, axis=1) - matrix.targets
    return _row_mean(matrix, resid * resid)


def mse_gradient(matrix: PredictionMatrix, weights) -> np.ndarray:
    _require_mse(matrix)
    lam = _weights_for(matrix, weights)
    resid = np.sum(matrix.scores * lam, axis=1) - matrix.targets
    return 2.0 * _col_mean(matrix, resid[:, None] * matrix.scores)


def objective(matrix: PredictionMatrix, weights) -> float:
    """Dispatch to the CE or MSE objective according to ``matrix.loss_kind``."""
    if matrix.loss_kind.is_ce:
        return ce_objective(matrix, weights)
    return mse_objective(matrix, weights)


def gradient(matrix: PredictionMatrix, weights) -> np.ndarray:
    if matrix.loss_kind.is_ce:
        return ce_gradient(matrix, weights)
    return mse_gradient(matrix, weights)


def batch_objective(matrix: PredictionMatrix, candidates, chunk: int = 4096) -> np.ndarray:
    """Objective at many weight vectors at once.

    Parameters
    ----------
    candidates : array-like of shape (K, P)

    Returns
    -------
    ndarray of shape (K,)
        ``inf`` where a CE mixture gives some sample zero probability.
    """
    lams = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    if lams.shape[1] != matrix.n_sources:
        raise MixMinError(f"candidates must have {matrix.n_sources} columns")
    out = np.empty(lams.shape[0])
    w = matrix.row_weights
    n = matrix.n_samples
    if matrix.loss_kind.is_ce:
        shift = matrix.scores.max(axis=1)
        shift = np.where(shift == -np.inf, 0.0, shift)
        probs = np.exp(matrix.scores - shift[:, None])
    for start in range(0, lams.shape[0], chunk):
        block = lams[start:start + chunk]
        if matrix.loss_kind.is_ce:
            with np.errstate(divide="ignore"):
                vals = -(np.log(probs @ block.T) + shift[:, None])
        else:
            resid = matrix.scores @ block.T - matrix.targets[:, None]
            vals = resid * resid
        if w is None:
            out[start:start + chunk] = vals.sum(axis=0) / n
        else:
            out[start:start + chunk] = w @ vals
    return out

