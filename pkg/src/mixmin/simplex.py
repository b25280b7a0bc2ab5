"""Points on the probability simplex and the entropic (KL) mirror step.

Mixture weights live on the simplex over a fixed, ordered list of sources.
The only update rule needed by the solver is the multiplicative-weights step

    lam_p <- lam_p * exp(-eta * g_p) / sum_q lam_q * exp(-eta * g_q)

which keeps iterates on the simplex without any projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from mixmin.errors import MixMinError, SimplexError

# Tolerance on ingestion (file-sourced weights carry decimal rounding).
INGEST_TOL = 1e-6
# Internal operations must keep the sum within this.
INTERNAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MixtureWeights:
    """A point on the |P|-simplex, aligned with ``source_ids``.

    Zero entries are allowed: sparse mixtures are legitimate outputs.
    """

    values: np.ndarray
    source_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "source_ids", tuple(self.source_ids))
        if values.ndim != 1 or values.size < 1:
            raise SimplexError("mixture weights must be a non-empty vector")
        if values.size != len(self.source_ids):
            raise SimplexError(
                f"{values.size} weights but {len(self.source_ids)} source ids"
            )
        if not np.all(np.isfinite(values)):
            raise SimplexError("non-finite weight")
        if np.any(values < 0):
            raise SimplexError("negative weight")
        if abs(values.sum() - 1.0) > INTERNAL_TOL:
            raise SimplexError(f"weights sum to {values.sum()!r}, not 1")

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, MixtureWeights):
            return NotImplemented
        return self.source_ids == other.source_ids and np.array_equal(
            self.values, other.values
        )

    def as_dict(self) -> dict[str, float]:
        return {s: float(v) for s, v in zip(self.source_ids, self.values)}


def weights_array(weights) -> np.ndarray:
    """Return the raw float vector behind ``weights``.

    Accepts a :class:`MixtureWeights` or anything array-like; no simplex
    validation is done on the latter.
    """
    if isinstance(weights, MixtureWeights):
        return weights.values
    return np.asarray(weights, dtype=np.float64)


def default_source_ids(n: int) -> tuple[str, ...]:
    return tuple(f"source_{i}" for i in range(n))


def _check_ids(source_ids: Sequence[str]) -> tuple[str, ...]:
    ids = tuple(source_ids)
    if not ids:
        raise MixMinError("no sources")
    if len(set(ids)) != len(ids):
        raise MixMinError("duplicate source ids")
    return ids


def uniform_weights(source_ids: Sequence[str]) -> MixtureWeights:
    """Uniform mixture, the solver's starting point."""
    ids = _check_ids(source_ids)
    return MixtureWeights(np.full(len(ids), 1.0 / len(ids)), ids)


def validate_simplex(
    v, tol: float = INGEST_TOL, source_ids: Sequence[str] | None = None
) -> MixtureWeights:
    """Check that ``v`` is (nearly) on the simplex and renormalize it exactly.

    Vectors whose sum is already within 1e-12 of one are kept bit-for-bit,
    so weights written by the solver reload unchanged.

    Raises
    ------
    SimplexError
        If an entry is negative or non-finite, or the sum is off by more
        than ``tol``.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise SimplexError("expected a non-empty vector of weights")
    if not np.all(np.isfinite(arr)):
        raise SimplexError("non-finite weight")
    if np.any(arr < 0):
        bad = int(np.flatnonzero(arr < 0)[0])
        raise SimplexError(f"negative weight at index {bad}: {arr[bad]!r}")
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise SimplexError(f"weights sum to {total!r}, outside tolerance {tol}")
    ids = default_source_ids(arr.size) if source_ids is None else _check_ids(source_ids)
    # already normalized to working precision: keep the exact values
    if abs(total - 1.0) > 1e-12:
        arr = arr / total
    return MixtureWeights(arr, ids)


def entropic_update(lam: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    """Array-level multiplicative-weights step (no validation)."""
    z = -eta * grad
    support = lam > 0
    # shift by the max over the support so the largest live factor is exp(0)
    z = z - z[support].max()
    out = np.where(support, lam * np.exp(z), 0.0)
    return out / out.sum()


def entropic_step(weights: MixtureWeights, grad, eta: float) -> MixtureWeights:
    """One step of entropic mirror descent on the simplex.

    Parameters
    ----------
    weights : MixtureWeights
        Current iterate.
    grad : array-like of shape (P,)
        Gradient of the objective with respect to the weights.
    eta : float
        Step size, must be positive.

    Returns
    -------
    MixtureWeights
        ``lam * exp(-eta * grad)``, renormalized. Zero entries stay zero and
        adding a constant to every gradient entry leaves the result unchanged.
    """
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != weights.values.shape:
        raise MixMinError(
            f"gradient has shape {g.shape}, weights have {weights.values.shape}"
        )
    if not np.all(np.isfinite(g)):
        raise MixMinError("non-finite gradient")
    if not eta > 0:
        raise MixMinError(f"step size must be positive, got {eta!r}")
    return MixtureWeights(entropic_update(weights.values, g, eta), weights.source_ids)


def n_compositions(m: int, parts: int) -> int:
    """Number of ways to write ``m`` as an ordered sum of ``parts`` nonnegative ints."""
    return comb(m + parts - 1, parts - 1)


def compositions(m: int, parts: int) -> np.ndarray:
    """All compositions of ``m`` into ``parts`` nonnegative parts.

    Rows come out in ascending lexicographic order.
    """
    if parts < 1 or m < 0:
        raise MixMinError("need parts >= 1 and m >= 0")
    if parts == 1:
        return np.array([[m]], dtype=np.int64)
    blocks = []
    for first in range(m + 1):
        rest = compositions(m - first, parts - 1)
        head = np.full((rest.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, rest]))
    return np.vstack(blocks)


def resolution_to_m(resolution: float) -> int:
    if not resolution > 0 or resolution > 1:
        raise MixMinError(f"resolution must be in (0, 1], got {resolution!r}")
    m = int(round(1.0 / resolution))
    if abs(m * resolution - 1.0) > 1e-9:
        raise MixMinError(f"resolution {resolution!r} is not 1/m for an integer m")
    return m


def sample_simplex(rng: np.random.Generator, k: int, parts: int) -> np.ndarray:
    """Draw ``k`` points uniformly from the simplex (normalized unit exponentials)."""
    e = rng.exponential(1.0, size=(k, parts))
    return e / e.sum(axis=1, keepdims=True)
