"""Synthetic source/target distributions with exact Bayes-optimal models.

In a categorical world every source is a pmf over a finite alphabet. Under
unconditional cross-entropy the best model trained on a lam-mixture of the
sources, in the unrestricted model class, is the mixture pmf itself. So the
true data-mixing loss of ``lam`` is ``H(target, sum_p lam_p source_p)``,
available in closed form (:func:`dm_oracle`). That makes the solver's claims
checkable without training anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mixmin.errors import MixMinError, ZeroProbabilityError
from mixmin.objectives import LossKind, PredictionMatrix
from mixmin.simplex import (
    MixtureWeights,
    compositions,
    default_source_ids,
    resolution_to_m,
    weights_array,
)


PMF_TOL = 1e-12


def _check_pmf(p: np.ndarray, what: str) -> None:
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise MixMinError(f"{what} has a negative or non-finite entry")
    if abs(p.sum() - 1.0) > PMF_TOL:
        raise MixMinError(f"{what} sums to {p.sum()!r}")


@dataclass(frozen=True, eq=False)
class CategoricalWorld:
    """P source pmfs and one target pmf over ``alphabet_size`` symbols.

    ``mixture_weights`` is set when the target was built as a known mixture
    of the sources.
    """

    sources: np.ndarray
    target: np.ndarray
    source_ids: tuple[str, ...] = ()
    mixture_weights: np.ndarray | None = None

    def __post_init__(self):
        src = np.atleast_2d(np.array(self.sources, dtype=np.float64))
        tgt = np.array(self.target, dtype=np.float64)
        if src.shape[1] < 2:
            raise MixMinError("alphabet needs at least 2 symbols")
        if tgt.shape != (src.shape[1],):
            raise MixMinError("target and sources disagree on alphabet size")
        for i, row in enumerate(src):
            _check_pmf(row, f"source {i}")
        _check_pmf(tgt, "target")
        src.setflags(write=False)
        tgt.setflags(write=False)
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "target", tgt)
        ids = tuple(self.source_ids) or default_source_ids(src.shape[0])
        if len(ids) != src.shape[0]:
            raise MixMinError("one source id per source required")
        object.__setattr__(self, "source_ids", ids)
        if self.mixture_weights is not None:
            mw = np.array(self.mixture_weights, dtype=np.float64)
            mw.setflags(write=False)
            object.__setattr__(self, "mixture_weights", mw)

    @property
    def alphabet_size(self) -> int:
        return self.sources.shape[1]

    @property
    def n_sources(self) -> int:
        return self.sources.shape[0]

    def mixture(self, weights) -> np.ndarray:
        """pmf of the lam-mixture of the sources."""
        lam = weights_array(weights)
        return np.sum(lam[:, None] * self.sources, axis=0)

    def to_dict(self) -> dict:
        out = {
            "alphabet_size": self.alphabet_size,
            "source_ids": list(self.source_ids),
            "sources": self.sources.tolist(),
            "target": self.target.tolist(),
        }
        if self.mixture_weights is not None:
            out["mixture_weights"] = self.mixture_weights.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CategoricalWorld":
        world = cls(
            data["sources"],
            data["target"],
            tuple(data.get("source_ids", ())),
            data.get("mixture_weights"),
        )
        if "alphabet_size" in data and data["alphabet_size"] != world.alphabet_size:
            raise MixMinError("alphabet_size does not match the pmfs")
        return world


@dataclass(frozen=True)
class WorldSpec:
    """Recipe for :func:`gen_world`.

    With ``mixture_weights`` the target is that mixture of the sources;
    otherwise the target is an independent Dirichlet draw. ``min_mass``
    mixes every source pmf with the uniform pmf so each entry is at least
    ``min_mass``.
    """

    alphabet_size: int
    n_sources: int
    concentration: float = 1.0
    seed: int = 0
    mixture_weights: tuple[float, ...] | None = None
    min_mass: float = 0.0


def gen_world(spec: WorldSpec) -> CategoricalWorld:
    """Draw a categorical world, deterministically per ``spec.seed``."""
    v, p = spec.alphabet_size, spec.n_sources
    if v < 2 or p < 1:
        raise MixMinError("need alphabet_size >= 2 and n_sources >= 1")
    if not spec.concentration > 0:
        raise MixMinError("concentration must be positive")
    if not 0 <= spec.min_mass * v < 1:
        raise MixMinError("min_mass must satisfy 0 <= min_mass * alphabet_size < 1")
    rng = np.random.default_rng(spec.seed)
    sources = rng.dirichlet(np.full(v, spec.concentration), size=p)
    if spec.min_mass > 0:
        sources = (1.0 - v * spec.min_mass) * sources + spec.min_mass
    sources /= sources.sum(axis=1, keepdims=True)
    if spec.mixture_weights is not None:
        lam = np.asarray(spec.mixture_weights, dtype=np.float64)
        if lam.shape != (p,) or np.any(lam < 0) or abs(lam.sum() - 1) > 1e-9:
            raise MixMinError("mixture_weights must be a simplex point over the sources")
        target = np.sum(lam[:, None] * sources, axis=0)
        return CategoricalWorld(sources, target, mixture_weights=lam)
    target = rng.dirichlet(np.full(v, spec.concentration))
    return CategoricalWorld(sources, target)


def sample_target(world: CategoricalWorld, n: int, seed: int = 0) -> np.ndarray:
    """``n`` i.i.d. symbol indices from the target pmf."""
    if n < 1:
        raise MixMinError("need n >= 1 samples")
    rng = np.random.default_rng(seed)
    return rng.choice(world.alphabet_size, size=n, p=world.target)


def sample_source(world: CategoricalWorld, source: int, n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.choice(world.alphabet_size, size=n, p=world.sources[source])


def train_empirical_proxy(samples, alphabet_size: int, alpha: float = 1.0) -> np.ndarray:
    """Add-alpha smoothed frequency estimate ``(count + alpha) / (n + alpha V)``.

    With ``alpha=0`` unseen symbols get probability zero; that is allowed
    here and only becomes an error if the objective needs the symbol.
    """
    if alphabet_size < 2:
        raise MixMinError("alphabet needs at least 2 symbols")
    if alpha < 0:
        raise MixMinError("alpha must be nonnegative")
    counts = np.bincount(np.asarray(samples, dtype=np.int64), minlength=alphabet_size)
    if counts.size > alphabet_size:
        raise MixMinError("sample symbol outside the alphabet")
    total = counts.sum() + alpha * alphabet_size
    if total == 0:
        raise MixMinError("no samples and no smoothing")
    return (counts + alpha) / total


def train_proxies(
    world: CategoricalWorld, n_proxy: int, alpha: float = 1.0, seed: int = 0
) -> np.ndarray:
    """One smoothed empirical proxy per source, each from ``n_proxy`` draws."""
    seeds = np.random.default_rng(seed).integers(0, 2**63 - 1, size=world.n_sources)
    return np.array([
        train_empirical_proxy(sample_source(world, p, n_proxy, int(s)), world.alphabet_size, alpha)
        for p, s in enumerate(seeds)
    ])


def cross_entropy(target: np.ndarray, model: np.ndarray) -> float:
    """H(target, model) in nats; raises if the model misses target mass."""
    support = target > 0
    if np.any(model[support] <= 0):
        raise ZeroProbabilityError("model assigns zero probability to a target symbol")
    return float(-np.sum(target[support] * np.log(model[support])))


def entropy(pmf) -> float:
    p = np.asarray(pmf, dtype=np.float64)
    return cross_entropy(p, p)


def dm_oracle(world: CategoricalWorld, weights) -> float:
    """True data-mixing loss of ``weights``: cross-entropy of the mixture pmf.

    Raises
    ------
    ZeroProbabilityError
        If the mixture gives zero mass to a symbol the target can emit
        (the loss is infinite).
    """
    lam = weights_array(weights)
    if lam.shape != (world.n_sources,):
        raise MixMinError("one weight per source required")
    return cross_entropy(world.target, world.mixture(lam))


def dm_grid_argmin(world: CategoricalWorld, resolution: float) -> tuple[MixtureWeights, float]:
    """Brute-force argmin of :func:`dm_oracle` over a simplex grid.

    Ties go to the lexicographically first grid point.
    """
    m = resolution_to_m(resolution)
    points = compositions(m, world.n_sources) / m
    mix = points @ world.sources
    support = world.target > 0
    with np.errstate(divide="ignore"):
        vals = -(np.log(mix[:, support]) @ world.target[support])
    if not np.any(np.isfinite(vals)):
        raise ZeroProbabilityError("every grid point misses target mass")
    best = int(np.argmin(vals))
    return MixtureWeights(points[best], world.source_ids), float(vals[best])


def retrain_on_mixture(
    world: CategoricalWorld, weights, n: int, seed: int = 0, alpha: float = 0.0
) -> np.ndarray:
    """Model 'retrained' on ``n`` samples of the lam-remixed sources.

    Per-source counts are a multinomial draw from ``lam``; each source then
    contributes that many samples. The returned model is the (optionally
    smoothed) empirical pmf of the pooled data.
    """
    if n < 1:
        raise MixMinError("need n >= 1 samples")
    lam = weights_array(weights)
    rng = np.random.default_rng(seed)
    per_source = rng.multinomial(n, lam / lam.sum())
    pooled = [
        rng.choice(world.alphabet_size, size=k, p=world.sources[p])
        for p, k in enumerate(per_source) if k > 0
    ]
    return train_empirical_proxy(np.concatenate(pooled), world.alphabet_size, alpha)


def sampled_matrix(
    world: CategoricalWorld, proxies, samples, loss_kind=LossKind.CE_UNCONDITIONAL
) -> PredictionMatrix:
    """CE matrix of proxy log-probabilities on observed target symbols."""
    q = np.asarray(proxies, dtype=np.float64)
    samples = np.asarray(samples, dtype=np.int64)
    with np.errstate(divide="ignore"):
        scores = np.log(q[:, samples].T)
    return PredictionMatrix(
        loss_kind,
        scores,
        sample_ids=tuple(f"t{i}" for i in range(samples.size)),
        source_ids=world.source_ids,
    )


@dataclass(frozen=True, eq=False)
class ShiftedConditionalWorld:
    """Binary-label sources over a finite input set, allowing covariate shift.

    ``marginals[p, x]`` is source p's input distribution and
    ``conditionals[p, x]`` its probability that ``y = 1`` given ``x``.
    """

    marginals: np.ndarray
    conditionals: np.ndarray
    target_marginal: np.ndarray | None = None
    target_conditional: np.ndarray | None = None

    def __post_init__(self):
        m = np.atleast_2d(np.array(self.marginals, dtype=np.float64))
        c = np.atleast_2d(np.array(self.conditionals, dtype=np.float64))
        if m.shape != c.shape:
            raise MixMinError("marginals and conditionals must have the same shape")
        for i, row in enumerate(m):
            _check_pmf(row, f"marginal {i}")
        if np.any(c < 0) or np.any(c > 1):
            raise MixMinError("conditional probabilities must lie in [0, 1]")
        object.__setattr__(self, "marginals", m)
        object.__setattr__(self, "conditionals", c)

    @property
    def has_covariate_shift(self) -> bool:
        return not np.allclose(self.marginals, self.marginals[0], atol=0, rtol=0)


def bayes_mixture_with_shift(world: ShiftedConditionalWorld, weights, x: int) -> float:
    """Bayes-optimal P(y=1 | x) for the lam-mixture of the sources.

    Each source's conditional is weighted by how much input mass it puts on
    ``x``; with identical marginals this is the plain linear ensemble.
    """
    lam = weights_array(weights)
    px = world.marginals[:, x]
    denom = float(np.sum(lam * px))
    if denom <= 0:
        raise MixMinError(f"mixture puts no input mass on x={x}; conditional undefined")
    return float(np.sum(lam * world.conditionals[:, x] * px) / denom)


def linear_ensemble(world: ShiftedConditionalWorld, weights, x: int) -> float:
    lam = weights_array(weights)
    return float(np.sum(lam * world.conditionals[:, x]))


@dataclass(frozen=True)
class PerturbationSpec:
    """Sup-norm noise level ``epsilon`` applied to proxy pmfs."""

    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise MixMinError("epsilon must be nonnegative")


def perturb_proxies(proxies, spec: PerturbationSpec) -> np.ndarray:
    """Add seeded zero-sum noise of sup norm ``epsilon`` to each pmf.

    The noise sums to zero within each pmf, so renormalization barely moves
    it and the perturbed pmfs stay within ``epsilon`` (<= 2 epsilon) of the
    originals in sup norm.

    Raises
    ------
    MixMinError
        If ``epsilon`` would push an entry to zero or below.
    """
    q = np.atleast_2d(np.asarray(proxies, dtype=np.float64))
    if spec.epsilon == 0:
        return q.copy()
    rng = np.random.default_rng(spec.seed)
    noise = rng.uniform(-1.0, 1.0, size=q.shape)
    noise -= noise.mean(axis=1, keepdims=True)
    scale = np.max(np.abs(noise), axis=1, keepdims=True)
    noise = spec.epsilon * noise / np.where(scale > 0, scale, 1.0)
    out = q + noise
    if np.any(out <= 0):
        raise MixMinError(
            f"epsilon={spec.epsilon} too large: a perturbed probability is not positive"
        )
    return out / out.sum(axis=1, keepdims=True)

