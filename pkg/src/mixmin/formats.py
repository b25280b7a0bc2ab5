"""On-disk formats, target splitting and remix plans.

Predictions are a delimited table plus a JSON manifest::

    sample_id,<source_0>,...,<source_{P-1}>[,y]

Weights, plans and worlds are JSON. Floats are written with ``repr`` (the
shortest string that round-trips), so save/load is lossless. All writes go to
a temporary file that is then renamed over the destination.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from mixmin import __version__
from mixmin.errors import DataFormatError, MixMinError
from mixmin.objectives import LossKind, PredictionMatrix
from mixmin.simplex import MixtureWeights, validate_simplex
from mixmin.solver import SolverTrace


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, data: Any) -> None:
    atomic_write(path, json.dumps(data, indent=2, allow_nan=False) + "\n")


def read_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc


# -- predictions ------------------------------------------------------------


@dataclass(frozen=True)
class Manifest:
    loss_kind: LossKind
    sources: tuple[str, ...]
    score_space: str = "log"
    target_column: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "Manifest":
        try:
            kind = LossKind(data["loss_kind"])
            sources = tuple(data["sources"])
        except KeyError as exc:
            raise DataFormatError(f"manifest missing key {exc.args[0]!r}") from None
        except ValueError as exc:
            raise DataFormatError(f"manifest: {exc}") from None
        space = data.get("score_space", "log" if kind.is_ce else "linear")
        if space not in ("log", "linear"):
            raise DataFormatError(f"manifest: score_space must be 'log' or 'linear', got {space!r}")
        if kind is LossKind.MSE and space == "log":
            raise DataFormatError("manifest: mse predictions are raw values, not log scores")
        target = data.get("target_column")
        if kind is LossKind.MSE and target is None:
            target = "y"
        if kind.is_ce and target is not None:
            raise DataFormatError("manifest: target_column only applies to mse")
        if not sources or len(set(sources)) != len(sources):
            raise DataFormatError("manifest: sources must be distinct and non-empty")
        return cls(kind, sources, space, target)

    def to_dict(self) -> dict:
        out = {
            "loss_kind": self.loss_kind.value,
            "score_space": self.score_space,
            "sources": list(self.sources),
        }
        if self.target_column is not None:
            out["target_column"] = self.target_column
        return out


def load_manifest(path) -> Manifest:
    data = read_json(path)
    if not isinstance(data, dict):
        raise DataFormatError(f"{path}: manifest must be a JSON object")
    return Manifest.from_dict(data)


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"line {line}, column {column!r}: not a number: {text!r}") from None
    if math.isnan(value):
        raise DataFormatError(f"line {line}, column {column!r}: NaN is not allowed")
    return value


def load_predictions(path, manifest_path) -> PredictionMatrix:
    """Read a predictions table, validating it against its manifest.

    Linear-space CE scores are converted to natural logs. Row order is kept.
    """
    manifest = load_manifest(manifest_path)
    expected = ["sample_id", *manifest.sources]
    if manifest.target_column is not None:
        expected.append(manifest.target_column)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file, expected header {expected}")
    header = [h.strip() for h in rows[0]]
    if header != expected:
        raise DataFormatError(f"{path}: header {header} does not match manifest {expected}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise DataFormatError(f"{path}: no samples")

    p = len(manifest.sources)
    scores = np.empty((len(body), p))
    targets = np.empty(len(body)) if manifest.target_column is not None else None
    ids: list[str] = []
    seen: dict[str, int] = {}
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(expected):
            raise DataFormatError(f"line {line}: {len(row)} fields, expected {len(expected)}")
        sid = row[0].strip()
        if sid in seen:
            raise DataFormatError(f"line {line}: duplicate sample_id {sid!r} (first on line {seen[sid]})")
        seen[sid] = line
        ids.append(sid)
        for j, name in enumerate(manifest.sources):
            value = _parse_float(row[j + 1], line, name)
            if manifest.loss_kind.is_ce and manifest.score_space == "linear":
                if not value > 0 or math.isinf(value):
                    raise DataFormatError(
                        f"line {line}, column {name!r}: linear CE score must be positive and finite, got {value!r}"
                    )
                value = math.log(value)
            elif manifest.loss_kind.is_ce:
                if value == math.inf:
                    raise DataFormatError(f"line {line}, column {name!r}: log score is +inf")
            elif math.isinf(value):
                raise DataFormatError(f"line {line}, column {name!r}: prediction is infinite")
            scores[i, j] = value
        if targets is not None:
            y = _parse_float(row[-1], line, manifest.target_column)
            if math.isinf(y):
                raise DataFormatError(f"line {line}, column {manifest.target_column!r}: target is infinite")
            targets[i] = y

    if manifest.loss_kind is LossKind.CE_CONDITIONAL:
        bad = np.argwhere(scores > 0)
        if bad.size:
            i, j = bad[0]
            raise DataFormatError(
                f"line {i + 2}, column {manifest.sources[j]!r}: conditional probability exceeds 1"
            )
    return PredictionMatrix(manifest.loss_kind, scores, targets, tuple(ids), manifest.sources)


def save_predictions(matrix: PredictionMatrix, path, manifest_path) -> None:
    """Write ``matrix`` as a log-space (CE) or raw (MSE) predictions table."""
    if matrix.row_weights is not None:
        raise MixMinError("weighted-row matrices have no predictions-file form")
    target = "y" if matrix.loss_kind is LossKind.MSE else None
    manifest = Manifest(
        matrix.loss_kind,
        matrix.source_ids,
        "log" if matrix.loss_kind.is_ce else "linear",
        target,
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["sample_id", *matrix.source_ids]
    if target:
        header.append(target)
    writer.writerow(header)
    for i, sid in enumerate(matrix.sample_ids):
        row = [sid, *(repr(float(v)) for v in matrix.scores[i])]
        if target:
            row.append(repr(float(matrix.targets[i])))
        writer.writerow(row)
    atomic_write(path, buf.getvalue())
    write_json(manifest_path, manifest.to_dict())


# -- weights ------------------------------------------------------------------


def weights_record(
    weights: MixtureWeights,
    loss_kind: LossKind | str | None,
    method: str,
    params: dict | None = None,
    objective: float | None = None,
    heldout_objective: float | None = None,
) -> dict:
    record = {
        "format": "mixmin-weights",
        "tool_version": __version__,
        "method": method,
        "loss_kind": None if loss_kind is None else LossKind(loss_kind).value,
        "sources": list(weights.source_ids),
        "weights": [float(v) for v in weights.values],
        "params": params or {},
        "objective": objective,
    }
    if heldout_objective is not None:
        record["heldout_objective"] = heldout_objective
    return record


def save_weights(path, record: dict) -> None:
    write_json(path, record)


def load_weights(path) -> tuple[MixtureWeights, dict]:
    """Read a weights file; the weights are validated and returned with the full record."""
    data = read_json(path)
    try:
        sources = data["sources"]
        values = data["weights"]
    except (KeyError, TypeError):
        raise DataFormatError(f"{path}: weights file needs 'sources' and 'weights'") from None
    if len(sources) != len(values):
        raise DataFormatError(f"{path}: {len(values)} weights for {len(sources)} sources")
    try:
        weights = validate_simplex(values, source_ids=sources)
    except MixMinError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    return weights, data


def save_trace(path, trace: SolverTrace) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "objective", "grad_max_norm", *trace.source_ids])
    for step in range(len(trace)):
        writer.writerow([
            step,
            repr(float(trace.objectives[step])),
            repr(float(trace.grad_max_norms[step])),
            *(repr(float(v)) for v in trace.weights[step]),
        ])
    atomic_write(path, buf.getvalue())


# -- target split -----------------------------------------------------------


def split_target(
    matrix: PredictionMatrix, train_fraction: float = 0.8, seed: int = 0
) -> tuple[PredictionMatrix, PredictionMatrix]:
    """Random train/test partition of the target rows.

    The train part gets ``ceil(N * train_fraction)`` rows. Each part keeps
    the original relative row order.
    """
    n = matrix.n_samples
    if not 0 < train_fraction < 1:
        raise MixMinError(f"train fraction must be in (0, 1), got {train_fraction!r}")
    if n < 2:
        raise MixMinError("need at least 2 samples to split")
    n_train = math.ceil(n * train_fraction - 1e-9)
    if not 1 <= n_train <= n - 1:
        raise MixMinError(f"fraction {train_fraction} of {n} samples leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    train = np.sort(perm[:n_train])
    test = np.sort(perm[n_train:])
    return matrix.take(train), matrix.take(test)


# -- resampling plan --------------------------------------------------------


@dataclass(frozen=True)
class ResamplePlan:
    source_ids: tuple[str, ...]
    counts: tuple[int, ...]
    budget: int
    policy: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "format": "mixmin-resample-plan",
            "budget": self.budget,
            "policy": self.policy,
            "seed": self.seed,
            "allocations": [
                {"source": s, "count": c} for s, c in zip(self.source_ids, self.counts)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResamplePlan":
        alloc = data["allocations"]
        plan = cls(
            tuple(a["source"] for a in alloc),
            tuple(int(a["count"]) for a in alloc),
            int(data["budget"]),
            data["policy"],
            int(data["seed"]),
        )
        if sum(plan.counts) != plan.budget or min(plan.counts) < 0:
            raise DataFormatError("plan counts must be nonnegative and sum to the budget")
        return plan


def largest_remainder(weights: Sequence[float], budget: int) -> np.ndarray:
    """Hamilton apportionment of ``budget`` by ``weights``; ties go to the lower index."""
    lam = np.asarray(weights, dtype=np.float64)
    quotas = budget * lam
    counts = np.floor(quotas).astype(np.int64)
    leftover = budget - int(counts.sum())
    order = np.argsort(-(quotas - counts), kind="stable")
    for k in range(leftover):
        counts[order[k % lam.size]] += 1
    return counts


def resample_plan(
    weights: MixtureWeights, budget: int, policy: str = "deterministic", seed: int = 0
) -> ResamplePlan:
    """Integer per-source sample (or token) counts realizing ``weights`` at ``budget``.

    ``deterministic`` uses largest-remainder rounding, so every count is
    within one unit of ``budget * weight``; ``multinomial`` draws the counts.
    """
    if not isinstance(budget, (int, np.integer)) or budget < 1:
        raise MixMinError(f"budget must be a positive integer, got {budget!r}")
    if policy == "deterministic":
        counts = largest_remainder(weights.values, budget)
    elif policy == "multinomial":
        counts = np.random.default_rng(seed).multinomial(budget, weights.values)
    else:
        raise MixMinError(f"unknown policy {policy!r}")
    return ResamplePlan(
        weights.source_ids, tuple(int(c) for c in counts), int(budget), policy, int(seed)
    )
