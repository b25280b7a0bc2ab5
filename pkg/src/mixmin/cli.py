"""Command-line pipeline: proxy scores in, mixture weights out, remix plan.

Exit status is 0 on success, 1 on a usage error and 2 on a data error.
Every random choice is driven by ``--seed`` (default 0).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from mixmin import __version__
from mixmin import formats
from mixmin.baselines import grid_search, random_search, regmix_lite_search, static_mixtures
from mixmin.errors import MixMinError
from mixmin.objectives import objective
from mixmin.simplex import uniform_weights
from mixmin.solver import SolverConfig, exact_expectation_matrix, mixmin_fit
from mixmin.synthworld import (
    CategoricalWorld,
    WorldSpec,
    dm_grid_argmin,
    dm_oracle,
    gen_world,
    sample_target,
    sampled_matrix,
    train_proxies,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_matrix(args):
    return formats.load_predictions(args.predictions, args.manifest)


def _split(matrix, fraction: float, seed: int):
    if fraction >= 1.0:
        return matrix, None
    return formats.split_target(matrix, fraction, seed)


def cmd_fit(args) -> int:
    try:
        config = SolverConfig(eta=args.eta, steps=args.steps, seed=args.seed)
    except MixMinError as exc:
        raise UsageError(str(exc)) from None
    matrix = _load_matrix(args)
    train, test = _split(matrix, args.split, args.seed)
    weights, trace = mixmin_fit(train, config)
    train_obj = objective(train, weights)
    test_obj = None if test is None else objective(test, weights)
    print(f"train_objective: {_fmt(train_obj)}")
    if test_obj is not None:
        print(f"heldout_objective: {_fmt(test_obj)}")
    for name, value in zip(weights.source_ids, weights.values):
        print(f"weight {name}: {_fmt(value)}")
    params = {"eta": args.eta, "steps": args.steps, "seed": args.seed, "split": args.split}
    record = formats.weights_record(
        weights, matrix.loss_kind, "mixmin", params, train_obj, test_obj
    )
    formats.save_weights(args.out, record)
    if args.trace_out:
        formats.save_trace(args.trace_out, trace)
    return EXIT_OK


def cmd_baseline(args) -> int:
    method = args.method
    params: dict = {"seed": args.seed}
    train_obj = test_obj = None
    loss_kind = None
    if method in ("random", "grid", "regmix-lite"):
        if not (args.predictions and args.manifest):
            raise UsageError(f"--method {method} needs --predictions and --manifest")
        matrix = _load_matrix(args)
        loss_kind = matrix.loss_kind
        train, test = _split(matrix, args.split, args.seed)
        params["split"] = args.split
        if method == "random":
            weights, _ = random_search(train, args.candidates, args.seed)
            params["candidates"] = args.candidates
        elif method == "grid":
            if args.resolution is None:
                raise UsageError("--method grid needs --resolution")
            weights, _ = grid_search(train, args.resolution)
            params["resolution"] = args.resolution
        else:
            weights, _ = regmix_lite_search(
                train, args.observations, args.select_candidates, args.seed
            )
            params["observations"] = args.observations
            params["select_candidates"] = args.select_candidates
        train_obj = objective(train, weights)
        test_obj = None if test is None else objective(test, weights)
    elif method == "natural":
        if not args.sizes:
            raise UsageError("--method natural needs --sizes")
        names = _source_names(args, len(args.sizes))
        weights, _ = static_mixtures(args.sizes, names)
        params["sizes"] = list(args.sizes)
    else:
        if args.manifest:
            names = formats.load_manifest(args.manifest).sources
        elif args.sources:
            names = tuple(args.sources)
        elif args.sizes:
            names = _source_names(args, len(args.sizes))
        else:
            raise UsageError("--method balanced needs --manifest, --sources or --sizes")
        weights = uniform_weights(names)

    if train_obj is not None:
        print(f"train_objective: {_fmt(train_obj)}")
    if test_obj is not None:
        print(f"heldout_objective: {_fmt(test_obj)}")
    for name, value in zip(weights.source_ids, weights.values):
        print(f"weight {name}: {_fmt(value)}")
    record = formats.weights_record(weights, loss_kind, method, params, train_obj, test_obj)
    formats.save_weights(args.out, record)
    return EXIT_OK


def _source_names(args, n: int):
    if args.sources:
        if len(args.sources) != n:
            raise UsageError(f"{len(args.sources)} --sources for {n} --sizes")
        return tuple(args.sources)
    if args.manifest:
        names = formats.load_manifest(args.manifest).sources
        if len(names) != n:
            raise UsageError(f"manifest has {len(names)} sources, --sizes has {n}")
        return names
    return None


def cmd_eval(args) -> int:
    weights, _ = formats.load_weights(args.weights)
    matrix = _load_matrix(args)
    if args.part != "all":
        train, test = formats.split_target(matrix, args.split, args.seed)
        matrix = train if args.part == "train" else test
    if weights.source_ids != matrix.source_ids:
        raise MixMinError(
            f"weights cover {list(weights.source_ids)}, predictions have {list(matrix.source_ids)}"
        )
    print(f"objective: {_fmt(objective(matrix, weights))}")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec_data = formats.read_json(args.spec)
    if not isinstance(spec_data, dict):
        raise MixMinError("world spec must be a JSON object")
    try:
        v = int(spec_data["alphabet_size"])
        p = int(spec_data["n_sources"])
    except KeyError as exc:
        raise MixMinError(f"world spec missing key {exc.args[0]!r}") from None
    mw = spec_data.get("mixture_weights")
    seq = np.random.SeedSequence(args.seed)
    world_seed, target_seed, proxy_seed = (int(s.generate_state(1)[0]) for s in seq.spawn(3))
    world = gen_world(WorldSpec(
        v, p,
        concentration=float(spec_data.get("concentration", 1.0)),
        seed=world_seed,
        mixture_weights=None if mw is None else tuple(mw),
        min_mass=float(spec_data.get("min_mass", 0.0)),
    ))
    n_target = int(spec_data.get("n_target", 1000))
    n_proxy = spec_data.get("n_proxy")
    if n_proxy is None:
        proxies = world.sources
    else:
        proxies = train_proxies(world, int(n_proxy), float(spec_data.get("alpha", 1.0)), proxy_seed)
    samples = sample_target(world, n_target, target_seed)
    matrix = sampled_matrix(world, proxies, samples)

    out = Path(args.out_dir)
    record = world.to_dict()
    record["spec"] = spec_data
    record["seed"] = args.seed
    record["proxies"] = np.asarray(proxies).tolist()
    formats.write_json(out / "world.json", record)
    formats.save_predictions(matrix, out / "predictions.csv", out / "manifest.json")
    print(f"wrote {out / 'world.json'}, {out / 'predictions.csv'}, {out / 'manifest.json'}")
    return EXIT_OK


def cmd_resample(args) -> int:
    weights, _ = formats.load_weights(args.weights)
    plan = formats.resample_plan(weights, args.budget, args.policy, args.seed)
    for name, count in zip(plan.source_ids, plan.counts):
        print(f"{name}: {count}")
    formats.write_json(args.out, plan.to_dict())
    return EXIT_OK


def cmd_oracle(args) -> int:
    data = formats.read_json(args.world)
    try:
        world = CategoricalWorld.from_dict(data)
    except KeyError as exc:
        raise MixMinError(f"world file missing key {exc.args[0]!r}") from None
    if args.weights:
        weights, _ = formats.load_weights(args.weights)
        if weights.source_ids != world.source_ids:
            raise MixMinError("weights and world disagree on sources")
        print(f"dm_oracle: {_fmt(dm_oracle(world, weights))}")
        if args.exact_mixmin:
            m = exact_expectation_matrix(world, world.sources)
            print(f"mixmin_objective: {_fmt(objective(m, weights))}")
    else:
        weights, value = dm_grid_argmin(world, args.grid_resolution)
        print("argmin: " + " ".join(_fmt(v) for v in weights.values))
        print(f"dm_oracle: {_fmt(value)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixmin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mixmin {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add_predictions(p, required=True):
        p.add_argument("--predictions", required=required, help="predictions table (CSV)")
        p.add_argument("--manifest", required=required, help="predictions manifest (JSON)")

    p = sub.add_parser("fit", help="fit mixture weights with entropic descent")
    add_predictions(p)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--split", type=float, default=0.8,
                   help="train fraction of the target rows; 1 disables the held-out split")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--trace-out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("baseline", help="pick weights with a comparison method")
    p.add_argument("--method", required=True,
                   choices=["random", "grid", "regmix-lite", "natural", "balanced"])
    add_predictions(p, required=False)
    p.add_argument("--candidates", type=int, default=7, help="random search draws")
    p.add_argument("--resolution", type=float, help="grid spacing, 1/m")
    p.add_argument("--observations", type=int, default=None,
                   help="regmix-lite observed mixtures (default max(7, P+1))")
    p.add_argument("--select-candidates", type=int, default=10_000)
    p.add_argument("--sizes", type=float, nargs="+", help="source sizes for natural")
    p.add_argument("--sources", nargs="+", help="source names")
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="ensemble objective of saved weights")
    p.add_argument("--weights", required=True)
    add_predictions(p)
    p.add_argument("--part", choices=["all", "train", "test"], default="all",
                   help="evaluate on one side of the --split/--seed partition")
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic world and sampled predictions")
    p.add_argument("--spec", required=True, help="world spec (JSON)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("resample", help="turn weights into per-source counts")
    p.add_argument("--weights", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--policy", choices=["deterministic", "multinomial"], default="deterministic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("oracle", help="exact data-mixing loss on a synthetic world")
    p.add_argument("--world", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--weights")
    group.add_argument("--grid-resolution", type=float)
    p.add_argument("--exact-mixmin", action="store_true",
                   help="also print the exact-expectation ensemble objective")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except (MixMinError, OSError) as exc:
        print(f"mixmin: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
