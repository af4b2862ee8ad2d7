"""Command line entry point: ``apparent-stability {bounds,simulate,attack,figure}``."""

from __future__ import annotations

import argparse
import sys

from .config import RECIPES, ConfigError, config_from_mapping, parse_config
from .harness import FIGURES, run

# flag dest -> config key
_OVERRIDES = (
    "model",
    "estimator",
    "dims",
    "epsilons",
    "deltas",
    "gammas",
    "growth_a",
    "trials",
    "seed",
    "workers",
    "output",
    "strict",
    "max_scale",
    "num_scalings",
)


def _add_common(p: argparse.ArgumentParser, sampling: bool = True) -> None:
    p.add_argument("--config", help="YAML or JSON config file (a run manifest also works)")
    p.add_argument("--dims", type=int, nargs="+", metavar="N")
    p.add_argument("--epsilons", type=float, nargs="+", metavar="EPS")
    p.add_argument("--output", help="output directory")
    if sampling:
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument(
            "--strict",
            action="store_true",
            default=None,
            help="exit with status 1 if any row fails its 3-sigma dominance check",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apparent-stability",
        description="High-dimensional robustness bounds and Monte Carlo checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate closed-form bounds over a grid (no sampling)")
    _add_common(p, sampling=False)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--gammas", type=float, nargs="+")
    p.add_argument("--growth-a", dest="growth_a", type=float)

    p = sub.add_parser("simulate", help="Monte Carlo estimates with matching bounds")
    _add_common(p)
    p.add_argument("--model", choices=("two_balls", "half_balls"))
    p.add_argument(
        "--estimator",
        choices=("accuracy", "susceptibility", "random_destabilization", "universality"),
    )
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--gammas", type=float, nargs="+")

    p = sub.add_parser("attack", help="gradient attack optimality check")
    _add_common(p)
    p.add_argument("--max-scale", dest="max_scale", type=float)
    p.add_argument("--num-scalings", dest="num_scalings", type=int)

    p = sub.add_parser("figure", help="reproduce a synthetic figure")
    p.add_argument("recipe", nargs="?", choices=FIGURES)
    _add_common(p)
    p.add_argument("--deltas", type=float, nargs="+")
    return parser


def _resolve(args: argparse.Namespace):
    recipe = args.command if args.command != "figure" else args.recipe
    base: dict = {}
    if args.config:
        base = parse_config(args.config).to_dict()
        if recipe is None:
            recipe = base["recipe"]
        elif base["recipe"] != recipe:
            raise ConfigError(
                f"{args.config}: config recipe {base['recipe']!r} does not match {recipe!r}"
            )
    if recipe is None:
        raise ConfigError("figure needs a recipe name or a --config naming one")
    assert recipe in RECIPES
    base["recipe"] = recipe
    for key in _OVERRIDES:
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    return config_from_mapping(base)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = run(cfg)
    for path in result.files:
        print(path)
    print(result.manifest)
    failures = result.dominance_failures
    if failures:
        for row in failures:
            print(
                f"dominance failed: {row.estimator_id} n={row.n} eps={row.epsilon!r} "
                f"param={row.delta_or_gamma!r} p_hat={row.p_hat!r} bound={row.bound_value!r}",
                file=sys.stderr,
            )
        if cfg.strict:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
