"""Experiment configuration: strict YAML/JSON parsing with line-numbered diagnostics.

A config file is a YAML mapping (JSON is valid YAML, so emitted run manifests
parse too). Unknown keys are errors. Anything not given is filled from the
recipe's defaults, so a parsed config is always fully concrete.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RECIPES",
    "ESTIMATORS",
    "MODELS",
    "DEFAULT_DIMS",
    "DEFAULT_DELTAS",
    "DEFAULT_GAMMAS",
    "DEFAULT_SEED",
    "parse_config",
    "config_from_mapping",
]

RECIPES = ("fig4a", "fig4b", "fig6", "figE", "simulate", "bounds", "attack")
ESTIMATORS = (
    "accuracy",
    "susceptibility",
    "random_destabilization",
    "universality",
    "attack_optimality",
)
MODELS = ("two_balls", "half_balls")

DEFAULT_DIMS = (2, 10, 50, 100, 500, 1000, 2000, 5000, 10000)
DEFAULT_DELTAS = (0.1, 0.25, 0.5, 1.0, 2.5)
DEFAULT_GAMMAS = (0.2, 0.5, 1.0)
DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 20230101

# recipe -> defaults for fields the recipe pins down
_RECIPE_DEFAULTS: dict[str, dict[str, Any]] = {
    "fig4a": dict(model="two_balls", estimator="accuracy", epsilons=(0.05,), deltas=(), gammas=()),
    "fig4b": dict(model="two_balls", estimator="random_destabilization", epsilons=(0.05,), gammas=()),
    "fig6": dict(model="half_balls", estimator="random_destabilization", epsilons=(0.0,), gammas=()),
    "figE": dict(
        model="half_balls",
        estimator="random_destabilization",
        epsilons=(0.01, 0.05),
        deltas=(0.1, 0.25, 0.5),
        gammas=(),
    ),
    "simulate": dict(model="two_balls", estimator="accuracy", epsilons=(0.05,)),
    "bounds": dict(model="two_balls", estimator="accuracy", epsilons=(0.05,)),
    "attack": dict(model="two_balls", estimator="attack_optimality", dims=(100,), epsilons=(0.05,), deltas=(), gammas=()),
}


class ConfigError(ValueError):
    """Invalid configuration; the message carries ``source:line`` when known."""


@dataclass(frozen=True)
class ExperimentConfig:
    recipe: str
    model: str = "two_balls"
    estimator: str = "accuracy"
    dims: tuple[int, ...] = DEFAULT_DIMS
    epsilons: tuple[float, ...] = (0.05,)
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    growth_a: float = 1.0
    trials: int = DEFAULT_TRIALS
    seed: int | None = None
    workers: int = 1
    output: str = ""
    strict: bool = False
    max_scale: float = 5.0
    num_scalings: int = 100

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_MANIFEST_KEYS = {"recipe", "config", "seed_scheme", "tool_version", "created", "files", "notes"}


def _where(source: str | None, line: int | None) -> str:
    if source is None:
        return ""
    return f"{source}:{line}: " if line else f"{source}: "


def _lines_of(node) -> tuple[dict[str, int], dict[tuple[str, int], int]]:
    """Line numbers (1-based) of mapping keys and of sequence items."""
    keys: dict[str, int] = {}
    items: dict[tuple[str, int], int] = {}
    if not isinstance(node, yaml.MappingNode):
        return keys, items
    for k, v in node.value:
        name = str(k.value)
        keys[name] = k.start_mark.line + 1
        if isinstance(v, yaml.SequenceNode):
            for i, item in enumerate(v.value):
                items[(name, i)] = item.start_mark.line + 1
    return keys, items


def _coerce_seq(name, value, kind, where):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{where(name)}{name} must be a list")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where(name, i)}{name}[{i}] must be a number, got {v!r}")
        if kind is int:
            if int(v) != v:
                raise ConfigError(f"{where(name, i)}{name}[{i}] must be an integer, got {v!r}")
            v = int(v)
        else:
            v = float(v)
        out.append(v)
    return tuple(out)


def config_from_mapping(
    data: dict[str, Any],
    source: str | None = None,
    key_lines: dict[str, int] | None = None,
    item_lines: dict[tuple[str, int], int] | None = None,
) -> ExperimentConfig:
    """Validate ``data`` and fill recipe defaults."""
    key_lines = key_lines or {}
    item_lines = item_lines or {}

    def where(name, index=None):
        line = item_lines.get((name, index)) if index is not None else None
        return _where(source, line or key_lines.get(name))

    if not isinstance(data, dict):
        raise ConfigError(f"{_where(source, 1)}config must be a mapping")
    for key in data:
        if key not in _FIELDS:
            raise ConfigError(f"{where(key)}unknown key {key!r}; allowed: {sorted(_FIELDS)}")
    recipe = data.get("recipe")
    if recipe not in RECIPES:
        raise ConfigError(f"{where('recipe')}recipe must be one of {list(RECIPES)}, got {recipe!r}")

    values: dict[str, Any] = {"recipe": recipe}
    values.update(_RECIPE_DEFAULTS[recipe])
    for key, value in data.items():
        if key == "recipe":
            continue
        if value is None:
            if key in ("seed",):
                values[key] = None
                continue
            raise ConfigError(f"{where(key)}{key} must not be null")
        if key == "dims":
            values[key] = _coerce_seq(key, value, int, where)
        elif key in ("epsilons", "deltas", "gammas"):
            values[key] = _coerce_seq(key, value, float, where)
        elif key in ("trials", "workers", "num_scalings", "seed"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{where(key)}{key} must be an integer, got {value!r}")
            values[key] = value
        elif key in ("growth_a", "max_scale"):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{where(key)}{key} must be a number, got {value!r}")
            values[key] = float(value)
        elif key == "strict":
            if not isinstance(value, bool):
                raise ConfigError(f"{where(key)}strict must be true or false")
            values[key] = value
        else:
            if not isinstance(value, str):
                raise ConfigError(f"{where(key)}{key} must be a string, got {value!r}")
            values[key] = value
    if not values.get("output"):
        values["output"] = f"results/{recipe}"
    if values.get("seed") is None and recipe != "simulate":
        values["seed"] = DEFAULT_SEED
    cfg = ExperimentConfig(**values)
    _validate(cfg, where)
    return cfg


def _validate(cfg: ExperimentConfig, where) -> None:
    if cfg.model not in MODELS:
        raise ConfigError(f"{where('model')}model must be one of {list(MODELS)}, got {cfg.model!r}")
    if cfg.estimator not in ESTIMATORS:
        raise ConfigError(
            f"{where('estimator')}estimator must be one of {list(ESTIMATORS)}, got {cfg.estimator!r}"
        )
    if not cfg.dims:
        raise ConfigError(f"{where('dims')}dims must be non-empty")
    for i, n in enumerate(cfg.dims):
        if n < 1:
            raise ConfigError(f"{where('dims', i)}dims[{i}] must be >= 1")
    if not cfg.epsilons:
        raise ConfigError(f"{where('epsilons')}epsilons must be non-empty")
    for i, e in enumerate(cfg.epsilons):
        if e < 0:
            raise ConfigError(f"{where('epsilons', i)}epsilons[{i}] must be >= 0")
    for name in ("trials", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{where(name)}{name} must be >= 1")
    if cfg.num_scalings < 2:
        raise ConfigError(f"{where('num_scalings')}num_scalings must be >= 2")
    if cfg.max_scale <= 0:
        raise ConfigError(f"{where('max_scale')}max_scale must be > 0")
    if cfg.growth_a < 1:
        raise ConfigError(f"{where('growth_a')}growth_a must be >= 1")
    if cfg.recipe != "bounds" and cfg.growth_a != 1.0:
        raise ConfigError(
            f"{where('growth_a')}growth_a > 1 is bounds-only; sampling needs growth_a = 1"
        )
    if cfg.recipe == "simulate" and cfg.seed is None:
        raise ConfigError(f"{_where(None, None)}simulate needs a seed (config key or --seed)")
    if cfg.recipe == "bounds":
        return

    est, model = cfg.estimator, cfg.model
    if est == "universality":
        if model != "two_balls":
            raise ConfigError(f"{where('model')}universality is defined for two_balls only")
        if not cfg.gammas:
            raise ConfigError(f"{where('gammas')}universality needs gammas")
        for i, g in enumerate(cfg.gammas):
            if not 0.0 < g <= 1.0:
                raise ConfigError(f"{where('gammas', i)}gammas[{i}]={g}: universality needs 0 < gamma <= 1")
    if est in ("susceptibility", "random_destabilization") and not cfg.deltas:
        raise ConfigError(f"{where('deltas')}{est} needs deltas")
    for i, d in enumerate(cfg.deltas if est in ("susceptibility", "random_destabilization") else ()):
        for e in cfg.epsilons:
            if est == "random_destabilization":
                if model == "two_balls" and not d > e:
                    raise ConfigError(
                        f"{where('deltas', i)}random-destabilisation bound requires delta > eps >= 0, "
                        f"got eps={e}, delta={d}"
                    )
                if model == "half_balls" and not d > e:
                    raise ConfigError(
                        f"{where('deltas', i)}half-ball random-destabilisation requires delta > eps, "
                        f"got eps={e}, delta={d}"
                    )
            else:
                if model == "two_balls" and not e <= d <= 1.0 + e:
                    raise ConfigError(
                        f"{where('deltas', i)}susceptibility bound requires eps <= delta <= 1 + eps, "
                        f"got eps={e}, delta={d}"
                    )
                if model == "half_balls" and not (d > e and d - e <= 1.0):
                    raise ConfigError(
                        f"{where('deltas', i)}half-ball susceptibility requires delta > eps and "
                        f"delta - eps <= 1, got eps={e}, delta={d}"
                    )
    if est == "accuracy" and model == "two_balls":
        for i, e in enumerate(cfg.epsilons):
            if e >= 1.0:
                raise ConfigError(f"{where('epsilons', i)}accuracy bound requires eps < 1, got {e}")
    if est == "attack_optimality" and model != "two_balls":
        raise ConfigError(f"{where('model')}attack optimality is checked on two_balls only")


def parse_config(path: str | Path) -> ExperimentConfig:
    """Parse a config file, or re-parse the config embedded in a run manifest."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    source = str(path)
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{_where(source, line)}malformed config: {exc}") from exc
    if node is None:
        raise ConfigError(f"{source}: config is empty")
    if isinstance(data, dict) and "config" in data and "tool_version" in data:
        extra = set(data) - _MANIFEST_KEYS
        if extra:
            raise ConfigError(f"{source}: unknown manifest keys {sorted(extra)}")
        inner = next(v for k, v in node.value if k.value == "config")
        key_lines, item_lines = _lines_of(inner)
        return config_from_mapping(data["config"], source, key_lines, item_lines)
    key_lines, item_lines = _lines_of(node)
    return config_from_mapping(data, source, key_lines, item_lines)
