"""Experiment recipes: grid sweeps over estimators and bounds, written as CSV plus a JSON manifest.

Each curve (fixed epsilon and delta/gamma, varying n) goes to its own CSV file.
Rows follow grid order. Every cell uses the config seed, so curves share
random numbers across n and across delta.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .attacks import attack_optimality_check
from .bounds import (
    BoundDomainError,
    BoundValue,
    LOWER,
    accuracy_bound,
    halfball_susceptibility_bound,
    halfball_undetectability_bound,
    smac_corollary_bounds,
    susceptibility_bound,
    undetectability_bound,
    universality_bound,
)
from .config import DEFAULT_DELTAS, ExperimentConfig
from .models import HalfBallsSpec, TwoBallsSpec
from .montecarlo import (
    SEED_SCHEME,
    Estimate,
    estimate_accuracy,
    estimate_random_destabilization,
    estimate_susceptibility,
    estimate_universality,
)

__all__ = [
    "COLUMNS",
    "ResultRow",
    "RunResult",
    "run",
    "run_figure",
    "run_simulate",
    "run_attack",
    "run_bounds_table",
    "bound_for",
    "write_rows",
]

COLUMNS = (
    "estimator_id",
    "n",
    "epsilon",
    "delta_or_gamma",
    "trials",
    "successes",
    "p_hat",
    "ci_low",
    "ci_high",
    "bound_value",
    "bound_kind",
    "dominance_ok",
    "seed",
)

FIGURES = ("fig4a", "fig4b", "fig6", "figE")


@dataclass(frozen=True)
class ResultRow:
    estimator_id: str
    n: int
    epsilon: float
    delta_or_gamma: float | None = None
    trials: int | None = None
    successes: int | None = None
    p_hat: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    bound_value: float | None = None
    bound_kind: str | None = None
    dominance_ok: bool | None = None
    seed: int | None = None

    @classmethod
    def from_estimate(
        cls, est: Estimate, n: int, eps: float, dg: float | None, bound: BoundValue | None
    ) -> "ResultRow":
        ok = None
        if bound is not None:
            ok = est.dominates_lower(bound.value) if bound.kind == LOWER else est.dominates_upper(bound.value)
        lo, hi = est.ci
        return cls(
            est.estimator_id,
            n,
            eps,
            dg,
            est.trials,
            est.successes,
            est.p_hat,
            lo,
            hi,
            None if bound is None else bound.value,
            None if bound is None else bound.kind,
            ok,
            est.seed,
        )

    def cells(self) -> list[str]:
        out = []
        for name in COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("true" if v else "false")
            else:
                out.append(repr(v) if isinstance(v, float) else str(v))
        return out


@dataclass
class RunResult:
    config: ExperimentConfig
    files: list[Path] = field(default_factory=list)
    rows: dict[str, list[ResultRow]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    manifest: Path | None = None

    @property
    def dominance_failures(self) -> list[ResultRow]:
        return [r for rows in self.rows.values() for r in rows if r.dominance_ok is False]


def write_rows(path: Path, rows: list[ResultRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(row.cells())


def _model(cfg: ExperimentConfig, n: int, eps: float):
    if cfg.model == "half_balls":
        return HalfBallsSpec(n, eps)
    return TwoBallsSpec(n, eps, growth_a=cfg.growth_a)


def bound_for(model: str, estimator: str, n: int, eps: float, dg: float | None, a: float = 1.0):
    """The closed-form bound paired with an estimator, or None when there is none for these parameters."""
    try:
        if model == "two_balls":
            if estimator == "accuracy":
                return accuracy_bound(n, eps, a)
            if estimator == "susceptibility":
                return susceptibility_bound(n, eps, dg, a)
            if estimator == "random_destabilization":
                return undetectability_bound(n, eps, dg, a)
            if estimator == "universality":
                return universality_bound(n, dg, a)
        elif model == "half_balls":
            if estimator == "susceptibility":
                return halfball_susceptibility_bound(n, eps, dg)
            if estimator == "random_destabilization":
                return halfball_undetectability_bound(n, eps, dg)
    except BoundDomainError:
        return None
    return None


def _estimate(cfg: ExperimentConfig, n: int, eps: float, dg: float | None) -> Estimate:
    model = _model(cfg, n, eps)
    kw = dict(trials=cfg.trials, seed=cfg.seed, workers=cfg.workers)
    if cfg.estimator == "accuracy":
        return estimate_accuracy(model, **kw)
    if cfg.estimator == "susceptibility":
        return estimate_susceptibility(model, dg, **kw)
    if cfg.estimator == "random_destabilization":
        return estimate_random_destabilization(model, dg, **kw)
    if cfg.estimator == "universality":
        return estimate_universality(model, dg, **kw)
    if cfg.estimator == "attack_optimality":
        return attack_optimality_check(
            model, max_scale=cfg.max_scale, num_scalings=cfg.num_scalings, **kw
        )
    raise ValueError(f"unknown estimator {cfg.estimator!r}")


def _curve_params(cfg: ExperimentConfig) -> list[tuple[float, float | None]]:
    if cfg.estimator in ("accuracy", "attack_optimality"):
        return [(e, None) for e in cfg.epsilons]
    grid = cfg.gammas if cfg.estimator == "universality" else cfg.deltas
    return [(e, d) for e in cfg.epsilons for d in grid]


def _curve_name(prefix: str, eps: float, dg: float | None, estimator: str) -> str:
    name = f"{prefix}_eps{eps:g}"
    if dg is not None:
        name += f"_{'gamma' if estimator == 'universality' else 'delta'}{dg:g}"
    return name + ".csv"


def _sweep(cfg: ExperimentConfig, prefix: str, with_bounds: bool = True) -> RunResult:
    result = RunResult(cfg)
    out = Path(cfg.output)
    for eps, dg in _curve_params(cfg):
        rows = []
        for n in cfg.dims:
            est = _estimate(cfg, n, eps, dg)
            bound = bound_for(cfg.model, cfg.estimator, n, eps, dg, cfg.growth_a) if with_bounds else None
            rows.append(ResultRow.from_estimate(est, n, eps, dg, bound))
        name = _curve_name(prefix, eps, dg, cfg.estimator)
        write_rows(out / name, rows)
        result.files.append(out / name)
        result.rows[name] = rows
    return result


def run_figure(cfg: ExperimentConfig) -> RunResult:
    """Reproduce one of the synthetic figures: one CSV per curve."""
    if cfg.recipe not in FIGURES:
        raise ValueError(f"unknown figure recipe {cfg.recipe!r}; choose from {list(FIGURES)}")
    result = _sweep(cfg, cfg.recipe)
    if cfg.recipe in ("fig4b", "fig6") and cfg.deltas == DEFAULT_DELTAS:
        result.notes.append(
            "delta grid is the default choice {0.1, 0.25, 0.5, 1.0, 2.5}; 2.5 is the large-perturbation case, the rest fill in the curve"
        )
    if cfg.recipe == "fig6":
        result.notes.append("epsilon = 0 half-ball run has no closed-form bound; bound columns are empty")
    return result


def run_simulate(cfg: ExperimentConfig) -> RunResult:
    return _sweep(cfg, cfg.estimator)


def run_attack(cfg: ExperimentConfig) -> RunResult:
    result = _sweep(cfg, "attack_optimality", with_bounds=False)
    result.notes.append(
        f"optimality compares the gradient line search against |x1| rounded up to the "
        f"{cfg.num_scalings}-point scaling grid on [0, {cfg.max_scale:g}]"
    )
    return result


def _bound_row(bound: BoundValue, n: int, eps: float, dg: float | None) -> ResultRow:
    return ResultRow(bound.theorem_id, n, eps, dg, bound_value=bound.value, bound_kind=bound.kind)


def run_bounds_table(cfg: ExperimentConfig) -> RunResult:
    """Every applicable closed-form bound over the grid; no sampling.

    A cell outside a bound's domain gets an empty value with kind ``domain_error``
    and a note; it does not stop the table. ``reduction:*`` rows hold the
    difference between the flat-surface corollary at ``r = 1, eta = eps`` and the
    matching two-ball bound.
    """
    result = RunResult(cfg)
    a = cfg.growth_a
    rows: list[ResultRow] = []

    def add(theorem_id, fn, n, eps, dg):
        try:
            rows.append(_bound_row(fn(), n, eps, dg))
        except BoundDomainError as exc:
            rows.append(ResultRow(theorem_id, n, eps, dg, bound_kind="domain_error"))
            result.notes.append(f"{theorem_id} n={n} eps={eps!r} param={dg!r}: {exc}")

    def reduction(name, corollary, theorem, n, eps, dg):
        try:
            diff = corollary().raw - theorem().raw
        except BoundDomainError as exc:
            rows.append(ResultRow(f"reduction:{name}", n, eps, dg, bound_kind="domain_error"))
            result.notes.append(f"reduction:{name} n={n} eps={eps!r} param={dg!r}: {exc}")
            return
        rows.append(ResultRow(f"reduction:{name}", n, eps, dg, bound_value=diff, bound_kind="difference"))

    for n in cfg.dims:
        for eps in cfg.epsilons:
            add("accuracy", lambda: accuracy_bound(n, eps, a), n, eps, None)
            reduction(
                "smac_accuracy",
                lambda: smac_corollary_bounds(n, eps, 1.0, a=a, which="accuracy"),
                lambda: accuracy_bound(n, eps, a),
                n, eps, None,
            )
            for d in cfg.deltas:
                add("susceptibility", lambda: susceptibility_bound(n, eps, d, a), n, eps, d)
                add("random_destabilization", lambda: undetectability_bound(n, eps, d, a), n, eps, d)
                add("halfball_susceptibility", lambda: halfball_susceptibility_bound(n, eps, d), n, eps, d)
                add(
                    "halfball_random_destabilization",
                    lambda: halfball_undetectability_bound(n, eps, d),
                    n, eps, d,
                )
                reduction(
                    "smac_susceptibility",
                    lambda: smac_corollary_bounds(n, eps, 1.0, d, a, "susceptibility"),
                    lambda: susceptibility_bound(n, eps, d, a),
                    n, eps, d,
                )
                reduction(
                    "smac_random_destabilization",
                    lambda: smac_corollary_bounds(n, eps, 1.0, d, a, "undetectability"),
                    lambda: undetectability_bound(n, eps, d, a),
                    n, eps, d,
                )
        for g in cfg.gammas:
            add("universality", lambda: universality_bound(n, g, a), n, None, g)

    out = Path(cfg.output) / "bounds.csv"
    write_rows(out, rows)
    result.files.append(out)
    result.rows[out.name] = rows
    return result


def _write_manifest(result: RunResult) -> Path:
    cfg = result.config
    manifest = {
        "recipe": cfg.recipe,
        "config": cfg.to_dict(),
        "seed_scheme": SEED_SCHEME,
        "tool_version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "files": [p.name for p in result.files],
        "notes": result.notes,
    }
    path = Path(cfg.output) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def run(cfg: ExperimentConfig) -> RunResult:
    """Dispatch on ``cfg.recipe``, write all CSVs and the manifest."""
    if cfg.recipe in FIGURES:
        result = run_figure(cfg)
    elif cfg.recipe == "simulate":
        result = run_simulate(cfg)
    elif cfg.recipe == "attack":
        result = run_attack(cfg)
    elif cfg.recipe == "bounds":
        result = run_bounds_table(cfg)
    else:
        raise ValueError(f"unknown recipe {cfg.recipe!r}")
    for row in result.dominance_failures:
        result.notes.append(
            f"dominance failed: {row.estimator_id} n={row.n} eps={row.epsilon!r} "
            f"param={row.delta_or_gamma!r} p_hat={row.p_hat!r} bound={row.bound_value!r}"
        )
    result.manifest = _write_manifest(result)
    return result
