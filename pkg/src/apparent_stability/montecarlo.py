"""Deterministic, parallel Monte Carlo estimators.

Trials are cut into chunks of :data:`CHUNK_SIZE`. Chunk ``i`` draws from its
own PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(i,))``, so the
success count depends only on ``(seed, trials, parameters)`` and never on how
many workers claim the chunks.

Events that depend on a single coordinate (everything decided by the linear
separator ``x1 < 0``) are simulated through the exact one-dimensional marginal
of the uniform ball instead of full n-vectors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .geometry import BallSpec, sample_ball_axis_coordinate, sample_uniform_ball
from .models import (
    BoundsOnlyModelError,
    HalfBallsSpec,
    SurfaceBallModel,
    SurfaceSpec,
    TwoBallsSpec,
    classify_surface,
    sigma_lower_bound,
    surface_distance,
)

__all__ = [
    "CHUNK_SIZE",
    "SEED_SCHEME",
    "Estimate",
    "wilson_interval",
    "chunk_rng",
    "run_chunked",
    "estimate_accuracy",
    "estimate_susceptibility",
    "estimate_random_destabilization",
    "estimate_universality",
    "check_epsilon_stability",
    "estimate_stability_confidence",
]

CHUNK_SIZE = 1024
SEED_SCHEME = "numpy-SeedSequence(seed,spawn_key=(chunk,))/PCG64/chunk1024"
Z95 = float(stats.norm.ppf(0.975))


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4 * trials * trials)) / denom
    # keep p_hat inside the interval against rounding at p in {0, 1}
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


@dataclass(frozen=True)
class Estimate:
    estimator_id: str
    trials: int
    successes: int
    seed: int
    indeterminate: int = 0

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    @property
    def ci_low(self) -> float:
        return self.ci[0]

    @property
    def ci_high(self) -> float:
        return self.ci[1]

    @property
    def sigma(self) -> float:
        """Binomial standard error at ``p_hat``."""
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.trials)

    def dominates_lower(self, bound: float, k: float = 3.0) -> bool:
        return bound <= self.p_hat + k * self.sigma

    def dominates_upper(self, bound: float, k: float = 3.0) -> bool:
        return bound >= self.p_hat - k * self.sigma


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def run_chunked(
    kernel: Callable[[np.random.Generator, int], tuple[int, int]],
    trials: int,
    seed: int,
    workers: int = 1,
) -> tuple[int, int]:
    """Sum ``kernel(rng, count) -> (successes, indeterminate)`` over all chunks."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    chunks = [
        (i, min(CHUNK_SIZE, trials - i * CHUNK_SIZE)) for i in range(math.ceil(trials / CHUNK_SIZE))
    ]

    def one(item):
        i, count = item
        s, u = kernel(chunk_rng(seed, i), count)
        return int(s), int(u)

    if workers == 1 or len(chunks) == 1:
        results = [one(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, chunks))
    return sum(r[0] for r in results), sum(r[1] for r in results)


# ---------------------------------------------------------------------------
# per-model first-coordinate draws


def _check_samplable(model) -> None:
    if isinstance(model, TwoBallsSpec):
        model.require_samplable()
    elif not isinstance(model, (HalfBallsSpec, SurfaceBallModel)):
        raise BoundsOnlyModelError(f"no sampler for model {type(model).__name__}")


def _labelled_first_coords(rng, model, count):
    labels = rng.integers(0, 2, size=count)
    if isinstance(model, TwoBallsSpec):
        y = sample_ball_axis_coordinate(rng, model.dim, model.radius, count)
        x1 = y + np.where(labels == 0, -model.epsilon, model.epsilon)
    else:
        y = np.abs(sample_ball_axis_coordinate(rng, model.dim, 1.0, count))
        x1 = np.where(labels == 0, -1.0, 1.0) * (y + model.epsilon)
    return x1, labels


def _linear(x1):
    return np.where(x1 < 0.0, 0, 1)


def _estimate(estimator_id, kernel, trials, seed, workers) -> Estimate:
    s, u = run_chunked(kernel, trials, seed, workers)
    return Estimate(estimator_id, trials, s, seed, u)


def estimate_accuracy(model, trials: int, seed: int, workers: int = 1) -> Estimate:
    """Fraction of sampled points that the model's classifier labels correctly."""
    _check_samplable(model)
    if isinstance(model, SurfaceBallModel):

        def kernel(rng, count):
            pts, _ = model.sample(rng, count)
            return int(np.sum(classify_surface(model.surface, pts) == 0)), 0

    else:

        def kernel(rng, count):
            x1, labels = _labelled_first_coords(rng, model, count)
            return int(np.sum(_linear(x1) == labels)), 0

    return _estimate("accuracy", kernel, trials, seed, workers)


def estimate_susceptibility(model, delta: float, trials: int, seed: int, workers: int = 1) -> Estimate:
    """Fraction of points for which some perturbation of norm <= delta flips the label.

    Decided analytically. For the linear separator a class-0 point is susceptible
    iff ``x1 + delta >= 0`` and a class-1 point iff ``x1 - delta < 0``. For a
    surface model the point counts as a success when ``d_S(x) > 0`` or
    ``|d_S(x)| <= delta`` (certified), as a failure when the certified distance
    lower bound exceeds ``delta``, and otherwise as indeterminate.
    """
    _check_samplable(model)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if isinstance(model, SurfaceBallModel):
        surf = model.surface

        def kernel(rng, count):
            pts, _ = model.sample(rng, count)
            d = surface_distance(surf, pts)
            certain = (d > 0.0) | (np.abs(d) <= delta)
            safe = ~certain & (sigma_lower_bound(surf, pts) > delta)
            return int(certain.sum()), int(count - certain.sum() - safe.sum())

    else:

        def kernel(rng, count):
            x1, labels = _labelled_first_coords(rng, model, count)
            hit = np.where(labels == 0, x1 + delta >= 0.0, x1 - delta < 0.0)
            return int(hit.sum()), 0

    return _estimate("susceptibility", kernel, trials, seed, workers)


def estimate_random_destabilization(
    model, delta: float, trials: int, seed: int, workers: int = 1
) -> Estimate:
    """Fraction of (point, uniform delta-ball perturbation) pairs that end misclassified."""
    _check_samplable(model)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if isinstance(model, SurfaceBallModel):
        ball = BallSpec.centered(model.dim, delta) if delta > 0 else None

        def kernel(rng, count):
            pts, _ = model.sample(rng, count)
            if ball is not None:
                pts = pts + sample_uniform_ball(rng, ball, count)
            return int(np.sum(classify_surface(model.surface, pts) != 0)), 0

    else:

        def kernel(rng, count):
            x1, labels = _labelled_first_coords(rng, model, count)
            s1 = sample_ball_axis_coordinate(rng, model.dim, delta, count) if delta > 0 else 0.0
            return int(np.sum(_linear(x1 + s1) != labels)), 0

    return _estimate("random_destabilization", kernel, trials, seed, workers)


def estimate_universality(
    model: TwoBallsSpec, gamma: float, trials: int, seed: int, workers: int = 1
) -> Estimate:
    """P(z1 < x1 + gamma) for independent class-0 points x, z.

    When this holds, every perturbation that pushes z past the threshold with
    margin above gamma also misclassifies x. Class 1 is the mirror image.
    """
    if not isinstance(model, TwoBallsSpec):
        raise TypeError("universality is defined for the two-ball model")
    model.require_samplable()
    if gamma <= 0:
        raise ValueError("gamma must be > 0")

    def kernel(rng, count):
        x1 = sample_ball_axis_coordinate(rng, model.dim, model.radius, count) - model.epsilon
        z1 = sample_ball_axis_coordinate(rng, model.dim, model.radius, count) - model.epsilon
        return int(np.sum(z1 < x1 + gamma)), 0

    return _estimate("universality", kernel, trials, seed, workers)


# ---------------------------------------------------------------------------
# stability notions


def _surface_of(model):
    if isinstance(model, SurfaceBallModel):
        return model.surface
    if isinstance(model, SurfaceSpec):
        return model
    return None


def check_epsilon_stability(model, x, eps_test: float):
    """Whether every perturbation in the closed ``eps_test``-ball keeps the label of ``x``.

    Returns True or False, or None when a surface classifier cannot be decided
    from the certified distance interval ``[|d_S| sin(theta), |d_S|]``.
    """
    x = np.asarray(x, dtype=float)
    surf = _surface_of(model)
    if surf is None:
        x1 = float(x[0])
        # class 0 needs x1 + eps < 0; class 1 needs x1 - eps >= 0
        return bool(x1 + eps_test < 0.0) if x1 < 0.0 else bool(x1 >= eps_test)
    if float(sigma_lower_bound(surf, x)) >= eps_test:
        return True
    if abs(float(surface_distance(surf, x))) < eps_test:
        return False
    return None


def estimate_stability_confidence(
    model, x, eps_test: float, trials: int, seed: int, workers: int = 1
) -> Estimate:
    """P(f(x + s) = f(x)) for s uniform on the closed ``eps_test``-ball."""
    x = np.asarray(x, dtype=float)
    if eps_test <= 0:
        raise ValueError("eps_test must be > 0")
    surf = _surface_of(model)
    n = x.size
    if surf is None:
        x1 = float(x[0])
        own = 0 if x1 < 0.0 else 1

        def kernel(rng, count):
            s1 = sample_ball_axis_coordinate(rng, n, eps_test, count)
            return int(np.sum(_linear(x1 + s1) == own)), 0

    else:
        own = classify_surface(surf, x)
        ball = BallSpec.centered(n, eps_test)

        def kernel(rng, count):
            pts = x + sample_uniform_ball(rng, ball, count)
            return int(np.sum(classify_surface(surf, pts) == own)), 0

    return _estimate("stability_confidence", kernel, trials, seed, workers)
