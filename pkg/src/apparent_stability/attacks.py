"""Gradient attack direction on a smoothed linear classifier, and scaling line search.

The smoothed classifier is ``squash(g(x))`` with ``g(x) = e1 . x - offset``.
Gradients are used only to choose a direction; whether an attack succeeds is
always decided by the hard separator ``x1 < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point
from .models import (
    HalfBallsSpec,
    SurfaceBallModel,
    SurfaceSpec,
    TwoBallsSpec,
    classify_linear,
    classify_surface,
    sample_two_balls_batch,
)
from .montecarlo import Estimate, run_chunked

__all__ = [
    "SQUASHES",
    "LOSSES",
    "SmoothClassifier",
    "AttackResult",
    "attack_loss",
    "gradient_attack_direction",
    "scale_grid",
    "line_search_minimal_scale",
    "attack_optimality_check",
]


def _logistic(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _logistic_prime(t):
    # sigma (1 - sigma) written via cosh so it stays positive for large |t|
    return 0.25 / np.cosh(0.5 * t) ** 2


def _arctan_squash(t):
    return 0.5 + np.arctan(t) / math.pi


def _arctan_prime(t):
    return 1.0 / (math.pi * (1.0 + t * t))


# name -> (squash, derivative); each is strictly increasing onto (0, 1) with squash(0) = 1/2
SQUASHES = {
    "logistic": (_logistic, _logistic_prime),
    "arctan": (_arctan_squash, _arctan_prime),
}

# name -> (loss, derivative); each strictly increasing on (0, 1)
LOSSES = {
    "identity": (lambda u: u, lambda u: np.ones_like(u)),
    "squared": (lambda u: u * u, lambda u: 2.0 * u),
    "log": (lambda u: -np.log1p(-u), lambda u: 1.0 / (1.0 - u)),
}


@dataclass(frozen=True)
class SmoothClassifier:
    squash: str = "logistic"
    offset: float = 0.5

    def __post_init__(self) -> None:
        if self.squash not in SQUASHES:
            raise ValueError(f"unknown squash {self.squash!r}; choose from {sorted(SQUASHES)}")

    def g(self, x):
        return np.asarray(x, dtype=float)[..., 0] - self.offset

    def __call__(self, x):
        return SQUASHES[self.squash][0](self.g(x))


@dataclass(frozen=True, eq=False)
class AttackResult:
    direction: Point
    minimal_scale: float | None
    success: bool
    scalings_tested: int


def attack_loss(clf: SmoothClassifier, loss: str, x, label: int):
    """``L(|f~(x) - label|)``; the scalar whose gradient is the attack direction."""
    return LOSSES[loss][0](np.abs(clf(x) - label))


def _gradients(clf: SmoothClassifier, loss: str, x, labels):
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; choose from {sorted(LOSSES)}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    labels = np.broadcast_to(np.asarray(labels), x.shape[:1])
    squash, squash_prime = SQUASHES[clf.squash]
    t = clf.g(x)
    value = squash(t)
    sign = np.where(labels == 0, 1.0, -1.0)  # d|f~ - l| / d f~
    u = np.abs(value - labels)
    coeff = LOSSES[loss][1](u) * sign * squash_prime(t)
    grads = np.zeros_like(x)
    grads[:, 0] = coeff  # g is affine with gradient e1
    return grads


def gradient_attack_direction(clf: SmoothClassifier, loss: str, x, label: int) -> Point:
    """Unit-normalised gradient of ``L(|f~(x) - label|)`` with respect to ``x``."""
    if label not in (0, 1):
        raise ValueError("label must be 0 or 1")
    grad = _gradients(clf, loss, x, label)[0]
    norm = float(np.linalg.norm(grad))
    assert norm > 0.0, "zero gradient: squash or loss derivative underflowed"
    return grad / norm


def _hard_classifier(model):
    if isinstance(model, SurfaceBallModel):
        model = model.surface
    if isinstance(model, SurfaceSpec):
        return lambda pts: classify_surface(model, pts)
    if model is None or isinstance(model, (TwoBallsSpec, HalfBallsSpec)):
        return classify_linear
    raise TypeError(f"no classifier for model {type(model).__name__}")


def scale_grid(max_scale: float, num_scalings: int) -> np.ndarray:
    """``num_scalings`` equally spaced scales on ``[0, max_scale]``, both ends included."""
    if num_scalings < 2:
        raise ValueError("num_scalings must be >= 2")
    if max_scale <= 0:
        raise ValueError("max_scale must be > 0")
    return np.linspace(0.0, max_scale, num_scalings)


def line_search_minimal_scale(
    model, x, label: int, direction, max_scale: float = 5.0, num_scalings: int = 100
) -> AttackResult:
    """Smallest grid scale ``c`` with ``f(x + c * direction) != label``."""
    direction = np.asarray(direction, dtype=float)
    if abs(float(np.linalg.norm(direction)) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    scales = scale_grid(max_scale, num_scalings)
    classify = _hard_classifier(model)
    trial = np.asarray(x, dtype=float) + np.multiply.outer(scales, direction)
    flipped = np.nonzero(np.asarray(classify(trial)) != label)[0]
    if flipped.size == 0:
        return AttackResult(direction, None, False, num_scalings)
    return AttackResult(direction, float(scales[flipped[0]]), True, num_scalings)


def attack_optimality_check(
    model: TwoBallsSpec,
    trials: int,
    seed: int,
    clf: SmoothClassifier | None = None,
    loss: str = "squared",
    max_scale: float = 5.0,
    num_scalings: int = 100,
    workers: int = 1,
) -> Estimate:
    """Fraction of sampled points where the gradient line search is as short as the best possible.

    The comparison scale is ``|x1|`` rounded up to the same scaling grid, i.e.
    the grid-quantised distance to the decision plane.
    """
    if not isinstance(model, TwoBallsSpec):
        raise TypeError("attack optimality is checked on the two-ball model")
    clf = clf or SmoothClassifier()
    scales = scale_grid(max_scale, num_scalings)

    def kernel(rng, count):
        pts, labels = sample_two_balls_batch(rng, model, count)
        grads = _gradients(clf, loss, pts, labels)
        dirs = grads / np.linalg.norm(grads, axis=1, keepdims=True)
        # hard decisions along the ray depend only on the first coordinate
        ray = pts[:, :1] + scales[None, :] * dirs[:, :1]
        flipped = _hard_first(ray) != labels[:, None]
        found = flipped.any(axis=1)
        found_scale = np.where(found, scales[np.argmax(flipped, axis=1)], np.inf)
        dist = np.abs(pts[:, 0])
        idx = np.searchsorted(scales, dist, side="left")
        quantised = np.where(idx < scales.size, scales[np.minimum(idx, scales.size - 1)], np.inf)
        return int(np.sum(found_scale <= quantised)), 0

    s, u = run_chunked(kernel, trials, seed, workers)
    return Estimate("attack_optimality", trials, s, seed, u)


def _hard_first(x1):
    return np.where(x1 < 0.0, 0, 1)
