"""Ball and spherical-cap volumes, and exact uniform samplers for balls and half-balls.

Points are plain 1-D ``numpy`` float arrays. Batched samplers return arrays of
shape ``(size, n)``. Every ``(1 - x^2)^(n/2)`` style quantity is evaluated in
log-space so that dimensions of 10^5 and beyond neither underflow nor lose
relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

Point = np.ndarray

__all__ = [
    "Point",
    "BallSpec",
    "CapQuery",
    "basis_vector",
    "log_unit_ball_volume",
    "cap_fraction_exact",
    "cap_fractions",
    "cap_fraction_bound",
    "log_cap_fraction_bound",
    "sample_uniform_ball",
    "sample_uniform_half_ball",
    "sample_ball_axis_coordinate",
]

UNIT_NORMAL_TOL = 1e-12


def _check_dim(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def basis_vector(n: int, index: int = 0) -> Point:
    """Canonical basis vector e_{index+1} in R^n."""
    e = np.zeros(_check_dim(n))
    e[index] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class BallSpec:
    center: Point
    radius: float = 1.0

    def __post_init__(self) -> None:
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("ball center must be a non-empty 1-D vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("ball center must be finite")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"ball radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.size

    @classmethod
    def centered(cls, n: int, radius: float = 1.0) -> "BallSpec":
        return cls(np.zeros(_check_dim(n)), radius)


@dataclass(frozen=True)
class CapQuery:
    """Cap of height ``height`` cut from an ``dim``-ball of radius ``radius``.

    The height is measured along the axis from the cutting plane to the sphere,
    so a cap with ``height > radius`` is more than half the ball.
    """

    dim: int
    radius: float
    height: float

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"cap radius must be positive, got {self.radius!r}")
        if not (0.0 <= self.height <= 2.0 * self.radius):
            raise ValueError(
                f"cap height must lie in [0, 2r] = [0, {2 * self.radius}], got {self.height!r}"
            )


def log_unit_ball_volume(n: int) -> float:
    """Natural log of the volume of the unit ball in R^n."""
    n = _check_dim(n)
    return 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)


def _half_cap_fraction(n: int, rel_height: float) -> float:
    # Fraction of the ball in a cap of relative height h/r <= 1:
    # 0.5 * I_{1-(1-h/r)^2}((n+1)/2, 1/2).
    u = 1.0 - rel_height
    x = (1.0 - u) * (1.0 + u)
    return 0.5 * float(special.betainc(0.5 * (n + 1), 0.5, x))


def cap_fraction_exact(q: CapQuery) -> float:
    """Exact fraction of the ball's volume that lies in the cap ``q``."""
    rel = q.height / q.radius
    if rel <= 1.0:
        return _half_cap_fraction(q.dim, rel)
    # caps taller than a hemisphere are complements of the opposite cap
    return 1.0 - _half_cap_fraction(q.dim, 2.0 - rel)


def cap_fractions(n: int, radius: float, heights) -> np.ndarray:
    """Vectorised :func:`cap_fraction_exact` over an array of heights in [0, 2r]."""
    n = _check_dim(n)
    rel = np.asarray(heights, dtype=float) / radius
    if np.any(rel < 0.0) or np.any(rel > 2.0):
        raise ValueError("cap heights must lie in [0, 2r]")
    small = np.minimum(rel, 2.0 - rel)
    u = 1.0 - small
    half = 0.5 * special.betainc(0.5 * (n + 1), 0.5, (1.0 - u) * (1.0 + u))
    return np.where(rel <= 1.0, half, 1.0 - half)


def log_cap_fraction_bound(q: CapQuery) -> float:
    """Log of the hemisphere-envelope bound ``0.5 * (1 - (1 - h/r)^2)^(n/2)``."""
    if not (0.0 < q.height <= q.radius):
        raise ValueError(
            f"cap bound needs 0 < h <= r, got h={q.height!r}, r={q.radius!r}"
        )
    u = 1.0 - q.height / q.radius
    log_base = math.log1p(-u * u) if u < 0.5 else math.log((1.0 - u) * (1.0 + u))
    return math.log(0.5) + 0.5 * q.dim * log_base


def cap_fraction_bound(q: CapQuery) -> float:
    """Upper bound on :func:`cap_fraction_exact` valid for caps no taller than r."""
    return math.exp(log_cap_fraction_bound(q))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_uniform_ball(rng, spec: BallSpec, size: int | None = None) -> Point:
    """Uniform draw(s) from the solid ball ``spec``.

    Direction is a normalised isotropic Gaussian, radius is ``r * U**(1/n)``.
    Returns shape ``(n,)`` when ``size`` is None, else ``(size, n)``.
    """
    rng = _as_generator(rng)
    n = spec.dim
    m = 1 if size is None else int(size)
    g = rng.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero Gaussian vector has probability zero; redraw keeps the support exact
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    radii = spec.radius * rng.random((m, 1)) ** (1.0 / n)
    v = g / norms * radii
    # rounding in the normalisation may overshoot the sphere by an ulp
    lengths = np.linalg.norm(v, axis=1, keepdims=True)
    over = lengths > spec.radius
    if np.any(over):
        v = np.where(over, v * (spec.radius / lengths), v)
    pts = spec.center + v
    return pts[0] if size is None else pts


def sample_uniform_half_ball(
    rng, spec: BallSpec, normal: Point, side: int = 1, size: int | None = None
) -> Point:
    """Uniform draw(s) from ``{x in ball : side * (x - c) . normal >= 0}``.

    Draws from the full ball and reflects across the dividing hyperplane when
    the draw lands on the wrong side, which keeps exactly one ball draw per point.
    """
    normal = np.asarray(normal, dtype=float)
    if normal.shape != (spec.dim,):
        raise ValueError("normal must have the ball's dimension")
    if abs(float(np.linalg.norm(normal)) - 1.0) > UNIT_NORMAL_TOL:
        raise ValueError("normal must be a unit vector (tolerance 1e-12)")
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    pts = np.atleast_2d(sample_uniform_ball(rng, spec, 1 if size is None else size))
    v = pts - spec.center
    proj = v @ normal
    wrong = side * proj < 0
    v[wrong] -= 2.0 * np.outer(proj[wrong], normal)
    out = spec.center + v
    return out[0] if size is None else out


def sample_ball_axis_coordinate(rng, n: int, radius: float = 1.0, size: int | None = None):
    """Coordinate along a fixed unit axis of uniform draw(s) from a centred n-ball.

    The marginal density is proportional to ``(1 - y^2)^((n-1)/2)`` on [-1, 1],
    i.e. ``(y + 1) / 2 ~ Beta((n+1)/2, (n+1)/2)``. Estimators whose events depend
    on a single coordinate use this instead of materialising n-vectors.
    """
    n = _check_dim(n)
    rng = _as_generator(rng)
    a = 0.5 * (n + 1)
    b = rng.beta(a, a, size=size)
    return radius * (2.0 * b - 1.0)
