"""Data models and classifiers.

Three settings are covered:

* two overlapping balls with centres ``-eps*e1`` and ``+eps*e1`` split by the
  hyperplane ``x1 = 0``;
* two half-balls pushed apart by a margin of ``2*eps``;
* a general decision surface ``S``, the graph of a Lipschitz function ``phi``
  over a reference hyperplane ``pi``, with class-0 data uniform on a ball.

Batched helpers accept arrays whose last axis is the coordinate axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .geometry import (
    UNIT_NORMAL_TOL,
    BallSpec,
    Point,
    basis_vector,
    cap_fractions,
    sample_uniform_ball,
    sample_uniform_half_ball,
)

__all__ = [
    "BoundsOnlyModelError",
    "TwoBallsSpec",
    "HalfBallsSpec",
    "LabeledSample",
    "SurfaceSpec",
    "SurfaceBallModel",
    "ZeroPhi",
    "SinusoidPhi",
    "RidgePhi",
    "flat_surface",
    "sinusoidal_surface",
    "ridge_surface",
    "sample_two_balls",
    "sample_two_balls_batch",
    "sample_half_balls",
    "sample_half_balls_batch",
    "classify_linear",
    "classify_surface",
    "plane_distance",
    "plane_projection",
    "surface_distance",
    "surface_projection",
    "sin_theta",
    "sigma_lower_bound",
    "destabilization_margin",
]


class BoundsOnlyModelError(ValueError):
    """Raised when sampling is requested for a bounds-only growth parameter (A > 1)."""


@dataclass(frozen=True)
class TwoBallsSpec:
    dim: int
    epsilon: float
    radius: float = 1.0
    growth_a: float = 1.0

    def __post_init__(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if self.growth_a < 1:
            raise ValueError("growth parameter A must be >= 1")

    def center(self, label: int) -> Point:
        sign = -1.0 if label == 0 else 1.0
        return sign * self.epsilon * basis_vector(self.dim)

    @property
    def samplable(self) -> bool:
        return self.growth_a == 1.0

    def require_samplable(self) -> None:
        if not self.samplable:
            raise BoundsOnlyModelError(
                f"bounds-only growth parameter A={self.growth_a}: no sampler for A > 1"
            )


@dataclass(frozen=True)
class HalfBallsSpec:
    dim: int
    epsilon: float

    def __post_init__(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True, eq=False)
class LabeledSample:
    point: Point
    label: int


def classify_linear(x):
    """0 if the first coordinate is negative, else 1 (ties at 0 go to class 1).

    Accepts a single point or a batch of shape ``(m, n)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.where(x[..., 0] < 0.0, 0, 1)
    return int(out) if out.ndim == 0 else out


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_two_balls_batch(rng, spec: TwoBallsSpec, size: int):
    """``size`` labelled draws: returns ``(points (size, n), labels (size,))``."""
    spec.require_samplable()
    rng = _rng(rng)
    labels = rng.integers(0, 2, size=size)
    pts = sample_uniform_ball(rng, BallSpec.centered(spec.dim, spec.radius), size)
    pts[:, 0] += np.where(labels == 0, -spec.epsilon, spec.epsilon)
    return pts, labels


def sample_two_balls(rng, spec: TwoBallsSpec) -> LabeledSample:
    pts, labels = sample_two_balls_batch(rng, spec, 1)
    return LabeledSample(pts[0], int(labels[0]))


def sample_half_balls_batch(rng, spec: HalfBallsSpec, size: int):
    rng = _rng(rng)
    labels = rng.integers(0, 2, size=size)
    e1 = basis_vector(spec.dim)
    pts = sample_uniform_half_ball(rng, BallSpec.centered(spec.dim), e1, 1, size)
    # reflect class-0 draws onto the negative side, then shift both off the plane
    sign = np.where(labels == 0, -1.0, 1.0)
    pts[:, 0] = sign * (pts[:, 0] + spec.epsilon)
    return pts, labels


def sample_half_balls(rng, spec: HalfBallsSpec) -> LabeledSample:
    pts, labels = sample_half_balls_batch(rng, spec, 1)
    return LabeledSample(pts[0], int(labels[0]))


# ---------------------------------------------------------------------------
# general decision surfaces


def _unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(float(np.linalg.norm(v)) - 1.0) > UNIT_NORMAL_TOL:
        raise ValueError(f"{name} must be a unit vector (tolerance 1e-12)")
    return v


def _ball_axis_cdf(n: int, y):
    """CDF of one coordinate of a uniform draw from the centred unit n-ball."""
    a = 0.5 * (n + 1)
    y = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
    return stats.beta.cdf(0.5 * (y + 1.0), a, a)


@dataclass(frozen=True)
class ZeroPhi:
    """phi == 0: the decision surface is the reference plane itself."""

    lipschitz: float = 0.0

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.zeros(p.shape[:-1]) if p.ndim > 1 else 0.0

    def abs_cdf_on_ball(self, alpha, center, radius, anchor):
        alpha = np.asarray(alpha, dtype=float)
        return np.where(alpha >= 0.0, 1.0, 0.0)


@dataclass(frozen=True, eq=False)
class SinusoidPhi:
    """``amplitude * sin(wavenumber * (p - origin) . direction)``."""

    amplitude: float
    wavenumber: float
    direction: np.ndarray
    origin: np.ndarray

    @property
    def lipschitz(self) -> float:
        return abs(self.amplitude) * abs(self.wavenumber)

    def __call__(self, p):
        t = (np.asarray(p, dtype=float) - self.origin) @ self.direction
        return self.amplitude * np.sin(self.wavenumber * t)

    def abs_cdf_on_ball(self, alpha, center, radius, anchor):
        """P(|phi(Pi x)| <= alpha) for x uniform on the ball (center, radius).

        ``(Pi x - origin) . u`` equals ``(x - origin) . u`` because ``u`` lies in
        the plane, so only one ball coordinate matters; the event is a union of
        intervals in that coordinate, each measured with the exact marginal CDF.
        """
        n = center.size
        a = abs(self.amplitude)
        k = abs(self.wavenumber)
        b = float((center - self.origin) @ self.direction)
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        if a == 0.0 or k == 0.0:
            out = np.where(alpha >= 0.0, 1.0, 0.0)
            return out if out.size > 1 else float(out[0])
        # |sin(k t)| <= al/a  iff  t lies within beta/k of some m*pi/k
        beta = np.arcsin(np.clip(alpha, 0.0, a) / a)
        lo, hi = k * (b - radius), k * (b + radius)
        m = np.arange(math.floor((lo - math.pi / 2) / math.pi), math.ceil((hi + math.pi / 2) / math.pi) + 1)
        centres = m * math.pi
        y0 = ((centres[None, :] - beta[:, None]) / k - b) / radius
        y1 = ((centres[None, :] + beta[:, None]) / k - b) / radius
        # intervals are disjoint because beta < pi/2; clipping zeroes those off the ball
        total = (_ball_axis_cdf(n, y1) - _ball_axis_cdf(n, y0)).sum(axis=1)
        out = np.clip(total, 0.0, 1.0)
        out = np.where(alpha >= a, 1.0, out)
        out = np.where(alpha < 0.0, 0.0, out)
        return out if out.size > 1 else float(out[0])


@dataclass(frozen=True, eq=False)
class RidgePhi:
    """``slope * |(p - origin) . direction|``: a ridge with Lipschitz constant ``slope``."""

    slope: float
    direction: np.ndarray
    origin: np.ndarray

    @property
    def lipschitz(self) -> float:
        return abs(self.slope)

    def __call__(self, p):
        t = (np.asarray(p, dtype=float) - self.origin) @ self.direction
        return self.slope * np.abs(t)

    def abs_cdf_on_ball(self, alpha, center, radius, anchor):
        n = center.size
        b = float((center - self.origin) @ self.direction)
        alpha = np.asarray(alpha, dtype=float)
        s = abs(self.slope)
        if s == 0.0:
            return np.where(alpha >= 0.0, 1.0, 0.0)
        half = np.maximum(alpha, 0.0) / s
        p = _ball_axis_cdf(n, (half - b) / radius) - _ball_axis_cdf(n, (-half - b) / radius)
        return np.where(alpha >= 0.0, p, 0.0)


@dataclass(frozen=True, eq=False)
class SurfaceSpec:
    """Decision surface ``S = {Pi x + phi(Pi x) nu}`` over the plane through
    ``anchor`` with unit normal ``normal``. ``lipschitz`` is the declared bound
    on ``phi``."""

    dim: int
    anchor: Point
    normal: Point
    phi: Callable = field(default_factory=ZeroPhi)
    lipschitz: float = 0.0

    def __post_init__(self) -> None:
        anchor = np.asarray(self.anchor, dtype=float)
        normal = _unit(self.normal, "surface normal")
        if anchor.shape != (self.dim,) or normal.shape != (self.dim,):
            raise ValueError("anchor and normal must have length dim")
        if self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be >= 0")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "normal", normal)


def _in_plane_direction(dim, normal, direction):
    if direction is None:
        if dim < 2:
            raise ValueError("a non-flat surface needs dim >= 2")
        # first basis vector orthogonal enough to the normal, Gram-Schmidt'd
        for i in range(dim):
            e = basis_vector(dim, i)
            v = e - (e @ normal) * normal
            if np.linalg.norm(v) > 0.5:
                return v / np.linalg.norm(v)
    u = _unit(direction, "phi direction")
    if abs(float(u @ normal)) > 1e-12:
        raise ValueError("phi direction must lie in the plane (orthogonal to the normal)")
    return u


def flat_surface(dim: int, anchor=None, normal=None) -> SurfaceSpec:
    anchor = np.zeros(dim) if anchor is None else anchor
    normal = basis_vector(dim) if normal is None else normal
    return SurfaceSpec(dim, anchor, normal, ZeroPhi(), 0.0)


def sinusoidal_surface(
    dim: int, amplitude: float, wavenumber: float, direction=None, anchor=None, normal=None
) -> SurfaceSpec:
    anchor = np.zeros(dim) if anchor is None else np.asarray(anchor, dtype=float)
    normal = basis_vector(dim) if normal is None else _unit(normal, "surface normal")
    u = _in_plane_direction(dim, normal, direction)
    phi = SinusoidPhi(float(amplitude), float(wavenumber), u, anchor)
    return SurfaceSpec(dim, anchor, normal, phi, phi.lipschitz)


def ridge_surface(dim: int, slope: float, direction=None, anchor=None, normal=None) -> SurfaceSpec:
    anchor = np.zeros(dim) if anchor is None else np.asarray(anchor, dtype=float)
    normal = basis_vector(dim) if normal is None else _unit(normal, "surface normal")
    u = _in_plane_direction(dim, normal, direction)
    phi = RidgePhi(float(slope), u, anchor)
    return SurfaceSpec(dim, anchor, normal, phi, phi.lipschitz)


def plane_distance(spec: SurfaceSpec, x):
    """Signed distance ``(x - w) . nu`` to the reference plane."""
    return (np.asarray(x, dtype=float) - spec.anchor) @ spec.normal


def plane_projection(spec: SurfaceSpec, x):
    x = np.asarray(x, dtype=float)
    d = plane_distance(spec, x)
    return x - np.multiply.outer(d, spec.normal)


def surface_distance(spec: SurfaceSpec, x):
    """Signed distance to ``S`` measured along ``nu``: ``d_pi(x) - phi(Pi x)``."""
    return plane_distance(spec, x) - spec.phi(plane_projection(spec, x))


def surface_projection(spec: SurfaceSpec, x):
    p = plane_projection(spec, x)
    return p + np.multiply.outer(spec.phi(p), spec.normal)


def classify_surface(spec: SurfaceSpec, x):
    """0 where ``d_S(x) <= 0``, else 1."""
    out = np.where(surface_distance(spec, x) <= 0.0, 0, 1)
    return int(out) if out.ndim == 0 else out


def sin_theta(lipschitz: float) -> float:
    """``sin(arctan(1/L))`` written as ``1/sqrt(1 + L^2)`` (equals 1 at L = 0)."""
    return 1.0 / math.sqrt(1.0 + lipschitz * lipschitz)


def sigma_lower_bound(spec: SurfaceSpec, x):
    """Certified lower bound ``|d_S(x)| sin(theta)`` on the Euclidean distance to ``S``."""
    return np.abs(surface_distance(spec, x)) * sin_theta(spec.lipschitz)


def destabilization_margin(label: int, x, s):
    """How far ``x + s`` is pushed past the threshold against ``label``."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    t = x[..., 0] + s[..., 0]
    if label == 0:
        return np.maximum(t, 0.0)
    if label == 1:
        return np.maximum(-t, 0.0)
    raise ValueError("label must be 0 or 1")


@dataclass(frozen=True, eq=False)
class SurfaceBallModel:
    """Class-0 data uniform on ``B_radius(center)``, classified by ``surface``.

    Only class 0 is modelled; every probability refers to class-0 points.
    """

    surface: SurfaceSpec
    center: Point
    radius: float = 1.0

    def __post_init__(self) -> None:
        c = np.asarray(self.center, dtype=float)
        if c.shape != (self.surface.dim,):
            raise ValueError("center must have the surface dimension")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        object.__setattr__(self, "center", c)

    @classmethod
    def offset(cls, surface: SurfaceSpec, eta: float, radius: float = 1.0) -> "SurfaceBallModel":
        """Ball whose centre sits at signed plane distance ``-eta``."""
        c = surface.anchor - eta * surface.normal
        return cls(surface, c, radius)

    @property
    def dim(self) -> int:
        return self.surface.dim

    @property
    def eta(self) -> float:
        return -float(plane_distance(self.surface, self.center))

    def sample(self, rng, size: int):
        pts = sample_uniform_ball(rng, BallSpec(self.center, self.radius), size)
        return pts, np.zeros(size, dtype=int)

    def plane_survival(self, beta):
        """P(d_pi(x) > beta): an exact cap fraction."""
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        # cap height measured from the cut at d_pi = beta to the far side of the ball
        h = np.clip(self.radius - (beta + self.eta), 0.0, 2.0 * self.radius)
        out = cap_fractions(self.dim, self.radius, h)
        return out if out.size > 1 else float(out[0])

    def abs_phi_cdf(self, alpha):
        """P(|phi(Pi x)| <= alpha), exact for the built-in phi families."""
        phi = self.surface.phi
        if not hasattr(phi, "abs_cdf_on_ball"):
            raise TypeError("exact |phi| distribution only available for built-in phi families")
        return phi.abs_cdf_on_ball(alpha, self.center, self.radius, self.surface.anchor)
