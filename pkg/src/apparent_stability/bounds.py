"""Closed-form concentration bounds, evaluated in log-space.

Every closed-form bound here is either ``exp(L)`` (upper bounds on rare events)
or ``1 - exp(L)`` (lower bounds on typical events), where ``L`` is a sum of
terms like ``n*ln(A)`` and ``(n/2)*ln(1 - beta^2)``. ``L`` is kept on the
:class:`BoundValue` so plots can use it even when the presented value rounds
to 0 or 1.

The ``general_*`` functions take probability callables and optimise the
balancing parameter over a grid; any grid point already yields a valid bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .models import sin_theta

__all__ = [
    "BoundDomainError",
    "BoundValue",
    "accuracy_bound",
    "susceptibility_bound",
    "undetectability_bound",
    "universality_bound",
    "universality_bound_simplified",
    "halfball_susceptibility_bound",
    "halfball_undetectability_bound",
    "smac_corollary_bounds",
    "default_grid",
    "general_accuracy_bound",
    "general_susceptibility_bound",
    "general_undetectability_bound",
]

LOWER = "lower"
UPPER = "upper"
GRID_POINTS = 256
GRID_FLOOR = 1e-4
REFINE_POINTS = 32


class BoundDomainError(ValueError):
    """Parameters fall outside the range on which a bound is stated."""


@dataclass(frozen=True)
class BoundValue:
    """A probability bound.

    ``log_term`` is ``L`` from the module docstring (``None`` for grid bounds);
    ``complement`` says whether the bound is ``1 - exp(L)``. ``raw`` is the
    unclamped bound, ``value`` the same clamped to [0, 1].
    """

    theorem_id: str
    kind: str
    raw: float
    log_term: float | None = None
    complement: bool = False
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def value(self) -> float:
        return min(max(self.raw, 0.0), 1.0)

    def __float__(self) -> float:
        return self.value


def _log_pow_base(n: int, x: float) -> float:
    """``(n/2) * ln(1 - x^2)`` with ``x`` in [0, 1]; ``-inf`` at x = 1."""
    if x < 0.5:
        # log1p keeps full relative precision when x^2 is tiny
        return 0.5 * n * math.log1p(-x * x)
    base = (1.0 - x) * (1.0 + x)
    if base <= 0.0:
        return -math.inf
    return 0.5 * n * math.log(base)


def _log_growth(n: int, a: float, power: int = 1) -> float:
    if a < 1.0:
        raise BoundDomainError(f"growth parameter A must be >= 1, got {a}")
    return power * n * math.log(a)


def _lower(theorem_id: str, log_term: float, flags=()) -> BoundValue:
    # 1 - exp(L), accurate when exp(L) is tiny
    raw = -math.expm1(log_term) if log_term != -math.inf else 1.0
    return BoundValue(theorem_id, LOWER, raw, log_term, True, tuple(flags))


def _upper(theorem_id: str, log_term: float, flags=()) -> BoundValue:
    raw = math.exp(log_term) if log_term != -math.inf else 0.0
    return BoundValue(theorem_id, UPPER, raw, log_term, False, tuple(flags))


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise BoundDomainError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def accuracy_bound(n: int, eps: float, a: float = 1.0) -> BoundValue:
    """Lower bound ``1 - 0.5 A^n (1 - eps^2)^(n/2)`` on two-ball accuracy; needs 0 < eps < 1."""
    n = _check_n(n)
    if not 0.0 < eps < 1.0:
        raise BoundDomainError(f"accuracy bound needs 0 < eps < 1, got eps={eps}")
    return _lower("accuracy", math.log(0.5) + _log_growth(n, a) + _log_pow_base(n, eps))


def susceptibility_bound(n: int, eps: float, delta: float, a: float = 1.0) -> BoundValue:
    """Lower bound ``1 - 0.5 A^n (1 - (delta - eps)^2)^(n/2)``; needs eps <= delta <= 1 + eps."""
    n = _check_n(n)
    if eps < 0 or not eps <= delta <= 1.0 + eps:
        raise BoundDomainError(
            f"susceptibility bound needs eps >= 0 and delta in [eps, 1 + eps], got eps={eps}, delta={delta}"
        )
    return _lower(
        "susceptibility", math.log(0.5) + _log_growth(n, a) + _log_pow_base(n, delta - eps)
    )


def undetectability_bound(n: int, eps: float, delta: float, a: float = 1.0) -> BoundValue:
    """Upper bound ``A^n (1 - (eps/(1+delta))^2)^(n/2)`` on random destabilisation; needs delta > eps >= 0."""
    n = _check_n(n)
    if not delta > eps >= 0.0:
        raise BoundDomainError(
            f"random-destabilisation bound needs delta > eps >= 0, got eps={eps}, delta={delta}"
        )
    return _upper(
        "random_destabilization", _log_growth(n, a) + _log_pow_base(n, eps / (1.0 + delta))
    )


def universality_bound(n: int, gamma: float, a: float = 1.0) -> BoundValue:
    """Lower bound ``1 - A^(2n) [1 - (1 - q)^2]`` with ``q = 0.5 (1 - gamma^2/4)^(n/2)``."""
    n = _check_n(n)
    if not 0.0 < gamma <= 1.0:
        raise BoundDomainError(f"universality bound needs gamma in (0, 1], got {gamma}")
    log_q = math.log(0.5) + _log_pow_base(n, 0.5 * gamma)
    q = math.exp(log_q)
    # 1 - (1 - q)^2 = q (2 - q)
    log_term = _log_growth(n, a, power=2) + log_q + math.log(2.0 - q)
    return _lower("universality", log_term)


def universality_bound_simplified(n: int, gamma: float) -> float:
    """The A = 1 form ``(1 - 0.5 (1 - gamma^2/4)^(n/2))^2``."""
    n = _check_n(n)
    if not 0.0 < gamma <= 1.0:
        raise BoundDomainError(f"universality bound needs gamma in (0, 1], got {gamma}")
    q = 0.5 * math.exp(_log_pow_base(n, 0.5 * gamma))
    return (1.0 - q) ** 2


def halfball_susceptibility_bound(n: int, eps: float, delta: float) -> BoundValue:
    """Half-ball lower bound ``1 - (1 - (delta - eps)^2)^(n/2)``; needs delta > eps > 0, delta - eps <= 1."""
    n = _check_n(n)
    if not (delta > eps > 0.0 and delta - eps <= 1.0):
        raise BoundDomainError(
            f"half-ball susceptibility bound needs delta > eps > 0 and delta - eps <= 1, got eps={eps}, delta={delta}"
        )
    return _lower("halfball_susceptibility", _log_pow_base(n, delta - eps))


def halfball_undetectability_bound(n: int, eps: float, delta: float) -> BoundValue:
    """Half-ball upper bound ``0.25 (1 - (eps/delta)^2)^(n/2)``; needs delta > eps > 0."""
    n = _check_n(n)
    if not delta > eps > 0.0:
        raise BoundDomainError(
            f"half-ball random-destabilisation bound needs delta > eps > 0, got eps={eps}, delta={delta}"
        )
    return _upper("halfball_random_destabilization", math.log(0.25) + _log_pow_base(n, eps / delta))


def smac_corollary_bounds(
    n: int, eta: float, r: float, delta: float | None = None, a: float = 1.0, which: str = "accuracy"
) -> BoundValue:
    """Flat-surface bounds for a SmAC class on a ball of radius ``r`` at plane distance ``eta``.

    A SmAC class has a density at most ``A^n`` times the uniform density on its
    ball. ``which`` is one of ``accuracy``, ``susceptibility`` or ``undetectability``.
    """
    n = _check_n(n)
    if r <= 0 or not 0.0 <= eta < r:
        raise BoundDomainError(f"SmAC bounds need r > 0 and eta in [0, r), got eta={eta}, r={r}")
    if which == "accuracy":
        return _lower(
            "smac_accuracy", math.log(0.5) + _log_growth(n, a) + _log_pow_base(n, eta / r)
        )
    if delta is None or not eta <= delta <= r:
        raise BoundDomainError(f"SmAC {which} bound needs delta in [eta, r], got delta={delta}")
    if which == "susceptibility":
        return _lower(
            "smac_susceptibility",
            math.log(0.5) + _log_growth(n, a) + _log_pow_base(n, (delta - eta) / r),
        )
    if which == "undetectability":
        return _upper(
            "smac_random_destabilization",
            _log_growth(n, a) + _log_pow_base(n, eta / (r + delta)),
        )
    raise BoundDomainError(f"unknown SmAC bound {which!r}")


# ---------------------------------------------------------------------------
# general decision surfaces


def default_grid(max_scale: float = 2.0, points: int = GRID_POINTS) -> np.ndarray:
    """``0`` followed by a geometric grid on ``[1e-4, max_scale]``."""
    if max_scale <= GRID_FLOOR:
        raise ValueError(f"max_scale must exceed {GRID_FLOOR}")
    return np.concatenate(([0.0], np.geomspace(GRID_FLOOR, max_scale, points)))


def _probabilities(fn: Callable, args) -> np.ndarray:
    args = np.asarray(args, dtype=float)
    try:
        out = np.asarray(fn(args), dtype=float)
        if out.shape != args.shape:
            out = np.broadcast_to(out, args.shape) if out.size == 1 else None
    except (TypeError, ValueError):
        out = None
    if out is None:
        out = np.array([float(fn(float(v))) for v in args.ravel()]).reshape(args.shape)
    if np.any(~np.isfinite(out)) or np.any(out < 0.0) or np.any(out > 1.0):
        raise ValueError("probability callable returned a value outside [0, 1]")
    return out


def _prepare_grid(grid) -> tuple[np.ndarray, bool]:
    if grid is None:
        return default_grid(), True
    g = np.unique(np.asarray(grid, dtype=float))
    if g.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(g < 0):
        raise ValueError("grid values must be >= 0")
    return g, False


def _refined(grid: np.ndarray, best: int) -> np.ndarray:
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    return np.linspace(lo, hi, REFINE_POINTS)


def _sup_over_grid(objective: Callable[[np.ndarray], np.ndarray], grid, refine: bool):
    vals = objective(grid)
    best = int(np.argmax(vals))
    arg, val = grid[best], vals[best]
    if refine:
        fine = _refined(grid, best)
        fvals = objective(fine)
        j = int(np.argmax(fvals))
        if fvals[j] > val:
            arg, val = fine[j], fvals[j]
    return float(val), float(arg)


def _inf_over_grid(objective, grid, refine: bool):
    val, arg = _sup_over_grid(lambda g: -objective(g), grid, refine)
    return -val, arg


def general_accuracy_bound(
    abs_phi_cdf: Callable, plane_survival: Callable, grid: Sequence[float] | None = None
) -> BoundValue:
    """Class-0 accuracy lower bound ``sup_a [P(|phi(Pi x)| <= a) - P(d_pi(x) > -a)]``.

    ``abs_phi_cdf(a)`` returns ``P(|phi(Pi x)| <= a)`` and ``plane_survival(b)``
    returns ``P(d_pi(x) > b)``; both may be vectorised. An explicit ``grid`` is
    used as given; with ``grid=None`` a default grid is searched and then refined
    around its best point.
    """
    g, refine = _prepare_grid(grid)
    val, arg = _sup_over_grid(
        lambda al: _probabilities(abs_phi_cdf, al) - _probabilities(plane_survival, -al), g, refine
    )
    return BoundValue("general_accuracy", LOWER, val, flags=(f"alpha={arg:.6g}",))


def general_susceptibility_bound(
    abs_phi_cdf: Callable,
    plane_survival: Callable,
    delta: float,
    grid: Sequence[float] | None = None,
) -> BoundValue:
    """Class-0 susceptibility lower bound ``sup_a [P(|phi| <= a) - P(d_pi(x) <= a - delta)]``."""
    if delta <= 0:
        raise BoundDomainError("general susceptibility bound needs delta > 0")
    g, refine = _prepare_grid(grid)
    val, arg = _sup_over_grid(
        lambda al: _probabilities(abs_phi_cdf, al)
        - (1.0 - _probabilities(plane_survival, al - delta)),
        g,
        refine,
    )
    return BoundValue("general_susceptibility", LOWER, val, flags=(f"alpha={arg:.6g}",))


def general_undetectability_bound(
    abs_phi_cdf: Callable,
    plane_survival: Callable,
    n: int,
    delta: float,
    lipschitz: float,
    alpha_grid: Sequence[float] | None = None,
    gamma_grid: Sequence[float] | None = None,
    t_grid: Sequence[float] | None = None,
) -> BoundValue:
    """Class-0 upper bound on misclassification after a uniform ``delta``-ball perturbation.

    Minimises over ``alpha, gamma >= 0`` and ``t`` in ``[min(L, 1) delta, delta]``
    the sum of ``P(|phi| >= alpha) + P(d_pi >= -alpha - t/sin(theta))`` and
    ``Delta(L) * 0.5 (1 - (t/delta - L)^2)^(n/2) * [P(d_pi <= gamma - t) + P(|phi| > gamma)]``
    with ``Delta(L) = 1`` for ``L <= 1`` and 0 otherwise. For fixed ``t`` the
    alpha and gamma searches separate, so the minimum over the full cross
    product is computed exactly as a minimum over ``t`` of two 1-D minima.

    ``|phi(Pi x)|`` and ``d_pi(x)`` are assumed to have no atoms on (0, inf)
    and R respectively, so non-strict and strict events share a callable; the
    atom of ``|phi|`` at 0 is handled by scoring ``P(|phi| >= 0) = 1``.
    Results with ``L > 1`` carry the ``delta-gated`` flag.
    """
    n = _check_n(n)
    if delta <= 0:
        raise BoundDomainError("general random-destabilisation bound needs delta > 0")
    if lipschitz < 0:
        raise BoundDomainError("Lipschitz constant must be >= 0")
    a_grid, refine_a = _prepare_grid(alpha_grid)
    c_grid, refine_c = _prepare_grid(gamma_grid)
    t_lo = min(lipschitz, 1.0) * delta
    if t_grid is None:
        ts = np.linspace(t_lo, delta, 129)
    else:
        ts = np.unique(np.asarray(t_grid, dtype=float))
        if ts.size == 0 or np.any(ts < t_lo - 1e-15) or np.any(ts > delta + 1e-15):
            raise BoundDomainError(f"t grid must lie in [{t_lo}, {delta}]")
    gate = 1.0 if lipschitz <= 1.0 else 0.0
    inv_sin = 1.0 / sin_theta(lipschitz)

    def phi_at_least(al):
        p = 1.0 - _probabilities(abs_phi_cdf, al)
        return np.where(al <= 0.0, 1.0, p)

    # the |phi| terms do not depend on t; evaluate them on the base grids once
    a_phi = phi_at_least(a_grid)
    c_phi = 1.0 - _probabilities(abs_phi_cdf, c_grid)

    def phi_above_alpha(al):
        return a_phi if al is a_grid else phi_at_least(al)

    def phi_above_gamma(ga):
        return c_phi if ga is c_grid else 1.0 - _probabilities(abs_phi_cdf, ga)

    best = (math.inf, None)
    for t in ts:
        first, a_arg = _inf_over_grid(
            lambda al: phi_above_alpha(al) + _probabilities(plane_survival, -al - t * inv_sin),
            a_grid,
            refine_a,
        )
        if gate:
            log_c = math.log(0.5) + _log_pow_base(n, min(max(t / delta - lipschitz, 0.0), 1.0))
            coeff = math.exp(log_c) if log_c != -math.inf else 0.0
        else:
            coeff = 0.0
        second, c_arg = 0.0, 0.0
        if coeff > 0.0:
            inner, c_arg = _inf_over_grid(
                lambda ga: (1.0 - _probabilities(plane_survival, ga - t)) + phi_above_gamma(ga),
                c_grid,
                refine_c,
            )
            second = coeff * inner
        total = first + second
        if total < best[0]:
            best = (total, (a_arg, c_arg, float(t)))
    flags = [f"alpha={best[1][0]:.6g}", f"gamma={best[1][1]:.6g}", f"t={best[1][2]:.6g}"]
    if lipschitz > 1.0:
        flags.append("delta-gated")
    return BoundValue("general_random_destabilization", UPPER, best[0], flags=tuple(flags))
