"""The ten acceptance criteria, each at its stated tolerance and runtime limit.

Each test records a one-line verdict that conftest.py prints at the end of the run.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE

from apparent_stability.attacks import (
    LOSSES,
    SQUASHES,
    SmoothClassifier,
    _gradients,
    attack_loss,
    attack_optimality_check,
    gradient_attack_direction,
)
from apparent_stability.bounds import (
    accuracy_bound,
    general_accuracy_bound,
    general_susceptibility_bound,
    halfball_undetectability_bound,
    smac_corollary_bounds,
    susceptibility_bound,
    undetectability_bound,
    universality_bound,
)
from apparent_stability.config import config_from_mapping
from apparent_stability.geometry import CapQuery, basis_vector, cap_fraction_bound, cap_fraction_exact
from apparent_stability.harness import run
from apparent_stability.models import (
    HalfBallsSpec,
    SurfaceBallModel,
    TwoBallsSpec,
    flat_surface,
    ridge_surface,
    sigma_lower_bound,
    sinusoidal_surface,
    surface_distance,
)
from apparent_stability.montecarlo import (
    estimate_accuracy,
    estimate_random_destabilization,
    estimate_stability_confidence,
    estimate_susceptibility,
    estimate_universality,
)

CAP_DIMS = (1, 2, 3, 5, 10, 50, 200)
CAP_RELS = (0.01, 0.1, 0.5, 0.9, 1.0)
SEED = 20230101


def record(k, ok, detail, elapsed, limit):
    in_time = elapsed < limit
    ACCEPTANCE[k] = (ok and in_time, f"{detail}; {elapsed:.2f} s (limit {limit:g} s)")
    assert ok, detail
    assert in_time, f"took {elapsed:.2f} s, limit {limit} s"


def quadrature_cap(n, r, h):
    if n == 1:
        return h / (2 * r)
    f = lambda t: (1.0 - (t / r) ** 2) ** ((n - 1) / 2)
    num, _ = integrate.quad(f, r - h, r, epsabs=0, epsrel=1e-13, limit=200)
    den, _ = integrate.quad(f, -r, r, epsabs=0, epsrel=1e-13, limit=200)
    return num / den


def test_criterion_01_cap_volume_matches_quadrature():
    t0 = time.perf_counter()
    worst = 0.0
    for n in CAP_DIMS:
        for rel in CAP_RELS:
            exact = cap_fraction_exact(CapQuery(n, 1.0, rel))
            oracle = quadrature_cap(n, 1.0, rel)
            worst = max(worst, abs(exact - oracle) / oracle)
    record(1, worst < 1e-9, f"max relative error {worst:.2e} < 1e-9", time.perf_counter() - t0, 5)


def test_criterion_02_cap_bound_dominates():
    t0 = time.perf_counter()
    bad = []
    for n in CAP_DIMS:
        for rel in CAP_RELS:
            q = CapQuery(n, 1.0, rel)
            b, e = cap_fraction_bound(q), cap_fraction_exact(q)
            if rel == 1.0:
                if abs(b - e) > 1e-15:
                    bad.append((n, rel))
            elif not b > e:
                bad.append((n, rel))
    record(2, not bad, f"strict dominance except equality at h = r; violations {bad}", time.perf_counter() - t0, 1)


def test_criterion_03_accuracy_curve(tmp_path):
    t0 = time.perf_counter()
    result = run(config_from_mapping({"recipe": "fig4a", "seed": SEED, "output": str(tmp_path)}))
    rows = next(iter(result.rows.values()))
    dominated = all(r.dominance_ok for r in rows)
    last = rows[-1]
    perfect = last.n == 10_000 and last.successes == last.trials
    record(
        3,
        dominated and perfect,
        f"accuracy >= bound - 3 sigma at all {len(rows)} dims: {dominated}; "
        f"misclassifications at n=10^4: {last.trials - last.successes}",
        time.perf_counter() - t0,
        30,
    )


def test_criterion_04_random_destabilization_curve(tmp_path):
    t0 = time.perf_counter()
    result = run(config_from_mapping({"recipe": "fig4b", "seed": SEED, "output": str(tmp_path)}))
    rows = [r for rs in result.rows.values() for r in rs]
    dominated = all(r.dominance_ok for r in rows)
    corner = [r for r in rows if r.n == 10_000 and r.delta_or_gamma == 2.5][0]
    record(
        4,
        dominated and corner.p_hat <= 0.05,
        f"p_hat <= bound + 3 sigma in all {len(rows)} cells: {dominated}; "
        f"p_hat(n=10^4, delta=2.5) = {corner.p_hat:.4f} <= 0.05",
        time.perf_counter() - t0,
        60,
    )


def test_criterion_05_susceptibility_dominance():
    t0 = time.perf_counter()
    eps = 0.05
    bad = []
    for n in (10, 100, 1000):
        for delta in (eps, 0.1, 0.5, 1 + eps):
            est = estimate_susceptibility(TwoBallsSpec(n, eps), delta, 10_000, SEED)
            if not est.dominates_lower(susceptibility_bound(n, eps, delta).value):
                bad.append((n, delta, est.p_hat))
    record(5, not bad, f"12 cells, failures {bad}", time.perf_counter() - t0, 10)


def test_criterion_06_universality_dominance():
    t0 = time.perf_counter()
    bad = []
    for n in (2, 100, 1000):
        for gamma in (0.2, 0.5, 1.0):
            est = estimate_universality(TwoBallsSpec(n, 0.05), gamma, 10_000, SEED)
            if not est.dominates_lower(universality_bound(n, gamma).value):
                bad.append((n, gamma, est.p_hat))
    record(6, not bad, f"9 cells, failures {bad}", time.perf_counter() - t0, 10)


def test_criterion_07_gradient_attack():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    n = 20
    pts = rng.uniform(-1.5, 1.5, size=(1000, n))
    labels = rng.integers(0, 2, size=1000)
    worst_cos, worst_fd = 0.0, 0.0
    for squash in SQUASHES:
        clf = SmoothClassifier(squash)
        for loss in LOSSES:
            for x, lab in zip(pts, labels):
                d = gradient_attack_direction(clf, loss, x, int(lab))
                target = (1 - 2 * int(lab)) * basis_vector(n)
                worst_cos = max(worst_cos, abs(float(d @ target) - 1.0))
            for x, lab in zip(pts[:20], labels[:20]):
                g = _gradients(clf, loss, x, int(lab))[0]
                num = np.zeros(n)
                for i in range(n):
                    e = np.zeros(n)
                    e[i] = 1e-6
                    num[i] = (attack_loss(clf, loss, x + e, lab) - attack_loss(clf, loss, x - e, lab)) / 2e-6
                worst_fd = max(worst_fd, float(np.linalg.norm(g - num) / np.linalg.norm(g)))
    opt = attack_optimality_check(TwoBallsSpec(100, 0.05), 10_000, SEED)
    ok = worst_cos <= 1e-9 and worst_fd < 1e-5 and opt.p_hat == 1.0
    record(
        7,
        ok,
        f"max |cos - 1| {worst_cos:.1e}; max finite-difference rel. error {worst_fd:.1e}; "
        f"optimality p_hat {opt.p_hat}",
        time.perf_counter() - t0,
        10,
    )


def test_criterion_08_half_balls():
    t0 = time.perf_counter()
    bad = []
    for eps in (0.01, 0.05):
        for delta in (0.1, 0.5):
            for n in (10, 100, 1000):
                est = estimate_random_destabilization(HalfBallsSpec(n, eps), delta, 10_000, SEED)
                if not est.dominates_upper(halfball_undetectability_bound(n, eps, delta).value):
                    bad.append((eps, delta, n, est.p_hat))
    spreads = {}
    for delta in (0.1, 0.25, 0.5, 1.0, 2.5):
        p = [estimate_random_destabilization(HalfBallsSpec(n, 0.0), delta, 10_000, SEED).p_hat for n in (100, 1000, 10_000)]
        spreads[delta] = max(p) - min(p)
    flat = all(s < 0.05 for s in spreads.values())
    record(
        8,
        not bad and flat,
        f"bound failures {bad}; max spread across n at eps=0 {max(spreads.values()):.4f} < 0.05",
        time.perf_counter() - t0,
        60,
    )


def test_criterion_09_general_surfaces():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_red = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 20_000))
        eps = float(rng.uniform(1e-3, 0.95))
        delta = float(rng.uniform(eps, 1.0))
        worst_red = max(
            worst_red,
            abs(smac_corollary_bounds(n, eps, 1.0).raw - accuracy_bound(n, eps).raw),
            abs(smac_corollary_bounds(n, eps, 1.0, delta, which="susceptibility").raw - susceptibility_bound(n, eps, delta).raw),
            abs(smac_corollary_bounds(n, eps, 1.0, delta, which="undetectability").raw - undetectability_bound(n, eps, delta).raw),
        )

    bad = []
    delta = 0.3
    for n in (10, 100):
        for name, surf in (("flat", flat_surface(n)), ("sinusoid", sinusoidal_surface(n, 0.05, 4.0))):
            m = SurfaceBallModel.offset(surf, 0.1)
            acc = estimate_accuracy(m, 10_000, SEED)
            b1 = general_accuracy_bound(m.abs_phi_cdf, m.plane_survival)
            if not acc.dominates_lower(b1.value):
                bad.append((name, n, "accuracy", acc.p_hat, b1.value))
            sus = estimate_susceptibility(m, delta, 10_000, SEED)
            b2 = general_susceptibility_bound(m.abs_phi_cdf, m.plane_survival, delta)
            # undecided points are not counted as successes, so this is the conservative reading
            if not sus.dominates_lower(b2.value):
                bad.append((name, n, "susceptibility", sus.p_hat, b2.value))

    surf = ridge_surface(2, 1.5, direction=basis_vector(2, 1))
    t = np.linspace(-20, 20, 400_001)
    curve = np.stack([1.5 * np.abs(t), t], axis=1)
    sandwich = True
    for x in rng.uniform(-3, 3, size=(100, 2)):
        true = float(np.min(np.linalg.norm(curve - x, axis=1)))
        lower = float(sigma_lower_bound(surf, x))
        upper = abs(float(surface_distance(surf, x)))
        sandwich &= lower <= upper and lower <= true + 1e-4 and true <= upper + 1e-4

    ok = worst_red < 1e-12 and not bad and sandwich
    record(
        9,
        ok,
        f"max reduction gap {worst_red:.1e}; general-bound failures {bad}; distance sandwich holds: {sandwich}",
        time.perf_counter() - t0,
        30,
    )


def test_criterion_10_worker_determinism():
    t0 = time.perf_counter()
    x = np.zeros(50)
    x[0] = -0.1
    sinus = SurfaceBallModel.offset(sinusoidal_surface(20, 0.05, 4.0), 0.1)
    calls = {
        "accuracy": lambda w: estimate_accuracy(TwoBallsSpec(100, 0.05), 10_000, SEED, w),
        "susceptibility": lambda w: estimate_susceptibility(HalfBallsSpec(100, 0.05), 0.2, 10_000, SEED, w),
        "destabilization": lambda w: estimate_random_destabilization(TwoBallsSpec(1000, 0.05), 0.5, 10_000, SEED, w),
        "universality": lambda w: estimate_universality(TwoBallsSpec(100, 0.05), 0.5, 10_000, SEED, w),
        "stability": lambda w: estimate_stability_confidence(None, x, 0.2, 10_000, SEED, w),
        "surface": lambda w: estimate_random_destabilization(sinus, 0.3, 10_000, SEED, w),
        "attack": lambda w: attack_optimality_check(TwoBallsSpec(100, 0.05), 10_000, SEED, workers=w),
    }
    differing = [name for name, f in calls.items() if len({f(w).successes for w in (1, 4, 8)}) != 1]
    record(
        10,
        not differing,
        f"{len(calls)} estimators identical at workers 1/4/8; differing {differing}",
        time.perf_counter() - t0,
        60,
    )
