"""Fast invariant suite: cross-checks the independent Wigner evaluation
routes, the normalization quadrature, the minimum law and the negativity
threshold. Intended both as a CLI health check and as a mutation tripwire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import wigner
from .qubit import BlochState, density_from_bloch


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _random_states(rng: np.random.Generator, n: int, pure: bool = False):
    for _ in range(n):
        theta = math.acos(rng.uniform(-1.0, 1.0))
        phi = rng.uniform(0.0, 2.0 * math.pi)
        r = 1.0 if pure else rng.uniform(0.0, 1.0)
        yield BlochState(theta, phi, r)


def _check_path_equivalence(rng) -> CheckResult:
    worst = 0.0
    for state in _random_states(rng, 200):
        rho = density_from_bloch(state)
        point = wigner.PhasePoint(rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))
        w_trace = wigner.wigner_value(rho, point)
        w_closed = wigner.wigner_closed_form(state, point)
        w_meas = wigner.wigner_measurement_form(rho, point)
        worst = max(worst, abs(w_trace - w_closed), abs(w_trace - w_meas))
    return CheckResult("path_equivalence", worst <= 1e-12, f"max spread {worst:.2e}")


def _check_kernel_spectrum(rng) -> CheckResult:
    expected = np.array([wigner.KERNEL_EIG_LOW, wigner.KERNEL_EIG_HIGH])
    worst = 0.0
    for _ in range(50):
        point = wigner.PhasePoint(rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))
        eigs = np.sort(np.linalg.eigvalsh(wigner.kernel(point)))
        worst = max(worst, float(np.max(np.abs(eigs - expected))))
    return CheckResult("kernel_spectrum", worst <= 1e-12, f"max eigenvalue error {worst:.2e}")


def _check_normalization(rng) -> CheckResult:
    worst = 0.0
    for state in _random_states(rng, 5):
        grid = wigner.wigner_grid(density_from_bloch(state), 101, 101)
        worst = max(worst, abs(wigner.integrate_wigner(grid) - 1.0))
    return CheckResult("normalization", worst <= 1e-6, f"max |integral - 1| {worst:.2e}")


def _check_minimum_law(rng) -> CheckResult:
    worst = 0.0
    for state in _random_states(rng, 5):
        report = wigner.negativity_report(state, grid_resolution=96)
        worst = max(worst, abs(report.w_min - wigner.wigner_min_analytic(state.r)))
    return CheckResult("minimum_law", worst <= 1e-6, f"max law error {worst:.2e}")


def _check_threshold_bisection(rng) -> CheckResult:
    theta = math.acos(rng.uniform(-1.0, 1.0))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    crossing = wigner.locate_negativity_threshold(theta, phi, grid_resolution=64, r_tol=1e-5)
    err = abs(crossing - wigner.R_NEGATIVITY_THRESHOLD)
    return CheckResult("threshold_bisection", err <= 1e-4, f"crossing error {err:.2e}")


CHECKS = (
    _check_path_equivalence,
    _check_kernel_spectrum,
    _check_normalization,
    _check_minimum_law,
    _check_threshold_bisection,
)


def run_selftest(seed: int = 20201116, report=print) -> list[CheckResult]:
    """Run every invariant check, reporting one line per check."""
    results = []
    for check in CHECKS:
        result = check(np.random.default_rng(seed))
        results.append(result)
        status = "ok" if result.passed else "FAIL"
        report(f"{status:4s} {result.name}: {result.detail}")
    return results
