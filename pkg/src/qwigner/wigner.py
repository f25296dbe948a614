"""Continuous Wigner function of a qubit over the Euler-angle phase space.

Three independent evaluation routes are provided and must agree pointwise:

* :func:`wigner_value` traces the state against the rotated-parity kernel,
* :func:`wigner_closed_form` evaluates the trigonometric closed form in the
  Bloch coordinates of the state,
* :func:`wigner_measurement_form` mimics the laboratory route of two inverse
  rotations followed by a population difference.

All values carry the 1/pi^2 normalization that makes the distribution
integrate to one over xi in [0, pi], chi in [0, 2*pi) with flat measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .qubit import (
    IDENTITY,
    SIGMA_Z,
    BlochState,
    DensityMatrix,
    DomainError,
    conjugate_state,
    density_from_bloch,
    euler_rotation,
    rotation_x,
    rotation_z,
)

TWO_PI = 2.0 * math.pi

# 1/pi^2 prefactor normalizing the quasiprobability over the half-period
# phase space; values then carry units of 1/rad^2.
WIGNER_NORM = 1.0 / math.pi**2

# Kernel eigenvalues (1 -+ sqrt(3))/2 bound every Wigner value after scaling.
KERNEL_EIG_LOW = 0.5 * (1.0 - math.sqrt(3.0))
KERNEL_EIG_HIGH = 0.5 * (1.0 + math.sqrt(3.0))
W_LOWER_BOUND = KERNEL_EIG_LOW * WIGNER_NORM
W_UPPER_BOUND = KERNEL_EIG_HIGH * WIGNER_NORM

# Negativity vanishes below this Bloch radius (purity 2/3).
R_NEGATIVITY_THRESHOLD = 1.0 / math.sqrt(3.0)

# Slack allowed when validating grid values against the analytic bounds.
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    """Euler-angle phase-space coordinate (xi, chi), radians."""

    xi: float
    chi: float

    def __post_init__(self):
        if not (math.isfinite(self.xi) and math.isfinite(self.chi)):
            raise DomainError("phase-space angles must be finite")

    def reduced(self) -> "PhasePoint":
        """Canonical representative with both angles in [0, 2*pi)."""
        return PhasePoint(self.xi % TWO_PI, self.chi % TWO_PI)


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Wigner values sampled on the outer product of two angle axes.

    ``values[i, j]`` is the value at ``(xi_axis[i], chi_axis[j])``.
    """

    xi_axis: np.ndarray
    chi_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi_axis, dtype=float)
        chi = np.asarray(self.chi_axis, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        for a in (xi, chi, vals):
            a.setflags(write=False)
        object.__setattr__(self, "xi_axis", xi)
        object.__setattr__(self, "chi_axis", chi)
        object.__setattr__(self, "values", vals)
        if vals.shape != (xi.size, chi.size):
            raise DomainError(
                f"values shape {vals.shape} does not match axes ({xi.size}, {chi.size})"
            )
        if vals.size and (
            vals.min() < W_LOWER_BOUND - BOUND_SLACK or vals.max() > W_UPPER_BOUND + BOUND_SLACK
        ):
            raise DomainError("grid values violate the kernel eigenvalue bounds")

    def min_entry(self) -> tuple[float, PhasePoint]:
        """Smallest value and its phase point (first hit in row-major order)."""
        i, j = np.unravel_index(int(np.argmin(self.values)), self.values.shape)
        return float(self.values[i, j]), PhasePoint(float(self.xi_axis[i]), float(self.chi_axis[j]))


@dataclass(frozen=True)
class NegativityReport:
    """Location and depth of the global Wigner minimum of a state."""

    w_min: float
    argmin: PhasePoint
    is_negative: bool
    r_threshold: float = field(default=R_NEGATIVITY_THRESHOLD)


def kernel(point: PhasePoint, zeta: float = 0.0) -> np.ndarray:
    """Rotated-parity kernel (I - sqrt(3) R sigma_z R^dagger)/2.

    Hermitian with eigenvalues {(1-sqrt(3))/2, (1+sqrt(3))/2} and unit trace;
    independent of the trailing Euler angle ``zeta``.
    """
    r = euler_rotation(point.xi, point.chi, zeta)
    return 0.5 * (IDENTITY - math.sqrt(3.0) * (r @ SIGMA_Z @ r.conj().T))


def kernel_expectation(rho: DensityMatrix, point: PhasePoint) -> float:
    """Unnormalized trace tr(rho * kernel); handy for debugging."""
    return float(np.trace(rho.matrix @ kernel(point)).real)


def wigner_value(rho: DensityMatrix, point: PhasePoint) -> float:
    """Wigner value via the kernel trace, including the 1/pi^2 normalization."""
    return WIGNER_NORM * kernel_expectation(rho, point)


def wigner_closed_form(state: BlochState, point: PhasePoint) -> float:
    """Closed-form Wigner value in the Bloch coordinates of the state."""
    bracket = math.cos(state.theta) * math.cos(point.chi) + math.sin(
        point.xi - state.phi
    ) * math.sin(state.theta) * math.sin(point.chi)
    return 0.5 * WIGNER_NORM * (1.0 - math.sqrt(3.0) * state.r * bracket)


def wigner_measurement_form(rho: DensityMatrix, point: PhasePoint) -> float:
    """Wigner value along the laboratory route.

    Conjugates the state by R_x(-chi) R_z(-xi), reads the populations P0 and
    P1 of the rotated state, and returns (1 - sqrt(3)*(P0 - P1))/(2*pi^2).
    """
    u = rotation_x(-point.chi) @ rotation_z(-point.xi)
    rotated = conjugate_state(rho, u)
    return 0.5 * WIGNER_NORM * (1.0 - math.sqrt(3.0) * (rotated.p0 - rotated.p1))


def _kernel_stack(xi_axis: np.ndarray, chi_axis: np.ndarray) -> np.ndarray:
    """Kernels for all (xi, chi) pairs, shape (n_xi, n_chi, 2, 2).

    Same operator construction as :func:`kernel`, with the two elemental
    rotations assembled entrywise and multiplied as a batch.
    """
    xi = np.asarray(xi_axis, dtype=float)[:, None]
    chi = np.asarray(chi_axis, dtype=float)[None, :]
    shape = np.broadcast_shapes(xi.shape, chi.shape)

    rz = np.zeros(shape + (2, 2), dtype=complex)
    rz[..., 0, 0] = np.exp(-0.5j * xi)
    rz[..., 1, 1] = np.exp(0.5j * xi)

    rx = np.zeros(shape + (2, 2), dtype=complex)
    c, s = np.cos(0.5 * chi), np.sin(0.5 * chi)
    rx[..., 0, 0] = c
    rx[..., 1, 1] = c
    rx[..., 0, 1] = -1j * s
    rx[..., 1, 0] = -1j * s

    r = rz @ rx
    parity = r @ SIGMA_Z @ np.conj(np.swapaxes(r, -1, -2))
    return 0.5 * (IDENTITY - math.sqrt(3.0) * parity)


def _validate_span(span: tuple[float, float], name: str) -> tuple[float, float]:
    lo, hi = float(span[0]), float(span[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise DomainError(f"invalid {name} span [{lo}, {hi}]")
    return lo, hi


def wigner_grid(
    rho: DensityMatrix,
    n_xi: int,
    n_chi: int,
    xi_span: tuple[float, float] = (0.0, math.pi),
    chi_span: tuple[float, float] = (0.0, TWO_PI),
) -> WignerGrid:
    """Sample :func:`wigner_value` uniformly over the spans, endpoints included."""
    if n_xi < 2 or n_chi < 2:
        raise DomainError("grid needs at least 2 samples per axis")
    xi_lo, xi_hi = _validate_span(xi_span, "xi")
    chi_lo, chi_hi = _validate_span(chi_span, "chi")
    xi_axis = np.linspace(xi_lo, xi_hi, n_xi)
    chi_axis = np.linspace(chi_lo, chi_hi, n_chi)
    kernels = _kernel_stack(xi_axis, chi_axis)
    values = WIGNER_NORM * np.real(np.einsum("ij,...ji->...", rho.matrix, kernels))
    return WignerGrid(xi_axis, chi_axis, values)


def integrate_wigner(grid: WignerGrid) -> float:
    """Composite trapezoidal quadrature of the grid with flat measure.

    Requires the canonical normalization domain xi in [0, pi], chi in
    [0, 2*pi], endpoints included; the result is ~1 for any valid state.
    """
    span_ok = (
        abs(grid.xi_axis[0]) <= BOUND_SLACK
        and abs(grid.xi_axis[-1] - math.pi) <= BOUND_SLACK
        and abs(grid.chi_axis[0]) <= BOUND_SLACK
        and abs(grid.chi_axis[-1] - TWO_PI) <= BOUND_SLACK
    )
    if not span_ok:
        raise DomainError("normalization quadrature requires xi in [0, pi], chi in [0, 2*pi]")
    inner = np.trapezoid(grid.values, grid.chi_axis, axis=1)
    return float(np.trapezoid(inner, grid.xi_axis))


def wigner_min_analytic(r: float) -> float:
    """Global Wigner minimum (1 - sqrt(3)*r)/(2*pi^2) for Bloch radius r."""
    if not (0.0 <= r <= 1.0):
        raise DomainError(f"Bloch radius r={r} outside [0, 1]")
    return 0.5 * WIGNER_NORM * (1.0 - math.sqrt(3.0) * r)


def negativity_report(state: BlochState, grid_resolution: int = 128) -> NegativityReport:
    """Locate the global Wigner minimum numerically.

    A dense grid over one full period of both angles seeds a Nelder-Mead
    refinement of the kernel-trace value; ties in the seed break to the first
    occurrence in row-major order.
    """
    if grid_resolution < 64:
        raise DomainError("grid_resolution must be at least 64 per axis")
    rho = density_from_bloch(state)
    grid = wigner_grid(rho, grid_resolution, grid_resolution, (0.0, TWO_PI), (0.0, TWO_PI))
    _, seed = grid.min_entry()

    def objective(x):
        return wigner_value(rho, PhasePoint(x[0], x[1]))

    res = minimize(
        objective,
        x0=[seed.xi, seed.chi],
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400},
    )
    w_min = float(res.fun)
    argmin = PhasePoint(float(res.x[0]), float(res.x[1])).reduced()
    return NegativityReport(w_min=w_min, argmin=argmin, is_negative=w_min < -1e-12)


def locate_negativity_threshold(
    theta: float,
    phi: float,
    grid_resolution: int = 96,
    r_tol: float = 1e-5,
) -> float:
    """Bisection on the Bloch radius for the sign change of the located minimum.

    Converges to 1/sqrt(3) for every direction (theta, phi).
    """
    lo, hi = 0.0, 1.0
    while hi - lo > r_tol:
        mid = 0.5 * (lo + hi)
        report = negativity_report(BlochState(theta, phi, mid), grid_resolution)
        if report.w_min < 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def grid_to_csv(grid: WignerGrid) -> str:
    """CSV export: header ``xi,chi,w``, row-major over xi then chi."""
    lines = ["xi,chi,w"]
    for i, xi in enumerate(grid.xi_axis):
        for j, chi in enumerate(grid.chi_axis):
            lines.append(f"{xi:.17g},{chi:.17g},{grid.values[i, j]:.17g}")
    return "\n".join(lines) + "\n"


def grid_to_json_dict(
    grid: WignerGrid,
    state: DensityMatrix | None = None,
    created_utc: str | None = None,
) -> dict:
    """JSON export embedding the axes plus provenance metadata."""
    out = {
        "xi_axis": grid.xi_axis.tolist(),
        "chi_axis": grid.chi_axis.tolist(),
        "values": grid.values.tolist(),
        "resolution": [int(grid.xi_axis.size), int(grid.chi_axis.size)],
        "normalization": "per_rad2",
    }
    if state is not None:
        out["state"] = state.to_json_dict()
    if created_utc is not None:
        out["created_utc"] = created_utc
    return out
