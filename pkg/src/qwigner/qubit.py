"""Exact 2x2 complex algebra for qubit states: Bloch parametrization,
Pauli operators, axis rotations and state metrics (purity, fidelity).

All types are immutable values and all operations are pure functions, so
everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Absolute tolerance for algebraic identities (hermiticity, trace, unitarity).
ATOL = 1e-12
# Looser tolerance for round trips through transcendental functions.
ATOL_ROUNDTRIP = 1e-10
# Below this Bloch radius the direction angles are meaningless and are
# reported as (theta, phi) = (0, 0) by convention.
DEGENERATE_RADIUS = 1e-12

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


def mat_isclose(a: np.ndarray, b: np.ndarray, atol: float = ATOL) -> bool:
    """Entrywise comparison of 2x2 complex matrices with absolute tolerance."""
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= atol))


def _as_matrix2(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class BlochState:
    """Polar coordinates (theta, phi, r) of a qubit state on/in the Bloch ball.

    theta in [0, pi], phi in [0, 2*pi), r in [0, 1]; angles in radians.
    """

    theta: float
    phi: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi) and math.isfinite(self.r)):
            raise DomainError("Bloch coordinates must be finite")
        if self.r < -ATOL or self.r > 1.0 + ATOL:
            raise DomainError(f"Bloch radius r={self.r} outside [0, 1]")
        if self.theta < -ATOL or self.theta > math.pi + ATOL:
            raise DomainError(f"theta={self.theta} outside [0, pi]")
        if self.phi < -ATOL or self.phi >= 2.0 * math.pi + ATOL:
            raise DomainError(f"phi={self.phi} outside [0, 2*pi)")

    @property
    def purity(self) -> float:
        return 0.5 * (1.0 + self.r**2)

    def vector(self) -> np.ndarray:
        """Cartesian Bloch vector (r_x, r_y, r_z)."""
        st = math.sin(self.theta)
        return self.r * np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )

    def isclose(self, other: "BlochState", atol: float = ATOL_ROUNDTRIP) -> bool:
        return bool(np.all(np.abs(self.vector() - other.vector()) <= atol))

    def to_json_dict(self) -> dict:
        return {"theta": self.theta, "phi": self.phi, "r": self.r}

    @classmethod
    def from_json_dict(cls, d: dict) -> "BlochState":
        return cls(theta=float(d["theta"]), phi=float(d["phi"]), r=float(d["r"]))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A 2x2 Hermitian, unit-trace, positive-semidefinite matrix.

    The strict constructor validates all invariants at tolerance ``ATOL``;
    use :meth:`sanitized` for matrices coming out of noisy estimation.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix2(self.matrix)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if not mat_isclose(m, m.conj().T):
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > ATOL:
            raise DomainError(f"density matrix trace {np.trace(m)} != 1")
        det = np.linalg.det(m).real
        if det < -ATOL or m[0, 0].real < -ATOL or m[1, 1].real < -ATOL:
            raise DomainError("density matrix is not positive semidefinite")

    @classmethod
    def sanitized(cls, matrix) -> "DensityMatrix":
        """Symmetrize and renormalize a nearly-valid matrix, then validate."""
        m = _as_matrix2(matrix)
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr) < ATOL:
            raise DomainError("cannot renormalize a traceless matrix")
        return cls(m / tr)

    @property
    def p0(self) -> float:
        """Population of the +z eigenstate |0>."""
        return float(self.matrix[0, 0].real)

    @property
    def p1(self) -> float:
        """Population of the -z eigenstate |1>."""
        return float(self.matrix[1, 1].real)

    @property
    def coherence(self) -> complex:
        """Off-diagonal entry <0|rho|1>."""
        return complex(self.matrix[0, 1])

    def isclose(self, other: "DensityMatrix", atol: float = ATOL) -> bool:
        return mat_isclose(self.matrix, other.matrix, atol)

    def to_json_dict(self) -> dict:
        return {
            "re": np.real(self.matrix).tolist(),
            "im": np.imag(self.matrix).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DensityMatrix":
        m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        return cls(m)


MAXIMALLY_MIXED = DensityMatrix(0.5 * IDENTITY)
GROUND = DensityMatrix(np.outer(KET_0, KET_0.conj()))
EXCITED = DensityMatrix(np.outer(KET_1, KET_1.conj()))


def density_from_bloch(state: BlochState) -> DensityMatrix:
    """Build rho = (I + r_vec . sigma_vec) / 2 from Bloch coordinates."""
    ct, st = math.cos(state.theta), math.sin(state.theta)
    off = 0.5 * state.r * st * np.exp(-1j * state.phi)
    m = np.array(
        [
            [0.5 * (1.0 + state.r * ct), off],
            [np.conj(off), 0.5 * (1.0 - state.r * ct)],
        ]
    )
    return DensityMatrix(m)


def bloch_from_density(rho: DensityMatrix) -> BlochState:
    """Invert the Bloch parametrization.

    For a degenerate radius (r below ``DEGENERATE_RADIUS``) the direction is
    undefined and (theta, phi) = (0, 0) is returned.
    """
    rx = 2.0 * rho.matrix[0, 1].real
    ry = -2.0 * rho.matrix[0, 1].imag
    rz = (rho.matrix[0, 0] - rho.matrix[1, 1]).real
    r = math.sqrt(rx * rx + ry * ry + rz * rz)
    if r < DEGENERATE_RADIUS:
        return BlochState(0.0, 0.0, 0.0)
    theta = math.acos(min(1.0, max(-1.0, rz / r)))
    phi = math.atan2(ry, rx) % (2.0 * math.pi)
    return BlochState(theta, phi, min(r, 1.0))


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2); equals (1 + r^2)/2 for Bloch radius r."""
    return float(np.trace(rho.matrix @ rho.matrix).real)


def rotation_z(xi: float) -> np.ndarray:
    """exp(-i*xi/2 * sigma_z) in closed form."""
    return np.array([[np.exp(-0.5j * xi), 0.0], [0.0, np.exp(0.5j * xi)]])


def rotation_x(chi: float) -> np.ndarray:
    """exp(-i*chi/2 * sigma_x) in closed form."""
    c, s = math.cos(0.5 * chi), math.sin(0.5 * chi)
    return np.array([[c, -1j * s], [-1j * s, c]])


def euler_rotation(xi: float, chi: float, zeta: float = 0.0) -> np.ndarray:
    """Ordered z-x-z Euler rotation R_z(xi) @ R_x(chi) @ R_z(zeta).

    The trailing z angle drops out of any conjugation of sigma_z, so callers
    that only conjugate the parity operator may leave it at zero.
    """
    return rotation_z(xi) @ rotation_x(chi) @ rotation_z(zeta)


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = _as_matrix2(u)
    return mat_isclose(u @ u.conj().T, IDENTITY, atol)


def conjugate_state(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    """U rho U^dagger; preserves trace and eigenvalues."""
    u = _as_matrix2(u)
    return DensityMatrix.sanitized(u @ rho.matrix @ u.conj().T)


def fidelity(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Uhlmann fidelity in the qubit closed form.

    F = tr(rho1 rho2) + 2*sqrt(det(rho1) det(rho2)); this is the squared
    convention, F(rho, rho) = 1. Slightly negative determinants within
    tolerance are clamped to zero.
    """
    cross = float(np.trace(rho1.matrix @ rho2.matrix).real)
    d1 = max(0.0, np.linalg.det(rho1.matrix).real)
    d2 = max(0.0, np.linalg.det(rho2.matrix).real)
    f = cross + 2.0 * math.sqrt(d1 * d2)
    return min(1.0, max(0.0, f))
