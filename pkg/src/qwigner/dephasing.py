"""Pure dephasing of a qubit held in a trap.

Two mutually consistent pictures are provided: a deterministic map that
damps the coherences by a time-dependent factor (the ensemble view), and a
per-realization random phase kick whose ensemble average reproduces the same
damping (the single-shot view). The decay law can be exponential, Gaussian,
or a calibrated lookup table of (time, factor) pairs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .qubit import BlochState, DensityMatrix, DomainError, conjugate_state, rotation_z

DECAY_KERNELS = ("exponential", "gaussian", "table")

# Default 1/e coherence time in milliseconds (interferometric calibration).
DEFAULT_T2_MS = 17.2


@dataclass(frozen=True)
class ChannelParams:
    """Dephasing law: kernel shape, coherence time, initial Bloch radius.

    ``table`` holds (time_ms, factor) pairs for the calibrated lookup kernel;
    factors are linearly interpolated and clamped at the last entry.
    """

    t2_ms: float = DEFAULT_T2_MS
    kernel: str = "exponential"
    r0: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kernel not in DECAY_KERNELS:
            raise DomainError(f"unknown decay kernel {self.kernel!r}; expected one of {DECAY_KERNELS}")
        if self.kernel != "table" and self.t2_ms <= 0:
            raise DomainError(f"t2_ms must be positive, got {self.t2_ms}")
        if not (0.0 <= self.r0 <= 1.0):
            raise DomainError(f"r0={self.r0} outside [0, 1]")
        if self.kernel == "table":
            if not self.table or len(self.table) < 2:
                raise DomainError("table kernel needs at least two (time, factor) points")
            times = [p[0] for p in self.table]
            factors = [p[1] for p in self.table]
            if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
                raise DomainError("table times must be strictly increasing")
            if times[0] != 0.0 or factors[0] != 1.0:
                raise DomainError("table must start at (0, 1)")
            if any(not (0.0 < f <= 1.0) for f in factors):
                raise DomainError("table factors must lie in (0, 1]")

    def to_json_dict(self) -> dict:
        if self.kernel == "table":
            return {"kernel": "table", "r0": self.r0, "points": [list(p) for p in self.table]}
        return {"t2_ms": self.t2_ms, "kernel": self.kernel, "r0": self.r0}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChannelParams":
        kernel = d.get("kernel", "exponential")
        if kernel == "table":
            points = tuple((float(t), float(f)) for t, f in d["points"])
            return cls(kernel="table", r0=float(d.get("r0", 1.0)), table=points)
        return cls(
            t2_ms=float(d.get("t2_ms", DEFAULT_T2_MS)),
            kernel=kernel,
            r0=float(d.get("r0", 1.0)),
        )


def decay_factor(t: float, params: ChannelParams) -> float:
    """Coherence survival factor in (0, 1] after time t (ms)."""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if params.kernel == "exponential":
        return math.exp(-t / params.t2_ms)
    if params.kernel == "gaussian":
        return math.exp(-((t / params.t2_ms) ** 2))
    times = np.array([p[0] for p in params.table])
    factors = np.array([p[1] for p in params.table])
    return float(np.interp(t, times, factors))


def dephase(rho: DensityMatrix, t: float, params: ChannelParams) -> DensityMatrix:
    """Damp the off-diagonal entries by the decay factor; populations fixed.

    Trace-, Hermiticity- and positivity-preserving for all t >= 0, and a
    semigroup in t for the exponential kernel.
    """
    f = decay_factor(t, params)
    m = rho.matrix.copy()
    m[0, 1] *= f
    m[1, 0] *= f
    return DensityMatrix(m)


def r_of_t(t: float, params: ChannelParams, theta: float = math.pi / 2, theta_tol: float = 1e-6) -> float:
    """Bloch radius r0 * decay_factor(t) under pure dephasing.

    Identifying the radius with the coherence magnitude requires the state to
    sit on the equator; a theta away from pi/2 triggers a warning.
    """
    if abs(theta - math.pi / 2) > theta_tol:
        warnings.warn(
            f"r_of_t assumes theta = pi/2; got theta={theta:.6f}, so r is not purely off-diagonal",
            stacklevel=2,
        )
    return params.r0 * decay_factor(t, params)


@dataclass(frozen=True)
class JitterModel:
    """Random-phase model: standard deviation of the phase kick vs time (ms)."""

    sigma_of_t: Callable[[float], float]

    @classmethod
    def from_channel(cls, params: ChannelParams) -> "JitterModel":
        """Jitter calibrated so the ensemble average matches :func:`dephase`.

        Gaussian kicks of width sigma damp the mean coherence by
        exp(-sigma^2/2), so sigma(t) = sqrt(-2 ln f(t)).
        """

        def sigma(t: float) -> float:
            return math.sqrt(-2.0 * math.log(decay_factor(t, params)))

        return cls(sigma_of_t=sigma)


def sample_dephased_state(
    rho0: DensityMatrix,
    t: float,
    jitter: JitterModel,
    rng: np.random.Generator,
) -> DensityMatrix:
    """One realization of the dephasing channel: a random z-phase kick.

    The kick is unitary, so each realization keeps the Bloch radius of the
    input; only the ensemble average over realizations shrinks it.
    """
    sigma = jitter.sigma_of_t(t)
    if sigma < 0:
        raise DomainError(f"jitter sigma must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return rho0
    delta_phi = rng.normal(0.0, sigma)
    return conjugate_state(rho0, rotation_z(delta_phi))


def equator_state(phi: float, r: float) -> BlochState:
    """Convenience constructor for the theta = pi/2 states this channel targets."""
    return BlochState(math.pi / 2, phi % (2.0 * math.pi), r)
