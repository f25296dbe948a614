"""Monte Carlo simulation of the measurement sequence on a trapped qubit.

A campaign walks the experimental pipeline for every requested evolution
time and phase point: prepare, dephase, rotate by R_x(-chi) R_z(-xi), then
detect survival shot by shot with an imperfect push-out stage. Every
(time, point) task owns a counter-based random stream derived from the root
seed, so results are bit-identical no matter how the work is scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dephasing import ChannelParams, JitterModel, decay_factor, dephase, sample_dephased_state
from .qubit import (
    EXCITED,
    BlochState,
    DensityMatrix,
    DomainError,
    conjugate_state,
    density_from_bloch,
    rotation_x,
    rotation_z,
)
from .wigner import WIGNER_NORM, PhasePoint, wigner_min_analytic

TWO_PI = 2.0 * math.pi
SQRT3 = math.sqrt(3.0)

# Shots per phase point used throughout the bundled configurations.
DEFAULT_SHOTS = 300

CONTRAST_MODES = ("off", "on")
CHANNEL_APPLICATIONS = ("ensemble", "jitter")


class Outcome(Enum):
    RETAINED = "retained"  # atom survived the push-out, i.e. was in |0>
    LOST = "lost"  # atom pushed out of the trap, i.e. was in |1>


@dataclass(frozen=True)
class PulseParams:
    """Microwave pulse mapping between rotation angles and real durations.

    ``rabi_freq`` and ``detuning`` are in rad/ms; ``z_rotation_overhead`` is a
    fixed extra duration (ms) charged to each z rotation when the campaign
    accounts for measurement time.
    """

    rabi_freq: float = 4.0 * math.pi
    detuning: float = 4.0 * math.pi
    z_rotation_overhead: float = 0.0

    def __post_init__(self):
        if self.rabi_freq <= 0:
            raise DomainError(f"rabi_freq must be positive, got {self.rabi_freq}")
        if self.z_rotation_overhead < 0:
            raise DomainError("z_rotation_overhead must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "rabi_freq": self.rabi_freq,
            "detuning": self.detuning,
            "z_rotation_overhead": self.z_rotation_overhead,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PulseParams":
        return cls(
            rabi_freq=float(d.get("rabi_freq", 4.0 * math.pi)),
            detuning=float(d.get("detuning", 4.0 * math.pi)),
            z_rotation_overhead=float(d.get("z_rotation_overhead", 0.0)),
        )


@dataclass(frozen=True)
class DetectionModel:
    """Push-out detection imperfections.

    ``eps0`` is the probability that a |0> atom is wrongly lost, ``eps1`` the
    probability that a |1> atom wrongly survives. ``contrast`` scales the
    transverse Bloch components entering a rotation block when contrast mode
    is on. ``prep_fidelity`` is the probability that state preparation
    succeeded; a failed preparation leaves the atom in the pumped state |1>.
    """

    contrast: float = 1.0
    eps0: float = 0.0
    eps1: float = 0.0
    prep_fidelity: float = 1.0

    def __post_init__(self):
        for name in ("contrast", "eps0", "eps1", "prep_fidelity"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v} outside [0, 1]")
        if self.contrast == 0.0:
            raise DomainError("contrast must be positive")

    def to_json_dict(self) -> dict:
        return {
            "contrast": self.contrast,
            "eps0": self.eps0,
            "eps1": self.eps1,
            "prep_fidelity": self.prep_fidelity,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DetectionModel":
        return cls(
            contrast=float(d.get("contrast", 1.0)),
            eps0=float(d.get("eps0", 0.0)),
            eps1=float(d.get("eps1", 0.0)),
            prep_fidelity=float(d.get("prep_fidelity", 1.0)),
        )


IDEAL_DETECTION = DetectionModel()


@dataclass(frozen=True)
class ShotTally:
    """Counts of retained (|0>) and lost (|1>) outcomes at one phase point."""

    n_retained: int
    n_lost: int
    point: PhasePoint | None = None

    def __post_init__(self):
        if self.n_retained < 0 or self.n_lost < 0:
            raise DomainError("tally counts must be nonnegative")
        if self.total == 0:
            raise DomainError("tally must contain at least one shot")

    @property
    def total(self) -> int:
        return self.n_retained + self.n_lost

    @property
    def p0_hat(self) -> float:
        return self.n_retained / self.total


@dataclass(frozen=True)
class WignerEstimate:
    """Shot-noise estimate of one Wigner value, with binomial standard error."""

    value: float
    stderr: float
    tally: ShotTally


@dataclass(frozen=True)
class SurvivalEstimate:
    """Shot-noise estimate of a survival probability at one delay."""

    t_ms: float
    p_survival: float
    stderr: float
    tally: ShotTally


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Counter-based random stream keyed by the root seed and a task path.

    Streams for distinct paths are independent, and the mapping does not
    depend on how many streams exist or in which order they are created.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=path)))


def duration_for_z(xi: float, pulse: PulseParams) -> float:
    """Real duration (ms) of a z rotation by xi driven at the set detuning.

    The angle is reduced modulo 2*pi first, so angles just below a full
    period cost nearly the full-period time.
    """
    if pulse.detuning == 0:
        raise DomainError("z rotation duration is undefined at zero detuning")
    reduced = xi % TWO_PI
    if pulse.detuning < 0:
        reduced -= TWO_PI if reduced > 0 else 0.0
    return reduced / pulse.detuning


def duration_for_x(chi: float, pulse: PulseParams) -> float:
    """Real duration (ms) of an x rotation by chi at the set Rabi frequency."""
    return chi / pulse.rabi_freq


def apply_preparation(rho: DensityMatrix, det: DetectionModel) -> DensityMatrix:
    """Mix in a preparation failure: the atom stays in the pumped state |1>."""
    if det.prep_fidelity == 1.0:
        return rho
    f = det.prep_fidelity
    return DensityMatrix(f * rho.matrix + (1.0 - f) * EXCITED.matrix)


def scale_coherences(rho: DensityMatrix, factor: float) -> DensityMatrix:
    """Shrink the transverse Bloch components (off-diagonals) by ``factor``."""
    m = rho.matrix.copy()
    m[0, 1] *= factor
    m[1, 0] *= factor
    return DensityMatrix(m)


def retain_probability(rho_final: DensityMatrix, det: DetectionModel) -> float:
    """Survival probability after detection errors distort the populations."""
    p0, p1 = rho_final.p0, rho_final.p1
    return p0 * (1.0 - det.eps0) + p1 * det.eps1


def invert_detection(p_retained: float, det: DetectionModel) -> float:
    """Recover the ideal |0> population from a detection-distorted one."""
    denom = 1.0 - det.eps0 - det.eps1
    if abs(denom) < 1e-15:
        raise DomainError("detection errors eps0 + eps1 = 1 are not invertible")
    return (p_retained - det.eps1) / denom


def measure_shot(rho_final: DensityMatrix, det: DetectionModel, rng: np.random.Generator) -> Outcome:
    """One Bernoulli push-out check of the final state."""
    return Outcome.RETAINED if rng.random() < retain_probability(rho_final, det) else Outcome.LOST


def wigner_estimate_from_tally(tally: ShotTally) -> WignerEstimate:
    """Turn retained/lost counts into a Wigner value with its standard error.

    value = (1 - sqrt(3)*(P0 - P1)) / (2*pi^2) with P0 estimated by the
    retained fraction; the error propagates the binomial error on P0 through
    the factor of 2 in P0 - P1 = 2*P0 - 1.
    """
    p0 = tally.p0_hat
    value = 0.5 * WIGNER_NORM * (1.0 - SQRT3 * (2.0 * p0 - 1.0))
    stderr = SQRT3 * WIGNER_NORM * math.sqrt(p0 * (1.0 - p0) / tally.total)
    return WignerEstimate(value=value, stderr=stderr, tally=tally)


def rotate_for_point(rho: DensityMatrix, point: PhasePoint) -> DensityMatrix:
    """Apply the two measurement rotations R_x(-chi) R_z(-xi)."""
    u = rotation_x(-point.chi) @ rotation_z(-point.xi)
    return conjugate_state(rho, u)


def expected_wigner_estimate(
    rho: DensityMatrix,
    point: PhasePoint,
    det: DetectionModel = IDEAL_DETECTION,
    contrast_mode: str = "off",
) -> float:
    """Expectation value of the shot estimator, imperfections included.

    With ideal detection and contrast off this coincides with the true
    Wigner value of the state.
    """
    if contrast_mode == "on":
        rho = scale_coherences(rho, det.contrast)
    p_ret = retain_probability(rotate_for_point(rho, point), det)
    return 0.5 * WIGNER_NORM * (1.0 - SQRT3 * (2.0 * p_ret - 1.0))


def run_wigner_point(
    rho: DensityMatrix,
    point: PhasePoint,
    shots: int,
    det: DetectionModel = IDEAL_DETECTION,
    contrast_mode: str = "off",
    rng: np.random.Generator | None = None,
) -> WignerEstimate:
    """Estimate the Wigner value at one phase point from ``shots`` push-out checks.

    With contrast mode on, the transverse Bloch components entering the
    rotation block are scaled by the flop contrast, so the measured
    population-difference amplitude degrades by the same factor.
    """
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    if contrast_mode not in CONTRAST_MODES:
        raise DomainError(f"contrast_mode must be one of {CONTRAST_MODES}")
    if rng is None:
        rng = np.random.default_rng()
    if contrast_mode == "on":
        rho = scale_coherences(rho, det.contrast)
    rotated = rotate_for_point(rho, point)
    p_ret = retain_probability(rotated, det)
    n_retained = int(np.count_nonzero(rng.random(shots) < p_ret))
    tally = ShotTally(n_retained=n_retained, n_lost=shots - n_retained, point=point)
    return wigner_estimate_from_tally(tally)


# ---------------------------------------------------------------------------
# Campaigns


@dataclass(frozen=True)
class CampaignConfig:
    """Fully parsed description of a Wigner measurement campaign."""

    state: DensityMatrix
    channel: ChannelParams
    pulses: PulseParams
    detection: DetectionModel
    times_ms: tuple[float, ...]
    points: tuple[PhasePoint, ...]
    shots: int = DEFAULT_SHOTS
    seed: int = 0
    application: str = "ensemble"
    contrast_mode: str = "off"
    z_overhead: bool = False

    def __post_init__(self):
        if self.shots < 1:
            raise DomainError("shots must be >= 1")
        if not self.times_ms:
            raise DomainError("at least one evolution time is required")
        if any(t < 0 for t in self.times_ms):
            raise DomainError("evolution times must be nonnegative")
        if not self.points:
            raise DomainError("at least one phase point is required")
        if self.application not in CHANNEL_APPLICATIONS:
            raise DomainError(f"application must be one of {CHANNEL_APPLICATIONS}")
        if self.contrast_mode not in CONTRAST_MODES:
            raise DomainError(f"contrast_mode must be one of {CONTRAST_MODES}")

    @classmethod
    def from_bloch(cls, state: BlochState, **kwargs) -> "CampaignConfig":
        return cls(state=density_from_bloch(state), **kwargs)


@dataclass(frozen=True)
class CampaignRow:
    t_ms: float
    estimate: WignerEstimate

    @property
    def point(self) -> PhasePoint:
        return self.estimate.tally.point


@dataclass(frozen=True)
class TimeSummary:
    """Located minimum of the estimates scanned at one evolution time."""

    t_ms: float
    w_min: float
    w_min_stderr: float
    argmin: PhasePoint
    r_model: float
    w_min_model: float


@dataclass(frozen=True)
class CampaignResult:
    config: CampaignConfig
    rows: tuple[CampaignRow, ...]
    per_time: tuple[TimeSummary, ...]

    def to_csv(self) -> str:
        lines = ["t_ms,xi,chi,n_retained,n_lost,w_est,w_stderr"]
        for row in self.rows:
            e = row.estimate
            lines.append(
                f"{row.t_ms:.17g},{row.point.xi:.17g},{row.point.chi:.17g},"
                f"{e.tally.n_retained},{e.tally.n_lost},{e.value:.17g},{e.stderr:.17g}"
            )
        return "\n".join(lines) + "\n"

    def summary_dict(self) -> dict:
        return {
            "seed": self.config.seed,
            "shots": self.config.shots,
            "per_time": [
                {
                    "t_ms": s.t_ms,
                    "w_min": s.w_min,
                    "w_min_stderr": s.w_min_stderr,
                    "xi_at_min": s.argmin.xi,
                    "chi_at_min": s.argmin.chi,
                    "r_model": s.r_model,
                    "w_min_model": s.w_min_model,
                }
                for s in self.per_time
            ],
        }


def _campaign_point_task(config: CampaignConfig, time_idx: int, point_idx: int) -> CampaignRow:
    t = config.times_ms[time_idx]
    point = config.points[point_idx]
    rng = derive_rng(config.seed, time_idx, point_idx)

    rho = apply_preparation(config.state, config.detection)
    if config.application == "jitter":
        jitter = JitterModel.from_channel(config.channel)
        rho = sample_dephased_state(rho, t, jitter, rng)
    else:
        rho = dephase(rho, t, config.channel)
    if config.z_overhead:
        extra = duration_for_z(point.xi, config.pulses) + config.pulses.z_rotation_overhead
        rho = dephase(rho, extra, config.channel)

    estimate = run_wigner_point(
        rho, point, config.shots, config.detection, config.contrast_mode, rng
    )
    return CampaignRow(t_ms=t, estimate=estimate)


def run_campaign(config: CampaignConfig, threads: int = 1) -> CampaignResult:
    """Run every (time, point) task and summarize the per-time minima.

    Deterministic for a given config and seed: each task draws from its own
    stream keyed by (seed, time index, point index) and results are assembled
    in configuration order regardless of the thread count.
    """
    tasks = [
        (ti, pi) for ti in range(len(config.times_ms)) for pi in range(len(config.points))
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda tp: _campaign_point_task(config, *tp), tasks))
    else:
        rows = [_campaign_point_task(config, ti, pi) for ti, pi in tasks]

    per_time = []
    n_points = len(config.points)
    for ti, t in enumerate(config.times_ms):
        chunk = rows[ti * n_points : (ti + 1) * n_points]
        best = min(chunk, key=lambda row: row.estimate.value)
        r_model = config.channel.r0 * decay_factor(t, config.channel)
        per_time.append(
            TimeSummary(
                t_ms=t,
                w_min=best.estimate.value,
                w_min_stderr=best.estimate.stderr,
                argmin=best.point,
                r_model=r_model,
                w_min_model=wigner_min_analytic(min(r_model, 1.0)),
            )
        )
    return CampaignResult(config=config, rows=tuple(rows), per_time=tuple(per_time))


# ---------------------------------------------------------------------------
# Ramsey interferometry


def ramsey_survival_ideal(t_delay: float, pulse: PulseParams, channel: ChannelParams) -> float:
    """Noise-free survival probability (1 + f(t) cos(detuning*t)) / 2."""
    return 0.5 * (1.0 + decay_factor(t_delay, channel) * math.cos(pulse.detuning * t_delay))


def ramsey_sequence(
    t_delay: float,
    pulse: PulseParams,
    channel: ChannelParams,
    det: DetectionModel = IDEAL_DETECTION,
    shots: int = 100,
    rng: np.random.Generator | None = None,
    contrast_mode: str = "off",
) -> SurvivalEstimate:
    """Simulate one delay of a two-pulse interference sequence.

    The atom starts in |1>, gets a pi/2 x-rotation, precesses freely at the
    pulse detuning while dephasing for ``t_delay``, gets a second pi/2
    x-rotation and is then detected. At zero delay the two pulses compose to
    a pi pulse, so ideal survival is exactly 1 (fringe extremum).
    """
    if t_delay < 0:
        raise DomainError("t_delay must be nonnegative")
    if shots < 1:
        raise DomainError("shots must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    half_pi_pulse = rotation_x(math.pi / 2.0)
    rho = conjugate_state(EXCITED, half_pi_pulse)
    rho = dephase(rho, t_delay, channel)
    rho = conjugate_state(rho, rotation_z(pulse.detuning * t_delay))
    if contrast_mode == "on":
        # Degrade the coherence entering the readout pulse, so the observed
        # fringe swings between (1 +- contrast)/2.
        rho = scale_coherences(rho, det.contrast)
    rho = conjugate_state(rho, half_pi_pulse)
    p_ret = retain_probability(rho, det)
    n_retained = int(np.count_nonzero(rng.random(shots) < p_ret))
    tally = ShotTally(n_retained=n_retained, n_lost=shots - n_retained)
    p_hat = n_retained / shots
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / shots)
    return SurvivalEstimate(t_ms=t_delay, p_survival=p_hat, stderr=stderr, tally=tally)


def run_ramsey_scan(
    delays_ms: tuple[float, ...],
    pulse: PulseParams,
    channel: ChannelParams,
    det: DetectionModel = IDEAL_DETECTION,
    shots: int = 100,
    seed: int = 0,
    contrast_mode: str = "off",
) -> list[SurvivalEstimate]:
    """Scan a list of delays, one derived stream per delay."""
    return [
        ramsey_sequence(t, pulse, channel, det, shots, derive_rng(seed, i), contrast_mode)
        for i, t in enumerate(delays_ms)
    ]
