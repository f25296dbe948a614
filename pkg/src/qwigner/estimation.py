"""Inference from shot data: Pauli-basis state tomography by linear
inversion, Wigner-point estimation, bootstrap error bars, interference-decay
fits and the straight-line fit of the Wigner minimum against Bloch radius.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .qubit import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    BlochState,
    DensityMatrix,
    DomainError,
    bloch_from_density,
    conjugate_state,
    purity,
    rotation_x,
    rotation_z,
)
from .shots import (
    IDEAL_DETECTION,
    DetectionModel,
    ShotTally,
    WignerEstimate,
    apply_preparation,
    retain_probability,
    wigner_estimate_from_tally,
)

BASIS_ORDER = ("x", "y", "z")

# Pre-rotations sending each Pauli axis onto the detection (z) axis; the
# signs are pinned by requiring that simulate-then-invert is the identity on
# expectation values.
_PREROTATIONS = {
    "x": rotation_x(math.pi / 2) @ rotation_z(math.pi / 2),
    "y": rotation_x(math.pi / 2),
    "z": IDENTITY,
}

_PAULIS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


class FitConvergenceError(RuntimeError):
    """A least-squares fit failed to converge or hit a degenerate optimum."""


@dataclass(frozen=True)
class PauliTallies:
    """Retained/lost counts for measurements in the three Pauli bases."""

    tally_x: ShotTally
    tally_y: ShotTally
    tally_z: ShotTally

    def expectation(self, basis: str) -> float:
        t = getattr(self, f"tally_{basis}")
        return (t.n_retained - t.n_lost) / t.total

    def shots(self, basis: str) -> int:
        return getattr(self, f"tally_{basis}").total


@dataclass(frozen=True)
class TomographyResult:
    """Reconstructed state with per-entry standard errors."""

    rho: DensityMatrix
    bloch: BlochState
    purity: float
    entry_errors: dict
    clamped: bool
    bloch_covariance: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "rho": self.rho.to_json_dict(),
            "bloch": self.bloch.to_json_dict(),
            "purity": self.purity,
            "r": self.bloch.r,
            "entry_errors": dict(self.entry_errors),
            "clamped": self.clamped,
            "bloch_covariance": np.asarray(self.bloch_covariance).tolist(),
        }


@dataclass(frozen=True)
class FitResult:
    """Converged least-squares fit: parameters, errors, covariance."""

    parameters: dict
    stderr: dict
    covariance: np.ndarray
    residual_norm: float
    converged: bool


@dataclass(frozen=True)
class BootstrapInterval:
    """Percentile bootstrap interval around a point statistic."""

    low: float
    high: float
    point: float


def simulate_tomography(
    rho: DensityMatrix,
    shots_per_basis: int,
    det: DetectionModel = IDEAL_DETECTION,
    rng: np.random.Generator | None = None,
) -> PauliTallies:
    """Draw shot counts for the three Pauli bases.

    The x and y bases are realized by pre-rotating the state and detecting
    along z, exactly as in the measurement sequence.
    """
    if shots_per_basis < 1:
        raise DomainError("shots_per_basis must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    prepared = apply_preparation(rho, det)
    tallies = {}
    for basis in BASIS_ORDER:
        rotated = conjugate_state(prepared, _PREROTATIONS[basis])
        p_ret = retain_probability(rotated, det)
        n_ret = int(np.count_nonzero(rng.random(shots_per_basis) < p_ret))
        tallies[basis] = ShotTally(n_retained=n_ret, n_lost=shots_per_basis - n_ret)
    return PauliTallies(tally_x=tallies["x"], tally_y=tallies["y"], tally_z=tallies["z"])


def tomography_from_expectations(
    sx: float,
    sy: float,
    sz: float,
    shots_per_basis: tuple[int, int, int] | None = None,
) -> TomographyResult:
    """Linear inversion rho = (I + sx*X + sy*Y + sz*Z)/2 with radial clamping.

    With ``shots_per_basis`` given, entry errors follow from the binomial
    variance of each expectation; without it the errors are reported as zero
    (exact expectations).
    """
    vec = np.array([sx, sy, sz], dtype=float)
    r_raw = float(np.linalg.norm(vec))
    clamped = r_raw > 1.0
    if clamped:
        vec = vec / r_raw
    m = 0.5 * (IDENTITY + vec[0] * SIGMA_X + vec[1] * SIGMA_Y + vec[2] * SIGMA_Z)
    rho = DensityMatrix.sanitized(m)
    bloch = bloch_from_density(rho)

    if shots_per_basis is None:
        se = np.zeros(3)
    else:
        raw = np.array([sx, sy, sz], dtype=float)
        se = np.sqrt(np.clip(1.0 - raw**2, 0.0, None) / np.asarray(shots_per_basis, dtype=float))
    cov = np.diag(se**2)
    entry_errors = {
        "rho11": 0.5 * se[2],
        "rho22": 0.5 * se[2],
        "re_rho12": 0.5 * se[0],
        "im_rho12": 0.5 * se[1],
    }
    return TomographyResult(
        rho=rho,
        bloch=bloch,
        purity=purity(rho),
        entry_errors=entry_errors,
        clamped=clamped,
        bloch_covariance=cov,
    )


def tomography_linear_inversion(tallies: PauliTallies) -> TomographyResult:
    """Invert measured Pauli tallies into a physical state estimate."""
    s = {b: tallies.expectation(b) for b in BASIS_ORDER}
    n = tuple(tallies.shots(b) for b in BASIS_ORDER)
    return tomography_from_expectations(s["x"], s["y"], s["z"], shots_per_basis=n)


def exact_expectations(rho: DensityMatrix) -> tuple[float, float, float]:
    """Noise-free Pauli expectations of a state (for the noiseless pipeline)."""
    return tuple(float(np.trace(rho.matrix @ _PAULIS[b]).real) for b in BASIS_ORDER)


def estimate_wigner_from_tally(tally: ShotTally) -> WignerEstimate:
    """Wigner value and standard error from an imported tally.

    Identical arithmetic to the post-processing inside a simulated campaign.
    """
    return wigner_estimate_from_tally(tally)


# ---------------------------------------------------------------------------
# Least-squares fits


def _parse_samples(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    ts, ys, ws = [], [], []
    weighted = False
    for row in samples:
        if len(row) == 2:
            t, y = row
            w = 1.0
        else:
            t, y, w = row
            weighted = True
        if w <= 0:
            raise DomainError(f"weights must be positive, got {w}")
        ts.append(float(t))
        ys.append(float(y))
        ws.append(float(w))
    return np.array(ts), np.array(ys), np.array(ws), weighted


def _covariance(jac: np.ndarray, resid: np.ndarray, n_params: int, absolute: bool) -> np.ndarray:
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError as exc:
        raise FitConvergenceError("singular normal equations; parameters not identifiable") from exc
    if not absolute:
        dof = max(1, resid.size - n_params)
        cov = cov * float(resid @ resid) / dof
    return cov


def _fringe_initial_guess(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Coarse frequency scan: solve the linear-in-(cos, sin, const) model on a
    grid of trial angular frequencies and keep the best."""
    c0 = float(np.mean(y))
    span = float(t.max() - t.min())
    dt = float(np.median(np.diff(np.sort(t))))
    freqs = np.linspace(0.5 * math.pi / span, math.pi / dt, 512)
    best = None
    for omega in freqs:
        design = np.column_stack([np.cos(omega * t), np.sin(omega * t), np.ones_like(t)])
        coef, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
        sse = float(res[0]) if res.size else float(np.sum((y - design @ coef) ** 2))
        if best is None or sse < best[0]:
            best = (sse, omega, coef)
    _, omega0, coef = best
    amp0 = math.hypot(coef[0], coef[1])
    phi0 = math.atan2(-coef[1], coef[0])
    return np.array([amp0, span, omega0, phi0, c0])


def fit_exponential_decay(samples, mode: str = "envelope", p0=None, max_iter: int = 200) -> FitResult:
    """Fit a decaying amplitude or a full decaying fringe.

    ``mode="envelope"`` fits amplitude = A * exp(-t/T); ``mode="fringe"``
    fits A * exp(-t/T) * cos(omega*t + phi0) + c. Samples are (t, y) or
    (t, y, weight) with inverse-variance weights; when weights are supplied
    the reported errors treat them as absolute, otherwise they are scaled by
    the reduced chi-square.
    """
    if mode not in ("envelope", "fringe"):
        raise DomainError(f"unknown fit mode {mode!r}")
    t, y, w, weighted = _parse_samples(samples)
    if np.unique(t).size < 3:
        raise DomainError("need at least 3 distinct times")
    sw = np.sqrt(w)

    if mode == "envelope":
        names = ["amplitude", "t_decay"]

        def model(p):
            return p[0] * np.exp(-t / p[1])

        if p0 is None:
            positive = y > 0
            if np.count_nonzero(positive) >= 2:
                slope, loga = np.polyfit(t[positive], np.log(y[positive]), 1)
                t0 = -1.0 / slope if slope < 0 else float(t.max() - t.min())
                p0 = np.array([math.exp(loga), max(t0, 1e-6)])
            else:
                p0 = np.array([float(np.max(np.abs(y))), float(t.max() - t.min())])
    else:
        names = ["amplitude", "t_decay", "omega", "phi0", "offset"]

        def model(p):
            return p[0] * np.exp(-t / p[1]) * np.cos(p[2] * t + p[3]) + p[4]

        if p0 is None:
            p0 = _fringe_initial_guess(t, y)
    p0 = np.asarray(p0, dtype=float)
    if t.size < p0.size:
        raise DomainError(f"{mode} fit needs at least {p0.size} samples, got {t.size}")

    def residuals(p):
        return sw * (y - model(p))

    res = least_squares(residuals, p0, method="lm", xtol=1e-10, ftol=1e-12, max_nfev=max_iter * (p0.size + 1))
    t_fit = float(res.x[1])
    span = float(t.max() - t.min())
    if not res.success:
        raise FitConvergenceError(f"fit did not converge: {res.message}")
    if not (0 < t_fit < 1e6 * span):
        raise FitConvergenceError(f"decay time {t_fit} is not identifiable from the data")

    cov = _covariance(res.jac, res.fun, p0.size, absolute=weighted)
    se = np.sqrt(np.diag(cov))
    return FitResult(
        parameters=dict(zip(names, map(float, res.x))),
        stderr=dict(zip(names, map(float, se))),
        covariance=cov,
        residual_norm=float(np.linalg.norm(res.fun)),
        converged=True,
    )


def fit_wmin_line(points) -> FitResult:
    """Weighted straight-line fit of Wigner minima against Bloch radius.

    Points are (r, w_min) or (r, w_min, error). Reports slope, intercept and
    the zero crossing -intercept/slope with its propagated error.
    """
    rs, ws, errs = [], [], []
    for row in points:
        if len(row) == 2:
            r, wm = row
            e = 0.0
        else:
            r, wm, e = row
        rs.append(float(r))
        ws.append(float(wm))
        errs.append(float(e))
    r = np.array(rs)
    y = np.array(ws)
    err = np.array(errs)
    if np.unique(r).size < 2:
        raise DomainError("need at least 2 distinct r values")

    has_errors = np.any(err > 0)
    if has_errors:
        if np.any(err <= 0):
            raise DomainError("all points need positive errors when weighting")
        weight = 1.0 / err**2
    else:
        weight = np.ones_like(r)
    sw = np.sqrt(weight)
    design = np.column_stack([r, np.ones_like(r)])
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])

    resid = sw * (y - design @ coef)
    cov = _covariance(design * sw[:, None], resid, 2, absolute=has_errors)
    if slope == 0.0:
        raise FitConvergenceError("zero slope: no crossing")
    crossing = -intercept / slope
    var_cross = (cov[1, 1] + crossing**2 * cov[0, 0] + 2.0 * crossing * cov[0, 1]) / slope**2
    se = np.sqrt(np.diag(cov))
    return FitResult(
        parameters={"slope": slope, "intercept": intercept, "r_zero_crossing": crossing},
        stderr={
            "slope": float(se[0]),
            "intercept": float(se[1]),
            "r_zero_crossing": float(math.sqrt(max(0.0, var_cross))),
        },
        covariance=cov,
        residual_norm=float(np.linalg.norm(resid)),
        converged=True,
    )


# ---------------------------------------------------------------------------
# Bootstrap


def bootstrap_errors(
    tallies,
    resamples: int,
    statistic,
    rng: np.random.Generator | None = None,
    percentiles: tuple[float, float] = (2.5, 97.5),
) -> BootstrapInterval:
    """Percentile bootstrap of a statistic over count resampling.

    ``tallies`` is a single :class:`ShotTally` or a :class:`PauliTallies`;
    counts are redrawn binomially at the observed rates and the statistic is
    re-evaluated on each resample.
    """
    if resamples < 100:
        raise DomainError("resamples must be >= 100")
    if rng is None:
        rng = np.random.default_rng()

    def resample_tally(t: ShotTally, size: int) -> list[ShotTally]:
        draws = rng.binomial(t.total, t.p0_hat, size=size)
        return [ShotTally(int(k), t.total - int(k), t.point) for k in draws]

    if isinstance(tallies, ShotTally):
        point = float(statistic(tallies))
        values = [float(statistic(t)) for t in resample_tally(tallies, resamples)]
    elif isinstance(tallies, PauliTallies):
        point = float(statistic(tallies))
        xs = resample_tally(tallies.tally_x, resamples)
        ys = resample_tally(tallies.tally_y, resamples)
        zs = resample_tally(tallies.tally_z, resamples)
        values = [
            float(statistic(PauliTallies(tx, ty, tz))) for tx, ty, tz in zip(xs, ys, zs)
        ]
    else:
        raise DomainError(f"cannot bootstrap object of type {type(tallies).__name__}")

    low, high = np.percentile(values, percentiles)
    return BootstrapInterval(low=float(low), high=float(high), point=point)


# ---------------------------------------------------------------------------
# Tally file interchange


@dataclass(frozen=True)
class TallyRecord:
    """One row of the tally interchange format."""

    basis: str
    t_ms: float
    xi: float
    chi: float
    n_retained: int
    n_lost: int


TALLY_CSV_HEADER = ["basis", "t_ms", "xi", "chi", "n_retained", "n_lost"]


def read_tally_csv(text: str) -> list[TallyRecord]:
    """Parse the ``basis,t_ms,xi,chi,n_retained,n_lost`` interchange format."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != TALLY_CSV_HEADER:
        raise DomainError(f"tally CSV must start with header {','.join(TALLY_CSV_HEADER)}")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 6:
            raise DomainError(f"line {lineno}: expected 6 fields, got {len(row)}")
        basis = row[0].strip().lower()
        if basis not in ("x", "y", "z", "", "w"):
            raise DomainError(f"line {lineno}: unknown basis {row[0]!r}")
        try:
            record = TallyRecord(
                basis=basis,
                t_ms=float(row[1]),
                xi=float(row[2]),
                chi=float(row[3]),
                n_retained=int(row[4]),
                n_lost=int(row[5]),
            )
        except ValueError as exc:
            raise DomainError(f"line {lineno}: {exc}") from exc
        if record.n_retained < 0 or record.n_lost < 0 or record.n_retained + record.n_lost == 0:
            raise DomainError(f"line {lineno}: invalid counts")
        records.append(record)
    if not records:
        raise DomainError("tally CSV contains no data rows")
    return records


def pauli_tallies_at_time(records: list[TallyRecord], t_ms: float) -> PauliTallies:
    """Collect the x/y/z tallies measured at one evolution time."""
    found = {}
    for rec in records:
        if rec.basis in ("x", "y", "z") and abs(rec.t_ms - t_ms) < 1e-9:
            found[rec.basis] = ShotTally(rec.n_retained, rec.n_lost)
    missing = [b for b in BASIS_ORDER if b not in found]
    if missing:
        raise DomainError(f"no {'/'.join(missing)} basis rows at t_ms={t_ms}")
    return PauliTallies(tally_x=found["x"], tally_y=found["y"], tally_z=found["z"])
