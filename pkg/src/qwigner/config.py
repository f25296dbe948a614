"""Experiment configuration: the pi-literal angle grammar, JSON Schema
validation with field-level messages, and builders that turn validated
documents into the runnable job objects.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from .dephasing import ChannelParams
from .qubit import BlochState, DensityMatrix, density_from_bloch
from .shots import CampaignConfig, DetectionModel, PulseParams
from .wigner import PhasePoint

SCHEMA_VERSION = 1

_PI_LITERAL = re.compile(
    r"^\s*(?P<coef>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*pi\s*(?:/\s*(?P<div>\d+\.?\d*))?\s*$"
)


class ConfigError(ValueError):
    """Invalid experiment configuration; carries field-level messages."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def parse_angle(value) -> float:
    """Parse an angle in radians, accepting pi literals.

    Accepted forms: plain numbers (``1.57``), ``pi``, ``2pi``, ``0.509pi``,
    ``-0.5pi``, ``pi/2``, ``3pi/4``.
    """
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError([f"angle must be a number or string, got {type(value).__name__}"])
    m = _PI_LITERAL.match(value)
    if m:
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        div = float(m.group("div")) if m.group("div") else 1.0
        if div == 0:
            raise ConfigError([f"division by zero in angle {value!r}"])
        return coef * math.pi / div
    try:
        return float(value)
    except ValueError:
        raise ConfigError([f"cannot parse angle {value!r}"]) from None


def parse_angle_axis(spec) -> tuple[float, ...]:
    """An explicit list of angles, or a linspace described by start/stop/count."""
    if isinstance(spec, list):
        return tuple(parse_angle(v) for v in spec)
    start = parse_angle(spec["start"])
    stop = parse_angle(spec["stop"])
    count = int(spec["count"])
    endpoint = bool(spec.get("endpoint", True))
    return tuple(float(v) for v in np.linspace(start, stop, count, endpoint=endpoint))


def parse_time_axis(spec) -> tuple[float, ...]:
    """Like :func:`parse_angle_axis` but for times in ms (no pi literals)."""
    if isinstance(spec, list):
        return tuple(float(v) for v in spec)
    values = np.linspace(
        float(spec["start"]), float(spec["stop"]), int(spec["count"]),
        endpoint=bool(spec.get("endpoint", True)),
    )
    return tuple(float(v) for v in values)


def config_hash(document: dict) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON encoding."""
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_schema() -> dict:
    text = resources.files("qwigner").joinpath("configs/experiment.schema.json").read_text()
    return json.loads(text)


def bundled_config_path(name: str):
    """Traversable for a configuration shipped with the package."""
    return resources.files("qwigner").joinpath(f"configs/{name}")


_KIND_BLOCKS = {"scan": "campaign", "ramsey": "ramsey", "tomography": "tomography"}


def detect_kind(document: dict) -> str:
    """Which job a document describes, judged by its discriminating block."""
    present = [block for block in _KIND_BLOCKS if block in document]
    if len(present) != 1:
        raise ConfigError(
            [f"config must contain exactly one of {sorted(_KIND_BLOCKS)}, found {present or 'none'}"]
        )
    return _KIND_BLOCKS[present[0]]


def validate_document(document: dict) -> str:
    """Schema-validate a config document; returns the detected job kind."""
    if not isinstance(document, dict):
        raise ConfigError(["config root must be a JSON object"])
    if document.get("schema") != SCHEMA_VERSION:
        raise ConfigError([f"schema: expected version {SCHEMA_VERSION}, got {document.get('schema')!r}"])
    kind = detect_kind(document)
    schema = load_schema()
    subschema = {"$defs": schema["$defs"], "$ref": f"#/$defs/{kind}_config"}
    validator = jsonschema.Draft202012Validator(subschema)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        messages = []
        for err in errors:
            path = "/".join(str(p) for p in err.absolute_path) or "<root>"
            messages.append(f"{path}: {err.message}")
        raise ConfigError(messages)
    return kind


def parse_state(spec: dict) -> DensityMatrix:
    if "re" in spec:
        return DensityMatrix.from_json_dict(spec)
    state = BlochState(
        theta=parse_angle(spec["theta"]),
        phi=parse_angle(spec["phi"]) % (2.0 * math.pi),
        r=float(spec["r"]),
    )
    return density_from_bloch(state)


def _channel_from(document: dict) -> ChannelParams:
    return ChannelParams.from_json_dict(document.get("channel", {}))


def _pulses_from(document: dict) -> PulseParams:
    return PulseParams.from_json_dict(document.get("pulses", {}))


def _detection_from(document: dict) -> tuple[DetectionModel, str]:
    block = dict(document.get("detection", {}))
    contrast_mode = block.pop("contrast_mode", "off")
    return DetectionModel.from_json_dict(block), contrast_mode


@dataclass(frozen=True)
class RamseyJob:
    """Parsed interference scan: delays, pulses, channel, detection."""

    delays_ms: tuple[float, ...]
    shots: int
    pulses: PulseParams
    channel: ChannelParams
    detection: DetectionModel
    contrast_mode: str
    seed: int


@dataclass(frozen=True)
class TomographyJob:
    """Parsed tomography run over a list of evolution times."""

    mode: str
    state: DensityMatrix | None
    channel: ChannelParams
    detection: DetectionModel
    times_ms: tuple[float, ...]
    shots_per_basis: int
    seed: int
    import_path: str | None


def build_campaign(document: dict) -> CampaignConfig:
    scan = document["scan"]
    xi_axis = parse_angle_axis(scan["xi"])
    chi_axis = parse_angle_axis(scan["chi"])
    points = tuple(PhasePoint(xi, chi) for xi in xi_axis for chi in chi_axis)
    detection, contrast_mode = _detection_from(document)
    return CampaignConfig(
        state=parse_state(document["state"]),
        channel=_channel_from(document),
        pulses=_pulses_from(document),
        detection=detection,
        times_ms=tuple(float(t) for t in scan["times_ms"]),
        points=points,
        shots=int(document.get("shots", 300)),
        seed=int(document.get("seed", 0)),
        application=scan.get("application", "ensemble"),
        contrast_mode=contrast_mode,
        z_overhead=bool(scan.get("z_overhead", False)),
    )


def build_ramsey(document: dict) -> RamseyJob:
    block = document["ramsey"]
    detection, _ = _detection_from(document)
    return RamseyJob(
        delays_ms=parse_time_axis(block["delays_ms"]),
        shots=int(block.get("shots", 100)),
        pulses=_pulses_from(document),
        channel=_channel_from(document),
        detection=detection,
        contrast_mode=block.get("contrast_mode", "off"),
        seed=int(document.get("seed", 0)),
    )


def build_tomography(document: dict) -> TomographyJob:
    block = document["tomography"]
    mode = block["mode"]
    state = None
    if mode in ("simulate", "noiseless"):
        if "state" not in document:
            raise ConfigError([f"state: required for tomography mode {mode!r}"])
        state = parse_state(document["state"])
    import_path = block.get("import_path")
    if mode == "import" and not import_path:
        raise ConfigError(["tomography/import_path: required for import mode"])
    detection, _ = _detection_from(document)
    return TomographyJob(
        mode=mode,
        state=state,
        channel=_channel_from(document),
        detection=detection,
        times_ms=tuple(float(t) for t in block.get("times_ms", [0.0])),
        shots_per_basis=int(block.get("shots_per_basis", 300)),
        seed=int(document.get("seed", 0)),
        import_path=import_path,
    )


def load_document(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"invalid JSON: {exc}"]) from exc
