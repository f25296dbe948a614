"""Command-line front end: experiment configs in, figure and table data out.

Subcommands: ``grid``, ``wmin``, ``simulate``, ``tomography``, ``ramsey``
(an alias of ``simulate`` for interference configs) and ``selftest``. Every
run writes its outputs plus a single ``manifest.json`` listing them.

Exit codes: 0 success, 1 failed selftest, 2 configuration error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    RamseyJob,
    TomographyJob,
    build_campaign,
    build_ramsey,
    build_tomography,
    bundled_config_path,
    config_hash,
    load_document,
    parse_angle,
    validate_document,
)
from .dephasing import decay_factor, dephase
from .estimation import (
    FitConvergenceError,
    FitResult,
    exact_expectations,
    fit_exponential_decay,
    fit_wmin_line,
    pauli_tallies_at_time,
    read_tally_csv,
    simulate_tomography,
    tomography_from_expectations,
    tomography_linear_inversion,
)
from .qubit import BlochState, DomainError, density_from_bloch
from .selftest import run_selftest
from .shots import (
    CampaignResult,
    apply_preparation,
    derive_rng,
    expected_wigner_estimate,
    run_campaign,
    run_ramsey_scan,
)
from .wigner import (
    R_NEGATIVITY_THRESHOLD,
    PhasePoint,
    grid_to_csv,
    grid_to_json_dict,
    wigner_grid,
    wigner_min_analytic,
)

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_STDERR_FLOOR = 1e-6


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class OutputCollector:
    """Tracks every file a command writes and emits the run manifest."""

    def __init__(self, out_dir: Path, command: str, params: dict, seed):
        self.out_dir = out_dir
        self.command = command
        self.params = params
        self.seed = seed
        self.files: list[str] = []
        self.t0 = time.perf_counter()

    def write_text(self, name: str, text: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8")
        self.files.append(name)
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        return self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def figure_path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return self.out_dir / name

    def finalize(self) -> Path:
        manifest = {
            "command": self.command,
            "config_hash": config_hash(self.params),
            "seed": self.seed,
            "toolkit_version": __version__,
            "wall_clock_s": time.perf_counter() - self.t0,
            "created_utc": _utc_now(),
            "files": list(self.files),
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _parse_state_flag(text: str) -> BlochState:
    """Parse ``theta=...,phi=...,r=...`` with pi literals; missing keys default
    to the equal superposition (pi/2, 0, 1)."""
    values = {"theta": math.pi / 2, "phi": 0.0, "r": 1.0}
    if text:
        for item in text.split(","):
            if "=" not in item:
                raise ConfigError([f"state: expected key=value, got {item!r}"])
            key, _, raw = item.partition("=")
            key = key.strip()
            if key not in values:
                raise ConfigError([f"state: unknown key {key!r}"])
            values[key] = float(raw) if key == "r" else parse_angle(raw)
    values["phi"] %= 2.0 * math.pi
    return BlochState(**values)


def _parse_span_flags(spans) -> dict[str, tuple[float, float]]:
    out = {}
    for item in spans or []:
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in ("xi", "chi") or ":" not in raw:
            raise ConfigError([f"span: expected xi=a:b or chi=a:b, got {item!r}"])
        lo, _, hi = raw.partition(":")
        out[key] = (parse_angle(lo), parse_angle(hi))
    return out


def _resolve_config_path(raw: str) -> tuple[dict, str]:
    """Load a config from disk, falling back to the bundled ones by name."""
    path = Path(raw)
    if path.exists():
        return load_document(path), str(path)
    bundled = bundled_config_path(Path(raw).name)
    if bundled.is_file():
        return json.loads(bundled.read_text()), f"bundled:{Path(raw).name}"
    raise FileNotFoundError(f"config file not found: {raw}")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_grid(args) -> int:
    state = _parse_state_flag(args.state)
    spans = _parse_span_flags(args.span)
    xi_span = spans.get("xi", (0.0, math.pi))
    chi_span = spans.get("chi", (0.0, 2.0 * math.pi))
    params = {
        "state": state.to_json_dict(),
        "n_xi": args.nxi,
        "n_chi": args.nchi,
        "xi_span": list(xi_span),
        "chi_span": list(chi_span),
    }
    out = OutputCollector(Path(args.out_dir), "grid", params, args.seed)

    rho = density_from_bloch(state)
    grid = wigner_grid(rho, args.nxi, args.nchi, xi_span, chi_span)
    out.write_text("grid.csv", grid_to_csv(grid))
    out.write_json("grid.json", grid_to_json_dict(grid, state=rho, created_utc=_utc_now()))
    if not args.no_figures:
        from . import plots

        plots.plot_wigner_grid(grid, out.figure_path("grid.png"))
    out.finalize()
    print(f"grid: {args.nxi}x{args.nchi} points, min {grid.values.min():.6f}, "
          f"max {grid.values.max():.6f} -> {out.out_dir}")
    return EXIT_OK


def cmd_wmin(args) -> int:
    if not (0.0 <= args.r_min < args.r_max <= 1.0):
        raise ConfigError([f"wmin: need 0 <= r-min < r-max <= 1, got [{args.r_min}, {args.r_max}]"])
    if args.steps < 2:
        raise ConfigError([f"wmin: steps must be >= 2, got {args.steps}"])
    params = {"r_min": args.r_min, "r_max": args.r_max, "steps": args.steps}
    out = OutputCollector(Path(args.out_dir), "wmin", params, args.seed)

    r_values = np.linspace(args.r_min, args.r_max, args.steps)
    w_values = [wigner_min_analytic(float(r)) for r in r_values]
    lines = ["r,w_min"]
    lines += [f"{r:.17g},{w:.17g}" for r, w in zip(r_values, w_values)]
    out.write_text("wmin_curve.csv", "\n".join(lines) + "\n")
    summary = {
        "r_zero_crossing": R_NEGATIVITY_THRESHOLD,
        "purity_at_crossing": 2.0 / 3.0,
        "w_at_r_min": w_values[0],
        "w_at_r_max": w_values[-1],
    }
    out.write_json("wmin_summary.json", summary)
    if args.format == "json":
        out.write_json("wmin_curve.json", {"r": r_values.tolist(), "w_min": list(w_values)})
    if not args.no_figures:
        from . import plots

        plots.plot_wmin_curve(r_values, w_values, out.figure_path("wmin_curve.png"))
    out.finalize()
    print(f"wmin: {args.steps} samples on [{args.r_min}, {args.r_max}], "
          f"zero crossing at r = {R_NEGATIVITY_THRESHOLD:.5f}")
    return EXIT_OK


def _campaign_figures(result: CampaignResult, out: OutputCollector, fit: FitResult | None):
    from . import plots

    config = result.config
    prepared = apply_preparation(config.state, config.detection)
    n_points = len(config.points)
    xis = sorted({p.xi for p in config.points})
    chis = sorted({p.chi for p in config.points})
    slice_along_chi = len(chis) >= len(xis)

    for ti, t in enumerate(config.times_ms):
        chunk = result.rows[ti * n_points : (ti + 1) * n_points]
        rho_t = dephase(prepared, t, config.channel)
        series = []
        outer = xis if slice_along_chi else chis
        for fixed in outer:
            if slice_along_chi:
                rows = [r for r in chunk if r.point.xi == fixed]
                xs = [r.point.chi for r in rows]
                label = f"xi = {fixed:.3f}"
            else:
                rows = [r for r in chunk if r.point.chi == fixed]
                xs = [r.point.xi for r in rows]
                label = f"chi = {fixed:.3f}"
            dense = np.linspace(min(xs), max(xs), 181)
            theory = [
                expected_wigner_estimate(
                    rho_t,
                    PhasePoint(fixed, x) if slice_along_chi else PhasePoint(x, fixed),
                    config.detection,
                    config.contrast_mode,
                )
                for x in dense
            ]
            series.append(
                {
                    "label": label,
                    "x": xs,
                    "y": [r.estimate.value for r in rows],
                    "yerr": [r.estimate.stderr for r in rows],
                    "theory_x": dense,
                    "theory_y": theory,
                }
            )
        xlabel = r"$\chi$ [rad]" if slice_along_chi else r"$\xi$ [rad]"
        plots.plot_point_scan(
            series, out.figure_path(f"campaign_t{t:g}.png"), xlabel, title=f"t = {t:g} ms"
        )

    if len(result.per_time) >= 2:
        points = [
            (s.r_model, s.w_min, max(s.w_min_stderr, _STDERR_FLOOR)) for s in result.per_time
        ]
        plots.plot_wmin_vs_r(points, fit, out.figure_path("wmin_vs_r.png"))


def _run_campaign_job(document: dict, args, out_dir: Path) -> int:
    config = build_campaign(document)
    out = OutputCollector(out_dir, "simulate", document, config.seed)
    result = run_campaign(config, threads=args.threads)
    out.write_text("campaign.csv", result.to_csv())

    summary = result.summary_dict()
    fit = None
    distinct_r = {round(s.r_model, 12) for s in result.per_time}
    if len(distinct_r) >= 2:
        points = [
            (s.r_model, s.w_min, max(s.w_min_stderr, _STDERR_FLOOR)) for s in result.per_time
        ]
        fit = fit_wmin_line(points)
        summary["wmin_line_fit"] = {
            "parameters": fit.parameters,
            "stderr": fit.stderr,
            "covariance": fit.covariance.tolist(),
            "residual_norm": fit.residual_norm,
        }
    out.write_json("campaign_summary.json", summary)
    if args.format == "json":
        rows = [
            {
                "t_ms": row.t_ms,
                "xi": row.point.xi,
                "chi": row.point.chi,
                "n_retained": row.estimate.tally.n_retained,
                "n_lost": row.estimate.tally.n_lost,
                "w_est": row.estimate.value,
                "w_stderr": row.estimate.stderr,
            }
            for row in result.rows
        ]
        out.write_json("campaign.json", {"rows": rows})
    if not args.no_figures:
        _campaign_figures(result, out, fit)
    out.finalize()
    for s in result.per_time:
        print(f"t = {s.t_ms:g} ms: W_min = {s.w_min:.5f} +- {s.w_min_stderr:.5f} "
              f"at (xi={s.argmin.xi:.3f}, chi={s.argmin.chi:.3f}); model {s.w_min_model:.5f}")
    if fit is not None:
        print(f"W_min(r) fit: zero crossing r = {fit.parameters['r_zero_crossing']:.4f} "
              f"+- {fit.stderr['r_zero_crossing']:.4f}")
    return EXIT_OK


def _run_ramsey_job(document: dict, args, out_dir: Path) -> int:
    job: RamseyJob = build_ramsey(document)
    out = OutputCollector(out_dir, "simulate", document, job.seed)
    estimates = run_ramsey_scan(
        job.delays_ms, job.pulses, job.channel, job.detection,
        shots=job.shots, seed=job.seed, contrast_mode=job.contrast_mode,
    )
    lines = ["t_ms,n_retained,n_lost,p_survival,p_stderr"]
    for e in estimates:
        lines.append(
            f"{e.t_ms:.17g},{e.tally.n_retained},{e.tally.n_lost},"
            f"{e.p_survival:.17g},{e.stderr:.17g}"
        )
    out.write_text("ramsey.csv", "\n".join(lines) + "\n")

    floor = 0.5 / job.shots
    samples = [
        (e.t_ms, e.p_survival, 1.0 / max(e.stderr, floor) ** 2) for e in estimates
    ]
    try:
        fit = fit_exponential_decay(samples, mode="fringe")
    except FitConvergenceError:
        out.finalize()  # the scan data is worth keeping even if the fit fails
        raise
    out.write_json(
        "ramsey_fit.json",
        {
            "parameters": fit.parameters,
            "stderr": fit.stderr,
            "covariance": fit.covariance.tolist(),
            "residual_norm": fit.residual_norm,
            "t_decay_ms": fit.parameters["t_decay"],
            "t_decay_stderr_ms": fit.stderr["t_decay"],
        },
    )
    if not args.no_figures:
        from . import plots

        p = fit.parameters
        dense = np.linspace(min(job.delays_ms), max(job.delays_ms), 600)
        curve = p["amplitude"] * np.exp(-dense / p["t_decay"]) * np.cos(
            p["omega"] * dense + p["phi0"]
        ) + p["offset"]
        plots.plot_ramsey(
            [e.t_ms for e in estimates],
            [e.p_survival for e in estimates],
            [e.stderr for e in estimates],
            out.figure_path("ramsey.png"),
            fit_curve=(dense, curve),
        )
    out.finalize()
    print(f"ramsey: fitted 1/e decay time {fit.parameters['t_decay']:.2f} "
          f"+- {fit.stderr['t_decay']:.2f} ms over {len(estimates)} delays")
    return EXIT_OK


def cmd_simulate(args) -> int:
    document, origin = _resolve_config_path(args.config)
    if args.seed is not None:
        document["seed"] = args.seed
    kind = validate_document(document)
    out_dir = Path(args.out_dir)
    print(f"simulate: {origin} ({kind})")
    if kind == "campaign":
        return _run_campaign_job(document, args, out_dir)
    if kind == "ramsey":
        return _run_ramsey_job(document, args, out_dir)
    raise ConfigError([f"simulate cannot run a {kind!r} config; use the {kind} command"])


def cmd_tomography(args) -> int:
    document, origin = _resolve_config_path(args.config)
    if args.seed is not None:
        document["seed"] = args.seed
    kind = validate_document(document)
    if kind != "tomography":
        raise ConfigError([f"tomography cannot run a {kind!r} config"])
    job: TomographyJob = build_tomography(document)
    out = OutputCollector(Path(args.out_dir), "tomography", document, job.seed)
    print(f"tomography: {origin} ({job.mode})")

    results = []
    tally_lines = ["basis,t_ms,xi,chi,n_retained,n_lost"]
    if job.mode == "import":
        text = Path(job.import_path).read_text(encoding="utf-8")
        records = read_tally_csv(text)
        times = sorted({rec.t_ms for rec in records if rec.basis in ("x", "y", "z")})
        for t in times:
            tallies = pauli_tallies_at_time(records, t)
            results.append((t, tomography_linear_inversion(tallies)))
    else:
        for ti, t in enumerate(job.times_ms):
            rho_t = dephase(job.state, t, job.channel)
            if job.mode == "noiseless":
                sx, sy, sz = exact_expectations(rho_t)
                results.append((t, tomography_from_expectations(sx, sy, sz)))
            else:
                tallies = simulate_tomography(
                    rho_t, job.shots_per_basis, job.detection, derive_rng(job.seed, ti)
                )
                for basis in ("x", "y", "z"):
                    tal = getattr(tallies, f"tally_{basis}")
                    tally_lines.append(f"{basis},{t:.17g},0,0,{tal.n_retained},{tal.n_lost}")
                results.append((t, tomography_linear_inversion(tallies)))

    if len(tally_lines) > 1:
        out.write_text("tomography_tallies.csv", "\n".join(tally_lines) + "\n")
    payload = {
        "mode": job.mode,
        "results": [dict(t_ms=t, **res.to_json_dict()) for t, res in results],
    }
    out.write_json("tomography.json", payload)
    if not args.no_figures:
        from . import plots

        times = [t for t, _ in results]
        model_t = model_r = None
        if job.mode != "import":
            model_t = np.linspace(min(times), max(times), 100) if len(times) > 1 else np.array(times)
            model_r = [job.channel.r0 * decay_factor(t, job.channel) for t in model_t]
        plots.plot_tomography_series(
            times,
            [res.bloch.r for _, res in results],
            [res.purity for _, res in results],
            out.figure_path("tomography.png"),
            model_times=model_t,
            model_r=model_r,
        )
    out.finalize()
    for t, res in results:
        flag = " (clamped)" if res.clamped else ""
        print(f"t = {t:g} ms: purity = {res.purity:.3f}, r = {res.bloch.r:.3f}{flag}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest()
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"selftest: {len(failed)} of {len(results)} invariant checks FAILED")
        return EXIT_SELFTEST
    print(f"selftest: all {len(results)} invariant checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwigner",
        description="Continuous Wigner functions of a qubit: exact maps, "
        "shot-noise measurement simulation, tomography and fits.",
    )
    parser.add_argument("--version", action="version", version=f"qwigner {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="override the random seed (configs carry their own)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for campaigns (identical results for any count)")
        p.add_argument("--out-dir", default="qwigner_out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="tabular output format; json adds JSON twins of the CSV tables")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("grid", help="sample the Wigner function of a state on a grid")
    common(p)
    p.add_argument("--state", default="", metavar="SPEC",
                   help="theta=..,phi=..,r=.. with pi literals (default pi/2,0,1)")
    p.add_argument("--nxi", type=int, default=201, help="samples along xi")
    p.add_argument("--nchi", type=int, default=201, help="samples along chi")
    p.add_argument("--span", action="append", metavar="AXIS=LO:HI",
                   help="axis span, e.g. --span xi=0:2pi (repeatable)")
    p.set_defaults(handler=cmd_grid)

    p = sub.add_parser("wmin", help="tabulate the minimum Wigner value versus Bloch radius")
    common(p)
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=201)
    p.set_defaults(handler=cmd_wmin)

    p = sub.add_parser("simulate", help="run a measurement campaign or interference scan config")
    common(p)
    p.add_argument("config", help="config JSON path, or a bundled name like fig3.json")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("ramsey", help="alias of simulate for interference configs")
    common(p)
    p.add_argument("config", help="config JSON path, or the bundled ramsey.json")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("tomography", help="reconstruct states from simulated or imported tallies")
    common(p)
    p.add_argument("config", help="config JSON path, or the bundled table1.json")
    p.set_defaults(handler=cmd_tomography)

    p = sub.add_parser("selftest", help="run the fast invariant suite")
    common(p)  # accepted for flag uniformity; the suite writes no files
    p.set_defaults(handler=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
