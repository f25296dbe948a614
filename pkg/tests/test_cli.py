import json
import math

import numpy as np
import pytest

from qwigner.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_SELFTEST,
    build_parser,
    main,
)


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


def assert_no_orphan_writes(out_dir):
    manifest = read_manifest(out_dir)
    on_disk = {p.name for p in out_dir.iterdir()} - {"manifest.json"}
    assert on_disk == set(manifest["files"])


class TestGrid:
    def test_default_grid(self, tmp_path):
        out = tmp_path / "grid"
        assert main(["grid", "--out-dir", str(out)]) == EXIT_OK
        lines = (out / "grid.csv").read_text().strip().split("\n")
        assert lines[0] == "xi,chi,w"
        assert len(lines) == 1 + 201 * 201
        values = np.array([float(l.split(",")[2]) for l in lines[1:]])
        assert abs(values.min() - (-0.0371)) < 1e-4
        payload = json.loads((out / "grid.json").read_text())
        assert payload["resolution"] == [201, 201]
        assert (out / "grid.png").exists()
        assert_no_orphan_writes(out)

    def test_flat_state_constant_grid(self, tmp_path):
        out = tmp_path / "flat"
        assert main(["grid", "--state", "r=0", "--nxi", "11", "--nchi", "11",
                     "--out-dir", str(out), "--no-figures"]) == EXIT_OK
        values = [float(l.split(",")[2]) for l in
                  (out / "grid.csv").read_text().strip().split("\n")[1:]]
        assert all(abs(v - 0.050660) < 1e-6 for v in values)

    def test_full_period_span(self, tmp_path):
        out = tmp_path / "span"
        assert main(["grid", "--span", "xi=0:2pi", "--nxi", "21", "--nchi", "5",
                     "--out-dir", str(out), "--no-figures"]) == EXIT_OK
        payload = json.loads((out / "grid.json").read_text())
        assert abs(payload["xi_axis"][-1] - 2 * math.pi) < 1e-12

    def test_bad_state_flag(self, tmp_path):
        assert main(["grid", "--state", "radius=1", "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_span_flag(self, tmp_path):
        assert main(["grid", "--span", "xi=zero:pi", "--out-dir", str(tmp_path)]) == EXIT_CONFIG


class TestWmin:
    def test_full_range_endpoints_and_crossing(self, tmp_path):
        out = tmp_path / "wmin"
        assert main(["wmin", "--steps", "101", "--out-dir", str(out)]) == EXIT_OK
        lines = (out / "wmin_curve.csv").read_text().strip().split("\n")
        assert lines[0] == "r,w_min"
        first = float(lines[1].split(",")[1])
        last = float(lines[-1].split(",")[1])
        assert abs(first - 0.0507) < 1e-4
        assert abs(last - (-0.0371)) < 1e-4
        summary = json.loads((out / "wmin_summary.json").read_text())
        assert abs(summary["r_zero_crossing"] - 0.57735) < 1e-5
        # the tabulated sign change brackets the crossing within one step
        rows = [tuple(map(float, l.split(","))) for l in lines[1:]]
        sign_flip = [i for i in range(len(rows) - 1) if rows[i][1] > 0 >= rows[i + 1][1]]
        assert len(sign_flip) == 1
        assert abs(rows[sign_flip[0]][0] - 0.57735) < 0.01 + 1.0 / 100
        assert (out / "wmin_curve.png").exists()
        assert_no_orphan_writes(out)

    def test_single_step_rejected(self, tmp_path):
        assert main(["wmin", "--steps", "1", "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_range_rejected(self, tmp_path):
        assert main(["wmin", "--r-min", "0.9", "--r-max", "0.5",
                     "--out-dir", str(tmp_path)]) == EXIT_CONFIG


class TestSimulate:
    def test_bundled_fig3(self, tmp_path):
        out = tmp_path / "fig3"
        assert main(["simulate", "fig3.json", "--out-dir", str(out)]) == EXIT_OK
        lines = (out / "campaign.csv").read_text().strip().split("\n")
        assert lines[0] == "t_ms,xi,chi,n_retained,n_lost,w_est,w_stderr"
        assert len(lines) == 1 + 5 * 25
        summary = json.loads((out / "campaign_summary.json").read_text())
        assert len(summary["per_time"]) == 1
        assert (out / "campaign_t0.png").exists()
        assert_no_orphan_writes(out)

    def test_bundled_fig4_summary_has_line_fit(self, tmp_path):
        out = tmp_path / "fig4"
        assert main(["simulate", "fig4.json", "--out-dir", str(out), "--no-figures"]) == EXIT_OK
        summary = json.loads((out / "campaign_summary.json").read_text())
        assert len(summary["per_time"]) == 3
        crossing = summary["wmin_line_fit"]["parameters"]["r_zero_crossing"]
        assert 0.45 < crossing < 0.70
        assert_no_orphan_writes(out)

    def test_seed_override_changes_outputs(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["simulate", "fig3.json", "--out-dir", str(out1), "--no-figures", "--seed", "1"])
        main(["simulate", "fig3.json", "--out-dir", str(out2), "--no-figures", "--seed", "2"])
        assert (out1 / "campaign.csv").read_text() != (out2 / "campaign.csv").read_text()

    def test_json_format_twin(self, tmp_path):
        out = tmp_path / "twin"
        assert main(["simulate", "fig3.json", "--out-dir", str(out),
                     "--no-figures", "--format", "json"]) == EXIT_OK
        rows = json.loads((out / "campaign.json").read_text())["rows"]
        assert len(rows) == 125

    def test_invalid_config_lists_fields(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        doc = {"schema": 1, "state": {"theta": 0, "phi": 0, "r": 2.0},
               "scan": {"times_ms": [0], "xi": [0], "chi": [0]}, "shots": 0}
        bad.write_text(json.dumps(doc))
        assert main(["simulate", str(bad), "--out-dir", str(tmp_path)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "shots" in err and "r" in err

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "nope_missing.json", "--out-dir", str(tmp_path)]) == EXIT_IO


class TestRamseyCommand:
    def test_bundled_scan_fits_decay_time(self, tmp_path):
        out = tmp_path / "ramsey"
        assert main(["ramsey", "ramsey.json", "--out-dir", str(out)]) == EXIT_OK
        fit = json.loads((out / "ramsey_fit.json").read_text())
        assert 12.0 < fit["t_decay_ms"] < 23.0
        lines = (out / "ramsey.csv").read_text().strip().split("\n")
        assert lines[0] == "t_ms,n_retained,n_lost,p_survival,p_stderr"
        assert len(lines) == 27
        assert (out / "ramsey.png").exists()
        assert_no_orphan_writes(out)


class TestTomographyCommand:
    def test_noiseless_reproduces_initial_row(self, tmp_path):
        out = tmp_path / "noiseless"
        doc = {
            "schema": 1,
            "tomography": {"mode": "noiseless", "times_ms": [0.0]},
            "state": {"theta": "0.509pi", "phi": "0.521pi", "r": 0.981},
            "channel": {"t2_ms": 17.2, "kernel": "exponential", "r0": 0.981},
        }
        cfg = tmp_path / "noiseless.json"
        cfg.write_text(json.dumps(doc))
        assert main(["tomography", str(cfg), "--out-dir", str(out), "--no-figures"]) == EXIT_OK
        payload = json.loads((out / "tomography.json").read_text())
        row = payload["results"][0]
        assert abs(row["purity"] - 0.981) < 1e-3
        assert abs(row["r"] - 0.981) < 1e-3

    def test_bundled_table_run_error_magnitudes(self, tmp_path):
        out = tmp_path / "table"
        assert main(["tomography", "table1.json", "--out-dir", str(out)]) == EXIT_OK
        payload = json.loads((out / "tomography.json").read_text())
        assert len(payload["results"]) == 4
        for row in payload["results"]:
            for err in row["entry_errors"].values():
                assert 0.005 < err < 0.05
        assert (out / "tomography_tallies.csv").exists()
        assert_no_orphan_writes(out)

    def test_import_round_trip(self, tmp_path):
        src = tmp_path / "tallies.csv"
        src.write_text(
            "basis,t_ms,xi,chi,n_retained,n_lost\n"
            "x,0,0,0,150,150\ny,0,0,0,10,290\nz,0,0,0,160,140\n"
        )
        doc = {"schema": 1, "tomography": {"mode": "import", "import_path": str(src)}}
        cfg = tmp_path / "import.json"
        cfg.write_text(json.dumps(doc))
        out = tmp_path / "imported"
        assert main(["tomography", str(cfg), "--out-dir", str(out), "--no-figures"]) == EXIT_OK
        payload = json.loads((out / "tomography.json").read_text())
        assert abs(payload["results"][0]["bloch"]["r"] - math.hypot(0.0, -14 / 15, 1 / 15)) < 0.01

    def test_malformed_import_is_config_error(self, tmp_path):
        src = tmp_path / "bad.csv"
        src.write_text("basis,t_ms,xi,chi,n_retained,n_lost\nx,zero,0,0,a,b\n")
        doc = {"schema": 1, "tomography": {"mode": "import", "import_path": str(src)}}
        cfg = tmp_path / "import.json"
        cfg.write_text(json.dumps(doc))
        assert main(["tomography", str(cfg), "--out-dir", str(tmp_path / "x")]) == EXIT_CONFIG

    def test_wrong_kind_rejected(self, tmp_path):
        assert main(["tomography", "fig3.json", "--out-dir", str(tmp_path)]) == EXIT_CONFIG


class TestSelftest:
    def test_clean_build_passes(self, capsys):
        assert main(["selftest"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "path_equivalence" in out

    def test_injected_kernel_sign_error_is_caught(self, monkeypatch, capsys):
        import qwigner.wigner as wigner_mod

        true_kernel = wigner_mod.kernel

        def broken_kernel(point, zeta=0.0):
            k = true_kernel(point, zeta)
            return 0.5 * (np.eye(2) + (np.eye(2) - 2.0 * k))  # flips the parity sign

        monkeypatch.setattr(wigner_mod, "kernel", broken_kernel)
        assert main(["selftest"]) == EXIT_SELFTEST
        out = capsys.readouterr().out
        assert "FAIL" in out and "path_equivalence" in out


class TestParser:
    @pytest.mark.parametrize("cmd", ["grid", "wmin", "simulate", "ramsey", "tomography", "selftest"])
    def test_help_available(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([cmd, "--help"])
        assert exc.value.code == 0
        assert "--help" in capsys.readouterr().out

    def test_unknown_flag_is_an_error(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["grid", "--frobnicate"])
        assert exc.value.code == 2

    def test_help_documents_flags(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["grid", "--help"])
        text = capsys.readouterr().out
        for flag in ("--state", "--span", "--nxi", "--out-dir", "--seed", "--format", "--threads"):
            assert flag in text
