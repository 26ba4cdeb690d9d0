import io
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fringe_mems import cli
from fringe_mems.config import SCHEMA, ConfigError, RunConfig
from fringe_mems.csvio import read_trace

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.geometry().width == 600e-6
        assert cfg.controller().k1 == 10.0

    def test_round_trip_shipped(self):
        for path in CONFIGS.glob("*.ini"):
            cfg = RunConfig.from_file(path)
            again = RunConfig.from_text(cfg.to_text())
            assert again.values == cfg.values, path.name

    @settings(max_examples=50, deadline=None)
    @given(
        k1=st.floats(0.1, 100),
        zeta=st.floats(0.01, 10),
        rho_s=st.floats(0, 1),
        y_f=st.floats(0, 1),
        width=st.floats(1e-6, 1e-2),
    )
    def test_round_trip_property(self, k1, zeta, rho_s, y_f, width):
        cfg = RunConfig()
        cfg.set("controller.k1", repr(k1))
        cfg.set("physical.zeta", repr(zeta))
        cfg.set("parasitics.rho_s", repr(rho_s))
        cfg.set("trajectory.y_f", repr(y_f))
        cfg.set("geometry.width_m", repr(width))
        again = RunConfig.from_text(cfg.to_text())
        assert again.values == cfg.values
        assert again.plant() == cfg.plant()

    def test_unknown_key_line_number(self):
        text = "[controller]\nk1 = 3\nk9 = 4\n"
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_text(text)
        assert exc.value.line == 3

    def test_unknown_section(self):
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_text("[plant]\nzeta = 1\n")
        assert exc.value.line == 1

    def test_unit_suffix_required(self):
        with pytest.raises(ConfigError, match="width_m"):
            RunConfig.from_text("[geometry]\nwidth = 1e-3\n")

    def test_physical_quantity_positive(self):
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_text("[geometry]\n\ngap_m = -1e-6\n")
        assert exc.value.line == 3

    def test_bad_number(self):
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_text("[trajectory]\ny_f = half\n")
        assert exc.value.line == 2

    def test_syntax_error(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("k1 = 3\n")

    def test_incomplete_si(self):
        with pytest.raises(ConfigError, match="incomplete"):
            RunConfig.from_text("[physical]\nmass_kg = 1e-9\n")

    def test_si_description_normalizes(self):
        text = (
            "[physical]\nmass_kg = 1e-9\ndamping_Ns_per_m = 8.94427191e-5\n"
            "stiffness_N_per_m = 2.0\nresistance_ohm = 1e6\n"
        )
        p = RunConfig.from_text(text).plant()
        assert p.zeta == pytest.approx(1.0, rel=1e-8)
        assert p.omega0 == pytest.approx(math.sqrt(2e9))

    def test_gap_mode_profile(self):
        cfg = RunConfig.from_file(CONFIGS / "gap_dependent.ini")
        p = cfg.plant()
        assert p.rho_s_at(0.0) == 0.0
        assert 0.2 < p.rho_s_at(0.64) < 0.2303 + 1e-4

    def test_every_schema_key_serialized(self):
        text = RunConfig().to_text()
        for section, keys in SCHEMA.items():
            assert f"[{section}]" in text


class TestPullin:
    def test_ideal(self, capsys):
        code, out, _ = run(capsys, "pullin", "--config", str(CONFIGS / "nominal.ini"))
        assert code == 0
        assert out.splitlines()[0].endswith("x_pi=0.3333 u_pi=1.0000")

    def test_two_lines_monotone(self, capsys):
        code, out, _ = run(capsys, "pullin", "--config", str(CONFIGS / "perturbed.ini"))
        lines = out.splitlines()
        assert code == 0 and len(lines) == 2
        assert "x_pi=0.4087" in lines[1]
        xs = [float(l.split("x_pi=")[1].split()[0]) for l in lines]
        assert xs[1] > xs[0]


class TestCapSweep:
    def test_sweep(self, capsys, tmp_path):
        out_csv = tmp_path / "cap.csv"
        code, out, _ = run(capsys, "cap-sweep", "--out", str(out_csv), "--points", "1000")
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "gap_m,C_ideal_F,C_palmer_F,C_sub_F,C_ser_F"
        assert lines[1].split(",")[-1] == "inf"
        assert len(lines) == 1001
        rho = float(out.split("rho_s_bar=")[1].split()[0])
        assert 0.20 <= rho <= 0.25

    def test_tabulated_override(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "cap-sweep", "--config", str(CONFIGS / "perturbed.ini"), "--out", str(tmp_path / "c.csv")
        )
        assert code == 0
        assert "rho_s_bar=0.2278" in out.splitlines()[1]

    def test_square_plate_symmetry(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "cap-sweep", "--out", str(a), "--set", "geometry.width_m=4e-4", "--set", "geometry.length_m=2e-4")
        run(capsys, "cap-sweep", "--out", str(b), "--set", "geometry.width_m=2e-4", "--set", "geometry.length_m=4e-4")
        assert a.read_bytes() == b.read_bytes()

    def test_deterministic_bytes(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "cap-sweep", "--out", str(a))
        run(capsys, "cap-sweep", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_too_few_points(self, capsys, tmp_path):
        code, _, err = run(capsys, "cap-sweep", "--out", str(tmp_path / "x.csv"), "--points", "1")
        assert code == cli.EXIT_CONFIG


class TestSimulate:
    def test_nominal_summary(self, capsys, tmp_path):
        out_csv = tmp_path / "t.csv"
        code, out, _ = run(
            capsys, "simulate", "--config", str(CONFIGS / "nominal.ini"), "--setpoint", "0.4", "--out", str(out_csv)
        )
        assert code == 0
        fields = dict(kv.split("=") for kv in out.split())
        assert fields["setpoint"] == "0.4" and fields["status"] == "completed"
        assert float(fields["final_error"]) <= 1e-6
        with out_csv.open() as fh:
            cols, status = read_trace(fh)
        assert status == "completed"
        assert list(cols) == ["t", "x1", "x2", "x3", "u", "z1", "z2", "z3", "mu2", "mu3", "beta"]
        assert np.all(np.diff(cols["t"]) > 0)

    def test_perturbed_beyond_pullin(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "--config", str(CONFIGS / "perturbed.ini"), "--setpoint", "0.8",
            "--out", str(tmp_path / "t.csv"),
        )
        fields = dict(kv.split("=") for kv in out.split())
        assert code == 0 and fields["status"] == "completed"
        assert float(fields["final_error"]) <= 0.02

    def test_full_closure(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "--config", str(CONFIGS / "perturbed.ini"), "--setpoint", "1.0",
            "--out", str(tmp_path / "t.csv"),
        )
        fields = dict(kv.split("=") for kv in out.split())
        assert code == 0 and fields["status"] in ("completed", "contact")
        with (tmp_path / "t.csv").open() as fh:
            cols, _ = read_trace(fh)
        assert cols["x1"][-1] >= 0.98

    def test_batch_with_jobs(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "--config", str(CONFIGS / "perturbed.ini"), "--setpoints", "0.2,0.4",
            "--jobs", "2", "--set", "simulation.t_end=12", "--out", str(tmp_path / "runs"),
        )
        assert code == 0
        assert len(out.splitlines()) == 2
        assert sorted(p.name for p in (tmp_path / "runs").iterdir()) == ["trace_0.2.csv", "trace_0.4.csv"]

    def test_trace_bytes_deterministic(self, capsys, tmp_path):
        args = ["simulate", "--config", str(CONFIGS / "perturbed.ini"), "--set", "simulation.t_end=12"]
        run(capsys, *args, "--out", str(tmp_path / "a.csv"))
        run(capsys, *args, "--out", str(tmp_path / "b.csv"))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_gap_dependent_mode(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "--config", str(CONFIGS / "gap_dependent.ini"), "--set", "simulation.t_end=14",
            "--out", str(tmp_path / "g.csv"),
        )
        fields = dict(kv.split("=") for kv in out.split())
        assert code == 0 and float(fields["final_error"]) <= 0.02

    def test_setpoint_out_of_range(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--setpoint", "1.5", "--out", str(tmp_path / "t.csv"))
        assert code == cli.EXIT_CONFIG and "outside" in err


class TestExitCodes:
    def test_bad_config_is_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[controller]\nk1 = 1\nbogus = 2\n")
        code, _, err = run(capsys, "pullin", "--config", str(bad))
        assert code == 2
        assert f"{bad}:3:" in err

    def test_invalid_value_is_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[controller]\nk1 = -1\n")
        code, _, _ = run(capsys, "pullin", "--config", str(bad))
        assert code == 2

    def test_bad_override_is_2(self, capsys):
        code, _, _ = run(capsys, "pullin", "--set", "controller.k1")
        assert code == 2

    def test_missing_config_is_3(self, capsys, tmp_path):
        code, _, _ = run(capsys, "pullin", "--config", str(tmp_path / "missing.ini"))
        assert code == 3

    def test_unwritable_output_is_3(self, capsys, tmp_path):
        code, _, _ = run(capsys, "cap-sweep", "--out", str(tmp_path / "no" / "such" / "dir" / "c.csv"))
        assert code == 3

    def test_numerical_failure_is_4(self, capsys, tmp_path, monkeypatch):
        from fringe_mems import simulator

        real = simulator.run_closed_loop

        def broken(sc):
            tr = real(sc)
            return simulator.SimTrace(**{**tr.columns(), "status": simulator.FAILED})

        monkeypatch.setattr(cli, "run_closed_loop", broken)
        code, out, _ = run(
            capsys, "simulate", "--set", "simulation.t_end=11", "--out", str(tmp_path / "t.csv")
        )
        assert code == 4 and "status=numerical-failure" in out
