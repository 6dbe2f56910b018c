"""
==============================================================================
Unit Tests for Run Configurations and the Command-Line Interface
==============================================================================
Bundled fixtures, schema validation, and end-to-end commands on small
cantilever plates written to a temporary directory.
==============================================================================
"""

import json
import os
import sys

import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

DATA_DIR = os.path.join(os.path.dirname(__file__), '..', 'data')
FIXTURES = [
    "b5_45.json", "b5_60.json", "b5_75.json", "b5_45_weighted.json",
    "convergence.json", "thickness_study.json", "unloaded.json",
]

SCHEDULE = {"rows": [
    {"pressure_kpa": 0.8, "delta_pressure_kpa": -0.2, "phi_deg": 9.9},
    {"pressure_kpa": 1.0, "delta_pressure_kpa": 0.0, "phi_deg": 10.0},
    {"pressure_kpa": 1.2, "delta_pressure_kpa": 0.2, "phi_deg": 10.1},
]}


def _plate_config(**overrides):
    """Small cantilever run configuration as a plain dict."""
    data = {
        "name": "plate",
        "material": {"preset": "as4"},
        "layup": {"angles_deg": [30.0, 30.0, 30.0], "symmetric": True, "ply_thickness_um": 125.0},
        "mesh": {"rect": {"length": 0.4, "width": 0.2, "nx": 7, "ny": 5}},
        "load": {"pressure_pa": 100.0},
    }
    data.update(overrides)
    return data


def _write(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _run(tmp_path, command, data, *extra, out="out"):
    from cli import main

    config_path = _write(tmp_path, data)
    return main([command, "--config", config_path, "--out", str(tmp_path / out), "--threads", "1", *extra])


class TestRunConfig:
    """Tests for the configuration schema."""

    @pytest.mark.parametrize("name", FIXTURES)
    def test_bundled_fixtures_validate(self, name):
        """Every shipped configuration parses."""
        from models import load_run_config

        cfg = load_run_config(os.path.join(DATA_DIR, name))
        assert cfg.name

    def test_b5_45_fixture(self):
        """The B5-45 run is a 40-ply continuous search on the blade outline."""
        from models import load_run_config

        cfg = load_run_config(os.path.join(DATA_DIR, "b5_45.json"))
        assert cfg.layup.ply_count == 40
        assert cfg.mesh.blade.expanded_area_ratio == pytest.approx(0.45)
        assert cfg.mesh.blade.blade_count == 5
        schedule = cfg.require_schedule()
        assert schedule.cruise.pressure == pytest.approx(250e3)

    def test_weighted_fixture(self):
        """The weighted run puts weight 4 on 270 kPa."""
        from models import load_run_config

        schedule = load_run_config(os.path.join(DATA_DIR, "b5_45_weighted.json")).require_schedule()
        assert [e.weight for e in schedule.entries] == [1.0, 1.0, 1.0, 4.0, 1.0]

    def test_json_round_trip(self):
        """Dumped configurations reparse to the same model."""
        from models import RunConfig, load_run_config

        cfg = load_run_config(os.path.join(DATA_DIR, "unloaded.json"))
        assert RunConfig.model_validate_json(cfg.model_dump_json()) == cfg

    def test_two_mesh_sources_rejected(self):
        """Exactly one mesh source."""
        from pydantic import ValidationError
        from models import RunConfig

        data = _plate_config(mesh={"rect": {"length": 0.4, "width": 0.2, "nx": 3, "ny": 3}, "file": "x.mesh"})
        with pytest.raises(ValidationError):
            RunConfig.model_validate(data)

    def test_schedule_without_cruise_rejected(self):
        """A schedule needs one delta P = 0 row."""
        from pydantic import ValidationError
        from models import RunConfig

        rows = [{"pressure_kpa": 1.0, "delta_pressure_kpa": 0.5, "phi_deg": 10.0}]
        with pytest.raises(ValidationError):
            RunConfig.model_validate(_plate_config(schedule={"rows": rows}))

    def test_unknown_field_rejected(self):
        """Typos in block names are schema errors."""
        from pydantic import ValidationError
        from models import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate(_plate_config(lyaup={}))

    def test_incomplete_material(self):
        """A material without a preset needs every constant."""
        from pydantic import ValidationError
        from models import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate(_plate_config(material={"e1": 1e11}))

    def test_unreadable_file(self, tmp_path):
        """Bad JSON is a configuration error."""
        from models import load_run_config
        from utils.errors import ConfigurationError

        path = tmp_path / "broken.json"
        path.write_text("{ not json", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_run_config(path)
        with pytest.raises(ConfigurationError):
            load_run_config(tmp_path / "missing.json")

    def test_problem_needs_ply_count(self):
        """Optimization requires the GA search space."""
        from models import RunConfig
        from utils.errors import ConfigurationError

        cfg = RunConfig.model_validate(_plate_config(schedule=SCHEDULE))
        with pytest.raises(ConfigurationError):
            cfg.problem(cfg.mesh.build())


class TestEnvironmentConfig:
    """Tests for the environment-backed settings."""

    def test_defaults_validate(self):
        """Shipped defaults are valid."""
        from utils.config import Config

        assert Config.validate() is True
        assert Config.data_path("b5_45.json").endswith(os.path.join("data", "b5_45.json"))

    def test_bad_thread_count(self, monkeypatch):
        """Zero threads is rejected."""
        from utils.config import Config

        monkeypatch.setattr(Config, "THREADS", 0)
        with pytest.raises(ValueError):
            Config.validate()


class TestCommands:
    """End-to-end command runs."""

    def test_solve(self, tmp_path, capsys):
        """solve prints max |w| and writes the effective configuration."""
        from models import load_run_config

        assert _run(tmp_path, "solve", _plate_config()) == 0
        assert "max |w| = " in capsys.readouterr().out
        out = tmp_path / "out"
        lines = (out / "displacements.csv").read_text().splitlines()
        assert lines[0] == "node,x,y,u,v,w,thetax,thetay"
        assert len(lines) == 36
        effective = load_run_config(out / "effective_config.json")
        assert effective.output_dir == str(out)
        assert effective.layup.angles_deg == [30.0, 30.0, 30.0]

    def test_zero_pressure(self, tmp_path, capsys):
        """Zero load gives zero deflection."""
        assert _run(tmp_path, "solve", _plate_config(load={"pressure_pa": 0.0})) == 0
        assert "max |w| = 0.000000 mm" in capsys.readouterr().out

    def test_mesh_file_without_clamps(self, tmp_path):
        """An unclamped mesh file is invalid input."""
        (tmp_path / "free.mesh").write_text(
            "meshfmt 1\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 2\n", encoding="utf-8"
        )
        assert _run(tmp_path, "solve", _plate_config(mesh={"file": "free.mesh"})) == 1

    @pytest.mark.parametrize("command", ["solve", "optimize", "response", "unloaded"])
    def test_rigid_mode_supports_are_invalid_input(self, tmp_path, command):
        """One clamped node leaves the in-plane rotation free: exit 1, not 2."""
        (tmp_path / "pinned.mesh").write_text(
            "meshfmt 1\nnodes 4\n0 0\n0.4 0\n0.4 0.2\n0 0.2\nelements 2\n0 1 2\n0 2 3\n"
            "clamped 1\n0\ntip 2 1\n",
            encoding="utf-8",
        )
        data = _plate_config(
            mesh={"file": "pinned.mesh"},
            layup={"angles_deg": [30.0, 30.0], "symmetric": True, "ply_count": 4, "ply_thickness_um": 125.0},
            schedule=SCHEDULE,
            ga={"population_size": 4, "generations": 1},
            unloaded={"target_tip_pitch_deg": 16.0},
        )
        assert _run(tmp_path, command, data) == 1

    def test_schema_error_exit_code(self, tmp_path):
        """Schema violations exit with 1."""
        assert _run(tmp_path, "solve", _plate_config(load={"pressure_pa": "high"})) == 1

    def test_converge(self, tmp_path):
        """converge writes one row per mesh size."""
        data = _plate_config(convergence=[{"nx": 3, "ny": 3}, {"nx": 5, "ny": 5}, {"nx": 9, "ny": 9}])
        assert _run(tmp_path, "converge", data) == 0
        lines = (tmp_path / "out" / "convergence.csv").read_text().splitlines()
        assert lines[0] == "nx,ny,max_w_mm"
        assert [line.split(",")[0] for line in lines[1:]] == ["3", "5", "9"]

    def test_response(self, tmp_path):
        """response writes the pitch response CSV."""
        assert _run(tmp_path, "response", _plate_config(schedule=SCHEDULE)) == 0
        lines = (tmp_path / "out" / "response.csv").read_text().splitlines()
        assert lines[0] == "deltaP_kPa,dphi_deg,rake_mm"
        assert len(lines) == 4

    def test_unloaded_linear(self, tmp_path):
        """Linear response model converges in one row."""
        data = _plate_config(schedule=SCHEDULE, unloaded={"target_tip_pitch_deg": 16.0, "model": "linear"})
        assert _run(tmp_path, "unloaded", data) == 0
        lines = (tmp_path / "out" / "unloaded_trace.csv").read_text().splitlines()
        assert lines[0] == "iter,initial_tip_deg,loaded_tip_deg,pct_error,adjustment_deg"
        assert len(lines) == 2

    def test_unloaded_divergence(self, tmp_path):
        """Running out of iterations exits with 2 and keeps the trace."""
        data = _plate_config(
            schedule=SCHEDULE,
            unloaded={"cruise_pressure_kpa": 50.0, "tol_deg": 1e-12, "max_iter": 1},
        )
        assert _run(tmp_path, "unloaded", data) == 2
        lines = (tmp_path / "out" / "unloaded_trace.csv").read_text().splitlines()
        assert len(lines) == 2

    def test_optimize_reproducible(self, tmp_path):
        """Same seed, byte-identical GA history."""
        data = _plate_config(
            layup={"ply_count": 4, "symmetric": True, "ply_thickness_um": 125.0},
            schedule=SCHEDULE,
            ga={"population_size": 6, "generations": 3},
        )
        assert _run(tmp_path, "optimize", data, "--seed", "5", out="a") == 0
        assert _run(tmp_path, "optimize", data, "--seed", "5", out="b") == 0
        first = (tmp_path / "a" / "ga_history.csv").read_bytes()
        assert first == (tmp_path / "b" / "ga_history.csv").read_bytes()
        best = json.loads((tmp_path / "a" / "best_layup.json").read_text())
        assert len(best["layup"]["angles_deg"]) == 2
        assert best["best_objective_rad"] >= best["oracle_objective_rad"] - 1e-12

    def test_thickness(self, tmp_path):
        """thickness writes one row per layup family."""
        data = _plate_config(
            layup={"ply_count": 4, "symmetric": True},
            schedule=SCHEDULE,
            ga={"population_size": 4, "generations": 1},
            thickness_study=[
                {"layers": 4, "layer_thickness_um": 125.0},
                {"layers": 2, "layer_thickness_um": 250.0},
            ],
        )
        assert _run(tmp_path, "thickness", data) == 0
        lines = (tmp_path / "out" / "thickness_study.csv").read_text().splitlines()
        assert len(lines) == 3

    def test_unloaded_needs_block(self, tmp_path):
        """Missing command settings are invalid input."""
        assert _run(tmp_path, "unloaded", _plate_config()) == 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
