import math

import numpy as np
import pytest

from kolmo2eq.config import (ConfigError, InitialConfig, RunConfig,
                             build_initial, parse_config, serialize_config)
from kolmo2eq.diagnostics import DiagnosticsRecord, RECORD_COLUMNS
from kolmo2eq.fileio import (SchemaError, read_snapshot, read_trajectory_csv,
                             write_snapshot, write_trajectory_csv)
from kolmo2eq.integrator import check_admissible
from kolmo2eq.model import InitialBounds, ModelParams
from kolmo2eq.spectral import make_grid

TWO_PI = 2.0 * math.pi


class TestParseConfig:
    def test_minimal_fills_defaults(self):
        cfg = parse_config("bounds.b_min = 1.0\nbounds.omega_min = 1.0\nbounds.omega_max = 1.0\n")
        assert cfg.model == ModelParams()
        assert cfg.grid.n1 == 16
        assert cfg.integrator.method == "rk4"
        assert cfg.c_est == 1.0

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("# a comment\n\nmodel.kappa2 = 2.0  # inline\n")
        assert cfg.model.kappa2 == 2.0

    def test_negative_kappa2_rejected_with_field_name(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("model.kappa2 = -1.0\n")
        assert any("kappa2" in e for e in exc.value.errors)

    def test_unknown_key_fatal(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("model.viscosity = 1.0\n")
        assert any("unknown key" in e for e in exc.value.errors)

    def test_unknown_section_fatal(self):
        with pytest.raises(ConfigError):
            parse_config("physics.kappa2 = 1.0\n")

    def test_all_errors_collected(self):
        bad = "model.kappa2 = nope\ngrid.n1 = 7\nwhatever\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(bad)
        assert len(exc.value.errors) >= 3

    def test_round_trip_identity(self):
        text = (
            "model.kappa2 = 0.5\nmodel.c_est = 2.5\n"
            "bounds.b_min = 0.9\nbounds.omega_min = 0.9\nbounds.omega_max = 1.1\n"
            "grid.n1 = 8\ngrid.n2 = 8\ngrid.n3 = 8\ngrid.oversample = 3.0\n"
            "integrator.method = rk23\nintegrator.t_end = 0.25\n"
            "integrator.stop_at_tstar = true\nintegrator.drift_tol = 0.01\n"
            "initial.preset = perturbed-constant\ninitial.amplitude = 0.05\n"
            "output.dir = results\n"
        )
        cfg = parse_config(text)
        again = parse_config(serialize_config(cfg))
        assert again == cfg
        assert again.integrator.stop_at_tstar is True
        assert again.drift_tol == 0.01

    def test_initial_source_exclusivity(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("initial.preset = constant\ninitial.snapshot = s.bin\n")
        assert any("exactly one" in e for e in exc.value.errors)

    def test_optional_none_round_trip(self):
        cfg = parse_config("initial.preset = none\ninitial.snapshot = snap.bin\n")
        assert cfg.initial.preset is None
        assert cfg.initial.snapshot == "snap.bin"


class TestPresets:
    def setup_method(self):
        self.grid = make_grid(8, TWO_PI)
        self.bounds = InitialBounds(0.9, 0.9, 1.1)

    def test_constant_uniform(self):
        init = InitialConfig(preset="constant")
        v0, om0, b0 = build_initial(init, self.grid, self.bounds)
        assert np.all(v0 == 0.0)
        assert np.all(om0 == 1.0)
        assert np.all(b0 == 0.9)

    def test_zero_amplitude_perturbed_equals_constant(self):
        init = InitialConfig(preset="perturbed-constant", amplitude=0.0, v_amplitude=0.0)
        v0, om0, b0 = build_initial(init, self.grid, self.bounds)
        assert np.all(v0 == 0.0)
        assert np.ptp(om0) == 0.0
        assert np.ptp(b0) == 0.0

    @pytest.mark.parametrize("preset", ["perturbed-constant", "random-smooth"])
    def test_admissibility_pointwise(self, preset):
        init = InitialConfig(preset=preset, amplitude=0.1, v_amplitude=0.1, seed=3)
        v0, om0, b0 = build_initial(init, self.grid, self.bounds)
        check_admissible(self.bounds, om0, b0)

    def test_amplitude_clamped_for_tight_bounds(self):
        tight = InitialBounds(0.99, 0.99, 1.01)
        init = InitialConfig(preset="perturbed-constant", amplitude=0.5)
        _, om0, b0 = build_initial(init, self.grid, tight)
        check_admissible(tight, om0, b0)

    def test_random_smooth_deterministic_in_seed(self):
        init = InitialConfig(preset="random-smooth", amplitude=0.1, seed=11)
        a = build_initial(init, self.grid, self.bounds)
        b = build_initial(init, self.grid, self.bounds)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)
        other = build_initial(InitialConfig(preset="random-smooth", amplitude=0.1, seed=12),
                              self.grid, self.bounds)
        assert not np.array_equal(a[1], other[1])

    def test_perturbed_touches_omega_floor(self):
        init = InitialConfig(preset="perturbed-constant", amplitude=0.1)
        _, om0, _ = build_initial(init, self.grid, self.bounds)
        assert om0.min() == pytest.approx(self.bounds.omega_min, abs=1e-12)


class TestSnapshots:
    def test_round_trip(self, tmp_path):
        grid = make_grid(8, TWO_PI)
        rng = np.random.default_rng(0)
        fields = {"omega": rng.normal(size=grid.shape), "b": rng.normal(size=grid.shape)}
        path = tmp_path / "snap.bin"
        write_snapshot(path, grid, fields, time=0.25)
        header, loaded = read_snapshot(path)
        assert header["time"] == 0.25
        assert header["shape"] == [8, 8, 8]
        for name in fields:
            assert np.array_equal(loaded[name], fields[name])

    def test_not_a_snapshot(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"\x00\x01\x02 garbage")
        with pytest.raises(SchemaError):
            read_snapshot(path)

    def test_truncated_payload(self, tmp_path):
        grid = make_grid(8, TWO_PI)
        path = tmp_path / "snap.bin"
        write_snapshot(path, grid, {"omega": np.ones(grid.shape)}, time=0.0)
        raw = path.read_bytes()
        path.write_bytes(raw[:-16])
        with pytest.raises(SchemaError, match="truncated"):
            read_snapshot(path)


def _dummy_records(n=3):
    recs = []
    for i in range(n):
        values = {c: float(i) + 0.001 * j for j, c in enumerate(RECORD_COLUMNS)}
        values["t"] = 0.1 * i
        recs.append(DiagnosticsRecord(**values))
    return recs


class TestTrajectoryCsv:
    def test_round_trip_exact(self, tmp_path):
        recs = _dummy_records()
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, recs)
        again = read_trajectory_csv(path)
        assert again == recs

    def test_unknown_schema_rejected(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("time,norm\n0,1\n")
        with pytest.raises(SchemaError, match="schema"):
            read_trajectory_csv(path)

    def test_short_row_rejected(self, tmp_path):
        recs = _dummy_records(2)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, recs)
        lines = path.read_text().splitlines()
        lines[-1] = "0.5,1.0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaError, match="columns"):
            read_trajectory_csv(path)
