import logging
from pathlib import Path

import pytest

from src.bootstrap import build_experiment_config, build_noise_spec, build_simulation_config
from src.dynamics.state import Mode
from src.experiments.config import DEFAULT_SCENARIOS, ExperimentKind
from src.forces.kernels import CuckerSmaleKernel
from src.forces.potentials import QuadraticPotential
from src.noise.levy import AlphaStable, CompoundPoisson
from src.utils.config import (
    EXPERIMENT_DEFAULTS,
    ConfigError,
    load_config,
    load_experiment_file,
    parse_number,
)

_SHIPPED = Path(__file__).resolve().parent.parent / "config"


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("LEVY_RBM_THREADS", raising=False)
    monkeypatch.delenv("LEVY_RBM_LOG_LEVEL", raising=False)


def _raw(**values):
    raw = dict(EXPERIMENT_DEFAULTS)
    raw.update(values)
    return raw


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadConfig:
    def test_falls_back_to_example(self, tmp_path, caplog):
        _write(tmp_path / "config.example.yaml", "parallelism:\n  threads: 3\n")
        with caplog.at_level(logging.WARNING, logger="src.utils.config"):
            config = load_config(tmp_path)
        assert "falling back to config.example.yaml" in caplog.text
        assert config["parallelism"]["threads"] == 3
        assert config["initial_states"]["mh_burn_in"] == 1000

    def test_prefers_config_yaml(self, tmp_path):
        _write(tmp_path / "config.example.yaml", "parallelism:\n  threads: 3\n")
        _write(tmp_path / "config.yaml", "parallelism:\n  threads: 5\n")
        assert load_config(tmp_path)["parallelism"]["threads"] == 5

    def test_shipped_example_loads(self):
        config = load_config(_SHIPPED)
        assert config["output"] == {"format": "csv", "include_timing": True}
        assert config["logging"]["level"] == "INFO"

    def test_env_overrides(self, tmp_path, monkeypatch):
        _write(tmp_path / "config.yaml", "logging:\n  level: WARNING\n")
        monkeypatch.setenv("LEVY_RBM_THREADS", "4")
        monkeypatch.setenv("LEVY_RBM_LOG_LEVEL", "debug")
        config = load_config(tmp_path)
        assert config["parallelism"]["threads"] == 4
        assert config["logging"]["level"] == "DEBUG"

    @pytest.mark.parametrize("threads", ["0", "four"])
    def test_bad_thread_count(self, tmp_path, monkeypatch, threads):
        _write(tmp_path / "config.yaml", "")
        monkeypatch.setenv("LEVY_RBM_THREADS", threads)
        with pytest.raises(ConfigError, match="LEVY_RBM_THREADS"):
            load_config(tmp_path)

    @pytest.mark.parametrize("text, message", [
        ("metrics:\n  enabled: true\n", "Unknown section 'metrics'"),
        ("logging:\n  level: LOUD\n", "Unknown log level"),
        ("output:\n  format: xml\n", "output.format"),
    ])
    def test_rejects(self, tmp_path, text, message):
        _write(tmp_path / "config.yaml", text)
        with pytest.raises(ConfigError, match=message):
            load_config(tmp_path)

    def test_missing_files(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path)


class TestParseNumber:
    @pytest.mark.parametrize("value, expected", [
        ("2^-12", 2.0 ** -12),
        ("2**-7", 2.0 ** -7),
        ("2^(-3)", 0.125),
        (" 2 ^ 4 ", 16.0),
        ("0.5", 0.5),
        (3, 3.0),
        (0.25, 0.25),
    ])
    def test_accepts(self, value, expected):
        assert parse_number(value) == expected

    @pytest.mark.parametrize("value", [True, "two", None, [1]])
    def test_rejects(self, value):
        with pytest.raises(ConfigError, match="fine_step"):
            parse_number(value, "fine_step")


class TestLoadExperimentFile:
    def test_defaults_are_merged(self, tmp_path):
        raw = load_experiment_file(_write(tmp_path / "e.yaml", "experiment: rate_sweep\nn_seeds: 2\n"))
        assert raw["n_seeds"] == 2
        assert raw["fine_step"] == "2^-12"
        assert raw["kappa_values"] is None

    @pytest.mark.parametrize("text, message", [
        ("experiment: rate_sweep\nbatch: 2\n", "Unknown key"),
        ("experiment: rate_sweep\nkernel:\n  name: zero\n", "Nested values"),
        ("n_particles: 10\n", "missing the 'experiment' key"),
        ("- rate_sweep\n", "flat key: value mapping"),
        ("experiment: [rate_sweep\n", "Malformed YAML"),
    ])
    def test_rejects(self, tmp_path, text, message):
        with pytest.raises(ConfigError, match=message):
            load_experiment_file(_write(tmp_path / "e.yaml", text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="Cannot read"):
            load_experiment_file(tmp_path / "absent.yaml")


class TestBuildSimulationConfig:
    def test_defaults(self, app_config):
        sim = build_simulation_config(_raw(experiment="rate_sweep"), app_config)
        assert (sim.n_particles, sim.batch_size, sim.fine_step, sim.batch_step) == (100, 2, 2.0 ** -12, 2.0 ** -7)
        assert sim.potential == QuadraticPotential(1.0)
        assert sim.noise.jump_part == AlphaStable(1.5, 1.0)
        assert sim.mh.burn_in == 1000

    def test_cucker_smale_kernel(self, app_config):
        sim = build_simulation_config(
            _raw(kernel="cucker_smale:beta=5", velocity_law="semicircle_scaled:s=0.1"), app_config,
        )
        assert sim.kernel == CuckerSmaleKernel(5.0)
        assert sim.second_order

    def test_noise_spec(self):
        spec = build_noise_spec(_raw(noise_sigma=1, noise_jump="compound_poisson:rate=0.1"))
        assert spec.gaussian_sigma == 1.0
        assert spec.jump_part == CompoundPoisson(0.1, 1.0)
        assert build_noise_spec(_raw(noise_jump=None)).jump_part is None

    @pytest.mark.parametrize("overrides, message", [
        ({"kernel": "coulomb"}, "kernel"),
        ({"noise_jump": "alpha_stable:scale=1"}, "missing parameter"),
        ({"noise_jump": "alpha_stable:alpha=2.5"}, "noise_jump"),
        ({"batch_size": 3}, "does not divide"),
        ({"n_particles": 10.5}, "n_particles must be an integer"),
        ({"batch_step": "2^-13"}, "not an integer multiple"),
        ({"kernel": "cucker_smale"}, "velocity_law"),
        ({"noise_sigma": -1}, "noise"),
    ])
    def test_rejects(self, app_config, overrides, message):
        with pytest.raises(ConfigError, match=message):
            build_simulation_config(_raw(**overrides), app_config)

    def test_bad_metropolis_settings(self, app_config):
        app_config["initial_states"]["mh_thinning"] = 0
        with pytest.raises(ConfigError, match="initial_states"):
            build_simulation_config(_raw(), app_config)


class TestBuildExperimentConfig:
    def test_sweeps_default_to_base_values(self, app_config):
        exp = build_experiment_config(_raw(experiment="rate_sweep"), app_config)
        assert exp.kind is ExperimentKind.RATE_SWEEP
        assert exp.base.mode is Mode.COUPLED
        assert exp.kappa_values == (2.0 ** -7,)
        assert exp.n_values == (100,)
        assert exp.horizon_values == (1.0,)
        assert exp.potential_values == (QuadraticPotential(1.0),)
        assert exp.scenarios == DEFAULT_SCENARIOS
        assert list(exp.seeds) == list(range(20))
        assert exp.timing_repeats == 3

    def test_hyphenated_kind(self, app_config):
        assert build_experiment_config(_raw(experiment="cost-bench"), app_config).kind is ExperimentKind.COST_BENCH

    def test_sweep_lists(self, app_config):
        exp = build_experiment_config(
            _raw(experiment="rate_sweep", kappa_values=["2^-4", "2^-5"], n_values=[50],
                 potential_values=["quadratic:a=1", "none"]),
            app_config,
        )
        assert exp.kappa_values == (0.0625, 0.03125)
        assert exp.potential_values == (QuadraticPotential(1.0), QuadraticPotential(0.0))

    def test_output_precedence(self, app_config):
        raw = _raw(experiment="long_time", output="results/a.csv", output_format="json", include_timing=True)
        from_file = build_experiment_config(raw, app_config)
        assert (from_file.output, from_file.emit_format, from_file.include_timing) == (Path("results/a.csv"), "json", True)
        from_cli = build_experiment_config(raw, app_config, output="b.csv", emit_format="csv", include_timing=False)
        assert (from_cli.output, from_cli.emit_format, from_cli.include_timing) == (Path("b.csv"), "csv", False)
        app_config["output"]["include_timing"] = False
        assert not build_experiment_config(_raw(experiment="long_time"), app_config).include_timing

    def test_scenarios(self, app_config):
        exp = build_experiment_config(
            _raw(experiment="cucker_smale", kernel="cucker_smale", velocity_law="semicircle_scaled:s=0.1",
                 scenarios=[[1, 0.1], [0, 0]]),
            app_config,
        )
        assert exp.scenarios == ((1.0, 0.1), (0.0, 0.0))

    @pytest.mark.parametrize("overrides, message", [
        ({"experiment": "double_well"}, "Unknown experiment"),
        ({"experiment": "rate_sweep", "kappa_values": ["2^-4", "0.001"]}, "kappa=0.001"),
        ({"experiment": "rate_sweep", "n_values": [50, 51]}, "N=51"),
        ({"experiment": "rate_sweep", "kappa_values": "2^-4"}, "must be a list"),
        ({"experiment": "rate_sweep", "kappa_values": []}, "must not be empty"),
        ({"experiment": "rate_sweep", "n_seeds": 0}, "n_seeds"),
        ({"experiment": "cucker_smale", "scenarios": [[1, 0.1, 2]]}, "scenarios"),
        ({"experiment": "cucker_smale", "flocking_threshold": 1.5}, "flocking_threshold"),
        ({"experiment": "rate_sweep", "output_format": "xml"}, "output_format"),
        ({"experiment": "cost_bench", "timing_repeats": 0}, "timing_repeats"),
    ])
    def test_rejects(self, app_config, overrides, message):
        with pytest.raises(ConfigError, match=message):
            build_experiment_config(_raw(**overrides), app_config)

    @pytest.mark.parametrize("path", sorted((_SHIPPED / "experiments").glob("*.yaml")), ids=lambda p: p.stem)
    def test_shipped_experiment_configs_build(self, app_config, path):
        exp = build_experiment_config(load_experiment_file(path), app_config)
        assert exp.kind.value == path.stem
        assert exp.output == Path("results") / f"{path.stem}.csv"
