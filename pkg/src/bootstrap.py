import logging
from pathlib import Path
from typing import Any, Callable

from src.dynamics.state import Mode, SimulationConfig
from src.experiments.config import DEFAULT_SCENARIOS, ExperimentConfig, ExperimentKind
from src.forces.kernels import parse_kernel
from src.forces.potentials import parse_potential
from src.initial_states.laws import MetropolisSettings, parse_initial_law
from src.noise.levy import LevyNoiseSpec, parse_jump_part
from src.utils.config import AppConfig, ConfigError, parse_number

logger = logging.getLogger(__name__)

# coupled kinds compare Full and RBM on one path; the others pick modes per run
_BASE_MODES = {
    ExperimentKind.RATE_SWEEP: Mode.COUPLED,
    ExperimentKind.LONG_TIME: Mode.COUPLED,
    ExperimentKind.COST_BENCH: Mode.RBM,
    ExperimentKind.CUCKER_SMALE: Mode.RBM,
    ExperimentKind.MOMENT_BOUND: Mode.RBM,
}


def _parsed(parser: Callable[[str], Any], value: Any, key: str):
    try:
        return parser(str(value))
    except KeyError as e:
        raise ConfigError(f"{key}: '{value}' is missing parameter {e}") from e
    except ValueError as e:
        raise ConfigError(f"{key}: {e}") from e


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(value)


def _as_list(value: Any, key: str) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{key} must be a list, got {value!r}")
    return list(value)


def build_metropolis_settings(config: AppConfig) -> MetropolisSettings:
    mh_cfg = config["initial_states"]
    try:
        return MetropolisSettings(
            step=parse_number(mh_cfg["mh_step"], "initial_states.mh_step"),
            burn_in=_as_int(mh_cfg["mh_burn_in"], "initial_states.mh_burn_in"),
            thinning=_as_int(mh_cfg["mh_thinning"], "initial_states.mh_thinning"),
        )
    except ValueError as e:
        raise ConfigError(f"initial_states: {e}") from e


def build_noise_spec(raw: dict[str, Any]) -> LevyNoiseSpec:
    """Levy triplet from the noise_drift / noise_sigma / noise_jump keys."""
    jumps = _parsed(parse_jump_part, raw["noise_jump"] or "none", "noise_jump")
    try:
        return LevyNoiseSpec(
            drift_b=parse_number(raw["noise_drift"], "noise_drift"),
            gaussian_sigma=parse_number(raw["noise_sigma"], "noise_sigma"),
            jump_part=jumps,
        )
    except ValueError as e:
        raise ConfigError(f"noise: {e}") from e


def build_simulation_config(raw: dict[str, Any], config: AppConfig,
                            mode: Mode = Mode.RBM) -> SimulationConfig:
    """Base SimulationConfig from a flat experiment mapping (defaults already merged)."""
    velocity_law = raw["velocity_law"]
    try:
        sim = SimulationConfig(
            n_particles=_as_int(raw["n_particles"], "n_particles"),
            batch_size=_as_int(raw["batch_size"], "batch_size"),
            fine_step=parse_number(raw["fine_step"], "fine_step"),
            batch_step=parse_number(raw["batch_step"], "batch_step"),
            horizon=parse_number(raw["horizon"], "horizon"),
            potential=_parsed(parse_potential, raw["potential"], "potential"),
            kernel=_parsed(parse_kernel, raw["kernel"], "kernel"),
            noise=build_noise_spec(raw),
            seed=_as_int(raw["seed"], "seed"),
            mode=mode,
            dim=_as_int(raw["dim"], "dim"),
            initial_law=_parsed(parse_initial_law, raw["initial_law"], "initial_law"),
            velocity_law=None if velocity_law is None else _parsed(parse_initial_law, velocity_law, "velocity_law"),
            theta=parse_number(raw["theta"], "theta"),
            mh=build_metropolis_settings(config),
            record_e2=bool(raw["record_e2"]),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e

    try:
        sim.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return sim


def _kind(name: Any) -> ExperimentKind:
    try:
        return ExperimentKind(str(name).replace("-", "_"))
    except ValueError:
        kinds = ", ".join(k.value for k in ExperimentKind)
        raise ConfigError(f"Unknown experiment '{name}' (expected one of: {kinds})") from None


def _scenarios(value: Any) -> tuple[tuple[float, float], ...]:
    if value is None:
        return DEFAULT_SCENARIOS
    pairs = []
    for item in _as_list(value, "scenarios"):
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError(f"scenarios entries must be [sigma, lambda] pairs, got {item!r}")
        pairs.append((parse_number(item[0], "scenarios.sigma"), parse_number(item[1], "scenarios.lambda")))
    return tuple(pairs)


def build_experiment_config(raw: dict[str, Any], config: AppConfig, output: str | Path | None = None,
                            emit_format: str | None = None,
                            include_timing: bool | None = None) -> ExperimentConfig:
    """Wire a merged experiment mapping into a validated ExperimentConfig.

    Explicit arguments (from the CLI) win over the file, the file wins over the
    app config's `output` section.
    """
    kind = _kind(raw["experiment"])
    base = build_simulation_config(raw, config, mode=_BASE_MODES[kind])

    def sweep(key: str, fallback: Any, cast: Callable[[Any, str], Any]) -> tuple:
        values = raw[key]
        if values is None:
            return (fallback,)
        return tuple(cast(v, key) for v in _as_list(values, key))

    output_cfg = config["output"]
    out = output if output is not None else raw["output"]
    if include_timing is None:
        include_timing = raw["include_timing"] if raw["include_timing"] is not None else output_cfg["include_timing"]

    experiment = ExperimentConfig(
        kind=kind,
        base=base,
        kappa_values=sweep("kappa_values", base.batch_step, parse_number),
        n_values=sweep("n_values", base.n_particles, _as_int),
        horizon_values=sweep("horizon_values", base.horizon, parse_number),
        potential_values=tuple(
            _parsed(parse_potential, v, "potential_values")
            for v in (raw["potential_values"] or [raw["potential"]])
        ),
        scenarios=_scenarios(raw["scenarios"]),
        n_seeds=_as_int(raw["n_seeds"], "n_seeds"),
        output=None if out is None else Path(out),
        emit_format=emit_format or raw["output_format"] or output_cfg["format"],
        flocking_threshold=parse_number(raw["flocking_threshold"], "flocking_threshold"),
        include_timing=bool(include_timing),
        timing_repeats=_as_int(raw["timing_repeats"], "timing_repeats"),
    )
    experiment.validate()
    logger.info(
        "Experiment %s: N=%s kappa=%s T=%s a=%s, %d seed(s) from %d",
        kind.value, list(experiment.n_values), [f"{k:g}" for k in experiment.kappa_values],
        [f"{t:g}" for t in experiment.horizon_values], [p.a for p in experiment.potential_values],
        experiment.n_seeds, base.seed,
    )
    return experiment
