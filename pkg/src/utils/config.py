import logging
import os
import re
from pathlib import Path
from typing import Any, TypedDict

import yaml
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

_project_root = Path(__file__).resolve().parent.parent.parent

_DYADIC_RE = re.compile(r"^\s*([+-]?\d+(?:\.\d*)?)\s*(?:\^|\*\*)\s*\(?\s*([+-]?\d+)\s*\)?\s*$")


class ConfigError(ValueError):
    """Invalid application or experiment configuration."""


class LoggingConfig(TypedDict):
    level: str


class ParallelismConfig(TypedDict):
    threads: int


class InitialStatesConfig(TypedDict):
    mh_step: float
    mh_burn_in: int
    mh_thinning: int


class OutputConfig(TypedDict):
    format: str
    include_timing: bool


class AppConfig(TypedDict):
    logging: LoggingConfig
    parallelism: ParallelismConfig
    initial_states: InitialStatesConfig
    output: OutputConfig


_APP_DEFAULTS: AppConfig = {
    "logging": {"level": "INFO"},
    "parallelism": {"threads": 1},
    "initial_states": {"mh_step": 0.5, "mh_burn_in": 1000, "mh_thinning": 10},
    "output": {"format": "csv", "include_timing": True},
}


def _env_int(name: str) -> int | None:
    raw = os.getenv(name, "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'") from None
    if value < 1:
        raise ConfigError(f"{name} must be at least 1, got {value}")
    return value


def load_config(config_dir: Path | None = None) -> AppConfig:
    """Load config.yaml (or config.example.yaml as fallback) and apply .env overrides."""
    load_dotenv(_project_root / ".env")
    config_dir = config_dir or _project_root / "config"
    config_path = config_dir / "config.yaml"

    if not config_path.exists():
        logger.warning("config.yaml not found, falling back to config.example.yaml")
        config_path = config_dir / "config.example.yaml"

    logger.info("Loading configuration from: %s", config_path)

    try:
        with open(config_path, encoding="utf-8") as f:
            loaded = yaml.safe_load(f) or {}
    except Exception:
        logger.error("Failed to load YAML configuration from %s", config_path, exc_info=True)
        raise

    config: AppConfig = {section: dict(values) for section, values in _APP_DEFAULTS.items()}
    for section, values in loaded.items():
        if section not in config:
            raise ConfigError(f"Unknown section '{section}' in {config_path}")
        config[section].update(values or {})

    logger.debug("Injecting environment variables into config")

    threads = _env_int("LEVY_RBM_THREADS")
    if threads is not None:
        config["parallelism"]["threads"] = threads
    level = os.getenv("LEVY_RBM_LOG_LEVEL", "").strip()
    if level:
        config["logging"]["level"] = level.upper()

    config["logging"]["level"] = str(config["logging"]["level"]).upper()
    if not isinstance(logging.getLevelName(config["logging"]["level"]), int):
        raise ConfigError(f"Unknown log level '{config['logging']['level']}'")
    if config["output"]["format"] not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv or json, got '{config['output']['format']}'")

    logger.info("Configuration loaded (threads=%d)", config["parallelism"]["threads"])
    return config


def parse_number(value: Any, key: str = "value") -> float:
    """Accept plain numbers and dyadic strings such as '2^-12' or '2**-7'."""
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        match = _DYADIC_RE.match(value)
        if match:
            return float(match.group(1)) ** int(match.group(2))
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{key} must be a number or 'base^exp', got {value!r}")


EXPERIMENT_DEFAULTS: dict[str, Any] = {
    "experiment": None,
    "n_particles": 100,
    "batch_size": 2,
    "dim": 1,
    "fine_step": "2^-12",
    "batch_step": "2^-7",
    "horizon": 1,
    "potential": "quadratic:a=1",
    "kernel": "smooth_bounded",
    "theta": 1.0,
    "noise_drift": 0.0,
    "noise_sigma": 0.0,
    "noise_jump": "alpha_stable:alpha=1.5,scale=1",
    "initial_law": "semicircle:r=2",
    "velocity_law": None,
    "seed": 0,
    "n_seeds": 20,
    "kappa_values": None,
    "n_values": None,
    "horizon_values": None,
    "potential_values": None,
    "scenarios": None,
    "flocking_threshold": 0.05,
    "record_e2": True,
    "output": None,
    "output_format": None,
    "include_timing": None,
    "timing_repeats": 3,
}


def load_experiment_file(path: str | Path) -> dict[str, Any]:
    """Read a flat experiment config; unknown keys are errors, missing keys take defaults."""
    path = Path(path)
    logger.info("Loading experiment config from: %s", path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read experiment config {path}: {e.strerror}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed YAML in {path}: {e}") from e

    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must contain a flat key: value mapping")
    unknown = sorted(set(raw) - set(EXPERIMENT_DEFAULTS))
    if unknown:
        raise ConfigError(f"Unknown key(s) in {path}: {', '.join(unknown)}")
    nested = sorted(key for key, value in raw.items() if isinstance(value, dict))
    if nested:
        raise ConfigError(f"Nested values are not allowed in {path}: {', '.join(nested)}")
    if not raw.get("experiment"):
        raise ConfigError(f"{path} is missing the 'experiment' key")

    merged = dict(EXPERIMENT_DEFAULTS)
    merged.update(raw)
    return merged
