from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from src.bootstrap import build_experiment_config
from src.experiments.results import emit
from src.experiments.studies import run_experiment
from src.utils.config import load_config, load_experiment_file

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger("reproduce_all")

_CONFIG_DIR = Path(__file__).parent.parent / "config" / "experiments"


def run(config_dir: Path, out_dir: Path | None, threads: int | None, include_timing: bool,
        only: list[str] | None) -> int:
    logger.info("=== levy-rbm reproduction START ===")
    config = load_config()
    threads = threads or config["parallelism"]["threads"]

    paths = sorted(config_dir.glob("*.yaml"))
    if only:
        paths = [p for p in paths if p.stem in only]
    if not paths:
        logger.error("No experiment configs found in %s", config_dir)
        return 1
    logger.info("Running %d experiment config(s) from %s with threads=%d", len(paths), config_dir, threads)

    passed = 0
    failed = 0
    total_duration = 0.0

    for i, path in enumerate(paths, start=1):
        logger.info("[%d/%d] Experiment: %s", i, len(paths), path.name)
        t0 = time.perf_counter()
        try:
            out = None if out_dir is None else out_dir / f"{path.stem}.csv"
            experiment = build_experiment_config(
                load_experiment_file(path), config, output=out,
                include_timing=None if include_timing else False,
            )
            table = run_experiment(experiment, threads)
            written = emit(table, experiment.output or Path("results") / f"{path.stem}.csv",
                           experiment.emit_format, experiment.include_timing)
            duration = time.perf_counter() - t0
            total_duration += duration
            passed += 1
            logger.info("[%d/%d] OK | duration=%.2fs | rows=%d | %s", i, len(paths), duration, len(table), written)
        except Exception:
            duration = time.perf_counter() - t0
            total_duration += duration
            failed += 1
            logger.error("[%d/%d] FAILED | duration=%.2fs", i, len(paths), duration, exc_info=True)

    logger.info("=== levy-rbm reproduction END ===")
    logger.info(
        "Results: total=%d passed=%d failed=%d | total_duration=%.0fs",
        len(paths), passed, failed, total_duration,
    )
    return 1 if failed else 0


def main() -> None:
    parser = argparse.ArgumentParser(description="Run every experiment config in sequence")
    parser.add_argument("--configs", type=Path, default=_CONFIG_DIR, help="Directory of experiment YAML files")
    parser.add_argument("--out-dir", type=Path, help="Write every table here instead of each config's output")
    parser.add_argument("--threads", type=int, help="Worker processes per experiment")
    parser.add_argument("--no-timing", action="store_true", help="Blank wall-clock columns")
    parser.add_argument("--only", nargs="+", help="Config names to run (file stems)")
    args = parser.parse_args()

    sys.exit(run(args.configs, args.out_dir, args.threads, not args.no_timing, args.only))


if __name__ == "__main__":
    main()
