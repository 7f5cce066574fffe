import argparse
import logging
import sys

from src.bootstrap import build_experiment_config
from src.experiments.config import ExperimentKind
from src.experiments.results import emit
from src.experiments.studies import run_experiment
from src.utils.config import AppConfig, ConfigError, load_config, load_experiment_file

logger = logging.getLogger(__name__)

_COMMANDS = {kind.value.replace("_", "-"): kind for kind in ExperimentKind}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-rbm",
        description="Random batch simulation of interacting particles driven by Levy noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, kind in _COMMANDS.items():
        cmd = sub.add_parser(name, help=f"run the {kind.value.replace('_', ' ')} experiment")
        cmd.add_argument("--config", required=True, help="experiment config (flat YAML)")
        cmd.add_argument("--out", help="result table path (overrides the config's output)")
        cmd.add_argument("--threads", type=int, help="worker processes (overrides LEVY_RBM_THREADS)")
        cmd.add_argument("--format", choices=("csv", "json"), help="result format")
        cmd.add_argument("--no-timing", action="store_true",
                         help="blank wall-clock values so repeated runs compare byte-identical")

    plot = sub.add_parser("plot", help="render an emitted result table to an image")
    plot.add_argument("--config", required=True, help="experiment config that produced the table")
    plot.add_argument("--out", required=True, help="image path (png, pdf, svg)")
    plot.add_argument("--table", help="result table to read (defaults to the config's output)")
    return parser


def _run_experiment(args: argparse.Namespace, config: AppConfig) -> None:
    raw = load_experiment_file(args.config)
    experiment = build_experiment_config(
        raw, config, output=args.out, emit_format=args.format,
        include_timing=False if args.no_timing else None,
    )
    expected = _COMMANDS[args.command]
    if experiment.kind is not expected:
        raise ConfigError(f"{args.config} describes a {experiment.kind.value} experiment, not {expected.value}")
    if experiment.output is None:
        raise ConfigError("no output path: pass --out or set 'output' in the experiment config")

    threads = args.threads if args.threads is not None else config["parallelism"]["threads"]
    if threads < 1:
        raise ConfigError(f"--threads must be at least 1, got {threads}")

    table = run_experiment(experiment, threads)
    emit(table, experiment.output, experiment.emit_format, experiment.include_timing)


def _plot(args: argparse.Namespace, config: AppConfig) -> None:
    from src.experiments.plotting import plot_results

    raw = load_experiment_file(args.config)
    experiment = build_experiment_config(raw, config)
    table = args.table or experiment.output
    if table is None:
        raise ConfigError("no result table: pass --table or set 'output' in the experiment config")
    plot_results(experiment.kind, table, args.out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        config: AppConfig = load_config()
        logging.getLogger().setLevel(config["logging"]["level"])
        logger.info("Starting %s", args.command)
        if args.command == "plot":
            _plot(args, config)
        else:
            _run_experiment(args, config)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        print("error: interrupted", file=sys.stderr)
        return 1
    except Exception as e:
        logger.error("%s failed", args.command, exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1

    logger.info("%s finished", args.command)
    return 0


if __name__ == "__main__":
    sys.exit(main())
