"""Command-line entry point.

    otoc-lab run --experiment sweep --t2-star-us 130 --output-dir out/
    otoc-lab plot out/otoc.csv --kind otoc

Exit codes: 0 success, 1 configuration or input error, 2 runtime/numerical error.
"""

import argparse
import logging
import sys

from .config import FIELD_NAMES, ConfigError, build_config, read_config_file

log = logging.getLogger("otoc_lab")

_HELP = {
    "experiment": "otoc | qpd | nonclassicality | sweep",
    "n_qubits": "chain length N (default 5)",
    "h_over_j": "longitudinal field h/J (default 0)",
    "g_over_j": "transverse field g/J (default 1.05)",
    "j_coupling": "Ising coupling J in rad/us (default 2*pi, i.e. 2*pi/J = 1 us)",
    "t2_star_us": "dephasing time T2* in us, or 'none' for a closed system (default 130)",
    "temperature_over_j": "Gibbs temperature T/J, or 'infinite' (default 1)",
    "t_max_us": "simulation horizon (default 60; 200 for sweep)",
    "dt_grid_us": "output grid spacing (default 0.1)",
    "dt_integration_us": "Lindblad step (default 0.005)",
    "protocols": "comma-separated subset of ideal,weak,interferometric,clock",
    "sweep_points": "number of h/J values in [sweep-h-min, sweep-h-max] (default 15)",
    "sweep_h_min": "first h/J of the sweep (default 0)",
    "sweep_h_max": "last h/J of the sweep (default 0.5)",
    "output_dir": "output directory (default $OTOC_LAB_OUTPUT_DIR or ./otoc_output)",
    "worker_count": "parallel worker processes (default 1)",
    "method": "spectral | step (evolution engine for decoherent legs)",
    "plot": "write SVG figures next to the CSVs (true/false, default true)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otoc-lab", description="OTOC quasiprobability simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV, SVG and manifest files")
    run.add_argument("--config", help="flat key=value configuration file")
    for name in FIELD_NAMES:
        run.add_argument("--" + name.replace("_", "-"), dest=name, default=None, help=_HELP.get(name))
    run.add_argument("--no-plot", dest="plot", action="store_const", const="false", help="skip SVG figures")

    plot = sub.add_parser("plot", help="render an SVG from an experiment CSV")
    plot.add_argument("csv_path")
    plot.add_argument("--kind", required=True, choices=("otoc", "qpd", "nonclassicality", "ratio"))
    plot.add_argument("--output", default=None, help="SVG path (default: CSV path with .svg suffix)")
    return parser


def _run(args) -> int:
    from .experiments import run_experiment

    try:
        file_values = read_config_file(args.config) if args.config else {}
        overrides = {name: getattr(args, name) for name in FIELD_NAMES}
        cfg = build_config(file_values, overrides)
    except ConfigError as exc:
        print(f"otoc-lab: configuration error: {exc}", file=sys.stderr)
        return 1
    log.info("running %s into %s", cfg.experiment, cfg.output_dir)
    try:
        files = run_experiment(cfg)
    except OSError as exc:
        print(f"otoc-lab: cannot write output: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, MemoryError) as exc:
        print(f"otoc-lab: runtime error: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


def _plot(args) -> int:
    from .plotting import PlotError, emit_plot

    try:
        path = emit_plot(args.csv_path, args.kind, args.output)
    except PlotError as exc:
        print(f"otoc-lab: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"otoc-lab: cannot write figure: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "run":
        return _run(args)
    return _plot(args)


if __name__ == "__main__":
    sys.exit(main())
