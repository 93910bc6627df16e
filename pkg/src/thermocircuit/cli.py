"""Command-line front end.

Single scenario::

    thermocircuit --config house.tc --inputs weather.csv --output out.csv

Batch mode runs every sub-directory of ``--batch`` holding one ``*.tc``
file and an ``inputs.csv``, writing ``output.csv`` (and the optional
reports) next to them.

Exit codes: 0 success, 1 usage, 2 parse, 3 model, 4 numeric.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ._validation import check_positive
from .building import build_model, parse_building
from .compare import HISTOGRAM_BIN, compare
from .exceptions import (
    AssemblyError,
    CircuitError,
    InputBindingError,
    NoStatesError,
    ParseError,
    SingularityError,
    StabilityError,
    ThermoCircuitError,
)
from .simulate import METHODS, IntegratorConfig, eigen_report
from .tsio import format_trajectory, ingest_timeseries

__all__ = ["main", "run", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_PARSE", "EXIT_MODEL", "EXIT_NUMERIC"]

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_MODEL, EXIT_NUMERIC = 0, 1, 2, 3, 4

_EXIT_CODES = (
    (ParseError, EXIT_PARSE),
    (InputBindingError, EXIT_PARSE),
    (StabilityError, EXIT_NUMERIC),
    (CircuitError, EXIT_MODEL),
    (AssemblyError, EXIT_MODEL),
    (SingularityError, EXIT_MODEL),
    (NoStatesError, EXIT_MODEL),
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="thermocircuit",
        description="Assemble thermal circuits, extract the state-space model and simulate it.",
    )
    p.add_argument("--config", type=Path, help="building description (.tc)")
    p.add_argument("--inputs", type=Path, help="input time series (CSV, first column 'time')")
    p.add_argument("--output", type=Path, help="trajectory file; reports are written next to it")
    p.add_argument("--dt", type=float, help="simulation step in seconds, must divide the input step")
    p.add_argument("--method", choices=METHODS, default="exact-zoh")
    p.add_argument("--report-eigen", action="store_true", help="write <output>.eigen.txt")
    p.add_argument("--dump-statespace", action="store_true", help="write <output>.statespace.json")
    p.add_argument("--compare", type=Path, metavar="MEASURED", help="measured CSV; writes <output>.compare.json")
    p.add_argument("--bin-width", type=float, default=HISTOGRAM_BIN, help="histogram bin of --compare, °C")
    p.add_argument("--allow-unbound", action="store_true", help="unbound sources are held at zero")
    p.add_argument("--batch", type=Path, metavar="DIR", help="run every scenario sub-directory of DIR")
    p.add_argument("--jobs", type=int, default=None, help="worker processes in batch mode")
    return p


def _side_path(output: Path, suffix: str) -> Path:
    return output.with_name(output.name + suffix)


def _statespace_json(model) -> str:
    ss = model.state_space
    doc = {
        "A": ss.A.tolist(),
        "B": ss.B.tolist(),
        "C": ss.C.tolist(),
        "D": ss.D.tolist(),
        "states": list(ss.state_labels),
        "inputs": list(ss.input_labels),
        "outputs": list(ss.output_labels),
        "channels": list(model.channels),
        "input_gains": model.input_gains.tolist(),
    }
    return json.dumps(doc, indent=1) + "\n"


def run(args) -> int:
    """Run one scenario.  Errors propagate as exceptions."""
    if args.config is None:
        raise _UsageError("--config is required")
    if args.inputs is None and not (args.report_eigen or args.dump_statespace):
        raise _UsageError("--inputs is required unless only reports are requested")
    if args.compare is not None and args.inputs is None:
        raise _UsageError("--compare needs --inputs")
    if (args.report_eigen or args.dump_statespace or args.compare) and args.output is None:
        raise _UsageError("reports are written next to --output, which is missing")
    try:
        check_positive("--dt", args.dt, allow_none=True)
        check_positive("--bin-width", args.bin_width)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None

    desc = parse_building(args.config)
    inputs = ingest_timeseries(args.inputs) if args.inputs is not None else None
    model = build_model(desc, allow_unbound=args.allow_unbound)

    if args.report_eigen:
        _side_path(args.output, ".eigen.txt").write_text(str(eigen_report(model.state_space)) + "\n", "utf-8")
    if args.dump_statespace:
        _side_path(args.output, ".statespace.json").write_text(_statespace_json(model), "utf-8")
    if inputs is None:
        return EXIT_OK

    try:
        cfg = IntegratorConfig(method=args.method, dt=args.dt)
        traj = model.simulate(inputs, cfg)
    except StabilityError:
        raise
    except ValueError as exc:
        if isinstance(exc, ThermoCircuitError):
            raise
        raise _UsageError(str(exc)) from None
    if not np.all(np.isfinite(traj.outputs)):
        raise StabilityError("simulation produced non-finite temperatures")

    text = format_trajectory(traj)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, "utf-8")

    if args.compare is not None:
        measured = ingest_timeseries(args.compare)
        channel_map = {o: o for o in traj.output_labels if o in measured.channels}
        if not channel_map:
            raise ParseError("no output column matches a measured channel", args.compare, 1, 1)
        try:
            stats = compare(traj, measured, channel_map, bin_width=args.bin_width)
        except ValueError as exc:
            raise ParseError(str(exc), args.compare) from None
        doc = {label: s.to_dict() for label, s in stats.items()}
        _side_path(args.output, ".compare.json").write_text(json.dumps(doc, indent=1) + "\n", "utf-8")
        for label, s in stats.items():
            print(f"{label}: {s.summary()}")
    return EXIT_OK


def _exit_code(exc: BaseException) -> int:
    for cls, code in _EXIT_CODES:
        if isinstance(exc, cls):
            return code
    if isinstance(exc, _UsageError):
        return EXIT_USAGE
    return EXIT_MODEL if isinstance(exc, ThermoCircuitError) else EXIT_USAGE


def _run_guarded(args) -> int:
    try:
        return run(args)
    except _UsageError as exc:
        print(f"thermocircuit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ThermoCircuitError as exc:
        print(f"thermocircuit: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


def _scenario(directory: str, base: dict) -> tuple:
    d = Path(directory)
    configs = sorted(d.glob("*.tc"))
    if len(configs) != 1:
        print(f"thermocircuit: error: {d}: expected one .tc file, found {len(configs)}", file=sys.stderr)
        return d.name, EXIT_USAGE
    args = argparse.Namespace(**base)
    args.config = configs[0]
    args.inputs = d / "inputs.csv"
    args.output = d / "output.csv"
    measured = d / "measured.csv"
    args.compare = measured if base.get("compare") is None and measured.exists() else base.get("compare")
    return d.name, _run_guarded(args)


def run_batch(args) -> int:
    root = args.batch
    if not root.is_dir():
        print(f"thermocircuit: error: --batch {root} is not a directory", file=sys.stderr)
        return EXIT_USAGE
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "inputs.csv").exists())
    if not dirs:
        print(f"thermocircuit: error: no scenario directories with inputs.csv in {root}", file=sys.stderr)
        return EXIT_USAGE
    base = {k: v for k, v in vars(args).items() if k not in ("batch", "jobs", "config", "inputs", "output")}
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_scenario, [str(d) for d in dirs], [base] * len(dirs)))
    worst = EXIT_OK
    for name, code in results:
        print(f"{name}: {'ok' if code == EXIT_OK else f'failed (exit {code})'}")
        worst = max(worst, code)
    return worst


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.batch is not None:
        if args.config or args.inputs or args.output:
            print("thermocircuit: error: --batch excludes --config, --inputs and --output", file=sys.stderr)
            return EXIT_USAGE
        if args.jobs is not None and args.jobs < 1:
            print("thermocircuit: error: --jobs must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        return run_batch(args)
    return _run_guarded(args)


if __name__ == "__main__":
    sys.exit(main())
