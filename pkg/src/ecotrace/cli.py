"""Command-line interface.

One entry point, one subcommand per task:

  monitor     spawn a sampler command and record a live power trace
  ingest      convert a captured dmon log into a trace CSV
  energy      integrate a trace CSV into kWh
  emissions   convert kWh into kg CO2eq for a grid region
  breakeven   energy crossover horizon between two systems
  annualize   extrapolate a draw to a year of use
  compare     chart data: model draws next to appliance draws
  appliances  how many of a given appliance a workload equals
  statement   carbon impact statement over the stored runs
  fixtures    import the bundled reference dataset into the store
  intensity   look up or compute grid carbon intensity statistics

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 I/O or source failure. Unknown flags are errors, never ignored.
"""

from __future__ import annotations

import argparse
import csv
import queue
import sys
import threading
import time
from pathlib import Path

from ecotrace import analytics, carbon, report, telemetry, timeseries
from ecotrace.errors import DataError, EcotraceError, IoFailure
from ecotrace.store import ENV_HOME, RunStore, default_root

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

DEFAULT_SAMPLER = "nvidia-smi dmon -d {interval}"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def _pos_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _pos_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {text}")
    return value


def _pue(text: str) -> float:
    value = float(text)
    if value < 1.0:
        raise argparse.ArgumentTypeError(f"PUE must be >= 1.0, got {text}")
    return value


def _columns(text: str) -> tuple[str, ...]:
    names = tuple(name.strip() for name in text.split(",") if name.strip())
    if "gpu" not in names or "pwr" not in names:
        raise argparse.ArgumentTypeError("column layout must include gpu and pwr")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ecotrace",
        description="Energy and carbon accounting for GPU workloads.",
    )
    parser.add_argument(
        "--home",
        metavar="DIR",
        default=None,
        help=f"store directory (default: ${ENV_HOME} or ~/.ecotrace)",
    )
    parser.add_argument(
        "--format",
        dest="global_format",
        choices=list(report.FORMATS),
        default=None,
        help="output format for table-producing commands",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("monitor", help="record a live power trace", parents=[])
    p.add_argument("--cmd", default=DEFAULT_SAMPLER,
                   help="sampler command; {interval} is substituted")
    p.add_argument("--interval", type=_pos_float, default=1.0,
                   help="sampling interval in seconds (default 1)")
    p.add_argument("--out", required=True, help="trace CSV to append to")
    p.add_argument("--columns", type=_columns,
                   default=telemetry.DEFAULT_DMON_COLUMNS,
                   help="comma-separated dmon column layout")
    p.add_argument("--gpu-spec", default=None,
                   help="registered GPU name for sanity ceilings")
    p.add_argument("--max-samples", type=_pos_int, default=None,
                   help="stop after this many samples")

    p = sub.add_parser("ingest", help="convert a dmon log to a trace CSV")
    p.add_argument("--dmon", required=True, help="captured dmon output file")
    p.add_argument("--interval", type=_pos_float, required=True,
                   help="sampling interval of the capture in seconds")
    p.add_argument("--start", type=float, default=0.0,
                   help="timestamp of the first cycle (default 0)")
    p.add_argument("--columns", type=_columns,
                   default=telemetry.DEFAULT_DMON_COLUMNS)
    p.add_argument("--gpu-spec", default=None,
                   help="registered GPU name for sanity ceilings")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--out", help="trace CSV to write")
    group.add_argument("--store-as", metavar="ID",
                       help="write into the store as traces/<ID>.csv")

    p = sub.add_parser("energy", help="integrate a trace CSV into kWh")
    p.add_argument("--trace", required=True, help="trace CSV file")
    p.add_argument("--interval", type=_pos_float, default=1.0,
                   help="nominal sampling interval in seconds")
    p.add_argument("--method", choices=[timeseries.PER_SECOND, timeseries.TRAPEZOID],
                   default=timeseries.PER_SECOND)
    p.add_argument("--raw", action="store_true",
                   help="integrate the raw spacing (trapezoid only), no resampling")

    p = sub.add_parser("emissions", help="convert kWh to kg CO2eq")
    p.add_argument("--kwh", type=_nonneg_float, required=True)
    p.add_argument("--region", required=True, help="grid region code, e.g. IE")
    p.add_argument("--pue", type=_pue, default=carbon.DEFAULT_PUE)

    p = sub.add_parser("breakeven", help="energy crossover between two systems")
    p.add_argument("--train-a", type=_nonneg_float, required=True,
                   help="training energy of system A in kWh")
    p.add_argument("--power-a", type=_pos_float, required=True,
                   help="inference-time draw of system A in W")
    p.add_argument("--train-b", type=_nonneg_float, required=True)
    p.add_argument("--power-b", type=_pos_float, required=True)
    p.add_argument("--rate-a", type=_pos_float, default=None,
                   help="units of work per hour for A (throughput-normalized)")
    p.add_argument("--rate-b", type=_pos_float, default=None)

    p = sub.add_parser("annualize", help="extrapolate a draw to a year")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--power", type=_pos_float,
                       help="average total draw in W")
    group.add_argument("--record", metavar="ID",
                       help="derive the draw from a stored record (kwh/elapsed)")
    p.add_argument("--utilization", type=_fraction, default=1.0,
                   help="fraction of the year in use (default 1.0)")
    p.add_argument("--region", required=True)
    p.add_argument("--pue", type=_pue, default=carbon.DEFAULT_PUE)
    p.add_argument("--scale-gpus", type=_pos_int, default=1,
                   help="multiply the draw, e.g. to fill a whole workstation")

    p = sub.add_parser("compare", help="chart data: model vs device draws")
    p.add_argument("--devices", default=None,
                   help="device CSV (name,power_w,utilization); default bundled")
    p.add_argument("--ceiling", type=_pos_float, default=1200.0,
                   help="exclude devices drawing more than this (default 1200 W)")
    p.add_argument("--phase", choices=[analytics.PHASE_TRAIN, analytics.PHASE_TRANSLATE])
    p.add_argument("--architecture", dest="architecture", default=None)
    p.add_argument("--gpu-model", dest="gpu_model", default=None)
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")

    p = sub.add_parser("appliances", help="workload vs appliance emissions")
    p.add_argument("--power", type=_pos_float, required=True,
                   help="average total draw in W")
    p.add_argument("--utilization", type=_fraction, default=1.0)
    p.add_argument("--region", required=True)
    p.add_argument("--pue", type=_pue, default=carbon.DEFAULT_PUE)
    p.add_argument("--devices", default=None,
                   help="device CSV; default bundled sample set")
    p.add_argument("--format", choices=list(report.FORMATS), default=None)
    p.add_argument("--out", default=None, help="write chart CSV here as well")

    p = sub.add_parser("statement", help="carbon impact statement over the store")
    p.add_argument("--pue", type=_pue, default=carbon.DEFAULT_PUE)
    p.add_argument("--format", choices=list(report.FORMATS), default=None,
                   help="text prints the statement; other formats add the run table")

    p = sub.add_parser("fixtures", help="import the bundled reference dataset")

    p = sub.add_parser("intensity", help="grid carbon intensity statistics")
    p.add_argument("--region", required=True)
    p.add_argument("--history", default=None,
                   help="history CSV (timestamp_iso8601,region,carbon_intensity_g_per_kwh)")

    return parser


def _resolve_format(args, default=report.TEXT):
    explicit = getattr(args, "format", None)
    return explicit or args.global_format or default


def _apply_config_overrides(home) -> None:
    root = Path(home) if home else default_root()
    config = root / "config.toml"
    if config.is_file():
        from ecotrace.store import tomllib

        with config.open("rb") as handle:
            carbon.apply_intensity_overrides(tomllib.load(handle))


def _store(args) -> RunStore:
    return RunStore(Path(args.home) if args.home else None)


def _bundled_devices_path() -> Path:
    return Path(__file__).parent / "data" / "devices.csv"


def _load_devices(path_arg):
    path = Path(path_arg) if path_arg else _bundled_devices_path()
    return analytics.read_devices_csv(path)


# --- subcommand bodies -------------------------------------------------------

_CSV_HEADER = ["timestamp_s", "gpu_index", "power_w",
               "temp_c", "sm_util_pct", "mem_util_pct"]


def _sample_row(sample):
    return [
        repr(sample.timestamp_s),
        sample.gpu_index,
        repr(sample.power_w),
        "" if sample.temp_c is None else repr(sample.temp_c),
        "" if sample.sm_util_pct is None else repr(sample.sm_util_pct),
        "" if sample.mem_util_pct is None else repr(sample.mem_util_pct),
    ]


def _cmd_monitor(args, out) -> int:
    command = args.cmd.format(interval=args.interval)
    spec = telemetry.lookup_gpu(args.gpu_spec) if args.gpu_spec else None
    source = telemetry.TelemetrySource.process_stream(
        command, args.interval, args.columns
    )
    buffer: queue.Queue = queue.Queue(maxsize=256)
    failures = []

    def writer():
        try:
            with open(args.out, "w", newline="", encoding="utf-8") as handle:
                rows = csv.writer(handle)
                rows.writerow(_CSV_HEADER)
                handle.flush()
                while True:
                    sample = buffer.get()
                    if sample is None:
                        return
                    rows.writerow(_sample_row(sample))
                    # flush per line so a killed run loses at most one sample
                    handle.flush()
        except OSError as exc:
            failures.append(exc)

    thread = threading.Thread(target=writer, name="trace-writer")
    thread.start()
    written = 0
    try:
        for sample in telemetry.read_source(source, clock=time.time):
            telemetry.validate_sample(sample, spec)
            buffer.put(sample)
            written += 1
            if args.max_samples is not None and written >= args.max_samples:
                break
    except KeyboardInterrupt:
        pass
    finally:
        buffer.put(None)
        thread.join()
    if failures:
        raise IoFailure(f"cannot write {args.out}: {failures[0]}")
    print(f"wrote {written} samples to {args.out}", file=out)
    return EXIT_OK


def _cmd_ingest(args, out) -> int:
    spec = telemetry.lookup_gpu(args.gpu_spec) if args.gpu_spec else None
    source = telemetry.TelemetrySource.file_replay(
        args.dmon, args.interval, args.columns
    )
    samples = []
    for sample in telemetry.read_source(source, start_time=args.start):
        telemetry.validate_sample(sample, spec)
        samples.append(sample)
    target = args.out if args.out else _store(args).trace_path(args.store_as)
    count = timeseries.write_trace_csv(target, samples)
    print(f"wrote {count} samples to {target}", file=out)
    return EXIT_OK


def _cmd_energy(args, out) -> int:
    samples = timeseries.read_trace_csv(args.trace)
    trace_set = timeseries.traceset_from_samples(
        samples, nominal_interval_s=args.interval
    )
    if args.raw:
        if args.method != timeseries.TRAPEZOID:
            raise DataError("--raw requires --method trapezoid")
    else:
        trace_set = timeseries.resample_set(trace_set)
    kwh = timeseries.integrate_kwh(trace_set, args.method)
    print(f"{kwh:.6f} kWh", file=out)
    return EXIT_OK


def _cmd_emissions(args, out) -> int:
    ctx = carbon.context_for(args.region, args.pue)
    estimate = carbon.co2_emissions(args.kwh, ctx)
    print(
        f"{report.fmt(estimate.mean_kg)} ± {report.fmt(estimate.std_kg)} kg CO2eq",
        file=out,
    )
    return EXIT_OK


def _cmd_breakeven(args, out) -> int:
    if (args.rate_a is None) != (args.rate_b is None):
        raise DataError("--rate-a and --rate-b must be given together")
    if args.rate_a is not None:
        # separate mode: charge each system its energy per unit of work
        # instead of comparing wall-clock operation
        units, hours_a, hours_b = analytics.break_even_throughput(
            args.train_a, args.power_a, args.rate_a,
            args.train_b, args.power_b, args.rate_b,
        )
        print(
            f"throughput-normalized: {units:.0f} units "
            f"(A: {hours_a:.1f} h, B: {hours_b:.1f} h)",
            file=out,
        )
        return EXIT_OK
    result = analytics.break_even(
        args.train_a, args.power_a, args.train_b, args.power_b
    )
    print(f"{result.hours:.1f} h ({result.days:.1f} days)", file=out)
    return EXIT_OK


def _cmd_annualize(args, out) -> int:
    if args.record is not None:
        record = _store(args).get(args.record)
        power = record.workstation_power_w
    else:
        power = args.power
    power *= args.scale_gpus
    ctx = carbon.context_for(args.region, args.pue)
    estimate = analytics.annualize(power, args.utilization, ctx)
    print(
        f"{estimate.kwh_per_year:.1f} kWh/yr -> "
        f"{report.fmt(estimate.emission.mean_kg)} ± "
        f"{report.fmt(estimate.emission.std_kg)} kg CO2eq/yr "
        f"(draw {power:.1f} W, utilization {args.utilization:g})",
        file=out,
    )
    return EXIT_OK


def _cmd_compare(args, out) -> int:
    records = _store(args).query(
        architecture=args.architecture,
        phase=args.phase,
        gpu_model=args.gpu_model,
    )
    devices = _load_devices(args.devices)
    rows = analytics.power_comparison_rows(records, devices, args.ceiling)
    if args.out:
        count = report.export_chart_data(rows, args.out)
        print(f"wrote {count} rows to {args.out}", file=out)
    else:
        print("name,value,kind", file=out)
        for name, value, kind in report.chart_rows(rows):
            print(f"{name},{value!r},{kind}", file=out)
    return EXIT_OK


def _cmd_appliances(args, out) -> int:
    ctx = carbon.context_for(args.region, args.pue)
    estimate = analytics.annualize(args.power, args.utilization, ctx)
    devices = _load_devices(args.devices)
    rows, skipped = analytics.appliance_equivalents(estimate, devices, ctx)
    print(
        f"workload: {estimate.kwh_per_year:.1f} kWh/yr, "
        f"{report.fmt(estimate.emission.mean_kg)} kg CO2eq/yr",
        file=out,
    )
    if _resolve_format(args) == report.CSV:
        print("name,annual_kg,ratio", file=out)
        for row in rows:
            print(f"{row.name},{row.annual_kg!r},{row.ratio!r}", file=out)
    else:
        width = max((len(r.name) for r in rows), default=0)
        for row in rows:
            print(
                f"{row.name.ljust(width)}  {report.fmt(row.annual_kg):>10s} kg/yr"
                f"  x{row.ratio:.2f}",
                file=out,
            )
    for note in skipped:
        print(f"skipped {note}", file=out)
    if args.out:
        report.export_chart_data(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}", file=out)
    return EXIT_OK


def _cmd_statement(args, out) -> int:
    records = _store(args).query()
    text = report.carbon_statement(records, pue=args.pue)
    print(text, end="", file=out)
    format = _resolve_format(args)
    if format != report.TEXT:
        print(report.render_table(records, format, pue=args.pue), end="", file=out)
    return EXIT_OK


def _cmd_fixtures(args, out) -> int:
    store = _store(args)
    count = store.import_fixtures()
    print(f"imported {count} records into {store.root}", file=out)
    return EXIT_OK


def _cmd_intensity(args, out) -> int:
    if args.history:
        pairs = carbon.read_intensity_history_csv(args.history, args.region)
        intensity = carbon.intensity_stats(pairs, args.region)
    else:
        intensity = carbon.registry_lookup(args.region)
    print(
        f"{intensity.region}: {intensity.mean_g_per_kwh:.4f} ± "
        f"{intensity.std_g_per_kwh:.4f} g CO2/kWh ({intensity.provenance})",
        file=out,
    )
    return EXIT_OK


_COMMANDS = {
    "monitor": _cmd_monitor,
    "ingest": _cmd_ingest,
    "energy": _cmd_energy,
    "emissions": _cmd_emissions,
    "breakeven": _cmd_breakeven,
    "annualize": _cmd_annualize,
    "compare": _cmd_compare,
    "appliances": _cmd_appliances,
    "statement": _cmd_statement,
    "fixtures": _cmd_fixtures,
    "intensity": _cmd_intensity,
}


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config_overrides(args.home)
        return _COMMANDS[args.command](args, out)
    except DataError as exc:
        print(f"ecotrace {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (IoFailure, OSError) as exc:
        print(f"ecotrace {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except EcotraceError as exc:
        print(f"ecotrace {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
