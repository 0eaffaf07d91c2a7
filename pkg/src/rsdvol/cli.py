"""Command-line interface: ``rsdvol analyze | detect | synth | version``.

Exit codes: 0 success, 1 validation error, 2 configuration error, 3 I/O error.
Every failure prints one line to stderr prefixed ``error[validation]:``,
``error[config]:`` or ``error[io]:``.

Any long option may also come from ``--config FILE``, a file of ``key = value``
lines (keys in flag form, with or without the leading dashes).  Flags given on
the command line win over the file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from rsdvol import __version__
from rsdvol.detect import parse_indicators
from rsdvol.errors import ConfigError, ConsistencyError, DomainError, RsdVolError, ValidationError
from rsdvol.model import GRAINS, Cohort, Period, aggregate, parse_records, serialize_records
from rsdvol.pipeline import AnalysisParams, run_pipeline
from rsdvol.report import CSV_FILES, emit, meta_block, report_to_dict
from rsdvol.stats import VARIANTS
from rsdvol.synth import Drift, SynthConfig, generate_records

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

# flags whose config-file value is a comma separated list
_LIST_KEYS = {"input", "drift"}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise ConfigError(message)


def _add_synth_options(p: argparse.ArgumentParser) -> None:
    d = SynthConfig()
    g = p.add_argument_group("synthetic data")
    g.add_argument("--subjects", type=int, default=d.subjects)
    g.add_argument("--periods", type=int, default=d.periods)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--base-target-hours", type=float, default=d.base_target_hours)
    g.add_argument("--fulfilment-noise-sd", type=float, default=d.fulfilment_noise_sd)
    g.add_argument(
        "--drift",
        action="append",
        default=[],
        metavar="SUBJECT@PERIOD:MAGNITUDE",
        help="drift subject index SUBJECT from period index PERIOD by MAGNITUDE (repeatable)",
    )
    g.add_argument("--start", default=str(d.start), help="first month, YYYY-MM")


def _add_analysis_options(p: argparse.ArgumentParser) -> None:
    d = AnalysisParams()
    p.add_argument("--config", help="key = value file supplying defaults for any flag")
    p.add_argument("--input", action="append", default=[], help="input file, '-' for stdin (repeatable)")
    p.add_argument("--input-format", choices=("auto", "csv", "json"), default="auto")
    p.add_argument("--synthetic", action="store_true", help="analyze a generated cohort instead of --input")
    p.add_argument("--grain", choices=GRAINS, default=d.grain)
    p.add_argument("--variant", choices=VARIANTS, default=d.variant)
    p.add_argument("--volatility-window", type=int, default=d.volatility_window)
    p.add_argument("--baseline-window", type=int, default=d.baseline_window)
    p.add_argument("--test-window", type=int, default=d.test_window)
    p.add_argument("--k-sigmas", type=float, default=d.k_sigmas)
    p.add_argument("--min-consecutive", type=int, default=d.min_consecutive)
    p.add_argument("--detect-on", choices=("raw", "adjusted"), default=d.detect_on)
    p.add_argument("--stable-threshold", type=float, default=d.stable_threshold)
    p.add_argument("--warning-band", type=float, default=d.warning_band)
    p.add_argument("--classify-window", type=int, default=d.classify_window)
    p.add_argument("--bsc-window", type=int, default=d.bsc_window)
    p.add_argument("--indicators", help="auxiliary indicator CSV: subject_id,name,value,direction,weight")
    p.add_argument("--rsdvol-weight", type=float, default=d.rsdvol_weight)
    p.add_argument("--out", help="output file (json) or directory (csv_bundle); stdout if omitted")
    _add_synth_options(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rsdvol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    analyze = sub.add_parser("analyze", help="full KPI report")
    _add_analysis_options(analyze)
    analyze.add_argument("--format", choices=("json", "csv_bundle"), default="json")

    detect = sub.add_parser("detect", help="shift alerts only")
    _add_analysis_options(detect)
    detect.add_argument("--format", choices=("json", "csv"), default="json")

    synth = sub.add_parser("synth", help="write a synthetic dataset")
    synth.add_argument("--config", help="key = value file supplying defaults for any flag")
    _add_synth_options(synth)
    synth.add_argument("--format", choices=("csv", "json"), default="csv")
    synth.add_argument("--out", help="output file; stdout if omitted")

    sub.add_parser("version", help="print the version")
    return parser


def read_config_file(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            file_values = read_config_file(args.config)
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc.strerror or exc}") from None
        sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        known = {a.dest for a in sub._actions}
        defaults: dict[str, Any] = {}
        lists: dict[str, list[str]] = {}
        for key, value in file_values.items():
            if key not in known or key in ("config", "help"):
                raise ConfigError(f"unknown key in config file: {key}")
            if key in _LIST_KEYS:
                lists[key] = [v.strip() for v in value.split(",") if v.strip()]
            elif key == "synthetic":
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
        for key, items in lists.items():
            if not getattr(args, key):
                setattr(args, key, items)
    return args


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    try:
        start = Period.parse(args.start)
    except ValueError:
        raise ConfigError(f"--start must be YYYY-MM, got {args.start!r}") from None
    return SynthConfig(
        subjects=args.subjects,
        periods=args.periods,
        seed=args.seed,
        base_target_hours=args.base_target_hours,
        fulfilment_noise_sd=args.fulfilment_noise_sd,
        drift_subjects=tuple(Drift.parse(d) for d in args.drift),
        start=start,
    )


def _synth_echo(cfg: SynthConfig) -> dict[str, Any]:
    return {
        "subjects": cfg.subjects,
        "periods": cfg.periods,
        "seed": cfg.seed,
        "base_target_hours": cfg.base_target_hours,
        "fulfilment_noise_sd": cfg.fulfilment_noise_sd,
        "drift": [str(d) for d in cfg.drift_subjects],
        "start": str(cfg.start),
    }


def _params(args: argparse.Namespace) -> AnalysisParams:
    return AnalysisParams(
        grain=args.grain,
        variant=args.variant,
        volatility_window=args.volatility_window,
        baseline_window=args.baseline_window,
        test_window=args.test_window,
        k_sigmas=args.k_sigmas,
        min_consecutive=args.min_consecutive,
        detect_on=args.detect_on,
        stable_threshold=args.stable_threshold,
        warning_band=args.warning_band,
        classify_window=args.classify_window,
        bsc_window=args.bsc_window,
        rsdvol_weight=args.rsdvol_weight,
    )


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _input_format(path: str, requested: str) -> str:
    if requested != "auto":
        return requested
    return "json" if path.lower().endswith(".json") else "csv"


def _load(args: argparse.Namespace, params: AnalysisParams) -> tuple[Cohort, dict[str, Any]]:
    if args.synthetic:
        if args.input:
            raise ConfigError("--synthetic and --input are mutually exclusive")
        cfg = _synth_config(args)
        daily = generate_records(cfg)
        blob = serialize_records(daily, "csv")
        dataset: dict[str, Any] = {"sources": [], "synthetic": _synth_echo(cfg)}
    else:
        if not args.input:
            raise ConfigError("--input is required (or use --synthetic)")
        daily = []
        digest = hashlib.sha256()
        for path in args.input:
            data = _read_input(path)
            digest.update(data)
            try:
                daily.extend(parse_records(data, _input_format(path, args.input_format)))  # type: ignore[arg-type]
            except ValidationError as exc:
                raise ValidationError(f"{'<stdin>' if path == '-' else path}: {exc}") from None
        blob = None
        dataset = {
            "sources": ["<stdin>" if p == "-" else p for p in args.input],
            "synthetic": None,
        }
    cohort = aggregate(daily, params.grain)
    digest_hex = hashlib.sha256(blob).hexdigest() if blob is not None else digest.hexdigest()
    dataset.update(
        sha256=digest_hex,
        records=len(daily),
        subjects=len(cohort),
        periods=len(cohort.period_axis),
    )
    return cohort, dataset


def _indicators(args: argparse.Namespace):
    if not args.indicators:
        return None
    return parse_indicators(Path(args.indicators).read_bytes())


def _write(out: str | None, data: bytes) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(out).write_bytes(data)


def run_analyze(args: argparse.Namespace) -> int:
    params = _params(args)
    cohort, dataset = _load(args, params)
    indicators = _indicators(args)
    dataset["indicators"] = args.indicators
    report = run_pipeline(cohort, params, dataset, indicators)
    if args.format == "json":
        _write(args.out, emit(report, "json"))  # type: ignore[arg-type]
    else:
        if not args.out:
            raise ConfigError("--format csv_bundle needs --out DIRECTORY")
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        bundle = emit(report, "csv_bundle")
        for name in CSV_FILES:
            (outdir / name).write_bytes(bundle[name])  # type: ignore[index]
    return EXIT_OK


def run_detect(args: argparse.Namespace) -> int:
    params = _params(args)
    cohort, dataset = _load(args, params)
    report = run_pipeline(cohort, params, dataset)
    if args.format == "csv":
        _write(args.out, emit(report, "csv_bundle")["alerts.csv"])  # type: ignore[index]
        return EXIT_OK
    full = report_to_dict(report)
    doc = {
        "meta": meta_block(dataset, params.echo()),
        "alerts": [
            {"subject_id": b["subject_id"], **a} for b in full["subjects"] for a in b["alerts"]
        ],
        "insufficient_data": [b["subject_id"] for b in full["subjects"] if b["insufficient_data"]],
    }
    text = json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    _write(args.out, text.encode("utf-8"))
    return EXIT_OK


def run_synth(args: argparse.Namespace) -> int:
    cfg = _synth_config(args)
    _write(args.out, serialize_records(generate_records(cfg), args.format))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        if args.command == "version":
            print(f"rsdvol {__version__}")
            return EXIT_OK
        if args.command == "synth":
            return run_synth(args)
        if args.command == "detect":
            return run_detect(args)
        return run_analyze(args)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except (ValidationError, DomainError, ConsistencyError) as exc:
        return _fail("validation", exc, EXIT_VALIDATION)
    except OSError as exc:
        detail = f"{exc.filename}: {exc.strerror}" if exc.filename else str(exc)
        return _fail("io", detail, EXIT_IO)
    except RsdVolError as exc:
        return _fail("validation", exc, EXIT_VALIDATION)


def _fail(kind: str, exc: object, code: int) -> int:
    message = " ".join(str(exc).split())
    print(f"error[{kind}]: {message}", file=sys.stderr)
    return code


def run() -> None:
    sys.exit(main())
