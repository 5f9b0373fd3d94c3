"""
Command Line Interface for the rANS codec
Compresses and decompresses byte streams and reports rate statistics
against the codec's bound.

Usage:
    python main.py compress INPUT [-o OUTPUT] [--model static|adaptive] [--rs N --rt N --r N]
    python main.py decompress INPUT [-o OUTPUT] [--strict]
    python main.py stats INPUT [--stats-format human|machine]
    python main.py selftest [--trials N] [--seed S]

Exit codes: 0 success, 1 usage error, 2 corrupt input, 3 selftest failure.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .ans_core import CodecError, CodecParams, InvalidParamsError
from .config import Config
from .container import (
    CompressedContainer,
    ContainerError,
    ModelDescriptor,
    read_container,
    write_container,
)
from .models import AdaptiveOrder0Model, ModelError, StaticModel, SymbolModel
from .selftest import SelftestSummary, run_selftest
from .stream_codec import BoundCheck, RateReport, decode, encode, verify_bound


logger = logging.getLogger(__name__)

BYTE_ALPHABET = 256
COMPRESSED_SUFFIX = ".rans"


class ExitCode(IntEnum):
    """Process exit codes"""
    OK = 0
    USAGE = 1
    CORRUPT_INPUT = 2
    SELFTEST_FAILED = 3


class Command(Enum):
    COMPRESS = "compress"
    DECOMPRESS = "decompress"
    STATS = "stats"
    SELFTEST = "selftest"


class ModelChoice(Enum):
    STATIC = "static"
    ADAPTIVE = "adaptive"


class StatsFormat(Enum):
    HUMAN = "human"
    MACHINE = "machine"


@dataclass
class CliConfig:
    """
    Resolved settings for one invocation

    param_flags holds only the precisions given on the command line.
    """
    command: Command
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None
    model: ModelChoice = ModelChoice.STATIC
    params: CodecParams = field(default_factory=CodecParams)
    param_flags: Dict[str, int] = field(default_factory=dict)
    stats_format: StatsFormat = StatsFormat.HUMAN
    use_lookup_table: bool = False
    strict: bool = False
    trials: int = 200
    seed: int = 20190101
    inject_fault: bool = False


class UsageError(Exception):
    """Bad command line values"""


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage exit code"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per Command"""
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="settings file (default: settings/settings.json)")
    common.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")

    precision = _ArgumentParser(add_help=False)
    precision.add_argument("--rs", type=int, metavar="BITS", help="head precision r_s")
    precision.add_argument("--rt", type=int, metavar="BITS", help="tail word precision r_t")
    precision.add_argument("--r", type=int, metavar="BITS", help="probability precision r")
    precision.add_argument("--lookup-table", action="store_true", help="use a direct 2^r symbol lookup table")

    report = _ArgumentParser(add_help=False)
    report.add_argument(
        "--stats-format", choices=[f.value for f in StatsFormat],
        help="human readable or newline-delimited key=value",
    )
    report.add_argument(
        "--model", choices=[m.value for m in ModelChoice],
        help="static byte counts or adaptive order-0",
    )

    parser = _ArgumentParser(prog="rans", description="Streaming rANS stack codec")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(Command.COMPRESS.value, parents=[common, precision, report], help="compress a file")
    p.add_argument("input")
    p.add_argument("-o", "--output", help=f"output file (default: INPUT{COMPRESSED_SUFFIX})")

    p = sub.add_parser(Command.DECOMPRESS.value, parents=[common, precision], help="decompress a file")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="output file (default: INPUT without its suffix)")
    p.add_argument("--strict", action="store_true", help="fail when the decoder does not end at the initial message")

    p = sub.add_parser(Command.STATS.value, parents=[common, precision, report], help="report rate statistics only")
    p.add_argument("input")

    p = sub.add_parser(Command.SELFTEST.value, parents=[common], help="run the invariant suites")
    p.add_argument("--trials", type=int, help="randomized trials per suite")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    return parser


def parse_config(args: argparse.Namespace, config: Config) -> CliConfig:
    """
    Merge parsed arguments over the settings file

    Raises:
        UsageError: precisions that do not form valid CodecParams
    """
    command = Command(args.command)
    param_flags = {
        key: value
        for key, value in (("r_s", getattr(args, "rs", None)), ("r_t", getattr(args, "rt", None)), ("r", getattr(args, "r", None)))
        if value is not None
    }
    try:
        params = CodecParams(
            param_flags.get("r_s", config.r_s),
            param_flags.get("r_t", config.r_t),
            param_flags.get("r", config.r),
        )
    except InvalidParamsError as e:
        raise UsageError(str(e)) from e

    model = getattr(args, "model", None) or config.model
    stats_format = getattr(args, "stats_format", None) or config.stats_format
    try:
        model_choice = ModelChoice(model)
        format_choice = StatsFormat(stats_format)
    except ValueError as e:
        raise UsageError(str(e)) from e

    trials = getattr(args, "trials", None)
    seed = getattr(args, "seed", None)
    output = getattr(args, "output", None)
    input_path = getattr(args, "input", None)
    return CliConfig(
        command=command,
        input_path=Path(input_path) if input_path else None,
        output_path=Path(output) if output else None,
        model=model_choice,
        params=params,
        param_flags=param_flags,
        stats_format=format_choice,
        use_lookup_table=getattr(args, "lookup_table", False) or config.use_lookup_table,
        strict=getattr(args, "strict", False) or config.strict_end_state,
        trials=trials if trials is not None else config.selftest_trials,
        seed=seed if seed is not None else config.selftest_seed,
        inject_fault=getattr(args, "inject_fault", False),
    )


def build_byte_model(data: bytes, cli: CliConfig) -> SymbolModel:
    """
    Model for a byte stream under the chosen mode

    Static mode counts bytes; an empty input gets flat counts so the header
    still describes a valid distribution.
    """
    r = cli.params.r
    if cli.model == ModelChoice.ADAPTIVE:
        return AdaptiveOrder0Model(BYTE_ALPHABET, r)
    counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=BYTE_ALPHABET)
    if not data:
        counts = np.ones(BYTE_ALPHABET, dtype=np.int64)
    return StaticModel.from_counts(counts.tolist(), r, use_lookup_table=cli.use_lookup_table)


def compress_bytes(data: bytes, cli: CliConfig) -> Tuple[CompressedContainer, RateReport]:
    """
    Compress bytes into a container

    Returns:
        Tuple of (CompressedContainer, RateReport)
    """
    if not cli.params.byte_aligned:
        raise UsageError("--rs and --rt must be multiples of 8 for the container format")
    try:
        model = build_byte_model(data, cli)
    except ModelError as e:
        raise UsageError(str(e)) from e
    message, report = encode(data, model, cli.params)
    container = CompressedContainer(
        params=cli.params,
        descriptor=ModelDescriptor.from_model(model),
        n_symbols=len(data),
        message=message,
    )
    return container, report


def decompress_container(container: CompressedContainer, cli: CliConfig) -> bytes:
    """
    Decode a container back to bytes; header precisions win over flags
    """
    header = container.params
    for key, value in cli.param_flags.items():
        if getattr(header, key) != value:
            logger.warning(f"Ignoring --{key.replace('_', '')}={value}: container header says {getattr(header, key)}")
    if container.descriptor.alphabet_size > BYTE_ALPHABET:
        raise ContainerError(f"alphabet of {container.descriptor.alphabet_size} symbols is not a byte stream")
    model = container.descriptor.build_model(header.r, use_lookup_table=cli.use_lookup_table)
    symbols = decode(container.message, container.n_symbols, model, header, strict=cli.strict)
    return bytes(symbols)


def format_report(report: RateReport, check: BoundCheck, fmt: StatsFormat, extra: Optional[Dict] = None) -> str:
    """
    Render a rate report

    Args:
        report: RateReport from encode
        check: verify_bound result for the report
        fmt: human or machine (key=value per line)
        extra: Additional key/value pairs such as file sizes

    Returns:
        Report text
    """
    values = dict(extra or {})
    values.update(report.as_dict())
    values["effective_margin"] = check.effective_margin
    values["flat_margin"] = check.flat_margin
    values["bound_ok"] = int(check.passed)
    if fmt == StatsFormat.MACHINE:
        return "\n".join(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}"
                         for key, value in values.items())

    per_symbol = report.actual_bits / report.n_symbols if report.n_symbols else 0.0
    lines = [f"{key + ':':<18}{value}" for key, value in (extra or {}).items()]
    lines += [
        f"Symbols:          {report.n_symbols}",
        f"Shannon bits:     {report.shannon_bits:.3f}",
        f"Actual bits:      {report.actual_bits} ({per_symbol:.4f} bits/symbol)",
        f"Effective bits:   {report.effective_bits:.3f}",
        f"Epsilon:          {report.epsilon:.3e}",
        f"Bound bits:       {report.bound_bits:.3f}",
        f"Bound margin:     {check.flat_margin:.3f} bits (effective {check.effective_margin:.3f})",
        f"Bound check:      {'PASS' if check.passed else 'FAIL'}",
    ]
    return "\n".join(lines)


def run_compress(cli: CliConfig, write_output: bool = True) -> RateReport:
    """Compress cli.input_path; stats mode skips writing the container"""
    data = cli.input_path.read_bytes()
    container, report = compress_bytes(data, cli)
    extra = {"input_bytes": len(data)}
    if write_output:
        output = cli.output_path or cli.input_path.with_name(cli.input_path.name + COMPRESSED_SUFFIX)
        extra["container_bytes"] = write_container(output, container)
        logger.info(f"Compressed {cli.input_path} -> {output}")
    print(format_report(report, verify_bound(report), cli.stats_format, extra))
    return report


def run_decompress(cli: CliConfig) -> int:
    """Decompress cli.input_path; returns the number of bytes written"""
    container = read_container(cli.input_path)
    data = decompress_container(container, cli)
    output = cli.output_path
    if output is None:
        if cli.input_path.suffix == COMPRESSED_SUFFIX:
            output = cli.input_path.with_suffix("")
        else:
            output = cli.input_path.with_name(cli.input_path.name + ".out")
    output.write_bytes(data)
    logger.info(f"Decompressed {cli.input_path} -> {output} ({len(data)} bytes)")
    return len(data)


def run_selftest_command(cli: CliConfig) -> SelftestSummary:
    summary = run_selftest(trials=cli.trials, seed=cli.seed, inject_fault=cli.inject_fault)
    for suite, count in summary.checks.items():
        print(f"  {suite:<14}{count} checks")
    for failure in summary.failures:
        print(f"  ✗ {failure}")
    status = "PASSED" if summary.passed else "FAILED"
    print(f"Selftest {status}: {summary.total_checks} properties checked, {len(summary.failures)} failures")
    return summary


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    config = Config(args.config)
    level = logging.DEBUG if args.verbose else getattr(logging, config.log_level, logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')

    try:
        cli = parse_config(args, config)
    except UsageError as e:
        logger.error(str(e))
        return ExitCode.USAGE

    try:
        if cli.command == Command.COMPRESS:
            run_compress(cli)
        elif cli.command == Command.STATS:
            run_compress(cli, write_output=False)
        elif cli.command == Command.DECOMPRESS:
            run_decompress(cli)
        elif cli.command == Command.SELFTEST:
            if not run_selftest_command(cli).passed:
                return ExitCode.SELFTEST_FAILED
    except UsageError as e:
        logger.error(str(e))
        return ExitCode.USAGE
    except (ContainerError, CodecError) as e:
        logger.error(f"Corrupt input: {e}")
        return ExitCode.CORRUPT_INPUT
    except ModelError as e:
        logger.error(f"Invalid model: {e}")
        return ExitCode.CORRUPT_INPUT if cli.command == Command.DECOMPRESS else ExitCode.USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return ExitCode.CORRUPT_INPUT if cli.command == Command.DECOMPRESS else ExitCode.USAGE
    return ExitCode.OK
