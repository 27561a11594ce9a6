"""``sensorstream`` command line: validate, normalize, export, stats, synth.

Every option can also come from the environment
(``SENSORSTREAM_<COMMAND>_<OPTION>``, e.g. ``SENSORSTREAM_VALIDATE_MIN_PAIRS``)
or from an INI file given with ``--config`` / ``SENSORSTREAM_CONFIG`` that
has one section per command. Flags beat the environment, which beats the
file.

Exit status: 0 clean, 1 warnings under ``--strict-warnings``, 2 validation
errors (and usage errors), 3 fatal input problems such as a missing file or
malformed XML.
"""

from __future__ import annotations

import configparser
import json
import sys
from contextlib import contextmanager
from dataclasses import replace
from datetime import timedelta
from pathlib import Path
from typing import IO, Iterator

import click

from . import export as export_mod
from . import normalize as norm
from .model import SensorLog
from .synth import SynthConfigError, generate, load_config, parse_config
from .validate import RelationCheckConfig, validate_all
from .xes_io import Dialect, ReadOptions, WriteOptions, XesReader, XesReadError, XesWriteError, write_log_to

EXIT_FATAL = 3
DIALECTS = ("auto", "attribute_form", "element_form")


class Fatal(click.ClickException):
    exit_code = EXIT_FATAL


def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise Fatal(f"cannot read config file {path}: {exc}") from None
    # keys are written like the flags (min-pairs or min_pairs)
    return {
        section: {key.replace("-", "_"): value for key, value in parser[section].items()}
        for section in parser.sections()
    }


def _read(path: str, strict: bool = False, dialect: str = "auto") -> tuple[SensorLog, XesReader]:
    reader = XesReader(ReadOptions(strict=strict, dialect=Dialect(dialect)))
    try:
        if path == "-":
            log = reader.read(sys.stdin.buffer)
        else:
            if not Path(path).is_file():
                raise Fatal(f"no such file: {path}")
            log = reader.read(path)
    except XesReadError as exc:
        raise Fatal(f"{path}: {exc}") from None
    except OSError as exc:
        raise Fatal(f"{path}: {exc}") from None
    return log, reader


@contextmanager
def _binary_out(path: str) -> Iterator[IO[bytes]]:
    if path == "-":
        yield sys.stdout.buffer
        sys.stdout.buffer.flush()
        return
    try:
        handle = open(path, "wb")
    except OSError as exc:
        raise Fatal(f"cannot write {path}: {exc}") from None
    with handle:
        yield handle


def _write(log: SensorLog, path: str, dialect: Dialect) -> None:
    try:
        with _binary_out(path) as out:
            write_log_to(log, out, WriteOptions(dialect=dialect))
    except XesWriteError as exc:
        raise Fatal(str(exc)) from None


def _output_dialect(requested: str, reader: XesReader | None) -> Dialect:
    if requested != "auto":
        return Dialect(requested)
    detected = reader.dialect if reader is not None else None
    return detected if detected in (Dialect.ATTRIBUTE_FORM, Dialect.ELEMENT_FORM) else Dialect.ATTRIBUTE_FORM


def _diagnostics(reader: XesReader) -> None:
    for finding in reader.findings:
        click.echo(str(finding), err=True)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--config",
    type=click.Path(dir_okay=False),
    default=None,
    help="INI file with one section per command supplying option defaults.",
)
@click.version_option(package_name="artifact", prog_name="sensorstream")
@click.pass_context
def cli(ctx: click.Context, config: str | None) -> None:
    """Read, check, rewrite, export and synthesize SensorStream XES logs."""
    if config:
        ctx.default_map = _load_config_file(config)


@cli.command()
@click.argument("input_path", metavar="INPUT")
@click.option("--strict", is_flag=True, help="Unknown stream keys and malformed points are fatal.")
@click.option("--strict-warnings", is_flag=True, help="Exit 1 when there are warnings but no errors.")
@click.option("--window", type=float, default=1.0, show_default=True, help="Relation alignment window in seconds.")
@click.option("--min-pairs", type=int, default=3, show_default=True, help="Pairs needed for a conclusive relation check.")
@click.option("--threshold", type=float, default=0.8, show_default=True, help="Minimum relation agreement.")
@click.option("--format", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes for per-trace checks.")
def validate(input_path, strict, strict_warnings, window, min_pairs, threshold, format, jobs):
    """Validate INPUT ('-' for stdin) and print the findings."""
    log, reader = _read(input_path, strict=strict)
    try:
        config = RelationCheckConfig(timedelta(seconds=window), min_pairs, threshold)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    report = validate_all(log, config, jobs=jobs, read_findings=reader.findings)
    if format == "json":
        click.echo(
            json.dumps(
                {
                    "findings": report.to_records(),
                    "counts_by_severity": report.counts_by_severity,
                    "counts_by_rule": report.counts_by_rule,
                },
                indent=2,
            )
        )
    else:
        click.echo(report.to_text(), nl=False)
    sys.exit(report.exit_status(strict_warnings))


@cli.command()
@click.argument("input_path", metavar="INPUT")
@click.argument("output_path", metavar="OUTPUT")
@click.option("--expand", is_flag=True, help="Replace multipoints by full points.")
@click.option(
    "--compact",
    type=click.Choice(["id_source", "timestamp", "auto"]),
    is_flag=False,
    flag_value="auto",
    default=None,
    help="Fold adjacent points into multipoints (bare flag means auto).",
)
@click.option("--resolve-traits", is_flag=True, help="Inline trait annotations into points.")
@click.option("--extract-traits", is_flag=True, help="Hoist shared annotation bundles into traits.")
@click.option("--min-support", type=int, default=2, show_default=True, help="Points needed to extract a trait.")
@click.option("--dialect", type=click.Choice(DIALECTS), default="auto", show_default=True,
              help="Output dialect; auto keeps the input's.")
def normalize(input_path, output_path, expand, compact, resolve_traits, extract_traits, min_support, dialect):
    """Rewrite INPUT into OUTPUT ('-' for stdin/stdout)."""
    if expand and compact:
        raise click.UsageError("--expand and --compact are mutually exclusive")
    if resolve_traits and extract_traits:
        raise click.UsageError("--resolve-traits and --extract-traits are mutually exclusive")
    log, reader = _read(input_path)
    _diagnostics(reader)
    out_dialect = _output_dialect(dialect, reader)
    try:
        if resolve_traits:
            log = norm.resolve_traits(log)
        if extract_traits:
            log = norm.extract_traits(log, min_support)
        if expand:
            log = norm.expand_multipoints(log)
        if compact:
            log = norm.compact_multipoints(log, compact, WriteOptions(dialect=out_dialect))
    except (norm.NormalizationError, ValueError) as exc:
        raise Fatal(str(exc)) from None
    _write(log, output_path, out_dialect)


@cli.command()
@click.argument("input_path", metavar="INPUT")
@click.argument("output_path", metavar="OUTPUT", default="-")
@click.option("--format", type=click.Choice(export_mod.FORMATS), default=None,
              help="Output format; defaults to jsonl for *.jsonl outputs, otherwise csv.")
def export(input_path, output_path, format):
    """Export one row per sensor reading of INPUT to OUTPUT."""
    if format is None:
        format = "jsonl" if output_path.endswith(".jsonl") else "csv"
    log, reader = _read(input_path)
    _diagnostics(reader)
    data = export_mod.export_tabular(log, format)
    with _binary_out(output_path) as out:
        out.write(data)


@cli.command()
@click.argument("input_path", metavar="INPUT")
@click.option("--format", type=click.Choice(["text", "json"]), default="text", show_default=True)
def stats(input_path, format):
    """Print descriptive statistics of INPUT."""
    log, reader = _read(input_path)
    _diagnostics(reader)
    report = export_mod.stats(log)
    if format == "json":
        click.echo(json.dumps(report.as_dict(), indent=2))
    else:
        click.echo(report.to_text(), nl=False)


@cli.command()
@click.argument("config_file", metavar="CONFIG")
@click.argument("output_path", metavar="OUTPUT", default="-")
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option("--traces", type=int, default=None, help="Override the configured trace count.")
@click.option("--dialect", type=click.Choice(DIALECTS[1:]), default="attribute_form", show_default=True)
def synth(config_file, output_path, seed, traces, dialect):
    """Generate a log from the INI synth CONFIG ('-' for stdin)."""
    try:
        if config_file == "-":
            config = parse_config(sys.stdin.read())
        else:
            if not Path(config_file).is_file():
                raise Fatal(f"no such file: {config_file}")
            config = load_config(config_file)
        overrides = {k: v for k, v in (("seed", seed), ("traces", traces)) if v is not None}
        if overrides:
            config = replace(config, **overrides)
        result = generate(config)
    except SynthConfigError as exc:
        raise Fatal(f"{config_file}: {exc}") from None
    for defect in result.defects:
        click.echo(f"injected {defect.rule_id} at {defect.path}", err=True)
    _write(result.log, output_path, Dialect(dialect))


def main() -> None:
    cli(auto_envvar_prefix="SENSORSTREAM")


if __name__ == "__main__":
    main()
