"""``sfiles-forge`` command line.

Exit codes: 0 success, 1 some input lines failed, 2 fatal error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from ._util import worker_count
from .augmentation import ENUMERATION_LIMIT, AugmentationConfig, VariantLimitError, count_variants, enumerate_variants
from .dataset import (
    AUGMENTED_MARKER,
    AugmentedInputError,
    SplitConfigError,
    SplitSpec,
    augment_corpus,
    canonicalize_corpus,
    export_graph,
    read_records,
    split_corpus,
    validate_corpus,
)
from .evaluation import ExperimentDesignError, format_report, run_experiment
from .generator import GeneratorConfig, GeneratorConfigError, generate_corpus
from .graph import GraphSizeError
from .parser import ParseError, parse, tokenize
from .serializer import SerializationError

EXIT_PARTIAL = 1
EXIT_FATAL = 2

log = logging.getLogger("sfiles_forge")


class Fatal(click.ClickException):
    exit_code = EXIT_FATAL


def _read_lines(path: str) -> list[str]:
    try:
        if path == "-":
            return sys.stdin.read().splitlines()
        return Path(path).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise Fatal(f"cannot read {path}: {exc}") from exc


def _write_lines(path: str | None, lines, header: str | None = None) -> None:
    body = "".join(f"{line}\n" for line in ([header] if header else []) + list(lines))
    try:
        if path is None or path == "-":
            click.echo(body, nl=False)
        else:
            Path(path).write_text(body, encoding="utf-8")
    except OSError as exc:
        raise Fatal(f"cannot write {path}: {exc}") from exc


def _report_errors(errors) -> int:
    for rec in errors:
        click.echo(f"line {rec.line_no}: {rec.detail}", err=True)
    return EXIT_PARTIAL if errors else 0


def _parse_or_fail(text: str):
    try:
        return parse(text)
    except ParseError as exc:
        raise Fatal(str(exc)) from exc


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Parse, canonicalize and augment SFILES flowsheet strings."""
    logging.basicConfig(level=logging.INFO if verbose else logging.ERROR, format="%(levelname)s %(message)s")


@main.command()
@click.option("--input", "input_path", required=True, help="Corpus file, one SFILES per line ('-' for stdin).")
@click.option("--output", "output_path", default="-", show_default=True)
@click.option("--max-aug", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.IntRange(0, 2**64 - 1))
@click.option("--include-canonical", is_flag=True, help="Also emit the canonical form of each line.")
@click.option("--no-header", is_flag=True, help="Omit the augmented-output marker line.")
def augment(input_path, output_path, max_aug, seed, include_canonical, no_header):
    """Emit each line followed by up to MAX_AUG distinct variants."""
    lines = _read_lines(input_path)
    cfg = AugmentationConfig(max_aug, seed, include_canonical)
    errors: list = []
    out = list(augment_corpus(lines, cfg, errors, workers=worker_count()))
    _write_lines(output_path, out, None if no_header else AUGMENTED_MARKER)
    sys.exit(_report_errors(errors))


@main.command()
@click.option("--input", "input_path", required=True)
@click.option("--output", "output_path", default="-", show_default=True)
def canonicalize(input_path, output_path):
    """Rewrite every line in canonical form."""
    errors: list = []
    out = list(canonicalize_corpus(_read_lines(input_path), errors, workers=worker_count()))
    _write_lines(output_path, out)
    sys.exit(_report_errors(errors))


@main.command()
@click.option("--input", "input_path", required=True)
@click.option("--report", "report_fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--dump-tokens", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write the token stream of each parseable line as JSON lines.")
def validate(input_path, report_fmt, dump_tokens):
    """Check that every line parses; non-zero exit if any does not."""
    lines = _read_lines(input_path)
    report = validate_corpus(lines, workers=worker_count())
    if report_fmt == "json":
        click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(report.to_text(), nl=False)
    if dump_tokens:
        dumped = []
        for line_no, text in read_records(lines):
            try:
                toks = [t.to_dict() for t in tokenize(text)]
            except ParseError:
                continue
            dumped.append(json.dumps({"line_no": line_no, "tokens": toks}, sort_keys=True))
        _write_lines(dump_tokens, dumped)
    sys.exit(EXIT_PARTIAL if report.n_error else 0)


@main.command()
@click.option("--input", "input_path", required=True)
@click.option("--train", "train_path", required=True)
@click.option("--val", "val_path", required=True)
@click.option("--test", "test_path", required=True)
@click.option("--ratios", default="80,10,10", show_default=True, help="Train,val,test shares (fractions or percent).")
@click.option("--seed", default=0, show_default=True, type=click.IntRange(0, 2**64 - 1))
@click.option("--force", is_flag=True, help="Split even if the input is augmented output.")
def split(input_path, train_path, val_path, test_path, ratios, seed, force):
    """Seeded train/val/test partition. Run this before augmenting."""
    try:
        spec = SplitSpec.from_ratios(ratios, seed)
        parts = split_corpus(_read_lines(input_path), spec, force=force)
    except (SplitConfigError, AugmentedInputError) as exc:
        raise Fatal(str(exc)) from exc
    for path, part in zip((train_path, val_path, test_path), parts):
        _write_lines(path, part)
    click.echo(f"train={len(parts[0])} val={len(parts[1])} test={len(parts[2])}", err=True)


@main.command("enumerate")
@click.option("--sfiles", required=True)
@click.option("--count-only", is_flag=True)
@click.option("--limit", default=ENUMERATION_LIMIT, show_default=True, type=click.IntRange(min=1))
def enumerate_cmd(sfiles, count_only, limit):
    """List every SFILES string of one flowsheet, canonical first."""
    g = _parse_or_fail(sfiles)
    try:
        if count_only:
            click.echo(count_variants(g))
            return
        for s in enumerate_variants(g, limit):
            click.echo(s)
    except (VariantLimitError, SerializationError) as exc:
        raise Fatal(str(exc)) from exc


@main.command()
@click.option("--sfiles", required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "dot"]), default="json", show_default=True)
def export(sfiles, fmt):
    """Print a flowsheet as node-link JSON or DOT."""
    _parse_or_fail(sfiles)
    click.echo(export_graph(sfiles, fmt), nl=False)


@main.command()
@click.option("--count", required=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.IntRange(0, 2**64 - 1))
@click.option("--branch-prob", default=0.35, show_default=True, type=float)
@click.option("--recycle-prob", default=0.25, show_default=True, type=float)
@click.option("--heat-prob", default=0.1, show_default=True, type=float)
@click.option("--min-units", default=4, show_default=True, type=int)
@click.option("--max-units", default=16, show_default=True, type=int)
@click.option("--unique", is_flag=True, help="Reject flowsheets whose canonical form was already emitted.")
@click.option("--output", "output_path", default="-", show_default=True)
def generate(count, seed, branch_prob, recycle_prob, heat_prob, min_units, max_units, unique, output_path):
    """Write COUNT random flowsheets in canonical form."""
    try:
        cfg = GeneratorConfig(seed=seed, unit_count_range=(min_units, max_units), branch_probability=branch_prob,
                              recycle_probability=recycle_prob, heat_integration_probability=heat_prob)
        lines = generate_corpus(cfg, count, unique=unique)
    except (GeneratorConfigError, GraphSizeError) as exc:
        raise Fatal(str(exc)) from exc
    _write_lines(output_path, lines)


@main.command("eval-ngram")
@click.option("--train", "train_path", required=True)
@click.option("--val", "val_path", required=True)
@click.option("--test", "test_path", required=True)
@click.option("--augment/--no-augment", "do_augment", default=False, show_default=True)
@click.option("--max-aug", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.IntRange(0, 2**64 - 1))
@click.option("--order", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--alpha", default=0.1, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--pretrain", "pretrain_path", default=None, help="Optional pretraining corpus pooled into the counts.")
@click.option("--pretrain-test", "pretrain_test_path", default=None)
@click.option("--report", "report_fmt", type=click.Choice(["text", "json"]), default="json", show_default=True)
def eval_ngram(train_path, val_path, test_path, do_augment, max_aug, seed, order, alpha,
               pretrain_path, pretrain_test_path, report_fmt):
    """Perplexity of an n-gram model with and without training-set augmentation."""
    def load(path):
        return [text for _, text in read_records(_read_lines(path))] if path else None

    cfg = AugmentationConfig(max_aug, seed) if do_augment else None
    try:
        report = run_experiment(load(train_path), load(val_path), load(test_path), cfg, order, alpha,
                                pretrain=load(pretrain_path), pretrain_test=load(pretrain_test_path))
    except (ExperimentDesignError, ParseError, SerializationError) as exc:
        raise Fatal(str(exc)) from exc
    if report_fmt == "json":
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        click.echo(format_report(report), nl=False)


if __name__ == "__main__":
    main()
