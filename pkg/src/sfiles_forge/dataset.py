"""Line-oriented corpus operations: validate, canonicalize, augment, split, export.

A corpus is UTF-8 text with one SFILES string per line. Blank lines and
lines starting with ``#`` are skipped; line numbers always refer to the
physical line in the input.
"""

from __future__ import annotations

import logging
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from ._util import mix64, ordered_map
from .augmentation import AugmentationConfig, augment_graph
from .graph import to_dot, to_json
from .parser import ParseError, parse
from .serializer import SerializationError, serialize

logger = logging.getLogger(__name__)

AUGMENTED_MARKER = "# sfiles-forge: augmented"


class SplitConfigError(ValueError):
    pass


class AugmentedInputError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusRecord:
    line_no: int
    raw: str
    canonical: str | None = None
    status: str = "ok"
    detail: str | None = None
    position: int | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def read_records(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    for line_no, line in enumerate(lines, start=1):
        text = line.strip()
        if text and not text.startswith("#"):
            yield line_no, text


def is_augmented(lines: Iterable[str]) -> bool:
    return any(line.startswith(AUGMENTED_MARKER) for line in lines)


def inspect_line(line_no: int, text: str) -> CorpusRecord:
    try:
        canonical = serialize(parse(text))
    except ParseError as exc:
        return CorpusRecord(line_no, text, None, "parse_error", str(exc), exc.position)
    except SerializationError as exc:
        return CorpusRecord(line_no, text, None, "parse_error", str(exc), None)
    return CorpusRecord(line_no, text, canonical)


def _inspect(item):
    return inspect_line(*item)


def _augment_item(item):
    line_no, text, cfg = item
    record = inspect_line(line_no, text)
    if not record.ok:
        return record, []
    line_cfg = AugmentationConfig(cfg.max_augmentations, mix64(cfg.seed, line_no), cfg.include_canonical)
    aug = augment_graph(parse(text), line_cfg)
    block = [text] + aug.lines(cfg.include_canonical)
    return record, list(dict.fromkeys(block))


def augment_corpus(
    lines: Iterable[str],
    cfg: AugmentationConfig,
    errors: list[CorpusRecord] | None = None,
    workers: int = 1,
) -> Iterator[str]:
    """Each valid line followed by up to ``cfg.max_augmentations`` variants.

    Line ``k`` is augmented with seed ``mix64(cfg.seed, k)``, so output does
    not depend on ``workers``. Invalid lines are skipped and appended to
    ``errors``.
    """
    items = [(line_no, text, cfg) for line_no, text in read_records(lines)]
    for record, block in ordered_map(_augment_item, items, workers):
        if not record.ok:
            logger.warning("line %d: %s", record.line_no, record.detail)
            if errors is not None:
                errors.append(record)
            continue
        yield from block


def canonicalize_corpus(
    lines: Iterable[str], errors: list[CorpusRecord] | None = None, workers: int = 1
) -> Iterator[str]:
    for record in ordered_map(_inspect, list(read_records(lines)), workers):
        if record.ok:
            yield record.canonical
        elif errors is not None:
            errors.append(record)


@dataclass
class ValidationReport:
    records: list[CorpusRecord] = field(default_factory=list)

    @property
    def n_ok(self) -> int:
        return sum(r.ok for r in self.records)

    @property
    def n_error(self) -> int:
        return len(self.records) - self.n_ok

    def to_dict(self) -> dict:
        return {
            "summary": {"total": len(self.records), "ok": self.n_ok, "error": self.n_error},
            "records": [asdict(r) for r in self.records],
        }

    def to_text(self) -> str:
        out = []
        for r in self.records:
            if r.ok:
                out.append(f"{r.line_no}\tok")
            else:
                where = "" if r.position is None else f" (offset {r.position})"
                out.append(f"{r.line_no}\terror{where}\t{r.detail}")
        out.append(f"# total={len(self.records)} ok={self.n_ok} error={self.n_error}")
        return "\n".join(out) + "\n"


def validate_corpus(lines: Iterable[str], workers: int = 1) -> ValidationReport:
    return ValidationReport(ordered_map(_inspect, list(read_records(lines)), workers))


# ----------------------------------------------------------------- split

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: Fraction = Fraction(8, 10)
    val_fraction: Fraction = Fraction(1, 10)
    test_fraction: Fraction = Fraction(1, 10)
    seed: int = 0

    def __post_init__(self):
        fracs = tuple(Fraction(f) for f in self.fractions)
        object.__setattr__(self, "train_fraction", fracs[0])
        object.__setattr__(self, "val_fraction", fracs[1])
        object.__setattr__(self, "test_fraction", fracs[2])
        if any(not 0 <= f <= 1 for f in fracs) or fracs[0] == 0:
            raise SplitConfigError("fractions must lie in [0, 1] with a non-empty train share")
        if sum(fracs) != 1:
            raise SplitConfigError(f"fractions sum to {sum(fracs)}, not 1")

    @property
    def fractions(self) -> tuple:
        return (self.train_fraction, self.val_fraction, self.test_fraction)

    @classmethod
    def from_ratios(cls, text: str, seed: int = 0) -> "SplitSpec":
        """Parse ``"0.8,0.1,0.1"`` or percentages such as ``"80,10,10"``."""
        try:
            parts = [Fraction(p.strip()) for p in text.split(",")]
        except ValueError as exc:
            raise SplitConfigError(f"cannot parse ratios {text!r}") from exc
        if len(parts) != 3:
            raise SplitConfigError("expected three comma-separated ratios")
        if sum(parts) == 100:
            parts = [p / 100 for p in parts]
        return cls(*parts, seed=seed)


def split_sizes(n: int, fractions) -> list[int]:
    """Largest-remainder apportionment of ``n`` items."""
    quotas = [Fraction(n) * f for f in fractions]
    sizes = [int(q) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split_corpus(lines: Iterable[str], spec: SplitSpec, force: bool = False) -> tuple[list[str], list[str], list[str]]:
    lines = list(lines)
    if not force and is_augmented(lines):
        raise AugmentedInputError("input is augmented output; split before augmenting (or force)")
    records = [text for _, text in read_records(lines)]
    order = list(range(len(records)))
    random.Random(spec.seed).shuffle(order)
    n_train, n_val, _ = split_sizes(len(records), spec.fractions)
    parts = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
    return tuple([records[i] for i in sorted(part)] for part in parts)


# ---------------------------------------------------------------- export

def export_graph(text: str, fmt: str = "json") -> str:
    g = parse(text)
    if fmt == "json":
        return to_json(g) + "\n"
    if fmt == "dot":
        return to_dot(g)
    raise ValueError(f"unknown export format {fmt!r}")
