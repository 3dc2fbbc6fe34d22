"""Token-level language-model evaluation of SFILES corpora.

A smoothed n-gram model stands in for the transformer: it is cheap, fully
deterministic and still shows whether augmentation narrows the gap between
training and held-out perplexity.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .augmentation import AugmentationConfig
from .dataset import augment_corpus
from .parser import parse, tokenize
from .serializer import serialize

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class DomainError(ValueError):
    pass


class ExperimentDesignError(ValueError):
    pass


class EmptyCorpusError(ValueError):
    pass


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]

    def __post_init__(self):
        t = self.tokens
        if len(t) < 2 or t[0] != BOS or t[-1] != EOS or BOS in t[1:] or EOS in t[:-1]:
            raise ValueError("a token sequence is framed by exactly one BOS and one EOS")

    @classmethod
    def from_sfiles(cls, text: str) -> "TokenSequence":
        return cls((BOS, *(tok.text for tok in tokenize(text)), EOS))

    def __len__(self) -> int:
        return len(self.tokens)


def cross_entropy(probabilities: Sequence[float]) -> float:
    """Mean negative natural log-probability."""
    if len(probabilities) == 0:
        raise DomainError("cross-entropy of an empty sequence")
    total = 0.0
    for p in probabilities:
        if not p > 0:
            raise DomainError(f"probability {p} outside (0, 1]")
        total -= math.log(p)
    return total / len(probabilities)


def perplexity(probabilities: Sequence[float]) -> float:
    return math.exp(cross_entropy(probabilities))


@dataclass
class NgramModel:
    order: int
    alpha: float
    vocab: tuple[str, ...]
    counts: dict
    totals: dict

    def context(self, history: Sequence[str]) -> tuple[str, ...]:
        return tuple(history[max(0, len(history) - self.order + 1):]) if self.order > 1 else ()

    def prob(self, token: str, history: Sequence[str]) -> float:
        if token not in self._vocab_set:
            token = UNK
        ctx = self.context(history)
        c = self.counts.get(ctx, {}).get(token, 0)
        total = self.totals.get(ctx, 0)
        return (c + self.alpha) / (total + self.alpha * len(self.vocab))

    def distribution(self, history: Sequence[str]) -> dict[str, float]:
        return {tok: self.prob(tok, history) for tok in self.vocab}

    def token_probabilities(self, seq: TokenSequence) -> list[float]:
        t = seq.tokens
        return [self.prob(t[i], t[:i]) for i in range(1, len(t))]

    @property
    def _vocab_set(self) -> frozenset:
        cached = self.__dict__.get("_vs")
        if cached is None:
            cached = self.__dict__["_vs"] = frozenset(self.vocab)
        return cached


def _as_sequences(corpus: Iterable) -> list[TokenSequence]:
    return [s if isinstance(s, TokenSequence) else TokenSequence.from_sfiles(s) for s in corpus]


def train_ngram(corpus: Iterable, order: int = 3, alpha: float = 0.1) -> NgramModel:
    """Additively smoothed n-gram model.

    The predicted vocabulary is every training token plus EOS and UNK; BOS is
    only ever context. Contexts near the start of a sequence are truncated
    rather than padded.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    seqs = _as_sequences(corpus)
    if not seqs:
        raise EmptyCorpusError("cannot train on an empty corpus")
    counts: dict = defaultdict(Counter)
    vocab = {EOS, UNK}
    for seq in seqs:
        t = seq.tokens
        vocab.update(t[1:])
        for i in range(1, len(t)):
            ctx = tuple(t[max(0, i - order + 1):i]) if order > 1 else ()
            counts[ctx][t[i]] += 1
    counts = {ctx: dict(c) for ctx, c in counts.items()}
    totals = {ctx: sum(c.values()) for ctx, c in counts.items()}
    return NgramModel(order, alpha, tuple(sorted(vocab)), counts, totals)


def eval_corpus(model: NgramModel, corpus: Iterable) -> float:
    """Corpus perplexity over all predicted tokens (EOS included)."""
    probs: list[float] = []
    for seq in _as_sequences(corpus):
        probs.extend(model.token_probabilities(seq))
    return perplexity(probs)


# ------------------------------------------------------------- experiment

@dataclass
class ExperimentRow:
    model: str
    pretrain_augmented: bool | None
    finetune_augmented: bool
    pretrain_test: float | None
    train: float
    val: float
    test: float
    vocab_size: int
    train_lines: int

    @property
    def gap(self) -> float:
        return self.test - self.train


def _canonical_set(lines: Iterable[str]) -> set[str]:
    return {serialize(parse(s)) for s in lines}


def _check_disjoint(named: dict[str, list[str]]) -> None:
    forms = {name: _canonical_set(lines) for name, lines in named.items() if lines}
    names = list(forms)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            shared = forms[a] & forms[b]
            if shared:
                raise ExperimentDesignError(
                    f"{len(shared)} flowsheet(s) appear in both {a} and {b}, e.g. {min(shared)}"
                )


def run_experiment(
    train: Sequence[str],
    val: Sequence[str],
    test: Sequence[str],
    aug_cfg: AugmentationConfig | None = None,
    order: int = 3,
    alpha: float = 0.1,
    pretrain: Sequence[str] | None = None,
    pretrain_test: Sequence[str] | None = None,
) -> dict:
    """Train/val/test perplexity with and without training-set augmentation.

    Only the training side is augmented. With ``pretrain`` given, three arms
    are run (neither, fine-tuning only, both augmented); pretraining is
    modelled by pooling the pretraining counts with the fine-tuning counts.
    Raises ExperimentDesignError if a flowsheet occurs in two splits.
    """
    train, val, test = list(train), list(val), list(test)
    _check_disjoint({"train": train, "val": val, "test": test})
    if pretrain is not None:
        pretrain = list(pretrain)
        pretrain_test = list(pretrain_test or [])
        _check_disjoint({"pretrain": pretrain, "pretrain_test": pretrain_test})

    def maybe_augment(lines: list[str], flag: bool) -> list[str]:
        return list(augment_corpus(lines, aug_cfg)) if flag and aug_cfg is not None else lines

    arms = [(None, False), (None, True)] if pretrain is None else [(False, False), (False, True), (True, True)]
    rows = []
    for pre_aug, ft_aug in arms:
        ft_train = maybe_augment(train, ft_aug)
        pooled = ft_train + (maybe_augment(pretrain, pre_aug) if pretrain is not None else [])
        model = train_ngram(pooled, order, alpha)
        name = ("augmented" if ft_aug else "non_augmented") if pre_aug is None else f"pre{'_aug' if pre_aug else ''}_ft{'_aug' if ft_aug else ''}"
        rows.append(ExperimentRow(
            model=name,
            pretrain_augmented=pre_aug,
            finetune_augmented=ft_aug,
            pretrain_test=eval_corpus(model, pretrain_test) if pretrain_test else None,
            train=eval_corpus(model, ft_train),
            val=eval_corpus(model, val) if val else math.nan,
            test=eval_corpus(model, test) if test else math.nan,
            vocab_size=len(model.vocab),
            train_lines=len(ft_train),
        ))
    return {
        "config": {
            "order": order,
            "alpha": alpha,
            "augmentation": asdict(aug_cfg) if aug_cfg is not None else None,
            "sizes": {"train": len(train), "val": len(val), "test": len(test),
                      "pretrain": len(pretrain or []), "pretrain_test": len(pretrain_test or [])},
        },
        "rows": [dict(asdict(r), gap=r.gap) for r in rows],
    }


def format_report(report: dict) -> str:
    head = f"{'model':<16}{'pre_aug':>8}{'ft_aug':>8}{'pre_test':>10}{'train':>9}{'val':>9}{'test':>9}{'gap':>9}"
    out = [head]
    for r in report["rows"]:
        pre = "-" if r["pretrain_augmented"] is None else str(r["pretrain_augmented"])
        pt = "-" if r["pretrain_test"] is None else f"{r['pretrain_test']:.3f}"
        out.append(f"{r['model']:<16}{pre:>8}{str(r['finetune_augmented']):>8}{pt:>10}"
                   f"{r['train']:>9.3f}{r['val']:>9.3f}{r['test']:>9.3f}{r['gap']:>9.3f}")
    return "\n".join(out) + "\n"
