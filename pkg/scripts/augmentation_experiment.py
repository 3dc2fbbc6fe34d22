"""Desk-scale augmentation experiment: generate, split, augment, evaluate.

Writes a JSON report (default: results/experiment.json) and prints a table.
"""

import json
from fractions import Fraction
from pathlib import Path

import click

from sfiles_forge.augmentation import AugmentationConfig
from sfiles_forge.dataset import SplitSpec, split_corpus
from sfiles_forge.evaluation import format_report, run_experiment
from sfiles_forge.generator import GeneratorConfig, generate_corpus


@click.command()
@click.option("--count", default=2000, show_default=True)
@click.option("--pretrain-count", default=0, show_default=True, help="Extra generated flowsheets pooled as pretraining data.")
@click.option("--seed", default=0, show_default=True)
@click.option("--max-aug", default=5, show_default=True)
@click.option("--order", "orders", multiple=True, type=int, default=(2, 3, 4), show_default=True)
@click.option("--alpha", default=0.1, show_default=True)
@click.option("--out", default="results/experiment.json", show_default=True)
def main(count, pretrain_count, seed, max_aug, orders, alpha, out):
    lines = generate_corpus(GeneratorConfig(seed=seed), count + pretrain_count, unique=True)
    ft, pre = lines[:count], lines[count:]
    train, val, test = split_corpus(ft, SplitSpec(seed=seed))
    pre_train = pre_test = None
    if pre:
        pre_train, _, pre_test = split_corpus(pre, SplitSpec(Fraction(9, 10), 0, Fraction(1, 10), seed=seed))
    reports = {}
    for order in orders:
        rep = run_experiment(train, val, test, AugmentationConfig(max_aug, seed), order, alpha,
                             pretrain=pre_train, pretrain_test=pre_test)
        reports[str(order)] = rep
        click.echo(f"order {order}")
        click.echo(format_report(rep))
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
