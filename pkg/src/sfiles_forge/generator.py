"""Seeded synthetic flowsheet graphs for tests and desk-scale experiments.

Graphs grow from a single ``raw -> prod`` stream by repeated local edits:
splicing inline units into streams, inserting splitters or columns with a
side branch to a product, feeding extra raw materials into mixers, closing
recycles from a splitter back to an upstream mixer, and pairing heat
exchangers with a separate heat-integrated subprocess.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ._util import mix64
from .graph import PROCESS, RECYCLE, FlowsheetGraph, StreamEdge, UnitNode
from .serializer import serialize

SOURCE, SINK, INLINE, EXCHANGER, MIXER, SPLITTER, COLUMN = (
    "source", "sink", "inline", "exchanger", "mixer", "splitter", "column",
)
ROLES = (SOURCE, SINK, INLINE, EXCHANGER, MIXER, SPLITTER, COLUMN)


class GeneratorConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CategoryRule:
    name: str
    role: str
    max_in: int = 1
    max_out: int = 1


DEFAULT_PALETTE = (
    CategoryRule("raw", SOURCE, 0, 1),
    CategoryRule("prod", SINK, 1, 0),
    CategoryRule("hex", EXCHANGER),
    CategoryRule("pp", INLINE),
    CategoryRule("comp", INLINE),
    CategoryRule("v", INLINE),
    CategoryRule("r", INLINE),
    CategoryRule("mix", MIXER, 3, 1),
    CategoryRule("splt", SPLITTER, 1, 3),
    CategoryRule("dist", COLUMN, 1, 2),
)

COLUMN_TAGS = ("tout", "bout")


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    unit_count_range: tuple[int, int] = (4, 16)
    branch_probability: float = 0.35
    recycle_probability: float = 0.25
    heat_integration_probability: float = 0.1
    category_palette: tuple[CategoryRule, ...] = field(default=DEFAULT_PALETTE)

    def __post_init__(self):
        object.__setattr__(self, "unit_count_range", tuple(self.unit_count_range))
        object.__setattr__(self, "category_palette", tuple(self.category_palette))
        lo, hi = self.unit_count_range
        if not 2 <= lo <= hi:
            raise GeneratorConfigError("unit_count_range needs 2 <= min <= max")
        for name in ("branch_probability", "recycle_probability", "heat_integration_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise GeneratorConfigError(f"{name} must lie in [0, 1]")
        roles = {r.role for r in self.category_palette}
        bad = roles - set(ROLES)
        if bad:
            raise GeneratorConfigError(f"unknown category roles {sorted(bad)}")
        names = {r.name for r in self.category_palette}
        if "raw" not in names or "prod" not in names:
            raise GeneratorConfigError("palette needs raw (source) and prod (sink) categories")
        if self.rules(SOURCE)[0].name != "raw" or self.rules(SINK)[0].name != "prod":
            raise GeneratorConfigError("raw must be the source and prod the sink category")
        if not self.rules(INLINE, EXCHANGER, MIXER):
            raise GeneratorConfigError("palette needs at least one inline unit category")

    def rules(self, *roles: str) -> list[CategoryRule]:
        return [r for r in self.category_palette if r.role in roles]

    def with_seed(self, seed: int) -> "GeneratorConfig":
        return GeneratorConfig(seed, self.unit_count_range, self.branch_probability, self.recycle_probability,
                               self.heat_integration_probability, self.category_palette)


class _Draft:
    """Mutable graph under construction."""

    def __init__(self, cfg: GeneratorConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng
        self.rule_of = {r.name: r for r in cfg.category_palette}
        self.cat: list[str] = []
        self.edges: list[list] = []  # [src, dst, tags, kind]
        self.pairs: list[tuple[int, int]] = []
        self.path_raw = self.add("raw")
        self.add_edge(self.path_raw, self.add("prod"))

    def add(self, category: str) -> int:
        self.cat.append(category)
        return len(self.cat) - 1

    def add_edge(self, a, b, tags=(), kind=PROCESS):
        self.edges.append([a, b, tuple(tags), kind])

    def role(self, v):
        return self.rule_of[self.cat[v]].role

    def degree(self, v):
        din = sum(1 for e in self.edges if e[1] == v)
        dout = sum(1 for e in self.edges if e[0] == v)
        return din, dout

    def process_edges(self):
        return [e for e in self.edges if e[3] == PROCESS]

    def pick_rule(self, *roles):
        return self.rng.choice(self.cfg.rules(*roles))

    def splice(self, edge, category) -> int:
        """Insert a new unit into a process edge; the outlet keeps the tags."""
        src, dst, tags, _ = edge
        v = self.add(category)
        edge[1] = v
        self.add_edge(v, dst)
        return v

    def side_chain(self, start, tags, max_inline=2) -> int:
        """start -> [inline units] -> prod; returns the node count added."""
        prev, first_tags, added = start, tags, 0
        for _ in range(self.rng.randint(0, max_inline)):
            v = self.add(self.pick_rule(INLINE, EXCHANGER).name)
            self.add_edge(prev, v, first_tags)
            prev, first_tags, added = v, (), added + 1
        self.add_edge(prev, self.add("prod"), first_tags)
        return added + 1

    # ----------------------------------------------------------- edits
    def extend(self, budget):
        edge = self.rng.choice(self.process_edges())
        self.splice(edge, self.pick_rule(INLINE, EXCHANGER).name)
        return 1

    def branch(self, budget):
        rng = self.rng
        open_splitters = [v for v in range(len(self.cat))
                          if self.role(v) == SPLITTER and self.degree(v)[1] < self.rule_of[self.cat[v]].max_out]
        if open_splitters and rng.random() < 0.3 and budget >= 1:
            return self.side_chain(rng.choice(open_splitters), (), max_inline=min(2, budget - 1))
        if budget < 3:
            return 0
        kinds = self.cfg.rules(SPLITTER, COLUMN)
        if not kinds:
            return 0
        rule = rng.choice(kinds)
        edge = rng.choice(self.process_edges())
        s = self.splice(edge, rule.name)
        if rule.role == COLUMN:
            main_tag, side_tag = rng.sample(COLUMN_TAGS, 2)
            self.edges[-1][2] = (main_tag,)
            return 1 + self.side_chain(s, (side_tag,), max_inline=min(2, budget - 2))
        return 1 + self.side_chain(s, (), max_inline=min(2, budget - 2))

    def feed(self, budget):
        rng = self.rng
        mixers = [v for v in range(len(self.cat))
                  if self.role(v) == MIXER and self.degree(v)[0] < self.rule_of[self.cat[v]].max_in]
        if mixers and rng.random() < 0.4:
            target, cost = rng.choice(mixers), 0
        elif self.cfg.rules(MIXER) and budget >= 3:
            edge = rng.choice(self.process_edges())
            target, cost = self.splice(edge, self.pick_rule(MIXER).name), 1
        else:
            return 0
        room = budget - cost
        if room < 1:
            return 0
        raw = self.add("raw")
        prev = raw
        for _ in range(rng.randint(0, min(1, room - 1))):
            v = self.add(self.pick_rule(INLINE, EXCHANGER).name)
            self.add_edge(prev, v)
            prev, cost = v, cost + 1
        self.add_edge(prev, target)
        return cost + 1

    def ancestors_path(self, v) -> list[list]:
        """Process edges on one upstream path ending at ``v``."""
        path = []
        while True:
            ins = [e for e in self.edges if e[1] == v and e[3] == PROCESS]
            if not ins:
                return path
            e = self.rng.choice(ins)
            path.append(e)
            v = e[0]

    def recycle(self, budget):
        rng = self.rng
        if not self.cfg.rules(MIXER):
            return 0
        cost = 0
        splitters = [v for v in range(len(self.cat))
                     if self.role(v) == SPLITTER and self.degree(v)[1] < self.rule_of[self.cat[v]].max_out]
        if splitters:
            s = rng.choice(splitters)
        else:
            if budget < 2 or not self.cfg.rules(SPLITTER):
                return 0
            candidates = [e for e in self.process_edges() if self.role(e[0]) != SOURCE]
            if not candidates:
                return 0
            s = self.splice(rng.choice(candidates), self.pick_rule(SPLITTER).name)
            cost += 1
        path = self.ancestors_path(s)
        if not path:
            return cost
        mixers = [e[1] for e in path
                  if self.role(e[1]) == MIXER and self.degree(e[1])[0] < self.rule_of[self.cat[e[1]]].max_in]
        if mixers and rng.random() < 0.5:
            m = rng.choice(mixers)
        elif budget - cost >= 1:
            m = self.splice(rng.choice(path), self.pick_rule(MIXER).name)
            cost += 1
        else:
            return cost
        self.add_edge(s, m, kind=RECYCLE)
        return cost

    def heat(self, budget):
        rng = self.rng
        paired = {v for p in self.pairs for v in p}
        free = [v for v in range(len(self.cat)) if self.role(v) == EXCHANGER and v not in paired]
        if len(free) >= 2 and rng.random() < 0.5:
            a, b = rng.sample(free, 2)
            self.pairs.append((min(a, b), max(a, b)))
            return 0
        cost = 0
        if free:
            h = rng.choice(free)
        else:
            exchangers = self.cfg.rules(EXCHANGER)
            if not exchangers or budget < 4:
                return 0
            h = self.splice(rng.choice(self.process_edges()), rng.choice(exchangers).name)
            cost += 1
        if budget - cost < 3:
            return cost
        raw = self.add("raw")
        partner = self.add(self.cat[h])
        self.add_edge(raw, partner)
        self.add_edge(partner, self.add("prod"))
        self.pairs.append((h, partner))
        return cost + 3

    def graph(self) -> FlowsheetGraph:
        group_of = {}
        for k, (a, b) in enumerate(self.pairs):
            group_of[a] = (k, 1)
            group_of[b] = (k, 2)
        counters: dict[str, int] = {}
        group_no: dict[int, int] = {}
        nodes = []
        for v, cat in enumerate(self.cat):
            if v in group_of:
                k, pass_no = group_of[v]
                if k not in group_no:
                    counters[cat] = counters.get(cat, 0) + 1
                    group_no[k] = counters[cat]
                nodes.append(UnitNode(cat, group_no[k], pass_no))
            else:
                counters[cat] = counters.get(cat, 0) + 1
                nodes.append(UnitNode(cat, counters[cat]))
        edges = [StreamEdge(nodes[a].id, nodes[b].id, tags, kind) for a, b, tags, kind in self.edges]
        return FlowsheetGraph(tuple(nodes), tuple(edges))


def generate(cfg: GeneratorConfig) -> FlowsheetGraph:
    """One random flowsheet graph, fully determined by ``cfg``."""
    rng = random.Random(cfg.seed)
    lo, hi = cfg.unit_count_range
    target = rng.randint(lo, hi)
    draft = _Draft(cfg, rng)
    ops = [draft.extend, draft.branch, draft.feed, draft.recycle, draft.heat]
    weights = [
        1.0,
        2.0 * cfg.branch_probability,
        cfg.branch_probability,
        cfg.recycle_probability,
        cfg.heat_integration_probability,
    ]
    stalls = 0
    while len(draft.cat) < target:
        budget = hi - len(draft.cat)
        op = rng.choices(ops, weights)[0]
        before = (len(draft.cat), len(draft.edges), len(draft.pairs))
        op(budget)
        if (len(draft.cat), len(draft.edges), len(draft.pairs)) == before:
            stalls += 1
            if stalls > 50:
                draft.extend(budget)
        else:
            stalls = 0
    return draft.graph()


def generate_corpus(cfg: GeneratorConfig, count: int, unique: bool = False) -> list[str]:
    """``count`` canonical SFILES strings; record ``i`` uses seed mix(cfg.seed, i)."""
    if count < 1:
        raise GeneratorConfigError("count must be at least 1")
    out: list[str] = []
    seen: set[str] = set()
    i = 0
    while len(out) < count:
        if i > 50 * count + 1000:
            raise GeneratorConfigError(f"could not draw {count} distinct flowsheets with this config")
        text = serialize(generate(cfg.with_seed(mix64(cfg.seed, i))))
        i += 1
        if unique:
            if text in seen:
                continue
            seen.add(text)
        out.append(text)
    return out
