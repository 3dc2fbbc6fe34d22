"""Canonical and seeded-random serialization of flowsheet graphs.

Serialization is a traversal that starts at the lowest-ranked source of each
subprocess and walks downstream. At a unit with several outlets the visit
order is a *decision*; every other choice (subprocess order, incoming-branch
order, where recycle numerals go) is fixed by the canonical node ranking.

Canonical ranks come from colour refinement followed by individualization
over any remaining ties, keeping the branch that yields the smallest string.
The final rank of a node is its position in the canonical string, so ranks
are canonical up to automorphism.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache

from .graph import PROCESS, FlowsheetGraph
from .parser import parse

MAX_SEED = 2**64 - 1
MAX_RECYCLE_NUMBER = 99

CANONICAL = "canonical"
RANDOMIZED = "randomized"


class SerializationError(ValueError):
    pass


@dataclass(frozen=True)
class SerializationPolicy:
    mode: str = CANONICAL
    seed: int | None = None

    def __post_init__(self):
        if self.mode == CANONICAL:
            if self.seed is not None:
                raise ValueError("canonical policy takes no seed")
        elif self.mode == RANDOMIZED:
            if self.seed is None or not 0 <= self.seed <= MAX_SEED:
                raise ValueError("randomized policy needs a seed in [0, 2**64)")
        else:
            raise ValueError(f"unknown serialization mode {self.mode!r}")

    @classmethod
    def canonical(cls) -> "SerializationPolicy":
        return cls(CANONICAL)

    @classmethod
    def randomized(cls, seed: int) -> "SerializationPolicy":
        return cls(RANDOMIZED, int(seed))


# ----------------------------------------------------------------- index

class _Index:
    """Integer-indexed adjacency view of a FlowsheetGraph."""

    def __init__(self, g: FlowsheetGraph):
        self.graph = g
        self.ids = [n.id for n in g.nodes]
        self.n = len(self.ids)
        where = {i: k for k, i in enumerate(self.ids)}
        self.cat = [n.category for n in g.nodes]
        self.src, self.dst, self.tags, self.kind = [], [], [], []
        self.pout = [[] for _ in range(self.n)]
        self.pin = [[] for _ in range(self.n)]
        self.rout = [[] for _ in range(self.n)]
        self.rin = [[] for _ in range(self.n)]
        for k, e in enumerate(g.edges):
            a, b = where[e.src], where[e.dst]
            self.src.append(a)
            self.dst.append(b)
            self.tags.append(tuple(sorted(e.tags)))
            self.kind.append(e.kind)
            if e.kind == PROCESS:
                self.pout[a].append(k)
                self.pin[b].append(k)
            else:
                self.rout[a].append(k)
                self.rin[b].append(k)
        groups = defaultdict(list)
        for k, node in enumerate(g.nodes):
            if node.pass_no is not None:
                groups[node.unit_key].append(k)
        self.partners = [[] for _ in range(self.n)]
        self.group_size = [0] * self.n
        for members in groups.values():
            for k in members:
                self.partners[k] = [m for m in members if m != k]
                self.group_size[k] = len(members)
        self.components = self._components()

    def _components(self) -> list[list[int]]:
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        n_process = 0
        for k in range(len(self.src)):
            if self.kind[k] != PROCESS:
                continue
            n_process += 1
            a, b = find(self.src[k]), find(self.dst[k])
            if a == b:
                raise SerializationError(
                    f"process streams around {self.ids[self.src[k]]} form a loop; "
                    "only recycle streams may close cycles or rejoin branches"
                )
            parent[a] = b
        comps = defaultdict(list)
        for v in range(self.n):
            comps[find(v)].append(v)
        return list(comps.values())

    def descendants(self) -> list[int]:
        memo: dict[int, frozenset] = {}
        order = self._topological()
        for v in reversed(order):
            acc = set()
            for e in self.pout[v]:
                w = self.dst[e]
                acc.add(w)
                acc |= memo[w]
            memo[v] = frozenset(acc)
        return [len(memo[v]) for v in range(self.n)]

    def _topological(self) -> list[int]:
        indeg = [len(self.pin[v]) for v in range(self.n)]
        stack = [v for v in range(self.n) if indeg[v] == 0]
        out = []
        while stack:
            v = stack.pop()
            out.append(v)
            for e in self.pout[v]:
                w = self.dst[e]
                indeg[w] -= 1
                if indeg[w] == 0:
                    stack.append(w)
        return out


# ------------------------------------------------------------ refinement

def _compress(keys: list) -> tuple[list[int], int]:
    order = sorted(set(keys))
    lookup = {k: i for i, k in enumerate(order)}
    return [lookup[k] for k in keys], len(order)


def _initial_colours(idx: _Index) -> tuple[list[int], int]:
    desc = idx.descendants()
    keys = []
    for v in range(idx.n):
        keys.append((
            idx.cat[v],
            -desc[v],
            idx.group_size[v],
            len(idx.pin[v]),
            len(idx.pout[v]),
            len(idx.rin[v]),
            len(idx.rout[v]),
            tuple(sorted(idx.tags[e] for e in idx.pin[v] + idx.rin[v])),
            tuple(sorted(idx.tags[e] for e in idx.pout[v] + idx.rout[v])),
        ))
    return _compress(keys)


def _refine(idx: _Index, colours: list[int], count: int) -> tuple[list[int], int]:
    out_all = [idx.pout[v] + idx.rout[v] for v in range(idx.n)]
    in_all = [idx.pin[v] + idx.rin[v] for v in range(idx.n)]
    while True:
        keys = []
        for v in range(idx.n):
            keys.append((
                colours[v],
                tuple(sorted((idx.kind[e], idx.tags[e], colours[idx.dst[e]]) for e in out_all[v])),
                tuple(sorted((idx.kind[e], idx.tags[e], colours[idx.src[e]]) for e in in_all[v])),
                tuple(sorted(colours[p] for p in idx.partners[v])),
            ))
        new, new_count = _compress(keys)
        if new_count == count:
            return new, new_count
        colours, count = new, new_count


def _neighbourhood(idx: _Index, v: int) -> tuple:
    return (
        tuple(sorted((idx.kind[e], idx.tags[e], idx.dst[e]) for e in idx.pout[v] + idx.rout[v])),
        tuple(sorted((idx.kind[e], idx.tags[e], idx.src[e]) for e in idx.pin[v] + idx.rin[v])),
        tuple(sorted(idx.partners[v])),
    )


def _twins(idx: _Index, x: int, y: int) -> bool:
    """Swapping x and y is an automorphism (same colour assumed)."""
    nx_, ny = _neighbourhood(idx, x), _neighbourhood(idx, y)
    touching = {w for part in nx_[:2] for (_, _, w) in part} | set(nx_[2])
    return y not in touching and nx_ == ny


# ---------------------------------------------------------------- layout

FORWARD, TRUNK = "forward", "trunk"


class _CanonicalPlan:
    """Visit outlets in ascending rank; the last one stays unbracketed."""

    def __init__(self, rank):
        self.rank = rank

    def __call__(self, idx, v, edges, role):
        return sorted(edges, key=lambda e: self.rank[idx.dst[e]]), False


class _Builder:
    """Produce the structural item list for one traversal."""

    def __init__(self, idx: _Index, rank: list[int], plan, record=None):
        self.idx = idx
        self.rank = rank
        self.plan = plan
        self.record = record
        self.items: list[tuple] = []

    def build(self) -> list[tuple]:
        idx, rank = self.idx, self.rank
        roots = []
        for comp in idx.components:
            sources = [v for v in comp if not idx.pin[v]]
            roots.append(min(sources, key=lambda v: rank[v]))
        for k, root in enumerate(sorted(roots, key=lambda v: rank[v])):
            if k:
                self.items.append(("sep",))
            self.forward(root, None)
        return self.items

    def _arrange(self, v, edges, role):
        order, bracket_last = self.plan(self.idx, v, edges, role)
        if self.record is not None:
            self.record[v] = (role, sorted(edges, key=lambda e: self.rank[self.idx.dst[e]]))
        return order, bracket_last

    def unit(self, v):
        self.items.append(("unit", v))
        if self.idx.partners[v] or self.idx.group_size[v]:
            self.items.append(("heat", v))
        if self.idx.rin[v] or self.idx.rout[v]:
            self.items.append(("rec", v))

    def tags(self, e):
        for t in self.idx.tags[e]:
            self.items.append(("tag", t))

    def incoming(self, v, exclude):
        idx = self.idx
        chains = sorted((e for e in idx.pin[v] if e != exclude), key=lambda e: self.rank[idx.src[e]])
        if not chains:
            return
        self.items.append(("open",))
        for k, e in enumerate(chains):
            if k:
                self.items.append(("and",))
            self.chain(idx.src[e], e)
        self.items.append(("close",))

    def forward(self, v, parent_edge):
        idx = self.idx
        while True:
            self.unit(v)
            self.incoming(v, parent_edge)
            order, bracket_last = self._arrange(v, list(idx.pout[v]), FORWARD)
            if not order:
                return
            last = len(order) - 1
            for k, e in enumerate(order):
                if k < last or bracket_last:
                    self.items.append(("[",))
                    self.tags(e)
                    self.forward(idx.dst[e], e)
                    self.items.append(("]",))
            if bracket_last:
                return
            e = order[last]
            self.tags(e)
            v, parent_edge = idx.dst[e], e

    def chain(self, u, exit_edge):
        idx, rank = self.idx, self.rank
        trunk_in = {}
        path = [u]
        x = u
        while idx.pin[x]:
            e = min(idx.pin[x], key=lambda e: rank[idx.src[e]])
            trunk_in[x] = e
            x = idx.src[e]
            path.append(x)
        path.reverse()
        for k, t in enumerate(path):
            self.unit(t)
            self.incoming(t, trunk_in.get(t))
            succ = trunk_in[path[k + 1]] if k + 1 < len(path) else exit_edge
            sides = [e for e in idx.pout[t] if e != succ]
            order, _ = self._arrange(t, sides, TRUNK)
            for e in order:
                self.items.append(("[",))
                self.tags(e)
                self.forward(idx.dst[e], e)
                self.items.append(("]",))
            self.tags(succ)


def _number(n: int) -> str:
    if n > MAX_RECYCLE_NUMBER:
        raise SerializationError(f"more than {MAX_RECYCLE_NUMBER} recycle streams")
    return str(n) if n < 10 else f"%{n}"


def _render(idx: _Index, items: list[tuple]) -> tuple[str, list[int]]:
    """Text of an item list plus the vertex order of its unit tokens."""
    units = [it[1] for it in items if it[0] == "unit"]
    pos = {v: k for k, v in enumerate(units)}
    recycle_no: dict[int, int] = {}
    heat_no: dict[tuple, int] = {}
    out = []

    def num(e):
        if e not in recycle_no:
            recycle_no[e] = len(recycle_no) + 1
        return _number(recycle_no[e])

    for it in items:
        kind = it[0]
        if kind == "unit":
            out.append(f"({idx.cat[it[1]]})")
        elif kind == "heat":
            key = idx.graph.nodes[it[1]].unit_key
            if key not in heat_no:
                heat_no[key] = len(heat_no) + 1
            out.append(f"{{{heat_no[key]}}}")
        elif kind == "rec":
            v = it[1]
            refs = sorted(idx.rin[v], key=lambda e: (pos[idx.src[e]], idx.tags[e], e))
            marks = sorted(idx.rout[v], key=lambda e: (pos[idx.dst[e]], idx.tags[e], e))
            for e in refs:
                out.append("<" + num(e))
            for e in marks:
                out.extend(f"{{{t}}}" for t in idx.tags[e])
                out.append(num(e))
        elif kind == "tag":
            out.append(f"{{{it[1]}}}")
        elif kind == "[":
            out.append("[")
        elif kind == "]":
            out.append("]")
        elif kind == "open":
            out.append("<&|")
        elif kind == "and":
            out.append("&")
        elif kind == "close":
            out.append("&|")
        elif kind == "sep":
            out.append("n|")
    return "".join(out), units


# ------------------------------------------------------------- canonical

class _Prepared:
    """Canonical string and position ranks of one graph."""

    def __init__(self, g: FlowsheetGraph):
        self.idx = idx = _Index(g)
        colours, count = _refine(idx, *_initial_colours(idx))
        best: list = [None, None]

        def search(colours, count):
            if count == idx.n:
                text, units = _render(idx, _Builder(idx, colours, _CanonicalPlan(colours)).build())
                if best[0] is None or text < best[0]:
                    best[0], best[1] = text, units
                return
            cells = defaultdict(list)
            for v, c in enumerate(colours):
                cells[c].append(v)
            target = min(c for c, vs in cells.items() if len(vs) > 1)
            reps: list[int] = []
            for v in cells[target]:
                if not any(_twins(idx, u, v) for u in reps):
                    reps.append(v)
            for v in reps:
                keys = [(c, 0 if u == v else 1) for u, c in enumerate(colours)]
                search(*_refine(idx, *_compress(keys)))

        search(colours, count)
        self.text = best[0]
        self.rank = [0] * idx.n
        for k, v in enumerate(best[1]):
            self.rank[v] = k + 1


@lru_cache(maxsize=512)
def _prepare(g: FlowsheetGraph) -> _Prepared:
    return _Prepared(g)


def canonical_rank(g: FlowsheetGraph) -> dict[str, int]:
    """Unique rank per node id (1-based), invariant under relabeling."""
    prep = _prepare(g)
    return {prep.idx.ids[v]: r for v, r in enumerate(prep.rank)}


# -------------------------------------------------------- decision space

def _multinomial(counts) -> int:
    out = math.factorial(sum(counts))
    for c in counts:
        out //= math.factorial(c)
    return out


def _unrank_multiset(counts: list[int], index: int) -> list[int]:
    """``index``-th (lexicographic) arrangement of a multiset of type labels."""
    counts = list(counts)
    seq = []
    for _ in range(sum(counts)):
        for t, c in enumerate(counts):
            if not c:
                continue
            counts[t] -= 1
            block = _multinomial(counts)
            if index < block:
                seq.append(t)
                break
            index -= block
            counts[t] += 1
    return seq


class _Decision:
    __slots__ = ("vertex", "rank", "role", "groups", "recycle_factor", "radix")

    def __init__(self, vertex, rank, role, groups, recycle_factor):
        self.vertex = vertex
        self.rank = rank
        self.role = role
        self.groups = groups
        self.recycle_factor = recycle_factor
        self.radix = _multinomial([len(g) for g in groups]) * recycle_factor

    def arrangement(self, digit: int) -> tuple[list[int], bool]:
        perm_index, flag = divmod(digit, self.recycle_factor)
        pools = [list(g) for g in self.groups]
        order = [pools[t].pop(0) for t in _unrank_multiset([len(g) for g in self.groups], perm_index)]
        return order, flag == 1


class _DigitPlan:
    def __init__(self, rank, chosen: dict[int, tuple[list[int], bool]]):
        self.rank = rank
        self.chosen = chosen

    def __call__(self, idx, v, edges, role):
        if v in self.chosen:
            return self.chosen[v]
        return sorted(edges, key=lambda e: self.rank[idx.dst[e]]), False


class DecisionSpace:
    """Mixed-radix space of all branch-order choices for one graph.

    Index 0 is the canonical string. Outlets whose subtrees are
    interchangeable (swapping them leaves the string unchanged) are grouped,
    so distinct indices give distinct strings.
    """

    def __init__(self, g: FlowsheetGraph):
        self.graph = g
        prep = _prepare(g)
        self._prep = prep
        idx, rank = prep.idx, prep.rank
        record: dict[int, tuple[str, list[int]]] = {}
        _Builder(idx, rank, _CanonicalPlan(rank), record).build()
        self.decisions: list[_Decision] = []
        for v in sorted(record, key=lambda v: rank[v]):
            role, edges = record[v]
            factor = 2 if role == FORWARD and edges and idx.rout[v] else 1
            if len(edges) < 2 and factor == 1:
                continue
            groups = self._interchangeable(v, edges) if len(edges) > 1 else [edges]
            d = _Decision(v, rank[v], role, groups, factor)
            if d.radix > 1:
                self.decisions.append(d)
        self.size = math.prod(d.radix for d in self.decisions)

    def _interchangeable(self, v, edges) -> list[list[int]]:
        idx, rank = self._prep.idx, self._prep.rank
        groups: list[list[int]] = []
        for k, e in enumerate(edges):
            for grp in groups:
                rep = edges.index(grp[0])
                swapped = list(edges)
                swapped[k], swapped[rep] = swapped[rep], swapped[k]
                text, _ = _render(idx, _Builder(idx, rank, _DigitPlan(rank, {v: (swapped, False)})).build())
                if text == self._prep.text:
                    grp.append(e)
                    break
            else:
                groups.append([e])
        return groups

    @property
    def radices(self) -> list[int]:
        return [d.radix for d in self.decisions]

    def digits(self, index: int) -> list[int]:
        if not 0 <= index < self.size:
            raise IndexError(f"variant index {index} outside [0, {self.size})")
        out = []
        for d in self.decisions:
            index, digit = divmod(index, d.radix)
            out.append(digit)
        return out

    def index_of(self, digits: list[int]) -> int:
        index, scale = 0, 1
        for d, digit in zip(self.decisions, digits):
            index += digit * scale
            scale *= d.radix
        return index

    def render_digits(self, digits: list[int]) -> str:
        prep = self._prep
        chosen = {d.vertex: d.arrangement(digit) for d, digit in zip(self.decisions, digits)}
        items = _Builder(prep.idx, prep.rank, _DigitPlan(prep.rank, chosen)).build()
        return _render(prep.idx, items)[0]

    def render(self, index: int) -> str:
        return self.render_digits(self.digits(index))

    def seeded_digits(self, seed: int) -> list[int]:
        return [_keyed_draw(seed, d.rank, d.radix) for d in self.decisions]


def _keyed_draw(seed: int, counter: int, radix: int) -> int:
    """Counter-based draw in [0, radix) keyed by (seed, counter)."""
    h = hashlib.blake2b(f"{seed}:{counter}".encode(), digest_size=16).digest()
    return int.from_bytes(h, "little") % radix


@lru_cache(maxsize=512)
def decision_space(g: FlowsheetGraph) -> DecisionSpace:
    return DecisionSpace(g)


# ------------------------------------------------------------------- api

def serialize(g: FlowsheetGraph, policy: SerializationPolicy | None = None) -> str:
    """SFILES string of ``g`` under ``policy`` (canonical by default)."""
    policy = policy or SerializationPolicy.canonical()
    if policy.mode == CANONICAL:
        return _prepare(g).text
    space = decision_space(g)
    return space.render_digits(space.seeded_digits(policy.seed))


def canonicalize(text: str) -> str:
    return serialize(parse(text))
