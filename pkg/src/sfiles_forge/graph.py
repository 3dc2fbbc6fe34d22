"""Typed flowsheet graph: unit operations as nodes, streams as directed edges.

Heat-integrated exchangers are stored as one node per traversal pass. Passes
of the same physical exchanger share ``(category, instance_no)`` and carry a
distinct ``pass_no``; :attr:`FlowsheetGraph.heat_pairs` groups them.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import networkx as nx

PROCESS = "process"
RECYCLE = "recycle"
EDGE_KINDS = (PROCESS, RECYCLE)

# characters that can never appear inside a unit category
DELIMITERS = frozenset("(){}[]<&|%")

BRUTEFORCE_LIMIT = 12


class GraphValidationError(ValueError):
    """A FlowsheetGraph invariant does not hold."""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant
        self.detail = detail


class GraphSizeError(ValueError):
    pass


def valid_category(category: str) -> bool:
    return (
        bool(category)
        and not any(c in DELIMITERS or c.isdigit() or c.isspace() for c in category)
    )


@dataclass(frozen=True, order=True)
class UnitNode:
    category: str
    instance_no: int
    pass_no: int | None = None

    @property
    def id(self) -> str:
        base = f"{self.category}-{self.instance_no}"
        return base if self.pass_no is None else f"{base}/{self.pass_no}"

    @property
    def unit_key(self) -> tuple[str, int]:
        """Identity of the physical unit this node belongs to."""
        return (self.category, self.instance_no)


@dataclass(frozen=True)
class StreamEdge:
    src: str
    dst: str
    tags: tuple[str, ...] = ()
    kind: str = PROCESS

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))


@dataclass(frozen=True)
class FlowsheetGraph:
    nodes: tuple[UnitNode, ...]
    edges: tuple[StreamEdge, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        self._validate()

    def _validate(self):
        ids = [n.id for n in self.nodes]
        dup = [i for i, c in Counter(ids).items() if c > 1]
        if dup:
            raise GraphValidationError("unique-node", f"duplicate node ids {sorted(dup)}")
        passes = defaultdict(list)
        for n in self.nodes:
            if not valid_category(n.category):
                raise GraphValidationError("category", f"invalid category {n.category!r}")
            if n.instance_no < 1:
                raise GraphValidationError("instance-no", f"{n.id} has non-positive instance number")
            if n.pass_no is not None and n.pass_no < 1:
                raise GraphValidationError("instance-no", f"{n.id} has non-positive pass number")
            passes[n.unit_key].append(n.pass_no)
        for key, nos in passes.items():
            if len(nos) > 1 and None in nos:
                raise GraphValidationError(
                    "unique-node", f"{key[0]}-{key[1]} mixes a plain node with heat passes"
                )
        known = set(ids)
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise GraphValidationError("edge-endpoint", f"edge {e.src}->{e.dst} has an unknown endpoint")
            if e.kind not in EDGE_KINDS:
                raise GraphValidationError("edge-kind", f"unknown edge kind {e.kind!r}")
            if len(set(e.tags)) != len(e.tags):
                raise GraphValidationError("edge-tags", f"edge {e.src}->{e.dst} repeats a tag")
            if any(not t or t.isdigit() or any(c in DELIMITERS for c in t) for t in e.tags):
                raise GraphValidationError("edge-tags", f"edge {e.src}->{e.dst} has an invalid tag")
        by_id = {n.id: n for n in self.nodes}
        for e in self.edges:
            if by_id[e.dst].category == "raw":
                raise GraphValidationError("raw-in-degree", f"raw node {e.dst} has an incoming stream")
            if by_id[e.src].category == "prod":
                raise GraphValidationError("prod-out-degree", f"prod node {e.src} has an outgoing stream")

    @cached_property
    def node_by_id(self) -> dict[str, UnitNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def heat_pairs(self) -> frozenset[frozenset[str]]:
        """Groups of heat-pass node ids that form one physical exchanger."""
        groups = defaultdict(set)
        for n in self.nodes:
            if n.pass_no is not None:
                groups[n.unit_key].add(n.id)
        return frozenset(frozenset(g) for g in groups.values())

    @property
    def unit_count(self) -> int:
        """Number of physical units (heat passes of one exchanger count once)."""
        return len({n.unit_key for n in self.nodes})

    def out_edges(self, node_id: str) -> list[StreamEdge]:
        return self._adjacency[0].get(node_id, [])

    def in_edges(self, node_id: str) -> list[StreamEdge]:
        return self._adjacency[1].get(node_id, [])

    @cached_property
    def _adjacency(self):
        out, inc = defaultdict(list), defaultdict(list)
        for e in self.edges:
            out[e.src].append(e)
            inc[e.dst].append(e)
        return dict(out), dict(inc)

    def category_counts(self) -> Counter:
        return Counter(n.category for n in self.nodes)

    def relabeled(self, order: Iterable[int] | None = None, renumber: dict | None = None) -> "FlowsheetGraph":
        """Copy with nodes/edges permuted in storage and instance numbers remapped.

        ``renumber`` maps old unit keys to new instance numbers; it exists so
        tests can check that numbering carries no meaning.
        """
        renumber = renumber or {}
        mapping = {}
        new_nodes = []
        for n in self.nodes:
            no = renumber.get(n.unit_key, n.instance_no)
            m = UnitNode(n.category, no, n.pass_no)
            mapping[n.id] = m.id
            new_nodes.append(m)
        if order is not None:
            order = list(order)
            new_nodes = [new_nodes[i] for i in order]
        edges = [StreamEdge(mapping[e.src], mapping[e.dst], e.tags, e.kind) for e in self.edges]
        return FlowsheetGraph(tuple(new_nodes), tuple(reversed(edges)))


def _edge_label(e: StreamEdge) -> tuple:
    return (e.kind, tuple(sorted(e.tags)))


def _pass_group_size(g: FlowsheetGraph, n: UnitNode) -> int:
    if n.pass_no is None:
        return 0
    return sum(1 for m in g.nodes if m.unit_key == n.unit_key)


def _to_networkx(g: FlowsheetGraph) -> nx.MultiDiGraph:
    G = nx.MultiDiGraph()
    for n in g.nodes:
        G.add_node(n.id, label=(n.category, _pass_group_size(g, n)))
    for e in g.edges:
        G.add_edge(e.src, e.dst, label=_edge_label(e))
    for group in g.heat_pairs:
        for a, b in itertools.permutations(sorted(group), 2):
            G.add_edge(a, b, label=("heat", ()))
    return G


def graph_equal(a: FlowsheetGraph, b: FlowsheetGraph) -> bool:
    """True iff ``a`` and ``b`` describe the same flowsheet up to renaming."""
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return False
    if a.category_counts() != b.category_counts():
        return False

    def edge_match(d1, d2):
        return sorted(x["label"] for x in d1.values()) == sorted(x["label"] for x in d2.values())

    return nx.is_isomorphic(
        _to_networkx(a),
        _to_networkx(b),
        node_match=lambda x, y: x["label"] == y["label"],
        edge_match=edge_match,
    )


def graphs_isomorphic_bruteforce(a: FlowsheetGraph, b: FlowsheetGraph, limit: int = BRUTEFORCE_LIMIT) -> bool:
    """Exhaustive bijection search; reference oracle for :func:`graph_equal`."""
    if max(len(a.nodes), len(b.nodes)) > limit:
        raise GraphSizeError(f"brute-force isomorphism limited to {limit} nodes")
    if len(a.nodes) != len(b.nodes):
        return False

    def edge_multiset(g, rename):
        out = Counter((rename[e.src], rename[e.dst], _edge_label(e)) for e in g.edges)
        for group in g.heat_pairs:
            for x, y in itertools.permutations(group, 2):
                out[(rename[x], rename[y], ("heat", ()))] += 1
        return out

    classes_a, classes_b = defaultdict(list), defaultdict(list)
    for n in a.nodes:
        classes_a[(n.category, _pass_group_size(a, n))].append(n.id)
    for n in b.nodes:
        classes_b[(n.category, _pass_group_size(b, n))].append(n.id)
    if {k: len(v) for k, v in classes_a.items()} != {k: len(v) for k, v in classes_b.items()}:
        return False
    target = edge_multiset(b, {n.id: n.id for n in b.nodes})
    labels = sorted(classes_a)
    # every label-preserving bijection, one permutation per label class
    for perms in itertools.product(*(itertools.permutations(classes_b[k]) for k in labels)):
        rename = {}
        for k, perm in zip(labels, perms):
            rename.update(zip(classes_a[k], perm))
        if edge_multiset(a, rename) == target:
            return True
    return False


# ---------------------------------------------------------------- export

def to_node_link(g: FlowsheetGraph) -> dict:
    """Node-link document with one node per physical unit.

    A heat-integrated exchanger appears once, with ``passes`` set. Edges that
    touch one of its passes carry ``from_pass`` / ``to_pass`` and a
    ``pass_label`` naming the pairing (1, 2, ... in node order).
    """
    labels = {}
    nodes = []
    for n in g.nodes:
        if n.pass_no is not None:
            if n.unit_key in labels:
                continue
            labels[n.unit_key] = str(len(labels) + 1)
            passes = sum(m.unit_key == n.unit_key for m in g.nodes)
            nodes.append({"id": f"{n.category}-{n.instance_no}", "category": n.category,
                          "instance_no": n.instance_no, "passes": passes})
        else:
            nodes.append({"id": n.id, "category": n.category, "instance_no": n.instance_no})
    edges = []
    for e in g.edges:
        src, dst = g.node_by_id[e.src], g.node_by_id[e.dst]
        entry = {
            "from": f"{src.category}-{src.instance_no}",
            "to": f"{dst.category}-{dst.instance_no}",
            "tags": list(e.tags),
            "kind": e.kind,
            "pass_label": labels.get(src.unit_key) or labels.get(dst.unit_key),
        }
        if src.pass_no is not None:
            entry["from_pass"] = src.pass_no
        if dst.pass_no is not None:
            entry["to_pass"] = dst.pass_no
        edges.append(entry)
    return {"nodes": nodes, "edges": edges}


def from_node_link(doc: dict) -> FlowsheetGraph:
    nodes = []
    for d in doc["nodes"]:
        passes = d.get("passes")
        if passes is None:
            nodes.append(UnitNode(d["category"], int(d["instance_no"])))
        else:
            nodes.extend(UnitNode(d["category"], int(d["instance_no"]), k) for k in range(1, int(passes) + 1))
        if d["id"] != f"{d['category']}-{d['instance_no']}":
            raise GraphValidationError("unique-node", f"node id {d['id']!r} does not match its fields")

    def endpoint(unit: str, pass_no) -> str:
        return unit if pass_no is None else f"{unit}/{pass_no}"

    edges = [
        StreamEdge(endpoint(d["from"], d.get("from_pass")), endpoint(d["to"], d.get("to_pass")),
                   tuple(d.get("tags", ())), d.get("kind", PROCESS))
        for d in doc["edges"]
    ]
    return FlowsheetGraph(tuple(nodes), tuple(edges))


def to_json(g: FlowsheetGraph, indent: int | None = 2) -> str:
    return json.dumps(to_node_link(g), indent=indent)


def to_dot(g: FlowsheetGraph, name: str = "flowsheet") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for n in g.nodes:
        lines.append(f'  "{n.id}" [label="{n.id}"];')
    for e in g.edges:
        attrs = []
        if e.tags:
            attrs.append(f'label="{",".join(e.tags)}"')
        if e.kind == RECYCLE:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f'  "{e.src}" -> "{e.dst}"{suffix};')
    for group in sorted(sorted(g) for g in g.heat_pairs):
        for a, b in zip(group, group[1:]):
            lines.append(f'  "{a}" -> "{b}" [dir=none, style=dotted, constraint=false];')
    lines.append("}")
    return "\n".join(lines) + "\n"
