import json
import random

import pytest
from hypothesis import given, strategies as st

from sfiles_forge.graph import (
    PROCESS,
    RECYCLE,
    FlowsheetGraph,
    GraphSizeError,
    GraphValidationError,
    StreamEdge,
    UnitNode,
    from_node_link,
    graph_equal,
    graphs_isomorphic_bruteforce,
    to_dot,
    to_json,
    to_node_link,
)
from sfiles_forge.parser import parse

from conftest import WORKED_ALL, WORKED_CANONICAL, corpus_graphs, generated_graphs


def chain(*cats):
    counts = {}
    nodes = []
    for c in cats:
        counts[c] = counts.get(c, 0) + 1
        nodes.append(UnitNode(c, counts[c]))
    edges = [StreamEdge(a.id, b.id) for a, b in zip(nodes, nodes[1:])]
    return FlowsheetGraph(tuple(nodes), tuple(edges))


class TestValidation:
    @pytest.mark.parametrize("category", ["", "a(b", "x1", "m&x", "a|b", "p{", "a b"])
    def test_bad_category(self, category):
        with pytest.raises(GraphValidationError) as exc:
            FlowsheetGraph((UnitNode(category, 1),), ())
        assert exc.value.invariant == "category"

    def test_duplicate_node(self):
        with pytest.raises(GraphValidationError, match="unique-node"):
            FlowsheetGraph((UnitNode("v", 1), UnitNode("v", 1)), ())

    def test_unknown_endpoint(self):
        with pytest.raises(GraphValidationError) as exc:
            FlowsheetGraph((UnitNode("v", 1),), (StreamEdge("v-1", "v-2"),))
        assert exc.value.invariant == "edge-endpoint"

    @pytest.mark.parametrize("tags, invariant", [(("a", "a"), "edge-tags"), (("12",), "edge-tags")])
    def test_bad_tags(self, tags, invariant):
        with pytest.raises(GraphValidationError) as exc:
            FlowsheetGraph((UnitNode("v", 1), UnitNode("p", 1)), (StreamEdge("v-1", "p-1", tags),))
        assert exc.value.invariant == invariant

    def test_raw_and_prod_degrees(self):
        with pytest.raises(GraphValidationError, match="raw-in-degree"):
            FlowsheetGraph((UnitNode("v", 1), UnitNode("raw", 1)), (StreamEdge("v-1", "raw-1"),))
        with pytest.raises(GraphValidationError, match="prod-out-degree"):
            FlowsheetGraph((UnitNode("prod", 1), UnitNode("v", 1)), (StreamEdge("prod-1", "v-1"),))

    def test_edge_kind(self):
        with pytest.raises(GraphValidationError, match="edge-kind"):
            FlowsheetGraph((UnitNode("v", 1), UnitNode("p", 1)), (StreamEdge("v-1", "p-1", kind="heat"),))


class TestWorkedGraph:
    def test_census(self, worked):
        assert worked.unit_count == 13
        assert len(worked.edges) == 13
        assert len(worked.nodes) == 14  # one vertex per heat pass
        assert worked.category_counts() == {
            "raw": 3, "hex": 2, "r": 1, "pp": 1, "mix": 1, "v": 1, "dist": 1, "splt": 1, "prod": 3,
        }
        assert worked.heat_pairs == frozenset({frozenset({"hex-1/1", "hex-1/2"})})

    def test_edges(self, worked):
        got = sorted((e.src, e.dst, e.tags, e.kind) for e in worked.edges)
        want = sorted([
            ("raw-1", "hex-1/1", (), PROCESS), ("hex-1/1", "r-1", (), PROCESS),
            ("raw-2", "pp-1", (), PROCESS), ("pp-1", "r-1", (), PROCESS),
            ("r-1", "mix-1", (), PROCESS), ("mix-1", "v-1", (), PROCESS),
            ("v-1", "dist-1", (), PROCESS), ("dist-1", "prod-1", ("tout",), PROCESS),
            ("dist-1", "splt-1", ("bout",), PROCESS), ("splt-1", "mix-1", (), RECYCLE),
            ("splt-1", "prod-2", (), PROCESS), ("raw-3", "hex-1/2", (), PROCESS),
            ("hex-1/2", "prod-3", (), PROCESS),
        ])
        assert got == want

    @pytest.mark.parametrize("variant", WORKED_ALL[1:])
    def test_augmentations_equal(self, worked, variant):
        assert graph_equal(worked, parse(variant))
        assert graphs_isomorphic_bruteforce(worked, parse(variant), limit=14)


class TestEquality:
    def test_categories_differ(self):
        a, b = parse("(raw)(hex)(prod)"), parse("(raw)(dist)(prod)")
        assert not graph_equal(a, b)
        assert not graphs_isomorphic_bruteforce(a, b)

    def test_relabeled_chain(self):
        g = chain("raw", "v", "pp", "hex", "prod")
        h = g.relabeled(order=[4, 2, 0, 3, 1])
        assert graph_equal(g, h) and graphs_isomorphic_bruteforce(g, h)

    def test_direction_matters(self):
        n = tuple(UnitNode(c, 1) for c in ("a", "b", "c", "d"))
        a = FlowsheetGraph(n, (StreamEdge("a-1", "b-1"), StreamEdge("b-1", "c-1"), StreamEdge("c-1", "d-1")))
        b = FlowsheetGraph(n, (StreamEdge("a-1", "b-1"), StreamEdge("c-1", "b-1"), StreamEdge("c-1", "d-1")))
        assert not graph_equal(a, b)
        assert not graphs_isomorphic_bruteforce(a, b)

    def test_kind_and_tags_matter(self):
        base = parse("(raw)(mix)<1(splt)[(prod)]1(prod)")
        assert not graph_equal(base, parse("(raw)(mix)(splt)[(prod)](prod)"))
        assert not graph_equal(parse("(raw)(dist)[{tout}(prod)]{bout}(prod)"),
                               parse("(raw)(dist)[{tout}(prod)]{tout}(prod)"))

    def test_heat_pairing_matters(self):
        paired = parse("(raw)(hex){1}(prod)n|(raw)(hex){1}(prod)")
        unpaired = parse("(raw)(hex)(prod)n|(raw)(hex)(prod)")
        assert paired.unit_count == 5 and unpaired.unit_count == 6
        assert not graph_equal(paired, unpaired)
        assert not graphs_isomorphic_bruteforce(paired, unpaired)

    def test_bruteforce_limit(self):
        g = chain(*(["raw"] + ["v"] * 12 + ["prod"]))
        with pytest.raises(GraphSizeError):
            graphs_isomorphic_bruteforce(g, g)

    @given(generated_graphs(max_units=10))
    def test_reflexive_and_relabel_invariant(self, g):
        rng = random.Random(len(g.nodes))
        order = list(range(len(g.nodes)))
        rng.shuffle(order)
        keys = sorted({n.unit_key for n in g.nodes})
        renumber = {}
        by_cat = {}
        for cat, no in keys:
            by_cat.setdefault(cat, []).append(no)
        for cat, nos in by_cat.items():
            shuffled = nos[:]
            rng.shuffle(shuffled)
            renumber.update({(cat, a): b for a, b in zip(nos, shuffled)})
        h = g.relabeled(order=order, renumber=renumber)
        assert graph_equal(g, g)
        assert graph_equal(g, h) and graph_equal(h, g)

    def test_agrees_with_bruteforce_on_corpus(self):
        graphs = [g for g in corpus_graphs(150, seed=11, unit_count_range=(3, 9)) if len(g.nodes) <= 10]
        pairs = 0
        for a, b in zip(graphs, graphs[1:]):
            if len(a.nodes) == len(b.nodes):
                assert graph_equal(a, b) == graphs_isomorphic_bruteforce(a, b, limit=10)
                pairs += 1
        for g in graphs[:40]:
            h = g.relabeled(order=list(reversed(range(len(g.nodes)))))
            assert graph_equal(g, h) == graphs_isomorphic_bruteforce(g, h, limit=10) is True
        assert pairs > 10

    def test_transitive_on_samples(self):
        graphs = corpus_graphs(60, seed=2, unit_count_range=(3, 6))
        for a in graphs[:20]:
            for b in graphs[:20]:
                for c in graphs[:20]:
                    if graph_equal(a, b) and graph_equal(b, c):
                        assert graph_equal(a, c)


class TestExport:
    def test_node_link_fig1(self, worked):
        doc = to_node_link(worked)
        assert len(doc["nodes"]) == 13 and len(doc["edges"]) == 13
        hex_node = next(n for n in doc["nodes"] if n["category"] == "hex")
        assert hex_node == {"id": "hex-1", "category": "hex", "instance_no": 1, "passes": 2}
        assert {e["pass_label"] for e in doc["edges"] if "hex-1" in (e["from"], e["to"])} == {"1"}
        assert all(e["pass_label"] is None for e in doc["edges"] if "hex-1" not in (e["from"], e["to"]))

    def test_minimal(self):
        doc = to_node_link(parse("(raw)(prod)"))
        assert doc == {
            "nodes": [{"id": "raw-1", "category": "raw", "instance_no": 1},
                      {"id": "prod-1", "category": "prod", "instance_no": 1}],
            "edges": [{"from": "raw-1", "to": "prod-1", "tags": [], "kind": "process", "pass_label": None}],
        }

    @given(generated_graphs())
    def test_json_round_trip(self, g):
        back = from_node_link(json.loads(to_json(g)))
        assert graph_equal(g, back)
        assert to_json(back) == to_json(g)

    def test_dot(self, worked):
        dot = to_dot(worked)
        assert dot.startswith("digraph flowsheet {") and dot.rstrip().endswith("}")
        assert '"splt-1" -> "mix-1" [style=dashed];' in dot
        assert '"dist-1" -> "prod-1" [label="tout"];' in dot
        assert "style=dotted" in dot
