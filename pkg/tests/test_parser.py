import random
import time

import pytest
from hypothesis import given, strategies as st

from sfiles_forge.graph import RECYCLE, graph_equal
from sfiles_forge.parser import ParseError, TokenKind as K, parse, tokenize
from sfiles_forge.serializer import SerializationPolicy, serialize

from conftest import WORKED_ALL, WORKED_CANONICAL, generated_graphs, seeds


def kinds(text):
    return [(t.kind, t.value) for t in tokenize(text)]


class TestTokenize:
    def test_heat_example(self):
        assert kinds("(raw)(hex){1}(prod)") == [
            (K.UNIT, "raw"), (K.UNIT, "hex"), (K.TAG, "1"), (K.UNIT, "prod"),
        ]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("   ") == []

    def test_substring(self):
        assert kinds("(dist)[{tout}(prod)]{bout}(splt)1") == [
            (K.UNIT, "dist"), (K.BRANCH_OPEN, None), (K.TAG, "tout"), (K.UNIT, "prod"),
            (K.BRANCH_CLOSE, None), (K.TAG, "bout"), (K.UNIT, "splt"), (K.RECYCLE_MARK, 1),
        ]

    def test_every_kind_in_worked(self):
        seen = {t.kind for t in tokenize(WORKED_CANONICAL)}
        assert seen == set(K) - {K.INCOMING_SEP}

    @pytest.mark.parametrize("text, number", [("<1", 1), ("<%12", 12), ("%10", 10), ("9", 9)])
    def test_recycle_numbers(self, text, number):
        (tok,) = tokenize(text)
        assert tok.value == number and tok.text == text

    def test_offsets_survive_outer_whitespace(self):
        toks = tokenize("  (raw)(prod) \n")
        assert [t.start for t in toks] == [2, 7]

    @pytest.mark.parametrize("text, position", [
        ("(raw", 4),
        ("{tout", 5),
        ("(raw)(x)]", 8),
        ("(raw)[(prod)", 5),
        ("(raw)<&|(raw)(x)", 5),
        ("(raw)$", 5),
        ("(raw)<x", 6),
        ("(ra w)", 3),
        ("()", 1),
        ("%1", 0),
        ("0", 0),
    ])
    def test_errors(self, text, position):
        with pytest.raises(ParseError) as exc:
            tokenize(text)
        assert exc.value.position == position

    @given(generated_graphs(), seeds)
    def test_lossless(self, g, seed):
        s = serialize(g, SerializationPolicy.randomized(seed))
        assert "".join(t.text for t in tokenize(s)) == s
        for t in tokenize(s):
            assert s[t.start:t.end] == t.text


class TestParse:
    def test_minimal(self):
        g = parse("(raw)(prod)")
        assert len(g.nodes) == 2 and [(e.src, e.dst) for e in g.edges] == [("raw-1", "prod-1")]

    def test_recycle_direction(self, worked):
        (rec,) = [e for e in worked.edges if e.kind == RECYCLE]
        assert (rec.src, rec.dst) == ("splt-1", "mix-1")

    def test_instance_numbers_by_first_appearance(self, worked):
        assert [n.id for n in worked.nodes if n.category == "raw"] == ["raw-1", "raw-2", "raw-3"]
        prod_sources = {e.dst: e.src for e in worked.edges if e.dst.startswith("prod")}
        assert prod_sources == {"prod-1": "dist-1", "prod-2": "splt-1", "prod-3": "hex-1/2"}

    def test_incoming_feeds_preceding_unit(self):
        g = parse("(raw)(mix)<&|(raw)(pp)&|(prod)")
        assert ("pp-1", "mix-1") in {(e.src, e.dst) for e in g.edges}

    def test_multi_chain_incoming(self):
        g = parse("(raw)(mix)<&|(raw)(pp)&(raw)(v)&|(prod)")
        assert {(e.src, e.dst) for e in g.edges} >= {("pp-1", "mix-1"), ("v-1", "mix-1")}

    def test_two_digit_recycle(self):
        a = parse("(raw)(mix)<%10(splt)[(prod)]%10(prod)")
        b = parse("(raw)(mix)<1(splt)[(prod)]1(prod)")
        assert graph_equal(a, b)

    def test_recycle_digits_not_semantic(self):
        assert graph_equal(parse("(raw)(mix)<7(splt)7(prod)"), parse("(raw)(mix)<1(splt)1(prod)"))

    @pytest.mark.parametrize("variant", WORKED_ALL)
    def test_worked_variants(self, worked, variant):
        assert graph_equal(parse(variant), worked)

    @pytest.mark.parametrize("text", [
        "(raw)(mix)<1(prod)",          # dangling recycle ref
        "(raw)(splt)1(prod)",          # dangling recycle mark
        "{tout}(raw)(prod)",           # tag before any unit
        "(raw)[](prod)",               # empty branch
        "(raw)(x)<&|&|(prod)",         # empty incoming
        "(raw)(x){tout}",              # dangling tag
        "(prod)(raw)",                 # prod with an outlet
        "(raw)(dist)[{tout}{tout}(prod)](prod)",
        "n|(raw)(prod)",
        "(raw)(prod)n|",
        "(raw)(x)<1(y)<1(z)1(prod)",   # reused number
    ])
    def test_rejects(self, text):
        with pytest.raises(ParseError) as exc:
            parse(text)
        assert 0 <= exc.value.position <= len(text)

    def test_single_heat_pass_is_kept(self):
        g = parse("(raw)(hex){1}(prod)")
        assert serialize(g) == "(raw)(hex){1}(prod)"
        assert not graph_equal(g, parse("(raw)(hex)(prod)"))

    @given(generated_graphs(), seeds)
    def test_round_trip(self, g, seed):
        assert graph_equal(parse(serialize(g)), g)
        assert graph_equal(parse(serialize(g, SerializationPolicy.randomized(seed))), g)


DELIMS = "(){}[]<&|%n0123456789"


def corrupt(rng: random.Random, s: str) -> str:
    chars = list(s)
    for _ in range(rng.randint(1, 4)):
        op = rng.random()
        pos = rng.randrange(len(chars) + 1)
        if op < 0.4:
            chars.insert(pos, rng.choice(DELIMS))
        elif op < 0.7 and chars:
            del chars[min(pos, len(chars) - 1)]
        elif chars:
            chars[min(pos, len(chars) - 1)] = rng.choice(DELIMS)
    return "".join(chars)


def fuzz(n: int, seed: int = 0):
    """Returns (parse_errors, successes, worst_seconds); raises on anything else."""
    from conftest import corpus_graphs

    bases = [serialize(g) for g in corpus_graphs(200, seed=seed)] + list(WORKED_ALL)
    rng = random.Random(seed)
    errors = ok = 0
    worst = 0.0
    for _ in range(n):
        s = corrupt(rng, rng.choice(bases))
        t0 = time.perf_counter()
        try:
            parse(s)
            ok += 1
        except ParseError as exc:
            assert 0 <= exc.position <= len(s)
            errors += 1
        worst = max(worst, time.perf_counter() - t0)
    return errors, ok, worst


def test_fuzz_small():
    errors, ok, worst = fuzz(1000, seed=3)
    assert errors > 500
    assert worst < 0.1
