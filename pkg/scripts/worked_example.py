"""Parse the worked flowsheet, list its four strings and the decision space."""

import json

from sfiles_forge import canonical_rank, count_variants, enumerate_variants, parse, serialize
from sfiles_forge.graph import to_node_link
from sfiles_forge.serializer import decision_space

EXAMPLE = (
    "(raw)(hex){1}(r)<&|(raw)(pp)&|(mix)<1(v)(dist)[{tout}(prod)]{bout}(splt)1(prod)"
    "n|(raw)(hex){1}(prod)"
)


def main():
    g = parse(EXAMPLE)
    print(f"units={g.unit_count} vertices={len(g.nodes)} edges={len(g.edges)}")
    print("canonical reproduces input:", serialize(g) == EXAMPLE)
    ranks = canonical_rank(g)
    print("ranks:", " ".join(f"{v}:{r}" for v, r in sorted(ranks.items(), key=lambda kv: kv[1])))
    space = decision_space(g)
    for d in space.decisions:
        print(f"decision at {g.nodes[d.vertex].id}: radix {d.radix}")
    print(f"count_variants = {count_variants(g)}")
    for k, s in enumerate(enumerate_variants(g)):
        print(f"  [{k}] {s}")
    print(json.dumps(to_node_link(g))[:200] + " ...")


if __name__ == "__main__":
    main()
