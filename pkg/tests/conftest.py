import os

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from sfiles_forge.generator import GeneratorConfig, generate

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# The worked flowsheet and its three alternative strings, written with the
# standard token forms.
WORKED_CANONICAL = (
    "(raw)(hex){1}(r)<&|(raw)(pp)&|(mix)<1(v)(dist)[{tout}(prod)]{bout}(splt)1(prod)"
    "n|(raw)(hex){1}(prod)"
)
WORKED_AUGMENTED = (
    "(raw)(hex){1}(r)<&|(raw)(pp)&|(mix)<1(v)(dist)[{bout}(splt)1(prod)]{tout}(prod)"
    "n|(raw)(hex){1}(prod)",
    "(raw)(hex){1}(r)<&|(raw)(pp)&|(mix)<1(v)(dist)[{tout}(prod)]{bout}(splt)1[(prod)]"
    "n|(raw)(hex){1}(prod)",
    "(raw)(hex){1}(r)<&|(raw)(pp)&|(mix)<1(v)(dist)[{bout}(splt)1[(prod)]]{tout}(prod)"
    "n|(raw)(hex){1}(prod)",
)
WORKED_ALL = (WORKED_CANONICAL, *WORKED_AUGMENTED)

probabilities = st.floats(0.0, 1.0, allow_nan=False)
seeds = st.integers(0, 2**64 - 1)


@st.composite
def generated_graphs(draw, max_units=12):
    cfg = GeneratorConfig(
        seed=draw(seeds),
        unit_count_range=(2, max_units),
        branch_probability=draw(probabilities),
        recycle_probability=draw(probabilities),
        heat_integration_probability=draw(st.floats(0.0, 0.5)),
    )
    return generate(cfg)


def corpus_graphs(n, seed=0, **kw):
    base = GeneratorConfig(seed=seed, **kw)
    from sfiles_forge._util import mix64

    return [generate(base.with_seed(mix64(seed, i))) for i in range(n)]


@pytest.fixture
def worked():
    from sfiles_forge.parser import parse

    return parse(WORKED_CANONICAL)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
