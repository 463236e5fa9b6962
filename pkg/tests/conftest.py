import numpy as np
import pytest
from hypothesis import strategies as st

from adaptive_consensus.graph import Digraph, GraphFamily
from adaptive_consensus.sim.scenarios import DEFAULT_EDGES


@pytest.fixture
def default_family():
    return GraphFamily(tuple(Digraph.from_edges(5, [e]) for e in DEFAULT_EDGES))


@st.composite
def digraphs(draw, min_nodes=2, max_nodes=6, node_count=None):
    """Valid digraphs: zero diagonal, zero leader row, nonnegative weights."""
    n = node_count or draw(st.integers(min_nodes, max_nodes))
    weights = st.one_of(st.just(0.0), st.floats(0.1, 5.0))
    a = np.array([[draw(weights) for _ in range(n)] for _ in range(n)])
    np.fill_diagonal(a, 0.0)
    a[0] = 0.0
    return Digraph(a)


# --- shared long runs (session scope: each is integrated once) -------------

TIMINGS: dict[str, float] = {}


@pytest.fixture(scope="session")
def replication():
    import time

    from adaptive_consensus.sim import van_der_pol_config, run

    config = van_der_pol_config()
    start = time.perf_counter()
    log = run(config)
    TIMINGS["replication"] = time.perf_counter() - start
    return config, log


@pytest.fixture(scope="session")
def truth_run():
    from adaptive_consensus.sim import van_der_pol_config, run, truth_initialized

    config = truth_initialized(van_der_pol_config())
    return config, run(config)


@pytest.fixture(scope="session")
def pinned_runs():
    """Observers pinned to the truth, plants and parameter estimates as in the built-in scenario,
    under the distributed and the decentralized law."""
    from adaptive_consensus.sim import van_der_pol_config, run, truth_initialized

    base = truth_initialized(van_der_pol_config(), plants=False, parameters=False)
    dist = base.replace(law="distributed")
    dec = base.replace(law="decentralized")
    return (dist, run(dist)), (dec, run(dec))


# --- acceptance summary ----------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
