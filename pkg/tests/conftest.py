import numpy as np
import pytest

from relaypos.errors import DegenerateGeometry
from relaypos.hypergraph import Scenario
from relaypos.rate_model import make_low_snr


def random_scenario(rng, n_range=(1, 4), with_relay=False):
    """Unit-square scenario with low-SNR alpha in {2, 3, 4} and budgets in [0.1, 10]."""
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        alpha = float(rng.choice([2, 3, 4]))
        src = rng.random(2)
        dests = rng.random((n, 2))
        mu, nu = rng.uniform(0.1, 10.0, 2)
        try:
            sc = Scenario(tuple(src), [tuple(t) for t in dests], mu, nu, make_low_snr(alpha=alpha))
            if with_relay:
                sc = sc.with_relay(random_hull_point(rng, sc))
            return sc
        except DegenerateGeometry:
            continue


def random_hull_point(rng, scenario):
    """Random convex combination of the source and destinations."""
    nodes = scenario.nodes_array()
    w = rng.dirichlet(np.ones(len(nodes)))
    return tuple(w @ nodes)


@pytest.fixture
def line_scenario():
    """s=(0,0), t=(2,0), relay halfway, unit budgets, low-SNR alpha=2."""
    return Scenario((0.0, 0.0), [(2.0, 0.0)], 1.0, 1.0, make_low_snr(alpha=2.0), relay=(1.0, 0.0))


# --------------------------------------------------------------------------- acceptance log

ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; printed again in the session summary."""

    def record(number, title, ok, detail):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
