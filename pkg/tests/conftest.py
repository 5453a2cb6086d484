import sys

import pytest

from cropwsn.network import Network, NodeSetup
from cropwsn.radio import Position
from cropwsn.routing import factory_for_label


def line(n, spacing=50.0):
    return [Position(i * spacing, 0.0) for i in range(n)]


def make_net(positions, label="AODV", seed=7, energy=5000.0, **kw):
    setup = NodeSetup(list(positions), [energy] * len(positions), sink=0)
    return Network(setup, factory_for_label(label), seed=seed, **kw)


@pytest.fixture
def chain():
    return lambda n=4, label="AODV", **kw: make_net(line(n), label, **kw)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
