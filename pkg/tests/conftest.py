import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hrlcampaign.netmodel import (ArcKind, ArcSpec, DemandEntry, NodeSpec, ScenarioSpec,  # noqa: E402
                                  TruncNormal, load_scenario)


def make_scenario(nodes=("Earth", "Moon"), arcs=(), demands=(), **kw) -> ScenarioSpec:
    """A small hand-built scenario; ``nodes`` may mix ids and NodeSpec objects."""
    ns = tuple(n if isinstance(n, NodeSpec) else NodeSpec(n) for n in nodes)
    base = dict(name="tiny", missions=1, crew_count=2, habitat_mass_kg=1000.0,
                isru_production=TruncNormal(5.0, 0.0), isru_decay_pct=TruncNormal(10.0, 0.0),
                nodes=ns, arcs=tuple(arcs), demands=tuple(demands), isru_node=ns[-1].id)
    base.update(kw)
    return ScenarioSpec(**base)


def transport(src, dst, dv=0.0, tof=0, windows=((0.0, 365.0),)):
    return ArcSpec(src, dst, float(dv), tof, ArcKind.TRANSPORT, tuple(windows))


@pytest.fixture(scope="session")
def desk():
    return load_scenario("desk")


@pytest.fixture(scope="session")
def desk_det():
    return load_scenario("desk_det")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])


__all__ = ["make_scenario", "transport", "DemandEntry", "NodeSpec"]
