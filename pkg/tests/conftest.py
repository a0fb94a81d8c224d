import numpy as np
import pytest

from dsocsim.cluster import (
    Application,
    Classifier,
    Cluster,
    Node,
    NodeCapacity,
    ResourceVector,
    UpdateRequest,
)
from dsocsim.state import SimState
from dsocsim.workload import ScenarioSpec

ACCEPTANCE_LINES = []


def make_node(nid="n0", base=(0.0, 0.0, 0.0, 0.0), link=10.0, min_rate=1.0,
              storage_mb=10_000.0, update_cpu=0.0, update_memory=0.0):
    return Node(
        id=nid,
        capacity=NodeCapacity(storage_mb=storage_mb, link_mb_per_tick=link),
        base_load=ResourceVector(*base),
        update_cpu=update_cpu,
        update_memory=update_memory,
        min_rate_mb=min_rate,
    )


def make_app(aid="a0", node_id="n0", accs=(0.5,), progress=0.0):
    return Application(
        id=aid,
        node_id=node_id,
        classifiers=[Classifier(id=f"{aid}c{i}", accuracy=a) for i, a in enumerate(accs)],
        progress=progress,
    )


def make_update(uid, app, delta=10.0, gain=0.1, lat=0.0, exe=0.0, tick=0, classifier=None):
    return UpdateRequest(
        id=uid,
        app_id=app.id,
        node_id=app.node_id,
        classifier_id=classifier or app.classifiers[0].id,
        delta_mb=delta,
        accuracy_gain=gain,
        latency_reduction=lat,
        exec_reduction=exe,
        arrival_tick=tick,
    )


def make_cluster(nodes, apps):
    return Cluster({n.id: n for n in nodes}, {a.id: a for a in apps})


def quiet_spec(**kw):
    """A spec with no arrivals and no drift, for hand-built states."""
    base = dict(arrival_rate=0.0, drift_per_tick=0.0, enforce_classifier_range=False,
                classifier_total=1, app_count=1, node_count=1,
                correlated_fraction=0.0)
    base.update(kw)
    return ScenarioSpec(**base)


def make_state(cluster, spec=None, groups=()):
    return SimState(spec=spec or quiet_spec(), cluster=cluster,
                    rng=np.random.default_rng(0), groups=list(groups))


@pytest.fixture
def record_acceptance():
    def _record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
