"""Random micro-instances for scheduler/oracle cross-checks."""

import numpy as np

from dsocsim.cluster import ResourceVector, begin_transfer
from dsocsim.priority import WeightConfig

from conftest import make_app, make_cluster, make_node, make_update


def _simplex(rng):
    w = rng.dirichlet(np.ones(4))
    w = [float(x) for x in w[:3]]
    return tuple(w + [max(0.0, 1.0 - sum(w))])


def micro_instance(rng, max_updates=8, max_nodes=3):
    """Return (cluster, candidates, constraint thresholds, weights)."""
    nodes = []
    for i in range(int(rng.integers(1, max_nodes + 1))):
        hot = rng.random() < 0.3
        base = tuple(float(rng.uniform(0.5 if hot else 0.0, 0.95)) for _ in range(4))
        nodes.append(
            make_node(
                nid=f"n{i}",
                base=base,
                link=float(rng.uniform(5.0, 40.0)),
                min_rate=float(rng.uniform(2.0, 15.0)),
                storage_mb=float(rng.uniform(50.0, 500.0)),
                update_cpu=float(rng.uniform(0.0, 0.2)),
                update_memory=float(rng.uniform(0.0, 0.2)),
            )
        )
    apps = []
    for j in range(int(rng.integers(1, 6))):
        node = nodes[int(rng.integers(len(nodes)))]
        apps.append(make_app(f"a{j}", node.id, accs=(float(rng.uniform(0.2, 1.0)),),
                             progress=float(rng.uniform(0.0, 1.0))))
    cluster = make_cluster(nodes, apps)
    for app in apps:
        if rng.random() < 0.2:
            u = make_update(f"busy-{app.id}", app, delta=float(rng.uniform(0.0, 20.0)))
            if cluster.node(app.node_id).fits(u.delta_mb):
                begin_transfer(cluster, u)
    candidates = []
    for k in range(int(rng.integers(0, max_updates + 1))):
        app = apps[int(rng.integers(len(apps)))]
        candidates.append(
            make_update(
                f"u{k}", app,
                delta=float(rng.uniform(0.0, 150.0)),
                gain=float(rng.uniform(0.0, 1.0)),
                lat=float(rng.uniform(0.0, 1.0)),
                exe=float(rng.uniform(0.0, 1.0)),
                tick=k,
            )
        )
    thr = ResourceVector(*(float(rng.uniform(0.6, 1.0)) for _ in range(4)))
    c1 = float(rng.uniform(0.0, 0.5))
    weights = WeightConfig(c1=c1, c2=1.0 - c1, s_weight=_simplex(rng), a_weight=_simplex(rng))
    return cluster, candidates, thr, weights
