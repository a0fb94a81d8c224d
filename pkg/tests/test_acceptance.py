"""Exit criteria for the simulator.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import io
import math
import time
from pathlib import Path

import numpy as np
import pytest

from dsocsim.cluster import InvariantViolation, is_constrained
from dsocsim.engine import emit_trace, run_mission
from dsocsim.priority import PriorityThresholds, WeightConfig, assign_priority, classify_pval
from dsocsim.schedulers import (
    REASON_CONSTRAINED,
    dsoc_schedule,
    greedy_schedule,
    oracle_max_feasible,
    subset_feasible,
)
from dsocsim.workload import ScenarioSpec, generate_scenario, reference_spec, sample_update_arrivals

from conftest import make_app, make_node, make_update
from instances import micro_instance

GOLDEN = Path(__file__).parent / "golden" / "reference_seed42_dsoc.trace"
SEEDS = range(1, 21)
RUNTIME_BUDGET_S = 30.0


@pytest.fixture(scope="module")
def reference_runs():
    t0 = time.perf_counter()
    runs = {}
    for seed in SEEDS:
        for strategy in ("greedy", "dsoc"):
            runs[seed, strategy] = run_mission(reference_spec(seed), strategy)
    return runs, time.perf_counter() - t0


def test_c1_strategy_ordering(reference_runs, record_acceptance):
    runs, elapsed = reference_runs
    more = sum(
        1 for s in SEEDS
        if runs[s, "greedy"][2].applied > runs[s, "dsoc"][2].applied
        and runs[s, "greedy"][2].mb_transferred > runs[s, "dsoc"][2].mb_transferred
    )
    acc = sum(1 for s in SEEDS if runs[s, "greedy"][2].final_accuracy >= runs[s, "dsoc"][2].final_accuracy)
    ok = more >= 16 and acc >= 14 and elapsed < RUNTIME_BUDGET_S
    record_acceptance(
        1, "greedy applies/transfers more, accuracy >= dsoc", ok,
        f"more updates+MB {more}/20 (need 16), accuracy {acc}/20 (need 14), {elapsed:.1f}s (budget 30s)",
    )
    assert more >= 16
    assert acc >= 14
    assert elapsed < RUNTIME_BUDGET_S


def _decision_violations(cluster, cands, thr, d, local_max):
    bad = 0
    by_id = {u.id: u for u in cands}
    chosen = [by_id[i] for i in d.assigned]
    if len(chosen) > d.k or not subset_feasible(chosen, cluster, thr):
        bad += 1
    if not any(set(d.assigned) <= m for m in oracle_max_feasible(cands, cluster, thr)):
        bad += 1
    if local_max:
        for uid in d.delayed:
            u = by_id[uid]
            if d.delay_reasons.get(uid) == REASON_CONSTRAINED:
                held = [c.delta_mb for c in chosen if c.node_id == u.node_id]
                if not is_constrained(cluster.node(u.node_id), thr, held):
                    bad += 1
            elif subset_feasible(chosen + [u], cluster, thr):
                bad += 1
    return bad


def test_c2_oracle_equivalence(record_acceptance):
    rng = np.random.default_rng(20190601)
    violations = 0
    sizes = []
    for _ in range(200):
        cluster, cands, thr, weights = micro_instance(rng, max_updates=8, max_nodes=3)
        assert len(cands) <= 8 and len(cluster.nodes) <= 3
        sizes.append(len(cands))
        violations += _decision_violations(cluster, cands, thr, greedy_schedule(cands, cluster, thr), False)
        violations += _decision_violations(cluster, cands, thr, dsoc_schedule(cands, cluster, weights, thr), True)
    record_acceptance(2, "scheduler decisions feasible and DSOC locally maximal", violations == 0,
                      f"{violations} violations over 200 instances, mean size {np.mean(sizes):.1f}")
    assert violations == 0


def test_c3_priority_properties(record_acceptance):
    rng = np.random.default_rng(7)
    thr = PriorityThresholds()
    violations = 0
    for _ in range(10_000):
        c1 = float(rng.uniform(0.0, 0.5))
        sw = rng.dirichlet(np.ones(4))
        aw = rng.dirichlet(np.ones(4))
        sw = tuple(float(x) for x in sw[:3]) + (max(0.0, 1.0 - float(sum(sw[:3]))),)
        aw = tuple(float(x) for x in aw[:3]) + (max(0.0, 1.0 - float(sum(aw[:3]))),)
        w = WeightConfig(c1=c1, c2=1.0 - c1, s_weight=sw, a_weight=aw)
        util = tuple(float(x) for x in rng.uniform(0.0, 1.0, 4))
        prog, lat, exe = (float(x) for x in rng.uniform(0.0, 1.0, 3))
        g_lo, g_hi = sorted(float(x) for x in rng.uniform(0.0, 1.0, 2))
        app = make_app(progress=prog)
        node = make_node(base=util)
        lo = assign_priority(make_update("u", app, gain=g_lo, lat=lat, exe=exe), node, app, w, thr)
        hi = assign_priority(make_update("u", app, gain=g_hi, lat=lat, exe=exe), node, app, w, thr)
        # range
        if not all(0.0 <= v <= 1.0 for s in (lo, hi) for v in (s.sp, s.ap, s.pval)):
            violations += 1
        # monotone in accuracy gain
        if hi.pval < lo.pval - 1e-12:
            violations += 1
        # monotone in utilization
        k = int(rng.integers(4))
        busier = list(util)
        busier[k] = float(rng.uniform(util[k], 1.0))
        b = assign_priority(make_update("u", app, gain=g_lo, lat=lat, exe=exe), make_node(base=busier), app, w, thr)
        if b.pval > lo.pval + 1e-12:
            violations += 1
        # c1 = 0 reduces pval to AP
        w0 = WeightConfig(c1=0.0, c2=1.0, s_weight=sw, a_weight=aw)
        z = assign_priority(make_update("u", app, gain=g_lo, lat=lat, exe=exe), node, app, w0, thr)
        if abs(z.pval - z.ap) > 1e-12:
            violations += 1
        # class matches thresholds, and ordering of classes follows pval
        for s in (lo, hi, b, z):
            if s.cls is not classify_pval(s.pval, thr):
                violations += 1
        if hi.pval > lo.pval and hi.cls.rank > lo.cls.rank:
            violations += 1
    record_acceptance(3, "priority range/monotonicity/degeneracy/classes", violations == 0,
                      f"{violations} violations over 10000 checks")
    assert violations == 0


def test_c4_workload_statistics(record_acceptance):
    spec = reference_spec(2024).replace(frequent_fraction=0.5)
    state = generate_scenario(spec)
    frequent = {c.id for _, c in state.cluster.classifiers() if c.frequent_update}
    n_freq = len(frequent)
    n_rest = spec.classifier_total - n_freq
    counts, hits = [], {True: 0, False: 0}
    drawn = 0
    t = 0
    while drawn < 10_000:
        ups = sample_update_arrivals(state, t, state.rng)
        counts.append(len(ups))
        for u in ups:
            hits[u.classifier_id in frequent] += 1
        drawn += len(ups)
        t += 1
    ratio = hits[True] / hits[False]
    mean = float(np.mean(counts))
    ratio_ok = n_freq == n_rest and abs(ratio - 3.0) <= 0.3
    mean_ok = abs(mean - spec.arrival_rate) <= 0.025 * spec.arrival_rate

    exact = True
    for seed in range(25):
        for total in (40, 60, 97, 140):
            s = ScenarioSpec(seed=seed, classifier_total=total)
            st = generate_scenario(s)
            n_f = sum(1 for _, c in st.cluster.classifiers() if c.frequent_update)
            n_c = sum(len(g.members) for g in st.groups)
            exact &= n_f == math.ceil(0.4 * total) and n_c == math.ceil(0.5 * total)
    ok = ratio_ok and mean_ok and exact
    record_acceptance(4, "workload statistics", ok,
                      f"target ratio {ratio:.3f} (3 +/- 0.3), Poisson mean {mean:.4f} over {t} ticks "
                      f"(2 +/- 0.05), ceiling fractions exact: {exact}")
    assert ratio_ok and mean_ok and exact


def _render(strategy="dsoc", seed=42):
    _, trace, _ = run_mission(reference_spec(seed), strategy)
    buf = io.StringIO()
    emit_trace(trace, buf)
    return buf.getvalue().encode("utf-8")


def test_c5_golden_trace(record_acceptance):
    first, second = _render(), _render()
    golden = GOLDEN.read_bytes()
    ok = first == second == golden
    record_acceptance(5, "byte-identical trace (reference, seed 42, dsoc)", ok,
                      f"{len(first)} bytes, repeat equal: {first == second}, golden equal: {first == golden}")
    assert first == second
    assert first == golden


def _safety_problems(state, trace, summary):
    problems = 0
    busy = {}
    owner = {}
    for e in trace:
        if e.kind == "TickMetrics":
            for k, v in e.payload:
                if k.startswith("util_") and any(float(x) > 1.0 for x in v.split("|")):
                    problems += 1
        elif e.kind == "UpdateAssigned":
            app = e.get("app")
            if app in busy:
                problems += 1
            busy[app] = e.subject
            owner[e.subject] = app
        elif e.kind == "UpdateCompleted":
            busy.pop(owner[e.subject], None)
    for node in state.cluster.nodes.values():
        problems += sum(1 for v in node.projected_load() if v > 1.0 + 1e-9)
    if summary.arrived != summary.applied + summary.dropped + summary.pending:
        problems += 1
    return problems


def test_c6_resource_safety(reference_runs, record_acceptance):
    runs, _ = reference_runs
    problems = 0
    for state, trace, summary in runs.values():
        problems += _safety_problems(state, trace, summary)
    # the micro-instance and golden runs are covered by the same checks inside tick()
    try:
        for strategy in ("greedy", "dsoc"):
            problems += _safety_problems(*run_mission(reference_spec(42), strategy))
    except InvariantViolation:
        problems += 1
    record_acceptance(6, "resource safety, worker exclusivity, accounting closure", problems == 0,
                      f"{problems} problems across {len(runs) + 2} missions")
    assert problems == 0
