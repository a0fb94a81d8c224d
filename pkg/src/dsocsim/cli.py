"""Command-line entry point.

    dsocsim gen [--out F] [flags]
    dsocsim run --scenario F --strategy greedy|dsoc [--seed N] [--ticks N] [--trace F] [--summary F]
    dsocsim compare --scenario F --seeds N --out F --curve F [--ticks N] [--jobs N]

Exit codes: 0 success, 1 configuration or usage error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

from . import config
from .cluster import InvariantViolation, ScenarioError
from .engine import Summary, emit_trace, run_mission, write_curve_csv, write_summary_csv
from .priority import WeightConfig
from .schedulers import STRATEGIES
from .workload import CLASSIFIER_RANGE, ScenarioSpec

log = logging.getLogger("dsocsim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    scenario: str
    strategy: str
    seed: Optional[int] = None
    max_ticks: Optional[int] = None
    trace: Optional[str] = None
    summary: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.scenario:
            raise UsageError("--scenario is required")
        if self.strategy not in STRATEGIES:
            raise UsageError(f"--strategy must be one of {', '.join(STRATEGIES)}")
        for name in ("trace", "summary"):
            if getattr(self, name) == "":
                raise UsageError(f"--{name} needs a path")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dsocsim", description="Classifier-update orchestration simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a scenario file")
    g.add_argument("--out", "-o", help="output path (default: stdout)")
    g.add_argument("--seed", type=int)
    g.add_argument("--nodes", type=int, dest="node_count")
    g.add_argument("--apps", type=int, dest="app_count")
    g.add_argument("--classifiers", type=int, dest="classifier_total")
    g.add_argument("--no-range-check", action="store_true",
                   help=f"allow classifier totals outside {CLASSIFIER_RANGE}")
    g.add_argument("--frequent-fraction", type=float)
    g.add_argument("--correlated-fraction", type=float)
    g.add_argument("--penalty-multiplier", type=float)
    g.add_argument("--drift", type=float, dest="drift_per_tick")
    g.add_argument("--accuracy-floor", type=float)
    g.add_argument("--arrival-rate", type=float)
    g.add_argument("--progress-rate", type=float)
    g.add_argument("--mission-length", type=int, dest="mission_length_hint")
    g.add_argument("--link", type=float, dest="link_mb_per_tick")
    g.add_argument("--min-rate", type=float, dest="min_rate_mb")
    g.add_argument("--c1", type=float)
    g.add_argument("--c2", type=float)
    g.add_argument("--relax-c1-c2", action="store_true",
                   help="only require c1 + c2 = 1")

    r = sub.add_parser("run", help="run one mission")
    r.add_argument("--scenario", required=True)
    r.add_argument("--strategy", required=True, choices=STRATEGIES)
    r.add_argument("--seed", type=int)
    r.add_argument("--ticks", type=int, dest="max_ticks")
    r.add_argument("--trace")
    r.add_argument("--summary")

    c = sub.add_parser("compare", help="run both strategies over seeds 1..N")
    c.add_argument("--scenario", required=True)
    c.add_argument("--seeds", type=int, required=True)
    c.add_argument("--out", required=True, help="per-seed comparison CSV")
    c.add_argument("--curve", required=True, help="accuracy-vs-completion CSV")
    c.add_argument("--ticks", type=int, dest="max_ticks")
    c.add_argument("--jobs", type=int, default=1, help="worker processes")
    return p


_GEN_FIELDS = (
    "seed", "node_count", "app_count", "classifier_total", "frequent_fraction",
    "correlated_fraction", "penalty_multiplier", "drift_per_tick", "accuracy_floor",
    "arrival_rate", "progress_rate", "mission_length_hint", "link_mb_per_tick", "min_rate_mb",
)


def cmd_gen(args: argparse.Namespace) -> int:
    changes = {k: getattr(args, k) for k in _GEN_FIELDS if getattr(args, k) is not None}
    if args.no_range_check:
        changes["enforce_classifier_range"] = False
    base = ScenarioSpec()
    if args.c1 is not None or args.c2 is not None or args.relax_c1_c2:
        if args.c1 is not None:
            c1 = args.c1
        elif args.c2 is not None:
            c1 = 1.0 - args.c2
        else:
            c1 = base.weights.c1
        c2 = args.c2 if args.c2 is not None else 1.0 - c1
        changes["weights"] = WeightConfig(
            c1=c1, c2=c2, s_weight=base.weights.s_weight, a_weight=base.weights.a_weight,
            relax_order=args.relax_c1_c2,
        )
    spec = base.replace(**changes)
    lo, hi = CLASSIFIER_RANGE
    if not lo <= spec.classifier_total <= hi:
        log.warning("classifier_total %d is outside the usual %d-%d range", spec.classifier_total, lo, hi)
    text = config.dumps(spec)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_spec(path: str, seed: Optional[int]) -> ScenarioSpec:
    spec = config.load(path)
    if seed is not None:
        spec = spec.replace(seed=seed)
    return spec


def cmd_run(cfg: RunConfig) -> int:
    spec = _load_spec(cfg.scenario, cfg.seed)
    _, trace, summary = run_mission(spec, cfg.strategy, cfg.max_ticks, record_trace=cfg.trace is not None)
    if cfg.trace:
        with open(cfg.trace, "w", encoding="utf-8", newline="\n") as fh:
            emit_trace(trace, fh)
    if cfg.summary:
        with open(cfg.summary, "w", encoding="utf-8", newline="\n") as fh:
            write_summary_csv([summary], fh)
    print(
        f"strategy={summary.strategy} seed={summary.seed} completion_tick={summary.completion_tick} "
        f"final_accuracy={summary.final_accuracy:.6f} updates_applied={summary.applied} "
        f"mb_transferred={summary.mb_transferred:.6f}"
    )
    return EXIT_OK


def _one(job) -> Summary:
    spec, strategy, max_ticks = job
    return run_mission(spec, strategy, max_ticks, record_trace=False)[2]


def compare(spec: ScenarioSpec, seeds: int, max_ticks: Optional[int] = None, jobs: int = 1) -> List[Summary]:
    """Both strategies on seeds 1..N, ordered by (seed, strategy)."""
    if seeds < 1:
        raise UsageError("--seeds must be >= 1")
    work = [(spec.replace(seed=s), strat, max_ticks) for s in range(1, seeds + 1) for strat in STRATEGIES]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one, work))
    return [_one(w) for w in work]


def cmd_compare(args: argparse.Namespace) -> int:
    spec = _load_spec(args.scenario, None)
    rows = compare(spec, args.seeds, args.max_ticks, args.jobs)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        write_summary_csv(rows, fh)
    with open(args.curve, "w", encoding="utf-8", newline="\n") as fh:
        write_curve_csv(rows, fh)
    by_seed = {}
    for s in rows:
        by_seed.setdefault(s.seed, {})[s.strategy] = s
    more = sum(1 for r in by_seed.values() if r["greedy"].applied > r["dsoc"].applied)
    print(f"seeds={len(by_seed)} greedy_more_updates={more}/{len(by_seed)}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"dsocsim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
    )
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "run":
            return cmd_run(RunConfig(args.scenario, args.strategy, args.seed, args.max_ticks,
                                     args.trace, args.summary))
        return cmd_compare(args)
    except InvariantViolation as exc:
        print(f"dsocsim: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, ScenarioError, OSError, ValueError) as exc:
        print(f"dsocsim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
