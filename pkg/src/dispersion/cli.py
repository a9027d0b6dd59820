"""Command-line experiment runner.

Single run::

    dispersion --algorithm svl --family ring --n 64 --k 32 --l 4 --seed 7 --out run.json

Sweep (JSON file with one list per dimension)::

    dispersion --sweep sweep.json --out table.csv

Exit status: 0 ok, 2 bad configuration, 3 timeout, 4 monitor violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

from . import portgraph
from .algorithms import RULES, get_rule
from .core import (
    ConfigError,
    Configuration,
    RunResult,
    derive_seed,
    id_bound,
    initial_configuration,
    make_ids,
    place,
    run,
)
from .monitor import load_trace, replay, standard_monitors
from .portgraph import GraphError, GraphSpec, PortGraph

__all__ = [
    "RunConfig",
    "SweepConfig",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_TIMEOUT",
    "EXIT_MONITOR",
    "build",
    "run_once",
    "emit_trace",
    "replay_trace",
    "sweep",
    "sweep_rows",
    "exit_status",
    "main",
]

EXIT_OK, EXIT_CONFIG, EXIT_TIMEOUT, EXIT_MONITOR = 0, 2, 3, 4

CSV_FIELDS = [
    "algorithm", "family", "n", "m", "k", "l", "m_prime", "seed", "rep",
    "steps", "max_level", "bound_ratio", "verdicts", "status",
]


@dataclass
class RunConfig:
    algorithm: str = "svl"
    family: str = "ring"
    n: int = 16
    p: Optional[float] = None
    graph_file: Optional[str] = None
    k: int = 8
    l: int = 1  # noqa: E741
    ids: str = "perm"
    seed: int = 0
    max_steps: Optional[int] = None
    monitors: bool = True
    start: Optional[list[int]] = None
    trace: Optional[str] = None
    out: Optional[str] = None

    def validate(self) -> None:
        if self.algorithm not in RULES:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not 1 <= self.l <= self.k:
            raise ConfigError(f"need 1 <= l <= k, got l={self.l}, k={self.k}")
        if self.algorithm == "simple-dfs" and self.l != 1:
            raise ConfigError("simple-dfs assumes all agents start on one node (l = 1)")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be non-negative")
        if self.start is not None and len(set(self.start)) != self.l:
            raise ConfigError(f"--start lists {len(set(self.start))} distinct nodes, l={self.l}")
        self.explicit_ids()

    def explicit_ids(self) -> Optional[list[int]]:
        if self.ids in ("perm", "poly"):
            return None
        try:
            ids = [int(x) for x in self.ids.split(",")]
        except ValueError:
            raise ConfigError(f"--ids must be perm, poly or a comma list, got {self.ids!r}") from None
        if len(ids) != self.k:
            raise ConfigError(f"{len(ids)} explicit ids for k={self.k}")
        return ids

    def graph_spec(self) -> GraphSpec:
        if self.graph_file is not None:
            return GraphSpec("file", {"path": self.graph_file})
        params: dict = {"n": self.n}
        if self.family == "erdos-renyi":
            params["p"] = self.p if self.p is not None else default_p(self.n)
        return GraphSpec(self.family, params, derive_seed(self.seed, "graph"))


def default_p(n: int) -> float:
    return min(1.0, 2.0 * math.log(max(n, 2)) / n)


def build(cfg: RunConfig) -> tuple[PortGraph, Configuration, int]:
    """Graph, initial configuration and id bound for ``cfg``."""
    cfg.validate()
    try:
        g = portgraph.generate(cfg.graph_spec())
    except (OSError, GraphError) as exc:
        raise ConfigError(f"graph: {exc}") from exc
    if cfg.k > g.n:
        raise ConfigError(f"k={cfg.k} exceeds n={g.n}")
    if cfg.start is not None:
        starts = cfg.start
        if any(not 0 <= v < g.n for v in starts):
            raise ConfigError(f"start nodes {starts} outside [0, {g.n})")
        assignment = [starts[i * len(starts) // cfg.k] for i in range(cfg.k)]
    else:
        assignment = list(place(g, cfg.k, cfg.l, derive_seed(cfg.seed, "place")).assignment)
    ids = cfg.explicit_ids()
    if ids is None:
        ids = make_ids(cfg.k, cfg.ids, derive_seed(cfg.seed, "ids"))
        idmax = id_bound(cfg.k, cfg.ids)
    else:
        idmax = max(ids)
    return g, initial_configuration(g, assignment, ids), idmax


def _execute(cfg: RunConfig, trace_sink=None) -> RunResult:
    g, c0, idmax = build(cfg)
    monitors = standard_monitors(cfg.algorithm, idmax) if cfg.monitors else []
    return run(g, c0, get_rule(cfg.algorithm), cfg.max_steps, monitors, trace_sink)


def run_once(cfg: RunConfig) -> RunResult:
    """Run ``cfg``; writes the trace and the result JSON when paths are set."""
    if cfg.trace:
        result = emit_trace(cfg, cfg.trace)
    else:
        result = _execute(cfg)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(result.to_json())
    return result


def emit_trace(cfg: RunConfig, path: str) -> RunResult:
    with open(path, "w", encoding="utf-8") as fh:
        return _execute(cfg, fh)


def replay_trace(cfg: RunConfig, path: str):
    """Re-check a JSONL trace with the standard monitors for ``cfg``."""
    g, _, idmax = build(cfg)
    with open(path, encoding="utf-8") as fh:
        configs = load_trace(fh)
    return replay(g, configs, cfg.algorithm, idmax)


def exit_status(result: RunResult) -> int:
    if result.timed_out:
        return EXIT_TIMEOUT
    if not result.monitors_passed:
        return EXIT_MONITOR
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepConfig:
    algorithms: list[str] = field(default_factory=lambda: ["svl"])
    families: list[str] = field(default_factory=lambda: ["ring"])
    ns: list[int] = field(default_factory=lambda: [32])
    ks: list[int] = field(default_factory=lambda: [16])
    ls: list[int] = field(default_factory=lambda: [1])
    ids: list[str] = field(default_factory=lambda: ["perm"])
    reps: int = 1
    base_seed: int = 0
    p: Optional[float] = None
    max_steps: Optional[int] = None
    monitors: bool = True
    max_cells: int = 10_000
    workers: int = 1

    DIMENSIONS = ("algorithms", "families", "ns", "ks", "ls", "ids")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        for dim in self.DIMENSIONS:
            if not getattr(self, dim):
                raise ConfigError(f"sweep dimension {dim!r} is empty")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        total = math.prod(len(getattr(self, d)) for d in self.DIMENSIONS) * self.reps
        if total > self.max_cells:
            raise ConfigError(f"sweep has {total} runs, cap is {self.max_cells}")

    def runs(self) -> list[tuple[int, int, RunConfig]]:
        out = []
        cells = itertools.product(*(getattr(self, d) for d in self.DIMENSIONS))
        for index, (alg, fam, n, k, l, ids) in enumerate(cells):  # noqa: E741
            for rep in range(self.reps):
                cfg = RunConfig(
                    algorithm=alg, family=fam, n=n, p=self.p, k=k, l=l, ids=ids,
                    seed=derive_seed(self.base_seed, index, rep),
                    max_steps=self.max_steps, monitors=self.monitors,
                )
                out.append((index, rep, cfg))
        return out


def _row(task: tuple[int, int, RunConfig]) -> dict:
    _, rep, cfg = task
    row = {f: "" for f in CSV_FIELDS}
    row.update(algorithm=cfg.algorithm, family=cfg.family, n=cfg.n, k=cfg.k,
               l=cfg.l, seed=cfg.seed, rep=rep)
    try:
        g, c0, idmax = build(cfg)
    except ConfigError as exc:
        row.update(status="config-error", verdicts=str(exc))
        return row
    monitors = standard_monitors(cfg.algorithm, idmax) if cfg.monitors else []
    result = run(g, c0, get_rule(cfg.algorithm), cfg.max_steps, monitors)
    failed = [v.name for v in result.invariant_verdicts if not v.passed]
    row.update(
        n=g.n, m=g.m, m_prime=result.m_prime, max_level=result.max_level_observed,
        verdicts=";".join(failed) if failed else "pass",
    )
    if result.timed_out:
        row.update(steps="timeout", status="timeout")
    else:
        steps = result.steps_to_dispersion
        denom = result.m_prime * (result.l.bit_length() + 1)
        row.update(
            steps=steps,
            bound_ratio=f"{steps / denom if denom else 0.0:.6f}",
            status="ok" if not failed else "monitor-fail",
        )
    return row


def sweep_rows(cfg: SweepConfig) -> list[dict]:
    cfg.validate()
    tasks = cfg.runs()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_row, tasks, chunksize=4))
    return [_row(t) for t in tasks]


def sweep(cfg: SweepConfig) -> str:
    """CSV table, one row per run, plus a ``# max_bound_ratio=`` footer."""
    rows = sweep_rows(cfg)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    ratios = [float(r["bound_ratio"]) for r in rows if r["bound_ratio"] != ""]
    buf.write(f"# max_bound_ratio={max(ratios):.6f}\n" if ratios else "# max_bound_ratio=nan\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dispersion", description="Simulate mobile-agent dispersion on port graphs."
    )
    ap.add_argument("--algorithm", choices=sorted(RULES), default="svl")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--family", choices=[f for f in portgraph.FAMILIES if f != "file"],
                     default="ring")
    src.add_argument("--graph-file", help="graph in 'n m' + 'u p_u v p_v' text format")
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--p", type=float, help="edge probability for erdos-renyi")
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--l", type=int, default=1, help="number of start nodes")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--ids", default="perm", help="perm | poly | comma-separated ids")
    ap.add_argument("--start", type=_int_list, help="comma-separated start nodes")
    ap.add_argument("--max-steps", type=int)
    ap.add_argument("--no-monitors", action="store_true")
    ap.add_argument("--trace", help="write a JSONL trace here")
    ap.add_argument("--replay", help="re-check this JSONL trace instead of running")
    ap.add_argument("--save-graph", help="also write the generated graph here")
    ap.add_argument("--out", help="result file (JSON for runs, CSV for sweeps)")
    ap.add_argument("--sweep", help="JSON sweep description")
    ap.add_argument("--workers", type=int, help="worker processes for --sweep")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.sweep:
            with open(args.sweep, encoding="utf-8") as fh:
                scfg = SweepConfig.from_dict(json.load(fh))
            if args.workers:
                scfg.workers = args.workers
            table = sweep(scfg)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(table)
            else:
                sys.stdout.write(table)
            return EXIT_OK

        cfg = RunConfig(
            algorithm=args.algorithm,
            family=args.family,
            n=args.n,
            p=args.p,
            graph_file=args.graph_file,
            k=args.k,
            l=args.l,
            ids=args.ids,
            seed=args.seed,
            max_steps=args.max_steps,
            monitors=not args.no_monitors,
            start=args.start,
            trace=args.trace,
            out=args.out,
        )
        if args.save_graph:
            g, _, _ = build(cfg)
            portgraph.save(g, args.save_graph)
        if args.replay:
            verdicts = replay_trace(cfg, args.replay)
            sys.stdout.write(json.dumps([v.to_dict() for v in verdicts], indent=2) + "\n")
            return EXIT_OK if all(v.passed for v in verdicts) else EXIT_MONITOR
        result = run_once(cfg)
        if not cfg.out:
            sys.stdout.write(result.to_json())
        return exit_status(result)
    except (ConfigError, GraphError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"dispersion: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
