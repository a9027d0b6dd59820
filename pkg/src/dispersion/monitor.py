"""Per-step invariant monitors and derived metrics.

A monitor is a read-only observer. :func:`dispersion.core.run` calls
``start(g, c0)`` once, ``observe(g, prev, cur)`` after every step and
``finish(g, last)`` at the end. The first violation is kept in
``monitor.verdict``; later ones are ignored, and the run is never stopped.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from typing import IO, Iterable, Optional

from .core import AgentState, Configuration, Mode, Verdict
from .portgraph import PortGraph

__all__ = [
    "INF",
    "UnknownAgent",
    "UnknownRule",
    "Monitor",
    "vlevel",
    "vlevels",
    "lmin",
    "level_cap",
    "standard_monitors",
    "MONITOR_NAMES",
    "load_trace",
    "replay",
]

INF = math.inf
LEADER, ZOMBIE, SETTLED = Mode.LEADER, Mode.ZOMBIE, Mode.SETTLED

_ALLOWED = {
    (LEADER, LEADER), (LEADER, ZOMBIE), (LEADER, SETTLED),
    (ZOMBIE, ZOMBIE), (ZOMBIE, SETTLED),
    (SETTLED, SETTLED),
}


class UnknownAgent(KeyError):
    pass


class UnknownRule(ValueError):
    pass


def level_cap(l: int) -> int:  # noqa: E741
    """Largest integer not exceeding ``log2(l) + 1``."""
    return l.bit_length()


def vlevels(c: Configuration) -> list[int]:
    """Virtual level of every agent (by index): the max level at its node."""
    top: dict[int, int] = {}
    for s, v in zip(c.states, c.nodes):
        if s.level > top.get(v, -1):
            top[v] = s.level
    return [top[v] for v in c.nodes]


def vlevel(c: Configuration, agent_id: int) -> int:
    try:
        i = c.index_of(agent_id)
    except KeyError:
        raise UnknownAgent(agent_id) from None
    return vlevels(c)[i]


def lmin(c: Configuration) -> float:
    """Minimum virtual level over zombies and active leaders; ``INF`` if none."""
    crowd = Counter(c.nodes)
    vl = vlevels(c)
    vals = [
        vl[i]
        for i, (s, v) in enumerate(zip(c.states, c.nodes))
        if s.mode is ZOMBIE or (s.mode is LEADER and crowd[v] >= 2)
    ]
    return min(vals, default=INF)


class Monitor:
    name = "monitor"
    scope: tuple[str, ...] = ("all",)

    def __init__(self) -> None:
        self.verdict = Verdict(self.name)

    def start(self, g: PortGraph, c0: Configuration) -> None:
        self.check(g, None, c0)

    def observe(self, g: PortGraph, prev: Configuration, cur: Configuration) -> None:
        self.check(g, prev, cur)

    def check(
        self, g: PortGraph, prev: Optional[Configuration], cur: Configuration
    ) -> None:
        pass

    def finish(self, g: PortGraph, last: Configuration) -> None:
        pass

    def fail(self, t: int, details: str) -> None:
        self.verdict.fail(t, details)


class LevelBound(Monitor):
    name = "level-bound"
    scope = ("svl",)

    def start(self, g, c0):
        self.cap = level_cap(len(set(c0.nodes)))
        self.check(g, None, c0)

    def check(self, g, prev, cur):
        for s in cur.states:
            if s.level > self.cap:
                self.fail(cur.t, f"agent {s.id} level {s.level} > cap {self.cap}")
                return


class SettledImmobility(Monitor):
    name = "settled-immobility"

    def check(self, g, prev, cur):
        if prev is None:
            return
        for a, b, u, v in zip(prev.states, cur.states, prev.nodes, cur.nodes):
            if a.mode is SETTLED and (b.mode is not SETTLED or u != v):
                self.fail(cur.t, f"settled agent {a.id} moved or changed mode")
                return


class UniqueSettled(Monitor):
    name = "unique-settled"

    def start(self, g, c0):
        self.ever: set[int] = set()
        self.check(g, None, c0)

    def check(self, g, prev, cur):
        here: Counter = Counter()
        for s, v in zip(cur.states, cur.nodes):
            if s.mode is SETTLED:
                here[v] += 1
        for v, count in here.items():
            if count > 1:
                self.fail(cur.t, f"{count} settled agents at node {v}")
                return
        if prev is not None:
            for a, b, v in zip(prev.states, cur.states, cur.nodes):
                if a.mode is not SETTLED and b.mode is SETTLED:
                    if v in self.ever:
                        self.fail(cur.t, f"second settle event at node {v}")
                        return
                    self.ever.add(v)
        else:
            self.ever.update(here)


class ModeOrder(Monitor):
    name = "mode-order"

    def check(self, g, prev, cur):
        if prev is None:
            return
        for a, b in zip(prev.states, cur.states):
            if (a.mode, b.mode) not in _ALLOWED:
                self.fail(cur.t, f"agent {a.id}: {a.mode.value} -> {b.mode.value}")
                return


class VlevelMonotone(Monitor):
    name = "vlevel-monotone"
    scope = ("svl",)

    def start(self, g, c0):
        self.prev_vl = vlevels(c0)

    def check(self, g, prev, cur):
        vl = vlevels(cur)
        for i, (a, b) in enumerate(zip(self.prev_vl, vl)):
            if b < a:
                self.fail(cur.t, f"agent {cur.states[i].id} vlevel {a} -> {b}")
                break
        self.prev_vl = vl


class LminProgress(Monitor):
    name = "lmin-monotone-progress"
    scope = ("svl",)

    def start(self, g, c0):
        self.cap = level_cap(len(set(c0.nodes)))
        self.prev = lmin(c0)
        self.values = {self.prev}

    def check(self, g, prev, cur):
        now = lmin(cur)
        if now < self.prev:
            self.fail(cur.t, f"lmin decreased {self.prev} -> {now}")
        self.prev = now
        self.values.add(now)

    def finish(self, g, last):
        if last.dispersed() and self.prev != INF:
            self.fail(last.t, f"lmin is {self.prev} at dispersion")
        # levels 0..cap plus the INF sentinel
        if len(self.values) > self.cap + 2:
            self.fail(last.t, f"{len(self.values)} distinct lmin values, cap {self.cap + 2}")


class SlotDiscipline(Monitor):
    """Leaders move at slot 0 (advance) or slot 1 (backtrack); zombies on
    their own move at slots 2 and 3."""

    name = "slot-discipline"
    scope = ("svl",)

    def check(self, g, prev, cur):
        if prev is None:
            return
        groups: dict[int, list[int]] = defaultdict(list)
        for i, v in enumerate(prev.nodes):
            groups[v].append(i)
        for v, idx in groups.items():
            movers = [i for i in idx if cur.nodes[i] != v]
            if not movers:
                continue
            slot = prev.states[idx[0]].slot
            leader = next((cur.states[i] for i in idx if cur.states[i].mode is LEADER), None)
            if leader is None:
                if slot not in (2, 3):
                    self.fail(cur.t, f"leaderless move from node {v} at slot {slot}")
                    return
                continue
            if slot == 0:
                expect = (leader.inport + 1) % g.degree(v)
            elif slot == 1:
                expect = leader.inport
            else:
                self.fail(cur.t, f"leader {leader.id} moved at slot {slot}")
                return
            if any(cur.states[i].pout != expect for i in movers):
                kind = "advance" if slot == 0 else "backtrack"
                self.fail(cur.t, f"leader {leader.id} at slot {slot} is not a {kind}")
                return


class NoStrongZombie(Monitor):
    name = "no-strong-zombie"
    scope = ("svl",)

    def check(self, g, prev, cur):
        groups: dict[int, list[AgentState]] = defaultdict(list)
        for s, v in zip(cur.states, cur.nodes):
            groups[v].append(s)
        for v, group in groups.items():
            best = max(s.strength() for s in group)
            if not any(s.mode is not ZOMBIE and s.strength() == best for s in group):
                self.fail(cur.t, f"a zombie is strongest at node {v}")
                return


class EdgeBudget(Monitor):
    name = "edge-budget"
    scope = ("simple-dfs",)

    def start(self, g, c0):
        self.crossings: Counter = Counter()

    def check(self, g, prev, cur):
        if prev is None:
            return
        # agents crossing an edge together count as one traversal
        used = {(u, v) for u, v in zip(prev.nodes, cur.nodes) if u != v}
        for u, v in sorted(used):
            e = (min(u, v), max(u, v))
            self.crossings[e] += 1
            if self.crossings[e] > 4:
                self.fail(cur.t, f"edge {e} traversed {self.crossings[e]} times")


class MemoryAudit(Monitor):
    name = "memory-audit"

    def __init__(self, rule_name: str, idmax: Optional[int] = None) -> None:
        super().__init__()
        self.rule_name = rule_name
        self.idmax = idmax

    def start(self, g, c0):
        l = len(set(c0.nodes))  # noqa: E741
        self.cap = level_cap(l) if self.rule_name == "svl" else 0
        if self.idmax is None:
            self.idmax = max(s.id for s in c0.states)
        self.check(g, None, c0)

    def check(self, g, prev, cur):
        top = g.max_degree
        for s, v in zip(cur.states, cur.nodes):
            problem = None
            if not 0 <= s.level <= self.cap:
                problem = f"level {s.level}"
            elif not 1 <= s.leaderid <= self.idmax or not 1 <= s.id <= self.idmax:
                problem = f"leaderid {s.leaderid}"
            elif not 0 <= s.slot < 4:
                problem = f"slot {s.slot}"
            elif not -1 <= s.pin < g.degree(v):
                problem = f"pin {s.pin}"
            else:
                for name in ("last", "inport", "pout"):
                    if not -1 <= getattr(s, name) < max(top, 1):
                        problem = f"{name} {getattr(s, name)}"
            if problem:
                self.fail(cur.t, f"agent {s.id}: {problem} out of range")
                return


_FACTORIES = {
    "level-bound": lambda rule, idmax: LevelBound(),
    "settled-immobility": lambda rule, idmax: SettledImmobility(),
    "unique-settled": lambda rule, idmax: UniqueSettled(),
    "mode-order": lambda rule, idmax: ModeOrder(),
    "vlevel-monotone": lambda rule, idmax: VlevelMonotone(),
    "lmin-monotone-progress": lambda rule, idmax: LminProgress(),
    "slot-discipline": lambda rule, idmax: SlotDiscipline(),
    "no-strong-zombie": lambda rule, idmax: NoStrongZombie(),
    "edge-budget": lambda rule, idmax: EdgeBudget(),
    "memory-audit": lambda rule, idmax: MemoryAudit(rule, idmax),
}
MONITOR_NAMES = tuple(_FACTORIES)

_SCOPES = {
    "svl": [n for n in MONITOR_NAMES if n != "edge-budget"],
    "simple-dfs": [
        "settled-immobility", "unique-settled", "mode-order", "edge-budget", "memory-audit",
    ],
    "zombie": ["settled-immobility", "unique-settled", "mode-order", "memory-audit"],
}


def standard_monitors(rule_name: str, idmax: Optional[int] = None) -> list[Monitor]:
    """Fresh monitors for one run of ``rule_name``.

    ``edge-budget`` assumes all agents start on one node; only attach the
    simple-dfs set to such runs.
    """
    if rule_name not in _SCOPES:
        raise UnknownRule(rule_name)
    return [_FACTORIES[n](rule_name, idmax) for n in _SCOPES[rule_name]]


# ---------------------------------------------------------------------------
# trace replay
# ---------------------------------------------------------------------------


def _config_from_record(rec: dict) -> Configuration:
    states, nodes = [], []
    for a in rec["agents"]:
        states.append(
            AgentState(
                id=a["id"], mode=Mode(a["mode"]), slot=a["slot"], level=a["level"],
                leaderid=a["leaderid"], last=a["last"], inport=a["inport"],
                pin=a["pin"], pout=a["pout"],
            )
        )
        nodes.append(a["node"])
    return Configuration(rec["t"], tuple(states), tuple(nodes))


def load_trace(source: IO[str] | Iterable[str]) -> list[Configuration]:
    return [_config_from_record(json.loads(line)) for line in source if line.strip()]


def replay(
    g: PortGraph,
    configs: list[Configuration],
    rule_name: str,
    idmax: Optional[int] = None,
) -> list[Verdict]:
    """Run the standard monitors over a recorded configuration sequence."""
    monitors = standard_monitors(rule_name, idmax)
    for mon in monitors:
        mon.start(g, configs[0])
    for prev, cur in zip(configs, configs[1:]):
        for mon in monitors:
            mon.observe(g, prev, cur)
    for mon in monitors:
        mon.finish(g, configs[-1])
    return [mon.verdict for mon in monitors]
