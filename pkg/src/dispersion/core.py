"""Synchronous execution engine for mobile agents on a port graph.

One call to :func:`step` maps configuration ``C_t`` to ``C_{t+1}``: every
occupied node runs the local rule once on copies of its agents, then all
agents with ``pout != -1`` move at the same time.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Callable, Iterable, Optional, Sequence

from .portgraph import PortGraph, m_prime, neighbor_via

__all__ = [
    "Mode",
    "AgentState",
    "NodeContext",
    "Configuration",
    "Placement",
    "RunResult",
    "Verdict",
    "ConfigError",
    "DuplicateId",
    "BadNode",
    "KExceedsN",
    "RuleEmittedInvalidPort",
    "initial_configuration",
    "step",
    "is_legitimate",
    "run",
    "place",
    "make_ids",
    "id_bound",
    "default_max_steps",
    "derive_seed",
    "trace_record",
]


class ConfigError(ValueError):
    """Invalid run setup (ids, placement, parameters)."""


class DuplicateId(ConfigError):
    pass


class BadNode(ConfigError):
    pass


class KExceedsN(ConfigError):
    pass


class RuleEmittedInvalidPort(RuntimeError):
    pass


class Mode(enum.Enum):
    LEADER = "leader"
    ZOMBIE = "zombie"
    SETTLED = "settled"


@dataclass(slots=True)
class AgentState:
    """Everything an agent stores. ``groupid`` is used by the zombie baseline only."""

    id: int
    mode: Mode = Mode.LEADER
    slot: int = 0
    level: int = 0
    leaderid: int = 0
    last: int = 0
    inport: int = -1
    pin: int = -1
    pout: int = -1
    groupid: int = -1

    @classmethod
    def initial(cls, agent_id: int) -> "AgentState":
        return cls(id=agent_id, leaderid=agent_id)

    def copy(self) -> "AgentState":
        return AgentState(
            self.id, self.mode, self.slot, self.level, self.leaderid,
            self.last, self.inport, self.pin, self.pout, self.groupid,
        )

    def strength(self) -> tuple[int, int]:
        return (self.level, self.leaderid)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "mode": self.mode.value,
            "slot": self.slot,
            "level": self.level,
            "leaderid": self.leaderid,
            "last": self.last,
            "inport": self.inport,
            "pin": self.pin,
            "pout": self.pout,
        }


@dataclass
class NodeContext:
    """What the agents at one node can see: the degree and each other."""

    degree: int
    agents: list[AgentState]

    @property
    def settled(self) -> Optional[AgentState]:
        found = [a for a in self.agents if a.mode is Mode.SETTLED]
        if len(found) > 1:
            raise AssertionError(f"{len(found)} settled agents share a node")
        return found[0] if found else None


LocalRule = Callable[[NodeContext], object]


@dataclass(frozen=True)
class Configuration:
    """Global state: agent ``i`` is in state ``states[i]`` at node ``nodes[i]``."""

    t: int
    states: tuple[AgentState, ...]
    nodes: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.states)

    def occupancy(self) -> dict[int, list[int]]:
        """Node -> agent indices, nodes in ascending order."""
        occ: dict[int, list[int]] = defaultdict(list)
        for i, v in enumerate(self.nodes):
            occ[v].append(i)
        return dict(sorted(occ.items()))

    def dispersed(self) -> bool:
        return len(set(self.nodes)) == len(self.nodes)

    def index_of(self, agent_id: int) -> int:
        for i, s in enumerate(self.states):
            if s.id == agent_id:
                return i
        raise KeyError(agent_id)


@dataclass(frozen=True)
class Placement:
    """Start node of each agent (by agent index)."""

    assignment: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.assignment)

    @property
    def l(self) -> int:  # noqa: E743
        return len(set(self.assignment))


@dataclass
class Verdict:
    name: str
    passed: bool = True
    first_failure_step: Optional[int] = None
    details: str = ""

    def fail(self, t: int, details: str) -> None:
        if self.passed:
            self.passed = False
            self.first_failure_step = t
            self.details = details

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "first_failure_step": self.first_failure_step,
            "details": self.details,
        }


@dataclass
class RunResult:
    steps_to_dispersion: Optional[int]
    max_level_observed: int
    m_prime: int
    l: int  # noqa: E741
    k: int
    moves_total: int
    steps_executed: int
    invariant_verdicts: list[Verdict] = field(default_factory=list)

    @property
    def timed_out(self) -> bool:
        return self.steps_to_dispersion is None

    @property
    def monitors_passed(self) -> bool:
        return all(v.passed for v in self.invariant_verdicts)

    def to_dict(self) -> dict:
        return {
            "steps_to_dispersion": (
                "timeout" if self.steps_to_dispersion is None else self.steps_to_dispersion
            ),
            "max_level_observed": self.max_level_observed,
            "m_prime": self.m_prime,
            "l": self.l,
            "k": self.k,
            "moves_total": self.moves_total,
            "steps_executed": self.steps_executed,
            "invariant_verdicts": [v.to_dict() for v in self.invariant_verdicts],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary printable parts."""
    digest = hashlib.blake2b(":".join(map(str, parts)).encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def id_bound(k: int, scheme: str = "perm") -> int:
    if scheme == "perm":
        return k
    if scheme == "poly":
        return k * k
    raise ConfigError(f"unknown id scheme {scheme!r}")


def make_ids(k: int, scheme: str = "perm", seed: int = 0) -> list[int]:
    """Distinct ids: a permutation of 1..k, or a sample from 1..k^2 ("poly")."""
    rng = random.Random(seed)
    if scheme == "perm":
        ids = list(range(1, k + 1))
        rng.shuffle(ids)
        return ids
    return rng.sample(range(1, id_bound(k, scheme) + 1), k)


def place(g: PortGraph, k: int, l: int, seed: int = 0) -> Placement:  # noqa: E741
    """Put ``k`` agents on ``l`` distinct random nodes, each getting at least one."""
    if not 1 <= l <= k <= g.n:
        raise ConfigError(f"need 1 <= l <= k <= n, got l={l}, k={k}, n={g.n}")
    rng = random.Random(seed)
    starts = rng.sample(range(g.n), l)
    cuts = sorted(rng.sample(range(1, k), l - 1))
    sizes = [b - a for a, b in zip([0, *cuts], [*cuts, k])]
    assignment = [v for v, size in zip(starts, sizes) for _ in range(size)]
    return Placement(tuple(assignment))


def initial_configuration(
    g: PortGraph, placement: Placement | Sequence[int], ids: Sequence[int]
) -> Configuration:
    assignment = tuple(
        placement.assignment if isinstance(placement, Placement) else placement
    )
    if len(ids) != len(assignment):
        raise ConfigError(f"{len(ids)} ids for {len(assignment)} placed agents")
    if len(set(ids)) != len(ids):
        raise DuplicateId(f"agent ids are not distinct: {sorted(ids)}")
    if any(i < 1 for i in ids):
        raise ConfigError("agent ids must be positive")
    if len(ids) > g.n:
        raise KExceedsN(f"k={len(ids)} exceeds n={g.n}")
    for v in assignment:
        if not 0 <= v < g.n:
            raise BadNode(f"start node {v} not in [0, {g.n})")
    states = tuple(AgentState.initial(i) for i in ids)
    return Configuration(0, states, assignment)


def step(g: PortGraph, c: Configuration, rule: LocalRule) -> Configuration:
    """Apply ``rule`` at every occupied node, then move all agents at once."""
    states: list[AgentState] = [None] * c.k  # type: ignore[list-item]
    for v, idx in c.occupancy().items():
        ctx = NodeContext(g.degree(v), [c.states[i].copy() for i in idx])
        rule(ctx)
        if len(ctx.agents) != len(idx):
            raise AssertionError("local rule added or removed agents")
        for i, s in zip(idx, ctx.agents):
            if not -1 <= s.pout < ctx.degree:
                raise RuleEmittedInvalidPort(
                    f"agent {s.id} at node {v} chose port {s.pout} (degree {ctx.degree})"
                )
            states[i] = s
    nodes = list(c.nodes)
    for i, s in enumerate(states):
        if s.pout == -1:
            s.pin = -1
        else:
            nodes[i], s.pin = neighbor_via(g, nodes[i], s.pout)
    return Configuration(c.t + 1, tuple(states), tuple(nodes))


def _quiescent(c: Configuration, nxt: Configuration) -> bool:
    return c.dispersed() and nxt.nodes == c.nodes


def is_legitimate(g: PortGraph, c: Configuration, rule: LocalRule) -> bool:
    """Distinct nodes and a probe step that moves nobody. ``c`` is not modified."""
    if not c.dispersed():
        return False
    return _quiescent(c, step(g, c, rule))


def default_max_steps(mp: int, l: int) -> int:  # noqa: E741
    return max(1000, 64 * mp * (l.bit_length() + 1))


def trace_record(c: Configuration) -> dict:
    return {
        "t": c.t,
        "agents": [
            {**s.to_dict(), "node": v} for s, v in zip(c.states, c.nodes)
        ],
    }


def run(
    g: PortGraph,
    c0: Configuration,
    rule: LocalRule,
    max_steps: Optional[int] = None,
    monitors: Iterable = (),
    trace_sink: Optional[IO[str]] = None,
) -> RunResult:
    """Step until ``C_t`` is legitimate or ``max_steps`` is reached.

    ``steps_to_dispersion`` is the least ``t`` with ``C_t`` legitimate. Every
    configuration ``C_0..C_t`` is checked by each monitor and, if given,
    written to ``trace_sink`` as one JSON line.
    """
    monitors = list(monitors)
    l = len(set(c0.nodes))  # noqa: E741
    mp = m_prime(g, c0.k)
    if max_steps is None:
        max_steps = default_max_steps(mp, l)
    if max_steps < 0:
        raise ConfigError("max_steps must be non-negative")

    for mon in monitors:
        mon.start(g, c0)
    c = c0
    if trace_sink is not None:
        trace_sink.write(json.dumps(trace_record(c)) + "\n")
    max_level = max(s.level for s in c.states)
    moves = 0
    steps: Optional[int] = None
    while True:
        nxt = step(g, c, rule)
        if _quiescent(c, nxt):
            steps = c.t
            break
        if c.t >= max_steps:
            break
        moves += sum(1 for a, b in zip(c.nodes, nxt.nodes) if a != b)
        for mon in monitors:
            mon.observe(g, c, nxt)
        c = nxt
        if trace_sink is not None:
            trace_sink.write(json.dumps(trace_record(c)) + "\n")
        max_level = max(max_level, max(s.level for s in c.states))
    for mon in monitors:
        mon.finish(g, c)
    return RunResult(
        steps_to_dispersion=steps,
        max_level_observed=max_level,
        m_prime=mp,
        l=l,
        k=c0.k,
        moves_total=moves,
        steps_executed=c.t,
        invariant_verdicts=[mon.verdict for mon in monitors],
    )
