"""Local rules for dispersion.

Each rule receives a :class:`NodeContext` holding private copies of the agents
at one node, updates them in place (including ``pout``) and returns them.
Rules never see node identities, only the degree and the co-located agents.

* ``simple-dfs``: all unsettled agents walk one depth-first search together
  and the smallest id settles at every fresh node.
* ``zombie``: one DFS group per start node; groups that find a stronger
  group's mark give up and chase it.
* ``svl``: leaders with levels, strength order, minions and four timeslots;
  O(m' log l) steps without knowing m, k or Delta.
"""

from __future__ import annotations

from typing import Callable

from .core import AgentState, Mode, NodeContext

__all__ = [
    "NodeContext",
    "stronger",
    "is_minion",
    "simple_dfs_rule",
    "zombie_rule",
    "svl_rule",
    "RULES",
    "get_rule",
]

LEADER, ZOMBIE, SETTLED = Mode.LEADER, Mode.ZOMBIE, Mode.SETTLED


def stronger(a: AgentState, b: AgentState) -> bool:
    """Higher level wins; equal levels are decided by ``leaderid``."""
    return (a.level, a.leaderid) > (b.level, b.leaderid)


def is_minion(settled: AgentState, leader: AgentState) -> bool:
    return settled.level == leader.level and settled.leaderid == leader.leaderid


def _tick(agents: list[AgentState]) -> None:
    for a in agents:
        a.slot = (a.slot + 1) % 4


# ---------------------------------------------------------------------------
# simple DFS
# ---------------------------------------------------------------------------


def simple_dfs_rule(ctx: NodeContext) -> list[AgentState]:
    agents = ctx.agents
    for a in agents:
        a.pout = -1
    if len(agents) >= 2:
        settled = ctx.settled
        if settled is None:
            settled = min(agents, key=lambda a: a.id)
            settled.mode = SETTLED
            settled.last = (settled.pin + 1) % ctx.degree
            port = settled.last
        else:
            # Unsettled agents travel together, so their pins agree; the
            # smallest id decides if that ever fails to hold.
            movers = [a for a in agents if a is not settled]
            p = min(movers, key=lambda a: a.id).pin
            if settled.last != p:
                port = p
            else:
                settled.last = (settled.last + 1) % ctx.degree
                port = settled.last
        for a in agents:
            if a is not settled:
                a.pout = port
    _tick(agents)
    return agents


# ---------------------------------------------------------------------------
# zombie baseline
# ---------------------------------------------------------------------------


def zombie_rule(ctx: NodeContext) -> list[AgentState]:
    """Group DFS where each settled agent serves one group: the largest seen.

    Gaps in the baseline's description are filled as follows. All of them are
    approximations; this rule exists for running-time comparison only.

    * In the first step each node's agents take the largest id among them as
      ``groupid``.
    * A group (its leaders plus zombies following it) runs simple DFS on the
      settled agents' ``(groupid, last)`` slot. A node marked by a weaker
      group is re-marked and treated as a first visit.
    * A group reaching a node marked by a stronger group turns into zombies
      that chase that group along ``last``, one move per step. Chasers keep
      ``leaderid == id``; followers set ``leaderid = groupid``.
    * A chaser that meets a group at least as strong as the group it chases
      follows it from then on. Two groups meeting merge into the stronger.
    * At an unsettled node the smallest id present settles. If only chasers
      are there, the others start a DFS of their own from that node.
    * Only group members update a node's mark; chasers never do.
    """
    agents = ctx.agents
    fresh = [a for a in agents if a.groupid == -1]
    if fresh:
        gid = max(a.id for a in fresh)
        for a in fresh:
            a.groupid = gid
    for a in agents:
        a.pout = -1
    if len(agents) < 2:
        _tick(agents)
        return agents

    settled = ctx.settled
    unsettled = [a for a in agents if a is not settled]
    group = [a for a in unsettled if a.mode is LEADER or a.leaderid == a.groupid]
    chasers = [a for a in unsettled if a.mode is ZOMBIE and a.leaderid != a.groupid]
    mark = settled.groupid if settled is not None else -1

    if group:
        top = max(a.groupid for a in group)
        head = min((a for a in group if a.groupid == top), key=lambda a: a.id)
        for a in group:
            if a.groupid < top:
                a.mode, a.groupid, a.leaderid = ZOMBIE, top, top
        if top < mark:
            for a in group:
                a.mode, a.groupid, a.leaderid = ZOMBIE, mark, a.id
            chasers += group
            group = []
        else:
            caught = [a for a in chasers if a.groupid <= top]
            for a in caught:
                a.mode, a.groupid, a.leaderid = ZOMBIE, top, top
            group += caught
            chasers = [a for a in chasers if a.groupid > top]
    if not group and settled is not None:
        for a in chasers:
            a.pout = settled.last
        _tick(agents)
        return agents

    if group:
        p = head.pin
    else:
        top = max(a.groupid for a in chasers)
        p = min((a for a in chasers if a.groupid == top), key=lambda a: a.id).pin
    if settled is None:
        settled = min(agents, key=lambda a: a.id)
        settled.mode = SETTLED
        settled.groupid = top
        settled.last = (p + 1) % ctx.degree
        port = settled.last
        if not group:
            for a in chasers:
                if a is not settled:
                    a.groupid, a.leaderid = top, top
    elif mark < top or p == -1:
        settled.groupid = top
        settled.last = (p + 1) % ctx.degree
        port = settled.last
    elif settled.last != p:
        port = p
    else:
        settled.last = (settled.last + 1) % ctx.degree
        port = settled.last
    members = {id(a) for a in group}
    for a in unsettled:
        if a is not settled:
            # chasers of a stronger group keep following the node's pointer
            a.pout = port if id(a) in members or not group else settled.last
    _tick(agents)
    return agents


# ---------------------------------------------------------------------------
# proposed algorithm
# ---------------------------------------------------------------------------


def svl_rule(ctx: NodeContext) -> list[AgentState]:
    agents = ctx.agents
    delta = ctx.degree
    settled = ctx.settled

    best = max(a.strength() for a in agents)
    top_leaders = [a for a in agents if a.mode is LEADER and a.strength() == best]
    if len(top_leaders) > 1:
        raise AssertionError("two leaders share the same strength")
    amax = top_leaders[0] if top_leaders else settled

    for a in agents:
        a.pout = -1
    if amax is None:
        # Only zombies at an unsettled node. Unreachable from an initial
        # configuration; nothing is done and the monitors report it.
        _tick(agents)
        return agents

    for a in agents:
        if a.mode is LEADER and a is not amax:
            a.mode = ZOMBIE
    if amax.mode is LEADER and amax.pin != -1:
        amax.inport = amax.pin

    if len(agents) >= 2:
        zombies = [a for a in agents if a.mode is ZOMBIE]
        if amax.mode is LEADER:
            if any(z.level == amax.level for z in zombies):
                amax.level += 1
            if settled is None:
                settled = min(zombies, key=lambda a: a.id)
                settled.mode = SETTLED
                settled.level, settled.leaderid = amax.level, amax.leaderid
                settled.last = amax.inport
            elif not is_minion(settled, amax):
                settled.level, settled.leaderid = amax.level, amax.leaderid
                settled.last = amax.inport
            elif amax.inport != settled.last:
                for a in agents:
                    if a is not settled:
                        a.pout = amax.inport
            elif amax.slot == 0:
                port = (amax.inport + 1) % delta
                for a in agents:
                    if a is not settled:
                        a.pout = port
                settled.last = port
        else:
            top_zombie = max(z.level for z in zombies)
            if (top_zombie < settled.level and settled.slot in (2, 3)) or (
                top_zombie == settled.level and settled.slot == 2
            ):
                for a in agents:
                    if a is not settled:
                        a.pout = settled.last
    _tick(agents)
    return agents


RULES: dict[str, Callable[[NodeContext], list[AgentState]]] = {
    "simple-dfs": simple_dfs_rule,
    "zombie": zombie_rule,
    "svl": svl_rule,
}


def get_rule(name: str) -> Callable[[NodeContext], list[AgentState]]:
    try:
        return RULES[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(RULES)}") from None
