"""Independent reference interpreters used to freeze expected values.

These deliberately share no code with ``dispersion.core`` or
``dispersion.algorithms``: the graph is read as a plain edge list and the
whole group of unsettled agents is tracked as one token.
"""

from __future__ import annotations


def port_table(edges):
    """``(u, p_u, v, p_v)`` list -> {(node, port): (neighbor, arrival port)}."""
    table = {}
    for u, pu, v, pv in edges:
        table[(u, pu)] = (v, pv)
        table[(v, pv)] = (u, pu)
    return table


def simple_dfs_oracle(edges, degrees, start, ids):
    """Run the simple DFS with every agent starting on ``start``.

    Returns ``(steps, crossings)``: the first step at which all agents sit on
    distinct nodes, and how often each undirected edge was crossed.
    """
    table = port_table(edges)
    last = {}  # node -> last port used by the settled agent there
    unsettled = sorted(ids)
    here, pin, t = start, -1, 0
    crossings = {}
    while True:
        if here not in last:
            if len(unsettled) == 1:
                return t, crossings
            unsettled.pop(0)
            last[here] = (pin + 1) % degrees[here]
            port = last[here]
        elif last[here] != pin:
            port = pin
        else:
            last[here] = (last[here] + 1) % degrees[here]
            port = last[here]
        nxt, pin = table[(here, port)]
        key = (min(here, nxt), max(here, nxt))
        crossings[key] = crossings.get(key, 0) + 1
        here, t = nxt, t + 1
