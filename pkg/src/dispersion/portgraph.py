"""Anonymous port-numbered graphs.

Agents never see node indices. At node ``v`` they only observe the degree
``delta_v`` and the local port labels ``0..delta_v-1``; the two endpoints of an
edge may label it differently.
"""

from __future__ import annotations

import io
import os
import random
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence, Union

__all__ = [
    "GraphError",
    "PortClash",
    "PortGap",
    "DuplicateEdge",
    "SelfLoop",
    "Disconnected",
    "InvalidPort",
    "ParseError",
    "ConnectivityFailure",
    "InvalidParams",
    "PortGraph",
    "GraphSpec",
    "FAMILIES",
    "from_edge_list",
    "neighbor_via",
    "generate",
    "m_prime",
    "dumps",
    "loads",
    "save",
    "load",
]

ER_RETRIES = 1000


class GraphError(ValueError):
    """Base class for invalid graph input."""


class PortClash(GraphError):
    pass


class PortGap(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class Disconnected(GraphError):
    pass


class InvalidPort(GraphError):
    pass


class ParseError(GraphError):
    pass


class ConnectivityFailure(GraphError):
    pass


class InvalidParams(GraphError):
    pass


@dataclass(frozen=True)
class PortGraph:
    """Immutable port-numbered graph.

    ``adjacency[v][p]`` is ``(u, q)``: leaving ``v`` through port ``p`` lands
    on ``u``, arriving through ``u``'s port ``q``.
    """

    n: int
    adjacency: tuple[tuple[tuple[int, int], ...], ...]
    m: int = field(init=False)
    max_degree: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", sum(len(a) for a in self.adjacency) // 2)
        object.__setattr__(
            self, "max_degree", max((len(a) for a in self.adjacency), default=0)
        )

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def edges(self) -> list[tuple[int, int, int, int]]:
        """Edges as ``(u, p_u, v, p_v)`` with ``u < v``, sorted by ``(u, p_u)``."""
        out = []
        for u, ports in enumerate(self.adjacency):
            for p, (v, q) in enumerate(ports):
                if u < v:
                    out.append((u, p, v, q))
        return out

    def neighbors(self, v: int) -> list[int]:
        return [u for u, _ in self.adjacency[v]]


def from_edge_list(n: int, edges: Iterable[Sequence[int]]) -> PortGraph:
    """Build and validate a port graph from ``(u, p_u, v, p_v)`` tuples."""
    if n < 1:
        raise InvalidParams(f"node count must be positive, got {n}")
    slots: list[dict[int, tuple[int, int]]] = [{} for _ in range(n)]
    seen: set[tuple[int, int]] = set()
    for e in edges:
        if len(e) != 4:
            raise GraphError(f"edge must have 4 fields, got {e!r}")
        u, pu, v, pv = (int(x) for x in e)
        for x in (u, v):
            if not 0 <= x < n:
                raise GraphError(f"node {x} out of range [0, {n})")
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        for x, px in ((u, pu), (v, pv)):
            if px < 0:
                raise PortGap(f"negative port {px} at node {x}")
            if px in slots[x]:
                raise PortClash(f"port {px} used twice at node {x}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdge(f"parallel edge between {u} and {v}")
        seen.add(key)
        slots[u][pu] = (v, pv)
        slots[v][pv] = (u, pu)
    adjacency = []
    for v, s in enumerate(slots):
        if sorted(s) != list(range(len(s))):
            raise PortGap(f"ports at node {v} are {sorted(s)}, not 0..{len(s) - 1}")
        adjacency.append(tuple(s[p] for p in range(len(s))))
    g = PortGraph(n, tuple(adjacency))
    if not _connected(g):
        raise Disconnected("graph is not connected")
    return g


def _connected(g: PortGraph) -> bool:
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        v = queue.popleft()
        for u, _ in g.adjacency[v]:
            if not seen[u]:
                seen[u] = True
                count += 1
                queue.append(u)
    return count == g.n


def neighbor_via(g: PortGraph, v: int, p: int) -> tuple[int, int]:
    """Return ``(u, p_u(v))`` for a move out of ``v`` through port ``p``."""
    ports = g.adjacency[v]
    if not 0 <= p < len(ports):
        raise InvalidPort(f"port {p} invalid at node {v} (degree {len(ports)})")
    return ports[p]


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

FAMILIES = ("path", "ring", "tree", "grid", "erdos-renyi", "complete", "file")


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for a graph instance.

    ``params`` by family: ``n`` for path/ring/tree/complete, ``n`` and ``p``
    for erdos-renyi, ``rows`` and ``cols`` (or ``n``, split as close to square
    as possible) for grid, ``path`` for file.
    """

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "seed": self.seed}


def _need(params: dict, key: str, lo: float) -> int:
    if key not in params:
        raise InvalidParams(f"missing parameter {key!r}")
    value = params[key]
    if int(value) != value or value < lo:
        raise InvalidParams(f"parameter {key!r} must be an integer >= {lo}, got {value!r}")
    return int(value)


def grid_shape(n: int) -> tuple[int, int]:
    """Most nearly square ``rows x cols`` factorisation of ``n``."""
    rows = max(d for d in range(1, int(n**0.5) + 1) if n % d == 0)
    return rows, n // rows


def _family_edges(spec: GraphSpec, rng: random.Random) -> tuple[int, list[tuple[int, int]]]:
    fam, params = spec.family, spec.params
    if fam == "path":
        n = _need(params, "n", 1)
        return n, [(i, i + 1) for i in range(n - 1)]
    if fam == "ring":
        n = _need(params, "n", 3)
        return n, [(i, (i + 1) % n) for i in range(n)]
    if fam == "complete":
        n = _need(params, "n", 1)
        return n, [(i, j) for i in range(n) for j in range(i + 1, n)]
    if fam == "tree":
        n = _need(params, "n", 1)
        return n, [(rng.randrange(i), i) for i in range(1, n)]
    if fam == "grid":
        if "rows" in params or "cols" in params:
            rows, cols = _need(params, "rows", 1), _need(params, "cols", 1)
        else:
            rows, cols = grid_shape(_need(params, "n", 1))
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return rows * cols, edges
    if fam == "erdos-renyi":
        n = _need(params, "n", 1)
        p = params.get("p")
        if p is None or not 0.0 <= float(p) <= 1.0:
            raise InvalidParams(f"erdos-renyi needs 0 <= p <= 1, got {p!r}")
        p = float(p)
        for _ in range(ER_RETRIES):
            edges = [
                (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
            ]
            if _edges_connected(n, edges):
                return n, edges
        raise ConnectivityFailure(
            f"no connected G({n}, {p}) sample within {ER_RETRIES} retries"
        )
    raise InvalidParams(f"unknown graph family {fam!r}")


def _edges_connected(n: int, edges: list[tuple[int, int]]) -> bool:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    parts = n
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            parts -= 1
    return parts == 1


def generate(spec: GraphSpec) -> PortGraph:
    """Build the graph described by ``spec``; ports are shuffled per node."""
    if spec.family == "file":
        if "path" not in spec.params:
            raise InvalidParams("file family needs a 'path' parameter")
        return load(spec.params["path"])
    rng = random.Random(spec.seed)
    n, edges = _family_edges(spec, rng)
    incident: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        incident[u].append(v)
        incident[v].append(u)
    port_of: list[dict[int, int]] = []
    for v in range(n):
        order = sorted(incident[v])
        rng.shuffle(order)
        port_of.append({u: p for p, u in enumerate(order)})
    return from_edge_list(n, [(u, port_of[u][v], v, port_of[v][u]) for u, v in edges])


def m_prime(g: PortGraph, k: int) -> int:
    """``min(m, floor(k * Delta / 2), k choose 2)``."""
    return min(g.m, k * g.max_degree // 2, k * (k - 1) // 2)


# ---------------------------------------------------------------------------
# text format: "n m" header, then one "u p_u v p_v" line per edge
# ---------------------------------------------------------------------------

PathOrFile = Union[str, os.PathLike, IO[str]]


def dumps(g: PortGraph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {pu} {v} {pv}" for u, pu, v, pv in g.edges())
    return "\n".join(lines) + "\n"


def loads(text: str) -> PortGraph:
    rows = [line.split() for line in text.splitlines()]
    rows = [r for r in rows if r and not r[0].startswith("#")]
    if not rows:
        raise ParseError("empty graph file")
    try:
        header = [int(x) for x in rows[0]]
        edges = [tuple(int(x) for x in r) for r in rows[1:]]
    except ValueError as exc:
        raise ParseError(f"non-integer token: {exc}") from None
    if len(header) != 2:
        raise ParseError(f"header must be 'n m', got {rows[0]!r}")
    n, m = header
    if len(edges) != m:
        raise ParseError(f"header declares {m} edges but {len(edges)} listed")
    for i, e in enumerate(edges, start=2):
        if len(e) != 4:
            raise ParseError(f"edge line {i} must have 4 fields, got {len(e)}")
    return from_edge_list(n, edges)


def save(g: PortGraph, sink: PathOrFile) -> None:
    text = dumps(g)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sink.write(text)


def load(source: PathOrFile) -> PortGraph:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="ascii") as fh:
            return loads(fh.read())
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        return loads(source.read())
    raise TypeError(f"cannot load a graph from {type(source).__name__}")
