"""Device coupling graphs and the topology JSON format ``{name, n, edges}``."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceTopology:
    num_qubits: int
    coupling_edges: frozenset[tuple[int, int]]
    name: str = "device"
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = set()
        for a, b in self.coupling_edges:
            a, b = int(a), int(b)
            if a == b:
                raise TopologyError(f"self-loop on qubit {a}")
            if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise TopologyError(f"edge ({a},{b}) references a missing qubit")
            edges.add((min(a, b), max(a, b)))
        object.__setattr__(self, "coupling_edges", frozenset(edges))
        adj: list[list[int]] = [[] for _ in range(self.num_qubits)]
        for a, b in sorted(edges):
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(x)) for x in adj))

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.coupling_edges

    def neighbors(self, q: int) -> tuple[int, ...]:
        return self._adj[q]

    def degree(self, q: int) -> int:
        return len(self._adj[q])

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs hop counts; unreachable pairs hold -1."""
        n = self.num_qubits
        dist = np.full((n, n), -1, dtype=np.int32)
        for s in range(n):
            dist[s, s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in self._adj[u]:
                    if dist[s, v] < 0:
                        dist[s, v] = dist[s, u] + 1
                        queue.append(v)
        return dist

    def shortest_path(self, a: int, b: int) -> list[int]:
        dist = self.distances
        if dist[a, b] < 0:
            raise TopologyError(f"no path between {a} and {b}")
        path = [a]
        while path[-1] != b:
            u = path[-1]
            path.append(min(v for v in self._adj[u] if dist[v, b] == dist[u, b] - 1))
        return path

    def to_json(self) -> dict:
        return {"name": self.name, "n": self.num_qubits, "edges": [list(e) for e in sorted(self.coupling_edges)]}

    @classmethod
    def from_json(cls, data: dict) -> DeviceTopology:
        try:
            return cls(int(data["n"]), frozenset(tuple(e) for e in data["edges"]), str(data.get("name", "device")))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TopologyError):
                raise
            raise TopologyError(f"malformed topology JSON: {exc}") from None


def load_topology(path: str | Path) -> DeviceTopology:
    return DeviceTopology.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_topology(device: DeviceTopology, path: str | Path) -> None:
    Path(path).write_text(json.dumps(device.to_json()) + "\n", encoding="utf-8")


def line(n: int) -> DeviceTopology:
    return DeviceTopology(n, frozenset((i, i + 1) for i in range(n - 1)), f"line-{n}")


def grid(rows: int, cols: int) -> DeviceTopology:
    edges = set()
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.add((q, q + 1))
            if r + 1 < rows:
                edges.add((q, q + cols))
    return DeviceTopology(rows * cols, frozenset(edges), f"grid-{rows}x{cols}")


def fully_connected(n: int) -> DeviceTopology:
    return DeviceTopology(n, frozenset((a, b) for a in range(n) for b in range(a + 1, n)), f"all-{n}")


# 27-qubit heavy-hexagon coupling map used by the Falcon-class machines.
_FALCON27_EDGES = (
    (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10), (8, 9),
    (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14), (14, 16), (15, 18),
    (16, 19), (17, 18), (18, 21), (19, 20), (19, 22), (21, 23), (22, 25), (23, 24),
    (24, 25), (25, 26),
)


def hexagon27(name: str = "hexagon-27") -> DeviceTopology:
    return DeviceTopology(27, frozenset(_FALCON27_EDGES), name)


def heavy_hex127(name: str = "heavy-hex-127") -> DeviceTopology:
    """127-qubit heavy-hex lattice: seven qubit rows joined by bridge qubits."""
    row_cols = [range(0, 14)] + [range(0, 15)] * 5 + [range(1, 15)]
    bridge_cols = [(0, 4, 8, 12), (2, 6, 10, 14)]
    edges: set[tuple[int, int]] = set()
    rows: list[dict[int, int]] = []
    bridges: list[tuple[int, int, int]] = []  # (qubit, column, row above)
    q = 0
    for r, cols in enumerate(row_cols):
        row = {}
        for c in cols:
            row[c] = q
            q += 1
        edges.update((row[c], row[c + 1]) for c in cols if c + 1 in row)
        rows.append(row)
        if r + 1 < len(row_cols):
            for c in bridge_cols[r % 2]:
                bridges.append((q, c, r))
                q += 1
    for b, c, r in bridges:
        edges.add((rows[r][c], b))
        edges.add((b, rows[r + 1][c]))
    return DeviceTopology(q, frozenset(edges), name)


BUILTIN = {
    "hexagon-27": hexagon27,
    "heavy-hex-127": heavy_hex127,
    "grid-3x3": lambda: grid(3, 3),
}


def resolve(spec: str) -> DeviceTopology:
    """Topology from a builtin name (``hexagon-27``, ``grid-RxC``, ``line-N``) or a JSON path."""
    if spec in BUILTIN:
        return BUILTIN[spec]()
    if spec.startswith("grid-"):
        r, c = spec[5:].split("x")
        return grid(int(r), int(c))
    if spec.startswith("line-"):
        return line(int(spec[5:]))
    return load_topology(spec)
