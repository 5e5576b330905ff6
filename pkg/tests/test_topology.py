from __future__ import annotations

import json

import numpy as np
import pytest

from qvul.topology import (
    DeviceTopology,
    TopologyError,
    grid,
    heavy_hex127,
    hexagon27,
    line,
    load_topology,
    resolve,
    save_topology,
)


def test_builtin_sizes():
    assert hexagon27().num_qubits == 27 and len(hexagon27().coupling_edges) == 28
    hh = heavy_hex127()
    assert hh.num_qubits == 127 and len(hh.coupling_edges) == 144
    assert max(hh.degree(q) for q in range(127)) == 3
    assert (hh.distances >= 0).all()


def test_distances_and_paths():
    g = grid(3, 3)
    assert g.distances[0, 8] == 4
    path = g.shortest_path(0, 8)
    assert len(path) == 5 and path[0] == 0 and path[-1] == 8
    assert all(g.has_edge(a, b) for a, b in zip(path, path[1:]))


def test_disconnected_path_raises():
    d = DeviceTopology(4, frozenset({(0, 1), (2, 3)}))
    assert d.distances[0, 3] == -1
    with pytest.raises(TopologyError):
        d.shortest_path(0, 3)


def test_json_round_trip(tmp_path):
    p = tmp_path / "t.json"
    save_topology(line(5), p)
    assert load_topology(p) == line(5)
    assert resolve(str(p)) == line(5)
    assert json.loads(p.read_text())["n"] == 5


def test_resolve_names():
    assert resolve("grid-2x3").num_qubits == 6
    assert resolve("line-4") == line(4)
    with pytest.raises(TopologyError):
        DeviceTopology.from_json({"n": 2})
    with pytest.raises(TopologyError):
        DeviceTopology(2, frozenset({(0, 2)}))
