"""Bell/GHZ group detection and user-annotated entanglement intervals.

Annotation JSON: ``{"groups": [{"members": ["q1", "q2"], "start": 3, "end": 17}]}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .cycles import CycleSchedule, virtual_grid


class EntanglementError(ValueError):
    pass


@dataclass(frozen=True)
class EntangledGroup:
    """Virtual qubits entangled over cycles ``start..end`` inclusive.

    ``members[0]`` is the group's first qubit; booking cells of the other
    members point at it.
    """

    members: tuple[int, ...]
    start: int
    end: int

    def __post_init__(self):
        if len(self.members) < 2 or len(set(self.members)) != len(self.members):
            raise EntanglementError(f"a group needs two or more distinct members, got {self.members}")
        if self.start > self.end:
            raise EntanglementError(f"interval start {self.start} after end {self.end}")

    def overlaps(self, other: EntangledGroup) -> bool:
        return self.start <= other.end and other.start <= self.end and bool(set(self.members) & set(other.members))


@dataclass(frozen=True)
class EntanglementIntervals:
    groups: tuple[EntangledGroup, ...] = ()
    source: str = "detected"

    def to_json(self, names: Sequence[str]) -> dict:
        return {
            "groups": [
                {"members": [names[v] for v in g.members], "start": g.start, "end": g.end} for g in self.groups
            ]
        }


# qubit states: untouched |0>, exactly one Hadamard applied, a possible
# Hadamard expansion in progress, anything else
_FRESH, _PLUS, _PARTIAL, _USED = 0, 1, 2, 3


def _is_hadamard(seq: Sequence) -> bool:
    """``h`` itself or its device-basis expansion ``rz(pi/2) sx rz(pi/2)``."""
    if [g.kind for g in seq] == ["h"]:
        return True
    if [g.kind for g in seq] != ["rz", "sx", "rz"]:
        return False
    return all(abs(math.remainder(g.param - math.pi / 2, 2 * math.pi)) < 1e-9 for g in (seq[0], seq[2]))


def detect(sched: CycleSchedule) -> EntanglementIntervals:
    """Find Bell constructions and their GHZ extensions.

    A group grows when a member controls a cx onto a fresh qubit; the old
    member set's interval then closes and the enlarged set's opens at that cx.
    """
    n = sched.num_qubits
    virtual = virtual_grid(sched)
    state = [_FRESH] * n
    prefix: list[list] = [[] for _ in range(n)]  # single-qubit ops since |0>
    group_of: dict[int, int] = {}
    active: dict[int, tuple[list[int], int]] = {}  # group id -> (members, start)
    done: list[EntangledGroup] = []
    next_id = 0

    def close(gid: int, end: int) -> None:
        members, start = active.pop(gid)
        for v in members:
            group_of.pop(v, None)
        if start <= end:
            done.append(EntangledGroup(tuple(members), start, end))

    for i in sched.order():
        op = sched.ops[i]
        t = sched.cycles[i]
        vs = [int(virtual[t, q]) for q in op.qubits]
        if sched.swap_group[i] >= 0 or op.is_trivial:
            continue
        if op.kind == "measure":
            v = vs[0]
            if v in group_of:
                close(group_of[v], t)
            state[v] = _USED
            continue
        if op.kind == "cx":
            vc, vt = vs
            if state[vt] == _FRESH and vt not in group_of:
                if vc in group_of:
                    gid = group_of[vc]
                    members, _ = active[gid]
                    close(gid, t - 1)
                    members = members + [vt]
                elif state[vc] == _PLUS:
                    members = [vc, vt]
                else:
                    members = None
                if members is not None:
                    active[next_id] = (members, t)
                    for v in members:
                        group_of[v] = next_id
                    next_id += 1
            state[vc] = state[vt] = _USED
            continue
        v = vs[0]
        if state[v] == _USED:
            continue
        prefix[v].append(op)
        if _is_hadamard(prefix[v]):
            state[v] = _PLUS
        elif [g.kind for g in prefix[v]] in (["rz"], ["rz", "sx"]):
            state[v] = _PARTIAL
        else:
            state[v] = _USED

    for gid in list(active):
        close(gid, sched.depth - 1)
    done.sort(key=lambda g: (g.start, g.members))
    return EntanglementIntervals(tuple(done), "detected")


def _check_disjoint(groups: Sequence[EntangledGroup]) -> None:
    for i, a in enumerate(groups):
        for b in groups[i + 1 :]:
            if a.overlaps(b):
                raise EntanglementError(f"groups {a.members} and {b.members} share members over overlapping cycles")


def merge_annotations(
    detected: EntanglementIntervals, user: EntanglementIntervals, num_virtual: int | None = None
) -> EntanglementIntervals:
    """Union of both sets; a detected group clashing with a user group is dropped."""
    for g in user.groups:
        if num_virtual is not None and any(not 0 <= v < num_virtual for v in g.members):
            raise EntanglementError(f"group {g.members} references an unknown virtual qubit")
    _check_disjoint(user.groups)
    kept = [d for d in detected.groups if not any(d.overlaps(u) for u in user.groups)]
    merged = sorted(kept + list(user.groups), key=lambda g: (g.start, g.members))
    source = "annotation" if user.groups else detected.source
    return EntanglementIntervals(tuple(merged), source)


def from_json(data: dict, names: Sequence[str], depth: int | None = None) -> EntanglementIntervals:
    index = {name: i for i, name in enumerate(names)}
    groups = []
    try:
        for entry in data["groups"]:
            members = []
            for m in entry["members"]:
                if m not in index:
                    raise EntanglementError(f"unknown virtual qubit {m!r}")
                members.append(index[m])
            start, end = int(entry["start"]), int(entry["end"])
            if start < 0 or (depth is not None and end >= depth):
                raise EntanglementError(f"interval {start}..{end} outside the circuit's cycles")
            groups.append(EntangledGroup(tuple(members), start, end))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, EntanglementError):
            raise
        raise EntanglementError(f"malformed annotation: {exc}") from None
    _check_disjoint(groups)
    return EntanglementIntervals(tuple(groups), "annotation")


def load(path: str | Path, names: Sequence[str], depth: int | None = None) -> EntanglementIntervals:
    return from_json(json.loads(Path(path).read_text(encoding="utf-8")), names, depth)
