"""Weighted digraphs over a leader (node 0) and N followers, switching schedules,
and the connectivity checks used to validate a switching topology.

Adjacency convention: ``adjacency[i, j] > 0`` means node ``i`` receives
information from node ``j``, i.e. the edge ``(j, i)`` exists.
"""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class Digraph:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise ValueError("a digraph needs the leader and at least one follower")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[float]]) -> "Digraph":
        """Build from ``(src, dst)`` or ``(src, dst, weight)`` tuples; weight defaults to 1."""
        a = np.zeros((node_count, node_count))
        for edge in edges:
            if len(edge) == 2:
                src, dst = edge
                weight = 1.0
            elif len(edge) == 3:
                src, dst, weight = edge
            else:
                raise ValueError(f"edge must be (src, dst[, weight]), got {edge!r}")
            src, dst = int(src), int(dst)
            if not (0 <= src < node_count and 0 <= dst < node_count):
                raise ValueError(f"edge {edge!r} out of range for {node_count} nodes")
            a[dst, src] = weight
        return cls(a)

    @classmethod
    def empty(cls, node_count: int) -> "Digraph":
        return cls(np.zeros((node_count, node_count)))

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def follower_count(self) -> int:
        return self.node_count - 1

    def edges(self) -> set[tuple[int, int]]:
        """Edge set as ``(src, dst)`` pairs."""
        dst, src = np.nonzero(self.adjacency > 0)
        return {(int(j), int(i)) for i, j in zip(dst, src)}

    def __eq__(self, other):
        if not isinstance(other, Digraph):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())

    def __repr__(self):
        return f"Digraph(node_count={self.node_count}, edges={sorted(self.edges())})"


def validate_digraph(g: Digraph) -> list[str]:
    """Return one message per violated invariant; empty means valid."""
    a = g.adjacency
    problems = []
    for i in range(g.node_count):
        if a[i, i] != 0:
            problems.append(f"self-loop at node {i}")
    for i, j in zip(*np.nonzero(a < 0)):
        problems.append(f"negative weight {a[i, j]:g} on edge ({j}, {i})")
    for i, j in zip(*np.nonzero(~np.isfinite(a))):
        problems.append(f"non-finite weight on edge ({j}, {i})")
    leader_in = [int(j) for j in np.nonzero(a[0] != 0)[0] if j != 0]
    if leader_in:
        problems.append(f"leader row must be zero, node 0 receives from {leader_in}")
    return problems


def union(graphs: Sequence[Digraph]) -> Digraph:
    """Union of edge sets; weights of a shared edge are summed."""
    if not graphs:
        raise ValueError("union of an empty list of graphs")
    n = graphs[0].node_count
    for g in graphs[1:]:
        if g.node_count != n:
            raise ValueError(f"node_count mismatch: {g.node_count} != {n}")
    return Digraph(sum(g.adjacency for g in graphs))


def reachable_from(g: Digraph, root: int) -> set[int]:
    seen = {root}
    queue = deque([root])
    a = g.adjacency
    while queue:
        j = queue.popleft()
        for i in np.nonzero(a[:, j] > 0)[0]:
            i = int(i)
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return seen


def has_spanning_tree_from(g: Digraph, root: int = 0) -> bool:
    if not 0 <= root < g.node_count:
        raise ValueError(f"root {root} out of range")
    return len(reachable_from(g, root)) == g.node_count


def h_matrix(g: Digraph) -> np.ndarray:
    """Follower-indexed consensus matrix: ``h_ii = sum_j a_ij`` (leader column
    included), ``h_ij = -a_ij`` for followers ``j != i``."""
    problems = validate_digraph(g)
    if problems:
        raise ValueError("invalid digraph: " + "; ".join(problems))
    a = g.adjacency
    h = -a[1:, 1:].copy()
    h[np.diag_indices_from(h)] = a[1:].sum(axis=1)
    return h


@dataclass(frozen=True)
class GraphFamily:
    graphs: tuple[Digraph, ...]

    def __post_init__(self):
        graphs = tuple(self.graphs)
        if not graphs:
            raise ValueError("graph family must be non-empty")
        n = graphs[0].node_count
        if any(g.node_count != n for g in graphs):
            raise ValueError("all graphs in a family must share node_count")
        object.__setattr__(self, "graphs", graphs)

    @property
    def node_count(self) -> int:
        return self.graphs[0].node_count

    def __len__(self):
        return len(self.graphs)

    def __getitem__(self, index: int) -> Digraph:
        """1-based lookup matching switching-signal values."""
        if not 1 <= index <= len(self.graphs):
            raise IndexError(f"graph index {index} outside 1..{len(self.graphs)}")
        return self.graphs[index - 1]


@dataclass(frozen=True)
class SwitchingSchedule:
    """Piecewise-constant switching signal.

    ``indices[k]`` is active on ``[switch_times[k], switch_times[k+1])``; the
    last index stays active from its switch time up to ``end`` (and beyond, if
    queried). Graph indices are 1-based.
    """

    switch_times: tuple[float, ...]
    indices: tuple[int, ...]
    end: float
    dwell: float = field(default=None)

    def __post_init__(self):
        times = tuple(float(t) for t in self.switch_times)
        indices = tuple(int(i) for i in self.indices)
        if not times or len(times) != len(indices):
            raise ValueError("switch_times and indices must be non-empty and equal length")
        if times[0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        gaps = np.diff(times)
        if np.any(gaps <= 0):
            raise ValueError("switch_times must be strictly increasing")
        if self.end < times[-1]:
            raise ValueError("schedule end precedes its last switch")
        dwell = self.dwell
        if dwell is None:
            dwell = float(gaps.min()) if len(gaps) else float(self.end - times[0]) or np.inf
        if dwell <= 0:
            raise ValueError("dwell time must be positive")
        if len(gaps) and gaps.min() < dwell * (1 - 1e-12):
            raise ValueError(f"switch interval {gaps.min():g} shorter than dwell {dwell:g}")
        object.__setattr__(self, "switch_times", times)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "end", float(self.end))
        object.__setattr__(self, "dwell", float(dwell))

    def sigma(self, t: float) -> int:
        k = bisect.bisect_right(self.switch_times, t) - 1
        if k < 0:
            raise ValueError(f"t = {t} precedes the schedule")
        return self.indices[k]

    def intervals(self) -> list[tuple[float, float, int]]:
        bounds = list(self.switch_times) + [self.end]
        return [(bounds[k], bounds[k + 1], self.indices[k])
                for k in range(len(self.indices)) if bounds[k + 1] > bounds[k]]

    def check_family(self, family: GraphFamily) -> None:
        bad = sorted({i for i in self.indices if not 1 <= i <= len(family)})
        if bad:
            raise ValueError(f"schedule uses graph indices {bad} outside 1..{len(family)}")


def periodic_schedule(period: float, cycle: Sequence[int], horizon: float) -> SwitchingSchedule:
    """Cycle through ``cycle`` with equal phases of length ``period / len(cycle)``."""
    if period <= 0:
        raise ValueError("period must be positive")
    if not cycle:
        raise ValueError("cycle must be non-empty")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    phases = len(cycle)
    dwell = period / phases
    times, indices = [], []
    k = 0
    while True:
        # integer arithmetic keeps switch instants exact multiples of the dwell
        t = (k // phases) * period + (k % phases) * dwell
        if k > 0 and t >= horizon:
            break
        times.append(t)
        indices.append(int(cycle[k % phases]))
        k += 1
    return SwitchingSchedule(tuple(times), tuple(indices), end=float(horizon), dwell=dwell)


class Window(NamedTuple):
    first: int
    last: int
    t_start: float
    t_stop: float


class JointConnectivity(NamedTuple):
    connected: bool
    windows: list[Window]
    reason: str = ""

    def __bool__(self):
        return self.connected


def check_jointly_connected(family: GraphFamily, schedule: SwitchingSchedule,
                            epsilon: float) -> JointConnectivity:
    """Partition the switching intervals into consecutive windows, each shorter
    than ``epsilon``, whose graph unions all contain a spanning tree rooted at
    the leader.

    The whole schedule up to ``schedule.end`` has to be covered. A window's
    span runs from the start of its first interval to the end of its last.
    Solved exactly by dynamic programming over interval suffixes; among valid
    partitions the one with the earliest window closings is returned.
    """
    if epsilon <= schedule.dwell:
        raise ValueError(f"epsilon {epsilon:g} must exceed the dwell time {schedule.dwell:g}")
    schedule.check_family(family)
    intervals = schedule.intervals()
    n = len(intervals)
    # nxt[k]: end index (exclusive) of the first window of a valid cover of intervals[k:]
    nxt: list[int | None] = [None] * (n + 1)
    feasible = [False] * n + [True]
    for start in range(n - 1, -1, -1):
        acc = np.zeros_like(family.graphs[0].adjacency)
        t_start = intervals[start][0]
        for k in range(start, n):
            if intervals[k][1] - t_start >= epsilon:
                break
            acc = acc + family[intervals[k][2]].adjacency
            if feasible[k + 1] and has_spanning_tree_from(Digraph(acc), 0):
                feasible[start], nxt[start] = True, k + 1
                break
    if not feasible[0]:
        # report the longest prefix that greedy windowing can cover
        windows: list[Window] = []
        start = 0
        while start < n:
            acc = np.zeros_like(family.graphs[0].adjacency)
            t_start = intervals[start][0]
            for k in range(start, n):
                if intervals[k][1] - t_start >= epsilon:
                    return JointConnectivity(
                        False, windows, f"no spanning tree within epsilon starting at t = {t_start:g}")
                acc = acc + family[intervals[k][2]].adjacency
                if has_spanning_tree_from(Digraph(acc), 0):
                    windows.append(Window(start, k, t_start, intervals[k][1]))
                    start = k + 1
                    break
            else:
                return JointConnectivity(
                    False, windows, f"intervals from t = {t_start:g} to the end never reach a spanning tree")
        return JointConnectivity(False, windows, "no partition into epsilon windows covers the schedule")
    windows = []
    start = 0
    while start < n:
        stop = nxt[start]
        windows.append(Window(start, stop - 1, intervals[start][0], intervals[stop - 1][1]))
        start = stop
    return JointConnectivity(True, windows)
