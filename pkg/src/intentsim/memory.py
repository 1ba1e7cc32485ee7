"""Shared working memory: a typed attributed graph edited through all-or-nothing
transactions, with change subscriptions and immutable snapshots that detach the
internal simulator from the live context."""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

NODE_KINDS = frozenset({"robot", "person", "object", "intention", "collision"})
EDGE_LABELS = frozenset({"RT", "has_intention", "collision", "approaching"})

# Known attribute names are type-checked on commit; unknown names are allowed
# as long as the value is one of the supported attribute types.
_ATTR_SCHEMA: dict[str, type | tuple[type, ...]] = {
    "x": float, "y": float, "theta": float,
    "cls": str, "shape": str, "radius": float, "half_x": float, "half_y": float,
    "height": float, "eye_height": float, "speed_limit": float, "accel_limit": float,
    "orientation_valid": bool, "last_seen_tick": int, "track_id": int,
    "action": str, "gaze": float, "c": bool, "collision_time": float,
    "collision_xy": tuple, "reachable": bool, "subject": int, "target": int,
    "sample_index": int, "goal_x": float, "goal_y": float, "time": float,
    "room_w": float, "room_d": float,
}

OVERFLOW = object()  # explicit in-stream marker for a slow consumer


class TransactionError(ValueError):
    """A transaction was rejected; the graph is unchanged."""


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    attrs: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    label: str
    attrs: dict[str, object] = field(default_factory=dict)

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.src, self.dst, self.label)


# Transaction edit operations. Update merges attrs into the existing map.
@dataclass(frozen=True)
class AddNode:
    node: Node


@dataclass(frozen=True)
class UpdateNode:
    id: int
    attrs: dict[str, object]


@dataclass(frozen=True)
class RemoveNode:
    id: int


@dataclass(frozen=True)
class AddEdge:
    edge: Edge


@dataclass(frozen=True)
class UpdateEdge:
    src: int
    dst: int
    label: str
    attrs: dict[str, object]


@dataclass(frozen=True)
class RemoveEdge:
    src: int
    dst: int
    label: str


Edit = AddNode | UpdateNode | RemoveNode | AddEdge | UpdateEdge | RemoveEdge


@dataclass(frozen=True)
class Snapshot:
    """Point-in-time copy of the graph; never mutated after creation."""

    version: int
    nodes: dict[int, Node]
    edges: dict[tuple[int, int, str], Edge]

    def nodes_of_kind(self, kind: str) -> list[Node]:
        return sorted((n for n in self.nodes.values() if n.kind == kind), key=lambda n: n.id)

    def edges_from(self, src: int, label: str | None = None) -> list[Edge]:
        return sorted(
            (e for e in self.edges.values() if e.src == src and (label is None or e.label == label)),
            key=lambda e: e.key,
        )


@dataclass(frozen=True)
class Delta:
    version: int
    edits: tuple[Edit, ...]


def _normalize_attr(name: str, value: object) -> object:
    if isinstance(value, (list, tuple)):
        value = tuple(float(v) for v in value)
    elif isinstance(value, bool):
        pass
    elif isinstance(value, int) and _ATTR_SCHEMA.get(name) is float:
        value = float(value)
    if not isinstance(value, (bool, int, float, str, tuple)):
        raise TransactionError(f"attribute {name!r} has unsupported type {type(value).__name__}")
    expected = _ATTR_SCHEMA.get(name)
    if expected is not None and not isinstance(value, expected):
        raise TransactionError(
            f"attribute {name!r} must be {expected}, got {type(value).__name__}"
        )
    return value


def _checked_attrs(attrs: dict[str, object]) -> dict[str, object]:
    return {name: _normalize_attr(name, value) for name, value in attrs.items()}


class Subscription:
    """Delta stream for one subscriber, bounded with an explicit overflow marker."""

    def __init__(self, kinds: frozenset[str] | None, labels: frozenset[str] | None, capacity: int):
        self.kinds = kinds
        self.labels = labels
        self.capacity = capacity
        self.overflowed = False
        self._queue: deque[object] = deque()
        self._cond = threading.Condition()

    def _matches(self, delta: Delta, nodes_before: dict[int, Node]) -> bool:
        if self.kinds is None and self.labels is None:
            return True
        for edit in delta.edits:
            if isinstance(edit, AddNode) and self.kinds and edit.node.kind in self.kinds:
                return True
            if isinstance(edit, (UpdateNode, RemoveNode)) and self.kinds:
                node = nodes_before.get(edit.id)
                if node is not None and node.kind in self.kinds:
                    return True
            if isinstance(edit, AddEdge) and self.labels and edit.edge.label in self.labels:
                return True
            if isinstance(edit, (UpdateEdge, RemoveEdge)) and self.labels and edit.label in self.labels:
                return True
        return False

    def _offer(self, delta: Delta) -> None:
        with self._cond:
            if len(self._queue) >= self.capacity:
                if not self.overflowed:
                    self.overflowed = True
                    self._queue.append(OVERFLOW)
                return
            self._queue.append(delta)
            self._cond.notify_all()

    def poll(self) -> Delta | object | None:
        """Next delta, the OVERFLOW marker, or None when the stream is empty."""
        with self._cond:
            if not self._queue:
                return None
            return self._queue.popleft()

    def get(self, timeout: float | None = None) -> Delta | object | None:
        with self._cond:
            if not self._queue:
                self._cond.wait(timeout)
            if not self._queue:
                return None
            return self._queue.popleft()

    def drain(self) -> list[Delta | object]:
        with self._cond:
            items = list(self._queue)
            self._queue.clear()
            return items


class WorkingMemory:
    """The live context graph. Transactions serialize; snapshots are immutable."""

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._nodes: dict[int, Node] = {}
        self._edges: dict[tuple[int, int, str], Edge] = {}
        self._version = 0
        self._subs: list[Subscription] = []
        self.log: list[Delta] = []
        self.version_times: dict[int, float] = {}

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    def transact(self, edits: Iterable[Edit]) -> int:
        """Apply edits atomically; reject the whole batch on any inconsistency."""
        edits = tuple(edits)
        with self._lock:
            nodes = dict(self._nodes)
            edges = dict(self._edges)
            for edit in edits:
                self._apply(edit, nodes, edges)
            for key in edges:
                src, dst, label = key
                if src not in nodes or dst not in nodes:
                    raise TransactionError(f"edge {key} has a dangling endpoint")
            nodes_before = self._nodes
            self._nodes = nodes
            self._edges = edges
            self._version += 1
            delta = Delta(self._version, edits)
            self.log.append(delta)
            self.version_times[self._version] = time.perf_counter()
            for sub in self._subs:
                if sub._matches(delta, nodes_before):
                    sub._offer(delta)
            return self._version

    @staticmethod
    def _apply(edit: Edit, nodes: dict[int, Node], edges: dict[tuple[int, int, str], Edge]) -> None:
        if isinstance(edit, AddNode):
            node = edit.node
            if node.kind not in NODE_KINDS:
                raise TransactionError(f"unknown node kind {node.kind!r}")
            if node.id in nodes:
                raise TransactionError(f"node {node.id} already exists")
            nodes[node.id] = replace(node, attrs=_checked_attrs(node.attrs))
        elif isinstance(edit, UpdateNode):
            old = nodes.get(edit.id)
            if old is None:
                raise TransactionError(f"node {edit.id} does not exist")
            merged = dict(old.attrs)
            merged.update(_checked_attrs(edit.attrs))
            nodes[edit.id] = replace(old, attrs=merged)
        elif isinstance(edit, RemoveNode):
            if edit.id not in nodes:
                raise TransactionError(f"node {edit.id} does not exist")
            del nodes[edit.id]
        elif isinstance(edit, AddEdge):
            edge = edit.edge
            if edge.label not in EDGE_LABELS:
                raise TransactionError(f"unknown edge label {edge.label!r}")
            if edge.key in edges:
                raise TransactionError(f"duplicate edge {edge.key}")
            attrs = _checked_attrs(edge.attrs)
            if edge.label == "RT":
                for required in ("x", "y", "theta"):
                    if not isinstance(attrs.get(required), float):
                        raise TransactionError(f"RT edge {edge.key} missing SE(2) attr {required!r}")
            edges[edge.key] = replace(edge, attrs=attrs)
        elif isinstance(edit, UpdateEdge):
            key = (edit.src, edit.dst, edit.label)
            old = edges.get(key)
            if old is None:
                raise TransactionError(f"edge {key} does not exist")
            merged = dict(old.attrs)
            merged.update(_checked_attrs(edit.attrs))
            edges[key] = replace(old, attrs=merged)
        elif isinstance(edit, RemoveEdge):
            key = (edit.src, edit.dst, edit.label)
            if key not in edges:
                raise TransactionError(f"edge {key} does not exist")
            del edges[key]
        else:
            raise TransactionError(f"unknown edit {edit!r}")

    def snapshot(self) -> Snapshot:
        with self._lock:
            return Snapshot(
                version=self._version,
                nodes={nid: replace(n, attrs=dict(n.attrs)) for nid, n in self._nodes.items()},
                edges={k: replace(e, attrs=dict(e.attrs)) for k, e in self._edges.items()},
            )

    def subscribe(
        self,
        kinds: Iterable[str] | None = None,
        labels: Iterable[str] | None = None,
        capacity: int = 1024,
    ) -> Subscription:
        sub = Subscription(
            frozenset(kinds) if kinds is not None else None,
            frozenset(labels) if labels is not None else None,
            capacity,
        )
        with self._lock:
            self._subs.append(sub)
        return sub

    def replay(self, up_to_version: int | None = None) -> Snapshot:
        """Rebuild the graph from the transaction log (determinism check)."""
        nodes: dict[int, Node] = {}
        edges: dict[tuple[int, int, str], Edge] = {}
        version = 0
        with self._lock:
            log = list(self.log)
        for delta in log:
            if up_to_version is not None and delta.version > up_to_version:
                break
            for edit in delta.edits:
                self._apply(edit, nodes, edges)
            version = delta.version
        return Snapshot(version=version, nodes=nodes, edges=edges)


def query_people(snapshot: Snapshot) -> list[Node]:
    return snapshot.nodes_of_kind("person")


def query_objects(snapshot: Snapshot) -> list[Node]:
    return snapshot.nodes_of_kind("object")


def query_intentions(snapshot: Snapshot) -> list[Node]:
    return snapshot.nodes_of_kind("intention")


def dump(snapshot: Snapshot) -> str:
    """Human-readable graph listing for traces and the live UI."""
    lines = [f"version {snapshot.version}"]
    for node in sorted(snapshot.nodes.values(), key=lambda n: n.id):
        attrs = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(node.attrs.items()))
        lines.append(f"node {node.id} kind={node.kind} {attrs}".rstrip())
    for edge in sorted(snapshot.edges.values(), key=lambda e: e.key):
        attrs = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(edge.attrs.items()))
        lines.append(f"edge {edge.src} -> {edge.dst} label={edge.label} {attrs}".rstrip())
    return "\n".join(lines)


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    if isinstance(value, tuple):
        return "(" + ",".join(f"{v:.4f}" for v in value) + ")"
    return str(value)
