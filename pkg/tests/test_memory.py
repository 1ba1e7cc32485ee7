"""Working-memory tests: transactional atomicity, snapshot isolation,
subscription ordering, and a linearizability check by log replay."""

from __future__ import annotations

import threading

import pytest

from intentsim.memory import (
    OVERFLOW,
    AddEdge,
    AddNode,
    Delta,
    Edge,
    Node,
    RemoveNode,
    TransactionError,
    UpdateNode,
    WorkingMemory,
    dump,
    query_intentions,
    query_objects,
    query_people,
)


def person(nid: int = 2) -> Node:
    return Node(nid, "person", {"x": 1.0, "y": 2.0, "theta": 0.0, "cls": "person"})


def rt_edge(src: int, dst: int) -> Edge:
    return Edge(src, dst, "RT", {"x": 1.0, "y": 0.0, "theta": 0.0})


class TestTransact:
    def test_basic_commit_visible(self):
        wm = WorkingMemory()
        v = wm.transact([
            AddNode(Node(1, "robot", {"x": 0.0, "y": 0.0, "theta": 0.0})),
            AddNode(person(2)),
            AddEdge(rt_edge(1, 2)),
        ])
        snap = wm.snapshot()
        assert snap.version == v
        assert set(snap.nodes) == {1, 2}
        assert (1, 2, "RT") in snap.edges

    def test_dangling_edge_rejects_whole_transaction(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot"))])
        with pytest.raises(TransactionError):
            wm.transact([AddNode(person(2)), AddEdge(rt_edge(1, 99))])
        snap = wm.snapshot()
        assert set(snap.nodes) == {1}
        assert snap.version == 1

    def test_duplicate_edge_rejected(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot")), AddNode(person(2)), AddEdge(rt_edge(1, 2))])
        with pytest.raises(TransactionError):
            wm.transact([AddEdge(rt_edge(1, 2))])

    def test_remove_node_with_edges_rejected(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot")), AddNode(person(2)), AddEdge(rt_edge(1, 2))])
        with pytest.raises(TransactionError):
            wm.transact([RemoveNode(2)])

    def test_versions_monotone(self):
        wm = WorkingMemory()
        v1 = wm.transact([AddNode(Node(1, "robot"))])
        v2 = wm.transact([UpdateNode(1, {"x": 3.0})])
        assert (v1, v2) == (1, 2)

    def test_rt_edge_requires_se2(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot")), AddNode(person(2))])
        with pytest.raises(TransactionError):
            wm.transact([AddEdge(Edge(1, 2, "RT", {"x": 1.0}))])

    def test_attr_type_checked(self):
        wm = WorkingMemory()
        with pytest.raises(TransactionError):
            wm.transact([AddNode(Node(1, "robot", {"x": "oops"}))])

    def test_unknown_kind_and_label_rejected(self):
        wm = WorkingMemory()
        with pytest.raises(TransactionError):
            wm.transact([AddNode(Node(1, "ghost"))])
        wm.transact([AddNode(Node(1, "robot")), AddNode(person(2))])
        with pytest.raises(TransactionError):
            wm.transact([AddEdge(Edge(1, 2, "likes", {}))])


class TestSnapshot:
    def test_isolation_from_later_edits(self):
        wm = WorkingMemory()
        wm.transact([AddNode(person(2))])
        snap = wm.snapshot()
        wm.transact([RemoveNode(2)])
        assert 2 in snap.nodes
        assert 2 not in wm.snapshot().nodes

    def test_equal_without_intervening_edits(self):
        wm = WorkingMemory()
        wm.transact([AddNode(person(2))])
        s1, s2 = wm.snapshot(), wm.snapshot()
        assert s1.version == s2.version
        assert s1.nodes == s2.nodes
        assert s1.edges == s2.edges

    def test_concurrent_snapshots_linearizable(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot", {"x": 0.0}))])
        snaps: list = []
        errors: list = []

        def writer(k: int):
            try:
                for i in range(25):
                    wm.transact([UpdateNode(1, {"x": float(k * 100 + i)})])
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        def reader():
            for _ in range(50):
                snaps.append(wm.snapshot())

        threads = [threading.Thread(target=writer, args=(k,)) for k in range(4)]
        threads += [threading.Thread(target=reader) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        # 100 concurrent transactions committed; every snapshot must equal the
        # replayed graph at its version (a committed state, never a mix).
        assert wm.version == 101
        for snap in snaps:
            replayed = wm.replay(snap.version)
            assert replayed.nodes == snap.nodes
            assert replayed.edges == snap.edges

    def test_replay_reproduces_current_graph(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot")), AddNode(person(2)), AddEdge(rt_edge(1, 2))])
        wm.transact([UpdateNode(2, {"x": 9.0})])
        replayed = wm.replay()
        current = wm.snapshot()
        assert replayed.nodes == current.nodes
        assert replayed.edges == current.edges


class TestSubscribe:
    def test_filtered_delivery(self):
        wm = WorkingMemory()
        sub = wm.subscribe(kinds={"collision"})
        wm.transact([AddNode(Node(1, "robot"))])
        assert sub.poll() is None
        wm.transact([AddNode(Node(50, "collision", {"x": 1.0, "y": 1.0}))])
        delta = sub.poll()
        assert isinstance(delta, Delta)
        assert sub.poll() is None

    def test_rt_only_updates_not_delivered_to_collision_filter(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot")), AddNode(person(2)), AddEdge(rt_edge(1, 2))])
        sub = wm.subscribe(kinds={"collision"}, labels={"collision"})
        wm.transact([UpdateNode(1, {"x": 5.0})])
        assert sub.poll() is None

    def test_versions_delivered_in_order(self):
        wm = WorkingMemory()
        sub = wm.subscribe(capacity=2000)
        wm.transact([AddNode(Node(1, "robot", {"x": 0.0}))])
        for i in range(999):
            wm.transact([UpdateNode(1, {"x": float(i)})])
        versions = []
        while (item := sub.poll()) is not None:
            assert item is not OVERFLOW
            versions.append(item.version)
        assert versions == sorted(versions)
        assert len(versions) == 1000
        assert len(set(versions)) == 1000

    def test_overflow_signalled_never_silent(self):
        wm = WorkingMemory()
        sub = wm.subscribe(capacity=5)
        wm.transact([AddNode(Node(1, "robot", {"x": 0.0}))])
        for i in range(20):
            wm.transact([UpdateNode(1, {"x": float(i)})])
        items = sub.drain()
        assert OVERFLOW in items
        assert sub.overflowed


class TestQueries:
    def test_nominal_kind_queries(self):
        wm = WorkingMemory()
        wm.transact([
            AddNode(Node(1, "robot")),
            AddNode(person(2)),
            AddNode(Node(3, "object", {"cls": "ball"})),
            AddNode(Node(4, "object", {"cls": "couch"})),
            AddNode(Node(5, "object", {"cls": "door"})),
        ])
        snap = wm.snapshot()
        assert [n.id for n in query_people(snap)] == [2]
        assert [n.attrs["cls"] for n in query_objects(snap)] == ["ball", "couch", "door"]
        assert query_intentions(snap) == []

    def test_empty_graph_queries(self):
        snap = WorkingMemory().snapshot()
        assert query_people(snap) == []
        assert query_objects(snap) == []
        assert query_intentions(snap) == []

    def test_dump_lists_nodes_and_edges(self):
        wm = WorkingMemory()
        wm.transact([AddNode(Node(1, "robot")), AddNode(person(2)), AddEdge(rt_edge(1, 2))])
        text = dump(wm.snapshot())
        assert "node 1 kind=robot" in text
        assert "edge 1 -> 2 label=RT" in text
