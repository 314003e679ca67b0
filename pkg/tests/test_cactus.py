import pytest

from vnelp import cactus
from vnelp.model import Request
from vnelp.scenarios import GenerationConfig, generate_request_topology, rng_for_config


def plain_request(nodes, edges, rid="r"):
    return Request(
        id=rid, nodes=tuple(nodes), edges=tuple(edges), profit=1.0,
        node_type={i: "t" for i in nodes},
        demand_node={i: 0.0 for i in nodes},
        demand_edge={e: 0.0 for e in edges},
        allowed_nodes={i: ("u",) for i in nodes},
        allowed_edges={e: () for e in edges},
    )


TRIANGLE = plain_request("ijk", (("i", "j"), ("j", "k"), ("k", "i")))


class TestIsCactus:
    def test_triangle(self):
        assert cactus.is_cactus(TRIANGLE)

    def test_tree(self):
        req = plain_request("abcd", (("a", "b"), ("a", "c"), ("c", "d")))
        assert cactus.is_cactus(req)

    def test_k4(self):
        nodes = "abcd"
        edges = [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"),
                 ("c", "d")]
        assert not cactus.is_cactus(plain_request(nodes, edges))

    def test_antiparallel_pair_is_a_cycle(self):
        req = plain_request("ij", (("i", "j"), ("j", "i")))
        assert cactus.is_cactus(req)

    def test_two_triangles_sharing_an_edge(self):
        edges = [("a", "b"), ("b", "c"), ("c", "a"), ("b", "d"), ("d", "c")]
        assert not cactus.is_cactus(plain_request("abcd", edges))

    def test_two_triangles_sharing_a_node(self):
        edges = [("a", "b"), ("b", "c"), ("c", "a"), ("a", "d"), ("d", "e"),
                 ("e", "a")]
        assert cactus.is_cactus(plain_request("abcde", edges))


class TestReorient:
    def test_single_flip(self):
        req = plain_request("abc", (("a", "b"), ("c", "b")))
        reo = cactus.reorient(req, root="a")
        oriented = [(e.tail, e.head) for e in reo.oriented_edges]
        assert oriented == [("a", "b"), ("b", "c")]
        assert reo.reversed_edges == frozenset({("c", "b")})

    def test_triangle_rooted_at_i(self):
        reo = cactus.reorient(TRIANGLE, root="i")
        oriented = {(e.tail, e.head) for e in reo.oriented_edges}
        assert oriented == {("i", "j"), ("j", "k"), ("i", "k")}
        assert reo.reversed_edges == frozenset({("k", "i")})

    def test_arborescence_is_identity(self):
        req = plain_request("abcd", (("a", "b"), ("a", "c"), ("c", "d")))
        reo = cactus.reorient(req, root="a")
        assert reo.reversed_edges == frozenset()
        assert [(e.tail, e.head) for e in reo.oriented_edges] == \
            [("a", "b"), ("a", "c"), ("c", "d")]

    def test_default_root_is_smallest_id(self):
        req = plain_request("abc", (("b", "a"), ("c", "b")))
        assert cactus.reorient(req).root == "a"

    def test_acyclic_and_reachable(self):
        # orientation follows discovery order, so it admits a topological order
        config = GenerationConfig(request_count=1, seed=5)
        rng = rng_for_config(config)
        for _ in range(200):
            nodes, edges = generate_request_topology(config, rng)
            req = plain_request(nodes, edges, rid="x")
            reo = cactus.reorient(req)
            order = {n: k for k, n in enumerate(reo.node_order)}
            assert set(order) == set(nodes)
            for e in reo.oriented_edges:
                assert order[e.tail] < order[e.head]


class TestPartition:
    def test_triangle_partition(self):
        reo = cactus.reorient(TRIANGLE, root="i")
        part = cactus.partition(reo, TRIANGLE)
        assert part.forest == ()
        assert len(part.cycles) == 1
        cyc = part.cycles[0]
        assert cyc.source == "i" and cyc.target == "k"
        assert [e.original for e in cyc.branch1] == [("i", "j"), ("j", "k")]
        assert [e.original for e in cyc.branch2] == [("k", "i")]
        assert cyc.target_candidates == ("u",)

    def test_tree_partition(self):
        req = plain_request("abcd", (("a", "b"), ("a", "c"), ("c", "d")))
        part = cactus.partition(cactus.reorient(req), req)
        assert part.cycles == ()
        assert len(part.forest) == 3

    def test_two_triangles_sharing_a_node(self):
        edges = [("a", "b"), ("b", "c"), ("c", "a"), ("a", "d"), ("d", "e"),
                 ("e", "a")]
        req = plain_request("abcde", edges)
        part = cactus.partition(cactus.reorient(req), req)
        assert len(part.cycles) == 2
        assert part.forest == ()
        covered = [e.original for c in part.cycles for e in c.oriented_edges]
        assert sorted(covered) == sorted(edges)

    def test_in_degree_three_rejected(self):
        # K4 reorientations have a node with three in-edges or overlapping
        # cycles; either way the partition must refuse
        nodes = "abcd"
        edges = [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"),
                 ("c", "d")]
        req = plain_request(nodes, edges)
        with pytest.raises(cactus.NotCactusError):
            cactus.partition(cactus.reorient(req), req)

    def test_digon_partition(self):
        req = plain_request("ij", (("i", "j"), ("j", "i")))
        part = cactus.partition(cactus.reorient(req), req)
        assert len(part.cycles) == 1
        cyc = part.cycles[0]
        assert cyc.source == "i" and cyc.target == "j"
        assert len(cyc.branch1) == 1 and len(cyc.branch2) == 1


class TestPartitionProperties:
    def test_random_cacti_partition_edges_exactly_once(self):
        config = GenerationConfig(request_count=1, seed=99)
        rng = rng_for_config(config)
        for _ in range(1000):
            nodes, edges = generate_request_topology(config, rng)
            req = plain_request(nodes, edges, rid="x")
            assert cactus.is_cactus(req)
            reo = cactus.reorient(req)
            part = cactus.partition(reo, req)
            ids = [id(e) for c in part.cycles for e in c.oriented_edges]
            ids += [id(e) for e in part.forest]
            assert sorted(ids) == sorted(id(e) for e in reo.oriented_edges)
            for cyc in part.cycles:
                assert cyc.branch1[0].tail == cyc.source
                assert cyc.branch2[0].tail == cyc.source
                assert cyc.branch1[-1].head == cyc.target
                assert cyc.branch2[-1].head == cyc.target
                for a, b in zip(cyc.branch1, cyc.branch1[1:]):
                    assert a.head == b.tail
                for a, b in zip(cyc.branch2, cyc.branch2[1:]):
                    assert a.head == b.tail

    def test_partition_independent_of_root(self):
        # the cycle structure (edge sets) is the same for every root choice
        config = GenerationConfig(request_count=1, seed=123)
        rng = rng_for_config(config)
        for _ in range(100):
            nodes, edges = generate_request_topology(config, rng)
            req = plain_request(nodes, edges, rid="x")
            reference = None
            for root in nodes:
                part = cactus.partition(cactus.reorient(req, root), req)
                cycle_sets = sorted(
                    tuple(sorted(e.original for e in c.oriented_edges))
                    for c in part.cycles)
                if reference is None:
                    reference = cycle_sets
                else:
                    assert cycle_sets == reference
