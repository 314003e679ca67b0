import pytest

from vnelp import counterexamples as cx
from vnelp.model import (
    MappingStructureError,
    Request,
    ValidMapping,
    allocations,
    is_feasible_embedding,
    max_allocation_exact,
    max_demand,
    validate_mapping,
)
from vnelp.oracle import enumerate_valid_mappings

from conftest import single_node_request, small_substrate


def triangle_mapping():
    # the known valid placement of the triangle on the 6-ring
    return ValidMapping(
        node_map={"i": "u1", "j": "u2", "k": "u3"},
        edge_map={
            ("i", "j"): (("u1", "u2"),),
            ("j", "k"): (("u2", "u3"),),
            ("k", "i"): (("u3", "u4"), ("u4", "u5"), ("u5", "u6"), ("u6", "u1")),
        },
    )


class TestValidateMapping:
    def test_triangle_wraparound_mapping_is_valid(self, triangle):
        substrate, request = triangle
        ok, diag = validate_mapping(request, substrate, triangle_mapping())
        assert ok, diag

    def test_single_node_request(self):
        substrate = small_substrate()
        request = single_node_request("r", allowed=(substrate.nodes[0],))
        mapping = ValidMapping(node_map={"i": substrate.nodes[0]}, edge_map={})
        ok, diag = validate_mapping(request, substrate, mapping)
        assert ok and diag is None

    def test_path_endpoint_mismatch(self, triangle):
        substrate, request = triangle
        mapping = triangle_mapping()
        broken = ValidMapping(
            node_map=mapping.node_map,
            edge_map={**mapping.edge_map, ("i", "j"): (("u2", "u3"),)},
        )
        ok, diag = validate_mapping(request, substrate, broken)
        assert not ok
        assert "path endpoint mismatch" in diag

    def test_empty_path_requires_colocation(self, triangle):
        substrate, request = triangle
        mapping = triangle_mapping()
        broken = ValidMapping(node_map=mapping.node_map,
                              edge_map={**mapping.edge_map, ("i", "j"): ()})
        ok, diag = validate_mapping(request, substrate, broken)
        assert not ok and "empty path" in diag

    def test_disallowed_node_placement(self, triangle):
        substrate, request = triangle
        mapping = triangle_mapping()
        broken = ValidMapping(node_map={**mapping.node_map, "i": "u2"},
                              edge_map=mapping.edge_map)
        ok, diag = validate_mapping(request, substrate, broken)
        assert not ok and "allowed set" in diag

    def test_unknown_ids_are_structural_errors(self, triangle):
        substrate, request = triangle
        mapping = triangle_mapping()
        with pytest.raises(MappingStructureError):
            validate_mapping(request, substrate, ValidMapping(
                node_map={**mapping.node_map, "ghost": "u1"},
                edge_map=mapping.edge_map))
        with pytest.raises(MappingStructureError):
            validate_mapping(request, substrate, ValidMapping(
                node_map={**mapping.node_map, "i": "nowhere"},
                edge_map=mapping.edge_map))

    def test_missing_edge_is_structural(self, triangle):
        substrate, request = triangle
        mapping = triangle_mapping()
        edge_map = dict(mapping.edge_map)
        del edge_map[("j", "k")]
        with pytest.raises(MappingStructureError):
            validate_mapping(request, substrate,
                             ValidMapping(mapping.node_map, edge_map))


class TestAllocations:
    def test_colocated_nodes_sum(self):
        substrate = small_substrate()
        u = substrate.nodes[0]
        request = Request(
            id="r", nodes=("a", "b"), edges=(("a", "b"),), profit=1.0,
            node_type={"a": "t", "b": "t"},
            demand_node={"a": 2.0, "b": 3.0}, demand_edge={("a", "b"): 0.0},
            allowed_nodes={"a": (u,), "b": (u,)},
            allowed_edges={("a", "b"): tuple(substrate.edges)},
        )
        mapping = ValidMapping(node_map={"a": u, "b": u},
                               edge_map={("a", "b"): ()})
        alloc = allocations(request, mapping)
        assert alloc[("t", u)] == pytest.approx(5.0)

    def test_edge_demand_counted_on_every_path_edge(self, triangle):
        substrate, request = triangle
        alloc = allocations(request, triangle_mapping())
        for se in (("u3", "u4"), ("u4", "u5"), ("u5", "u6"), ("u6", "u1")):
            assert alloc[se] == pytest.approx(1.0)

    def test_empty_path_allocates_nothing(self):
        substrate = small_substrate()
        u = substrate.nodes[0]
        request = Request(
            id="r", nodes=("a", "b"), edges=(("a", "b"),), profit=1.0,
            node_type={"a": "t", "b": "t"},
            demand_node={"a": 0.0, "b": 0.0}, demand_edge={("a", "b"): 7.0},
            allowed_nodes={"a": (u,), "b": (u,)},
            allowed_edges={("a", "b"): tuple(substrate.edges)},
        )
        mapping = ValidMapping(node_map={"a": u, "b": u},
                               edge_map={("a", "b"): ()})
        assert allocations(request, mapping) == {}


class TestFeasibleEmbedding:
    def test_empty_mapping_set(self, triangle):
        substrate, request = triangle
        assert is_feasible_embedding([request], substrate, {})

    def test_overcommitted_edge(self):
        substrate = small_substrate(capacity=100.0)
        e = substrate.edges[0]
        u, v = e
        requests = []
        mappings = {}
        for rid in ("a", "b"):
            r = Request(
                id=rid, nodes=("x", "y"), edges=(("x", "y"),), profit=1.0,
                node_type={"x": "t", "y": "t"},
                demand_node={"x": 0.0, "y": 0.0}, demand_edge={("x", "y"): 60.0},
                allowed_nodes={"x": (u,), "y": (v,)},
                allowed_edges={("x", "y"): (e,)},
            )
            requests.append(r)
            mappings[rid] = ValidMapping(node_map={"x": u, "y": v},
                                         edge_map={("x", "y"): (e,)})
        assert not is_feasible_embedding(requests, substrate, mappings)
        assert is_feasible_embedding(requests, substrate, {"a": mappings["a"]})

    def test_ring_gap_copies(self, ring_gap):
        substrate, requests = ring_gap
        mappings = {}
        for r in requests[:2]:
            ms = enumerate_valid_mappings(r, substrate)
            mappings[r.id] = ms[0]
        # one wrap-around copy fits, two exceed the unit edge capacities
        assert is_feasible_embedding(requests, substrate,
                                     {requests[0].id: mappings[requests[0].id]})
        assert not is_feasible_embedding(requests, substrate, mappings)

    def test_monotone_under_removal(self, ring_gap):
        substrate, requests = ring_gap
        m = enumerate_valid_mappings(requests[0], substrate)[0]
        assert is_feasible_embedding(requests, substrate, {requests[0].id: m})
        assert is_feasible_embedding(requests, substrate, {})


class TestMaxDemand:
    def test_node_resource_max(self):
        substrate = small_substrate()
        u = substrate.nodes[0]
        request = Request(
            id="r", nodes=("a", "b"), edges=(("a", "b"),), profit=1.0,
            node_type={"a": "t", "b": "t"},
            demand_node={"a": 2.0, "b": 5.0}, demand_edge={("a", "b"): 0.0},
            allowed_nodes={"a": (u,), "b": (u,)},
            allowed_edges={("a", "b"): tuple(substrate.edges)},
        )
        assert max_demand(request, ("t", u)) == pytest.approx(5.0)

    def test_untouchable_resource_is_zero(self):
        substrate = small_substrate()
        request = single_node_request("r", allowed=(substrate.nodes[0],))
        assert max_demand(request, ("t", substrate.nodes[1])) == 0.0
        assert max_demand(request, substrate.edges[0]) == 0.0

    def test_edge_resource_max(self, triangle):
        substrate, request = triangle
        assert max_demand(request, ("u1", "u2")) == pytest.approx(1.0)


class TestMaxAllocationExact:
    def test_single_node(self):
        substrate = small_substrate()
        u = substrate.nodes[0]
        request = single_node_request("r", allowed=(u,), demand=4.0)
        assert max_allocation_exact(request, substrate, ("t", u)) == pytest.approx(4.0)

    def test_triangle_node_resource(self, triangle):
        substrate, request = triangle
        # only i may sit on u1; its demand is 1
        expected = max(
            allocations(request, m).get(("t", "u1"), 0.0)
            for m in enumerate_valid_mappings(request, substrate))
        assert expected == pytest.approx(1.0)
        assert max_allocation_exact(request, substrate, ("t", "u1")) == \
            pytest.approx(expected)

    def test_ring_gap_every_edge_carries_one(self, ring_gap):
        substrate, requests = ring_gap
        r = requests[0]
        for e in substrate.edges:
            assert max_allocation_exact(r, substrate, e) == pytest.approx(1.0)


class TestInvariants:
    def test_validate_iff_enumerated(self, triangle):
        substrate, request = triangle
        enumerated = enumerate_valid_mappings(request, substrate)
        keys = {(tuple(sorted(m.node_map.items())),
                 tuple(sorted(m.edge_map.items()))) for m in enumerated}
        for m in enumerated:
            ok, diag = validate_mapping(request, substrate, m)
            assert ok, diag
        assert (tuple(sorted(triangle_mapping().node_map.items())),
                tuple(sorted(triangle_mapping().edge_map.items()))) in keys

    def test_allocation_bounded_by_exact_max(self, triangle):
        substrate, request = triangle
        mappings = enumerate_valid_mappings(request, substrate)
        for res in substrate.resources:
            bound = max_allocation_exact(request, substrate, res)
            for m in mappings:
                assert allocations(request, m).get(res, 0.0) <= bound + 1e-12
