"""Hand-built instances on which the two formulations provably disagree.

These are the executable fixtures behind the gap results: a triangle request
on a six-node ring whose fractional flow solution admits no valid mapping,
its edge-restricted variant with an unbounded gap, and the ring instance
whose gap grows with the substrate size.
"""

from __future__ import annotations

from .model import Request, SubstrateNetwork


def ring_substrate(n: int, capacity: float = 1.0, types: tuple[str, ...] = ("t",),
                   node_capacity: float = 1.0) -> SubstrateNetwork:
    """One-way directed cycle u1 -> u2 -> ... -> un -> u1."""
    if n < 2:
        raise ValueError("ring needs at least 2 nodes")
    width = len(str(n))
    nodes = tuple(f"u{k:0{width}d}" for k in range(1, n + 1))
    edges = tuple((nodes[k], nodes[(k + 1) % n]) for k in range(n))
    return SubstrateNetwork(
        nodes=nodes,
        edges=edges,
        types=frozenset(types),
        supported_types={u: frozenset(types) for u in nodes},
        capacity_node={(t, u): node_capacity for t in types for u in nodes},
        capacity_edge={e: capacity for e in edges},
        name=f"ring({n})",
    )


def triangle_ring_instance(
    edge_restricted: bool = False,
    profit: float = 10.0,
) -> tuple[SubstrateNetwork, Request]:
    """Triangle request i->j->k->i on a 6-ring with alternating allowed nodes.

    The half/half fractional solution of the classic model is feasible here
    but cannot be decomposed into valid mappings.  With ``edge_restricted``
    the allowed edge sets shrink so that no valid mapping exists at all while
    the fractional solution stays feasible: the classic relaxation then
    overestimates the profit by an unbounded factor.
    """
    substrate = ring_substrate(6, capacity=100.0, node_capacity=100.0)
    u1, u2, u3, u4, u5, u6 = substrate.nodes
    all_edges = tuple(sorted(substrate.edges))
    if edge_restricted:
        allowed_edges = {
            ("i", "j"): ((u1, u2), (u4, u5)),
            ("j", "k"): ((u2, u3), (u5, u6)),
            ("k", "i"): ((u3, u4), (u6, u1)),
        }
    else:
        allowed_edges = {e: all_edges for e in (("i", "j"), ("j", "k"), ("k", "i"))}
    request = Request(
        id="triangle",
        nodes=("i", "j", "k"),
        edges=(("i", "j"), ("j", "k"), ("k", "i")),
        profit=profit,
        node_type={n: "t" for n in ("i", "j", "k")},
        demand_node={n: 1.0 for n in ("i", "j", "k")},
        demand_edge={e: 1.0 for e in allowed_edges},
        allowed_nodes={"i": (u1, u4), "j": (u2, u5), "k": (u3, u6)},
        allowed_edges=allowed_edges,
    )
    request.validate_against(substrate)
    return substrate, request


def triangle_fractional_assignment(
    substrate: SubstrateNetwork, request: Request
) -> dict[str, float]:
    """The half/half flow solution of the classic model for the triangle.

    Virtual nodes sit with value 1/2 on both their allowed substrate nodes;
    each virtual edge pushes 1/2 a unit of flow along the two ring arcs
    between consecutive placements.
    """
    from .formulations import a_name, x_name, y_name, z_name

    rid = request.id
    u1, u2, u3, u4, u5, u6 = substrate.nodes
    assignment = {x_name(rid): 1.0}
    placements = {"i": (u1, u4), "j": (u2, u5), "k": (u3, u6)}
    for i, nodes in placements.items():
        for u in nodes:
            assignment[y_name(rid, i, u)] = 0.5
    flows = {
        ("i", "j"): ((u1, u2), (u4, u5)),
        ("j", "k"): ((u2, u3), (u5, u6)),
        ("k", "i"): ((u3, u4), (u6, u1)),
    }
    for e, substrate_edges in flows.items():
        for se in substrate_edges:
            assignment[z_name(rid, *e, *se)] = 0.5
    for u in substrate.nodes:
        assignment[a_name(rid, ("t", u), is_node=True)] = 0.5
    for se in substrate.edges:
        assignment[a_name(rid, se, is_node=False)] = 0.5
    return assignment


def ring_gap_instance(
    n: int = 8, copies: int = 4, profit: float = 1.0
) -> tuple[SubstrateNetwork, tuple[Request, ...]]:
    """Two-node digon requests on an n-ring with odd/even placement.

    Every valid mapping wraps the whole ring, so at most one copy fits
    integrally, while the classic relaxation happily embeds all of them by
    spreading each copy thinly around the ring.
    """
    if n % 2 != 0:
        raise ValueError("ring size must be even")
    substrate = ring_substrate(n, capacity=1.0, node_capacity=1.0)
    odd = tuple(substrate.nodes[k] for k in range(0, n, 2))
    even = tuple(substrate.nodes[k] for k in range(1, n, 2))
    all_edges = tuple(sorted(substrate.edges))
    requests = []
    for c in range(copies):
        request = Request(
            id=f"pair{c}",
            nodes=("i", "j"),
            edges=(("i", "j"), ("j", "i")),
            profit=profit,
            node_type={"i": "t", "j": "t"},
            demand_node={"i": 0.0, "j": 0.0},
            demand_edge={("i", "j"): 1.0, ("j", "i"): 1.0},
            allowed_nodes={"i": odd, "j": even},
            allowed_edges={("i", "j"): all_edges, ("j", "i"): all_edges},
        )
        request.validate_against(substrate)
        requests.append(request)
    return substrate, tuple(requests)
