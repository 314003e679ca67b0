import pytest

from vnelp import counterexamples as cx
from vnelp.model import Instance, Request, SubstrateNetwork
from vnelp.scenarios import GenerationConfig, generate_instance


def small_substrate(n: int = 8, chords=((0, 3), (2, 6), (5, 1)),
                    capacity: float = 10.0) -> SubstrateNetwork:
    """Ring of n nodes plus a few chords, both directions, uniform capacity."""
    nodes = tuple(f"s{k:02d}" for k in range(n))
    pairs = {(k, (k + 1) % n) for k in range(n)}
    for a, b in chords:
        if a != b and (a, b) not in pairs and (b, a) not in pairs:
            pairs.add((a % n, b % n))
    edges = []
    for a, b in sorted(pairs):
        edges.append((nodes[a], nodes[b]))
        edges.append((nodes[b], nodes[a]))
    edges = tuple(sorted(set(edges)))
    return SubstrateNetwork(
        nodes=nodes,
        edges=edges,
        types=frozenset({"t"}),
        supported_types={u: frozenset({"t"}) for u in nodes},
        capacity_node={("t", u): capacity for u in nodes},
        capacity_edge={e: capacity for e in edges},
        cost_node={("t", u): 1.0 for u in nodes},
        cost_edge={e: 1.0 for e in edges},
        name=f"test-ring({n})",
    )


def random_instance(seed: int, substrate: SubstrateNetwork = None,
                    n_requests: int = 3, nrf: float = 0.5, erf: float = 1.0,
                    **config_kwargs) -> Instance:
    if substrate is None:
        substrate = small_substrate()
    config = GenerationConfig(request_count=n_requests, nrf=nrf, erf=erf,
                              seed=seed, **config_kwargs)
    instance, _ = generate_instance(substrate, config, name=f"rand{seed}")
    return instance


def single_node_request(rid: str, allowed, demand: float = 4.0,
                        profit: float = 1.0, type_id: str = "t") -> Request:
    return Request(
        id=rid, nodes=("i",), edges=(), profit=profit,
        node_type={"i": type_id}, demand_node={"i": demand}, demand_edge={},
        allowed_nodes={"i": tuple(allowed)}, allowed_edges={},
    )


@pytest.fixture
def triangle():
    return cx.triangle_ring_instance(edge_restricted=False)


@pytest.fixture
def triangle_restricted():
    return cx.triangle_ring_instance(edge_restricted=True)


@pytest.fixture
def ring_gap():
    return cx.ring_gap_instance(8, 4, profit=1.0)
