"""Core data model: substrates, requests, mappings, allocations, feasibility.

Resources are 2-tuples of strings: a node resource is ``(type_id, node_id)``
and an edge resource is a directed substrate edge ``(u, v)``.  Type ids and
node ids must be disjoint so the two kinds never collide as dict keys.

All types are immutable after construction (frozen dataclasses; the dict
fields are never mutated by this library) and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

Edge = tuple[str, str]
Resource = tuple[str, str]
#: Allocation vectors map resources to nonnegative reals; untouched
#: resources are absent and read as 0.
AllocationVector = dict[Resource, float]

#: Absolute tolerance for all capacity / weight comparisons.
TOLERANCE = 1e-6


class MappingStructureError(ValueError):
    """Mapping references unknown virtual/substrate ids or misses elements.

    Distinct from mere invalidity: a structurally broken mapping cannot even
    be checked against the mapping rules.
    """


def _check_edge_list(edges: Sequence[Edge], nodes: Iterable[str], what: str) -> None:
    node_set = set(nodes)
    seen = set()
    for e in edges:
        u, v = e
        if u not in node_set or v not in node_set:
            raise ValueError(f"{what} edge {e} references unknown node")
        if u == v:
            raise ValueError(f"{what} self-loop {e} not allowed")
        if e in seen:
            raise ValueError(f"{what} parallel edge {e} not allowed")
        seen.add(e)


@dataclass(frozen=True)
class SubstrateNetwork:
    """Directed physical network with typed node capacities and edge capacities."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    types: frozenset[str]
    supported_types: Mapping[str, frozenset[str]]
    capacity_node: Mapping[Resource, float]
    capacity_edge: Mapping[Edge, float]
    cost_node: Mapping[Resource, float] = field(default_factory=dict)
    cost_edge: Mapping[Edge, float] = field(default_factory=dict)
    coordinates: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    name: str = "substrate"

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("substrate has no nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate substrate node ids")
        if self.types & set(self.nodes):
            raise ValueError("type ids and node ids must be disjoint")
        _check_edge_list(self.edges, self.nodes, "substrate")
        for u, supported in self.supported_types.items():
            if u not in set(self.nodes):
                raise ValueError(f"supported_types references unknown node {u}")
            if not set(supported) <= self.types:
                raise ValueError(f"node {u} supports unknown type")
        expected = {(t, u) for u in self.nodes for t in self.supported_types.get(u, ())}
        if set(self.capacity_node) != expected:
            raise ValueError("capacity_node must be keyed exactly by the node resources")
        for res, cap in self.capacity_node.items():
            if cap <= 0:
                raise ValueError(f"node capacity {res} must be positive")
        if set(self.capacity_edge) != set(self.edges):
            raise ValueError("capacity_edge must be keyed exactly by the substrate edges")
        for e, cap in self.capacity_edge.items():
            if cap <= 0:
                raise ValueError(f"edge capacity {e} must be positive")
        for res in self.cost_node:
            if res not in self.capacity_node:
                raise ValueError(f"cost_node key {res} is not a node resource")
        for e in self.cost_edge:
            if e not in self.capacity_edge:
                raise ValueError(f"cost_edge key {e} is not a substrate edge")

    @cached_property
    def node_resources(self) -> tuple[Resource, ...]:
        return tuple(sorted(self.capacity_node))

    @cached_property
    def resources(self) -> tuple[Resource, ...]:
        return self.node_resources + tuple(sorted(self.edges))

    def capacity(self, resource: Resource) -> float:
        if resource in self.capacity_node:
            return self.capacity_node[resource]
        return self.capacity_edge[resource]

    def cost(self, resource: Resource) -> float:
        if resource in self.capacity_node:
            return self.cost_node.get(resource, 0.0)
        return self.cost_edge.get(resource, 0.0)

    def nodes_supporting(self, type_id: str) -> tuple[str, ...]:
        return tuple(u for u in self.nodes if type_id in self.supported_types.get(u, ()))

    @cached_property
    def out_edges(self) -> Mapping[str, tuple[Edge, ...]]:
        adj: dict[str, list[Edge]] = {u: [] for u in self.nodes}
        for e in self.edges:
            adj[e[0]].append(e)
        return {u: tuple(sorted(es)) for u, es in adj.items()}

    @cached_property
    def in_edges(self) -> Mapping[str, tuple[Edge, ...]]:
        adj: dict[str, list[Edge]] = {u: [] for u in self.nodes}
        for e in self.edges:
            adj[e[1]].append(e)
        return {u: tuple(sorted(es)) for u, es in adj.items()}


def _connected(nodes: Sequence[str], edges: Sequence[Edge]) -> bool:
    if not nodes:
        return False
    adj: dict[str, set[str]] = {i: set() for i in nodes}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(nodes)


@dataclass(frozen=True)
class Request:
    """Directed virtual network with demands, profit and mapping restrictions."""

    id: str
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    profit: float
    node_type: Mapping[str, str]
    demand_node: Mapping[str, float]
    demand_edge: Mapping[Edge, float]
    allowed_nodes: Mapping[str, tuple[str, ...]]
    allowed_edges: Mapping[Edge, tuple[Edge, ...]]

    def __post_init__(self):
        if not self.nodes:
            raise ValueError(f"request {self.id} has no nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"request {self.id} has duplicate node ids")
        _check_edge_list(self.edges, self.nodes, f"request {self.id}")
        if self.profit <= 0:
            raise ValueError(f"request {self.id} profit must be positive")
        node_set = set(self.nodes)
        if set(self.node_type) != node_set or set(self.demand_node) != node_set:
            raise ValueError(f"request {self.id}: node maps must cover exactly the nodes")
        if set(self.demand_edge) != set(self.edges) or set(self.allowed_edges) != set(self.edges):
            raise ValueError(f"request {self.id}: edge maps must cover exactly the edges")
        if set(self.allowed_nodes) != node_set:
            raise ValueError(f"request {self.id}: allowed_nodes must cover exactly the nodes")
        for i, allowed in self.allowed_nodes.items():
            if not allowed:
                raise ValueError(f"request {self.id}: empty allowed set for node {i}")
        for i, d in self.demand_node.items():
            if d < 0:
                raise ValueError(f"request {self.id}: negative demand at node {i}")
        for e, d in self.demand_edge.items():
            if d < 0:
                raise ValueError(f"request {self.id}: negative demand at edge {e}")
        if not _connected(self.nodes, self.edges):
            raise ValueError(f"request {self.id} is not connected")

    def validate_against(self, substrate: SubstrateNetwork) -> None:
        """Check the capacity-sufficiency invariants of the allowed sets."""
        for i in self.nodes:
            t = self.node_type[i]
            if t not in substrate.types:
                raise ValueError(f"request {self.id}: node {i} has unknown type {t}")
            for u in self.allowed_nodes[i]:
                if t not in substrate.supported_types.get(u, ()):
                    raise ValueError(
                        f"request {self.id}: node {i} allowed on {u} which does not support {t}")
                if substrate.capacity_node[(t, u)] + TOLERANCE < self.demand_node[i]:
                    raise ValueError(
                        f"request {self.id}: node {i} allowed on {u} with insufficient capacity")
        substrate_edges = set(substrate.edges)
        for e in self.edges:
            for se in self.allowed_edges[e]:
                if se not in substrate_edges:
                    raise ValueError(f"request {self.id}: allowed edge {se} not in substrate")
                if substrate.capacity_edge[se] + TOLERANCE < self.demand_edge[e]:
                    raise ValueError(
                        f"request {self.id}: edge {e} allowed on {se} with insufficient capacity")


@dataclass(frozen=True)
class ValidMapping:
    """Node map plus edge-path map; paths are edge lists so the empty path exists."""

    node_map: Mapping[str, str]
    edge_map: Mapping[Edge, tuple[Edge, ...]]


@dataclass(frozen=True)
class Instance:
    """A substrate together with the requests competing for it."""

    substrate: SubstrateNetwork
    requests: tuple[Request, ...]
    name: str = "instance"

    def __post_init__(self):
        ids = [r.id for r in self.requests]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate request ids")
        for r in self.requests:
            r.validate_against(self.substrate)

    def request(self, rid: str) -> Request:
        for r in self.requests:
            if r.id == rid:
                return r
        raise KeyError(rid)


@dataclass(frozen=True)
class DecompositionEntry:
    weight: float
    mapping: ValidMapping


@dataclass(frozen=True)
class ConvexDecomposition:
    """Convex combination of valid mappings extracted from an LP solution."""

    request_id: str
    entries: tuple[DecompositionEntry, ...]
    #: LP mass below tolerance that was discarded during extraction.
    residual: float = 0.0
    #: Total magnitude by which allocation bookkeeping was clamped at zero.
    allocation_clamp: float = 0.0

    @property
    def total_weight(self) -> float:
        return sum(e.weight for e in self.entries)


def validate_mapping(
    request: Request, substrate: SubstrateNetwork, mapping: ValidMapping
) -> tuple[bool, Optional[str]]:
    """Check the mapping rules; returns (ok, diagnostic of first violation).

    Structural problems (unknown ids, missing coverage) raise
    :class:`MappingStructureError` instead of returning ``False``.
    """
    node_set = set(request.nodes)
    if set(mapping.node_map) != node_set:
        raise MappingStructureError(
            f"node_map must cover exactly the virtual nodes of {request.id}")
    if set(mapping.edge_map) != set(request.edges):
        raise MappingStructureError(
            f"edge_map must cover exactly the virtual edges of {request.id}")
    substrate_nodes = set(substrate.nodes)
    substrate_edges = set(substrate.edges)
    for i, u in mapping.node_map.items():
        if u not in substrate_nodes:
            raise MappingStructureError(f"virtual node {i} mapped to unknown node {u}")
    for e, path in mapping.edge_map.items():
        for se in path:
            if se not in substrate_edges:
                raise MappingStructureError(f"virtual edge {e} routed over unknown edge {se}")

    for i in request.nodes:
        if mapping.node_map[i] not in request.allowed_nodes[i]:
            return False, f"virtual node {i} mapped outside its allowed set"
    for e in request.edges:
        i, j = e
        path = mapping.edge_map[e]
        start, end = mapping.node_map[i], mapping.node_map[j]
        if not path:
            if start != end:
                return False, f"virtual edge {e}: empty path but endpoints differ"
            continue
        if path[0][0] != start or path[-1][1] != end:
            return False, f"virtual edge {e}: path endpoint mismatch"
        for a, b in zip(path, path[1:]):
            if a[1] != b[0]:
                return False, f"virtual edge {e}: path not contiguous"
        allowed = set(request.allowed_edges[e])
        for se in path:
            if se not in allowed:
                return False, f"virtual edge {e}: uses disallowed substrate edge {se}"
    return True, None


def allocations(request: Request, mapping: ValidMapping) -> dict[Resource, float]:
    """Cumulative allocation the mapping induces per substrate resource.

    Resources untouched by the mapping are simply absent (read with
    ``.get(res, 0.0)``).
    """
    alloc: dict[Resource, float] = {}
    for i in request.nodes:
        d = request.demand_node[i]
        if d == 0:
            continue
        res = (request.node_type[i], mapping.node_map[i])
        alloc[res] = alloc.get(res, 0.0) + d
    for e in request.edges:
        d = request.demand_edge[e]
        if d == 0:
            continue
        for se in mapping.edge_map[e]:
            alloc[se] = alloc.get(se, 0.0) + d
    return alloc


def is_feasible_embedding(
    requests: Sequence[Request],
    substrate: SubstrateNetwork,
    mappings: Mapping[str, ValidMapping],
) -> bool:
    """True iff the summed allocations respect every substrate capacity."""
    by_id = {r.id: r for r in requests}
    total: dict[Resource, float] = {}
    for rid, mapping in mappings.items():
        request = by_id[rid]
        ok, diag = validate_mapping(request, substrate, mapping)
        if not ok:
            raise ValueError(f"mapping for {rid} is invalid: {diag}")
        for res, val in allocations(request, mapping).items():
            total[res] = total.get(res, 0.0) + val
    for res, val in total.items():
        if val > substrate.capacity(res) + TOLERANCE:
            return False
    return True


def max_demand(request: Request, resource: Resource) -> float:
    """Largest demand the request may impose on the resource; 0 if untouchable."""
    x, y = resource
    candidates = [0.0]
    for i in request.nodes:
        if request.node_type[i] == x and y in request.allowed_nodes[i]:
            candidates.append(request.demand_node[i])
    for e in request.edges:
        if resource in request.allowed_edges[e]:
            candidates.append(request.demand_edge[e])
    return max(candidates)


def max_allocation_exact(
    request: Request,
    substrate: SubstrateNetwork,
    resource: Resource,
    path_length_cap: Optional[int] = None,
    budget: int = 10**6,
) -> float:
    """Exact maximum allocation over all valid mappings, via oracle enumeration.

    Raises :class:`vnelp.oracle.BudgetExceededError` when enumeration exceeds
    the budget; callers then fall back to the analytic upper bounds.
    """
    from . import oracle

    best = 0.0
    for mapping in oracle.enumerate_valid_mappings(
        request, substrate, path_length_cap=path_length_cap, budget=budget
    ):
        best = max(best, allocations(request, mapping).get(resource, 0.0))
    return best
