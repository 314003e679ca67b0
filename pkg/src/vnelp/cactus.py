"""Acyclic reorientation and the unique cycle/forest partition of cactus requests.

Antiparallel request edges (i,j)/(j,i) count as a two-edge cycle, so the
undirected interpretation is a multigraph and edges are tracked by identity,
not by endpoint pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import Edge, Request


class NotCactusError(ValueError):
    pass


@dataclass(frozen=True)
class OrientedEdge:
    """One request edge as it appears in the acyclic reorientation."""

    tail: str
    head: str
    original: Edge
    reversed: bool


@dataclass(frozen=True)
class AcyclicReorientation:
    root: str
    oriented_edges: tuple[OrientedEdge, ...]
    reversed_edges: frozenset[Edge]
    #: Discovery order of the graph search that produced the orientation.
    node_order: tuple[str, ...]

    def out_edges(self, node: str) -> tuple[OrientedEdge, ...]:
        return tuple(e for e in self.oriented_edges if e.tail == node)

    def in_edges(self, node: str) -> tuple[OrientedEdge, ...]:
        return tuple(e for e in self.oriented_edges if e.head == node)


@dataclass(frozen=True)
class CycleSubgraph:
    """One cycle of the partition; both branches run source -> target."""

    source: str
    target: str
    branch1: tuple[OrientedEdge, ...]
    branch2: tuple[OrientedEdge, ...]
    target_candidates: tuple[str, ...]

    @property
    def oriented_edges(self) -> tuple[OrientedEdge, ...]:
        return self.branch1 + self.branch2

    @property
    def nodes(self) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.oriented_edges:
            for n in (e.tail, e.head):
                if n not in seen:
                    seen.append(n)
        return tuple(seen)

    @property
    def original_edges(self) -> tuple[Edge, ...]:
        return tuple(e.original for e in self.oriented_edges)


@dataclass(frozen=True)
class CactusPartition:
    cycles: tuple[CycleSubgraph, ...]
    forest: tuple[OrientedEdge, ...]


def _undirected_adjacency(request: Request) -> dict[str, list[tuple[int, str]]]:
    """node -> [(edge index, neighbour)]; parallel antiparallel edges kept apart."""
    adj: dict[str, list[tuple[int, str]]] = {i: [] for i in request.nodes}
    for idx, (i, j) in enumerate(request.edges):
        adj[i].append((idx, j))
        adj[j].append((idx, i))
    for i in adj:
        adj[i].sort(key=lambda t: (t[1], t[0]))
    return adj


def is_cactus(request: Request) -> bool:
    """True iff every edge of the undirected interpretation lies on at most one cycle.

    Checked via biconnected components: each component must be a single edge
    or a simple cycle (equal node and edge counts; a digon counts as a cycle).
    """
    adj = _undirected_adjacency(request)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    counter = 0
    edge_stack: list[int] = []
    components: list[list[int]] = []

    for start in request.nodes:
        if start in index:
            continue
        # iterative DFS; each stack frame is (node, parent edge idx, iterator pos)
        stack = [(start, -1, 0)]
        index[start] = low[start] = counter
        counter += 1
        while stack:
            node, parent_edge, pos = stack.pop()
            advanced = False
            for k in range(pos, len(adj[node])):
                eidx, nbr = adj[node][k]
                if eidx == parent_edge:
                    continue
                if nbr not in index:
                    edge_stack.append(eidx)
                    stack.append((node, parent_edge, k + 1))
                    index[nbr] = low[nbr] = counter
                    counter += 1
                    stack.append((nbr, eidx, 0))
                    advanced = True
                    break
                if index[nbr] < index[node]:
                    edge_stack.append(eidx)
                    low[node] = min(low[node], index[nbr])
            if advanced:
                continue
            if stack:
                pnode = stack[-1][0]
                low[pnode] = min(low[pnode], low[node])
                if low[node] >= index[pnode]:
                    comp = []
                    while True:
                        eidx = edge_stack.pop()
                        comp.append(eidx)
                        if eidx == parent_edge:
                            break
                    components.append(comp)

    for comp in components:
        if len(comp) == 1:
            continue
        nodes = set()
        for eidx in comp:
            nodes.update(request.edges[eidx])
        if len(comp) != len(nodes):
            return False
        degree: dict[str, int] = {}
        for eidx in comp:
            for n in request.edges[eidx]:
                degree[n] = degree.get(n, 0) + 1
        if any(d != 2 for d in degree.values()):
            return False
    return True


def reorient(request: Request, root: Optional[str] = None) -> AcyclicReorientation:
    """Orient every edge away from the root along BFS discovery order.

    Each edge points from its earlier-discovered endpoint to the later one,
    which is acyclic and keeps every node reachable from the root.
    """
    if root is None:
        root = min(request.nodes)
    if root not in request.nodes:
        raise ValueError(f"root {root} is not a node of request {request.id}")
    adj = _undirected_adjacency(request)

    order: dict[str, int] = {root: 0}
    node_order = [root]
    queue = [root]
    oriented: list[OrientedEdge] = []
    seen_edges: set[int] = set()
    while queue:
        node = queue.pop(0)
        for eidx, nbr in adj[node]:
            if nbr not in order:
                order[nbr] = len(node_order)
                node_order.append(nbr)
                queue.append(nbr)
            if eidx in seen_edges:
                continue
            seen_edges.add(eidx)
            i, j = request.edges[eidx]
            if order[i] <= order[j]:
                oriented.append(OrientedEdge(i, j, (i, j), False))
            else:
                oriented.append(OrientedEdge(j, i, (i, j), True))
    if len(order) != len(request.nodes):
        raise ValueError(f"request {request.id} is not connected")
    reversed_set = frozenset(e.original for e in oriented if e.reversed)
    return AcyclicReorientation(
        root=root,
        oriented_edges=tuple(oriented),
        reversed_edges=reversed_set,
        node_order=tuple(node_order),
    )


def partition(reorientation: AcyclicReorientation,
              request: Request) -> CactusPartition:
    """Split the reorientation into its cycles and the remaining forest.

    For each in-degree-2 node the two in-paths are walked backwards to their
    unique meet node; Lemma-style arguments make the result independent of
    the processing order as long as the request is a cactus.
    """
    in_edges: dict[str, list[OrientedEdge]] = {}
    for e in reorientation.oriented_edges:
        in_edges.setdefault(e.head, []).append(e)
    for node, edges in in_edges.items():
        if len(edges) > 2:
            raise NotCactusError(
                f"node {node} has in-degree {len(edges)}; request is not a cactus")

    discovery = {n: k for k, n in enumerate(reorientation.node_order)}
    targets = sorted((n for n, es in in_edges.items() if len(es) == 2),
                     key=lambda n: discovery[n])

    def walk_to_root(edge: OrientedEdge) -> list[OrientedEdge]:
        chain = [edge]
        node = edge.tail
        while node in in_edges:
            nxt = in_edges[node][0]
            chain.append(nxt)
            node = nxt.tail
        return chain

    cycles: list[CycleSubgraph] = []
    in_cycle: set[int] = set()
    edge_ids = {id(e): k for k, e in enumerate(reorientation.oriented_edges)}

    for target in targets:
        e1, e2 = in_edges[target]
        chain1 = walk_to_root(e1)
        nodes1 = {e.tail: k for k, e in enumerate(chain1)}
        # walk the second in-path until it meets the first
        chain2 = [e2]
        node = e2.tail
        while node not in nodes1:
            if node not in in_edges:
                raise NotCactusError(
                    f"in-paths of {target} never meet; request is not a cactus")
            nxt = in_edges[node][0]
            chain2.append(nxt)
            node = nxt.tail
        source = node
        branch_a = tuple(reversed(chain1[: nodes1[source] + 1]))
        branch_b = tuple(reversed(chain2))
        # branch1 is the branch whose first edge was constructed earlier
        if edge_ids[id(branch_a[0])] <= edge_ids[id(branch_b[0])]:
            branch1, branch2 = branch_a, branch_b
        else:
            branch1, branch2 = branch_b, branch_a
        for e in branch1 + branch2:
            if edge_ids[id(e)] in in_cycle:
                raise NotCactusError(
                    f"edge {e.original} lies on two cycles; request is not a cactus")
            in_cycle.add(edge_ids[id(e)])
        cycles.append(CycleSubgraph(
            source=source,
            target=target,
            branch1=branch1,
            branch2=branch2,
            target_candidates=tuple(sorted(request.allowed_nodes[target])),
        ))

    forest = tuple(e for k, e in enumerate(reorientation.oriented_edges)
                   if k not in in_cycle)
    return CactusPartition(cycles=tuple(cycles), forest=forest)


@dataclass(frozen=True)
class CactusStructure:
    """Reorientation and partition bundled so LP builder and decomposer agree."""

    reorientation: AcyclicReorientation
    partition: CactusPartition


def analyze(request: Request, root: Optional[str] = None) -> CactusStructure:
    reorientation = reorient(request, root)
    return CactusStructure(reorientation, partition(reorientation, request))
