"""Extraction of convex combinations of valid mappings from LP solutions.

The extraction walks the request's acyclic reorientation from the root,
recovering one mapping per iteration via positive-flow path searches, then
subtracts the mapping's weight (the minimum used variable value) and
repeats.  On the cactus model the edge flows are read from the sub-LP copy
chosen on first contact with each cycle, whose pinned target makes the two
branch walks meet by construction.
"""

from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence

from .cactus import AcyclicReorientation, CactusStructure, OrientedEdge
from .formulations import McfVariables, NovelVariables, ScopeKey
from .model import (
    ConvexDecomposition,
    DecompositionEntry,
    Edge,
    Request,
    ValidMapping,
    allocations,
)

#: Variables below this count as zero in all "> 0" tests.
POSITIVE_TOL = 1e-9
#: Extraction stops once the remaining embedding value drops below
#: STOP_TOL * max(1, initial value); the remainder is reported as residual.
STOP_TOL = 1e-6


class DecompositionError(RuntimeError):
    """LP solution violates the premises of the extraction (stuck flow)."""


class DivergentNodeMappingError(DecompositionError):
    """A node with two in-edges was pulled towards two different placements.

    This is exactly the failure mode that makes the classic model
    non-decomposable on cyclic requests.
    """


def extract_flow_path(
    flow: Mapping[Edge, float],
    start: str,
    is_terminal: Callable[[str], bool],
    tolerance: float = POSITIVE_TOL,
) -> tuple[Edge, ...]:
    """Breadth-first positive-flow path from ``start`` to the first terminal.

    Returns the empty path when ``start`` is already terminal.  Raises
    :class:`DecompositionError` when no terminal is reachable, which signals
    an internally inconsistent LP solution.
    """
    if is_terminal(start):
        return ()
    out: dict[str, list[Edge]] = {}
    for e, val in flow.items():
        if val > tolerance:
            out.setdefault(e[0], []).append(e)
    for es in out.values():
        es.sort()
    parent: dict[str, Edge] = {}
    visited = {start}
    queue = [start]
    while queue:
        u = queue.pop(0)
        for e in out.get(u, ()):
            v = e[1]
            if v in visited:
                continue
            parent[v] = e
            if is_terminal(v):
                path = []
                node = v
                while node != start:
                    path.append(parent[node])
                    node = parent[node][0]
                return tuple(reversed(path))
            visited.add(v)
            queue.append(v)
    raise DecompositionError(
        f"no positive-flow path from {start} to any terminal node")


class _Extraction:
    """One full extraction run over a private copy of the solution values."""

    def __init__(
        self,
        request: Request,
        assignment: Mapping[str, float],
        reorientation: AcyclicReorientation,
        mcf_vars: Optional[McfVariables] = None,
        structure: Optional[CactusStructure] = None,
        novel_vars: Optional[NovelVariables] = None,
    ):
        self.request = request
        self.reorientation = reorientation
        self.values = dict(assignment)
        self.mcf_vars = mcf_vars
        self.novel_vars = novel_vars
        self.rid = request.id
        self.allocation_clamp = 0.0

        self.out_edges: dict[str, list[OrientedEdge]] = {}
        for oe in reorientation.oriented_edges:
            self.out_edges.setdefault(oe.tail, []).append(oe)

        self.cycle_of_edge: dict[int, int] = {}
        self.cycle_nodes: dict[int, tuple[str, ...]] = {}
        self.cycle_candidates: dict[int, tuple[str, ...]] = {}
        if structure is not None:
            for k, cycle in enumerate(structure.partition.cycles):
                self.cycle_nodes[k] = cycle.nodes
                self.cycle_candidates[k] = cycle.target_candidates
                for oe in cycle.oriented_edges:
                    self.cycle_of_edge[id(oe)] = k

    # -- variable access ----------------------------------------------------

    def _val(self, name: Optional[str]) -> float:
        if name is None:
            return 0.0
        return self.values.get(name, 0.0)

    def x_name(self) -> str:
        if self.mcf_vars is not None:
            return self.mcf_vars.x[self.rid]
        return self.novel_vars.x[self.rid]

    def global_y(self, i: str, u: str) -> Optional[str]:
        if self.mcf_vars is not None:
            return self.mcf_vars.y.get((self.rid, i, u))
        return self.novel_vars.y.get((self.rid, i, u))

    def scope_y(self, scope: Optional[ScopeKey], i: str, u: str) -> Optional[str]:
        if scope is None:
            return self.global_y(i, u)
        return self.novel_vars.scope_y(self.rid, scope, i, u)

    def z_of(self, scope: Optional[ScopeKey], e: Edge) -> dict[Edge, str]:
        names = {}
        for se in self.request.allowed_edges[e]:
            if scope is None:
                name = self.mcf_vars.z.get((self.rid, *e, *se))
            else:
                name = self.novel_vars.scope_z(self.rid, scope, e, se)
            if name is not None:
                names[se] = name
        return names

    # -- one iteration ------------------------------------------------------

    def _choose_cycle_scope(self, k: int, i: str, u: str) -> ScopeKey:
        """Pick the sub-LP copy carrying the most mass at the contact node."""
        best_w = None
        best_val = 0.0
        for w in self.cycle_candidates[k]:
            val = self._val(self.scope_y(("C", k, w), i, u))
            if val > best_val + POSITIVE_TOL or (best_w is None and val > POSITIVE_TOL):
                best_w = w
                best_val = val
        if best_w is None:
            raise DecompositionError(
                f"request {self.rid}: no sub-LP of cycle {k} carries mass at "
                f"({i} -> {u}); solution violates the linkage constraints")
        return ("C", k, best_w)

    def _extract_one(self) -> tuple[ValidMapping, list[str]]:
        request = self.request
        node_map: dict[str, str] = {}
        edge_map: dict[Edge, tuple[Edge, ...]] = {}
        used: dict[str, None] = {}
        cycle_scope: dict[int, ScopeKey] = {}

        root = self.reorientation.root
        root_candidates = [u for u in sorted(request.allowed_nodes[root])
                           if self._val(self.global_y(root, u)) > POSITIVE_TOL]
        if not root_candidates:
            raise DecompositionError(
                f"request {self.rid}: embedding value positive but no root "
                f"placement carries mass")
        node_map[root] = root_candidates[0]

        queue = [root]
        while queue:
            i = queue.pop(0)
            for oe in self.out_edges.get(i, ()):
                j = oe.head
                scope: Optional[ScopeKey] = None
                if self.novel_vars is not None:
                    k = self.cycle_of_edge.get(id(oe))
                    if k is None:
                        scope = ("F",)
                    else:
                        if k not in cycle_scope:
                            cycle_scope[k] = self._choose_cycle_scope(
                                k, i, node_map[i])
                        scope = cycle_scope[k]

                z_names = self.z_of(scope, oe.original)
                flow = {se: self._val(name) for se, name in z_names.items()}
                if oe.reversed:
                    flow = {(v, u): val for (u, v), val in flow.items()}

                start = node_map[i]
                if j in node_map:
                    target = node_map[j]
                    terminal = lambda v, t=target: v == t
                else:
                    terminal = lambda v, j=j, s=scope: (
                        self._val(self.scope_y(s, j, v)) > POSITIVE_TOL)

                try:
                    path = extract_flow_path(flow, start, terminal)
                except DecompositionError:
                    if j in node_map:
                        conflict = self._probe_free_terminal(flow, start, j, scope)
                        raise DivergentNodeMappingError(
                            f"request {self.rid}: virtual node {j} is already "
                            f"mapped to {node_map[j]} but the flow of edge "
                            f"{oe.original} leads to "
                            f"{conflict or 'no reachable placement'}; the "
                            f"solution admits no consistent mapping") from None
                    raise

                end = path[-1][1] if path else start
                if oe.reversed:
                    real_path = tuple((v, u) for (u, v) in reversed(path))
                else:
                    real_path = path
                edge_map[oe.original] = real_path
                if j not in node_map:
                    node_map[j] = end
                    queue.append(j)
                for se in real_path:
                    used[z_names[se]] = None

        used[self.x_name()] = None
        for i in request.nodes:
            name = self.global_y(i, node_map[i])
            if name is None:
                raise DecompositionError(
                    f"request {self.rid}: node {i} mapped outside its variable set")
            used[name] = None
        for k, scope in cycle_scope.items():
            used[self.novel_vars.scope_x(self.rid, scope)] = None
            for i in self.cycle_nodes[k]:
                name = self.scope_y(scope, i, node_map[i])
                if name is None:
                    raise DecompositionError(
                        f"request {self.rid}: cycle node {i} mapped outside "
                        f"the chosen sub-LP copy")
                used[name] = None

        mapping = ValidMapping(node_map=node_map, edge_map=edge_map)
        return mapping, list(used)

    def _probe_free_terminal(self, flow, start, j, scope) -> Optional[str]:
        try:
            path = extract_flow_path(
                flow, start,
                lambda v: self._val(self.scope_y(scope, j, v)) > POSITIVE_TOL)
        except DecompositionError:
            return None
        return path[-1][1] if path else start

    # -- main loop ----------------------------------------------------------

    def run(self) -> ConvexDecomposition:
        x_var = self.x_name()
        x_init = self._val(x_var)
        stop = STOP_TOL * max(1.0, x_init)
        entries: list[DecompositionEntry] = []

        guard = 4 * (len(self.values) + len(self.request.nodes) + 4)
        while self._val(x_var) > stop:
            if len(entries) > guard:
                raise DecompositionError(
                    f"request {self.rid}: extraction failed to make progress")
            mapping, used = self._extract_one()
            weight = min(self.values.get(name, 0.0) for name in used)
            if weight <= 0.0:
                raise DecompositionError(
                    f"request {self.rid}: zero-weight mapping extracted")
            for name in used:
                left = self.values.get(name, 0.0) - weight
                self.values[name] = 0.0 if abs(left) < POSITIVE_TOL else left
            self._reduce_allocations(mapping, weight)
            entries.append(DecompositionEntry(weight=weight, mapping=mapping))

        return ConvexDecomposition(
            request_id=self.rid,
            entries=tuple(entries),
            residual=max(0.0, self._val(x_var)),
            allocation_clamp=self.allocation_clamp,
        )

    def _reduce_allocations(self, mapping: ValidMapping, weight: float) -> None:
        a_vars = self.mcf_vars.a if self.mcf_vars is not None else self.novel_vars.a
        for res, amount in allocations(self.request, mapping).items():
            name = a_vars.get((self.rid, res))
            if name is None:
                continue
            left = self.values.get(name, 0.0) - weight * amount
            if left < 0.0:
                self.allocation_clamp += -left
                left = 0.0
            self.values[name] = left


def decompose_tree(
    request: Request,
    assignment: Mapping[str, float],
    variables: McfVariables,
    reorientation: AcyclicReorientation,
) -> ConvexDecomposition:
    """Decompose a classic-model solution for a tree request.

    Running this on a cyclic request surfaces the structural deficit of the
    classic model as a :class:`DivergentNodeMappingError`.
    """
    return _Extraction(request, assignment, reorientation,
                       mcf_vars=variables).run()


def decompose_cactus(
    request: Request,
    assignment: Mapping[str, float],
    variables: NovelVariables,
    structure: CactusStructure,
) -> ConvexDecomposition:
    """Decompose a cactus-model solution; the structure must be the one the
    model was built from."""
    return _Extraction(request, assignment, structure.reorientation,
                       structure=structure, novel_vars=variables).run()


def decompose_all(
    requests: Sequence[Request],
    assignment: Mapping[str, float],
    variables: NovelVariables,
    structures: Mapping[str, CactusStructure],
) -> dict[str, ConvexDecomposition]:
    return {
        r.id: decompose_cactus(r, assignment, variables, structures[r.id])
        for r in requests
    }
