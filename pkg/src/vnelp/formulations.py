"""LP formulations: the classic multi-commodity-flow model and the
decomposable cactus model built on a cycle/forest partition.

Variable naming scheme (stable, parseable):

* ``x@r`` — embedding value of request ``r``
* ``y@r/i/u`` — virtual node ``i`` on substrate node ``u``
* ``z@r/i,j/u,v`` — virtual edge ``(i,j)`` flow on substrate edge ``(u,v)``
* ``a@r/t:u`` and ``a@r/u,v`` — allocation on a node/edge resource
* suffix ``[F]`` or ``[Ck;w]`` — copy owned by the forest sub-LP or by the
  sub-LP of cycle ``k`` with its target pinned to ``w``

Disallowed node placements and edge uses are realized by variable omission
rather than explicit zero rows; the polytope is unchanged and the tableaus
stay small.  The forest sub-LP shares the global node-mapping variables (its
linkage constraint holds by substitution), which keeps the cactus model of a
tree request literally identical to the classic one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .cactus import CactusStructure
from .lp import LinearProgram
from .model import Edge, Request, Resource, SubstrateNetwork

ScopeKey = tuple  # ("F",) or ("C", cycle_index, target_candidate)


def x_name(r: str, scope: str = "") -> str:
    return f"x@{r}{scope}"


def y_name(r: str, i: str, u: str, scope: str = "") -> str:
    return f"y@{r}/{i}/{u}{scope}"


def z_name(r: str, i: str, j: str, u: str, v: str, scope: str = "") -> str:
    return f"z@{r}/{i},{j}/{u},{v}{scope}"


def a_name(r: str, resource: Resource, is_node: bool) -> str:
    x, y = resource
    return f"a@{r}/{x}:{y}" if is_node else f"a@{r}/{x},{y}"


def scope_tag(scope: ScopeKey) -> str:
    if scope[0] == "F":
        return "[F]"
    _, k, w = scope
    return f"[C{k};{w}]"


@dataclass(frozen=True)
class McfVariables:
    x: Mapping[str, str]
    y: Mapping[tuple, str]
    z: Mapping[tuple, str]
    a: Mapping[tuple, str]
    binaries: frozenset[str] = frozenset()


@dataclass(frozen=True)
class NovelVariables:
    x: Mapping[str, str]
    y: Mapping[tuple, str]
    a: Mapping[tuple, str]
    x_scope: Mapping[tuple, str]
    y_scope: Mapping[tuple, str]
    z_scope: Mapping[tuple, str]
    scopes: Mapping[str, tuple[ScopeKey, ...]]
    binaries: frozenset[str] = frozenset()

    def scope_x(self, r: str, scope: ScopeKey) -> str:
        if scope[0] == "F":
            return self.x[r]
        return self.x_scope[(r, scope)]

    def scope_y(self, r: str, scope: ScopeKey, i: str, u: str) -> Optional[str]:
        if scope[0] == "F":
            return self.y.get((r, i, u))
        return self.y_scope.get((r, scope, i, u))

    def scope_z(self, r: str, scope: ScopeKey, e: Edge, se: Edge) -> Optional[str]:
        return self.z_scope.get((r, scope, e[0], e[1], se[0], se[1]))


def _add_capacity_rows(lp: LinearProgram, requests: Sequence[Request],
                       substrate: SubstrateNetwork, a_vars: dict) -> None:
    node_resources = set(substrate.node_resources)
    for res in substrate.resources:
        is_node = res in node_resources
        tag = f"{res[0]}:{res[1]}" if is_node else f"{res[0]},{res[1]}"
        coeffs = {a_vars[(r.id, res)]: 1.0 for r in requests}
        lp.add_constraint(f"cap@{tag}", coeffs, "<=", substrate.capacity(res))


def _commodity_nodes(request: Request, e: Edge) -> list[str]:
    """Substrate nodes a commodity's flow-conservation rows must cover."""
    i, j = e
    nodes = set(request.allowed_nodes[i]) | set(request.allowed_nodes[j])
    for u, v in request.allowed_edges[e]:
        nodes.add(u)
        nodes.add(v)
    return sorted(nodes)


def _add_flow_rows(lp: LinearProgram, request: Request, e: Edge,
                   z_of: Mapping[Edge, str], y_of, row_suffix: str = "") -> None:
    """Flow conservation for one virtual edge: out - in = y(i) - y(j) per node."""
    i, j = e
    out_at: dict[str, list[str]] = {}
    in_at: dict[str, list[str]] = {}
    for se, var in z_of.items():
        out_at.setdefault(se[0], []).append(var)
        in_at.setdefault(se[1], []).append(var)
    for u in _commodity_nodes(request, e):
        coeffs: dict[str, float] = {}
        for var in out_at.get(u, ()):
            coeffs[var] = coeffs.get(var, 0.0) + 1.0
        for var in in_at.get(u, ()):
            coeffs[var] = coeffs.get(var, 0.0) - 1.0
        yi = y_of(i, u)
        if yi is not None:
            coeffs[yi] = coeffs.get(yi, 0.0) - 1.0
        yj = y_of(j, u)
        if yj is not None:
            coeffs[yj] = coeffs.get(yj, 0.0) + 1.0
        if coeffs:
            lp.add_constraint(f"flow@{request.id}/{i},{j}/{u}{row_suffix}",
                              coeffs, "=", 0.0)


def build_mcf(
    requests: Sequence[Request],
    substrate: SubstrateNetwork,
    integral: bool = False,
) -> tuple[LinearProgram, McfVariables]:
    """Classic multi-commodity-flow formulation over all requests."""
    lp = LinearProgram("mcf")
    x: dict[str, str] = {}
    y: dict[tuple, str] = {}
    z: dict[tuple, str] = {}
    a: dict[tuple, str] = {}
    binaries: set[str] = set()
    node_resources = set(substrate.node_resources)

    for r in requests:
        rid = r.id
        x[rid] = lp.add_variable(x_name(rid), 0.0, 1.0, obj=r.profit)
        for i in r.nodes:
            for u in sorted(r.allowed_nodes[i]):
                y[(rid, i, u)] = lp.add_variable(y_name(rid, i, u), 0.0, 1.0)
        for e in r.edges:
            for se in sorted(r.allowed_edges[e]):
                z[(rid, *e, *se)] = lp.add_variable(z_name(rid, *e, *se), 0.0, 1.0)
        for res in substrate.resources:
            a[(rid, res)] = lp.add_variable(a_name(rid, res, res in node_resources))
        if integral:
            binaries.add(x[rid])
            binaries.update(y[(rid, i, u)] for i in r.nodes
                            for u in r.allowed_nodes[i])
            binaries.update(z[(rid, *e, *se)] for e in r.edges
                            for se in r.allowed_edges[e])

    for r in requests:
        rid = r.id
        for i in r.nodes:
            coeffs = {y[(rid, i, u)]: 1.0 for u in r.allowed_nodes[i]}
            coeffs[x[rid]] = -1.0
            lp.add_constraint(f"embed@{rid}/{i}", coeffs, "=", 0.0)
        for e in r.edges:
            z_of = {se: z[(rid, *e, *se)] for se in r.allowed_edges[e]}
            y_of = lambda n, u, rid=rid: y.get((rid, n, u))
            _add_flow_rows(lp, r, e, z_of, y_of)
        for res in substrate.node_resources:
            t, u = res
            coeffs = {}
            for i in r.nodes:
                if r.node_type[i] == t and u in r.allowed_nodes[i] and r.demand_node[i]:
                    coeffs[y[(rid, i, u)]] = r.demand_node[i]
            coeffs[a[(rid, res)]] = -1.0
            lp.add_constraint(f"load_node@{rid}/{t}:{u}", coeffs, "=", 0.0)
        for se in substrate.edges:
            coeffs = {}
            for e in r.edges:
                if se in r.allowed_edges[e] and r.demand_edge[e]:
                    coeffs[z[(rid, *e, *se)]] = r.demand_edge[e]
            coeffs[a[(rid, se)]] = -1.0
            lp.add_constraint(f"load_edge@{rid}/{se[0]},{se[1]}", coeffs, "=", 0.0)

    _add_capacity_rows(lp, requests, substrate, a)
    return lp, McfVariables(x, y, z, a, frozenset(binaries))


def build_novel(
    requests: Sequence[Request],
    substrate: SubstrateNetwork,
    structures: Mapping[str, CactusStructure],
    integral: bool = False,
) -> tuple[LinearProgram, NovelVariables]:
    """Decomposable formulation: one flow system per forest, one per
    (cycle, target candidate), tied together through global node variables.

    ``structures`` must hold the same reorientations later handed to the
    decomposer.
    """
    lp = LinearProgram("novel")
    x: dict[str, str] = {}
    y: dict[tuple, str] = {}
    a: dict[tuple, str] = {}
    x_scope: dict[tuple, str] = {}
    y_scope: dict[tuple, str] = {}
    z_scope: dict[tuple, str] = {}
    scopes: dict[str, tuple[ScopeKey, ...]] = {}
    binaries: set[str] = set()
    node_resources = set(substrate.node_resources)

    for r in requests:
        rid = r.id
        if rid not in structures:
            raise ValueError(f"missing cactus structure for request {rid}")
        part = structures[rid].partition

        x[rid] = lp.add_variable(x_name(rid), 0.0, 1.0, obj=r.profit)
        for i in r.nodes:
            for u in sorted(r.allowed_nodes[i]):
                y[(rid, i, u)] = lp.add_variable(y_name(rid, i, u), 0.0, 1.0)
        for res in substrate.resources:
            a[(rid, res)] = lp.add_variable(a_name(rid, res, res in node_resources))

        request_scopes: list[ScopeKey] = [("F",)]
        forest_edges = tuple(oe.original for oe in part.forest)
        for e in forest_edges:
            for se in sorted(r.allowed_edges[e]):
                z_scope[(rid, ("F",), *e, *se)] = lp.add_variable(
                    z_name(rid, *e, *se, scope="[F]"), 0.0, 1.0)

        for k, cycle in enumerate(part.cycles):
            cycle_nodes = cycle.nodes
            cycle_edges = cycle.original_edges
            for w in cycle.target_candidates:
                scope: ScopeKey = ("C", k, w)
                request_scopes.append(scope)
                tag = scope_tag(scope)
                x_scope[(rid, scope)] = lp.add_variable(x_name(rid, tag), 0.0, 1.0)
                for i in cycle_nodes:
                    for u in sorted(r.allowed_nodes[i]):
                        y_scope[(rid, scope, i, u)] = lp.add_variable(
                            y_name(rid, i, u, tag), 0.0, 1.0)
                for e in cycle_edges:
                    for se in sorted(r.allowed_edges[e]):
                        z_scope[(rid, scope, *e, *se)] = lp.add_variable(
                            z_name(rid, *e, *se, tag), 0.0, 1.0)
        scopes[rid] = tuple(request_scopes)

        if integral:
            binaries.add(x[rid])
            binaries.update(name for key, name in y.items() if key[0] == rid)
            binaries.update(name for key, name in x_scope.items() if key[0] == rid)
            binaries.update(name for key, name in y_scope.items() if key[0] == rid)
            binaries.update(name for key, name in z_scope.items() if key[0] == rid)

    variables = NovelVariables(x, y, a, x_scope, y_scope, z_scope, scopes,
                               frozenset(binaries))

    for r in requests:
        rid = r.id
        part = structures[rid].partition

        # global node embedding
        for i in r.nodes:
            coeffs = {y[(rid, i, u)]: 1.0 for u in r.allowed_nodes[i]}
            coeffs[x[rid]] = -1.0
            lp.add_constraint(f"embed@{rid}/{i}", coeffs, "=", 0.0)

        # forest flow systems run directly on the global node variables
        for oe in part.forest:
            e = oe.original
            z_of = {se: z_scope[(rid, ("F",), *e, *se)] for se in r.allowed_edges[e]}
            _add_flow_rows(lp, r, e, z_of,
                           lambda n, u, rid=rid: y.get((rid, n, u)),
                           row_suffix="[F]")

        for k, cycle in enumerate(part.cycles):
            cycle_nodes = cycle.nodes
            cycle_edges = cycle.original_edges
            share = {x[rid]: -1.0}
            for w in cycle.target_candidates:
                scope: ScopeKey = ("C", k, w)
                tag = scope_tag(scope)
                share[x_scope[(rid, scope)]] = 1.0
                for i in cycle_nodes:
                    coeffs = {y_scope[(rid, scope, i, u)]: 1.0
                              for u in r.allowed_nodes[i]}
                    coeffs[x_scope[(rid, scope)]] = -1.0
                    lp.add_constraint(f"embed@{rid}/{i}{tag}", coeffs, "=", 0.0)
                # pin the cycle target of this copy to w
                for u in cycle.target_candidates:
                    if u != w:
                        lp.add_constraint(
                            f"fix@{rid}/{cycle.target}/{u}{tag}",
                            {y_scope[(rid, scope, cycle.target, u)]: 1.0}, "=", 0.0)
                for e in cycle_edges:
                    z_of = {se: z_scope[(rid, scope, *e, *se)]
                            for se in r.allowed_edges[e]}
                    _add_flow_rows(
                        lp, r, e, z_of,
                        lambda n, u, rid=rid, scope=scope:
                            y_scope.get((rid, scope, n, u)),
                        row_suffix=tag)
            lp.add_constraint(f"share@{rid}/C{k}", share, "=", 0.0)
            # global node mapping distributes over the cycle's copies
            for i in cycle_nodes:
                for u in sorted(r.allowed_nodes[i]):
                    coeffs = {y[(rid, i, u)]: 1.0}
                    for w in cycle.target_candidates:
                        name = y_scope[(rid, ("C", k, w), i, u)]
                        coeffs[name] = coeffs.get(name, 0.0) - 1.0
                    lp.add_constraint(f"link@{rid}/C{k}/{i}/{u}", coeffs, "=", 0.0)

        # node loads from the global mapping variables
        for res in substrate.node_resources:
            t, u = res
            coeffs = {}
            for i in r.nodes:
                if r.node_type[i] == t and u in r.allowed_nodes[i] and r.demand_node[i]:
                    coeffs[y[(rid, i, u)]] = r.demand_node[i]
            coeffs[a[(rid, res)]] = -1.0
            lp.add_constraint(f"load_node@{rid}/{t}:{u}", coeffs, "=", 0.0)

        # edge loads summed over all flow systems
        forest_edges = tuple(oe.original for oe in part.forest)
        for se in substrate.edges:
            coeffs: dict[str, float] = {}
            for e in forest_edges:
                if se in r.allowed_edges[e] and r.demand_edge[e]:
                    coeffs[z_scope[(rid, ("F",), *e, *se)]] = r.demand_edge[e]
            for k, cycle in enumerate(part.cycles):
                for w in cycle.target_candidates:
                    for e in cycle.original_edges:
                        if se in r.allowed_edges[e] and r.demand_edge[e]:
                            coeffs[z_scope[(rid, ("C", k, w), *e, *se)]] = \
                                r.demand_edge[e]
            coeffs[a[(rid, se)]] = -1.0
            lp.add_constraint(f"load_edge@{rid}/{se[0]},{se[1]}", coeffs, "=", 0.0)

    _add_capacity_rows(lp, requests, substrate, a)
    return lp, variables


def project_solution(
    requests: Sequence[Request],
    structures: Mapping[str, CactusStructure],
    variables: NovelVariables,
    assignment: Mapping[str, float],
) -> dict[str, float]:
    """Project a cactus-model solution onto the classic model's variables.

    Global x/y/a carry over by name; each virtual edge's flow is the sum of
    its copies.  The result satisfies the classic model's constraints.
    """
    out = dict(assignment)
    for r in requests:
        rid = r.id
        part = structures[rid].partition
        edge_scope: dict[Edge, list[ScopeKey]] = {}
        for oe in part.forest:
            edge_scope.setdefault(oe.original, []).append(("F",))
        for k, cycle in enumerate(part.cycles):
            for e in cycle.original_edges:
                edge_scope[e] = [("C", k, w) for w in cycle.target_candidates]
        for e in r.edges:
            for se in r.allowed_edges[e]:
                total = 0.0
                for scope in edge_scope[e]:
                    name = variables.scope_z(rid, scope, e, se)
                    if name is not None:
                        total += assignment.get(name, 0.0)
                out[z_name(rid, *e, *se)] = total
    return out
