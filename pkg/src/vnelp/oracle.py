"""Brute-force ground truth at tiny scale.

Enumerates valid mappings exhaustively and solves the embedding problem by
search.  Exists purely to anchor tests; no attempt at scalability.
"""

from __future__ import annotations

from itertools import product
from typing import Iterator, Optional, Sequence

from .model import (
    Edge,
    Request,
    SubstrateNetwork,
    ValidMapping,
    allocations,
    TOLERANCE,
)


class BudgetExceededError(RuntimeError):
    """Enumeration would exceed the configured work budget."""


def _simple_paths(
    allowed: Sequence[Edge], start: str, end: str, cap: int
) -> list[tuple[Edge, ...]]:
    """All simple edge-paths start -> end using only the allowed edges."""
    out_edges: dict[str, list[Edge]] = {}
    for e in sorted(allowed):
        out_edges.setdefault(e[0], []).append(e)
    paths: list[tuple[Edge, ...]] = []
    if start == end:
        paths.append(())

    def walk(node: str, visited: set[str], acc: list[Edge]):
        if len(acc) >= cap:
            return
        for e in out_edges.get(node, ()):
            nxt = e[1]
            if nxt in visited:
                continue
            acc.append(e)
            if nxt == end:
                paths.append(tuple(acc))
            else:
                walk(nxt, visited | {nxt}, acc)
            acc.pop()

    walk(start, {start}, [])
    return paths


def enumerate_valid_mappings(
    request: Request,
    substrate: SubstrateNetwork,
    path_length_cap: Optional[int] = None,
    budget: int = 10**6,
) -> list[ValidMapping]:
    """Exhaustive list of valid mappings (simple paths only).

    A non-simple path is never allocation-cheaper than its simple core, so
    restricting to simple paths loses nothing for optimization purposes.
    """
    return list(iter_valid_mappings(request, substrate, path_length_cap, budget))


def iter_valid_mappings(
    request: Request,
    substrate: SubstrateNetwork,
    path_length_cap: Optional[int] = None,
    budget: int = 10**6,
) -> Iterator[ValidMapping]:
    cap = path_length_cap if path_length_cap is not None else len(substrate.edges)
    placements = 1
    for i in request.nodes:
        placements *= len(request.allowed_nodes[i])
        if placements > budget:
            raise BudgetExceededError(
                f"{placements}+ node placements for request {request.id}")

    work = 0
    path_cache: dict[tuple[Edge, str, str], list[tuple[Edge, ...]]] = {}
    node_choices = [sorted(request.allowed_nodes[i]) for i in request.nodes]
    for combo in product(*node_choices):
        node_map = dict(zip(request.nodes, combo))
        per_edge_paths: list[list[tuple[Edge, ...]]] = []
        feasible = True
        total = 1
        for e in request.edges:
            key = (e, node_map[e[0]], node_map[e[1]])
            if key not in path_cache:
                path_cache[key] = _simple_paths(
                    request.allowed_edges[e], key[1], key[2], cap)
            paths = path_cache[key]
            if not paths:
                feasible = False
                break
            per_edge_paths.append(paths)
            total *= len(paths)
        if not feasible:
            continue
        work += total
        if work > budget:
            raise BudgetExceededError(
                f"mapping enumeration for request {request.id} exceeds budget {budget}")
        for path_combo in product(*per_edge_paths):
            yield ValidMapping(node_map=dict(node_map),
                               edge_map=dict(zip(request.edges, path_combo)))


def exact_vnep(
    requests: Sequence[Request],
    substrate: SubstrateNetwork,
    path_length_cap: Optional[int] = None,
    budget: int = 10**6,
) -> tuple[float, dict[str, ValidMapping]]:
    """Optimal feasible embedding by exhaustive search over mapping choices.

    Returns (profit, chosen mappings); rejected requests are simply absent
    from the returned dict.  Serves as the integer-programming ground truth.
    """
    options: list[list[Optional[ValidMapping]]] = []
    total = 1
    for r in requests:
        mappings = enumerate_valid_mappings(r, substrate, path_length_cap, budget)
        options.append([None] + mappings)
        total *= len(mappings) + 1
        if total > budget:
            raise BudgetExceededError(
                f"joint search space {total}+ exceeds budget {budget}")

    capacities = {res: substrate.capacity(res) for res in substrate.resources}
    best_profit = 0.0
    best_choice: dict[str, ValidMapping] = {}

    def search(idx: int, load: dict, profit: float, chosen: dict):
        nonlocal best_profit, best_choice
        if idx == len(requests):
            if profit > best_profit + TOLERANCE:
                best_profit = profit
                best_choice = dict(chosen)
            return
        request = requests[idx]
        remaining = sum(r.profit for r in requests[idx:])
        if profit + remaining <= best_profit + TOLERANCE:
            return
        for option in options[idx]:
            if option is None:
                search(idx + 1, load, profit, chosen)
                continue
            alloc = allocations(request, option)
            ok = True
            for res, val in alloc.items():
                if load.get(res, 0.0) + val > capacities[res] + TOLERANCE:
                    ok = False
                    break
            if not ok:
                continue
            for res, val in alloc.items():
                load[res] = load.get(res, 0.0) + val
            chosen[request.id] = option
            search(idx + 1, load, profit + request.profit, chosen)
            del chosen[request.id]
            for res, val in alloc.items():
                load[res] -= val

    search(0, {}, 0.0, {})
    return best_profit, best_choice
