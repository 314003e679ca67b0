"""Randomized rounding of decomposed LP solutions.

Covers the full pipeline (preprocessing, LP solve, decomposition, rounding
with the (alpha, beta, gamma) acceptance guard), the two vanilla selection
heuristics, the capacity-respecting heuristic, and the resource-augmentation
bound calculators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import cactus
from .decompose import decompose_all
from .formulations import build_novel
from .lp import solve_lp
from .model import (
    ConvexDecomposition,
    Instance,
    Request,
    Resource,
    SubstrateNetwork,
    allocations,
    max_demand,
    max_allocation_exact,
)

ALPHA = 1.0 / 3.0
_GUARD = 1e-9


def rng_for(seed: int, *spawn_key: int) -> np.random.Generator:
    """Deterministic generator; spawn keys give independent per-task streams."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)))


@dataclass(frozen=True)
class RoundingOutcome:
    """Result of one rounding pass over all requests."""

    choices: Mapping[str, Optional[int]]
    profit: float
    allocations: Mapping[Resource, float]
    max_node_load: float
    max_edge_load: float

    @property
    def max_load(self) -> float:
        return max(self.max_node_load, self.max_edge_load)


@dataclass(frozen=True)
class BoundParameters:
    """Resource-augmentation parameters of the acceptance guard."""

    epsilon: float
    delta_nodes: float
    delta_edges: float
    beta: float
    gamma: float
    lambda_nodes: float
    lambda_edges: float
    alpha: float = ALPHA
    #: False when epsilon exceeded 1, outside the regime of the tail bound.
    epsilon_valid: bool = True
    source: str = "upper-bound"


class RoundingProblem:
    """Instance plus decompositions with per-entry data precomputed."""

    def __init__(self, instance: Instance,
                 decompositions: Mapping[str, ConvexDecomposition]):
        self.instance = instance
        self.decompositions = dict(decompositions)
        self.request_ids = [r.id for r in instance.requests
                            if r.id in self.decompositions]
        self._requests = {r.id: r for r in instance.requests}
        self.cumulative: dict[str, np.ndarray] = {}
        self.entry_allocations: dict[str, list[dict[Resource, float]]] = {}
        for rid in self.request_ids:
            dec = self.decompositions[rid]
            weights = np.array([e.weight for e in dec.entries])
            self.cumulative[rid] = np.cumsum(weights) if len(weights) else np.array([])
            self.entry_allocations[rid] = [
                allocations(self._requests[rid], e.mapping) for e in dec.entries]

    def request(self, rid: str) -> Request:
        return self._requests[rid]

    def draw(self, rid: str, rng: np.random.Generator) -> Optional[int]:
        """Categorical draw over the entries; the leftover mass rejects."""
        cum = self.cumulative[rid]
        if len(cum) == 0:
            return None
        u = rng.random()
        idx = int(np.searchsorted(cum, u, side="right"))
        return idx if idx < len(cum) else None

    def outcome(self, choices: Mapping[str, Optional[int]]) -> RoundingOutcome:
        substrate = self.instance.substrate
        total: dict[Resource, float] = {}
        profit = 0.0
        for rid, idx in choices.items():
            if idx is None:
                continue
            profit += self._requests[rid].profit
            for res, val in self.entry_allocations[rid][idx].items():
                total[res] = total.get(res, 0.0) + val
        node_load = 0.0
        edge_load = 0.0
        edge_set = set(substrate.edges)
        for res, val in total.items():
            ratio = val / substrate.capacity(res)
            if res in edge_set:
                edge_load = max(edge_load, ratio)
            else:
                node_load = max(node_load, ratio)
        return RoundingOutcome(dict(choices), profit, total, node_load, edge_load)


def round_once(problem: RoundingProblem, rng: np.random.Generator) -> RoundingOutcome:
    """Independent categorical draw per request, then the induced outcome."""
    choices = {rid: problem.draw(rid, rng) for rid in problem.request_ids}
    return problem.outcome(choices)


@dataclass(frozen=True)
class Pipeline:
    """Shared front end of every rounding strategy: preprocessed requests,
    solved relaxation, decompositions, and the prepared rounding problem."""

    problem: RoundingProblem
    lp_objective: float
    dropped: tuple[str, ...]
    decompositions: Mapping[str, ConvexDecomposition]


def solve_and_decompose(instance: Instance, engine: str = "highs") -> Pipeline:
    substrate = instance.substrate
    for r in instance.requests:
        if not cactus.is_cactus(r):
            raise cactus.NotCactusError(f"request {r.id} is not a cactus")
    structures = {r.id: cactus.analyze(r) for r in instance.requests}
    kept, dropped = preprocess(instance.requests, substrate, structures, engine)
    if not kept:
        problem = RoundingProblem(Instance(substrate, (), name=instance.name), {})
        return Pipeline(problem, 0.0, tuple(dropped), {})
    lp, variables = build_novel(kept, substrate,
                                {r.id: structures[r.id] for r in kept})
    sol = solve_lp(lp, engine=engine)
    if sol.status != "optimal":
        raise RuntimeError(f"relaxation unexpectedly {sol.status}")
    decompositions = decompose_all(kept, sol.assignment, variables, structures)
    problem = RoundingProblem(
        Instance(substrate, tuple(kept), name=instance.name), decompositions)
    return Pipeline(problem, sol.objective, tuple(dropped), decompositions)


def preprocess(
    requests: Sequence[Request],
    substrate: SubstrateNetwork,
    structures: Optional[Mapping[str, cactus.CactusStructure]] = None,
    engine: str = "highs",
) -> tuple[list[Request], list[str]]:
    """Drop requests that cannot be fully fractionally embedded on their own."""
    if structures is None:
        structures = {r.id: cactus.analyze(r) for r in requests}
    kept: list[Request] = []
    dropped: list[str] = []
    for r in requests:
        lp, variables = build_novel([r], substrate, {r.id: structures[r.id]})
        lp.set_objective({variables.x[r.id]: 1.0})
        sol = solve_lp(lp, engine=engine)
        if sol.status == "optimal" and sol.objective >= 1.0 - 1e-6:
            kept.append(r)
        else:
            dropped.append(r.id)
    return kept, dropped


def compute_bounds(
    requests: Sequence[Request],
    substrate: SubstrateNetwork,
    a_max_source: str = "upper-bound",
    path_length_cap: Optional[int] = None,
    budget: int = 10**6,
) -> BoundParameters:
    """Resource-augmentation factors from the concentration analysis.

    ``a_max_source`` selects how the per-resource dispersion terms are
    obtained: ``"upper-bound"`` uses the analytic counts (requests times
    maximal request size), ``"oracle"`` enumerates valid mappings for the
    exact maximal allocations.
    """
    epsilon = 0.0
    for r in requests:
        for res in substrate.resources:
            d = max_demand(r, res)
            if d > 0:
                epsilon = max(epsilon, d / substrate.capacity(res))

    if a_max_source == "upper-bound":
        delta_nodes = float(len(requests) * max((len(r.nodes) for r in requests),
                                                default=0))
        delta_edges = float(len(requests) * max((len(r.edges) for r in requests),
                                                default=0))
    elif a_max_source == "oracle":
        delta_nodes = 0.0
        for res in substrate.node_resources:
            total = 0.0
            for r in requests:
                d = max_demand(r, res)
                if d > 0:
                    a_max = max_allocation_exact(r, substrate, res,
                                                 path_length_cap, budget)
                    total += (a_max / d) ** 2
            delta_nodes = max(delta_nodes, total)
        delta_edges = 0.0
        for res in substrate.edges:
            total = 0.0
            for r in requests:
                d = max_demand(r, res)
                if d > 0:
                    a_max = max_allocation_exact(r, substrate, res,
                                                 path_length_cap, budget)
                    total += (a_max / d) ** 2
            delta_edges = max(delta_edges, total)
    else:
        raise ValueError(f"unknown a_max source {a_max_source}")

    lambda_nodes = float(len(substrate.nodes) * len(substrate.types))
    lambda_edges = float(len(substrate.edges))
    beta = 1.0 + epsilon * math.sqrt(2.0 * delta_nodes * math.log(max(lambda_nodes, 1.0)))
    gamma = 1.0 + epsilon * math.sqrt(2.0 * delta_edges * math.log(max(lambda_edges, 1.0)))
    return BoundParameters(
        epsilon=epsilon,
        delta_nodes=delta_nodes,
        delta_edges=delta_edges,
        beta=beta,
        gamma=gamma,
        lambda_nodes=lambda_nodes,
        lambda_edges=lambda_edges,
        epsilon_valid=epsilon <= 1.0,
        source=a_max_source,
    )


def is_abc_approximate(outcome: RoundingOutcome, bounds: BoundParameters,
                       lp_objective: float) -> bool:
    """Profit within alpha of the LP bound, loads within beta / gamma."""
    if outcome.profit < bounds.alpha * lp_objective - _GUARD:
        return False
    if outcome.max_node_load > bounds.beta + _GUARD:
        return False
    if outcome.max_edge_load > bounds.gamma + _GUARD:
        return False
    return True


# probabilistic constants of the analysis; documentation and tests only


def chernoff_profit_bound() -> float:
    """Per-round probability bound for missing a third of the optimum."""
    return math.exp(-2.0 / 9.0)


def resource_violation_bound(lam: float) -> float:
    """Per-resource tail bound at augmentation delta(lambda)."""
    return lam ** -4.0


def single_round_failure_bound(num_nodes: int, num_types: int,
                               num_edges: int) -> float:
    """Union bound over the profit clause and every resource; <= 19/20 for
    substrates with at least three nodes."""
    node_term = (num_nodes * num_types) ** -3.0
    edge_term = num_nodes ** 2 * num_edges ** -4.0
    return min(1.0, chernoff_profit_bound() + node_term + edge_term)


@dataclass(frozen=True)
class RandRoundResult:
    outcome: RoundingOutcome
    accepted_round: Optional[int]
    trace: tuple[dict, ...]
    lp_objective: float
    bounds: BoundParameters
    dropped: tuple[str, ...]
    decompositions: Mapping[str, ConvexDecomposition] = field(default_factory=dict)


def run_randround(
    instance: Instance,
    max_rounds: int = 1000,
    seed: int = 0,
    bounds_source: str = "upper-bound",
    engine: str = "highs",
) -> RandRoundResult:
    """Full pipeline: preprocess, solve the cactus LP, decompose, then round
    until an (alpha, beta, gamma)-approximate outcome appears."""
    pipeline = solve_and_decompose(instance, engine)
    kept = list(pipeline.problem.instance.requests)
    bounds = compute_bounds(kept, instance.substrate, bounds_source)
    if not kept:
        empty = RoundingOutcome({}, 0.0, {}, 0.0, 0.0)
        return RandRoundResult(empty, None, (), 0.0, bounds, pipeline.dropped)

    trace: list[dict] = []
    best: Optional[RoundingOutcome] = None
    for k in range(max_rounds):
        outcome = round_once(pipeline.problem, rng_for(seed, k))
        accepted = is_abc_approximate(outcome, bounds, pipeline.lp_objective)
        trace.append({
            "round": k,
            "profit": outcome.profit,
            "max_node_load": outcome.max_node_load,
            "max_edge_load": outcome.max_edge_load,
            "accepted": accepted,
        })
        if accepted:
            return RandRoundResult(outcome, k, tuple(trace),
                                   pipeline.lp_objective, bounds,
                                   pipeline.dropped, pipeline.decompositions)
        if best is None or (outcome.profit, -outcome.max_load) > (
                best.profit, -best.max_load):
            best = outcome
    return RandRoundResult(best, None, tuple(trace), pipeline.lp_objective,
                           bounds, pipeline.dropped, pipeline.decompositions)


def selection_key(outcome: RoundingOutcome, criterion: str):
    """Lexicographic preference, larger is better."""
    if criterion == "min_load":
        return (-outcome.max_load, outcome.profit)
    if criterion == "max_profit":
        return (outcome.profit, -outcome.max_load)
    raise ValueError(f"unknown criterion {criterion}")


def vanilla_iteration(problem: RoundingProblem, seed: int, k: int) -> RoundingOutcome:
    """Iteration k of a plain rounding run; independent of all other k."""
    return round_once(problem, rng_for(seed, k))


def run_vanilla(
    problem: RoundingProblem,
    iterations: int,
    criterion: str,
    seed: int = 0,
) -> RoundingOutcome:
    """Fixed-iteration rounding; selection by a lexicographic criterion.

    ``min_load`` prefers the smallest maximum load ratio and breaks ties by
    profit; ``max_profit`` prefers profit and breaks ties by load.  Earlier
    iterations win remaining ties, so chunked parallel runs agree with
    serial ones.
    """
    if criterion not in ("min_load", "max_profit"):
        raise ValueError(f"unknown criterion {criterion}")
    best: Optional[RoundingOutcome] = None
    best_key = None
    for k in range(iterations):
        outcome = vanilla_iteration(problem, seed, k)
        key = selection_key(outcome, criterion)
        if best is None or key > best_key:
            best = outcome
            best_key = key
    return best


def heuristic_iteration(problem: RoundingProblem, seed: int, k: int) -> RoundingOutcome:
    """One capacity-respecting iteration: permuted request order, draws that
    would violate a capacity are discarded."""
    substrate = problem.instance.substrate
    rng = rng_for(seed, k)
    ids = problem.request_ids
    order = [ids[t] for t in rng.permutation(len(ids))]
    load: dict[Resource, float] = {}
    choices: dict[str, Optional[int]] = {}
    for rid in order:
        idx = problem.draw(rid, rng)
        if idx is None:
            choices[rid] = None
            continue
        alloc = problem.entry_allocations[rid][idx]
        fits = all(load.get(res, 0.0) + val <= substrate.capacity(res) + _GUARD
                   for res, val in alloc.items())
        if not fits:
            choices[rid] = None
            continue
        for res, val in alloc.items():
            load[res] = load.get(res, 0.0) + val
        choices[rid] = idx
    return problem.outcome(choices)


def run_heuristic(
    problem: RoundingProblem,
    iterations: int,
    seed: int = 0,
) -> RoundingOutcome:
    """Capacity-respecting rounding; the returned outcome is always a
    feasible embedding.  Across iterations the maximum profit wins, with
    earlier iterations breaking ties."""
    best: Optional[RoundingOutcome] = None
    for k in range(iterations):
        outcome = heuristic_iteration(problem, seed, k)
        if best is None or outcome.profit > best.profit:
            best = outcome
    return best
