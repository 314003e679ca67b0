"""Generic LP model, solvers and LP-file export.

Two interchangeable engines sit behind ``solve_lp``/``solve_ip``:

* ``"highs"`` (default): scipy's HiGHS backend, fast enough for the full
  experiment pipeline.
* ``"tableau"`` / ``"bnb"``: a dense two-phase primal simplex with Bland's
  rule and a best-first branch-and-bound on top of it.  Intended for small
  models and as an independent cross-check of the fast engine; the dense
  tableau hits a wall at a few hundred variables.
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

_INF = float("inf")

#: Default node budget for branch-and-bound; override via VNE_ROUND_BUDGET.
DEFAULT_NODE_BUDGET = 200_000


def node_budget() -> int:
    return int(os.environ.get("VNE_ROUND_BUDGET", DEFAULT_NODE_BUDGET))


@dataclass
class _Constraint:
    name: str
    coeffs: dict[int, float]
    sense: str  # '<=', '=', '>='
    rhs: float


class LinearProgram:
    """Maximization LP with named variables; immutable once handed to a solver."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._var_index: dict[str, int] = {}
        self.var_names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.objective: dict[int, float] = {}
        self.constraints: list[_Constraint] = []

    @property
    def num_variables(self) -> int:
        return len(self.var_names)

    def add_variable(self, name: str, lb: float = 0.0, ub: float = _INF,
                     obj: float = 0.0) -> str:
        if name in self._var_index:
            raise ValueError(f"duplicate variable {name}")
        self._var_index[name] = len(self.var_names)
        self.var_names.append(name)
        self.lower.append(lb)
        self.upper.append(ub)
        if obj:
            self.objective[self._var_index[name]] = obj
        return name

    def has_variable(self, name: str) -> bool:
        return name in self._var_index

    def set_bounds(self, name: str, lb: float, ub: float) -> None:
        idx = self._var_index[name]
        self.lower[idx] = lb
        self.upper[idx] = ub

    def set_objective(self, coeffs: Mapping[str, float]) -> None:
        self.objective = {self._var_index[n]: c for n, c in coeffs.items() if c != 0.0}

    def add_constraint(self, name: str, coeffs: Mapping[str, float], sense: str,
                       rhs: float) -> None:
        if sense not in ("<=", "=", ">="):
            raise ValueError(f"unknown sense {sense}")
        resolved: dict[int, float] = {}
        for var, coef in coeffs.items():
            if var not in self._var_index:
                raise ValueError(f"constraint {name} references unknown variable {var}")
            if coef != 0.0:
                idx = self._var_index[var]
                resolved[idx] = resolved.get(idx, 0.0) + coef
        self.constraints.append(_Constraint(name, resolved, sense, rhs))

    def objective_value(self, assignment: Mapping[str, float]) -> float:
        return sum(c * assignment.get(self.var_names[i], 0.0)
                   for i, c in self.objective.items())

    def constraint_residuals(self, assignment: Mapping[str, float]) -> dict[str, float]:
        """Violation per constraint and bound for a (partial) assignment.

        Missing variables count as 0.  Satisfied rows report 0.0.
        """
        values = np.zeros(self.num_variables)
        for name, val in assignment.items():
            if name in self._var_index:
                values[self._var_index[name]] = val
        out: dict[str, float] = {}
        for con in self.constraints:
            lhs = sum(values[i] * c for i, c in con.coeffs.items())
            if con.sense == "<=":
                out[con.name] = max(0.0, lhs - con.rhs)
            elif con.sense == ">=":
                out[con.name] = max(0.0, con.rhs - lhs)
            else:
                out[con.name] = abs(lhs - con.rhs)
        for i, name in enumerate(self.var_names):
            viol = max(0.0, self.lower[i] - values[i])
            if self.upper[i] < _INF:
                viol = max(viol, values[i] - self.upper[i])
            if viol > 0.0:
                out[f"bound:{name}"] = viol
        return out

    def max_violation(self, assignment: Mapping[str, float]) -> float:
        residuals = self.constraint_residuals(assignment)
        return max(residuals.values(), default=0.0)


@dataclass(frozen=True)
class LpSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    objective: float
    assignment: Mapping[str, float] = field(default_factory=dict)
    #: Relative optimality gap; > 0 only when a node budget was exhausted.
    gap: float = 0.0

    def value(self, name: str) -> float:
        return self.assignment.get(name, 0.0)


# ---------------------------------------------------------------------------
# scipy / HiGHS engine


def _to_matrices(lp: LinearProgram):
    from scipy.sparse import csr_matrix

    n = lp.num_variables
    rows_ub, cols_ub, data_ub, b_ub = [], [], [], []
    rows_eq, cols_eq, data_eq, b_eq = [], [], [], []
    for con in lp.constraints:
        if con.sense == "=":
            r = len(b_eq)
            for i, c in con.coeffs.items():
                rows_eq.append(r)
                cols_eq.append(i)
                data_eq.append(c)
            b_eq.append(con.rhs)
        else:
            sign = 1.0 if con.sense == "<=" else -1.0
            r = len(b_ub)
            for i, c in con.coeffs.items():
                rows_ub.append(r)
                cols_ub.append(i)
                data_ub.append(sign * c)
            b_ub.append(sign * con.rhs)
    A_ub = csr_matrix((data_ub, (rows_ub, cols_ub)), shape=(len(b_ub), n)) if b_ub else None
    A_eq = csr_matrix((data_eq, (rows_eq, cols_eq)), shape=(len(b_eq), n)) if b_eq else None
    c = np.zeros(n)
    for i, coef in lp.objective.items():
        c[i] = coef
    return c, A_ub, (np.array(b_ub) if b_ub else None), A_eq, (np.array(b_eq) if b_eq else None)


def _solve_highs(lp: LinearProgram) -> LpSolution:
    from scipy.optimize import linprog

    c, A_ub, b_ub, A_eq, b_eq = _to_matrices(lp)
    bounds = [(lo, None if hi == _INF else hi) for lo, hi in zip(lp.lower, lp.upper)]
    res = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution("infeasible", 0.0)
    if res.status == 3:
        return LpSolution("unbounded", _INF)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    assignment = {lp.var_names[i]: float(res.x[i]) for i in range(lp.num_variables)
                  if abs(res.x[i]) > 1e-12}
    return LpSolution("optimal", float(-res.fun), assignment)


def _solve_milp_highs(lp: LinearProgram, integer_vars: Iterable[str],
                      budget: Optional[int]) -> LpSolution:
    from scipy.optimize import Bounds, LinearConstraint, milp

    n = lp.num_variables
    c, A_ub, b_ub, A_eq, b_eq = _to_matrices(lp)
    constraints = []
    if A_ub is not None:
        constraints.append(LinearConstraint(A_ub, -np.inf, b_ub))
    if A_eq is not None:
        constraints.append(LinearConstraint(A_eq, b_eq, b_eq))
    integrality = np.zeros(n)
    int_idx = {lp._var_index[name] for name in integer_vars}
    for i in int_idx:
        integrality[i] = 1
    bounds = Bounds(np.array(lp.lower), np.array(lp.upper))
    options = {"mip_rel_gap": 1e-9}
    if budget is not None:
        options["node_limit"] = budget
    res = milp(-c, constraints=constraints, integrality=integrality, bounds=bounds,
               options=options)
    if res.status == 2:
        return LpSolution("infeasible", 0.0)
    if res.status == 3:
        return LpSolution("unbounded", _INF)
    if res.x is None:
        raise RuntimeError(f"IP solver returned no solution: {res.message}")
    x = np.array(res.x)
    x[list(int_idx)] = np.round(x[list(int_idx)])
    assignment = {lp.var_names[i]: float(x[i]) for i in range(n) if abs(x[i]) > 1e-12}
    gap = float(res.mip_gap) if res.status == 1 and res.mip_gap is not None else 0.0
    return LpSolution("optimal", float(-res.fun), assignment, gap=gap)


# ---------------------------------------------------------------------------
# built-in dense tableau simplex (Bland's rule)

_PIVOT_EPS = 1e-9


def _tableau_solve(lp: LinearProgram,
                   lower: Sequence[float], upper: Sequence[float]) -> LpSolution:
    """Two-phase primal simplex on a dense tableau.

    Finite lower bounds are shifted out; finite upper bounds become rows.
    Bland's rule is always on, trading speed for guaranteed termination on
    the heavily degenerate embedding LPs.
    """
    n = lp.num_variables
    shift = np.zeros(n)
    for i in range(n):
        if lower[i] == -_INF:
            raise NotImplementedError("tableau engine requires finite lower bounds")
        shift[i] = lower[i]

    rows: list[tuple[dict[int, float], str, float]] = []
    for con in lp.constraints:
        rhs = con.rhs - sum(c * shift[i] for i, c in con.coeffs.items())
        rows.append((con.coeffs, con.sense, rhs))
    for i in range(n):
        if upper[i] < _INF:
            rows.append(({i: 1.0}, "<=", upper[i] - shift[i]))

    m = len(rows)
    cols = n
    slack_of_row = {}
    art_of_row = {}
    for r, (coeffs, sense, rhs) in enumerate(rows):
        flip = rhs < 0
        if sense == "<=" and not flip:
            slack_of_row[r] = cols
            cols += 1
        elif sense == ">=" and flip:
            slack_of_row[r] = cols  # flipped >= becomes <=
            cols += 1
        else:
            if sense in ("<=", ">="):
                slack_of_row[r] = cols  # surplus
                cols += 1
            art_of_row[r] = cols
            cols += 1
    n_art = len(art_of_row)

    T = np.zeros((m, cols + 1))
    basis = np.empty(m, dtype=int)
    for r, (coeffs, sense, rhs) in enumerate(rows):
        sign = -1.0 if rhs < 0 else 1.0
        for i, c in coeffs.items():
            T[r, i] = sign * c
        T[r, cols] = sign * rhs
        if r in slack_of_row:
            eff_sense = sense if sign > 0 else {"<=": ">=", ">=": "<=", "=": "="}[sense]
            T[r, slack_of_row[r]] = 1.0 if eff_sense == "<=" else -1.0
        if r in art_of_row:
            T[r, art_of_row[r]] = 1.0
            basis[r] = art_of_row[r]
        else:
            basis[r] = slack_of_row[r]

    def pivot(T, basis, row, col):
        T[row] /= T[row, col]
        for r in range(T.shape[0]):
            if r != row and abs(T[r, col]) > _PIVOT_EPS:
                T[r] -= T[r, col] * T[row]
        basis[row] = col

    def run_simplex(T, basis, cost):
        """Minimize cost @ x from the current basic feasible tableau.

        Bland's rule throughout; returns True on an unbounded direction.
        """
        z = cost.copy().astype(float)
        for r, b in enumerate(basis):
            coef = z[b]
            if abs(coef) > _PIVOT_EPS:
                z -= coef * T[r, :-1]
        for _ in range(200_000):
            entering = -1
            for j in range(T.shape[1] - 1):
                if z[j] < -_PIVOT_EPS:
                    entering = j  # Bland: smallest improving index
                    break
            if entering < 0:
                return False
            ratio_best = _INF
            leaving = -1
            for r in range(T.shape[0]):
                a = T[r, entering]
                if a > _PIVOT_EPS:
                    ratio = T[r, -1] / a
                    if ratio < ratio_best - _PIVOT_EPS or (
                            abs(ratio - ratio_best) <= _PIVOT_EPS
                            and (leaving < 0 or basis[r] < basis[leaving])):
                        ratio_best = ratio
                        leaving = r
            if leaving < 0:
                return True  # unbounded direction
            coef = z[entering]
            pivot(T, basis, leaving, entering)
            z -= coef * T[leaving, :-1]
        raise RuntimeError("simplex iteration cap hit; model too large for tableau engine")

    if n_art:
        cost1 = np.zeros(cols)
        for r, a in art_of_row.items():
            cost1[a] = 1.0
        run_simplex(T, basis, cost1)
        art_cols = set(art_of_row.values())
        obj1 = sum(T[r, -1] for r in range(m) if basis[r] in art_cols)
        if obj1 > 1e-7:
            return LpSolution("infeasible", 0.0)
        # drop artificials still in the basis at level zero
        for r in range(m):
            if basis[r] in art_cols:
                for j in range(cols):
                    if j not in art_cols and abs(T[r, j]) > _PIVOT_EPS:
                        pivot(T, basis, r, j)
                        break
        T[:, list(art_cols)] = 0.0

    cost2 = np.zeros(cols)
    for i, c in lp.objective.items():
        cost2[i] = -c  # maximize -> minimize negated
    unbounded = run_simplex(T, basis, cost2)
    if unbounded:
        return LpSolution("unbounded", _INF)

    x = np.array(shift, dtype=float)
    for r, b in enumerate(basis):
        if b < n:
            x[b] = shift[b] + T[r, -1]
    assignment = {lp.var_names[i]: float(x[i]) for i in range(n) if abs(x[i]) > 1e-12}
    objective = sum(c * x[i] for i, c in lp.objective.items())
    return LpSolution("optimal", float(objective), assignment)


def _solve_tableau(lp: LinearProgram) -> LpSolution:
    return _tableau_solve(lp, lp.lower, lp.upper)


# ---------------------------------------------------------------------------
# public entry points


def solve_lp(lp: LinearProgram, engine: str = "highs") -> LpSolution:
    """Solve the LP relaxation; infeasible/unbounded go into the status field."""
    if engine == "highs":
        return _solve_highs(lp)
    if engine == "tableau":
        return _solve_tableau(lp)
    raise ValueError(f"unknown LP engine {engine}")


def _solve_bnb(lp: LinearProgram, integer_vars: Sequence[str],
               budget: int, lp_engine: str) -> LpSolution:
    """Best-first branch-and-bound on fractional binary variables.

    Depth-first diving with a best-bound restart every 256 nodes; branches on
    the most fractional variable.
    """
    int_idx = [lp._var_index[name] for name in integer_vars]
    for i in int_idx:
        if lp.lower[i] < -1e-12 or lp.upper[i] > 1 + 1e-12:
            raise ValueError("integer variables must have bounds within [0, 1]")

    base_lower = list(lp.lower)
    base_upper = list(lp.upper)

    def relax(fixes: dict[int, int]) -> LpSolution:
        lower = list(base_lower)
        upper = list(base_upper)
        for i, v in fixes.items():
            lower[i] = float(v)
            upper[i] = float(v)
        if lp_engine == "tableau":
            return _tableau_solve(lp, lower, upper)
        saved = (lp.lower, lp.upper)
        lp.lower, lp.upper = lower, upper
        try:
            return _solve_highs(lp)
        finally:
            lp.lower, lp.upper = saved

    incumbent: Optional[LpSolution] = None
    incumbent_obj = -_INF
    counter = 0
    heap: list[tuple[float, int, dict[int, int]]] = []
    stack: list[dict[int, int]] = [{}]
    nodes = 0

    while (stack or heap) and nodes < budget:
        if stack and nodes % 256 != 0:
            fixes = stack.pop()
        elif heap:
            _, _, fixes = heapq.heappop(heap)
        else:
            fixes = stack.pop()
        nodes += 1
        sol = relax(fixes)
        if sol.status != "optimal":
            continue
        if sol.objective <= incumbent_obj + 1e-9:
            continue
        frac_var = -1
        frac_dist = 0.0
        for i in int_idx:
            if i in fixes:
                continue
            v = sol.assignment.get(lp.var_names[i], 0.0)
            dist = abs(v - round(v))
            if dist > 1e-7 and dist > frac_dist:
                frac_dist = dist
                frac_var = i
        if frac_var < 0:
            rounded = dict(sol.assignment)
            for i in int_idx:
                name = lp.var_names[i]
                if name in rounded:
                    rounded[name] = round(rounded[name])
            if sol.objective > incumbent_obj:
                incumbent_obj = sol.objective
                incumbent = LpSolution("optimal", sol.objective, rounded)
            continue
        v = sol.assignment.get(lp.var_names[frac_var], 0.0)
        first = 1 if v >= 0.5 else 0
        for branch in (1 - first, first):  # dive into the nearer branch first
            child = dict(fixes)
            child[frac_var] = branch
            stack.append(child)
            counter += 1
            heapq.heappush(heap, (-sol.objective, counter, child))

    exhausted = bool(stack or heap) and nodes >= budget
    if incumbent is None:
        if exhausted:
            raise RuntimeError(f"branch-and-bound budget {budget} exhausted with no incumbent")
        return LpSolution("infeasible", 0.0)
    gap = 0.0
    if exhausted:
        open_bounds = [-h[0] for h in heap]
        best_bound = max(open_bounds, default=incumbent_obj)
        gap = max(0.0, (best_bound - incumbent_obj) / max(1.0, abs(incumbent_obj)))
    return LpSolution("optimal", incumbent.objective, incumbent.assignment, gap=gap)


def solve_ip(lp: LinearProgram, integer_vars: Iterable[str],
             engine: str = "highs", budget: Optional[int] = None) -> LpSolution:
    """Solve with the named variables integral; gap > 0 flags budget exhaustion."""
    integer_vars = list(integer_vars)
    if budget is None:
        budget = node_budget()
    if not integer_vars:
        return solve_lp(lp, engine="highs" if engine == "highs" else "tableau")
    if engine == "highs":
        return _solve_milp_highs(lp, integer_vars, budget)
    if engine == "bnb":
        return _solve_bnb(lp, integer_vars, budget, lp_engine="highs")
    if engine == "bnb-tableau":
        return _solve_bnb(lp, integer_vars, budget, lp_engine="tableau")
    raise ValueError(f"unknown IP engine {engine}")


# ---------------------------------------------------------------------------
# CPLEX-LP text export

_NAME_ESCAPES = str.maketrans({":": ".", "[": "(", "]": ")", ";": "!"})


def _lp_name(name: str) -> str:
    return name.translate(_NAME_ESCAPES)


def _format_terms(coeffs: Mapping[int, float], var_names: Sequence[str]) -> str:
    parts = []
    for i in sorted(coeffs):
        c = coeffs[i]
        if c == 0.0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        term = _lp_name(var_names[i]) if mag == 1.0 else f"{mag!r} {_lp_name(var_names[i])}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0 __zero"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp_file(lp: LinearProgram, path, binaries: Optional[Iterable[str]] = None) -> None:
    """Write the model in CPLEX-LP text format with deterministic ordering.

    Characters CPLEX identifiers reject (``: [ ] ;``) are escaped one-to-one,
    so exported names stay parseable.
    """
    lines = [f"\\ {lp.name}", "Maximize"]
    if lp.objective:
        lines.append(" obj: " + _format_terms(lp.objective, lp.var_names))
    else:
        lines.append(" obj: 0 " + (_lp_name(lp.var_names[0]) if lp.var_names else "__zero"))
    lines.append("Subject To")
    rel = {"<=": "<=", ">=": ">=", "=": "="}
    for k, con in enumerate(lp.constraints):
        name = _lp_name(con.name) if con.name else f"c{k}"
        lines.append(f" {name}: {_format_terms(con.coeffs, lp.var_names)} "
                     f"{rel[con.sense]} {con.rhs!r}")
    lines.append("Bounds")
    for i, name in enumerate(lp.var_names):
        lo, hi = lp.lower[i], lp.upper[i]
        if lo == 0.0 and hi == _INF:
            continue
        if hi == _INF:
            lines.append(f" {_lp_name(name)} >= {lo!r}")
        else:
            lines.append(f" {lo!r} <= {_lp_name(name)} <= {hi!r}")
    if binaries:
        lines.append("Binaries")
        for name in sorted(binaries):
            lines.append(f" {_lp_name(name)}")
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
