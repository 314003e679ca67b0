import math

import pytest
from hypothesis import given, settings, strategies as st

from vnelp import cactus
from vnelp.counterexamples import ring_gap_instance, triangle_ring_instance
from vnelp.formulations import build_mcf, build_novel
from vnelp.lp import LinearProgram, export_lp_file, solve_ip, solve_lp


def simple_lp():
    lp = LinearProgram("simple")
    lp.add_variable("x", obj=1.0)
    lp.add_constraint("c0", {"x": 1.0}, "<=", 3.0)
    return lp


class TestSolveLp:
    @pytest.mark.parametrize("engine", ["highs", "tableau"])
    def test_single_variable(self, engine):
        sol = solve_lp(simple_lp(), engine=engine)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(3.0, abs=1e-9)
        assert sol.value("x") == pytest.approx(3.0, abs=1e-9)

    @pytest.mark.parametrize("engine", ["highs", "tableau"])
    def test_two_variables(self, engine):
        lp = LinearProgram()
        lp.add_variable("x", obj=1.0)
        lp.add_variable("y", obj=1.0)
        lp.add_constraint("c0", {"x": 1, "y": 1}, "<=", 1.0)
        lp.add_constraint("c1", {"x": 1}, "<=", 0.5)
        sol = solve_lp(lp, engine=engine)
        assert sol.objective == pytest.approx(1.0, abs=1e-9)

    def test_theorem_gap_instance_lp_attains_full_profit(self):
        substrate, request = triangle_ring_instance(edge_restricted=True,
                                                    profit=10.0)
        lp, _ = build_mcf([request], substrate)
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(10.0, abs=1e-6)
        assert lp.max_violation(sol.assignment) <= 1e-6

    @pytest.mark.parametrize("engine", ["highs", "tableau"])
    def test_statuses(self, engine):
        infeasible = LinearProgram()
        infeasible.add_variable("x", obj=1.0)
        infeasible.add_constraint("lo", {"x": 1}, ">=", 2.0)
        infeasible.add_constraint("hi", {"x": 1}, "<=", 1.0)
        assert solve_lp(infeasible, engine=engine).status == "infeasible"

        unbounded = LinearProgram()
        unbounded.add_variable("x", obj=1.0)
        unbounded.add_constraint("lo", {"x": 1}, ">=", 1.0)
        assert solve_lp(unbounded, engine=engine).status == "unbounded"

    def test_duality_spot_check(self):
        # primal: max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        primal = LinearProgram()
        primal.add_variable("x", obj=3.0)
        primal.add_variable("y", obj=5.0)
        primal.add_constraint("c1", {"x": 1}, "<=", 4.0)
        primal.add_constraint("c2", {"y": 2}, "<=", 12.0)
        primal.add_constraint("c3", {"x": 3, "y": 2}, "<=", 18.0)
        # dual: min 4u + 12v + 18w s.t. u + 3w >= 3, 2v + 2w >= 5
        dual = LinearProgram()
        dual.add_variable("u", obj=-4.0)
        dual.add_variable("v", obj=-12.0)
        dual.add_variable("w", obj=-18.0)
        dual.add_constraint("d1", {"u": 1, "w": 3}, ">=", 3.0)
        dual.add_constraint("d2", {"v": 2, "w": 2}, ">=", 5.0)
        for engine in ("highs", "tableau"):
            p = solve_lp(primal, engine=engine)
            d = solve_lp(dual, engine=engine)
            assert p.objective == pytest.approx(36.0, abs=1e-6)
            assert -d.objective == pytest.approx(p.objective, abs=1e-6)

    def test_feasible_point_never_beats_optimum(self):
        lp = LinearProgram()
        lp.add_variable("x", 0, 2, obj=2.0)
        lp.add_variable("y", 0, 2, obj=1.0)
        lp.add_constraint("cap", {"x": 1, "y": 1}, "<=", 3.0)
        opt = solve_lp(lp).objective
        for point in ({"x": 0, "y": 0}, {"x": 1, "y": 1}, {"x": 2, "y": 1}):
            assert lp.max_violation(point) <= 1e-9
            assert lp.objective_value(point) <= opt + 1e-9


@st.composite
def random_lps(draw):
    n_vars = draw(st.integers(2, 5))
    lp = LinearProgram("rand")
    for k in range(n_vars):
        ub = draw(st.integers(1, 8))
        lp.add_variable(f"v{k}", 0.0, float(ub),
                        obj=float(draw(st.integers(-3, 5))))
    n_cons = draw(st.integers(1, 4))
    for c in range(n_cons):
        coeffs = {f"v{k}": float(draw(st.integers(-2, 3)))
                  for k in range(n_vars)}
        sense = draw(st.sampled_from(["<=", ">=", "="]))
        rhs = float(draw(st.integers(-4, 10)))
        lp.add_constraint(f"c{c}", coeffs, sense, rhs)
    return lp


class TestEngineAgreement:
    @settings(max_examples=60, deadline=None)
    @given(random_lps())
    def test_tableau_matches_highs(self, lp):
        fast = solve_lp(lp, engine="highs")
        slow = solve_lp(lp, engine="tableau")
        assert fast.status == slow.status
        if fast.status == "optimal":
            assert slow.objective == pytest.approx(fast.objective, abs=1e-6)
            assert lp.max_violation(slow.assignment) <= 1e-6


class TestSolveIp:
    @pytest.mark.parametrize("engine", ["highs", "bnb", "bnb-tableau"])
    def test_integral_relaxation_passes_through(self, engine):
        lp = LinearProgram()
        lp.add_variable("x", 0, 1, obj=1.0)
        lp.add_constraint("c", {"x": 1}, "<=", 1.0)
        sol = solve_ip(lp, ["x"], engine=engine)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0, abs=1e-9)
        assert sol.gap == 0.0

    @pytest.mark.parametrize("engine", ["highs", "bnb"])
    def test_knapsack(self, engine):
        lp = LinearProgram()
        for name, value in (("a", 5.0), ("b", 4.0), ("c", 3.0)):
            lp.add_variable(name, 0, 1, obj=value)
        lp.add_constraint("w", {"a": 2, "b": 3, "c": 1}, "<=", 4.0)
        sol = solve_ip(lp, ["a", "b", "c"], engine=engine)
        assert sol.objective == pytest.approx(8.0, abs=1e-6)
        for name in ("a", "b", "c"):
            assert sol.value(name) == pytest.approx(round(sol.value(name)), abs=1e-6)

    def test_theorem_gap_instance_ip_is_zero(self):
        substrate, request = triangle_ring_instance(edge_restricted=True)
        lp, variables = build_mcf([request], substrate, integral=True)
        sol = solve_ip(lp, variables.binaries)
        assert sol.objective == pytest.approx(0.0, abs=1e-6)

    def test_ring_gap_ip_embeds_one_copy(self):
        substrate, requests = ring_gap_instance(8, 4, profit=1.0)
        lp, variables = build_mcf(list(requests), substrate, integral=True)
        sol = solve_ip(lp, variables.binaries)
        assert sol.objective == pytest.approx(1.0, abs=1e-6)

    def test_relaxation_bound(self, ring_gap):
        substrate, requests = ring_gap
        relaxed, _ = build_mcf(list(requests), substrate)
        integral, variables = build_mcf(list(requests), substrate, integral=True)
        assert solve_ip(integral, variables.binaries).objective <= \
            solve_lp(relaxed).objective + 1e-6

    def test_bnb_budget_flagged_by_gap(self):
        # knapsack big enough that a two-node budget cannot close the gap
        lp = LinearProgram()
        sizes = [3, 5, 7, 11, 13, 17, 19, 23]
        for k, s in enumerate(sizes):
            lp.add_variable(f"x{k}", 0, 1, obj=float(s))
        lp.add_constraint("w", {f"x{k}": float(s) for k, s in enumerate(sizes)},
                          "<=", 40.0)
        sol = solve_ip(lp, [f"x{k}" for k in range(len(sizes))],
                       engine="bnb", budget=2)
        assert sol.status == "optimal"
        assert sol.gap > 0.0


class TestExport:
    def test_basic_sections(self, tmp_path):
        path = tmp_path / "m.lp"
        export_lp_file(simple_lp(), path)
        text = path.read_text()
        assert "Maximize" in text
        assert "obj: x" in text
        assert "Subject To" in text
        assert "c0: x <= 3.0" in text
        assert text.strip().endswith("End")

    def test_empty_objective(self, tmp_path):
        lp = LinearProgram()
        lp.add_variable("x")
        lp.add_constraint("c0", {"x": 1}, "<=", 1.0)
        path = tmp_path / "empty.lp"
        export_lp_file(lp, path)
        text = path.read_text()
        assert "obj: 0" in text

    def test_name_escaping_and_binaries(self, tmp_path):
        substrate, request = triangle_ring_instance()
        lp, variables = build_mcf([request], substrate, integral=True)
        path = tmp_path / "tri.lp"
        export_lp_file(lp, path, binaries=variables.binaries)
        text = path.read_text()
        assert "Binaries" in text
        for ch in (":", "[", "]", ";"):
            body = text.split("Subject To", 1)[1]
            for line in body.splitlines():
                term = line.split(":", 1)[-1]
                assert ch not in term or ch == ":", line

    def test_deterministic(self, tmp_path):
        substrate, requests = ring_gap_instance(6, 2)
        structures = {r.id: cactus.analyze(r) for r in requests}
        lp, _ = build_novel(list(requests), substrate, structures)
        a, b = tmp_path / "a.lp", tmp_path / "b.lp"
        export_lp_file(lp, a)
        export_lp_file(lp, b)
        assert a.read_bytes() == b.read_bytes()
