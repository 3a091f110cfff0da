"""Solver unit tests with independent brute-force oracles."""

import itertools

import pytest

from guidedrl.constraints import Cop, Csp, all_solutions, solve_minimize, solve_satisfy


def queens_model(n: int) -> Csp:
    model = Csp()
    for i in range(n):
        model.add_variable(f"q{i}", range(n))
    for i in range(n):
        for j in range(i + 1, n):
            model.add_constraint(
                (f"q{i}", f"q{j}"),
                lambda a, b, d=j - i: a != b and abs(a - b) != d,
            )
    return model


def brute_force_queens(n: int) -> list[dict]:
    """Oracle: enumerate all n**n grids and filter by the raw rules."""
    solutions = []
    for rows in itertools.product(range(n), repeat=n):
        ok = all(
            rows[i] != rows[j] and abs(rows[i] - rows[j]) != j - i
            for i in range(n)
            for j in range(i + 1, n)
        )
        if ok:
            solutions.append({f"q{i}": rows[i] for i in range(n)})
    return solutions


def test_satisfy_picks_first_value_in_ascending_order():
    model = Csp()
    model.add_variable("x", [1, 2, 3])
    model.add_constraint(("x",), lambda x: x != 2)
    assert solve_satisfy(model) == {"x": 1}


def test_satisfy_contradiction_returns_none():
    model = Csp()
    model.add_variable("x", [1, 2])
    model.add_variable("y", [1, 2])
    model.add_constraint(("x", "y"), lambda x, y: x == y)
    model.add_constraint(("x", "y"), lambda x, y: x != y)
    assert solve_satisfy(model) is None


def test_four_queens_against_brute_force():
    model = queens_model(4)
    expected = brute_force_queens(4)
    assert len(expected) == 2

    found = solve_satisfy(model)
    assert found in expected

    assert all_solutions(model) == expected


def test_all_solutions_simple_enumeration():
    model = Csp()
    model.add_variable("x", [1, 2, 3])
    model.add_constraint(("x",), lambda x: x != 2)
    assert all_solutions(model) == [{"x": 1}, {"x": 3}]


def test_all_solutions_no_constraints():
    model = Csp()
    model.add_variable("x", [1, 2])
    assert all_solutions(model) == [{"x": 1}, {"x": 2}]


def test_minimize_with_tie_broken_low():
    """|x - 5| over even x in 1..10: optimum 1 at x in {4, 6}, tie broken to 4."""
    model = Csp()
    model.add_variable("x", range(1, 11))
    model.add_constraint(("x",), lambda x: x % 2 == 0)
    cop = Cop(model, ("x",), lambda x: abs(x - 5))

    # Oracle: direct scan over the ten domain values.
    feasible = [x for x in range(1, 11) if x % 2 == 0]
    best = min(abs(x - 5) for x in feasible)
    assert best == 1

    assignment, z = solve_minimize(cop)
    assert z == best
    assert assignment == {"x": 4}


def test_minimize_constant_objective_takes_domain_minimum():
    model = Csp()
    model.add_variable("x", [7, 3, 9])
    cop = Cop(model, (), lambda: 0)
    assignment, z = solve_minimize(cop)
    assert z == 0
    assert assignment == {"x": 3}


def test_minimize_unsatisfiable_returns_none():
    model = Csp()
    model.add_variable("x", [1, 2])
    model.add_constraint(("x",), lambda x: x > 5)
    assert solve_minimize(Cop(model, ("x",), lambda x: x)) is None


def test_minimize_equals_scan_of_all_solutions():
    """Optimality cross-check: z matches the minimum over the full solution set."""
    model = queens_model(5)
    cop = Cop(model, ("q0", "q4"), lambda a, b: a * 10 + b)
    assignment, z = solve_minimize(cop)
    everything = all_solutions(model)
    assert everything, "5-queens has solutions"
    assert z == min(s["q0"] * 10 + s["q4"] for s in everything)
    assert model.check(assignment)


def test_returned_assignments_satisfy_all_constraints():
    """Soundness: re-check every reported solution by direct evaluation."""
    model = queens_model(6)
    for sol in all_solutions(model):
        assert model.check(sol)


def test_satisfy_agrees_with_enumeration_on_unsat():
    model = Csp()
    model.add_variable("a", [0, 1])
    model.add_variable("b", [0, 1])
    model.add_constraint(("a", "b"), lambda a, b: a + b == 3)
    assert solve_satisfy(model) is None
    assert all_solutions(model) == []


def test_duplicate_variable_rejected():
    model = Csp()
    model.add_variable("x", [1])
    with pytest.raises(ValueError):
        model.add_variable("x", [2])


def test_empty_domain_rejected():
    model = Csp()
    with pytest.raises(ValueError):
        model.add_variable("x", [])


def test_constraint_over_undeclared_variable_rejected():
    model = Csp()
    model.add_variable("x", [1])
    with pytest.raises(ValueError):
        model.add_constraint(("x", "y"), lambda x, y: True)


def test_determinism_identical_models_identical_results():
    a = solve_minimize(Cop(queens_model(5), ("q2",), lambda v: -v))
    b = solve_minimize(Cop(queens_model(5), ("q2",), lambda v: -v))
    assert a == b
