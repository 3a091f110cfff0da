"""Minimal finite-domain constraint solver.

Models are triples of variables, finite integer domains and predicate
constraints; an optimization model adds an integer objective to minimize.
The solver is plain depth-first backtracking (variables in declaration
order, values tried ascending) with branch-and-bound pruning for the
optimizing variant.  Domains here are tiny (tens of values, tens of
variables), so correctness and auditability win over propagation tricks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

Assignment = dict[str, int]


@dataclass(frozen=True)
class Constraint:
    """Predicate over a declared subset of variables.

    The predicate receives one positional int per variable, in the order
    given by ``variables``, and returns True when satisfied.
    """

    variables: tuple[str, ...]
    predicate: Callable[..., bool]
    name: str = ""


@dataclass
class Csp:
    """Constraint satisfaction problem over finite integer domains."""

    variables: list[str] = field(default_factory=list)
    domains: dict[str, tuple[int, ...]] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)

    def add_variable(self, name: str, domain) -> None:
        if name in self.domains:
            raise ValueError(f"variable {name!r} declared twice")
        values = tuple(sorted(set(int(v) for v in domain)))
        if not values:
            raise ValueError(f"variable {name!r} has an empty domain")
        self.variables.append(name)
        self.domains[name] = values

    def add_constraint(self, variables, predicate: Callable[..., bool], name: str = "") -> None:
        scope = tuple(variables)
        for v in scope:
            if v not in self.domains:
                raise ValueError(f"constraint references undeclared variable {v!r}")
        self.constraints.append(Constraint(scope, predicate, name))

    def check(self, assignment: Assignment) -> bool:
        """Evaluate every constraint against a full assignment."""
        return all(
            c.predicate(*(assignment[v] for v in c.variables)) for c in self.constraints
        )


@dataclass
class Cop:
    """CSP plus an integer objective to be minimized."""

    csp: Csp
    objective_variables: tuple[str, ...] = ()
    objective: Callable[..., int] = lambda: 0

    def __post_init__(self):
        self.objective_variables = tuple(self.objective_variables)
        for v in self.objective_variables:
            if v not in self.csp.domains:
                raise ValueError(f"objective references undeclared variable {v!r}")

    def objective_value(self, assignment: Assignment) -> int:
        return int(self.objective(*(assignment[v] for v in self.objective_variables)))


def _constraints_by_depth(model: Csp) -> list[list[Constraint]]:
    """Group constraints by the declaration index of their last-assigned variable.

    A constraint is checked as soon as every variable in its scope has a
    value, i.e. when the deepest variable of its scope gets assigned.
    """
    index = {name: i for i, name in enumerate(model.variables)}
    grouped: list[list[Constraint]] = [[] for _ in model.variables]
    for c in model.constraints:
        if not c.variables:
            continue
        grouped[max(index[v] for v in c.variables)].append(c)
    return grouped


def _search(model: Csp, on_solution: Callable[[Assignment], bool]):
    """DFS over assignments in lexicographic order (declaration order, values ascending).

    ``on_solution`` is called for each satisfying assignment; returning True
    stops the search.  Zero-variable models with no constraints yield the
    empty assignment.
    """
    names = model.variables
    grouped = _constraints_by_depth(model)
    assignment: Assignment = {}

    def descend(depth: int) -> bool:
        if depth == len(names):
            return on_solution(dict(assignment))
        name = names[depth]
        for value in model.domains[name]:
            assignment[name] = value
            ok = all(
                c.predicate(*(assignment[v] for v in c.variables))
                for c in grouped[depth]
            )
            if ok and descend(depth + 1):
                return True
        assignment.pop(name, None)
        return False

    descend(0)


def solve_satisfy(model: Csp) -> Optional[Assignment]:
    """First satisfying assignment in lexicographic order, or None."""
    found: list[Assignment] = []

    def grab(sol: Assignment) -> bool:
        found.append(sol)
        return True

    _search(model, grab)
    return found[0] if found else None


def all_solutions(model: Csp) -> list[Assignment]:
    """Complete enumeration of satisfying assignments, lexicographic order."""
    out: list[Assignment] = []

    def grab(sol: Assignment) -> bool:
        out.append(sol)
        return False

    _search(model, grab)
    return out


def solve_minimize(model: Cop) -> Optional[tuple[Assignment, int]]:
    """Minimizing satisfying assignment and its objective value, or None.

    Exhaustive branch-and-bound over the CSP solution set.  Because the DFS
    enumerates assignments in lexicographic order and only strictly better
    objective values replace the incumbent, ties resolve to the
    lexicographically smallest assignment.
    """
    csp = model.csp
    names = csp.variables
    grouped = _constraints_by_depth(csp)
    index = {name: i for i, name in enumerate(names)}
    # Depth at which the objective becomes fully assigned and can bound the subtree.
    obj_depth = max((index[v] for v in model.objective_variables), default=-1)

    best: list[tuple[Assignment, int]] = []
    assignment: Assignment = {}

    def descend(depth: int) -> None:
        if depth == len(names):
            z = model.objective_value(assignment)
            if not best or z < best[0][1]:
                best[:] = [(dict(assignment), z)]
            return
        name = names[depth]
        for value in csp.domains[name]:
            assignment[name] = value
            ok = all(
                c.predicate(*(assignment[v] for v in c.variables))
                for c in grouped[depth]
            )
            if not ok:
                continue
            if best and depth >= obj_depth and model.objective_value(assignment) >= best[0][1]:
                continue
            descend(depth + 1)
        assignment.pop(name, None)

    descend(0)
    return best[0] if best else None
