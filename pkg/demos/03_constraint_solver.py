"""The finite-domain solver: satisfaction, enumeration, minimization.

Run:  python demos/03_constraint_solver.py
"""

from guidedrl.constraints import Cop, Csp, all_solutions, solve_minimize, solve_satisfy

print("A toy model: x in 1..3 with x != 2")
model = Csp()
model.add_variable("x", [1, 2, 3])
model.add_constraint(("x",), lambda x: x != 2)
print("  first solution:", solve_satisfy(model))
print("  all solutions: ", all_solutions(model))

print("\n4-queens (variables are columns, values are rows):")
queens = Csp()
for i in range(4):
    queens.add_variable(f"q{i}", range(4))
for i in range(4):
    for j in range(i + 1, 4):
        queens.add_constraint(
            (f"q{i}", f"q{j}"),
            lambda a, b, d=j - i: a != b and abs(a - b) != d,
        )
for solution in all_solutions(queens):
    print("  ", solution)

print("\nOptimization: minimize |x - 5| over even x in 1..10")
opt = Csp()
opt.add_variable("x", range(1, 11))
opt.add_constraint(("x",), lambda x: x % 2 == 0)
assignment, z = solve_minimize(Cop(opt, ("x",), lambda x: abs(x - 5)))
print(f"  optimum: {assignment} with objective {z}")
print("  (4 and 6 tie at distance 1; ties break to the lexicographically")
print("   smallest assignment, which is what makes solving deterministic)")
