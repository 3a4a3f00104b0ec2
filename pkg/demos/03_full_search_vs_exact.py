"""
Full search against the exact optimum
=====================================

On a seven-vertex graph every spanning tree can be enumerated, so the
heuristic can be checked against the true optimum.
"""

from qmstp import StopCriterion, default_params, exact_optimum, generate_uniform, tps_run

inst = generate_uniform(7, 1.0, (1, 100), (1, 20), seed=5)
exact = exact_optimum(inst)
print(f"exact optimum {exact.value} over {exact.count} spanning trees")

params = default_params("general", inst.n)
for seed in range(3):
    res = tps_run(inst, params, StopCriterion.stagnant(5, 20), seed)
    print(f"seed {seed}: best {res.best_value} after {res.rounds} rounds, moves {dict(res.moves)}")

# The best tree serializes as child/parent lines.
print(res.best_tree.to_text())

# Variants swap the diversification step: v1 restarts from a random tree,
# v2 applies one more directed perturbation instead.
for variant in ("v1", "v2"):
    res = tps_run(inst, params, StopCriterion.rounds(5), 0, variant=variant)
    print(variant, res.best_value)
