"""
Descent with fast examination
=============================

A first-improvement descent over both neighbourhoods.  Entering edges whose
contribution is too large are skipped without looking at their cycle; the
counters show how much work that saves.
"""

from qmstp import generate_family, make_rng
from qmstp.descent import descent
from qmstp.tree import build_contributions, random_spanning_tree

inst = generate_family("ss", 60, seed=1)
tree = random_spanning_tree(inst, make_rng(7, "solver"))
d = build_contributions(inst, tree)
start = tree.objective

stats = descent(inst, tree, d, make_rng(7, "solver"))
print(f"objective {start} -> {tree.objective}")
print(f"{stats.edge_moves} swap-edge and {stats.vertex_moves} swap-vertex moves")
print(f"{stats.discarded_edges} of {stats.n1_candidate_edges} entering edges discarded "
      f"({stats.discard_ratio:.1%})")

# The same search with discarding disabled ends in a local optimum too,
# but evaluates every candidate.
tree = random_spanning_tree(inst, make_rng(7, "solver"))
d = build_contributions(inst, tree)
slow = descent(inst, tree, d, make_rng(7, "solver"), fast_examination=False)
print("without discarding:", tree.objective, "discarded", slow.discarded_edges)
