"""
Instances, trees and O(1) move gains
====================================

Build a small instance, draw a random spanning tree, and watch the
contribution vector price swap moves without recomputing the objective.
"""

import numpy as np

from qmstp import generate_family, make_rng
from qmstp.tree import (
    apply_swap_edge,
    build_contributions,
    cycle_path,
    gain_swap_edge,
    objective,
    random_spanning_tree,
)

# A complete graph on 12 vertices with uniform costs.
inst = generate_family("ss", 12, seed=3)
print(inst.summary())

tree = random_spanning_tree(inst, make_rng(0, "solver"))
d = build_contributions(inst, tree)
print("start objective:", tree.objective)

# Pick an edge outside the tree; the tree path between its endpoints lists
# every edge that could leave to make room for it.
e = int(np.flatnonzero(~tree.in_tree)[0])
path = cycle_path(inst, tree, e)
gains = {f: gain_swap_edge(inst, d, e, f) for f in path}
print(f"inserting edge {e}: candidate gains {gains}")

# Apply the best one and confirm the cached objective against a rebuild.
f = min(gains, key=gains.get)
apply_swap_edge(inst, tree, d, e, f)
print("after swap:", tree.objective, "recomputed:", objective(inst, tree))
assert np.array_equal(d, build_contributions(inst, tree))
