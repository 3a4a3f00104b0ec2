"""Three-phase search (TPS) for the quadratic minimum spanning tree problem.

The objective of a spanning tree ``X`` is the sum of its linear edge costs
plus the quadratic cost of every pair of its edges.  Modules:

- :mod:`qmstp.instance`: instances, file format, benchmark generators
- :mod:`qmstp.tree`: tree state, contribution vector, move gains
- :mod:`qmstp.descent`: first-improvement descent with fast examination
- :mod:`qmstp.perturb`: directed (tabu) and diversified perturbations
- :mod:`qmstp.tps`: parameter profiles, stop criteria and the driver
- :mod:`qmstp.exact`: exhaustive enumeration for small instances
- :mod:`qmstp.harness`: replicas, reference tables, aggregation
"""

from ._rng import make_rng
from .descent import DescentStats, descent, fast_discard
from .exact import ExactResult, TreeCountExceeded, enumerate_spanning_trees, exact_optimum, kirchhoff_count
from .instance import (
    Instance,
    InstanceError,
    ParseError,
    generate_esym,
    generate_euclidean,
    generate_family,
    generate_uniform,
    generate_vsym,
    load_instance,
    save_instance,
)
from .perturb import TabuHistory, directed_perturb_edges, directed_perturb_vertices, diversified_perturb
from .tps import (
    RunResult,
    StopCriterion,
    TpsParams,
    apply_overrides,
    default_params,
    explore_local_optima,
    tps_run,
    variant_run,
)
from .tree import SpanningTree, build_contributions, objective, random_spanning_tree

__version__ = "0.1.0"
