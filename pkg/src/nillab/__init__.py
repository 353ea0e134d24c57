"""nillab: a desk-scale numerical laboratory for nilmanifold dynamics.

Exact Heisenberg/torus group arithmetic, uniformity seminorm estimators,
self-joinings as empirical measures, and rigidity experiments, backed by a
compiled kernel core with a pure-numpy fallback.
"""

__version__ = "0.1.0"

from .errors import BudgetError, CertificationError, SpaceMismatchError
from .nilgroup import (MetricConfig, dist, dist_pairs, haar_sample, heis_inv,
                       heis_mul, reduce_heis, reduce_torus)
from .systems import (ALPHA, BETA, GAMMA, SHEAR_BASE, NilSystem, Observable,
                      birkhoff_avg, heis_character, heisenberg_system, nilrotate,
                      orbit, project_torus_factor, torus_character, torus_system,
                      vertical_average, vertical_rotate)
from .seminorms import SeminormEstimate, u1, uk_cube, uk_recursive
from .joinings import (ClassifyConfig, EmpiricalMeasure, JoiningReport,
                       TestFunctionFamily, analyze_joining, counterexample_joining,
                       diagonal_joining, dist_to_diagonal, graph_joining, graphness,
                       marginal_error, vertical_map, weakstar_dist)
from .rigidity import (RigidityReport, SubnilDescriptor, default_catalog,
                       min_subnil_diameter, rigidity_sweep, subnil_diameter)

__all__ = [
    "__version__", "BudgetError", "CertificationError", "SpaceMismatchError",
    "MetricConfig", "dist", "dist_pairs", "haar_sample", "heis_inv", "heis_mul",
    "reduce_heis", "reduce_torus", "ALPHA", "BETA", "GAMMA", "SHEAR_BASE",
    "NilSystem", "Observable", "birkhoff_avg", "heis_character",
    "heisenberg_system", "nilrotate", "orbit", "project_torus_factor",
    "torus_character", "torus_system", "vertical_average", "vertical_rotate",
    "SeminormEstimate", "u1", "uk_cube", "uk_recursive", "ClassifyConfig",
    "EmpiricalMeasure", "JoiningReport", "TestFunctionFamily", "analyze_joining",
    "counterexample_joining", "diagonal_joining", "dist_to_diagonal",
    "graph_joining", "graphness", "marginal_error", "vertical_map",
    "weakstar_dist", "RigidityReport", "SubnilDescriptor", "default_catalog",
    "min_subnil_diameter", "rigidity_sweep", "subnil_diameter",
]
