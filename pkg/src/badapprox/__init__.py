"""Numerical toolkit for badly approximable matrices.

Measures of the psi-approximable danger zones, the sharp constants eta and
theta, block schedulers, Cantor-tree dimension bounds via evaporation
rates, lattice irregularity statistics, the diagonal-flow dictionary, and
exact one-dimensional continued-fraction ground truth.
"""

from .norms import (
    Dimensions,
    MixedNorm,
    NormSpec,
    eta,
    jbbd_dimension,
    theta,
    unit_ball_volume,
    zeta,
)
from .functions import (
    ApproxFunction,
    Classification,
    DimFunction,
    F_psi,
    L_exponent,
    Verdict,
    classify,
)
from .scheduler import Schedule, build_schedule, constant_schedule
from .rowdensity import RowDensity
from .geometry import (
    Slab,
    enumerate_q_vectors,
    hit_list,
    slab_measure_exact,
    slab_measure_mc,
    thickness_check,
)
from .window import (
    WindowReport,
    local_window_measure,
    mc_window_measure,
    pair_correlation_audit,
    sum_with_multiplicity,
    window_report,
)
from .lattices import (
    Lattice,
    dual,
    epsilon_K_profile,
    epsilon_K_scan,
    irregularity,
    lattice_irregularity,
    shortest_vector,
    successive_minima,
)
from .dynamics import (
    DaniReport,
    FlowPoint,
    cylinder_lattice,
    dani_check,
    delta_fn,
    flow_point,
    make_g,
    make_u,
    r_psi_solve,
)
from .fractal import (
    CodingScheme,
    DimensionBounds,
    Tree,
    box_count,
    build_avoidance_tree,
    build_survivor_tree,
    build_tree,
    dimension_bounds,
    dump_tree,
)
from .cfrac import (
    CFExpansion,
    bad_kappa_test,
    golden_ratio,
    hensley_dim,
    kurzweil_band,
    lagrange_constant,
    moreira_threshold,
    quadratic_surd,
)
from .errors import BudgetExceededError, ValidationError

__version__ = "0.1.0"
