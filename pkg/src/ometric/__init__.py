"""Computational toolkit for O-metric spaces."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .contraction import (
    PhiFunction,
    PsiFunction,
    TreeFamily,
    cphi_probe,
    estimate_cphi_sup,
    is_contractive_prefix,
    make_phi,
    mixed_tree,
    psi_tail,
    verify_phi_conditions,
)
from .errors import (
    AdmissibilityError,
    ConfigError,
    ConstructionError,
    DomainError,
    NotMetrizableError,
    OMetricError,
    OrientationError,
    ParameterError,
    PatternError,
    ProblemError,
    RangeError,
    TreeDomainError,
)
from .patterns import (
    AISO,
    FIFO,
    LIFO,
    POW2,
    CompositionTree,
    IntegerPattern,
    Leaf,
    Node,
    affine_coefficients,
    catalan,
    enumerate_trees,
    evaluate_all,
    evaluate_tree,
    parse_tree,
    tree_from_pattern,
)
from .series import (
    BinarySplit,
    OmegaSeries,
    binary_split,
    bmetric_polygon_coeffs,
    coefficient_check,
    fifo_closed_form,
    lifo_closed_form,
    partial_composition,
    polygon_check,
    pow2_bound,
    pow2_exact,
    probe_composable,
)
from .solver import (
    FixedPointProblem,
    IterationReport,
    alpha_psi_solve,
    picard,
    uniqueness_probe,
    verify_contraction,
)
from .spaces import (
    Flag,
    Interval,
    OMetricSpace,
    OmegaOp,
    Orientation,
    load_space_config,
    make_builtin,
    metrize,
    parse_omega,
    upwardize,
    verify_axioms,
)
from .tolerance import Tolerance
from .topology import (
    ConvergenceVerdict,
    SequenceSpec,
    check_uniqueness_conditions,
    in_ball,
    is_cauchy,
    o_converges,
)
