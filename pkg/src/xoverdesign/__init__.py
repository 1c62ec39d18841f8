"""Optimal approximate and efficient exact cross-over designs for total
effects under the treatment-by-carry-over interaction model."""

from .model import (
    ApproximateDesign,
    DesignError,
    ExactDesign,
    info_phi,
    info_xi_design,
    info_xi_sequence,
    phi_matrix,
)
from .symmetry import (
    CoefficientTable,
    automorphism_group,
    canonicalize,
    check_strong_balance,
    class_count,
    coefficients,
    enumerate_classes,
    orbit_of,
    symmetric_design,
    symmetric_design_from_class,
    symmetrize,
)
from .optimizer import (
    CertificationError,
    Certificate,
    MaximinSolution,
    OptimizationError,
    certify,
    single_class_efficiency,
    solve,
)
from .constructions import build_reduced_design, gf_triplets, oa_triplets
from .evaluation import EfficiencyReport, compare_period_models, evaluate, is_completely_symmetric

__version__ = "0.1.0"
