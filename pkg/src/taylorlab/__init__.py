"""taylorlab: stagewise construction and checking of universal Taylor
partial sums on products of planar simply connected domains."""

from .geometry import (
    Disk,
    DomainProduct,
    OpenDisk,
    OpenRect,
    ProductCompact,
    Rectangle,
    SlitAnnulus,
    cofinality_index,
    enumerate_Tm,
    exhaustion_M,
    sup_norm,
)
from .mergelyan import ApproxTask, FitResult, fit, glue_target
from .multiindex import DiffOp, Enumeration, IndexSet, SparseIndexError, family_Fl
from .poly import CoefficientStream, Poly, gamma, gamma_poly, partial_sum
from .universal import (
    Certificate,
    StagePlan,
    StageRequest,
    plan_from_scenario,
    plan_stages,
    run_construction,
)
from .verify import (
    PredicateSpec,
    catalog_poly,
    check_E,
    check_F,
    slice_AD_residual,
    verify_certificate,
)

__version__ = "0.1.0"
