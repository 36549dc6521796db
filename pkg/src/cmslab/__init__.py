"""cmslab: a desk-scale laboratory for contractive Markov systems.

Builds validated systems from JSON configs, simulates the place-dependent
chain, evaluates the coding map with certified truncation errors, tabulates
cylinder masses and their densities, computes divergence series with explicit
upper bounds and a multiplicative lower-bound factor, and cross-checks the
lower bound against branch-and-bound upper bounds on the shifted-cover outer
measure.
"""

from .bounds import (
    BoundReport,
    GeneralMethodDiagnostic,
    corollary_lower_bound,
    evaluate_bounds,
    general_method_diagnostic,
    kl_n,
    kstar_estimate,
)
from .coding import (
    CodingResult,
    PastWord,
    backward_orbit,
    coding_point,
    f_sum,
    format_word,
    parse_word,
)
from .cover import (
    ConsistencyResult,
    CoverCandidate,
    certificate_dict,
    consistency_check,
    phi_upper,
    verify_certificate_data,
    verify_cover,
)
from .cylinders import (
    EXACT,
    CylinderSet,
    CylinderTable,
    build_table,
    chain_cyl_prob,
    count_words,
    cylinder_set,
    enumerate_words,
    full_cylinder_set,
    m_cyl,
    m_of_cylinder_set,
    phi0_cyl,
    stationary_vertex_distribution,
)
from .errors import (
    AbsoluteContinuityViolation,
    CertificateInvalid,
    CMSError,
    ConfigError,
    DepthOverflow,
    DiniDivergence,
    EmptySupport,
    ExactModeUnavailable,
    InadmissibleWord,
    NoContraction,
    NonPositiveProbability,
    NormalizationError,
    NotUniformlyContractive,
    RegionEscape,
    ValidationError,
)
from .model import (
    AffineMap,
    ConstantSet,
    DirectedEdge,
    MarkovSystem,
    ProbabilityFunction,
    VertexSpace,
    collect_violations,
    derive_constants,
    estimate_c_hat,
    modulus_geometric_sum,
    spectral_norm,
    system_from_config,
    system_to_config,
    validate_system,
)
from .simulate import (
    ContractionRow,
    EmpiricalMeasure,
    TrajectoryRecord,
    check_average_contraction,
    estimate_invariant,
    step,
    substream,
    trajectory,
)

__version__ = "0.1.0"
