"""Spherical random polytopes on a right-angled wedge: sampling, exact facet
counts, closed-form constants, and numerical cross-checks."""

from .errors import (
    ChartSingular,
    DegenerateInput,
    DomainError,
    FitError,
    HalfSphereViolation,
    InequalityViolation,
    InternalError,
    QuadratureError,
    ResourceLimit,
    SamplerStalled,
    WedgehullError,
)
from .formulas import (
    AppendixReport,
    EstimatorReport,
    InequalityCheck,
    ModelConstants,
    appendix_f,
    estimate_A_d,
    girard_area,
    i2_bounds,
    i2_closed,
    i2_complement,
    model_constants,
    omega,
    parallelotope_volume,
    verify_appendix_inequalities,
    wedge_measure,
)
from .geometry import (
    WedgeCoords,
    WedgeModel,
    angles_from_normal,
    gnomonic_inverse,
    gnomonic_project,
    napier_jacobian,
    napier_reflect,
    normal_from_angles,
    opening_angle,
    orthonormal_complement,
    sphere_surface_measure,
    wedge_contains,
    wedge_param,
    wedge_param_inverse,
)
from .experiments import (
    ExperimentConfig,
    RunRecord,
    SlopeFit,
    config_hash,
    fit_slope,
    run_binomial,
    run_conjecture_probe,
    run_experiment,
    run_halfsphere,
    run_poisson,
    run_polygon_baseline,
    summarize,
)
from .hull import FacetSet, facets_ambient, facets_projected
from .oracles import (
    LimitLemmaReport,
    mc_binomial_limit_lemma,
    mc_cap_measure,
    mc_I1,
    mc_wedge_measure,
    quadrature_I1_dim2,
)
from .sampling import (
    SampleCloud,
    SeedSpec,
    derive_stream,
    sample_beta_prime,
    sample_poisson_wedge,
    sample_uniform_sphere,
    sample_uniform_wedge,
)

__version__ = "1.0.0"
