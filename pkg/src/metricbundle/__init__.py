"""Numerical toolkit for metric bundles on chart-based surfaces.

Realizes pointwise metric fibers, sections, and multi-norm families; the
Levi-Civita connection by two mutually certifying routes; geodesic distances
per family member; and the characteristic-number integrals (Gauss-Bonnet,
bundle degrees, ch*Td and ch*Ahat indices, additivity under direct sums)
with their rank/degree Grothendieck bookkeeping.  Every identity the theory
asserts at this scale is checked against an independent analytic oracle in
the test suite.
"""

__version__ = "0.1.0"

from .charts import (
    Chart,
    ChartError,
    GridSpec,
    TangentVector,
    chart_from_label,
    embedding_jacobian,
    flat_chart,
    induced_metric,
    quadrature_grid,
    sphere_chart,
    torus_chart,
)
from .bundle import (
    InvalidSectionError,
    MetricFiber,
    MetricSection,
    MultiMetricFamily,
    NormAxiomReport,
    SpdReport,
    SubbundlePredicate,
    builtin_section,
    conformal_flat_section,
    conformal_predicate,
    conformal_section,
    diagonal_predicate,
    flat_section,
    metric_norm,
    multi_norm,
    norm_axiom_check,
    norm_equivalence_constants,
    scaled_section,
    section_evaluate,
    smoothness_spotcheck,
    sphere_section,
    subbundle_contains,
    torus_section,
    validate_spd,
)
from .connection import (
    BundleConnection,
    ChristoffelField,
    Curvature2Form,
    RiemannTensor,
    SingularMetricError,
    bundle_curvature,
    christoffel_field,
    christoffel_koszul,
    christoffel_standard,
    curvature_form,
    gauge_shifted,
    gaussian_curvature,
    metric_compatibility_defect,
    monopole_connection,
    riemann_tensor,
    torsion_defect,
    trivial_connection,
)
from .geodesic import (
    DistanceResult,
    DomainExitError,
    GeodesicPath,
    GeodesicState,
    ProbeReport,
    SolverConfig,
    exponential_map,
    geodesic_distance,
    hopf_rinow_probe,
    integrate_geodesic,
    multi_distance,
    sphere_oracle_distance,
)
from .chern import (
    BundleClass,
    ChAdditivityReport,
    EvenFormValue,
    IndexAdditivityReport,
    IndexReport,
    K0Element,
    ahat_point,
    ch_additivity_check,
    chern_character_point,
    first_chern_number,
    gauss_bonnet,
    index_additivity_check,
    index_ch_ahat,
    index_ch_td,
    integrate_even_form,
    k0_class,
    k0_combine,
    k0_element,
    todd_point,
    whitney_sum,
)
