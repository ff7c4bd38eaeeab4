"""Lower bounds for the first nontrivial Neumann eigenvalue of planar
domains given as quasiconformal images of the unit disc or the centered
square, validated against an independent finite-element oracle."""

from .bounds import (
    Baselines,
    EigenBoundReport,
    bounded_jacobian_eigenvalue_bound,
    competing_star_constant,
    composition_operator_norm,
    finite_beta_eigenvalue_bound,
    lebesgue_composition_norm,
    optimize_beta,
    payne_weinberger_lower_bound,
    polya_upper_bound,
)
from .domspec import DomainSpec, RunConfig, load_domain_spec, parse_domain_spec, to_toml
from .fem import (
    SpectrumEstimate,
    TriMesh,
    assemble,
    build_source_mesh,
    converged_mu1,
    load_mesh,
    neumann_eigs,
    push_mesh,
    save_mesh,
)
from .maps import (
    CardioidPower,
    Composition,
    DistortionSample,
    Identity,
    Jet,
    Moebius,
    PlanarMap,
    RadialPower,
    Source,
    UserSampled,
    distortion_global,
    distortion_pointwise,
    evaluate,
    jacobian,
    jet,
)
from .poincare import (
    PoincareConstant,
    bessel_j1prime_first_zero,
    disc_exact_l2,
    poincare_beta_form,
    poincare_disc_upper,
    square_exact_l2,
)
from .quadrature import (
    BetaProbe,
    QuadratureGrid,
    RegularityReport,
    ProbeFunction,
    boundary_samples,
    build_grid,
    check_poincare_unweighted,
    check_poincare_weighted,
    esssup_jacobian,
    grid_for_map,
    integrate,
    lbeta_jacobian_norm,
    monomials,
    regularity_scan,
)

__version__ = "0.1.0"
