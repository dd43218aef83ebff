"""Pressure, large deviations and mean-field Gibbs mixtures on full shifts."""

from .shift import (
    Affine,
    Product,
    ShiftConfig,
    SPINS,
    Tabulated,
    birkhoff_sum,
    ergodic_max,
    evaluate,
    negate,
    sup_norm,
    tabulated_from_dict,
    to_tabulated,
)
from .transfer import (
    DegeneratePotentialError,
    EquilibriumDescriptor,
    NonConvergenceError,
    combine,
    cylinder_marginals,
    entropy,
    equilibrium,
    expectation,
    perron,
    pressure,
    pressure_curve,
    pressure_scan,
    pressure_second_derivative,
)
from .legendre import (
    GridFunction,
    RateFunction,
    empirical_ld,
    legendre_transform,
    rate_function,
    tilted_rate,
    varadhan_value,
    zero_set,
)
from .bogoliubov import (
    ConcaveGrid,
    ConvexGrid,
    QuadraticConcave,
    QuadraticConvex,
    SolveReport,
    approximating_pressure,
    cross_check_varadhan,
    equilibrium_for_optimizer,
    nonlinear_pressure_concave,
    nonlinear_pressure_convex,
    solve_self_consistency,
)
from .models import (
    GoModel,
    ProductModel,
    go_potential,
    go_pressure,
    product_pressure,
    product_rate,
)
from .meanfield import (
    EnumerationEstimate,
    MixtureResult,
    cylinder_indicator,
    delta_functional,
    enumerate_M_n,
    enumerate_m_n,
    free_energy_functionals,
    hubbard_stratonovich_check,
    laplace_mixture,
    mixture_cylinder_mass,
)
from .kernels import backend_name, thread_count

__version__ = "0.1.0"
