"""Helium two-electron structure with B-spline orbitals and configuration interaction.

Orbitals, Slater integrals, bound and Q-projected CI spectra, pair densities,
Shannon/Fisher measures and one-electron entanglement of the CI states.
"""

from .angular import clebsch_gordan, reduced_c_tensor, wigner_3j, wigner_6j
from .bsplines import (
    BSplineBasis,
    KnotSequence,
    eval_spline_derivatives,
    eval_splines,
    make_exponential_knots,
    make_exponential_linear_knots,
    make_linear_knots,
)
from .ci import (
    CIState,
    Configuration,
    ConfigurationBasis,
    assemble_and_diagonalize,
    build_config_basis,
    coulomb_element,
    default_pairs,
    feshbach_spectrum,
    q_project,
)
from .density import (
    diagonal_symmetry_diagnostic,
    one_particle_density,
    pair_density,
    pair_density_norm,
    scaled_origin_density,
)
from .entanglement import (
    ReducedDensityMatrix,
    linear_entropy,
    reduced_density_matrix,
    slater_rank,
    von_neumann_entropy,
)
from .hydrogenic import OrbitalSet, RadialOrbital, analytic_hydrogen_energy, solve_orbitals
from .information import fisher_information, hydrogen_density, shannon_entropy, state_density
from .pipeline import RunConfig, attach_labels, double_delta_transmission, load_config, run_pipeline
from .slater import SlaterIntegralCache, slater_Rk

__version__ = "0.1.0"
