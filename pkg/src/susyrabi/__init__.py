"""Generalized Rabi model: supersymmetry, zero modes and dressed-state Lindblad dynamics."""

__version__ = "0.1.0"

from .dynamics import (
    CoherentUp,
    FockUp,
    LatticeSpec,
    QuenchResult,
    Spectrum,
    degeneracy_gap,
    eigen_spectrum,
    gr_spectrum,
    lattice_levels,
    quench_evolution,
    sweep_coupling,
    sweep_hopping,
    sweep_parameter,
)
from .lindblad import (
    ConservedQuantitySet,
    DensityMatrix,
    LindbladRates,
    build_dressed_dissipator,
    build_dressed_system,
    build_liouvillian,
    conserved_quantities_direct,
    conserved_quantities_recurrence,
    decay_rate_fit,
    decompose_liouvillian,
    evolve_density_matrix,
    stationary_from_conserved,
)
from .model import (
    GrParams,
    LambdaSchemeParams,
    RdParams,
    build_gr_hamiltonian,
    lambda_scheme_to_gr,
    parity_operator,
    rd_to_gr,
    susy_residual,
)
from .operators import OperatorMatrix, Truncation
from .susy import (
    build_supercharge,
    kernel_dimensions,
    verify_susy_algebra,
    witten_index,
    zero_modes_displacement,
    zero_modes_recurrence,
)
