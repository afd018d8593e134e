"""Spectral simulation of toy Navier-Stokes systems whose Fourier coefficients stay nonnegative."""

from .analysis import (
    DiagnosticsRecord,
    besov_norm,
    energy_flux,
    heat_besov_minus1,
    lp_block,
    ns_energy_flux,
    record,
)
from .certificate import (
    BlowUpCertificate,
    DominationReport,
    Insufficient,
    besov_lower_bound,
    certify,
    conv_power,
    envelope,
    seed_from_data,
    threshold_amplitude,
    tk_schedule,
    verify_domination,
)
from .initdata import (
    AdmissibilityError,
    BumpSpec,
    CGSpec,
    ProfileSpec,
    cg_data,
    ms_bump,
    validate_admissibility,
    vorticity_bump,
)
from .models import (
    ModelKind,
    ModelSpec,
    Scheme,
    SimulationResult,
    StepperConfig,
    Termination,
    rhs_ns,
    rhs_tns,
    rhs_vorticity_toy,
    simulate,
    step,
)
from .multipliers import (
    MultiplierMatrix,
    cone_indicator,
    dissipation_symbol,
    leray_symbol,
    toy_matrix,
    verify_positivity,
)
from .spectral import (
    FrequencyLattice,
    SpectralScalarField,
    SpectralVectorField,
    convolve,
    make_lattice,
    read_checkpoint,
    to_physical,
    to_spectral,
    write_checkpoint,
)

__version__ = "0.1.0"
