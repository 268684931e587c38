"""Band-edge resonances of truncated periodic discrete Schrodinger operators."""

from .potential import PeriodicPotential
from .floquet import (
    BandStructure,
    EdgeClassification,
    EdgeData,
    Matrix2,
    band_structure,
    classify_edge,
    density_of_states,
    discriminant,
    discriminant_coeffs,
    h_j,
    h_values,
    monodromy,
    product_matrix,
    quasi_momentum,
    transfer_matrix,
)
from .spectrum import (
    SpectralData,
    TridiagonalOperator,
    WeightProfile,
    assemble,
    band_enumerate,
    eigensystem,
    quantization_residuals,
    weight_profile,
)
from .resonance import (
    Resonance,
    ResonanceBox,
    alpha_and_seed,
    count_in_box,
    f_and_fprime,
    free_region_check,
    im_s_grid_max,
    locate_resonance,
    newton_refine,
    no_root_certificate,
    s_l,
    s_l_dd,
    sweep_band_edge,
    theta,
    theta_prime,
    winding_count,
    winding_number,
)
from .analysis import (
    PowerLawFit,
    ScalingReport,
    SeedAccuracy,
    fit_power_law,
    l_scaling,
    scaling_report,
    seed_accuracy,
)

__version__ = "0.1.0"

