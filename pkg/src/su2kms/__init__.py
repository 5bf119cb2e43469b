"""Numerical checks of the fine-grained KMS relation in SU(2)-symmetric spin chains."""

from .chain import (
    ModelConfig,
    OperatorBlock,
    SpinSector,
    build_all_sectors,
    build_hamiltonian,
    build_s2,
    build_s_minus,
    build_s_plus,
    build_sector,
    build_sz,
)
from .correlators import (
    FineGrainedCorrelator,
    LogRatioCurve,
    PeakList,
    ThermoParams,
    beta_eff,
    beta_gamma_eff,
    bin_peaks,
    delta_beta,
    delta_beta_gamma,
    eigen_peaks,
    ensemble_log_ratio,
    ensemble_log_ratios,
    log_ratio,
    nats_kms_max_error,
    nats_peaks,
    static_correlator,
    transport_log_ratio,
)
from .halfint import HalfInt
from .spectral import (
    DegeneracyPolicy,
    EigenRecord,
    EigenSystem,
    diagonalize,
    eigenstate_window,
    eigenstate_window_selected,
    laddered_systems,
    load_cache,
    save_cache,
    select_eigenstate,
    thermal_energy,
)
from .su2 import CgKey, cg, cg_asymptotic, cg_product, m1_ratio, m2_ratio, m3_shift
from .tensors import (
    ReducedElementTable,
    SphericalTensor,
    build_t00,
    build_t10_site,
    build_t20,
    build_t44,
    lower,
    raise_,
    reduced_elements,
)
from .thermo import (
    ScalingPoint,
    SectorMultiplicity,
    beta_gamma_fd,
    brillouin,
    g_function,
    g_function_prime,
    histogram_entropy,
    massieu_entropy,
    mean_spin_exact,
    multiplet_spectrum,
    multiplicities,
    nats_partition,
    scaling_s,
    scaling_z,
)

__version__ = "0.1.0"
