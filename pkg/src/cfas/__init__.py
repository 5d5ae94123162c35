"""High-SNR probabilities of continuous fluid antennas in Ricean fading.

Closed-form expected-Euler-characteristic approximations for 0-3D antenna
regions, a 1D level-crossing cross-check, a correlated-field Monte Carlo
simulator and the Rayleigh-equivalent-size study.
"""

__version__ = "0.1.0"

from .errors import BracketError, CapExceededError, ConvergenceError, DomainError
from .model import ChannelParams, CorrelationModel, Geometry, ThresholdSpec, JAKES
from .specfun import bessel_i, bessel_ie, erfi, gauss_legendre, marcum_q1
from .ecdensity import curvatures, ec_density_closed, ec_density_series, eec
from .hsp import hsp_closed, hsp_sweep, normalize_threshold, denormalize_threshold
from .lcr import discrepancy_map, hsp_lcr_1d, lcr_rate
from .equiv import calibrate_threshold, solve_equivalent_side, table3
from .chansim import GridSpec, count_upcrossings, estimate_hsp, sample_field

__all__ = [
    "BracketError",
    "CapExceededError",
    "ConvergenceError",
    "DomainError",
    "ChannelParams",
    "CorrelationModel",
    "Geometry",
    "ThresholdSpec",
    "JAKES",
    "bessel_i",
    "bessel_ie",
    "erfi",
    "gauss_legendre",
    "marcum_q1",
    "curvatures",
    "ec_density_closed",
    "ec_density_series",
    "eec",
    "hsp_closed",
    "hsp_sweep",
    "normalize_threshold",
    "denormalize_threshold",
    "discrepancy_map",
    "hsp_lcr_1d",
    "lcr_rate",
    "calibrate_threshold",
    "solve_equivalent_side",
    "table3",
    "GridSpec",
    "count_upcrossings",
    "estimate_hsp",
    "sample_field",
]
