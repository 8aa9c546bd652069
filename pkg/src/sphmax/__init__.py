"""Numerical laboratory for spherical means of complex order.

The package walks one chain: Bessel asymptotics -> the radial multiplier of
the generalized spherical mean -> its two-phase wave decomposition on
periodic grids -> extremal inputs (blow-up profiles, wave packets) -> slope
fits that reproduce sharp Lp exponent thresholds at desk scale.
"""

from .analysis import (DecayCheck, ExponentRegion, RegionCurve, SlopeFit,
                       conjugate_exponent, crossover_p, decay_check, fit_slope,
                       oscillatory_tail, region_compare, sobolev_threshold_s,
                       threshold_regions, two_phase_fit)
from .bessel import (ComplexOrder, ExpansionCoefficients,
                     asymptotic_coefficients, bessel_asymptotic, bessel_j,
                     bessel_quadrature)
from .extremals import (BlowupReport, CollarChoice, ConeCutoff, PacketReport,
                        PacketSpec, blowup_probe, choose_blowup_exponent,
                        packet_envelope, packet_lower_bound, packet_time_slice,
                        radial_extremal, sphere_cap_ft, stable_collar_slope,
                        wave_packet)
from .fields import (Grid, SampledField, apply_radial_multiplier,
                     ball_average_direct, hl_maximal, load_field, lp_norm,
                     radial_frequency_mesh, save_field, sobolev_norm,
                     to_frequency, to_space, write_slice_csv)
from .multiplier import (CutoffFamily, MChoice, RadialSymbol, choose_M,
                         decomposition_residual, m_hat, main_symbols)
from .operators import (FtcReport, TimeGrid, ftc_maximal_check, half_wave,
                        low_piece, lp_piece, script_a, spherical_mean,
                        square_function, sup_over_t, wave_piece)

__version__ = "0.1.0"
