"""Deformation stability toolkit for sampled signals on the torus."""

from .signals import (Grid, SampledSignal, Spectrum, convolve, circular_shift,
                      inner, l2_norm, make_sinc_packet, make_tent,
                      random_signal, signal_from_csv, signal_to_csv, spectrum,
                      signal_from_spectrum)
from .amalgam import (AmalgamParams, amalgam_norm, amalgam_norm_discrete,
                      check_convolution_dilation, check_embedding_const,
                      check_rescaling, dilate, window_sup)
from .mra import (MraCoefficients, MraFilter, MraSpace, besov_norm,
                  box_filter, bspline_filter, detail_projection, dyadic_space,
                  eval_at, filter_by_name, gradient, gradient_at,
                  h_alpha_tensor_norm, periodization, project,
                  reverse_holder_check, riesz_bounds, shannon_filter,
                  synthesize, verify_assumption_b, verify_assumption_c)
from .deform import (DeformationField, RandomFieldSpec, deform,
                     draw_random_field, field_from_csv, field_to_csv,
                     gradient_sensitivity_check, maximal_characterization_check,
                     spec_from_json, spec_to_json, tau_alternating,
                     tau_constant, tau_radial_identity)
from .scattering import (FeatureVector, FilterBank, LayerModule,
                         ScatteringNetwork, check_translation_covariance,
                         estimate_lipschitz, extract_features,
                         feature_distance, features_to_csv,
                         network_from_config, propagate, root_feature_limit,
                         shannon_bank)
from .bounds import (BesovInconclusiveError, BoundReport, RegimeRow,
                     check_dimensional_consistency, loglog_slope,
                     report_rows_to_csv, sharpness_large_regime,
                     sharpness_small_regime, two_regime_envelope,
                     uniform_min_moment, verify_besov, verify_modulated,
                     verify_random_mean, verify_sensitivity)
from .experiments import (RegressionFit, ScaleEstimate, SweepResult,
                          amplitude_grid, build_network, inflection_scale,
                          leave_one_out_spread, plot_sweep, scale_estimate,
                          scale_estimate_from_sweep, stability_sweep,
                          sweep_to_csv, tent_profile_coefficients,
                          theoretical_envelope, wls_cubic_fit)

__version__ = "0.1.0"
