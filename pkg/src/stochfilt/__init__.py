"""Stochastic texture filtering: single-tap Monte Carlo texture filters, the
deterministic filters they estimate, a filtering-order shading lab, and a
DCT block-compressed texture backend."""

from .dct_tex import (BASIS, ZIGZAG6, DctBlockTexture, compress_dct,
                      decode_full, decode_texel, filter_over_dct, load_dct,
                      reconstruction_bound, save_dct)
from .det_filters import (EWA_LUT, EWA_LUT_SIZE, FILTER_NAMES_2D,
                          FILTER_NAMES_3D, FilterConfig, blend_weighted,
                          compute_aniso_lod, det_filter_value, ewa_coefficients,
                          ewa_taps, filter_bicubic_bspline, filter_bicubic_keys,
                          filter_bilinear, filter_ewa, filter_gaussian_window,
                          filter_taps, filter_tricubic_bspline,
                          filter_trilinear, filter_trilinear_mip,
                          separable_filter)
from .fixtures import (binary_checker, checker_ramp_image, puff_volume,
                       random_texture)
from .kernels import (BOX, CUBIC_BSPLINE, KEYS_CUBIC, TENT, KernelFamily,
                      KernelSpec, default_taps, kernel_eval, kernel_window,
                      window_offsets)
from .rng import RngStream, uniform_grid
from .shading import (Exp, Identity, MetalnessMix, PlanckLike, Power,
                      Threshold, order_divergence_report, parse_map,
                      shade_filter_after_ref, shade_filter_after_stoch,
                      shade_filter_before, write_report_csv)
from .stoch import (DiscreteSampleResult, KeysCubicSample, PositivizedSample,
                    Tap, TapEstimate, fis_bspline,
                    fis_gaussian, keys_estimate, positivized_sample,
                    reservoir_sample, sample_discrete, sample_reuse,
                    stoch_bicubic_bspline, stoch_bicubic_keys, stoch_bilinear,
                    stoch_blend, stoch_ewa_sample, stoch_ewa_value,
                    stoch_filter_values, stoch_gaussian_window, stoch_lerp,
                    stoch_mip_level, stoch_tricubic_bspline, stoch_trilinear,
                    tap_estimate, uniform_shape)
from .texio import (TextureFormatError, load_image, load_volume, store_image,
                    store_volume)
from .texture import (AddressMode, ColorSpace, FetchCounter, MipPyramid,
                      TextureGrid, build_mip_pyramid, linear_to_srgb,
                      srgb_to_linear)

__version__ = "0.1.0"
