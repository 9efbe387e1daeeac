"""Broadband direction-of-arrival estimation with diagonal-unloading beamforming."""

from .array import ArrayGeometry, DoaGrid, steering_grid, steering_vector, tdoa
from .beamformers import (
    beam_weights,
    dl_load,
    du_gain,
    du_noise_aware_spectrum,
    du_spectrum,
    du_unload,
    music_spectrum,
    mvdr_dl_spectrum,
    srp_phat_spectrum,
    srp_spectrum,
    two_source_gains,
)
from .fusion import fuse, locate, rmse
from .linalg import EigenSystem, hermitian_eig, quadratic_form, regularized_inverse, trace
from .spectral import MultichannelSignal, bin_range, estimate_psd, stft

__version__ = "0.1.0"
