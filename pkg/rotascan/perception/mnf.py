"""
Rotascan - Minimum Noise Fraction
Noise-whitened band reduction: shift-difference noise estimate plus a
generalized symmetric eigenproblem of signal against noise covariance
"""

import logging
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg

from rotascan.errors import SpectralModelError
from rotascan.models.cube import HyperspectralCube
from rotascan.models.perception import MnfModel, band_retention

logger = logging.getLogger(__name__)

CubeLike = Union[HyperspectralCube, np.ndarray]

# Relative eigenvalue floor below which the noise covariance counts as singular
_SINGULAR_RATIO = 1e-10
_RIDGE_SCALE = 1e-8


def _cube_and_mask(cube: CubeLike, mask: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(cube, HyperspectralCube):
        data = cube.data
        default_mask = cube.valid_mask
    else:
        data = np.asarray(cube)
        default_mask = np.ones(data.shape[:2], dtype=bool)
    if data.ndim != 3:
        raise SpectralModelError(f"MNF needs a rows x cols x bands cube, got shape {data.shape}")
    region = default_mask if mask is None else np.asarray(mask, dtype=bool) & default_mask
    return data.astype(np.float64), region


def estimate_noise_covariance(data: np.ndarray, region: np.ndarray) -> np.ndarray:
    """Half the covariance of horizontal neighbour differences inside the region"""
    pairs = region[:, 1:] & region[:, :-1]
    if not pairs.any():
        raise SpectralModelError("region has no horizontally adjacent pixel pairs for noise estimation")
    diffs = (data[:, 1:, :] - data[:, :-1, :])[pairs]
    return np.cov(diffs, rowvar=False, bias=True).reshape(data.shape[2], data.shape[2]) / 2.0


def _regularize(noise: np.ndarray, signal: np.ndarray) -> np.ndarray:
    n = noise.shape[0]
    eigvals = np.linalg.eigvalsh(noise)
    if eigvals.min() > _SINGULAR_RATIO * max(eigvals.max(), 0.0):
        return noise
    trace = np.trace(noise)
    if trace <= 0:
        trace = np.trace(signal)
    ridge = _RIDGE_SCALE * trace / n if trace > 0 else _RIDGE_SCALE
    logger.warning(f"⚠️ Noise covariance is singular, adding ridge {ridge:.3e}")
    return noise + ridge * np.eye(n)


def mnf_fit(cube: CubeLike, mask: Optional[np.ndarray] = None, retained_k: Optional[int] = None,
            keep_fraction: float = 0.7) -> MnfModel:
    """
    Fit an MNF model on the pixels of `mask` (valid pixels by default).
    Components come back ordered by decreasing signal-to-noise eigenvalue.
    """
    data, region = _cube_and_mask(cube, mask)
    n_bands = data.shape[2]
    pixels = data[region]
    if pixels.shape[0] < n_bands + 1:
        raise SpectralModelError(f"MNF needs at least {n_bands + 1} pixels, region has {pixels.shape[0]}")

    mean = pixels.mean(axis=0)
    signal = np.cov(pixels, rowvar=False, bias=True).reshape(n_bands, n_bands)
    noise = _regularize(estimate_noise_covariance(data, region), signal)

    eigenvalues, eigenvectors = scipy.linalg.eigh(signal, noise)
    eigenvalues = eigenvalues[::-1].copy()
    components = eigenvectors[:, ::-1].T.copy()
    # Fix the sign so repeated fits agree: largest-magnitude loading positive
    pivots = components[np.arange(n_bands), np.argmax(np.abs(components), axis=1)]
    components *= np.where(pivots < 0, -1.0, 1.0)[:, None]

    k = band_retention(n_bands, keep_fraction) if retained_k is None else int(retained_k)
    model = MnfModel(mean=mean, noise_covariance=noise, signal_covariance=signal,
                     components=components, eigenvalues=eigenvalues, retained_k=k)
    logger.info(f"📊 MNF fitted on {pixels.shape[0]} pixels: {n_bands} bands -> {k} components, "
                f"top SNR {eigenvalues[0]:.3g}")
    return model


def _spectra_of(data: CubeLike) -> np.ndarray:
    if isinstance(data, HyperspectralCube):
        return data.data.astype(np.float64)
    return np.asarray(data, dtype=np.float64)


def mnf_transform(data: CubeLike, model: MnfModel, retained_k: Optional[int] = None) -> np.ndarray:
    """Project spectra (any leading shape, last axis N) onto the top retained_k components"""
    spectra = _spectra_of(data)
    if spectra.shape[-1] != model.n_bands:
        raise SpectralModelError(f"spectra have {spectra.shape[-1]} bands, MNF model expects {model.n_bands}")
    k = model.retained_k if retained_k is None else int(retained_k)
    if not 1 <= k <= model.n_bands:
        raise SpectralModelError(f"retained_k must be in [1, {model.n_bands}], got {k}")
    return (spectra - model.mean) @ model.components[:k].T


def mnf_inverse_transform(reduced: np.ndarray, model: MnfModel) -> np.ndarray:
    """Back to band space from the leading components; exact when all N are kept"""
    reduced = np.asarray(reduced, dtype=np.float64)
    k = reduced.shape[-1]
    if not 1 <= k <= model.n_bands:
        raise SpectralModelError(f"reduced spectra have {k} components, model has {model.n_bands}")
    inverse = np.linalg.inv(model.components)
    return reduced @ inverse[:, :k].T + model.mean
