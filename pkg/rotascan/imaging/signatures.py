"""
Rotascan - Synthetic Signatures
Smooth stand-in reflectance curves for the four textile classes and the plane
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from rotascan.models.scene import SpectralSignature

DEFAULT_BAND_COUNT = 96
DEFAULT_WAVELENGTH_RANGE = (400.0, 1000.0)

# class name -> list of (centre as fraction of the range, width fraction, amplitude)
TEXTILE_BUMPS: Dict[str, List[Tuple[float, float, float]]] = {
    "linen": [(0.25, 0.08, 0.45)],
    "silk": [(0.50, 0.08, 0.45)],
    "wool": [(0.75, 0.08, 0.45)],
    "acetate": [(0.35, 0.06, 0.30), (0.85, 0.06, 0.30)],
}
TEXTILE_BASE = 0.15
BACKGROUND_LEVEL = 0.5


def default_band_centers(n_bands: int = DEFAULT_BAND_COUNT,
                         wavelength_range: Tuple[float, float] = DEFAULT_WAVELENGTH_RANGE) -> np.ndarray:
    return np.linspace(wavelength_range[0], wavelength_range[1], n_bands)


def gaussian_mixture_signature(class_name: str, band_centers: np.ndarray,
                               bumps: Sequence[Tuple[float, float, float]],
                               base: float = TEXTILE_BASE) -> SpectralSignature:
    lo, hi = float(band_centers[0]), float(band_centers[-1])
    t = (band_centers - lo) / (hi - lo)
    reflectance = np.full_like(t, base)
    for centre, width, amplitude in bumps:
        reflectance += amplitude * np.exp(-0.5 * ((t - centre) / width) ** 2)
    return SpectralSignature(class_name, np.clip(reflectance, 0.0, 1.0), band_centers)


def default_signatures(band_centers: Optional[np.ndarray] = None) -> List[SpectralSignature]:
    """linen, silk, wool, acetate in that order"""
    if band_centers is None:
        band_centers = default_band_centers()
    return [gaussian_mixture_signature(name, band_centers, bumps) for name, bumps in TEXTILE_BUMPS.items()]


def background_signature(band_centers: Optional[np.ndarray] = None,
                         level: float = BACKGROUND_LEVEL) -> SpectralSignature:
    """Spectrally flat grey plane"""
    if band_centers is None:
        band_centers = default_band_centers()
    return SpectralSignature("background", np.full(len(band_centers), level), band_centers)
