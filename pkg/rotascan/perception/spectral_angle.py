"""
Rotascan - Spectral Angle
Angle between spectra seen as vectors: the background segmenter kernel and a
nearest-signature matcher used as a reference classifier
"""

from typing import Sequence, Tuple

import numpy as np
from spectral import spectral_angles

from rotascan.errors import SpectralModelError
from rotascan.models.scene import SpectralSignature


def angles_to(data: np.ndarray, references: np.ndarray) -> np.ndarray:
    """
    Spectral angles (radians) of every spectrum in data (..., N) to each reference (C x N).
    Returns shape (..., C); zero-norm spectra get angle pi/2.
    """
    data = np.asarray(data, dtype=np.float64)
    references = np.atleast_2d(np.asarray(references, dtype=np.float64))
    if data.shape[-1] != references.shape[1]:
        raise SpectralModelError(f"spectra have {data.shape[-1]} bands, references {references.shape[1]}")
    lead = data.shape[:-1]
    flat = data.reshape(-1, 1, data.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        angles = spectral_angles(flat, references)
    angles = np.nan_to_num(angles, nan=np.pi / 2)
    return angles.reshape(lead + (references.shape[0],))


def spectral_angle_map(data: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Angle of every spectrum in data (..., N) to a single reference spectrum"""
    return angles_to(data, np.asarray(reference)[None, :])[..., 0]


class SpectralAngleMatcher:
    """Nearest-signature classifier by minimum spectral angle"""

    def __init__(self, signatures: Sequence[SpectralSignature], class_ids: Sequence[int]):
        if len(signatures) != len(class_ids) or not signatures:
            raise SpectralModelError("matcher needs one class id per signature")
        self.references = np.vstack([sig.reflectance for sig in signatures])
        self.class_ids = np.asarray(class_ids, dtype=np.int64)

    @classmethod
    def from_spectra(cls, spectra: np.ndarray, labels: np.ndarray) -> "SpectralAngleMatcher":
        """Matcher whose references are the per-class mean of labelled training spectra"""
        labels = np.asarray(labels)
        ids = np.unique(labels)
        matcher = cls.__new__(cls)
        matcher.references = np.vstack([np.asarray(spectra)[labels == i].mean(axis=0) for i in ids])
        matcher.class_ids = ids.astype(np.int64)
        return matcher

    def predict(self, spectra: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(class id, angle to that class) per spectrum"""
        angles = angles_to(spectra, self.references)
        best = angles.argmin(axis=-1)
        return self.class_ids[best], np.take_along_axis(angles, best[..., None], axis=-1)[..., 0]
