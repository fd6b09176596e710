"""
Rotascan - Cube Models
Hyperspectral cubes (raw and distortion-corrected) and the inverse-warp correction map
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from rotascan.errors import CorrectionError, ReconstructionError
from rotascan.models.geometry import GeometryContext

# Value written to corrected pixels outside the scanned footprint
SENTINEL_VALUE = -1.0


@dataclass(eq=False)
class HyperspectralCube:
    """
    HYPERSPECTRAL CUBE
    - data is rows x cols x bands, float32 reflectance
    - uncorrected cubes are rows_H x cols_W in motor-angle rows
    - corrected cubes sit on a uniform metric grid of `pitch` mm with a validity mask
    """

    data: np.ndarray
    geom: GeometryContext
    band_centers: np.ndarray
    corrected: bool = False
    interpolated_rows: Optional[np.ndarray] = None
    valid_mask: Optional[np.ndarray] = None
    pitch: Optional[float] = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        self.band_centers = np.asarray(self.band_centers, dtype=float)
        if self.data.ndim != 3:
            raise ReconstructionError(f"cube data must be rows x cols x bands, got shape {self.data.shape}")
        if self.data.shape[2] != self.band_centers.size:
            raise ReconstructionError(
                f"cube has {self.data.shape[2]} bands but {self.band_centers.size} band centres"
            )
        if not self.corrected and self.data.shape[:2] != (self.geom.rows_H, self.geom.cols_W):
            raise ReconstructionError(
                f"uncorrected cube must be {self.geom.rows_H}x{self.geom.cols_W}, got {self.data.shape[:2]}"
            )
        if self.interpolated_rows is None:
            self.interpolated_rows = np.zeros(self.data.shape[0], dtype=bool)
        if self.valid_mask is None:
            self.valid_mask = np.ones(self.data.shape[:2], dtype=bool)
        if self.valid_mask.shape != self.data.shape[:2]:
            raise CorrectionError(f"validity mask shape {self.valid_mask.shape} != cube {self.data.shape[:2]}")

    @property
    def shape(self) -> Tuple[int, int, int]:
        rows, cols, bands = self.data.shape
        return int(rows), int(cols), int(bands)

    @property
    def spatial_shape(self) -> Tuple[int, int]:
        return self.shape[0], self.shape[1]

    @property
    def n_bands(self) -> int:
        return self.shape[2]

    def spectra(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """Pixel spectra (M x N) inside mask, in row-major order; all valid pixels by default"""
        if mask is None:
            mask = self.valid_mask
        return self.data[np.asarray(mask, dtype=bool)]


@dataclass(eq=False)
class CorrectionMap:
    """
    Inverse-warp map from the uniform metric grid back to fractional source (u, v).
    Row i of the grid has metric y = y_coords[i] (decreasing), column j has x = x_coords[j].
    """

    geom: GeometryContext
    target_pitch: float
    x_coords: np.ndarray
    y_coords: np.ndarray
    source_u: np.ndarray
    source_v: np.ndarray
    valid: np.ndarray = field(repr=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return int(self.y_coords.size), int(self.x_coords.size)

    def target_to_metric(self, row: float, col: float) -> Tuple[float, float]:
        """Metric (x, y) mm of a (possibly fractional) corrected pixel"""
        x = self.x_coords[0] + col * self.target_pitch
        y = self.y_coords[0] - row * self.target_pitch
        return float(x), float(y)

    def metric_to_target(self, x: float, y: float) -> Tuple[float, float]:
        """Fractional (row, col) of a metric point on the corrected grid"""
        col = (x - self.x_coords[0]) / self.target_pitch
        row = (self.y_coords[0] - y) / self.target_pitch
        return float(row), float(col)
