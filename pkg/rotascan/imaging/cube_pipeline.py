"""
Rotascan - Cube Pipeline
Places (frame, motor angle) packets into a cube and resamples it onto a uniform metric grid
"""

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from rotascan.errors import CorrectionError, GeometryError, ReconstructionError
from rotascan.imaging.scan_geometry import corrected_grid_axes, footprint_extent, metric_to_pixel, row_of_theta
from rotascan.imaging.signatures import default_band_centers
from rotascan.models.cube import SENTINEL_VALUE, CorrectionMap, HyperspectralCube
from rotascan.models.geometry import GeometryContext
from rotascan.models.scene import FramePacket

logger = logging.getLogger(__name__)

DEFAULT_RGB_WAVELENGTHS = (650.0, 550.0, 450.0)


def reconstruct(frames: Iterable[FramePacket], geom: GeometryContext,
                band_centers: Optional[np.ndarray] = None) -> HyperspectralCube:
    """
    Build the uncorrected rows_H x cols_W x N cube.
    Each packet lands on the row nearest its recorded motor angle; when two packets
    compete the closer angle wins, then the earlier timestamp. Rows nobody claimed
    are linearly interpolated from their captured neighbours and flagged.
    """
    packets: List[FramePacket] = list(frames)
    if not packets:
        raise ReconstructionError("frame stream is empty")
    n_bands = packets[0].n_bands
    for packet in packets:
        if packet.width != geom.cols_W:
            raise ReconstructionError(f"frame width {packet.width} != geometry cols_W {geom.cols_W}")
        if packet.n_bands != n_bands:
            raise ReconstructionError(f"inconsistent band counts in stream: {packet.n_bands} vs {n_bands}")

    try:
        positions = np.asarray(row_of_theta(np.array([p.theta for p in packets]), geom))
    except GeometryError as e:
        raise ReconstructionError(f"packet outside the scan window: {e}") from e

    nearest = np.rint(positions).astype(int)
    best = {}
    for index, (row, position, packet) in enumerate(zip(nearest, positions, packets)):
        key = (abs(position - row), packet.timestamp)
        if row not in best or key < best[row][0]:
            best[row] = (key, index)

    data = np.zeros((geom.rows_H, geom.cols_W, n_bands), dtype=np.float32)
    captured = np.zeros(geom.rows_H, dtype=bool)
    for row, (_, index) in best.items():
        data[row] = packets[index].samples
        captured[row] = True

    captured_rows = np.flatnonzero(captured)
    missing = np.flatnonzero(~captured)
    for row in missing:
        after = np.searchsorted(captured_rows, row)
        if after == 0:
            data[row] = data[captured_rows[0]]
        elif after == captured_rows.size:
            data[row] = data[captured_rows[-1]]
        else:
            lo, hi = captured_rows[after - 1], captured_rows[after]
            weight = (row - lo) / (hi - lo)
            data[row] = (1 - weight) * data[lo] + weight * data[hi]

    if band_centers is None:
        band_centers = default_band_centers(n_bands)
    if missing.size:
        logger.warning(f"⚠️ {missing.size}/{geom.rows_H} rows missing from stream, interpolated")
    logger.info(f"✅ Reconstructed {geom.rows_H}x{geom.cols_W}x{n_bands} cube from {len(packets)} frames")
    return HyperspectralCube(data=data, geom=geom, band_centers=band_centers, corrected=False,
                             interpolated_rows=~captured)


def build_correction_map(geom: GeometryContext, target_pitch: Optional[float] = None) -> CorrectionMap:
    """Inverse warp for every pixel of the uniform grid covering the footprint"""
    pitch = geom.line_resolution_dx if target_pitch is None else float(target_pitch)
    xs, ys = corrected_grid_axes(geom, pitch)
    x_grid, y_grid = np.meshgrid(xs, ys)
    u, v = metric_to_pixel(x_grid, y_grid, geom, check_footprint=False)

    _, y_max = footprint_extent(geom)
    slack = 1e-9
    valid = (np.abs(y_grid) <= y_max + slack) & (u >= -slack) & (u <= geom.cols_W - 1 + slack)
    valid &= (v >= -slack) & (v <= geom.rows_H - 1 + slack)
    u = np.where(valid, np.clip(u, 0, geom.cols_W - 1), SENTINEL_VALUE)
    v = np.where(valid, np.clip(v, 0, geom.rows_H - 1), SENTINEL_VALUE)
    logger.debug(f"Correction map {ys.size}x{xs.size} at {pitch} mm, {valid.mean():.1%} inside footprint")
    return CorrectionMap(geom=geom, target_pitch=pitch, x_coords=xs, y_coords=ys,
                         source_u=u, source_v=v, valid=valid)


def correct_distortion(cube: HyperspectralCube, cmap: CorrectionMap) -> HyperspectralCube:
    """Bilinear band-by-band resampling onto the map's grid; outside the footprint -> SENTINEL_VALUE"""
    if cube.corrected:
        raise CorrectionError("cube is already corrected")
    if cube.geom != cmap.geom:
        raise CorrectionError(f"correction map built for {cmap.geom}, cube has {cube.geom}")

    rows, cols = cmap.shape
    out = np.full((rows, cols, cube.n_bands), SENTINEL_VALUE, dtype=np.float32)
    coords = np.vstack([cmap.source_v[cmap.valid], cmap.source_u[cmap.valid]])
    for band in range(cube.n_bands):
        out[cmap.valid, band] = ndimage.map_coordinates(cube.data[:, :, band], coords, order=1, mode="nearest")

    logger.info(f"✅ Corrected cube onto {rows}x{cols} grid at {cmap.target_pitch} mm/pixel")
    return HyperspectralCube(data=out, geom=cube.geom, band_centers=cube.band_centers, corrected=True,
                             valid_mask=cmap.valid.copy(), pitch=cmap.target_pitch)


def nearest_band(band_centers: np.ndarray, wavelength: float) -> int:
    return int(np.argmin(np.abs(np.asarray(band_centers) - wavelength)))


def pseudo_rgb(cube: HyperspectralCube,
               wavelengths: Sequence[float] = DEFAULT_RGB_WAVELENGTHS) -> np.ndarray:
    """
    rows x cols x 3 image in [0, 1] from the bands nearest the given wavelengths.
    Each channel is min-max normalised over valid pixels; a flat channel becomes 0.5.
    """
    if cube.n_bands < 3:
        raise ReconstructionError(f"pseudo-RGB needs at least 3 bands, cube has {cube.n_bands}")
    image = np.zeros(cube.spatial_shape + (3,), dtype=float)
    valid = cube.valid_mask
    for channel, wavelength in enumerate(wavelengths):
        plane = cube.data[:, :, nearest_band(cube.band_centers, wavelength)].astype(float)
        values = plane[valid]
        if values.size == 0:
            continue
        lo, hi = values.min(), values.max()
        if hi - lo <= 0:
            image[valid, channel] = 0.5
        else:
            image[valid, channel] = (values - lo) / (hi - lo)
    return image
