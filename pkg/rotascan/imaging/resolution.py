"""
Rotascan - Resolution Chart
Bar-target sweep reporting the smallest bar width the ideal optics still resolve
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from rotascan.imaging.scan_geometry import theta_of_row
from rotascan.imaging.scene_simulator import bar_target_scene, render_frame
from rotascan.imaging.signatures import background_signature, default_band_centers
from rotascan.models.geometry import GeometryContext
from rotascan.models.scene import SpectralSignature

logger = logging.getLogger(__name__)

DEFAULT_HEIGHTS = (330.0, 380.0, 450.0, 550.0, 600.0)
DEFAULT_BAR_COUNT = 15
# Candidate widths are searched in steps of this fraction of the line resolution
_STEP_FRACTION = 1 / 20
_SEARCH_SPAN = 2.0


@dataclass(frozen=True)
class ResolutionResult:
    working_height: float
    line_resolution_dx: float
    smallest_resolved_mm: Optional[float]

    @property
    def line_pairs_per_mm(self) -> Optional[float]:
        if self.smallest_resolved_mm is None:
            return None
        return 1.0 / (2.0 * self.smallest_resolved_mm)


def count_dark_runs(profile: np.ndarray, threshold: float) -> int:
    """Number of contiguous below-threshold runs along a 1-D profile"""
    dark = (np.asarray(profile) < threshold).astype(np.int8)
    if dark.size == 0:
        return 0
    return int(dark[0] + np.count_nonzero(np.diff(dark) == 1))


def bars_resolved(geom: GeometryContext, bar_width: float, bar_count: int = DEFAULT_BAR_COUNT,
                  n_bands: int = 4) -> bool:
    """True when the centre scan line shows exactly bar_count separate dark bars"""
    centers = default_band_centers(n_bands)
    dark = SpectralSignature("bar", np.full(n_bands, 0.1), centers)
    bright = background_signature(centers, level=0.9)
    half_width = 2 * bar_count * bar_width + 10.0
    scene = bar_target_scene(bar_width, bar_count, dark, bright, plane_size=(2 * half_width, 100.0))
    theta = theta_of_row(geom.center_row, geom)
    frame = render_frame(scene, theta, geom)
    return count_dark_runs(frame.samples.mean(axis=1), threshold=0.5) == bar_count


def smallest_resolved_width(geom: GeometryContext, bar_count: int = DEFAULT_BAR_COUNT,
                            candidates: Optional[Sequence[float]] = None) -> Optional[float]:
    """
    Smallest candidate width from which every wider candidate is also resolved.
    Aliasing can make isolated narrow widths look resolved; those are ignored.
    """
    if candidates is None:
        step = geom.line_resolution_dx * _STEP_FRACTION
        candidates = np.arange(1, int(round(_SEARCH_SPAN / _STEP_FRACTION)) + 1) * step
    widths = sorted(float(w) for w in candidates)
    smallest = None
    for width in reversed(widths):
        if not bars_resolved(geom, width, bar_count):
            break
        smallest = width
    return smallest


def resolution_sweep(base: GeometryContext, heights: Sequence[float] = DEFAULT_HEIGHTS,
                     bar_count: int = DEFAULT_BAR_COUNT) -> List[ResolutionResult]:
    """Smallest resolved bar width at each working height, optics scaled from `base`"""
    results = []
    for height in heights:
        geom = base.at_height(height)
        width = smallest_resolved_width(geom, bar_count)
        results.append(ResolutionResult(height, geom.line_resolution_dx, width))
        shown = f"{width:.3f} mm" if width is not None else "unresolved"
        logger.info(f"📊 h={height:.0f} mm: Δx={geom.line_resolution_dx:.3f} mm, smallest resolved {shown}")
    return results
