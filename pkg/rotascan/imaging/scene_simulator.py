"""
Rotascan - Scene Simulator
Generates synthetic textile scenes and renders them into the distorted
(frame, motor angle) stream a rotating-prism scanner would emit
"""

import logging
import math
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import shapely

from rotascan.errors import SceneGenerationError
from rotascan.imaging.scan_geometry import (
    corrected_grid_axes,
    gamma_of_theta,
    quantize_theta,
    row_of_theta,
    scaling_factor_k,
    scan_duration_seconds,
    theta_of_row,
)
from rotascan.imaging.signatures import background_signature
from rotascan.models.geometry import GeometryContext, PrismConfig
from rotascan.models.scene import (
    FramePacket,
    SceneDescription,
    SceneObject,
    SpectralSignature,
    rectangle_vertices,
    square_vertices,
)

logger = logging.getLogger(__name__)

DISCRETE = "discrete"
CLUTTERED = "cluttered"
SCENE_KINDS = (DISCRETE, CLUTTERED)

DEFAULT_PLANE_SIZE = (220.0, 800.0)
DEFAULT_OBJECT_SIZE = 50.0
DEFAULT_SIZE_JITTER = 5.0
DEFAULT_MIN_GAP = 25.0
DEFAULT_MAX_ROTATION_DEG = 20.0
DEFAULT_MAX_RETRIES = 500
# Objects per pile in cluttered scenes
PILE_SIZE = 4


def generate_scene(kind: str, class_set: Sequence[SpectralSignature], count: int, seed: int,
                   plane_size: Tuple[float, float] = DEFAULT_PLANE_SIZE,
                   background: Optional[SpectralSignature] = None,
                   noise_sigma: float = 0.0,
                   min_gap: float = DEFAULT_MIN_GAP,
                   object_size: float = DEFAULT_OBJECT_SIZE,
                   size_jitter: float = DEFAULT_SIZE_JITTER,
                   max_rotation_deg: float = DEFAULT_MAX_ROTATION_DEG,
                   max_retries: int = DEFAULT_MAX_RETRIES,
                   first_class: int = 0) -> SceneDescription:
    """
    Random textile layout.
    - discrete: pairwise gaps of at least min_gap mm, no overlap
    - cluttered: objects stacked in piles, each pile member overlapping an earlier one
    Classes are assigned cyclically starting at first_class.
    """
    if kind not in SCENE_KINDS:
        raise SceneGenerationError(f"unknown scene kind '{kind}', expected one of {SCENE_KINDS}")
    if count < 1:
        raise SceneGenerationError(f"object count must be >= 1, got {count}")
    if not class_set:
        raise SceneGenerationError("class set is empty")

    if background is None:
        background = background_signature(class_set[0].band_centers)
    signatures = {sig.class_name: sig for sig in class_set}
    rng = np.random.default_rng(seed)
    width, height = plane_size
    plane = shapely.box(-width / 2, -height / 2, width / 2, height / 2)

    placed: List[SceneObject] = []
    pile_count = max(1, math.ceil(count / PILE_SIZE))
    for index in range(count):
        class_name = class_set[(first_class + index) % len(class_set)].class_name
        for attempt in range(max_retries):
            side = object_size + rng.uniform(-size_jitter, size_jitter)
            angle = math.radians(rng.uniform(-max_rotation_deg, max_rotation_deg))
            reach = side * math.sqrt(2) / 2
            if kind == CLUTTERED and index >= pile_count:
                anchor = placed[int(rng.integers(0, len(placed)))]
                ax, ay = anchor.polygon.centroid.coords[0]
                center = (ax + rng.uniform(-0.6, 0.6) * side, ay + rng.uniform(-0.6, 0.6) * side)
            else:
                center = (rng.uniform(-width / 2 + reach, width / 2 - reach),
                          rng.uniform(-height / 2 + reach, height / 2 - reach))
            candidate = SceneObject(square_vertices(center, side, angle), class_name, index)
            if not plane.contains(candidate.polygon):
                continue
            if kind == DISCRETE:
                if all(candidate.polygon.distance(other.polygon) >= min_gap for other in placed):
                    break
            elif index < pile_count or candidate.polygon.intersects(anchor.polygon):
                break
        else:
            raise SceneGenerationError(
                f"could not place object {index + 1}/{count} ({kind}) after {max_retries} attempts; "
                f"plane {width:.0f}x{height:.0f} mm is too small"
            )
        placed.append(candidate)

    logger.debug(f"Generated {kind} scene: {count} objects, seed {seed}")
    return SceneDescription(plane_size=(float(width), float(height)), background=background,
                            signatures=signatures, objects=placed, noise_sigma=noise_sigma, seed=seed)


def object_index_raster(scene: SceneDescription, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Index (into scene.objects) of the top-most object covering each metric point;
    -1 where only the background is visible.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    result = np.full(x.shape, -1, dtype=np.int64)
    order = sorted(range(len(scene.objects)), key=lambda i: scene.objects[i].z_order)
    for i in order:
        polygon = scene.objects[i].polygon
        minx, miny, maxx, maxy = polygon.bounds
        near = (x >= minx) & (x <= maxx) & (y >= miny) & (y <= maxy)
        if not near.any():
            continue
        shapely.prepare(polygon)
        inside = shapely.contains_xy(polygon, x[near], y[near])
        target = result[near]
        target[inside] = i
        result[near] = target
    return result


def label_raster(scene: SceneDescription, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Class id of the top-most material at each metric point (0 = background)"""
    index = object_index_raster(scene, x, y)
    lookup = np.array([scene.class_id(obj.class_name) for obj in scene.objects] + [0], dtype=np.int64)
    return lookup[index]


def _signature_matrix(scene: SceneDescription) -> np.ndarray:
    rows = [scene.background.reflectance] + [scene.signatures[name].reflectance for name in scene.class_names]
    return np.vstack(rows)


def _frame_rng(seed: int, row_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(row_index)])


def _shade(scene: SceneDescription, labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    values = _signature_matrix(scene)[labels]
    if scene.noise_sigma > 0:
        values = values + rng.normal(0.0, scene.noise_sigma, size=values.shape)
        values = np.clip(values, 0.0, 1.0)
    return values.astype(np.float32)


def render_frame(scene: SceneDescription, theta: float, geom: GeometryContext,
                 timestamp: float = 0.0, rng: Optional[np.random.Generator] = None) -> FramePacket:
    """One scan line at motor angle theta, sampled point-wise on the plane"""
    gamma = gamma_of_theta(theta)
    columns = np.arange(geom.cols_W, dtype=float)
    x = (columns - geom.center_column) * geom.line_resolution_dx * scaling_factor_k(theta)
    y = np.full_like(x, geom.working_height * math.tan(gamma))
    if rng is None:
        rng = _frame_rng(scene.seed, int(round(row_of_theta(theta, geom))))
    samples = _shade(scene, label_raster(scene, x, y), rng)
    return FramePacket(theta=float(theta), timestamp=float(timestamp), samples=samples)


def render_scan(scene: SceneDescription, config: PrismConfig, geom: GeometryContext) -> Iterator[FramePacket]:
    """
    Full scan in acquisition order: rows_H packets, uniform in motor angle,
    timestamps scan_duration / rows_H apart
    """
    rows = np.arange(geom.rows_H, dtype=float)
    thetas = theta_of_row(rows, geom)
    k = scaling_factor_k(thetas)
    y = geom.working_height * np.tan(gamma_of_theta(thetas))
    columns = np.arange(geom.cols_W, dtype=float) - geom.center_column
    x_grid = k[:, None] * columns[None, :] * geom.line_resolution_dx
    y_grid = np.repeat(y[:, None], geom.cols_W, axis=1)
    labels = label_raster(scene, x_grid, y_grid)

    line_period = scan_duration_seconds(config) / geom.rows_H
    logger.debug(f"Rendering scan: {geom.rows_H} lines at {1.0 / line_period:.1f} Hz")
    for row in range(geom.rows_H):
        samples = _shade(scene, labels[row], _frame_rng(scene.seed, row))
        yield FramePacket(theta=quantize_theta(float(thetas[row]), config),
                          timestamp=row * line_period, samples=samples)


def ground_truth_label_map(scene: SceneDescription, geom: GeometryContext,
                           target_pitch: Optional[float] = None) -> np.ndarray:
    """Class ids on the corrected uniform grid (rows top to bottom), background 0"""
    pitch = target_pitch if target_pitch is not None else geom.line_resolution_dx
    xs, ys = corrected_grid_axes(geom, pitch)
    return label_raster(scene, xs[None, :], ys[:, None])


def bar_target_scene(bar_width: float, bar_count: int, dark: SpectralSignature, bright: SpectralSignature,
                     plane_size: Tuple[float, float] = DEFAULT_PLANE_SIZE, bar_length: float = 40.0) -> SceneDescription:
    """
    Resolution target: bar_count dark bars of width bar_width separated by equal gaps,
    starting at x = 0 and centred vertically on the optical axis
    """
    bars = []
    for i in range(bar_count):
        x0 = 2 * i * bar_width
        bars.append(SceneObject(rectangle_vertices(x0, -bar_length / 2, x0 + bar_width, bar_length / 2),
                                dark.class_name, i))
    return SceneDescription(plane_size=plane_size, background=bright,
                            signatures={dark.class_name: dark}, objects=bars)


def checkerboard_scene(square: float, dark: SpectralSignature, background: SpectralSignature,
                       plane_size: Tuple[float, float] = DEFAULT_PLANE_SIZE) -> SceneDescription:
    """Dark squares of side `square` on alternate cells of a grid anchored at the plane centre"""
    width, height = plane_size
    nx = int(width // (2 * square)) * 2
    ny = int(height // (2 * square)) * 2
    objects = []
    for j in range(ny):
        for i in range(nx):
            if (i + j) % 2:
                continue
            x0 = (i - nx / 2) * square
            y0 = (j - ny / 2) * square
            objects.append(SceneObject(rectangle_vertices(x0, y0, x0 + square, y0 + square),
                                       dark.class_name, len(objects)))
    return SceneDescription(plane_size=plane_size, background=background,
                            signatures={dark.class_name: dark}, objects=objects)
