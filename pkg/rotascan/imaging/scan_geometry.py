"""
Rotascan - Scan Geometry
Pure functions for the rotating-prism reflection geometry: angle mappings,
field of view, oblique scaling and pixel <-> metric transforms
"""

import math
from typing import Tuple, Union

import numpy as np

from rotascan.errors import GeometryError
from rotascan.models.geometry import (
    GAMMA_LIMIT,
    THETA_MAX,
    THETA_MIN,
    THETA_SPAN,
    GeometryContext,
    MotorAngle,
    PrismConfig,
    ScannedAngle,
)

ArrayLike = Union[float, np.ndarray]

# Motor angles are compared against the window with this slack (radians)
_ANGLE_TOLERANCE = 1e-12


def fov_degrees(n_sides: int) -> float:
    """Field of view of a prism with n_sides facets"""
    if n_sides < 3:
        raise GeometryError(f"degenerate prism: n_sides={n_sides} < 3")
    return 720.0 / n_sides


def _check_theta(theta: ArrayLike) -> None:
    t = np.asarray(theta, dtype=float)
    if np.any(t < THETA_MIN - _ANGLE_TOLERANCE) or np.any(t > THETA_MAX + _ANGLE_TOLERANCE):
        raise GeometryError(
            f"motor angle outside scan window [{THETA_MIN:.6f}, {THETA_MAX:.6f}] rad: "
            f"{float(np.min(t)):.6f}..{float(np.max(t)):.6f}"
        )


def gamma_of_theta(theta: ArrayLike) -> ArrayLike:
    """Scanned angle for a motor angle: gamma = 3*pi/10 - 2*theta"""
    _check_theta(theta)
    if isinstance(theta, np.ndarray):
        return 3 * math.pi / 10 - 2 * theta.astype(float)
    return 3 * math.pi / 10 - 2 * float(theta)


def theta_of_gamma(gamma: ArrayLike) -> ArrayLike:
    g = np.asarray(gamma, dtype=float)
    if np.any(np.abs(g) > GAMMA_LIMIT + _ANGLE_TOLERANCE):
        raise GeometryError(f"scanned angle outside [-pi/5, pi/5]: {float(np.max(np.abs(g))):.6f}")
    theta = (3 * math.pi / 10 - g) / 2
    return theta if isinstance(gamma, np.ndarray) else float(theta)


def theta_of_row(row: ArrayLike, geom: GeometryContext) -> ArrayLike:
    """Motor angle recorded for an image row; row 0 -> pi/20, last row -> pi/4"""
    r = np.asarray(row, dtype=float)
    if np.any(r < 0) or np.any(r > geom.rows_H - 1):
        raise GeometryError(f"row outside image: 0 <= row < {geom.rows_H}")
    theta = THETA_MIN + (r / (geom.rows_H - 1)) * THETA_SPAN
    return theta if isinstance(row, np.ndarray) else float(theta)


def row_of_theta(theta: ArrayLike, geom: GeometryContext) -> ArrayLike:
    """Fractional image row of a motor angle (inverse of theta_of_row)"""
    _check_theta(theta)
    r = (np.asarray(theta, dtype=float) - THETA_MIN) / THETA_SPAN * (geom.rows_H - 1)
    return r if isinstance(theta, np.ndarray) else float(r)


def scaling_factor_k(theta: ArrayLike) -> ArrayLike:
    """
    Per-row horizontal magnification sqrt(1 + 1/tan^2(pi/5 + 2*theta)).
    Equals 1/cos(gamma) on the scan window.
    """
    _check_theta(theta)
    t = np.asarray(theta, dtype=float)
    tangent = np.tan(math.pi / 5 + 2 * t)
    if np.any(np.abs(tangent) < 1e-300) or not np.all(np.isfinite(tangent)):
        raise GeometryError("singular tangent in scaling factor")
    k = np.sqrt(1.0 + 1.0 / tangent ** 2)
    return k if isinstance(theta, np.ndarray) else float(k)


def pixel_to_metric(u: ArrayLike, v: ArrayLike, geom: GeometryContext) -> Tuple[ArrayLike, ArrayLike]:
    """
    Metric plane coordinates (mm) of column u on row v.
    The x origin is the image midline, so the optical axis maps to x_d = 0.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0) or np.any(u_arr > geom.cols_W - 1):
        raise GeometryError(f"column outside image: 0 <= u <= {geom.cols_W - 1}")
    theta = theta_of_row(v, geom)
    gamma = gamma_of_theta(theta)
    y_d = geom.working_height * np.tan(gamma)
    x_d = (u_arr - geom.center_column) * geom.line_resolution_dx * scaling_factor_k(theta)
    if np.ndim(x_d) == 0 and np.ndim(y_d) == 0:
        return float(x_d), float(y_d)
    return x_d, y_d


def metric_to_pixel(x_d: ArrayLike, y_d: ArrayLike, geom: GeometryContext,
                    check_footprint: bool = True) -> Tuple[ArrayLike, ArrayLike]:
    """Fractional (u, v) of a metric plane point; exact inverse of pixel_to_metric"""
    x = np.asarray(x_d, dtype=float)
    y = np.asarray(y_d, dtype=float)
    gamma = np.arctan(y / geom.working_height)
    outside = np.abs(gamma) > GAMMA_LIMIT + _ANGLE_TOLERANCE
    theta = (3 * math.pi / 10 - np.clip(gamma, -GAMMA_LIMIT, GAMMA_LIMIT)) / 2
    v = (theta - THETA_MIN) / THETA_SPAN * (geom.rows_H - 1)
    k = np.sqrt(1.0 + 1.0 / np.tan(math.pi / 5 + 2 * theta) ** 2)
    u = x / (geom.line_resolution_dx * k) + geom.center_column
    outside |= (u < -_ANGLE_TOLERANCE) | (u > geom.cols_W - 1 + 1e-9)
    if check_footprint and np.any(outside):
        raise GeometryError("metric point outside the scanned footprint")
    if np.ndim(u) == 0:
        return float(u), float(v)
    return u, v


def footprint_extent(geom: GeometryContext) -> Tuple[float, float]:
    """Half-widths (x_max, y_max) in mm of the scanned footprint"""
    y_max = geom.working_height * math.tan(GAMMA_LIMIT)
    x_max = geom.center_column * geom.line_resolution_dx / math.cos(GAMMA_LIMIT)
    return x_max, y_max


def _grid_axis(extent: float, pitch: float, parity_of: int) -> np.ndarray:
    # Even source widths get even target counts so the centre line lands on source samples
    if parity_of % 2 == 0:
        half = int(math.ceil(extent / pitch + 0.5))
        return (np.arange(2 * half) - (2 * half - 1) / 2.0) * pitch
    half = int(math.ceil(extent / pitch))
    return (np.arange(2 * half + 1) - half) * pitch


def corrected_grid_axes(geom: GeometryContext, target_pitch: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Metric coordinates of the uniform corrected grid covering the footprint.
    Returns (x of each column, increasing; y of each row, decreasing from the top).
    """
    if target_pitch <= 0:
        raise GeometryError(f"target pitch must be positive, got {target_pitch}")
    x_max, y_max = footprint_extent(geom)
    xs = _grid_axis(x_max, target_pitch, geom.cols_W)
    ys = _grid_axis(y_max, target_pitch, geom.rows_H)[::-1].copy()
    return xs, ys


def scan_duration_seconds(config: PrismConfig) -> float:
    """Time to sweep the motor window at the configured speed (3 rpm -> 2 s)"""
    if config.motor_speed <= 0:
        raise GeometryError(f"motor speed must be positive, got {config.motor_speed}")
    degrees_per_second = config.motor_speed * 360.0 / 60.0
    return math.degrees(THETA_SPAN) / degrees_per_second


def quantize_theta(theta: MotorAngle, config: PrismConfig) -> MotorAngle:
    """Motor angle as reported by the encoder"""
    if not config.quantize_encoder:
        return theta
    step = math.radians(config.encoder_resolution)
    return round(theta / step) * step


def scanned_angle_of_row(row: ArrayLike, geom: GeometryContext) -> ScannedAngle:
    return gamma_of_theta(theta_of_row(row, geom))
