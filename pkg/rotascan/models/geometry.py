"""
Rotascan - Scanner Geometry Models
Prism hardware description and the image/metric geometry of one scan
"""

import math
from dataclasses import dataclass, field, replace

from rotascan.errors import GeometryError

# Motor angle window of the scan (radians) and the scanned angle it sweeps
THETA_MIN = math.pi / 20
THETA_MAX = math.pi / 4
THETA_SPAN = THETA_MAX - THETA_MIN
GAMMA_LIMIT = math.pi / 5

MotorAngle = float
ScannedAngle = float


@dataclass(frozen=True)
class PrismConfig:
    """
    ROTATING PRISM HARDWARE
    - n_sides reflective facets on a regular prism of circumradius r (mm)
    - sensor point A sits at (sensor_x, sqrt(2)/2 * r)
    - motor speed in rpm, encoder resolution in degrees
    - sensor_x is housed for completeness; no implemented equation uses it
    """

    n_sides: int = 10
    circumradius_r: float = 60.0
    sensor_x: float = 0.0
    reflectivity: float = 0.95
    motor_speed: float = 3.0
    gear_ratio: float = 10.0
    encoder_resolution: float = 0.01
    quantize_encoder: bool = False
    sensor_y: float = field(init=False)

    def __post_init__(self):
        if self.n_sides < 3:
            raise GeometryError(f"degenerate prism: n_sides={self.n_sides} < 3")
        if self.circumradius_r <= 0:
            raise GeometryError(f"circumradius must be positive, got {self.circumradius_r}")
        if not 0 < self.reflectivity <= 1:
            raise GeometryError(f"reflectivity must be in (0, 1], got {self.reflectivity}")
        if self.motor_speed <= 0:
            raise GeometryError(f"motor speed must be positive, got {self.motor_speed}")
        if self.encoder_resolution <= 0:
            raise GeometryError(f"encoder resolution must be positive, got {self.encoder_resolution}")
        object.__setattr__(self, "sensor_y", math.sqrt(2) / 2 * self.circumradius_r)


@dataclass(frozen=True)
class GeometryContext:
    """
    SCAN IMAGE GEOMETRY
    - rows_H lines per scan, uniform in motor angle; row 0 looks at +pi/5
    - cols_W pixels per line, Δx mm apart on the optical centre line
    - working_height is the detection height of the metric mapping
    """

    working_height: float = 600.0
    line_resolution_dx: float = 0.5
    rows_H: int = 871
    cols_W: int = 512

    def __post_init__(self):
        if self.working_height <= 0:
            raise GeometryError(f"working height must be positive, got {self.working_height}")
        if self.line_resolution_dx <= 0:
            raise GeometryError(f"line resolution must be positive, got {self.line_resolution_dx}")
        if self.rows_H < 2 or self.cols_W < 2:
            raise GeometryError(f"image must be at least 2x2, got {self.rows_H}x{self.cols_W}")

    @property
    def center_column(self) -> float:
        return (self.cols_W - 1) / 2.0

    @property
    def center_row(self) -> float:
        return (self.rows_H - 1) / 2.0

    def at_height(self, working_height: float) -> "GeometryContext":
        """Same optics at another detection height; Δx scales with height"""
        scale = working_height / self.working_height
        return replace(self, working_height=working_height,
                       line_resolution_dx=self.line_resolution_dx * scale)
