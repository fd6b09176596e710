"""
Rotascan - Motion Models
Waypoints, workspace bounds, LQ tracking settings and sampled Cartesian trajectories
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from rotascan.errors import TrajectoryError

Vector3 = Tuple[float, float, float]


class GripperAction(str, Enum):
    NONE = "none"
    SUCTION_ON = "suction_on"
    SUCTION_OFF = "suction_off"


@dataclass(frozen=True)
class Waypoint:
    position: Vector3
    action: GripperAction = GripperAction.NONE
    dwell: float = 0.0
    label: str = ""

    def __post_init__(self):
        if len(self.position) != 3:
            raise TrajectoryError(f"waypoint position must have 3 coordinates, got {self.position}")
        if self.dwell < 0:
            raise TrajectoryError(f"dwell must be non-negative, got {self.dwell}")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))


@dataclass(frozen=True)
class Workspace:
    """
    ROBOT WORKSPACE (mm)
    - axis-aligned box every waypoint must stay in
    - plane_origin is where the scan plane centre sits in robot coordinates
    """

    lower: Vector3 = (0.0, -500.0, 0.0)
    upper: Vector3 = (800.0, 500.0, 600.0)
    plane_origin: Vector3 = (300.0, 0.0, 0.0)
    approach_height: float = 100.0
    lift_height: float = 150.0

    def __post_init__(self):
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise TrajectoryError(f"workspace box is empty: {self.lower} .. {self.upper}")
        if self.approach_height <= 0 or self.lift_height <= 0:
            raise TrajectoryError("approach and lift heights must be positive")

    def contains(self, point: Vector3, tolerance: float = 1e-9) -> bool:
        return all(lo - tolerance <= v <= hi + tolerance for v, lo, hi in zip(point, self.lower, self.upper))

    def check(self, point: Vector3, what: str = "point") -> None:
        if not self.contains(point):
            raise TrajectoryError(f"{what} {tuple(round(v, 3) for v in point)} is outside the workspace "
                                  f"{self.lower} .. {self.upper}")


@dataclass(frozen=True)
class LqtConfig:
    """
    PER-AXIS DOUBLE-INTEGRATOR LQ TRACKING
    - state (position mm, velocity mm/s), input acceleration mm/s^2
    - stage cost diag(q_position, q_velocity) on tracking error, r on input
    - terminal_weight pins every waypoint
    """

    dt: float = 0.01
    q_position: float = 100.0
    q_velocity: float = 1.0
    r: float = 0.1
    terminal_weight: float = 1e6
    segment_horizon: float = 0.5
    cruise_speed: float = 250.0
    max_velocity: float = 1000.0
    max_acceleration: float = 5000.0
    max_scaling_iterations: int = 10

    def __post_init__(self):
        if self.dt <= 0:
            raise TrajectoryError(f"sample period must be positive, got {self.dt}")
        if self.q_position < 0 or self.q_velocity < 0 or self.terminal_weight < 0:
            raise TrajectoryError("state cost weights must be non-negative")
        if self.r <= 0:
            raise TrajectoryError(f"input cost r must be positive, got {self.r}")
        if self.segment_horizon <= 0 or self.cruise_speed <= 0:
            raise TrajectoryError("segment horizon and cruise speed must be positive")
        if self.max_velocity <= 0 or self.max_acceleration <= 0:
            raise TrajectoryError(
                f"infeasible limits: max_velocity={self.max_velocity}, max_acceleration={self.max_acceleration}"
            )

    @property
    def A(self) -> np.ndarray:
        return np.array([[1.0, self.dt], [0.0, 1.0]])

    @property
    def B(self) -> np.ndarray:
        return np.array([[self.dt ** 2 / 2.0], [self.dt]])

    @property
    def Q(self) -> np.ndarray:
        return np.diag([self.q_position, self.q_velocity])

    @property
    def R(self) -> np.ndarray:
        return np.array([[self.r]])

    @property
    def Qf(self) -> np.ndarray:
        return np.diag([self.terminal_weight, self.terminal_weight])


@dataclass(frozen=True)
class ActionMarker:
    index: int
    action: GripperAction


@dataclass(eq=False)
class CartesianTrajectory:
    """
    Uniformly sampled end-effector path.
    times[i] == i * dt; velocities are central differences of positions.
    """

    dt: float
    positions: np.ndarray
    velocities: np.ndarray
    markers: List[ActionMarker] = field(default_factory=list)
    waypoint_indices: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3 or self.positions.shape != self.velocities.shape:
            raise TrajectoryError(f"trajectory arrays must be T x 3, got {self.positions.shape}")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.sample_count) * self.dt

    @property
    def sample_count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def duration(self) -> float:
        return (self.sample_count - 1) * self.dt

    def marker_index(self, action: GripperAction) -> Optional[int]:
        for marker in self.markers:
            if marker.action == action:
                return marker.index
        return None

    def position_at(self, action: GripperAction) -> Optional[np.ndarray]:
        index = self.marker_index(action)
        return None if index is None else self.positions[index].copy()

    def action_column(self) -> List[str]:
        column = [GripperAction.NONE.value] * self.sample_count
        for marker in self.markers:
            column[marker.index] = marker.action.value
        return column
