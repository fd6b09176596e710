"""
Rotascan - Trajectory File Parser
Whitespace-separated table: time x y z vx vy vz action, one row per sample
"""

import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from rotascan.errors import FileFormatError, VersionMismatchError
from rotascan.models.motion import ActionMarker, CartesianTrajectory, GripperAction

logger = logging.getLogger(__name__)

TRAJECTORY_MAJOR = 1
COLUMNS = ("time", "x", "y", "z", "vx", "vy", "vz", "action")

PathLike = Union[str, Path]


def write_trajectory(path: PathLike, trajectory: CartesianTrajectory) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    actions = trajectory.action_column()
    lines = [
        f"# rotascan trajectory {TRAJECTORY_MAJOR}",
        f"# dt {trajectory.dt!r}",
        f"# waypoints {' '.join(str(i) for i in trajectory.waypoint_indices)}",
        " ".join(COLUMNS),
    ]
    for i in range(trajectory.sample_count):
        values = [i * trajectory.dt, *trajectory.positions[i], *trajectory.velocities[i]]
        lines.append(" ".join(repr(float(v)) for v in values) + f" {actions[i]}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"✅ Trajectory written to {path}: {trajectory.sample_count} samples, {trajectory.duration:.2f}s")
    return path


def read_trajectory(path: PathLike) -> CartesianTrajectory:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"trajectory file not found: {path}")
    dt = None
    waypoints: List[int] = []
    positions, velocities = [], []
    markers: List[ActionMarker] = []
    seen_columns = False

    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(" ")
            if key == "rotascan":
                version = int(value.split()[-1])
                if version > TRAJECTORY_MAJOR:
                    raise VersionMismatchError(f"trajectory format {version} is newer than supported {TRAJECTORY_MAJOR}")
            elif key == "dt":
                dt = float(value)
            elif key == "waypoints":
                waypoints = [int(v) for v in value.split()]
            continue
        fields = line.split()
        if not seen_columns:
            if tuple(fields) != COLUMNS:
                raise FileFormatError(f"{path.name}:{number}: expected columns {' '.join(COLUMNS)}")
            seen_columns = True
            continue
        if len(fields) != len(COLUMNS):
            raise FileFormatError(f"{path.name}:{number}: expected {len(COLUMNS)} fields, got {len(fields)}")
        try:
            values = [float(v) for v in fields[1:7]]
            action = GripperAction(fields[7])
        except ValueError as e:
            raise FileFormatError(f"{path.name}:{number}: {e}") from e
        if action != GripperAction.NONE:
            markers.append(ActionMarker(len(positions), action))
        positions.append(values[:3])
        velocities.append(values[3:])

    if dt is None or not positions:
        raise FileFormatError(f"{path.name} has no dt header or no samples")
    return CartesianTrajectory(dt=dt, positions=np.array(positions), velocities=np.array(velocities),
                               markers=markers, waypoint_indices=waypoints)
