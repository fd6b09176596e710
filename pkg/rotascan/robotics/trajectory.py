"""
Rotascan - Grasp Trajectory
Sparse pick-and-place waypoints refined into 100 Hz Cartesian trajectories by
finite-horizon linear quadratic tracking on per-axis double integrators
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from rotascan.errors import TrajectoryError
from rotascan.models.cube import CorrectionMap
from rotascan.models.motion import (
    ActionMarker,
    CartesianTrajectory,
    GripperAction,
    LqtConfig,
    Vector3,
    Waypoint,
    Workspace,
)

logger = logging.getLogger(__name__)


def pixel_to_workspace(row: float, col: float, cmap: CorrectionMap, workspace: Workspace) -> Vector3:
    """Robot coordinates (mm) of a corrected-grid pixel lying on the scan plane"""
    x, y = cmap.target_to_metric(row, col)
    ox, oy, oz = workspace.plane_origin
    return ox + x, oy + y, oz


def workspace_to_plane(point: Sequence[float], workspace: Workspace) -> Tuple[float, float]:
    """Inverse of pixel_to_workspace down to plane metric (x, y)"""
    ox, oy, _ = workspace.plane_origin
    return float(point[0]) - ox, float(point[1]) - oy


def build_sparse_path(grasp: Vector3, bin_position: Vector3, workspace: Workspace,
                      intermediates: Sequence[Waypoint] = ()) -> List[Waypoint]:
    """
    hover -> descend (suction on) -> lift -> intermediates -> bin (suction off) -> retreat
    """
    gx, gy, gz = (float(v) for v in grasp)
    bx, by, bz = (float(v) for v in bin_position)
    path = [
        Waypoint((gx, gy, gz + workspace.approach_height), label="hover"),
        Waypoint((gx, gy, gz), GripperAction.SUCTION_ON, label="grasp"),
        Waypoint((gx, gy, gz + workspace.lift_height), label="lift"),
        *intermediates,
        Waypoint((bx, by, bz), GripperAction.SUCTION_OFF, label="bin"),
        Waypoint((bx, by, bz + workspace.approach_height), label="retreat"),
    ]
    for waypoint in path:
        workspace.check(waypoint.position, f"waypoint '{waypoint.label or 'intermediate'}'")
    return path


def solve_lqt(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray, Qf: np.ndarray,
              references: np.ndarray, x0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Finite-horizon LQ tracking of references[0..n] from x0.
    Minimises sum_k e_k'Q e_k + u_k'R u_k + e_n'Qf e_n with e = x - r.
    Backward Riccati plus feedforward recursion in error coordinates, then a forward roll-out.
    Returns (states n+1 x nx, controls n x nu).
    """
    references = np.atleast_2d(references)
    steps = references.shape[0] - 1
    nx, nu = B.shape
    disturbance = references[:-1] @ A.T - references[1:]

    P = Qf.copy()
    s = np.zeros(nx)
    gains = np.zeros((steps, nu, nx))
    feedforward = np.zeros((steps, nu))
    for k in range(steps - 1, -1, -1):
        d = disturbance[k]
        G = R + B.T @ P @ B
        K = np.linalg.solve(G, B.T @ P @ A)
        k_ff = -np.linalg.solve(G, B.T @ (P @ d + s))
        closed = A - B @ K
        s = -K.T @ R @ k_ff + closed.T @ (P @ (B @ k_ff + d) + s)
        P = Q + K.T @ R @ K + closed.T @ P @ closed
        P = (P + P.T) / 2.0
        gains[k] = K
        feedforward[k] = k_ff

    states = np.zeros((steps + 1, nx))
    controls = np.zeros((steps, nu))
    error = np.asarray(x0, dtype=float) - references[0]
    states[0] = x0
    for k in range(steps):
        u = -gains[k] @ error + feedforward[k]
        error = A @ error + B @ u + disturbance[k]
        controls[k] = u
        states[k + 1] = error + references[k + 1]
    return states, controls


def _segment_steps(duration: float, dt: float) -> int:
    return max(1, int(round(duration / dt)))


def _segments(path: Sequence[Waypoint], config: LqtConfig):
    """(start, end, steps, arrival waypoint or None) for every move and dwell segment"""
    for i, waypoint in enumerate(path):
        if waypoint.dwell > 0:
            yield waypoint, waypoint, _segment_steps(waypoint.dwell, config.dt), None
        if i + 1 < len(path):
            target = path[i + 1]
            distance = float(np.linalg.norm(np.subtract(target.position, waypoint.position)))
            duration = max(config.segment_horizon, distance / config.cruise_speed)
            yield waypoint, target, _segment_steps(duration, config.dt), target


def _track(path: Sequence[Waypoint], config: LqtConfig):
    A, B, Q, R, Qf = config.A, config.B, config.Q, config.R, config.Qf
    state = np.zeros((3, 2))
    state[:, 0] = path[0].position
    samples = [state[:, 0].copy()]
    arrivals = [(0, path[0])]
    for start, end, steps, arrival in _segments(path, config):
        a = np.asarray(start.position)
        b = np.asarray(end.position)
        fractions = np.arange(steps + 1) / steps
        velocity = (b - a) / (steps * config.dt)
        segment = np.zeros((steps, 3))
        for axis in range(3):
            refs = np.zeros((steps + 1, 2))
            refs[:, 0] = a[axis] + (b[axis] - a[axis]) * fractions
            refs[:-1, 1] = velocity[axis]
            states, _ = solve_lqt(A, B, Q, R, Qf, refs, state[axis])
            segment[:, axis] = states[1:, 0]
            state[axis] = states[-1]
        samples.extend(segment)
        if arrival is not None:
            arrivals.append((len(samples) - 1, arrival))
    return np.asarray(samples), arrivals


def _limit_ratio(positions: np.ndarray, config: LqtConfig) -> float:
    velocities = np.gradient(positions, config.dt, axis=0)
    accelerations = np.gradient(velocities, config.dt, axis=0)
    v_ratio = np.abs(velocities).max() / config.max_velocity
    a_ratio = np.abs(accelerations).max() / config.max_acceleration
    return max(v_ratio, math.sqrt(a_ratio))


def time_scale(positions: np.ndarray, dt: float, factor: float) -> Tuple[np.ndarray, float]:
    """
    Slow a trajectory down by at least `factor` without changing its geometric path.
    The path is the cubic spline through the given samples in their original time;
    new samples at dt spacing read it at t / exact. Returns the new positions and the
    exact factor used (whole sample count).
    """
    steps = positions.shape[0] - 1
    new_steps = int(math.ceil(steps * factor - 1e-9))
    exact = new_steps / steps
    spline = CubicSpline(np.arange(steps + 1) * dt, positions, axis=0)
    query = np.minimum(np.arange(new_steps + 1) * dt / exact, steps * dt)
    return spline(query), exact


def lqt_refine(path: Sequence[Waypoint], config: Optional[LqtConfig] = None) -> CartesianTrajectory:
    """Dense trajectory at 1/config.dt Hz through every waypoint, slowed down to respect limits"""
    config = config or LqtConfig()
    if len(path) < 2:
        raise TrajectoryError(f"need at least 2 waypoints, got {len(path)}")

    tracked, arrivals = _track(path, config)
    positions = tracked
    total = 1.0
    for iteration in range(config.max_scaling_iterations):
        ratio = _limit_ratio(positions, config)
        if ratio <= 1.0:
            break
        # each pass resamples the tracked samples, never an earlier resample
        positions, total = time_scale(tracked, config.dt, total * ratio * 1.001)
        logger.debug(f"Time scaling pass {iteration + 1}: factor {total:.4f}")
    else:
        if _limit_ratio(positions, config) > 1.0:
            logger.warning("⚠️ Trajectory still exceeds limits after time scaling")
    indices = [int(round(index * total)) for index, _ in arrivals]

    markers = [ActionMarker(index, waypoint.action) for index, (_, waypoint) in zip(indices, arrivals)
               if waypoint.action != GripperAction.NONE]
    velocities = np.gradient(positions, config.dt, axis=0)
    trajectory = CartesianTrajectory(dt=config.dt, positions=positions, velocities=velocities,
                                     markers=markers, waypoint_indices=indices)
    errors = [float(np.linalg.norm(positions[i] - np.asarray(w.position))) for i, (_, w) in zip(indices, arrivals)]
    logger.debug(f"Trajectory: {trajectory.sample_count} samples over {trajectory.duration:.2f} s, "
                 f"worst waypoint error {max(errors):.4f} mm")
    return trajectory
