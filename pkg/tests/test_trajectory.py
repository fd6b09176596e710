import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from rotascan.errors import TrajectoryError
from rotascan.models.motion import GripperAction, LqtConfig, Waypoint, Workspace
from rotascan.robotics.trajectory import (
    build_sparse_path,
    lqt_refine,
    pixel_to_workspace,
    solve_lqt,
    time_scale,
    workspace_to_plane,
)

UNLIMITED = LqtConfig(max_velocity=1e9, max_acceleration=1e12)


def _batch_least_squares(A, B, Q, R, Qf, references, x0):
    """Same tracking cost written as one stacked quadratic in the controls"""
    steps = references.shape[0] - 1
    nx, nu = B.shape
    phi = np.zeros(((steps + 1) * nx, nx))
    gamma = np.zeros(((steps + 1) * nx, steps * nu))
    power = np.eye(nx)
    for k in range(steps + 1):
        phi[k * nx:(k + 1) * nx] = power
        power = A @ power
    for k in range(1, steps + 1):
        for j in range(k):
            gamma[k * nx:(k + 1) * nx, j * nu:(j + 1) * nu] = np.linalg.matrix_power(A, k - 1 - j) @ B
    weights = np.zeros(((steps + 1) * nx, (steps + 1) * nx))
    for k in range(steps):
        weights[k * nx:(k + 1) * nx, k * nx:(k + 1) * nx] = Q
    weights[steps * nx:, steps * nx:] = Qf
    control_weights = np.kron(np.eye(steps), R)
    target = references.reshape(-1) - phi @ x0
    hessian = gamma.T @ weights @ gamma + control_weights
    controls = np.linalg.solve(hessian, gamma.T @ weights @ target)
    states = (phi @ x0 + gamma @ controls).reshape(steps + 1, nx)
    return states, controls.reshape(steps, nu)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_riccati_matches_batch_least_squares(seed):
    rng = np.random.default_rng(seed)
    config = LqtConfig(terminal_weight=1e3)
    steps = 40
    references = np.zeros((steps + 1, 2))
    references[:, 1] = rng.normal(scale=50.0, size=steps + 1)
    references[:, 0] = np.cumsum(references[:, 1]) * config.dt + rng.normal(scale=2.0, size=steps + 1)
    x0 = np.array([rng.normal(scale=5.0), 0.0])

    states, controls = solve_lqt(config.A, config.B, config.Q, config.R, config.Qf, references, x0)
    oracle_states, oracle_controls = _batch_least_squares(config.A, config.B, config.Q, config.R, config.Qf,
                                                          references, x0)
    assert np.allclose(states, oracle_states, rtol=1e-6, atol=1e-6)
    assert np.allclose(controls, oracle_controls, rtol=1e-6, atol=1e-5)


def test_two_second_move_has_201_samples():
    path = [Waypoint((100.0, 0.0, 100.0)), Waypoint((600.0, 0.0, 100.0))]
    trajectory = lqt_refine(path, UNLIMITED)
    assert trajectory.sample_count == 201
    assert trajectory.duration == pytest.approx(2.0)
    assert trajectory.times[-1] == pytest.approx(2.0)
    assert np.allclose(trajectory.positions[0], path[0].position)
    assert np.linalg.norm(trajectory.positions[-1] - path[-1].position) <= 1.0
    assert trajectory.waypoint_indices == [0, 200]


def test_dwell_holds_position():
    path = [Waypoint((100.0, 0.0, 100.0), dwell=0.2), Waypoint((110.0, 0.0, 100.0))]
    trajectory = lqt_refine(path, UNLIMITED)
    assert trajectory.sample_count == 1 + 20 + 50
    assert np.allclose(trajectory.positions[:21], path[0].position)


def test_pick_and_place_respects_limits_and_hits_waypoints():
    workspace = Workspace()
    config = LqtConfig()
    path = build_sparse_path((300.0, 20.0, 0.0), (650.0, 300.0, 100.0), workspace,
                             intermediates=[Waypoint((450.0, 150.0, 250.0), label="via")])
    assert [w.label for w in path] == ["hover", "grasp", "lift", "via", "bin", "retreat"]
    trajectory = lqt_refine(path, config)

    for index, waypoint in zip(trajectory.waypoint_indices, path):
        assert np.linalg.norm(trajectory.positions[index] - waypoint.position) <= 1.0
    on = trajectory.marker_index(GripperAction.SUCTION_ON)
    off = trajectory.marker_index(GripperAction.SUCTION_OFF)
    assert on is not None and off is not None and on < off
    assert np.linalg.norm(trajectory.position_at(GripperAction.SUCTION_ON) - path[1].position) <= 1.0
    assert np.abs(trajectory.velocities).max() <= config.max_velocity * 1.01
    column = trajectory.action_column()
    assert column[on] == "suction_on" and column[off] == "suction_off"
    assert column.count("none") == trajectory.sample_count - 2


def test_time_scale_stretches_evenly():
    positions = np.stack([np.linspace(0, 10, 101)] * 3, axis=1)
    scaled, exact = time_scale(positions, 0.01, 2.0)
    assert exact == 2.0
    assert scaled.shape == (201, 3)
    assert np.allclose(scaled[0], positions[0])
    assert np.allclose(scaled[-1], positions[-1])
    assert np.allclose(np.diff(scaled[:, 0]), 0.05)


def test_path_and_config_validation():
    workspace = Workspace()
    with pytest.raises(TrajectoryError, match="outside the workspace"):
        build_sparse_path((300.0, 0.0, 0.0), (2000.0, 0.0, 0.0), workspace)
    with pytest.raises(TrajectoryError):
        lqt_refine([Waypoint((0.0, 0.0, 0.0))])
    with pytest.raises(TrajectoryError, match="infeasible"):
        LqtConfig(max_acceleration=0.0)
    with pytest.raises(TrajectoryError):
        Waypoint((1.0, 2.0))
    with pytest.raises(TrajectoryError):
        Workspace(lower=(0.0, 0.0, 0.0), upper=(0.0, 1.0, 1.0))


def test_pixel_workspace_mapping(cmap):
    workspace = Workspace(plane_origin=(400.0, -20.0, 5.0))
    point = pixel_to_workspace(12.0, 30.5, cmap, workspace)
    assert point[2] == 5.0
    assert workspace_to_plane(point, workspace) == pytest.approx(cmap.target_to_metric(12.0, 30.5))
    row, col = cmap.metric_to_target(*workspace_to_plane(point, workspace))
    assert (row, col) == pytest.approx((12.0, 30.5))


def test_time_scaling_keeps_the_geometric_path():
    path = build_sparse_path((300.0, 20.0, 0.0), (650.0, 300.0, 100.0), Workspace(),
                             intermediates=[Waypoint((450.0, 150.0, 250.0), label="via")])
    free = lqt_refine(path, UNLIMITED)
    slow = lqt_refine(path, LqtConfig(max_velocity=100.0, max_acceleration=500.0))
    steps = free.sample_count - 1
    exact = (slow.sample_count - 1) / steps
    assert exact > 1.5

    spline = CubicSpline(np.arange(steps + 1) * free.dt, free.positions, axis=0)
    times = np.minimum(np.arange(slow.sample_count) * slow.dt / exact, steps * free.dt)
    assert np.abs(spline(times) - slow.positions).max() <= 1e-9
    assert slow.waypoint_indices == [int(round(i * exact)) for i in free.waypoint_indices]


def test_integer_time_scale_keeps_every_sample():
    free = lqt_refine([Waypoint((0.0, 0.0, 0.0)), Waypoint((120.0, -40.0, 60.0))], UNLIMITED)
    scaled, exact = time_scale(free.positions, free.dt, 3.0)
    assert exact == 3.0
    assert np.abs(scaled[::3] - free.positions).max() <= 1e-9
