import numpy as np
import pytest

from uavguard.sim import (
    Arena,
    COLLISION,
    Episode,
    OUT_OF_BOUNDS,
    SUCCESS,
    SimConfig,
    TIMEOUT,
    wrap_angle,
)


def test_reset_deterministic():
    a, b = Episode(Arena(), seed=42), Episode(Arena(), seed=42)
    oa, ob = a.reset(), b.reset()
    assert oa.depth_stack.tobytes() == ob.depth_stack.tobytes()
    assert oa.bearing == ob.bearing and oa.distance == ob.distance
    assert a.goal_index == b.goal_index


def test_goal_choice_binomial():
    ep = Episode(Arena(), seed=7)
    picks = []
    for _ in range(10_000):
        ep.reset()
        picks.append(ep.goal_index)
    frac = np.mean(picks)
    assert abs(frac - 0.5) < 0.02


def test_initial_distance_matches_layout():
    ep = Episode(Arena(), seed=0)
    obs = ep.reset()
    assert abs(obs.distance - np.sqrt(20.0**2 + 5.0**2)) < 1e-9


def test_initial_stack_is_five_copies():
    obs = Episode(Arena(), seed=1).reset()
    assert obs.depth_stack.shape[0] == 5
    for k in range(1, 5):
        assert np.array_equal(obs.depth_stack[0], obs.depth_stack[k])


def test_stack_shift_after_step():
    ep = Episode(Arena(), seed=3)
    old = ep.reset()
    out = ep.step((1.0, 0.3))
    assert np.array_equal(out.observation.depth_stack[:4], old.depth_stack[1:])


def test_success_reward():
    arena = Arena(goals=((3.0, 0.0), (3.0, 0.0)), obstacles=())
    ep = Episode(arena, seed=0)
    ep.reset()
    out = None
    for _ in range(5):
        out = ep.step((2.0, 0.0))
        if out.terminal:
            break
    assert out.cause == SUCCESS
    assert out.reward == 5.0


def test_collision_reward():
    arena = Arena(obstacles=((3.0, 0.0, 0.5),))
    ep = Episode(arena, seed=0)
    ep.reset()
    out = None
    for _ in range(10):
        out = ep.step((2.0, 0.0))
        if out.terminal:
            break
    assert out.cause == COLLISION
    assert out.reward == -2.0


def test_checkpoint_bonus_first_crossing_only():
    ep = Episode(Arena(), seed=0)
    ep.reset()
    ep.state.position = np.array([3.8, 0.0])
    out = ep.step((2.0, 0.0))
    assert out.checkpoint == 1
    assert out.reward == pytest.approx(2.0 * (1.0 + 1.0 / 4.0))  # 2.5
    # teleport back and re-cross: no second bonus, progress reward instead
    ep.state.position = np.array([3.8, 0.0])
    out2 = ep.step((2.0, 0.0))
    assert out2.checkpoint is None
    assert abs(out2.reward) < 1.0


def test_progress_reward_telescopes():
    ep = Episode(Arena(), seed=5)
    obs0 = ep.reset()
    total = 0.0
    for _ in range(4):  # rotate in place toward +y (4 * omega_max * dt = pi/2)
        out = ep.step((0.0, ep.config.omega_max))
        total += out.reward
    for _ in range(20):  # drive along x ~ 0: no checkpoints, no obstacles
        out = ep.step((1.0, 0.0))
        assert not out.terminal
        assert out.checkpoint is None
        total += out.reward
    assert total == pytest.approx(obs0.distance - out.observation.distance, abs=1e-9)


def test_out_of_bounds_and_timeout():
    ep = Episode(Arena(), seed=2)
    ep.reset()
    ep.state.heading = np.pi / 2  # straight at the top wall
    out = None
    for _ in range(60):
        out = ep.step((2.0, 0.0))
        if out.terminal:
            break
    assert out.cause == OUT_OF_BOUNDS and out.reward == -2.0

    short = Episode(Arena(), SimConfig(horizon=3), seed=2)
    short.reset()
    for _ in range(3):
        out = short.step((0.0, 0.0))
    assert out.cause == TIMEOUT and out.reward == -2.0 and out.terminal


def test_step_after_terminal_rejected():
    short = Episode(Arena(), SimConfig(horizon=1), seed=0)
    short.reset()
    short.step((0.0, 0.0))
    with pytest.raises(RuntimeError):
        short.step((0.0, 0.0))


def test_action_clamped():
    ep = Episode(Arena(), seed=0)
    ep.reset()
    ep.step((99.0, -99.0))
    assert ep.state.v_x == ep.config.v_max
    assert ep.state.omega == -ep.config.omega_max


def test_wrap_angle_interval():
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)
    assert wrap_angle(3 * np.pi / 2) == pytest.approx(-np.pi / 2)
    arr = wrap_angle(np.array([0.0, 2 * np.pi, -3 * np.pi]))
    assert np.allclose(arr, [0.0, 0.0, np.pi])


def test_heading_toward_center_at_reset():
    ep = Episode(Arena(), seed=0)
    ep.reset()
    assert ep.state.heading == pytest.approx(0.0)  # center is straight downrange
