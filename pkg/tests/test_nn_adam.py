import numpy as np

from uavguard.nn import Adam


def test_zero_gradient_leaves_params():
    p = {"w": np.array([1.0, -2.0])}
    opt = Adam(p, lr=0.01)
    opt.step(p, {"w": np.zeros(2)})
    assert np.array_equal(p["w"], [1.0, -2.0])


def test_constant_gradient_step_approaches_lr_sign():
    p = {"w": np.array([0.0])}
    opt = Adam(p, lr=0.01)
    g = {"w": np.array([3.7])}
    prev = p["w"].copy()
    for _ in range(500):
        prev = p["w"].copy()
        opt.step(p, g)
    # with constant g, mhat/sqrt(vhat) -> sign(g)
    assert abs((prev - p["w"])[0] - 0.01 * np.sign(3.7)) < 1e-4


def test_scalar_three_steps_match_hand_recurrence():
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    p = {"w": np.array([0.5])}
    opt = Adam(p, lr=lr, beta1=b1, beta2=b2, eps=eps)
    grads = [0.3, -0.2, 0.7]

    w = 0.5
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        w -= lr * mhat / (np.sqrt(vhat) + eps)

    for g in grads:
        opt.step(p, {"w": np.array([g])})
    assert abs(p["w"][0] - w) < 1e-7


def test_non_finite_gradient_skips_step():
    p = {"w": np.array([1.0])}
    opt = Adam(p, lr=0.1)
    ok = opt.step(p, {"w": np.array([np.nan])})
    assert not ok
    assert opt.skipped == 1
    assert p["w"][0] == 1.0
    assert opt.t == 0
