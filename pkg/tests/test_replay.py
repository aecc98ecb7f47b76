import numpy as np
import pytest
from scipy import stats

from uavguard.ddpg import BufferNotReady, FrameStore, ReplayBuffer, SumTree


def filled_buffer(n, priorities=None, frame_shape=(4, 3), warmup=1):
    buf = ReplayBuffer(64, frame_shape, alpha=1.0, warmup=warmup)
    for i in range(n):
        fid = buf.add_frame(np.full(frame_shape, i, dtype=np.float32))
        buf.add((fid,) * 5, (fid,) * 5, (0.0, 1.0), (0.0, 1.0), (0.0, 0.0), 0.0, False)
    if priorities is not None:
        # alpha=1 and eps=1e-3 folded out: set tree values directly
        for i, p in enumerate(priorities):
            buf.tree.set(i, p)
    return buf


def test_sum_tree_matches_flat_oracle():
    rng = np.random.default_rng(0)
    tree = SumTree(16)
    flat = np.zeros(16)
    for _ in range(300):
        leaf = int(rng.integers(0, 16))
        val = float(rng.uniform(0.1, 5.0))
        tree.set(leaf, val)
        flat[leaf] = val
        assert tree.total == pytest.approx(flat.sum(), rel=1e-12)
        # every prefix value retrieves the leaf the flat cumsum says it should
        v = float(rng.uniform(0, flat.sum()))
        expect = int(np.searchsorted(np.cumsum(flat), v, side="right"))
        assert tree.retrieve(v) == expect


def test_tree_probabilities_normalize():
    buf = filled_buffer(10, priorities=np.arange(1.0, 11.0))
    probs = buf.tree.leaf_values(10) / buf.tree.total
    assert abs(probs.sum() - 1.0) < 1e-9


def test_positive_priority_enforced():
    tree = SumTree(4)
    with pytest.raises(ValueError):
        tree.set(0, 0.0)


def test_uniform_priorities_sample_uniformly():
    buf = filled_buffer(10)
    rng = np.random.default_rng(42)
    counts = np.zeros(10)
    for _ in range(1000):
        idx, _, _ = buf.sample(100, beta=0.0, rng=rng)
        np.add.at(counts, idx, 1)
    # 1e5 proportional draws over equal priorities: chi-square should not reject
    chi = stats.chisquare(counts)
    assert chi.pvalue > 0.01


def test_two_priority_frequencies():
    buf = filled_buffer(2, priorities=[1.0, 3.0])
    rng = np.random.default_rng(7)
    counts = np.zeros(2)
    for _ in range(1000):
        idx, _, _ = buf.sample(100, beta=0.0, rng=rng)
        np.add.at(counts, idx, 1)
    freq = counts / counts.sum()
    assert abs(freq[0] - 0.25) < 0.02
    assert abs(freq[1] - 0.75) < 0.02


def test_importance_weight_ratio_at_beta_one():
    buf = filled_buffer(2, priorities=[1.0, 3.0])
    rng = np.random.default_rng(3)
    while True:
        idx, weights, _ = buf.sample(32, beta=1.0, rng=rng)
        if len(set(idx.tolist())) == 2:
            break
    w_low = weights[idx == 0][0]  # rarer sample gets the larger weight
    w_high = weights[idx == 1][0]
    assert w_low / w_high == pytest.approx(3.0, rel=1e-9)
    assert weights.max() == pytest.approx(1.0)


def test_new_transitions_get_max_priority():
    buf = filled_buffer(4)
    buf.update_priorities([0], [10.0])  # max priority becomes 10 + eps
    fid = buf.add_frame(np.zeros((4, 3), np.float32))
    buf.add((fid,) * 5, (fid,) * 5, (0, 1), (0, 1), (0, 0), 0.0, False)
    assert buf.tree.get(4) == pytest.approx(buf.max_priority**buf.alpha)
    assert buf.max_priority == pytest.approx(10.0 + buf.priority_eps)


def test_sample_before_warmup_rejected():
    buf = ReplayBuffer(32, (4, 3), warmup=10)
    fid = buf.add_frame(np.zeros((4, 3), np.float32))
    buf.add((fid,) * 5, (fid,) * 5, (0, 1), (0, 1), (0, 0), 0.0, False)
    with pytest.raises(BufferNotReady):
        buf.sample(1, 0.4, np.random.default_rng(0))


def test_frame_store_stacks_and_eviction_guard():
    store = FrameStore(8, (2, 2))
    ids = [store.add(np.full((2, 2), i, np.float32)) for i in range(6)]
    stack = store.stack(ids[1:6])
    assert np.array_equal(stack[:, 0, 0], [1, 2, 3, 4, 5])
    for i in range(6, 20):
        store.add(np.full((2, 2), i, np.float32))
    with pytest.raises(RuntimeError, match="evicted"):
        store.stack(ids[:1])


def test_sampled_batch_reconstructs_stacks():
    buf = ReplayBuffer(16, (2, 2), warmup=1)
    fids = [buf.add_frame(np.full((2, 2), i, np.float32)) for i in range(7)]
    ids = tuple(fids[:5])
    ids1 = ids[1:] + (fids[5],)
    buf.add(ids, ids1, (0.1, 2.0), (0.2, 1.9), (1.0, 0.5), 0.3, False)
    _, _, batch = buf.sample(1, 0.4, np.random.default_rng(0))
    assert np.array_equal(batch["images_s"][0, :, 0, 0], [0, 1, 2, 3, 4])
    assert np.array_equal(batch["images_s1"][0, :, 0, 0], [1, 2, 3, 4, 5])
