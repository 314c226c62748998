import numpy as np
import pytest

from lrt import optim


def test_schedule_halves_every_period():
    cfg = optim.TrainConfig(lr=0.5, halving_period=3)
    assert [cfg.rate(e) for e in range(7)] == [0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.125]


def test_config_validation():
    with pytest.raises(ValueError):
        optim.TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        optim.TrainConfig(lr=-1)
    with pytest.raises(ValueError):
        optim.TrainConfig(init_mode="zeros")


def test_adam_first_step_is_lr_sign():
    # bias correction makes the first step lr * g / (|g| + eps)
    p = {"x": np.array([1.0, -2.0, 3.0])}
    opt = optim.Adam(p)
    opt.step({"x": np.array([0.5, -4.0, 0.0])}, lr=0.1)
    np.testing.assert_allclose(p["x"], [0.9, -1.9, 3.0], rtol=1e-7)


def test_adam_matches_reference_formula():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(70, 300))  # spans several update chunks
    ref = x.copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    opt = optim.Adam({"x": x}, 0.9, 0.999, 1e-8)
    for t in range(1, 4):
        g = rng.normal(size=x.shape)
        opt.step({"x": g}, 0.01)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref -= 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(x, ref, rtol=1e-12, atol=1e-15)


def test_adam_requires_contiguous():
    with pytest.raises(ValueError):
        optim.Adam({"x": np.zeros((4, 4)).T[::2]})


def test_minibatches_keep_remainder():
    batches = list(optim.minibatches(10, 4, np.random.default_rng(0)))
    assert [len(b) for b in batches] == [4, 4, 2]
    assert sorted(np.concatenate(batches)) == list(range(10))


def test_fit_minimizes_quadratic_and_is_seeded():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(64, 3))
    w_true = np.array([1.0, -2.0, 0.5])
    T = X @ w_true

    def run(seed):
        p = {"w": np.zeros(3)}

        def lg(params, xb, tb):
            r = xb @ params["w"] - tb
            return float((r ** 2).mean()), {"w": 2 * xb.T @ r / len(xb)}

        hist = optim.fit(p, lg, X, T, optim.TrainConfig(epochs=30, batch_size=8, lr=0.1, halving_period=10, seed=seed))
        return p["w"], hist

    w, hist = run(0)
    np.testing.assert_allclose(w, w_true, atol=1e-2)
    assert hist[-1] < hist[0]
    assert run(0)[1] == hist
    assert run(1)[1] != hist
