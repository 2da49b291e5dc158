"""Loss values, schedule, optimizer oracle, metrics, and loop determinism."""

import dataclasses
import warnings

import numpy as np
import pytest

from hqcg import (
    ConfigError,
    ShapeError,
    TrainConfig,
    UndefinedMetricError,
    accuracy,
    adamw_step,
    bce_loss,
    build_mlp,
    cosine_lr,
    macro_auc,
    mlp_forward_batch,
    mlp_gradients,
    roc_auc,
    train_loop,
)
from hqcg.data import Sample
from oracles import pairwise_auc, reference_adamw


def test_bce_half_probabilities():
    assert abs(bce_loss([0.5, 0.5], [1, 0]) - np.log(2)) < 1e-12


def test_bce_exact_predictions_near_zero():
    assert bce_loss([1.0, 0.0], [1, 0]) < 1e-6


def test_bce_hand_value():
    # -(log 0.9 + log 0.9) / 2
    expected = -np.log(0.9)
    assert abs(bce_loss([0.9, 0.1], [1, 0]) - expected) < 1e-12


def test_bce_shape_mismatch():
    with pytest.raises(ShapeError):
        bce_loss([0.5], [1, 0])


def test_cosine_endpoints_and_midpoint():
    assert cosine_lr(0, 100, 0.01) == 0.01
    assert abs(cosine_lr(100, 100, 0.01)) < 1e-18
    assert abs(cosine_lr(50, 100, 0.01) - 0.005) < 1e-15


def test_cosine_validation():
    with pytest.raises(ConfigError):
        cosine_lr(0, 0, 0.01)
    with pytest.raises(ConfigError):
        cosine_lr(5, 4, 0.01)


def test_adamw_zero_grad_zero_decay_is_identity():
    cfg = TrainConfig(weight_decay=0.0)
    theta = np.array([1.0, -2.0])
    zeros = np.zeros(2)
    out, _, _ = adamw_step(theta, zeros, zeros, zeros, 1, cfg)
    np.testing.assert_array_equal(out, theta)


def test_adamw_first_step_hand_value():
    cfg = TrainConfig(lr_max=0.01, weight_decay=0.0)
    theta = np.array([1.0])
    g = np.array([0.5])
    out, m1, m2 = adamw_step(theta, g, np.zeros(1), np.zeros(1), 1, cfg)
    # mhat = 0.5, vhat = 0.25 -> step = 0.01 * 0.5 / (0.5 + 1e-8)
    assert abs(out[0] - (1.0 - 0.01 * 0.5 / (0.5 + 1e-8))) < 1e-15
    assert abs(out[0] - 0.99) < 1e-7


def test_adamw_pure_decay():
    cfg = TrainConfig(lr_max=0.01, weight_decay=0.1)
    theta = np.array([1.0])
    zeros = np.zeros(1)
    out, _, _ = adamw_step(theta, zeros, zeros, zeros, 1, cfg)
    assert abs(out[0] - 0.999) < 1e-15


def test_adamw_matches_independent_reference():
    rng = np.random.default_rng(3)
    cfg = TrainConfig(lr_max=0.007, weight_decay=0.03, beta1=0.85, beta2=0.99)
    for trial in range(100):
        p = int(rng.integers(1, 20))
        theta = rng.normal(size=p)
        grads = rng.normal(size=p)
        m1 = np.abs(rng.normal(size=p)) * 0.1
        m2 = np.abs(rng.normal(size=p)) * 0.1
        t = int(rng.integers(1, 50))
        lr = float(rng.uniform(1e-4, 0.05))
        got = adamw_step(theta, grads, m1, m2, t, cfg, lr=lr)
        want = reference_adamw(theta, grads, m1, m2, t, lr,
                               cfg.beta1, cfg.beta2, cfg.eps_adam,
                               cfg.weight_decay)
        for a, b in zip(got, want):
            np.testing.assert_allclose(a, b, atol=1e-12, rtol=0)


def test_accuracy_examples():
    assert accuracy([[0.9, 0.1]], [[1, 0]]) == 1.0
    assert accuracy([[0.1, 0.9]], [[1, 0]]) == 0.0
    assert accuracy([[0.9, 0.4]], [[1, 1]]) == 0.5


def test_roc_auc_perfect_and_partial():
    assert roc_auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.9, 0.6, 0.4, 0.1], [1, 0, 1, 0]) == 0.75


def test_roc_auc_all_ties():
    assert roc_auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5


def test_roc_auc_single_class_undefined():
    with pytest.raises(UndefinedMetricError):
        roc_auc([0.5, 0.6], [1, 1])


def test_roc_auc_monotone_invariance():
    rng = np.random.default_rng(4)
    scores = rng.normal(size=40)
    labels = rng.random(40) < 0.4
    if labels.all() or not labels.any():
        labels[0] = True
        labels[1] = False
    base = roc_auc(scores, labels)
    assert roc_auc(3 * scores + 7, labels) == base
    assert abs(roc_auc(np.tanh(scores), labels) - base) < 1e-12


def test_roc_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(5)
    for _ in range(20):
        scores = np.round(rng.normal(size=30), 1)  # rounding forces ties
        labels = rng.random(30) < 0.5
        if labels.all() or not labels.any():
            continue
        assert abs(roc_auc(scores, labels) - pairwise_auc(scores, labels)) < 1e-12


def test_macro_auc_skips_degenerate_class():
    probs = np.array([[0.9, 0.2], [0.1, 0.4], [0.8, 0.3]])
    labels = np.array([[1, 1], [0, 1], [1, 1]])  # class 1 all-positive
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        value = macro_auc(probs, labels)
    assert value == 1.0
    assert any("skipped" in str(w.message) for w in caught)


def _tiny_dataset(rng, count=24, length=8, classes=2):
    samples = []
    for i in range(count):
        labels = np.zeros(classes, dtype=np.int64)
        labels[i % classes] = 1
        values = rng.normal(size=length) + 2.0 * labels[0]
        samples.append(Sample(f"t{i:03d}", values, labels))
    return samples


def test_train_loop_zero_epochs():
    rng = np.random.default_rng(6)
    samples = _tiny_dataset(rng)
    model = build_mlp(8, 4, 2, seed=0)
    before = model.theta.copy()
    cfg = TrainConfig(epochs=0, batch_size=8, seed=0)
    model, report = train_loop(model, samples, samples, cfg,
                               mlp_gradients, mlp_forward_batch)
    assert report.records == []
    np.testing.assert_array_equal(model.theta, before)


def test_train_loop_determinism():
    rng = np.random.default_rng(7)
    samples = _tiny_dataset(rng)
    cfg = TrainConfig(epochs=3, batch_size=8, seed=5)

    def run():
        model = build_mlp(8, 4, 2, seed=1)
        return train_loop(model, samples[:16], samples[16:], cfg,
                          mlp_gradients, mlp_forward_batch)

    model_a, report_a = run()
    model_b, report_b = run()
    np.testing.assert_array_equal(model_a.theta, model_b.theta)
    assert report_a.records == report_b.records


def test_train_loop_metrics_all_finite():
    rng = np.random.default_rng(8)
    samples = _tiny_dataset(rng)
    cfg = TrainConfig(epochs=4, batch_size=8, seed=2)
    model = build_mlp(8, 4, 2, seed=3)
    _, report = train_loop(model, samples[:16], samples[16:], cfg,
                           mlp_gradients, mlp_forward_batch)
    assert len(report.records) == 4
    for record in report.records:
        for name, value in dataclasses.asdict(record).items():
            assert np.isfinite(value), name
        assert record.train_loss >= 0 and record.val_loss >= 0


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(lr_max=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(beta1=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
