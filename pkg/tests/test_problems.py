import math

import numpy as np
import pytest

from zoopt.geometry import Box, Unconstrained
from zoopt.numkit import RngStream
from zoopt.problems import (TinyMlp, cw_loss, generate_victim, load_victim,
                            make_attack_problem, make_counterexample_lp,
                            make_logistic, make_nonconvex, make_quadratic,
                            mlp_forward, tanh_reparam)

# frozen from the first verified run of the pinned victim on pinned input 0
GOLDEN_LOGITS_INPUT0 = [-0.4695104281778938, 0.3026733367354548,
                        -0.2165045170088614, -0.7955140158589808]


def test_counterexample():
    prob = make_counterexample_lp()
    assert prob.objective.peek(np.array([0.5, 0.5])) == -1.5
    for x in (np.zeros(2), np.array([3.0, -1.0])):
        assert np.array_equal(prob.metadata.gradient(x), [-2.0, -1.0])
    assert prob.constraint.member(prob.x0)


def test_quadratic_identity_condition():
    prob = make_quadratic(3, condition=1.0, seed=5)
    x_star = prob.metadata.extra["x_star"]
    assert prob.objective.peek(x_star) == pytest.approx(0.0, abs=1e-30)
    y = x_star + np.array([1.0, -2.0, 0.5])
    assert prob.objective.peek(y) == pytest.approx(0.5 * (1 + 4 + 0.25), abs=1e-12)
    assert prob.metadata.f_star == 0.0


def test_quadratic_finite_sum_gradient_consistency():
    prob = make_quadratic(4, condition=3.0, seed=6, n_samples=12, noise=0.7)
    rng = RngStream(7)
    x = rng.normal(4)
    per_sample = np.mean([prob.metadata.sample_gradient(x, i)
                          for i in range(12)], axis=0)
    assert np.max(np.abs(per_sample - prob.metadata.gradient(x))) <= 1e-12
    # full loss minimized at x_star with the recorded value
    assert prob.objective.full_loss(prob.metadata.extra["x_star"]) == \
        pytest.approx(prob.metadata.f_star, abs=1e-12)


def test_logistic_at_zero():
    prob = make_logistic(25, 6, seed=8)
    for i in range(25):
        assert prob.objective.peek(np.zeros(6), i) == pytest.approx(math.log(2.0),
                                                                    abs=1e-15)
        feats = prob.metadata.extra["features"][i]
        label = prob.metadata.extra["labels"][i]
        got = prob.metadata.sample_gradient(np.zeros(6), i)
        assert np.allclose(got, -label * feats / 2.0, atol=1e-12)


def test_logistic_planted_beats_origin():
    for seed in range(100):
        prob = make_logistic(30, 5, seed=seed)
        assert prob.objective.full_loss(prob.comparator) < \
            prob.objective.full_loss(np.zeros(5))


def test_logistic_full_gradient_is_sample_average():
    prob = make_logistic(15, 4, seed=9)
    x = RngStream(10).normal(4) * 0.5
    avg = np.mean([prob.metadata.sample_gradient(x, i) for i in range(15)], axis=0)
    assert np.max(np.abs(avg - prob.metadata.gradient(x))) <= 1e-12


def test_nonconvex_reductions():
    quad_like = make_nonconvex(4, seed=11, eps=0.0)
    x_star = quad_like.metadata.extra["x_star"]
    assert quad_like.objective.peek(x_star) == pytest.approx(0.0, abs=1e-30)

    prob = make_nonconvex(4, seed=11, eps=0.1, omega=3.0)
    assert prob.metadata.grad_lip == pytest.approx(1.0 + 0.1 * 9.0, abs=1e-15)

    rng = RngStream(12)
    h = 1e-6
    for _ in range(100):
        x = rng.normal(4)
        grad = prob.metadata.gradient(x)
        fd = np.empty(4)
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            fd[i] = (prob.objective.peek(x + e) - prob.objective.peek(x - e)) / (2 * h)
        assert np.max(np.abs(grad - fd)) <= 1e-6

    boxed = make_nonconvex(4, seed=11, box_halfwidth=0.8)
    assert isinstance(boxed.constraint, Box)
    assert isinstance(prob.constraint, Unconstrained)


def test_mlp_zero_weights():
    model = TinyMlp(np.zeros((3, 2)), np.zeros(3), np.zeros((2, 3)), np.zeros(2))
    assert np.array_equal(mlp_forward(model, np.array([0.2, -0.1])), np.zeros(2))


def test_mlp_linear_selection():
    # tanh is identity to first order; tiny inputs pass through a picker matrix
    w1 = np.eye(3)[:2] * 1.0  # selects coords 0, 1
    model = TinyMlp(w1, np.zeros(2), np.eye(2), np.zeros(2))
    x = np.array([1e-9, -2e-9, 5.0])
    out = mlp_forward(model, x)
    assert np.allclose(out, [1e-9, -2e-9], atol=1e-18)


def test_mlp_golden_logits():
    model, inputs, labels = load_victim()
    assert np.allclose(mlp_forward(model, inputs[0]), GOLDEN_LOGITS_INPUT0,
                       atol=1e-12)


def test_victim_pinned_matches_generator():
    model, inputs, labels = load_victim()
    regen_model, regen_inputs, regen_labels = generate_victim()
    assert np.array_equal(model.w1, regen_model.w1)
    assert np.array_equal(model.b2, regen_model.b2)
    assert regen_labels == labels
    assert all(np.array_equal(a, b) for a, b in zip(inputs, regen_inputs))
    # every pinned input is classified as its label with a real margin
    for im, t in zip(inputs, labels):
        z = mlp_forward(model, im)
        assert int(np.argmax(z)) == t
        assert float(z[t] - np.delete(z, t).max()) >= 0.1


def test_cw_loss():
    assert cw_loss(np.array([2.0, 0.5]), 0) == 1.5
    assert cw_loss(np.array([0.5, 2.0]), 0) == 0.0
    assert cw_loss(np.array([0.5, 2.0]), 0, kappa=0.3) == -0.3
    with pytest.raises(ValueError):
        cw_loss(np.array([1.0]), 0)
    with pytest.raises(ValueError):
        cw_loss(np.array([1.0, 2.0]), 5)


def test_tanh_reparam_round_trip():
    rng = RngStream(13)
    for _ in range(1000):
        x = rng.uniform(6) * 0.98 - 0.49
        assert np.max(np.abs(tanh_reparam(np.zeros(6), x) - x)) <= 1e-12


def test_tanh_reparam_saturation_and_range():
    x = np.full(3, 0.1)
    out = tanh_reparam(np.full(3, 20.0), x)
    assert np.all(np.abs(out - 0.5) <= 1e-8)
    rng = RngStream(14)
    for _ in range(200):
        w = rng.normal(3) * 5.0
        x = rng.uniform(3) - 0.5
        assert np.all(np.abs(tanh_reparam(w, x)) < 0.5)
    with pytest.raises(ValueError):
        tanh_reparam(np.zeros(2), np.array([0.6, 0.0]))


def _victim():
    return load_victim()


def test_attack_constrained_at_zero():
    model, inputs, labels = _victim()
    prob = make_attack_problem(model, inputs, labels, lam=10.0)
    cw_sum = sum(cw_loss(mlp_forward(model, im), t)
                 for im, t in zip(inputs, labels))
    assert prob.objective.full_loss(np.zeros(16)) == \
        pytest.approx(10.0 * cw_sum / len(inputs), abs=1e-12)
    assert prob.distortion_fn(np.zeros(16)) == 0.0
    assert prob.success_count_fn(np.zeros(16)) == 0


def test_attack_box_is_image_intersection():
    model, inputs, labels = _victim()
    prob = make_attack_problem(model, inputs, labels)
    lo = np.max([-0.5 - im for im in inputs], axis=0)
    hi = np.min([0.5 - im for im in inputs], axis=0)
    assert np.array_equal(prob.constraint.lo, lo)
    assert np.array_equal(prob.constraint.hi, hi)
    assert prob.constraint.member(np.zeros(16))


def test_attack_objective_nonnegative_and_finite_sum_consistent():
    model, inputs, labels = _victim()
    prob = make_attack_problem(model, inputs[:4], labels[:4], lam=10.0)
    rng = RngStream(15)
    for _ in range(20):
        delta = prob.constraint.project(rng.normal(16) * 0.2)
        val = prob.objective.full_loss(delta)
        assert val >= 0.0
        brute = sum(prob.objective.peek(delta, i) for i in range(4)) / 4
        assert val == pytest.approx(brute, abs=1e-12)


def test_attack_unconstrained_mode():
    model, inputs, labels = _victim()
    prob = make_attack_problem(model, [inputs[0]], [labels[0]], lam=10.0,
                               mode="unconstrained")
    assert isinstance(prob.constraint, Unconstrained)
    w = np.zeros(16)
    want = 10.0 * cw_loss(mlp_forward(model, tanh_reparam(w, inputs[0])),
                          labels[0])
    assert prob.objective.peek(w, 0) == pytest.approx(want, rel=1e-9)
    assert prob.distortion_fn(w) <= 1e-12


def test_attack_modes_and_errors():
    model, inputs, labels = _victim()
    per_image = make_attack_problem(model, [inputs[0]], [labels[0]])
    universal = make_attack_problem(model, inputs, labels)
    assert per_image.tag == "attack-per-image" and per_image.n_images == 1
    assert universal.tag == "attack-universal" and universal.n_images == 10
    with pytest.raises(ValueError):
        make_attack_problem(model, [inputs[0]], [labels[0]], lam=0.0)
    with pytest.raises(ValueError):
        make_attack_problem(model, [np.full(16, 0.7)], [0])
    with pytest.raises(ValueError):
        make_attack_problem(model, [inputs[0]], [labels[0]], mode="bogus")
