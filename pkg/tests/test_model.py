import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracspread.errors import DomainError, ValidationError
from fracspread.model import (
    ModelSpec,
    eval_reaction,
    fd_jacobian,
    jacobian_at_zero,
    kpp_constants,
    lipschitz_bound,
    preset_model,
    validate_hypotheses,
)


def test_reaction_vanishes_at_zero(preset):
    assert np.array_equal(eval_reaction(preset, np.zeros(2)), np.zeros(2))


@pytest.mark.parametrize("s, expected", [((1.0, 1.0), (0.0, 0.0)), ((0.0, 1.0), (1.0, -1.0)), ((0.5, 0.0), (-0.25, 0.5))])
def test_reaction_hand_values(preset, s, expected):
    # f_1 = s_2 - s_1^2, f_2 = s_1 - s_2^2
    np.testing.assert_allclose(eval_reaction(preset, np.array(s)), expected, atol=0)


def test_reaction_rejects_negative_state(preset):
    with pytest.raises(DomainError):
        eval_reaction(preset, np.array([-1e-3, 0.5]))


def test_reaction_linear_extension_above_box(preset):
    # above Lambda the power is continued with slope (1 + delta) Lambda^delta = 4
    lam = preset.lambda_big
    f_in = eval_reaction(preset, np.array([lam, 0.0]))[0]
    f_out = eval_reaction(preset, np.array([lam + 0.5, 0.0]))[0]
    assert f_in == pytest.approx(-4.0)
    assert f_out == pytest.approx(-4.0 - 4.0 * 0.5)


def test_jacobian_at_zero_examples():
    assert np.array_equal(jacobian_at_zero(preset_model()), [[0, 1], [1, 0]])
    m = ModelSpec(alpha=(0.5, 0.5), K=((0, 2), (3, 0)), r=(1, -1), q=(1, 1), delta=1.0, lambda_big=6.0)
    assert np.array_equal(jacobian_at_zero(m), [[1, 2], [3, -1]])
    scalar = ModelSpec(alpha=(0.5,), K=((0,),), r=(2,), q=(1,), delta=1.0, lambda_big=3.0)
    assert np.array_equal(jacobian_at_zero(scalar), [[2]])


def test_fd_jacobian_matches_at_zero(preset):
    # one-sided region: use a point slightly inside the box so the clip at 0 is inactive
    J = fd_jacobian(preset, np.full(2, 1e-5), h=1e-7)
    np.testing.assert_allclose(J, jacobian_at_zero(preset), rtol=1e-6, atol=1e-4)


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        (dict(alpha=(1.0, 1.0)), "smallest exponent"),
        (dict(alpha=(1.0, 1.5)), r"\(0, 1\]"),
        (dict(alpha=(0.5, 1.0)), "nonincreasing"),
        (dict(lambda_big=0.5), "Lambda"),
        (dict(K=((0.0, 1.0), (0.0, 0.0))), "cooperativity"),
        (dict(K=((1.0, 1.0), (1.0, 0.0))), "zero diagonal"),
        (dict(delta=0.5), "threshold"),
        (dict(lambda_big=1.01, q=(0.5, 0.5)), "F\\(Lambda"),
    ],
)
def test_model_invariants(kwargs, msg):
    with pytest.raises(ValidationError, match=msg):
        preset_model().replace(**kwargs)


def test_hypotheses_pass_for_preset(preset):
    rep = validate_hypotheses(preset, n_samples=1000, seed=0)
    assert rep.ok, rep.failures()
    assert rep.h1_lambda1 == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rep.h2_corner_values, [-2.0, -2.0])
    assert rep.cooperativity_min > 0


def test_hypothesis_h1_fails_for_stable_linearization(preset):
    m = preset.replace(r=[-3.0, -3.0])
    rep = validate_hypotheses(m, n_samples=200, seed=1)
    assert not rep.passed["H1"]
    assert rep.h1_lambda1 == pytest.approx(-2.0, abs=1e-10)
    assert rep.failures() == ["H1"]


def test_hypotheses_deterministic_given_seed(preset):
    a = validate_hypotheses(preset, n_samples=300, seed=7)
    b = validate_hypotheses(preset, n_samples=300, seed=7)
    assert a.h3_min_margin == b.h3_min_margin and a.h4_min_margin == b.h4_min_margin


def test_kpp_constants_and_lipschitz(preset):
    assert kpp_constants(preset) == (1.0, 2.0)
    assert lipschitz_bound(preset) == 5.0


@settings(max_examples=60, deadline=None)
@given(
    s=st.lists(st.floats(0.0, 2.0), min_size=2, max_size=2),
)
def test_kpp_sandwich_holds_pointwise(s):
    m = preset_model()
    s = np.array(s)
    c1, c2 = kpp_constants(m)
    gap = jacobian_at_zero(m) @ s - eval_reaction(m, s)
    assert np.all(gap >= c1 * s ** 2 - 1e-12)
    assert np.all(gap <= c2 * np.linalg.norm(s) ** 2 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(s=st.lists(st.floats(0.01, 1.99), min_size=2, max_size=2))
def test_cross_derivatives_positive(s):
    J = fd_jacobian(preset_model(), np.array(s))
    assert J[0, 1] > 0 and J[1, 0] > 0


def test_model_hash_stable_and_sensitive(preset):
    assert preset.model_hash() == preset_model().model_hash()
    assert preset.model_hash() != preset.replace(delta=2.0).model_hash()
