import numpy as np
import pytest
from hypothesis import given, strategies as st

from crossdex.numcore import (
    Adam, AdamState, DimensionError, GraphError, SingularMatrixError, Tensor,
    adam_step, add_bias_column, parameter, solve_least_squares,
)
from crossdex.numcore import tensor as ops

from gradcheck import check_gradients


# -- forward values -------------------------------------------------------------

def test_matmul_identity():
    v = np.array([1.5, -2.0, 3.25])
    assert np.array_equal(ops.matmul(np.eye(3), v).data, v)


def test_activation_fixed_points():
    assert ops.tanh(0.0).item() == 0.0
    assert ops.sigmoid(0.0).item() == 0.5
    assert ops.relu(-3.0).item() == 0.0


def test_sigmoid_extremes_do_not_overflow():
    y = ops.sigmoid(np.array([-800.0, 800.0])).data
    assert np.all(np.isfinite(y))
    assert y[0] == 0.0 and y[1] == 1.0


def test_conv1d_hand_example():
    assert np.array_equal(ops.conv1d([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0]).data, [6.0, 9.0])


def test_conv1d_valid_length_and_channels():
    x = np.random.default_rng(0).normal(size=(2, 3, 30))
    k = np.ones((16, 3, 13))
    out = ops.conv1d(x, k)
    assert out.shape == (2, 16, 18)
    # each output is the plain window sum over all channels
    assert np.isclose(out.data[1, 4, 5], x[1, :, 5:18].sum())


def test_shape_errors_name_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        ops.matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(DimensionError, match="kernel width"):
        ops.conv1d(np.ones(5), np.ones(7))
    with pytest.raises(DimensionError):
        ops.add(np.ones(3), np.ones(4))


def test_concat_and_slice_values():
    a, b = Tensor([1.0, 2.0]), Tensor([3.0])
    assert np.array_equal(ops.concat([a, b]).data, [1.0, 2.0, 3.0])
    assert np.array_equal(ops.take(Tensor(np.arange(5.0)), slice(1, 3)).data, [1.0, 2.0])


# -- backward ----------------------------------------------------------------------

def test_square_gradient():
    x = parameter(3.0)
    ops.square(x).backward()
    assert x.grad == 6.0


def test_sum_tanh_gradient_is_ones():
    x = parameter(np.zeros(4))
    ops.sum(ops.tanh(x)).backward()
    assert np.array_equal(x.grad, np.ones(4))


def test_non_scalar_loss_rejected():
    with pytest.raises(GraphError):
        ops.tanh(parameter(np.zeros(3))).backward()


def test_constants_receive_no_gradient():
    x = parameter(np.ones(3))
    c = Tensor(np.full(3, 2.0))
    ops.sum(ops.mul(x, c)).backward()
    assert c.grad is None
    assert np.array_equal(x.grad, [2.0, 2.0, 2.0])


def test_shared_node_accumulates():
    x = parameter(2.0)
    y = ops.mul(x, x)
    ops.add(y, y).backward()  # d/dx 2x^2 = 4x
    assert x.grad == 8.0


def _random_op_case(op, rng):
    """Build (params, loss_fn) exercising one op with broadcasting where relevant."""
    a = parameter(rng.normal(size=(3, 4)), name="a")
    b = parameter(rng.normal(size=(4,)), name="b")
    w = Tensor(rng.normal(size=(3, 4)))
    cases = {
        "matmul": ([a, parameter(rng.normal(size=(4, 2)), name="m")],
                   lambda ps: ops.sum(ops.square(ops.matmul(ps[0], ps[1])))),
        "add": ([a, b], lambda ps: ops.sum(ops.mul(ops.add(ps[0], ps[1]), w))),
        "sub": ([a, b], lambda ps: ops.sum(ops.mul(ops.sub(ps[0], ps[1]), w))),
        "mul": ([a, b], lambda ps: ops.sum(ops.mul(ops.mul(ps[0], ps[1]), w))),
        "tanh": ([a], lambda ps: ops.sum(ops.mul(ops.tanh(ps[0]), w))),
        "sigmoid": ([a], lambda ps: ops.sum(ops.mul(ops.sigmoid(ps[0]), w))),
        "relu": ([a], lambda ps: ops.sum(ops.mul(ops.relu(ps[0]), w))),
        "exp": ([a], lambda ps: ops.sum(ops.mul(ops.exp(ps[0]), w))),
        "square": ([a], lambda ps: ops.sum(ops.mul(ops.square(ps[0]), w))),
        "softplus": ([a], lambda ps: ops.sum(ops.mul(ops.softplus(ps[0]), w))),
        "slice": ([a], lambda ps: ops.sum(ops.square(ops.take(ps[0], (slice(None), slice(1, 3)))))),
        "concat": ([a, b], lambda ps: ops.sum(ops.square(ops.concat([ps[0], ops.reshape(ps[1], (1, 4))], axis=0)))),
        "sum": ([a], lambda ps: ops.sum(ops.square(ops.sum(ps[0], axis=1)))),
        "mean": ([a], lambda ps: ops.sum(ops.square(ops.mean(ps[0], axis=0)))),
        "conv1d": ([parameter(rng.normal(size=(2, 3, 9)), name="x"),
                    parameter(rng.normal(size=(4, 3, 3)), name="k"),
                    parameter(rng.normal(size=(4,)), name="kb")],
                   lambda ps: ops.sum(ops.square(ops.conv1d(ps[0], ps[1], ps[2])))),
    }
    params, fn = cases[op]
    return params, lambda: fn(params)


OPS = ["matmul", "add", "sub", "mul", "tanh", "sigmoid", "relu", "exp", "square",
       "softplus", "slice", "concat", "sum", "mean", "conv1d"]


@pytest.mark.parametrize("op", OPS)
def test_op_gradients_match_finite_differences(op):
    for seed in range(100):
        rng = np.random.default_rng(seed)
        params, loss_fn = _random_op_case(op, rng)
        check_gradients(params, loss_fn, rng, coords_per_param=3)


def test_three_layer_composition_gradcheck():
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        W1 = parameter(rng.normal(size=(5, 4)), name="W1")
        W2 = parameter(rng.normal(size=(4, 6)), name="W2")
        W3 = parameter(rng.normal(size=(6, 2)), name="W3")
        X = Tensor(rng.normal(size=(7, 5)))

        def loss():
            h = ops.tanh(ops.matmul(X, W1))
            h = ops.sigmoid(ops.matmul(h, W2))
            return ops.mean(ops.square(ops.matmul(h, W3)))

        check_gradients([W1, W2, W3], loss, rng, coords_per_param=24)


# -- adam -------------------------------------------------------------------------

def test_adam_first_step_is_sign_of_gradient():
    p = np.array([0.3, -1.0, 5.0])
    g = np.array([2.0, -0.5, 1e-3])
    before = p.copy()
    state = AdamState(lr=0.01)
    adam_step([p], [g], state)
    assert state.step_count == 1
    assert np.allclose(p - before, -0.01 * np.sign(g), atol=0.01 * 1e-6 * 1.1)


def test_adam_zero_gradient_is_fixed_point():
    p = np.array([1.0, 2.0])
    state = AdamState()
    for _ in range(50):
        adam_step([p], [np.zeros(2)], state)
    assert np.array_equal(p, [1.0, 2.0])


def test_adam_equal_gradients_equal_updates():
    p, q = np.array([0.0]), np.array([0.0])
    state = AdamState()
    for k in range(10):
        g = np.array([np.sin(k) + 2.0])
        adam_step([p, q], [g, g.copy()], state)
    assert p[0] == q[0]


def test_adam_shape_mismatch():
    with pytest.raises(DimensionError):
        adam_step([np.zeros(3)], [np.zeros(2)], AdamState())


@given(st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6), min_size=1, max_size=8),
       st.floats(1e-4, 1.0))
def test_adam_first_step_bounded_by_lr(grads, lr):
    g = np.array(grads)
    p = np.zeros_like(g)
    adam_step([p], [g], AdamState(lr=lr))
    assert np.all(np.abs(p) <= lr * (1 + 1e-6))


def test_adam_wrapper_minimises_quadratic():
    x = parameter(np.array([3.0, -2.0]))
    opt = Adam([x], lr=0.05)
    for _ in range(2000):
        opt.zero_grad()
        ops.sum(ops.square(x)).backward()
        opt.step()
    assert np.all(np.abs(x.data) < 1e-3)


# -- least squares ---------------------------------------------------------------

def test_lstsq_exact_fit():
    W = solve_least_squares([[1.0], [2.0]], [[2.0], [4.0]])
    assert np.allclose(W, [[2.0]])


def test_lstsq_identity_design():
    Y = np.random.default_rng(3).normal(size=(4, 2))
    assert np.allclose(solve_least_squares(np.eye(4), Y), Y, atol=1e-14)


def test_lstsq_residual_orthogonality():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(50, 5))
    Y = rng.normal(size=(50, 3))
    W = solve_least_squares(X, Y)
    resid = X.T @ (Y - X @ W)
    assert np.abs(resid).max() < 1e-8 * np.abs(X.T @ Y).max()


def test_lstsq_row_permutation_invariance():
    rng = np.random.default_rng(8)
    X = add_bias_column(rng.normal(size=(40, 6)))
    Y = rng.normal(size=(40, 2))
    perm = rng.permutation(40)
    assert np.allclose(solve_least_squares(X, Y), solve_least_squares(X[perm], Y[perm]), atol=1e-8)


def test_lstsq_rank_deficient_needs_fallback():
    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    Y = np.array([1.0, 2.0, 3.0])
    with pytest.raises(SingularMatrixError):
        solve_least_squares(X, Y)
    for fallback in ("ridge", "min_norm"):
        W = solve_least_squares(X, Y, fallback=fallback)
        assert np.allclose(X @ W, Y, atol=1e-6)
    # minimum-norm solution of x1 + 2 x2 = 1 is (1, 2) / 5
    assert np.allclose(solve_least_squares(X, Y, fallback="min_norm"), [0.2, 0.4], atol=1e-14)
    with pytest.raises(ValueError):
        solve_least_squares(X, Y, fallback="pinv")


def test_lstsq_underdetermined_fallbacks_interpolate():
    rng = np.random.default_rng(9)
    X = add_bias_column(rng.normal(size=(30, 30)))  # 31 unknowns, 30 equations
    Y = rng.normal(size=(30, 30))
    assert np.abs(X @ solve_least_squares(X, Y, fallback="ridge") - Y).max() < 1e-5
    assert np.abs(X @ solve_least_squares(X, Y, fallback="min_norm") - Y).max() < 1e-10
