import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from btfccl import tensor as T
from btfccl.errors import ConfigError, DimensionError, NonFiniteError
from btfccl.tensor import ParamStore, Tensor, grad_check


def naive_matmul(x, w):
    n, k = x.shape
    m = w.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            for p in range(k):
                out[i, j] += x[i, p] * w[p, j]
    return out


def naive_conv(x, kernel, dilation):
    """Direct same-padded dilated cross-correlation, one output value at a time."""
    n, m, c_in = x.shape
    k = kernel.shape[0]
    half = (k - 1) // 2
    out = np.zeros((n, m, kernel.shape[3]))
    for i in range(n):
        for j in range(m):
            for u in range(k):
                for v in range(k):
                    r = i + (u - half) * dilation
                    c = j + (v - half) * dilation
                    if 0 <= r < n and 0 <= c < m:
                        out[i, j] += x[r, c] @ kernel[u, v]
    return out


# -- affine ------------------------------------------------------------------

def test_affine_identity():
    y = T.affine(Tensor([1.0, 2.0]), Tensor(np.eye(2)), Tensor([0.0, 0.0]))
    np.testing.assert_array_equal(y.data, [1.0, 2.0])


def test_affine_weighted_sum():
    y = T.affine(Tensor([1.0, 1.0]), Tensor([[2.0], [3.0]]), Tensor([1.0]))
    np.testing.assert_array_equal(y.data, [6.0])


def test_affine_matches_triple_loop(rng):
    x, w, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2)), rng.normal(size=2)
    y = T.affine(Tensor(x), Tensor(w), Tensor(b))
    np.testing.assert_allclose(y.data, naive_matmul(x.astype(np.float32), w.astype(np.float32)) + b, atol=1e-6)


def test_affine_backward_reaches_all_arguments(rng):
    x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    w = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    b = Tensor(rng.normal(size=2), requires_grad=True)
    T.affine(x, w, b).sum().backward()
    np.testing.assert_allclose(b.grad, [3.0, 3.0])
    np.testing.assert_allclose(x.grad, np.tile(w.data.sum(axis=1), (3, 1)), rtol=1e-6)
    np.testing.assert_allclose(w.grad, np.tile(x.data.sum(axis=0)[:, None], (1, 2)), rtol=1e-6)


def test_affine_shape_error_reports_shapes():
    with pytest.raises(DimensionError, match=r"\(3,\).*\(4, 2\)"):
        T.affine(Tensor(np.ones(3)), Tensor(np.ones((4, 2))), Tensor(np.ones(2)))


# -- convolution ---------------------------------------------------------------

def test_conv_identity_kernel():
    x = np.random.default_rng(0).normal(size=(4, 4, 3))
    kernel = np.eye(3).reshape(1, 1, 3, 3)
    np.testing.assert_allclose(T.conv2d_dilated(Tensor(x), Tensor(kernel)).data, x.astype(np.float32))


def test_conv_zero_kernel():
    x = np.random.default_rng(0).normal(size=(5, 5, 2))
    out = T.conv2d_dilated(Tensor(x), Tensor(np.zeros((3, 3, 2, 4))), dilation=2)
    assert out.shape == (5, 5, 4)
    assert not out.data.any()


def test_conv_matches_nested_loops(rng):
    x = rng.normal(size=(5, 5, 3)).astype(np.float32)
    kernel = rng.normal(size=(3, 3, 3, 4)).astype(np.float32)
    out = T.conv2d_dilated(Tensor(x), Tensor(kernel), dilation=2)
    np.testing.assert_allclose(out.data, naive_conv(x, kernel, 2), atol=1e-5)


@pytest.mark.parametrize("k", [1, 3, 5, 7])
@pytest.mark.parametrize("dilation", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2, 6])
def test_conv_preserves_spatial_shape(k, dilation, n):
    x = Tensor(np.ones((n, n, 2)))
    assert T.conv2d_dilated(x, Tensor(np.ones((k, k, 2, 3))), dilation).shape == (n, n, 3)


def test_conv_rejects_even_kernel():
    with pytest.raises(ConfigError):
        T.conv2d_dilated(Tensor(np.ones((3, 3, 1))), Tensor(np.ones((2, 2, 1, 1))))


# -- activations -----------------------------------------------------------------

def test_sigmoid_at_zero():
    assert T.sigmoid(Tensor(0.0)).item() == 0.5


def test_softmax_uniform():
    np.testing.assert_allclose(T.softmax(Tensor(np.zeros(4))).data, [0.25] * 4)


def test_sigmoid_is_stable_for_large_inputs():
    out = T.sigmoid(Tensor([-1000.0, 1000.0])).data
    np.testing.assert_array_equal(out, [0.0, 1.0])


@pytest.mark.parametrize("x0,expected", [(0.7, 1.0), (-0.4, 0.0)])
def test_relu_gradient_matches_central_difference(x0, expected):
    x = Tensor([x0], requires_grad=True)
    T.relu(x).sum().backward()
    eps = 1e-3
    numeric = (max(x0 + eps, 0) - max(x0 - eps, 0)) / (2 * eps)
    assert x.grad[0] == expected
    assert numeric == pytest.approx(expected, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_softmax_is_a_distribution(values):
    out = T.softmax(Tensor(values)).data.astype(np.float64)
    assert (out >= 0).all()
    assert abs(out.sum() - 1.0) <= 1e-6


# -- max pooling -------------------------------------------------------------------

def test_max_pool_singleton():
    x = Tensor([[1.0, -2.0]], requires_grad=True)
    out = T.reduce_max_pool(x, axis=0)
    np.testing.assert_array_equal(out.data, [1.0, -2.0])


def test_max_pool_tie_routes_to_first():
    x = Tensor([[3.0], [3.0]], requires_grad=True)
    out = T.reduce_max_pool(x, axis=0)
    out.sum().backward()
    assert out.item() == 3.0
    np.testing.assert_array_equal(x.grad, [[1.0], [0.0]])


def test_max_pool_matches_direct_max(rng):
    data = rng.normal(size=(4, 6))
    out = T.reduce_max_pool(Tensor(data), axis=0)
    expected = [max(data[i, j] for i in range(4)) for j in range(6)]
    np.testing.assert_allclose(out.data, np.float32(expected))


def test_max_pool_empty_set():
    with pytest.raises(ValueError):
        T.reduce_max_pool(Tensor(np.zeros((0, 3))), axis=0)


def test_span_max_matches_loops(rng):
    h = rng.normal(size=(5, 3))
    h[2] = h[1]  # force ties
    out = T.pairwise_span_max(Tensor(h)).data
    for i in range(5):
        for j in range(5):
            lo, hi = min(i, j), max(i, j)
            np.testing.assert_array_equal(out[i, j], h[lo:hi + 1].max(axis=0).astype(np.float32))


# -- gradient checking -----------------------------------------------------------------

def test_grad_check_linear():
    params = ParamStore()
    x = params.add("x", [1.0, -2.0, 3.0])
    assert grad_check(lambda: x.sum(), params, eps=1e-4) < 1e-9


def test_grad_check_quadratic():
    params = ParamStore()
    x = params.add("x", [1.0, 2.0])
    (x * x).sum().backward()
    np.testing.assert_allclose(x.grad, [2.0, 4.0], atol=1e-6)
    assert grad_check(lambda: (x * x).sum(), params, eps=1e-4) < 1e-6
    # parameters come back in float32 with cleared gradients
    assert x.data.dtype == np.float32 and not x.grad.any()


def test_grad_check_rejects_bad_eps():
    params = ParamStore()
    x = params.add("x", [1.0])
    with pytest.raises(ValueError):
        grad_check(lambda: x.sum(), params, eps=0.1)


def test_grad_check_non_finite_loss():
    params = ParamStore()
    x = params.add("x", [0.0])
    with pytest.raises(NonFiniteError):
        grad_check(lambda: T.log(x).sum(), params)


PRIMITIVES = {
    "softmax": lambda a, b: (T.softmax(a) * b).sum(),
    "log_softmax": lambda a, b: (T.log_softmax(a) * b).sum(),
    "sigmoid": lambda a, b: (T.sigmoid(a) * b).sum(),
    "relu": lambda a, b: (T.relu(a) * b).sum(),
    "exp_log": lambda a, b: T.log(T.exp(a) + 1.0).sum() * b.sum(),
    "div_sqrt": lambda a, b: (a / T.sqrt(b * b + 1.0)).sum(),
    "matmul": lambda a, b: (a.reshape(2, 3) @ b.reshape(3, 2)).sum(),
    "transpose_getitem": lambda a, b: (a.reshape(2, 3).transpose()[1:, :] * b.reshape(3, 2)[1:]).sum(),
    "concat_stack": lambda a, b: (T.stack([a, b]) * T.concat([b, a]).reshape(2, 6)).sum(),
    "max": lambda a, b: T.reduce_max_pool(a.reshape(2, 3), axis=0).sum() * b.sum(),
    "span_max": lambda a, b: (T.pairwise_span_max(a.reshape(3, 2)) * b.reshape(1, 3, 2)[:, :, :]).sum(),
    "euclid": lambda a, b: T.euclidean_distance(a, b),
    "bce": lambda a, b: T.bce_with_logits(a * b, (np.arange(6) % 2)),
    "mean_broadcast": lambda a, b: (a.reshape(2, 3) * b.reshape(2, 3).mean(axis=0, keepdims=True)).sum(),
    "conv": lambda a, b: (T.conv2d_dilated(a.reshape(2, 3, 1), T.stack([b[:3], b[3:], b[:3]]).reshape(3, 3, 1, 1) * 1.0, 2) * a.reshape(2, 3, 1)).sum(),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients(name):
    rng = np.random.default_rng(7)
    params = ParamStore()
    a = params.add("a", rng.normal(size=6))
    b = params.add("b", rng.normal(size=6))
    err = grad_check(lambda: PRIMITIVES[name](a, b), params, eps=1e-5, n_coords=12, seed=3)
    assert err < 1e-3


def test_forward_is_bitwise_deterministic(rng):
    x = rng.normal(size=(4, 4, 3))
    k = rng.normal(size=(5, 5, 3, 3))
    first = T.conv2d_dilated(Tensor(x), Tensor(k), 3).data
    second = T.conv2d_dilated(Tensor(x), Tensor(k), 3).data
    assert first.tobytes() == second.tobytes()


def test_non_finite_forward_is_an_error():
    with pytest.raises(NonFiniteError):
        T.log(Tensor([-1.0]))


def test_param_store_iterates_sorted():
    params = ParamStore()
    for name in ["b.x", "a.z", "a.y"]:
        params.add(name, [0.0])
    assert list(params) == ["a.y", "a.z", "b.x"]
    with pytest.raises(KeyError):
        params.add("a.y", [1.0])


def test_tensor_invariants():
    t = Tensor(np.ones((2, 3)), requires_grad=True)
    assert t.data.dtype == np.float32
    assert t.data.size == 6 and t.grad.shape == t.shape
    assert Tensor([1.0]).grad is None
