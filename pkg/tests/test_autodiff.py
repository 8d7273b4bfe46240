import numpy as np
import pytest

from filterts.autodiff import ops
from filterts.autodiff.gradcheck import check_gradients
from filterts.autodiff.tensor import (
    Tensor,
    add,
    complex_elementwise,
    conj_mul,
    matmul,
    mul,
    reduce_sum,
)
from filterts.errors import ContractError, DimensionError


def complex_param(rng, shape, name):
    return Tensor.parameter(rng.normal(size=shape) + 1j * rng.normal(size=shape), name=name)


def real_loss(z, rng_seed=0):
    """Fixed random real functional of a complex tensor: sum(c1*Re z + c2*Im z + Re z^2)."""
    rng = np.random.default_rng(rng_seed)
    c1 = rng.normal(size=z.shape)
    c2 = rng.normal(size=z.shape)
    re, im = ops.real_part(z), ops.imag_part(z)
    return reduce_sum(add(add(mul(re, c1), mul(im, c2)), mul(re, re)))


def assert_gradients_ok(results):
    assert results
    for r in results:
        assert abs(r.analytic - r.numeric) < 1e-7 or r.relative_error < 1e-5, r


def test_elementwise_examples():
    a = Tensor.from_complex(np.array([1 + 1j]))
    b = Tensor.from_complex(np.array([1 - 1j]))
    np.testing.assert_allclose(mul(a, b).value, [2 + 0j])
    np.testing.assert_allclose(conj_mul(a, a).value, [2 + 0j])
    np.testing.assert_allclose(complex_elementwise(a, b, "add").value, [2 + 0j])
    with pytest.raises(ContractError):
        complex_elementwise(a, b, "div")


def test_broadcast_mismatch_raises():
    with pytest.raises(DimensionError):
        add(Tensor(np.zeros(3)), Tensor(np.zeros(4)))


def test_matmul_shape_errors():
    with pytest.raises(DimensionError):
        matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))
    with pytest.raises(DimensionError):
        matmul(Tensor(np.zeros((2, 2, 3))), Tensor(np.zeros((3, 3, 2))))
    with pytest.raises(DimensionError):
        matmul(Tensor(np.zeros(3)), Tensor(np.zeros((3, 2))))


def test_matmul_matches_numpy(rng):
    a = rng.normal(size=(4, 2, 3)) + 1j * rng.normal(size=(4, 2, 3))
    b = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    got = matmul(Tensor.from_complex(a), Tensor.from_complex(b)).value
    np.testing.assert_allclose(got, a @ b, atol=1e-12)


def test_backward_needs_real_scalar():
    p = Tensor.parameter(np.ones(3), name="p")
    with pytest.raises(ContractError):
        mul(p, 2.0).backward()
    with pytest.raises(ContractError):
        reduce_sum(mul(p, 1j)).backward()


def test_same_tensor_used_twice_accumulates():
    x = Tensor.parameter(np.array([3.0, -2.0]), name="x")
    reduce_sum(mul(x, x)).backward()
    np.testing.assert_allclose(x.grad_re, [6.0, -4.0])


def test_broadcast_gradients_are_summed():
    a = Tensor.parameter(np.ones((3, 1)), name="a")
    b = Tensor.parameter(np.ones((1, 4)), name="b")
    reduce_sum(add(a, b)).backward()
    np.testing.assert_allclose(a.grad_re, np.full((3, 1), 4.0))
    np.testing.assert_allclose(b.grad_re, np.full((1, 4), 3.0))


def test_fancy_index_gradient_counts_repeats():
    a = Tensor.parameter(np.arange(3.0), name="a")
    reduce_sum(a[[0, 0, 1]]).backward()
    np.testing.assert_allclose(a.grad_re, [2.0, 1.0, 0.0])


def test_real_only_leaf_ignores_imaginary_gradient():
    w = Tensor.parameter(np.array([0.5, 2.0]), name="w", real_only=True)
    z = mul(w, Tensor.from_complex(np.array([1 + 2j, 3 - 1j])))
    real_loss(z).backward()
    assert not np.any(w.grad_im)
    assert np.any(w.grad_re)
    with pytest.raises(ContractError):
        Tensor(np.ones(2), np.ones(2), real_only=True)


def test_complex_mul_gradient(rng):
    a = complex_param(rng, (3, 4), "a")
    b = complex_param(rng, (4,), "b")
    assert_gradients_ok(check_gradients(lambda: real_loss(mul(a, b)), [a, b]))


def test_conj_mul_and_conj_gradient(rng):
    a = complex_param(rng, (5,), "a")
    b = complex_param(rng, (5,), "b")
    assert_gradients_ok(check_gradients(lambda: real_loss(conj_mul(a, b)), [a, b]))
    assert_gradients_ok(check_gradients(lambda: real_loss(a.conj()), [a]))


def test_matmul_gradient(rng):
    a = complex_param(rng, (2, 3, 4), "a")
    b = complex_param(rng, (4, 2), "b")
    assert_gradients_ok(check_gradients(lambda: real_loss(matmul(a, b)), [a, b]))


def test_structural_op_gradients(rng):
    a = complex_param(rng, (2, 3), "a")
    b = complex_param(rng, (2, 2), "b")

    def loss():
        joined = ops.concat([a, b], axis=-1)
        padded = ops.pad(joined, 7, axis=-1)
        return real_loss(padded.reshape(7, 2)[1:5].mean(axis=0, keepdims=True))

    assert_gradients_ok(check_gradients(loss, [a, b]))


def test_complex_from_parts_gradient(rng):
    re = Tensor.parameter(rng.normal(size=4), name="re", real_only=True)
    im = Tensor.parameter(rng.normal(size=4), name="im", real_only=True)
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.complex_from(re, im)), [re, im]))
    with pytest.raises(ContractError):
        ops.complex_from(Tensor.from_complex(np.ones(2) * 1j), im)


def test_relu_parts_gradient(rng):
    a = complex_param(rng, (12,), "a")
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.relu_parts(a)), [a]))


def test_standardize_gradient(rng):
    x = Tensor.parameter(rng.normal(size=(3, 6)), name="x", real_only=True)
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.standardize(x, axis=-1)), [x]))
    with pytest.raises(ContractError):
        ops.standardize(Tensor.from_complex(np.ones(3) * 1j))


def test_magnitude_softmax_gradient(rng):
    a = complex_param(rng, (3, 5), "a")
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.softmax_magnitude(a, axis=-1)), [a]))
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.softmax_magnitude(a, axis=0)), [a]))


def test_magnitude_gradient(rng):
    a = complex_param(rng, (6,), "a")
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.magnitude(a)), [a]))


@pytest.mark.parametrize("n", [None, 12, 16])
def test_fft_gradient(rng, n):
    x = Tensor.parameter(rng.normal(size=(2, 6)), name="x", real_only=True)
    z = complex_param(rng, (6,), "z")
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.fft(x, n=n)), [x]))
    assert_gradients_ok(check_gradients(lambda: real_loss(ops.fft(z, n=n)), [z]))


def test_fft_op_matches_numpy(rng):
    x = rng.normal(size=(3, 10))
    np.testing.assert_allclose(ops.fft(Tensor(x), n=20).value, np.fft.fft(x, 20), atol=1e-10)
    with pytest.raises(DimensionError):
        ops.fft(Tensor(x), n=5)


def test_no_graph_without_trainable_leaves():
    out = mul(Tensor(np.ones(2)), Tensor(np.ones(2)))
    assert out.is_leaf and not out.requires_grad
