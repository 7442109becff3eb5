#
# MIT License
#
# (C) Copyright [2024] Hewlett Packard Enterprise Development LP
#
# Permission is hereby granted, free of charge, to any person obtaining a
# copy of this software and associated documentation files (the "Software"),
# to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense,
# and/or sell copies of the Software, and to permit persons to whom the
# Software is furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included
# in all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR
# OTHER LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE,
# ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
# OTHER DEALINGS IN THE SOFTWARE.
"""Dense tensors with reverse-mode automatic differentiation.

Every operation records a node on a dynamic tape (its parents and a
closure mapping the output gradient to parent gradients). The tape of
one forward pass is released by backward(), so each dialogue builds its
own graph. Tensors are backed by numpy arrays; 64-bit is the default
precision.

"""
# pylint: disable=protected-access,too-many-lines
import threading
from contextlib import contextmanager

import numpy as np

from vtds_base import ContextualError

from .common import (
    ShapeError,
    ValidationError
)

DEFAULT_DTYPE = np.float64

_GRAD_MODE = threading.local()


def grad_enabled():
    """Return True if operations currently record onto the tape.

    """
    return getattr(_GRAD_MODE, 'enabled', True)


@contextmanager
def no_grad():
    """Context manager that suspends tape recording in the current
    thread (decoding, finite difference evaluations).

    """
    previous = grad_enabled()
    _GRAD_MODE.enabled = False
    try:
        yield
    finally:
        _GRAD_MODE.enabled = previous


class Tensor:
    """A dense tensor participating in reverse-mode differentiation.

    """
    def __init__(self, data, requires_grad=False, dtype=None):
        """Constructor

        """
        if dtype is None:
            array = np.asarray(data)
            dtype = (
                array.dtype if np.issubdtype(array.dtype, np.floating)
                else DEFAULT_DTYPE
            )
        self.data = np.array(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None
        self._released = False

    @property
    def shape(self):
        """Tuple of dimension sizes.

        """
        return self.data.shape

    @property
    def dtype(self):
        """numpy dtype of the data.

        """
        return self.data.dtype

    @property
    def T(self):  # pylint: disable=invalid-name
        """Transpose of a 2-D tensor.

        """
        return transpose(self)

    def item(self):
        """Return the value of a single element tensor as a float.

        """
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        """Return a copy of the underlying data.

        """
        return self.data.copy()

    def zero_grad(self):
        """Reset the gradient accumulator to zeros.

        """
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return "Tensor(shape=%s, requires_grad=%s)" % (
            str(self.shape), str(self.requires_grad)
        )

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)


class Parameter:
    """A named trainable tensor. Names are unique within a model.

    """
    def __init__(self, name, data):
        """Constructor

        """
        self.name = name
        self.tensor = Tensor(np.ascontiguousarray(data), requires_grad=True)
        self.tensor.zero_grad()

    @property
    def data(self):
        """The parameter values (numpy array, updated in place by
        optimizers).

        """
        return self.tensor.data

    @property
    def grad(self):
        """The accumulated gradient.

        """
        return self.tensor.grad

    @property
    def shape(self):
        """Shape of the parameter.

        """
        return self.tensor.shape

    def zero_grad(self):
        """Reset the gradient accumulator.

        """
        self.tensor.zero_grad()

    def __repr__(self):
        return "Parameter(%s, shape=%s)" % (self.name, str(self.shape))


def as_tensor(value, like=None):
    """Wrap constants (scalars, arrays) as non-differentiable tensors,
    matching the dtype of 'like' when given.

    """
    if isinstance(value, Tensor):
        return value
    if isinstance(value, Parameter):
        return value.tensor
    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _record(data, parents, backward):
    """Create the result tensor of an operation, attaching it to the
    tape when recording is on and some parent needs a gradient.

    """
    out = Tensor(data, dtype=data.dtype)
    if grad_enabled() and any(parent.requires_grad for parent in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad, shape):
    """Sum a gradient down to 'shape', undoing numpy broadcasting.

    """
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_check(operation, left, right):
    """Raise a ShapeError if two operands do not broadcast.

    """
    try:
        np.broadcast_shapes(left.shape, right.shape)
    except ValueError as err:
        raise ShapeError(operation, left.shape, right.shape) from err


def add(left, right):
    """Elementwise sum (bias rows broadcast over matrix rows).

    """
    left = as_tensor(left)
    right = as_tensor(right, left)
    _broadcast_check('add', left, right)

    def backward(grad):
        return (
            _unbroadcast(grad, left.shape), _unbroadcast(grad, right.shape)
        )
    return _record(left.data + right.data, (left, right), backward)


def sub(left, right):
    """Elementwise difference.

    """
    left = as_tensor(left)
    right = as_tensor(right, left)
    _broadcast_check('sub', left, right)

    def backward(grad):
        return (
            _unbroadcast(grad, left.shape), _unbroadcast(-grad, right.shape)
        )
    return _record(left.data - right.data, (left, right), backward)


def mul(left, right):
    """Elementwise product.

    """
    left = as_tensor(left)
    right = as_tensor(right, left)
    _broadcast_check('mul', left, right)

    def backward(grad):
        return (
            _unbroadcast(grad * right.data, left.shape),
            _unbroadcast(grad * left.data, right.shape)
        )
    return _record(left.data * right.data, (left, right), backward)


def div(left, right):
    """Elementwise quotient.

    """
    left = as_tensor(left)
    right = as_tensor(right, left)
    _broadcast_check('div', left, right)
    out = left.data / right.data

    def backward(grad):
        return (
            _unbroadcast(grad / right.data, left.shape),
            _unbroadcast(-grad * out / right.data, right.shape)
        )
    return _record(out, (left, right), backward)


def matmul(left, right):
    """Matrix product of two 2-D tensors.

    """
    left = as_tensor(left)
    right = as_tensor(right, left)
    if left.data.ndim != 2 or right.data.ndim != 2 or \
       left.shape[1] != right.shape[0]:
        raise ShapeError('matmul', left.shape, right.shape)

    def backward(grad):
        return (grad @ right.data.T, left.data.T @ grad)
    return _record(left.data @ right.data, (left, right), backward)


def transpose(tensor):
    """Transpose of a 2-D tensor.

    """
    tensor = as_tensor(tensor)
    if tensor.data.ndim != 2:
        raise ShapeError('transpose', tensor.shape)

    def backward(grad):
        return (grad.T,)
    return _record(tensor.data.T.copy(), (tensor,), backward)


def reshape(tensor, shape):
    """Reshape without changing the data order.

    """
    tensor = as_tensor(tensor)
    try:
        out = tensor.data.reshape(shape)
    except ValueError as err:
        raise ShapeError('reshape', tensor.shape, shape) from err

    def backward(grad):
        return (grad.reshape(tensor.shape),)
    return _record(out, (tensor,), backward)


def concat(tensors, axis=0):
    """Concatenate tensors along an existing axis.

    """
    tensors = [as_tensor(item) for item in tensors]
    if not tensors:
        raise ValidationError("concat of an empty tensor list")
    try:
        out = np.concatenate([item.data for item in tensors], axis=axis)
    except ValueError as err:
        raise ShapeError(
            'concat', *[item.shape for item in tensors]
        ) from err
    bounds = np.cumsum([item.shape[axis] for item in tensors])[:-1]

    def backward(grad):
        return tuple(np.split(grad, bounds, axis=axis))
    return _record(out, tensors, backward)


def index(tensor, key):
    """Select part of a tensor with numpy indexing. Repeated indices
    accumulate their gradients.

    """
    tensor = as_tensor(tensor)
    try:
        out = tensor.data[key]
    except IndexError as err:
        raise ShapeError('index', tensor.shape) from err
    advanced = any(
        isinstance(part, (list, np.ndarray))
        for part in (key if isinstance(key, tuple) else (key,))
    )

    def backward(grad):
        full = np.zeros_like(tensor.data)
        if advanced:
            np.add.at(full, key, grad)
        else:
            full[key] = grad
        return (full,)
    return _record(np.array(out, dtype=tensor.dtype), (tensor,), backward)


def lookup(table, indices):
    """Gather rows of a 2-D table (embedding lookup, row selection).
    The result has one row per index.

    """
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    if table.data.ndim != 2:
        raise ShapeError('lookup', table.shape, indices.shape)
    if indices.size and (
            indices.min() < 0 or indices.max() >= table.shape[0]
    ):
        raise ValidationError(
            "lookup index out of range [0, %d): %s" % (
                table.shape[0], str(indices.tolist())
            )
        )

    def backward(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, indices, grad)
        return (full,)
    return _record(table.data[indices], (table,), backward)


def sigmoid(tensor):
    """Logistic function.

    """
    tensor = as_tensor(tensor)
    out = 0.5 * (1.0 + np.tanh(0.5 * tensor.data))

    def backward(grad):
        return (grad * out * (1.0 - out),)
    return _record(out, (tensor,), backward)


def tanh(tensor):
    """Hyperbolic tangent.

    """
    tensor = as_tensor(tensor)
    out = np.tanh(tensor.data)

    def backward(grad):
        return (grad * (1.0 - out * out),)
    return _record(out, (tensor,), backward)


def exp(tensor):
    """Elementwise exponential.

    """
    tensor = as_tensor(tensor)
    out = np.exp(tensor.data)

    def backward(grad):
        return (grad * out,)
    return _record(out, (tensor,), backward)


def log(tensor):
    """Elementwise natural logarithm.

    """
    tensor = as_tensor(tensor)

    def backward(grad):
        return (grad / tensor.data,)
    return _record(np.log(tensor.data), (tensor,), backward)


def leaky_relu(tensor, slope=0.2):
    """Leaky rectifier.

    """
    tensor = as_tensor(tensor)
    scale = np.where(tensor.data > 0, 1.0, slope).astype(tensor.dtype)

    def backward(grad):
        return (grad * scale,)
    return _record(tensor.data * scale, (tensor,), backward)


def softmax(tensor, axis=-1):
    """Softmax along an axis (the last one by default).

    """
    tensor = as_tensor(tensor)
    shifted = tensor.data - tensor.data.max(axis=axis, keepdims=True)
    out = np.exp(shifted)
    out /= out.sum(axis=axis, keepdims=True)

    def backward(grad):
        return (out * (grad - (grad * out).sum(axis=axis, keepdims=True)),)
    return _record(out, (tensor,), backward)


def tensor_sum(tensor, axis=None, keepdims=False):
    """Sum over an axis, or over everything.

    """
    tensor = as_tensor(tensor)
    out = np.asarray(tensor.data.sum(axis=axis, keepdims=keepdims))

    def backward(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, tensor.shape).copy(),)
    return _record(out, (tensor,), backward)


def mean(tensor, axis=None, keepdims=False):
    """Mean over an axis, or over everything.

    """
    tensor = as_tensor(tensor)
    count = tensor.data.size if axis is None else tensor.shape[axis]
    return mul(tensor_sum(tensor, axis=axis, keepdims=keepdims), 1.0 / count)


def dropout(tensor, rate, rng, training):
    """Inverted dropout: identity unless training with a nonzero
    rate.

    """
    if not training or rate <= 0.0:
        return tensor
    keep = (rng.random(tensor.shape) >= rate).astype(tensor.dtype)
    return mul(tensor, keep / (1.0 - rate))


def _topological_order(root):
    """Iterative depth first ordering of the tape below 'root'.

    """
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(leaf) into every reachable leaf tensor
    that requires a gradient, then release the tape. Calling backward
    a second time on a released tape is an error.

    """
    if loss.data.size != 1:
        raise ValidationError(
            "backward needs a scalar loss, got shape %s" % str(loss.shape)
        )
    if loss._released:
        raise ValidationError(
            "backward called on a tape that was already released"
        )
    if not loss.requires_grad:
        return
    order = _topological_order(loss)
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:
            if node._released:
                continue
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = parent_grad
    for node in order:
        if node._backward is not None:
            node._parents = ()
            node._backward = None
            node._released = True


def grad_check(model_forward, params, epsilon=1e-5, max_coords=64, seed=0,
               floor=1e-8):
    """Compare analytic gradients of the scalar produced by
    'model_forward' against central finite differences on at most
    'max_coords' coordinates per parameter (sampled with a fixed
    seed). Returns the maximum relative error
    |a - n| / max(|a|, |n|, floor).

    """
    for param in params:
        param.zero_grad()
    loss = model_forward()
    backward(loss)
    analytic = {param.name: param.grad.copy() for param in params}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for param in params:
        data = param.data
        count = data.size
        coords = (
            np.arange(count) if count <= max_coords
            else np.sort(rng.choice(count, size=max_coords, replace=False))
        )
        for coord in coords:
            where = np.unravel_index(int(coord), data.shape)
            original = data[where]
            with no_grad():
                data[where] = original + epsilon
                plus = model_forward().item()
                data[where] = original - epsilon
                minus = model_forward().item()
            data[where] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            exact = float(analytic[param.name][where])
            if not (np.isfinite(numeric) and np.isfinite(exact)):
                raise ContextualError(
                    "non-finite gradient for parameter '%s' at %s "
                    "(analytic %r, numeric %r)" % (
                        param.name, str(where), exact, numeric
                    )
                )
            error = abs(exact - numeric) / max(
                abs(exact), abs(numeric), floor
            )
            worst = max(worst, error)
    return worst
