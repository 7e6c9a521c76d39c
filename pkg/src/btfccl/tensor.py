"""A small reverse-mode autodiff engine on top of numpy.

Only the primitives the extraction model needs are provided. Every op
records a closure that maps the output gradient to one gradient per parent;
``Tensor.backward`` walks the graph in reverse topological order and
accumulates into ``.grad`` of every tensor with ``requires_grad``.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, NonFiniteError

_DTYPE = np.float32
_GRAD_ENABLED = True


@contextlib.contextmanager
def default_dtype(dtype):
    """Temporarily change the float type new tensors are cast to."""
    global _DTYPE
    prev, _DTYPE = _DTYPE, np.dtype(dtype).type
    try:
        yield
    finally:
        _DTYPE = prev


@contextlib.contextmanager
def no_grad():
    """Disable graph recording (evaluation mode)."""
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def get_default_dtype():
    return _DTYPE


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite values in {what}")


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, op: str = "leaf"):
        self.data = np.ascontiguousarray(np.asarray(data, dtype=_DTYPE))
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None
        self.op = op

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __len__(self) -> int:
        return self.data.shape[0]

    def item(self) -> float:
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    # -- autodiff ------------------------------------------------------
    def backward(self, grad=None) -> None:
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise DimensionError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order = _topological(self)
        self.grad = self.grad + np.asarray(grad, dtype=self.data.dtype)
        for node in reversed(order):
            if node._backward is None:
                continue
            parent_grads = node._backward(node.grad)
            for parent, g in zip(node._parents, parent_grads):
                if g is None or not parent.requires_grad:
                    continue
                _check_finite(g, f"gradient of {parent.op}")
                parent.grad = parent.grad + g
            if node is not self:
                # interior buffers are not needed once propagated
                node.grad = np.zeros_like(node.data)

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def max(self, axis=None):
        return reduce_max_pool(self, axis)


def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward: Callable, op: str) -> Tensor:
    _check_finite(data, op)
    out = Tensor(data, op=op)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.grad = np.zeros_like(out.data)
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = g / b.data
        gb = -g * a.data / (b.data * b.data)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(a.data / b.data, (a, b), backward, "div")


def exp(x: Tensor) -> Tensor:
    out_data = np.exp(x.data)

    def backward(g):
        return (g * out_data,)

    return _make(out_data, (x,), backward, "exp")


def log(x: Tensor) -> Tensor:
    def backward(g):
        return (g / x.data,)

    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x.data)
    return _make(out, (x,), backward, "log")


def sqrt(x: Tensor) -> Tensor:
    out_data = np.sqrt(x.data)

    def backward(g):
        return (g * 0.5 / out_data,)

    return _make(out_data, (x,), backward, "sqrt")


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return _make(np.where(mask, x.data, 0).astype(x.data.dtype), (x,), backward, "relu")


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = _stable_sigmoid(x.data)

    def backward(g):
        return (g * s * (1 - s),)

    return _make(s, (x,), backward, "sigmoid")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return _make(s, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    s = np.exp(out)

    def backward(g):
        return (g - s * g.sum(axis=axis, keepdims=True),)

    return _make(out, (x,), backward, "log_softmax")


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    if not training or p <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)

    def backward(g):
        return (g * keep,)

    return _make(x.data * keep, (x,), backward, "dropout")


# ---------------------------------------------------------------------------
# linear algebra and shape manipulation
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(a.data @ b.data, (a, b), backward, "matmul")


def affine(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """``x @ weight + bias`` over the last axis of ``x``."""
    if x.ndim < 1 or weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"affine shape mismatch: x{x.shape} weight{weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise DimensionError(f"affine bias shape {bias.shape} does not match weight{weight.shape}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, weight.shape[0])
    out = (x2 @ weight.data + bias.data).reshape(*lead, weight.shape[1])

    def backward(g):
        g2 = g.reshape(-1, weight.shape[1])
        gx = (g2 @ weight.data.T).reshape(x.shape)
        gw = x2.T @ g2
        gb = g2.sum(axis=0)
        return gx, gw, gb

    return _make(out, (x, weight, bias), backward, "affine")


def reshape(x: Tensor, shape) -> Tensor:
    def backward(g):
        return (g.reshape(x.shape),)

    return _make(x.data.reshape(shape), (x,), backward, "reshape")


def transpose(x: Tensor, axes=None) -> Tensor:
    axes = tuple(range(x.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _make(np.transpose(x.data, axes), (x,), backward, "transpose")


def getitem(x: Tensor, index) -> Tensor:
    if isinstance(index, Tensor):
        index = index.data.astype(np.int64)

    def backward(g):
        out = np.zeros_like(x.data)
        np.add.at(out, index, g)
        return (out,)

    return _make(x.data[index], (x,), backward, "getitem")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ax = axis % tensors[0].ndim
    sizes = [t.shape[ax] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=ax))

    return _make(np.concatenate([t.data for t in tensors], axis=ax), tensors, backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _make(np.stack([t.data for t in tensors], axis=axis), tensors, backward, "stack")


def broadcast_to(x: Tensor, shape) -> Tensor:
    def backward(g):
        return (_unbroadcast(g, x.shape),)

    return _make(np.broadcast_to(x.data, shape).copy(), (x,), backward, "broadcast")


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), backward, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([x.shape[a] for a in axes]))
    return tsum(x, axis, keepdims) * (1.0 / count)


def reduce_max_pool(x: Tensor, axis=0) -> Tensor:
    """Elementwise maximum over ``axis``.

    The gradient goes to the first maximal element along the axis, so ties
    resolve to the lowest index.  ``axis=None`` pools over all elements.
    """
    if x.data.size == 0 or (axis is not None and x.shape[axis] == 0):
        raise ValueError("max pool over an empty set")
    if axis is None:
        flat = x.data.reshape(-1)
        idx = int(np.argmax(flat))

        def backward_all(g):
            out = np.zeros(flat.shape, dtype=x.data.dtype)
            out[idx] = g
            return (out.reshape(x.shape),)

        return _make(np.asarray(flat[idx]), (x,), backward_all, "max")

    idx = np.argmax(x.data, axis=axis)
    out = np.take_along_axis(x.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def backward(g):
        grad = np.zeros_like(x.data)
        np.put_along_axis(grad, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return _make(out, (x,), backward, "max")


def pairwise_span_max(h: Tensor) -> Tensor:
    """For rows ``h[n, d]`` return ``out[i, j] = max(h[min(i,j) .. max(i,j)])``.

    Output shape ``[n, n, d]``; symmetric in ``(i, j)``.  Gradients follow
    the lowest-index argmax of each span.
    """
    n, d = h.shape
    arg = np.empty((n, n, d), dtype=np.int64)
    for i in range(n):
        sub_rows = h.data[i:]
        running = np.maximum.accumulate(sub_rows, axis=0)
        fresh = np.ones_like(sub_rows, dtype=bool)
        fresh[1:] = sub_rows[1:] > running[:-1]
        pos = np.where(fresh, np.arange(i, n)[:, None], 0)
        arg[i, i:] = np.maximum.accumulate(pos, axis=0)
    iu, ju = np.triu_indices(n, k=1)
    arg[ju, iu] = arg[iu, ju]
    cols = np.broadcast_to(np.arange(d), (n, n, d))
    out = h.data[arg, cols]

    def backward(g):
        grad = np.zeros_like(h.data)
        np.add.at(grad, (arg.reshape(-1), cols.reshape(-1)), g.reshape(-1))
        return (grad,)

    return _make(out, (h,), backward, "span_max")


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def conv2d_dilated(x: Tensor, kernel: Tensor, dilation: int = 1) -> Tensor:
    """Same-padded dilated cross-correlation of an ``[H, W, c_in]`` map.

    ``kernel`` has shape ``[k, k, c_in, c_out]`` with odd ``k``.  Zero padding
    keeps the spatial size; taps that only ever see padding are skipped.
    """
    if kernel.ndim != 4 or kernel.shape[0] != kernel.shape[1]:
        raise DimensionError(f"kernel must be [k, k, c_in, c_out], got {kernel.shape}")
    k = kernel.shape[0]
    if k % 2 == 0:
        raise ConfigError(f"kernel size must be odd, got {k}")
    if dilation < 1:
        raise ConfigError(f"dilation must be positive, got {dilation}")
    if x.ndim != 3 or x.shape[2] != kernel.shape[2]:
        raise DimensionError(f"conv input {x.shape} does not match kernel {kernel.shape}")
    hgt, wid, c_in = x.shape
    c_out = kernel.shape[3]
    half = (k - 1) // 2
    pad = dilation * half
    xp = np.pad(x.data, ((pad, pad), (pad, pad), (0, 0)))
    taps = []
    for u in range(k):
        du = (u - half) * dilation
        if abs(du) >= hgt:
            continue
        for v in range(k):
            dv = (v - half) * dilation
            if abs(dv) >= wid:
                continue
            taps.append((u, v, pad + du, pad + dv))
    out = np.zeros((hgt * wid, c_out), dtype=np.result_type(x.data, kernel.data))
    for u, v, r0, c0 in taps:
        patch = xp[r0:r0 + hgt, c0:c0 + wid].reshape(-1, c_in)
        out += patch @ kernel.data[u, v]

    def backward(g):
        g2 = g.reshape(-1, c_out)
        gxp = np.zeros_like(xp)
        gk = np.zeros_like(kernel.data)
        for u, v, r0, c0 in taps:
            patch = xp[r0:r0 + hgt, c0:c0 + wid].reshape(-1, c_in)
            gk[u, v] = patch.T @ g2
            gxp[r0:r0 + hgt, c0:c0 + wid] += (g2 @ kernel.data[u, v].T).reshape(hgt, wid, c_in)
        return gxp[pad:pad + hgt, pad:pad + wid], gk

    return _make(out.reshape(hgt, wid, c_out), (x, kernel), backward, "conv2d")


# ---------------------------------------------------------------------------
# losses and distances
# ---------------------------------------------------------------------------

def euclidean_distance(a: Tensor, b: Tensor) -> Tensor:
    """``||a - b||_2`` with a zero subgradient where the two points coincide."""
    if a.shape != b.shape:
        raise DimensionError(f"distance between shapes {a.shape} and {b.shape}")
    diff = a.data - b.data
    dist = np.sqrt((diff * diff).sum())

    def backward(g):
        if dist == 0:
            zero = np.zeros_like(diff)
            return zero, zero
        unit = diff / dist
        return g * unit, -g * unit

    return _make(np.asarray(dist), (a, b), backward, "euclidean")


def bce_with_logits(logits: Tensor, targets) -> Tensor:
    """Mean binary cross-entropy computed directly on logits."""
    y = np.asarray(targets, dtype=logits.data.dtype)
    if y.shape != logits.shape:
        raise DimensionError(f"bce target shape {y.shape} != logits {logits.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("bce labels must be 0 or 1")
    z = logits.data
    per_cell = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    count = z.size

    def backward(g):
        return (g * (_stable_sigmoid(z) - y) / count,)

    return _make(np.asarray(per_cell.mean()), (logits,), backward, "bce")


# ---------------------------------------------------------------------------
# parameters and gradient checking
# ---------------------------------------------------------------------------

class ParamStore:
    """Trainable arrays keyed by a dotted path; iterates in sorted path order."""

    def __init__(self):
        self._entries: dict[str, Tensor] = {}

    def add(self, path: str, value) -> Tensor:
        if path in self._entries:
            raise KeyError(f"duplicate parameter path {path!r}")
        t = Tensor(value, requires_grad=True, op="param")
        self._entries[path] = t
        return t

    def __getitem__(self, path: str) -> Tensor:
        return self._entries[path]

    def __contains__(self, path: str) -> bool:
        return path in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._entries))

    def items(self) -> Iterator[tuple[str, Tensor]]:
        for path in self:
            yield path, self._entries[path]

    def num_values(self) -> int:
        return sum(t.data.size for t in self._entries.values())

    def zero_grad(self) -> None:
        for t in self._entries.values():
            t.zero_grad()

    def state(self) -> dict[str, np.ndarray]:
        return {path: t.data.copy() for path, t in self.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._entries) - set(state)
        extra = set(state) - set(self._entries)
        if missing or extra:
            raise KeyError(f"parameter mismatch: missing={sorted(missing)} unexpected={sorted(extra)}")
        for path, arr in state.items():
            t = self._entries[path]
            if t.shape != tuple(arr.shape):
                raise DimensionError(f"{path}: expected shape {t.shape}, got {tuple(arr.shape)}")
            t.data = np.ascontiguousarray(arr, dtype=t.data.dtype)


def grad_check(f: Callable[[], Tensor], params: ParamStore, eps: float = 1e-6,
               n_coords: int = 200, seed: int = 0, floor: float = 1e-6) -> float:
    """Worst relative error between analytic and central-difference gradients.

    Runs in float64 so that the difference quotient is not swamped by
    rounding; parameters are restored to their original dtype afterwards.
    Every parameter tensor contributes at least one sampled coordinate.
    """
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError(f"eps must lie in [1e-6, 1e-2], got {eps}")
    originals = {path: t.data for path, t in params.items()}
    rng = np.random.default_rng(seed)
    try:
        with default_dtype(np.float64):
            for path, t in params.items():
                t.data = originals[path].astype(np.float64)
            params.zero_grad()
            loss = f()
            if not np.isfinite(loss.data).all():
                raise NonFiniteError("loss is not finite")
            loss.backward()
            analytic = {path: t.grad.copy() for path, t in params.items()}

            paths = list(params)
            sizes = np.array([params[p].data.size for p in paths])
            chosen = [(p, int(rng.integers(params[p].data.size))) for p in paths]
            extra = max(0, n_coords - len(chosen))
            picks = rng.choice(len(paths), size=extra, p=sizes / sizes.sum())
            chosen += [(paths[i], int(rng.integers(sizes[i]))) for i in picks]

            worst = 0.0
            with no_grad():
                for path, flat in chosen:
                    arr = params[path].data.reshape(-1)
                    orig = arr[flat]
                    arr[flat] = orig + eps
                    up = f().item()
                    arr[flat] = orig - eps
                    down = f().item()
                    arr[flat] = orig
                    if not (np.isfinite(up) and np.isfinite(down)):
                        raise NonFiniteError(f"loss not finite while perturbing {path}")
                    numeric = (up - down) / (2 * eps)
                    exact = analytic[path].reshape(-1)[flat]
                    denom = max(abs(exact), abs(numeric), floor)
                    worst = max(worst, abs(exact - numeric) / denom)
            return worst
    finally:
        for path, t in params.items():
            t.data = originals[path]
        params.zero_grad()
