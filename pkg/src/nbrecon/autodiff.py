"""Minimal dense-tensor reverse-mode autodiff engine.

Values are float-64 numpy arrays. Every differentiable op appends its
output to the active :class:`Tape`; since ops run after their inputs
exist, tape order is a topological order, and :func:`backward` replays
it in reverse, accumulating gradients additively into every reachable
tensor. The tape is rebuilt each forward pass (call :func:`new_tape`)
because neighbor sampling changes the graph structure every step.

A tape and its tensors belong to one thread for the duration of a
forward/backward pass; parameter values may be snapshotted and shared
read-only.
"""

import numpy as np

from .errors import ContractError, DimensionError


class Tensor:
    """A float-64 array with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_bwd", "_tape_id")

    def __init__(self, data, requires_grad=False, op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents = ()
        self._bwd = None
        self._tape_id = -1

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r})"

    # operator sugar; all arithmetic is defined by the module functions below
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Ordered record of one forward pass's op outputs."""

    def __init__(self):
        self._nodes = []

    def add(self, t):
        t._tape_id = len(self._nodes)
        self._nodes.append(t)

    def __len__(self):
        return len(self._nodes)


_tape = Tape()


def new_tape():
    """Discard the recorded graph and start a fresh tape."""
    global _tape
    _tape = Tape()
    return _tape


def active_tape():
    return _tape


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(data):
    """A tensor that never receives gradients."""
    return Tensor(data, requires_grad=False, op="const")


def parameter(data):
    """A learnable leaf tensor."""
    return Tensor(data, requires_grad=True, op="param")


def detach(x):
    """Same values, cut from the differentiation graph."""
    return Tensor(x.data, requires_grad=False, op="detach")


def _make(data, parents, bwd, op):
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents), op=op)
    if out.requires_grad:
        out._parents = parents
        out._bwd = bwd
        _tape.add(out)
    return out


def _unbroadcast(g, shape):
    """Sum a gradient back down to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitives


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(f"matmul: incompatible shapes {a.data.shape} x {b.data.shape}")
    out_data = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(out_data, (a, b), bwd, "matmul")


def _elementwise(a, b, op_name, fwd, bwd_a, bwd_b):
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = fwd(a.data, b.data)
    except ValueError as exc:
        raise DimensionError(f"{op_name}: cannot broadcast {a.data.shape} with {b.data.shape}") from exc

    def bwd(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(bwd_a(g, a.data, b.data), a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(bwd_b(g, a.data, b.data), b.data.shape))

    return _make(out_data, (a, b), bwd, op_name)


def add(a, b):
    return _elementwise(a, b, "add", lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b):
    return _elementwise(a, b, "sub", lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b):
    return _elementwise(a, b, "mul", lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x)


def div(a, b):
    return _elementwise(
        a, b, "div", lambda x, y: x / y, lambda g, x, y: g / y, lambda g, x, y: -g * x / (y * y)
    )


def neg(a):
    a = _as_tensor(a)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(-g)

    return _make(-a.data, (a,), bwd, "neg")


def relu(a):
    a = _as_tensor(a)
    mask = a.data > 0.0

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * mask)

    return _make(a.data * mask, (a,), bwd, "relu")


def exp(a):
    a = _as_tensor(a)
    out_data = np.exp(a.data)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * out_data)

    return _make(out_data, (a,), bwd, "exp")


def log(a):
    a = _as_tensor(a)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g / a.data)

    return _make(np.log(a.data), (a,), bwd, "log")


def sqrt(a):
    a = _as_tensor(a)
    out_data = np.sqrt(a.data)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * 0.5 / out_data)

    return _make(out_data, (a,), bwd, "sqrt")


def tsum(a, axis=None, keepdims=False):
    """Sum over all elements (scalar) or along one axis."""
    a = _as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if a.requires_grad:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.data.shape).copy())

    return _make(out_data, (a,), bwd, "sum")


def sq_norm(a):
    """Scalar sum of squared entries."""
    a = _as_tensor(a)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(2.0 * g * a.data)

    return _make((a.data * a.data).sum(), (a,), bwd, "sq_norm")


def gather_rows(a, ids):
    a = _as_tensor(a)
    ids = np.asarray(ids, dtype=np.int64)

    def bwd(g):
        if a.requires_grad:
            ga = np.zeros_like(a.data)
            np.add.at(ga, ids, g)
            a._accumulate(ga)

    return _make(a.data[ids], (a,), bwd, "gather_rows")


def scatter_add_rows(a, ids, src):
    """Copy of `a` with rows of `src` added at positions `ids` (repeats accumulate)."""
    a, src = _as_tensor(a), _as_tensor(src)
    ids = np.asarray(ids, dtype=np.int64)
    if src.data.shape[0] != ids.shape[0] or src.data.shape[1:] != a.data.shape[1:]:
        raise DimensionError(
            f"scatter_add_rows: src {src.data.shape} does not fit target {a.data.shape} with {ids.shape[0]} ids"
        )
    out_data = a.data.copy()
    np.add.at(out_data, ids, src.data)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g)
        if src.requires_grad:
            src._accumulate(g[ids])

    return _make(out_data, (a, src), bwd, "scatter_add_rows")


# ---------------------------------------------------------------------------
# reverse pass and optimizer


def backward(root):
    """Fill .grad on every tensor reachable from a scalar root.

    Intermediate (op output) grads are recomputed from scratch on each
    call; leaf grads accumulate additively, so zero leaves between
    passes. Tensors that do not feed the root keep grad=None.
    """
    if root.data.shape != ():
        raise ContractError(f"backward root must be scalar, got shape {root.data.shape}")
    if root._tape_id < 0:
        root._accumulate(np.ones(()))
        return
    nodes = _tape._nodes[: root._tape_id + 1]
    for node in nodes:
        node.grad = None
    root._accumulate(np.ones(()))
    for node in reversed(nodes):
        if node.grad is None or node._bwd is None:
            continue
        node._bwd(node.grad)


def glorot_uniform(rng, fan_in, fan_out, shape=None):
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    if shape is None:
        shape = (fan_in, fan_out)
    return rng.uniform(-bound, bound, size=shape)


class Adam:
    """Standard Adam recurrences over a fixed parameter list.

    step() consumes and zeroes the gradients; calling it with a missing
    gradient is a contract error.
    """

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise ContractError(f"Adam.step: parameter {i} has no gradient")
            g = p.grad
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            m_hat = self.m[i] / (1.0 - b1**self.t)
            v_hat = self.v[i] / (1.0 - b2**self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.grad = None

    def zero_grad(self):
        for p in self.params:
            p.grad = None
