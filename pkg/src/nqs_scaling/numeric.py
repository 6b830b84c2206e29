"""Dense float64 tensors with tape-based reverse-mode differentiation.

Operations record themselves only while a :class:`Tape` is active and at
least one input requires a gradient; outside a tape they are plain numpy
arithmetic.

>>> w = Tensor(3.0, requires_grad=True, name="w")
>>> with Tape() as tape:
...     y = w * w
>>> backward(tape, y)["w"]
array(6.)
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

DTYPE = np.float64
NEG_LARGE = -1e30  # finite stand-in for -inf in masked logits

_TAPES: list["Tape"] = []


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    __array_priority__ = 100

    def __add__(self, o):
        return add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        return sub(self, o)

    def __rsub__(self, o):
        return sub(o, self)

    def __mul__(self, o):
        return mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return div(self, o)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, o):
        return matmul(self, o)

    def __getitem__(self, idx):
        return slice_(self, idx)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def swapaxes(self, a, b):
        return swapaxes(self, a, b)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis, keepdims)


class Tape:
    """Records differentiable operations executed inside its context."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.pop()
        return False


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents: Sequence[Tensor], grad_fn: Callable) -> Tensor:
    out = Tensor(data)
    if _TAPES and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = grad_fn
        _TAPES[-1].nodes.append(out)
    return out


def backward(tape: Tape, output: Tensor) -> dict[str, np.ndarray]:
    """Gradients of a scalar ``output`` with respect to every named leaf on ``tape``."""
    if output.size != 1:
        raise ShapeError(f"backward needs a scalar output, got shape {output.shape}")
    grads: dict[int, np.ndarray] = {id(output): np.ones_like(output.data)}
    leaves: dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        parent_grads = node._backward(g)
        for p, pg in zip(node._parents, parent_grads):
            if pg is None or not p.requires_grad:
                continue
            if p._backward is None:
                leaves[id(p)] = p
            key = id(p)
            grads[key] = grads[key] + pg if key in grads else pg
    out = {}
    for key, leaf in leaves.items():
        if leaf.name is not None:
            out[leaf.name] = grads.get(key, np.zeros_like(leaf.data))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _check_broadcast(a: Tensor, b: Tensor, op: str):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# --- elementwise -----------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "add")
    return _make(
        a.data + b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape))
    )


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "sub")
    return _make(
        a.data - b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape))
    )


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "mul")
    return _make(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "div")
    out = a.data / b.data
    return _make(
        out,
        (a, b),
        lambda g: (_unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)),
    )


def exp(x) -> Tensor:
    x = _as_tensor(x)
    out = np.exp(x.data)
    return _make(out, (x,), lambda g: (g * out,))


def log(x) -> Tensor:
    x = _as_tensor(x)
    return _make(np.log(x.data), (x,), lambda g: (g / x.data,))


def tanh(x) -> Tensor:
    x = _as_tensor(x)
    out = np.tanh(x.data)
    return _make(out, (x,), lambda g: (g * (1.0 - out * out),))


def sigmoid(x) -> Tensor:
    x = _as_tensor(x)
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),))


def relu(x) -> Tensor:
    x = _as_tensor(x)
    pos = x.data > 0
    return _make(np.where(pos, x.data, 0.0), (x,), lambda g: (g * pos,))


# --- linear algebra and shape ------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def grad(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(a.data @ b.data, (a, b), grad)


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {x.shape} to {tuple(shape)}") from None
    return _make(out, (x,), lambda g: (g.reshape(x.shape),))


def swapaxes(x, a: int, b: int) -> Tensor:
    x = _as_tensor(x)
    return _make(np.swapaxes(x.data, a, b), (x,), lambda g: (np.swapaxes(g, a, b),))


def slice_(x, idx) -> Tensor:
    x = _as_tensor(x)

    def grad(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g)
        return (full,)

    return _make(x.data[idx], (x,), grad)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from None
    splits = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return _make(out, ts, lambda g: tuple(np.split(g, splits, axis=axis)))


def reduce_sum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)

    def grad(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(x.data.sum(axis=axis, keepdims=keepdims), (x,), grad)


def embed_lookup(table, idx) -> Tensor:
    table = _as_tensor(table)
    idx = np.asarray(idx, dtype=np.int64)

    def grad(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return (full,)

    return _make(table.data[idx], (table,), grad)


def masked_fill(x, mask, value: float) -> Tensor:
    x = _as_tensor(x)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    return _make(np.where(mask, value, x.data), (x,), lambda g: (np.where(mask, 0.0, g),))


# --- normalisations -----------------------------------------------------------------


def softmax(x, axis: int = -1) -> Tensor:
    x = _as_tensor(x)
    e = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
    out = e / e.sum(axis=axis, keepdims=True)
    return _make(out, (x,), lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),))


def log_softmax(x, axis: int = -1) -> Tensor:
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    p = np.exp(out)
    return _make(out, (x,), lambda g: (g - p * g.sum(axis=axis, keepdims=True),))


def standardize(x, eps: float = 1e-5) -> Tensor:
    """Zero-mean, unit-variance normalisation over the last axis."""
    x = _as_tensor(x)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv

    def grad(g):
        gm = g.mean(axis=-1, keepdims=True)
        gx = (g * xhat).mean(axis=-1, keepdims=True)
        return (inv * (g - gm - xhat * gx),)

    return _make(xhat, (x,), grad)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    return standardize(x, eps) * gain + bias


def group_norm(x, n_groups: int, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalise each of ``n_groups`` contiguous chunks of the last axis separately."""
    x = _as_tensor(x)
    d = x.shape[-1]
    if d % n_groups:
        raise ShapeError(f"group_norm: last dim {d} not divisible by {n_groups} groups")
    grouped = reshape(x, x.shape[:-1] + (n_groups, d // n_groups))
    return reshape(standardize(grouped, eps), x.shape) * gain + bias


def op_set() -> dict[str, Callable]:
    return {
        "matmul": matmul,
        "add": add,
        "mul": mul,
        "softmax": softmax,
        "log_softmax": log_softmax,
        "sigmoid": sigmoid,
        "relu": relu,
        "layer_norm": layer_norm,
        "group_norm": group_norm,
        "embed_lookup": embed_lookup,
        "masked_fill": masked_fill,
        "concat": concat,
        "slice": slice_,
        "reduce_sum": reduce_sum,
    }


# --- parameters ------------------------------------------------------------------------

CHECKPOINT_MAGIC = "NQSCKPT1"


class ParameterStore:
    """Ordered named parameter arrays split into modulus and phase groups."""

    def __init__(self):
        self._arrays: OrderedDict[str, np.ndarray] = OrderedDict()
        self._group: dict[str, str] = {}

    def add(self, name: str, value, group: str = "modulus") -> np.ndarray:
        if name in self._arrays:
            raise KeyError(f"duplicate parameter {name}")
        if group not in ("modulus", "phase"):
            raise ValueError(f"unknown parameter group {group!r}")
        self._arrays[name] = np.array(value, dtype=DTYPE)
        self._group[name] = group
        return self._arrays[name]

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __iter__(self):
        return iter(self._arrays)

    def items(self):
        return self._arrays.items()

    def group_of(self, name: str) -> str:
        return self._group[name]

    @property
    def total_count(self) -> int:
        return sum(a.size for a in self._arrays.values())

    @property
    def modulus_count(self) -> int:
        return sum(a.size for k, a in self._arrays.items() if self._group[k] == "modulus")

    @property
    def phase_count(self) -> int:
        return sum(a.size for k, a in self._arrays.items() if self._group[k] == "phase")

    def tensors(self, requires_grad: bool = False) -> dict[str, Tensor]:
        return {k: Tensor(a, requires_grad=requires_grad, name=k) for k, a in self._arrays.items()}

    def copy(self) -> "ParameterStore":
        new = ParameterStore()
        for k, a in self._arrays.items():
            new.add(k, a.copy(), self._group[k])
        return new

    def update(self, new_values: Mapping[str, np.ndarray]):
        for k, v in new_values.items():
            v = np.asarray(v, dtype=DTYPE)
            if v.shape != self._arrays[k].shape:
                raise ShapeError(f"{k}: shape {v.shape} != {self._arrays[k].shape}")
            self._arrays[k] = v.copy()

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self._arrays.values()]) if self._arrays else np.zeros(0)

    def set_flat(self, vec: np.ndarray):
        vec = np.asarray(vec, dtype=DTYPE)
        if vec.size != self.total_count:
            raise ShapeError(f"flat vector has {vec.size} entries, expected {self.total_count}")
        off = 0
        for k, a in self._arrays.items():
            self._arrays[k] = vec[off : off + a.size].reshape(a.shape).copy()
            off += a.size

    def flatten_grads(self, grads: Mapping[str, np.ndarray]) -> np.ndarray:
        return np.concatenate(
            [np.asarray(grads.get(k, np.zeros_like(a))).ravel() for k, a in self._arrays.items()]
        )


def save_checkpoint(store: ParameterStore, path, metadata: Mapping[str, str] | None = None):
    """Write parameters as text: magic line, ``@key value`` metadata, then one block per tensor."""
    lines = [CHECKPOINT_MAGIC]
    for k, v in (metadata or {}).items():
        lines.append(f"@{k} {v}")
    for name, arr in store.items():
        shape = " ".join(str(s) for s in arr.shape)
        lines.append(f"{name} {store.group_of(name)} {arr.ndim} {shape}".rstrip())
        lines.append(" ".join(repr(float(v)) for v in arr.ravel()))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> tuple[ParameterStore, dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC} checkpoint")
    meta: dict[str, str] = {}
    store = ParameterStore()
    i = 1
    while i < len(lines):
        line = lines[i]
        if line.startswith("@"):
            key, _, value = line[1:].partition(" ")
            meta[key] = value
            i += 1
            continue
        head = line.split()
        name, group, ndim = head[0], head[1], int(head[2])
        shape = tuple(int(s) for s in head[3 : 3 + ndim])
        values = np.array([float(v) for v in lines[i + 1].split()], dtype=DTYPE)
        store.add(name, values.reshape(shape), group)
        i += 2
    return store, meta


def tensors_from(params: Mapping[str, np.ndarray] | Iterable) -> dict[str, Tensor]:
    return {k: v if isinstance(v, Tensor) else Tensor(v, name=k) for k, v in dict(params).items()}
