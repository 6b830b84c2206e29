"""
Reverse-mode differentiation on a tape
======================================

Every ansatz is written with the small tape in ``nqs_scaling.numeric``.
Here it differentiates a two-layer network and the result is compared to
central differences.
"""

import numpy as np

from nqs_scaling import numeric as nm

rng = np.random.default_rng(0)
x = rng.normal(size=(5, 3))
w1 = rng.normal(size=(3, 8))
w2 = rng.normal(size=(8, 4))


def loss_value(w1, w2):
    h = np.tanh(x @ w1)
    z = h @ w2
    lse = np.log(np.exp(z).sum(1, keepdims=True))
    return float((z - lse)[:, 0].sum())


# Leaves carry names; backward returns a dict keyed by them.
with nm.Tape() as tape:
    W1 = nm.Tensor(w1, requires_grad=True, name="w1")
    W2 = nm.Tensor(w2, requires_grad=True, name="w2")
    h = nm.tanh(nm.matmul(x, W1))
    logp = nm.log_softmax(nm.matmul(h, W2), axis=-1)
    out = nm.reduce_sum(nm.slice_(logp, (slice(None), 0)))
grads = nm.backward(tape, out)
print("loss", float(out.data), "vs numpy", loss_value(w1, w2))

# Central differences along one random direction per parameter.
for name, w in (("w1", w1), ("w2", w2)):
    d = rng.normal(size=w.shape)
    eps = 1e-6
    if name == "w1":
        fd = (loss_value(w1 + eps * d, w2) - loss_value(w1 - eps * d, w2)) / (2 * eps)
    else:
        fd = (loss_value(w1, w2 + eps * d) - loss_value(w1, w2 - eps * d)) / (2 * eps)
    print(f"{name}: tape {np.sum(grads[name] * d):+.10f}  finite difference {fd:+.10f}")
