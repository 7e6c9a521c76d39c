"""
Reverse-mode gradients on numpy arrays
======================================

Build a small expression, backpropagate, and compare against central
differences.
"""

import numpy as np
from btfccl import tensor as T
from btfccl.tensor import ParamStore, Tensor, grad_check

rng = np.random.default_rng(0)

# parameters live in a ParamStore keyed by dotted paths
params = ParamStore()
w = params.add("layer.weight", rng.normal(size=(4, 3)))
b = params.add("layer.bias", np.zeros(3))
x = Tensor(rng.normal(size=(5, 4)))

# an affine map, a ReLU and a mean
loss = T.relu(T.affine(x, w, b)).mean()
loss.backward()
print("loss", loss.item())
print("d loss / d bias", b.grad)

# the analytic gradient agrees with finite differences
err = grad_check(lambda: T.relu(T.affine(x, w, b)).mean(), params, eps=1e-5, n_coords=15)
print(f"worst relative error {err:.2e}")

# span max-pooling routes each gradient to the first maximum only
h = Tensor(np.array([[1.0, 5.0], [3.0, 5.0], [2.0, 0.0]]), requires_grad=True)
T.pairwise_span_max(h)[0, 2].sum().backward()
print("span max gradient\n", h.grad)
