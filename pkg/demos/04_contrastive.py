"""
The margin hinge between sentence and table views
=================================================

The sentence vector is pulled toward its own pooled table and pushed away
from the pooled tables of the other sentences in the batch.
"""

import numpy as np
from btfccl.contrastive import contrastive_loss
from btfccl.tensor import Tensor

h_cls = Tensor(np.array([0.0, 0.0]))
own = Tensor(np.array([0.3, 0.4]))          # distance 0.5
others = [Tensor(np.array([3.0, 4.0])),     # distance 5, already far enough
          Tensor(np.array([0.0, 1.0]))]     # distance 1, inside the margin

for m in (0.25, 1.0, 2.0):
    loss = contrastive_loss(h_cls, own, others, margin=m)
    print(f"margin {m}: loss {loss.item():.3f}")

# identical positive and negative cost exactly the margin
print(contrastive_loss(h_cls, own, [own], margin=1.0).item())
