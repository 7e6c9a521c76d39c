"""
From token states to a refined relation table
=============================================

Every word pair (i, j) gets a cell built from both token vectors, the
max-pooled span between them and a bilinear interaction.  A dilated
convolution block then mixes neighbouring cells.
"""

import numpy as np
from btfccl.mmcnn import MmcnnConfig, init_mmcnn, mmcnn_block
from btfccl.relation_table import TableConfig, build_table, init_table
from btfccl.tensor import ParamStore, Tensor

rng = np.random.default_rng(1)
n, d_model, d_table = 6, 16, 8
params = ParamStore()
init_table(params, TableConfig(d_model=d_model, d_table=d_table, n_slices=4), rng)
mm_cfg = MmcnnConfig(n_blocks=1, channels=d_table, init_scale=0.2)
init_mmcnn(params, mm_cfg, rng)

H = Tensor(rng.normal(size=(n, d_model)))
table = build_table(H, params)
print("table shape", table.shape)

# the table is ordered: row words are aspects, column words are opinions
print("cell (0, 3) differs from (3, 0):", not np.allclose(table.data[0, 3], table.data[3, 0]))

refined = mmcnn_block(table, params, mm_cfg, 0)
print("refined shape", refined.shape)

# a single changed cell only influences cells within the receptive radius
bumped = table.data.copy()
bumped[0, 0] += 1.0
delta = np.abs(mmcnn_block(Tensor(bumped), params, mm_cfg, 0).data - refined.data).sum(-1)
print("receptive radius", mm_cfg.receptive_radius())
print("cells touched by a change at (0, 0):\n", (delta > 0).astype(int))
