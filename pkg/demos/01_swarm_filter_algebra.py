"""What a swarm filter computes, checked three ways."""

# %%
import numpy as np

from scnn.layers import SwarmFilter, swarm_filter_forward
from scnn.tensor import Prng, column_mean, outer

prng = Prng(1)
x = prng.normal((6,))
s = prng.normal((4,))

# the definition: column means of the outer product
naive = column_mean(outer(x, s))
# the collapsed form used by the layer
fast = swarm_filter_forward(x, s)
print("outer/column-mean :", naive)
print("mean(x) * s       :", fast)
print("max difference    :", np.abs(naive - fast).max())

# %%
# Only mean(x) survives, so reordering x changes nothing.
shuffled = x[prng.permutation(6)]
print("permuted input    :", swarm_filter_forward(shuffled, s))

# %%
# Stacking filters: every output row is a multiple of the last filter.
first, second = SwarmFilter(5, Prng(2)), SwarmFilter(3, Prng(3))
batch = prng.normal((4, 8))
h, _ = first.forward(batch)
out, _ = second.forward(h)
ratios = out / second.s.data
print("outputs / s (each row constant):")
print(np.round(ratios, 6))

# %%
# Inputs with the same mean are indistinguishable.
a = np.array([1.0, 1.0, 1.0, 1.0])
b = np.array([4.0, 0.0, 0.0, 0.0])
print("same mean, same feature:", np.array_equal(swarm_filter_forward(a, s), swarm_filter_forward(b, s)))
