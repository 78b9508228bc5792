"""
Introduction to LdrPy
=====================

An introduction to structured matrices of low displacement rank.

The :doc:`/api/displacement` module provides operators, the displacement
of a matrix, and the reconstruction of a matrix from its generators.
The :doc:`/api/fastmult` module multiplies structured matrices with
vectors without forming them.

"""

# %%
# Import required modules and functions:

import numpy

from ldrpy.classes import classic_operators, random_class_member, verify_class
from ldrpy.datasets import low_rank_floor, synth_shift_task
from ldrpy.displacement import (
    LdrMatrix,
    Subdiagonal,
    displacement,
    displacement_rank,
    ldr_from_dense,
    reconstruct,
)
from ldrpy.fastmult import ldr_sd_matvec
from ldrpy.learn import TrainConfig, train

# %%
# Classic structured matrices
# ---------------------------
#
# A Toeplitz matrix has constant diagonals. Its displacement with respect
# to the unit-circulant shift operators has rank 2:

toeplitz, classic = random_class_member('toeplitz-like', 8, seed=42)
op_a, op_b = classic.operators()

print(f'displacement rank {displacement_rank(toeplitz, op_a, op_b)}')
print(f'verified rank {verify_class(toeplitz, classic)}')

# %%
# A random dense matrix has full displacement rank:

dense = numpy.random.default_rng(42).standard_normal((8, 8))
print(f'displacement rank {displacement_rank(dense, op_a, op_b)}')

# %%
# The Toeplitz matrix is recovered from generators of its displacement:

ldr = ldr_from_dense(toeplitz, *classic_operators('toeplitz-like', 8))
print(f'generators {ldr.G.shape}, {ldr.H.shape}')
print(f'max error {numpy.abs(reconstruct(ldr) - toeplitz).max():.2e}')

# %%
# Learnable operators
# -------------------
#
# Structured matrices with learnable subdiagonal operators are multiplied
# with vectors in O(r n log**2 n) operations:

rng = numpy.random.default_rng(42)
n, rank = 256, 2
m = LdrMatrix(
    Subdiagonal(rng.uniform(-1, 1, n - 1)),
    Subdiagonal(rng.uniform(-1, 1, n - 1)),
    rng.standard_normal((n, rank)),
    rng.standard_normal((n, rank)),
)
x = rng.standard_normal(n)
y = ldr_sd_matvec(m, x)
error = numpy.linalg.norm(y - reconstruct(m) @ x) / numpy.linalg.norm(y)
print(f'relative error {error:.2e}')

# %%
# The displacement of the reconstruction equals the product of the
# generators:

residual = displacement(reconstruct(m), m.op_a, m.op_b) - m.G @ m.H.T
print(f'max residual {numpy.abs(residual).max():.2e}')

# %%
# Learning a structured layer
# ---------------------------
#
# A single hidden layer with learnable subdiagonal operators is trained to
# recover a random Hankel target, the row-reversed Toeplitz matrix, from
# input and output samples. Powers of subdiagonal operators preserve
# anti-diagonals, which is the structure of Hankel matrices.
# Low-rank matrices with the same number of parameters cannot approximate
# the target well:

data = synth_shift_task(32, 2000, seed=42, flip=True)
print(f'best rank-2 relative error {low_rank_floor(data.target, 2):.3f}')

config = TrainConfig(
    'ldr-sd',
    rank=2,
    n=32,
    samples=2000,
    epochs=10,
    learning_rate=0.01,
    flip=True,
)
result = train(config, data)
print(f'learned relative error {result.target_error:.3f}')
