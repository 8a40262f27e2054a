"""Haar-random subspaces and orthogonal projection onto them.

A subspace is drawn by orthonormalizing the rows of an l x n matrix of i.i.d.
standard gaussians; rotational invariance of the gaussian makes the induced
law the unique rotation-invariant measure on l-dimensional subspaces.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .model import SubspaceBasis
from .samplers import SampleBatch, _seed_seq


def random_subspace(n: int, l: int, seed) -> SubspaceBasis:
    """Draw a Haar-random l-dimensional subspace of R^n as an orthonormal frame.

    The QR factorization's sign ambiguity is fixed so that every basis row has
    nonnegative inner product with the raw gaussian row it came from; the
    result is then a deterministic function of (n, l, seed).
    """
    if not 1 <= l <= n:
        raise DimensionError(f"need 1 <= l <= n, got l={l}, n={n}")
    rng = np.random.default_rng(_seed_seq(seed))
    raw = rng.standard_normal((l, n))
    q, r = np.linalg.qr(raw.T)
    signs = np.sign(np.diag(r).copy())
    signs[signs == 0.0] = 1.0
    return SubspaceBasis(rows=(q * signs).T)


def project(batch: SampleBatch, basis: SubspaceBasis) -> SampleBatch:
    """Express the orthogonal projection of each sample in the basis rows.

    The output has dimension ``basis.subspace_dim``; with orthonormal rows the
    coordinate vector has euclidean norm at most that of the input sample.
    """
    if batch.dimension != basis.ambient_dim:
        raise DimensionError(
            f"batch dimension {batch.dimension} != basis ambient dimension {basis.ambient_dim}"
        )
    return SampleBatch(
        data=batch.data @ basis.rows.T,
        seed=batch.seed,
        source={
            "draw": "projected",
            "of": batch.source,
            "subspace_dim": basis.subspace_dim,
        },
    )
