"""Samplers for the isotropic body catalog, gaussian noise, and smoothed vectors.

Normalizations (all kinds have mean 0 and identity covariance):

* cube — i.i.d. coordinates uniform on [-sqrt(3), sqrt(3)], variance (2*sqrt(3))^2/12 = 1.
* ball — uniform on the centered euclidean ball of radius sqrt(n+2); drawn as
  (gaussian direction) x (radius with CDF (r/R)^n), which is exact and
  rejection-free in every dimension, and gives E|X|^2 = n R^2/(n+2) = n.
* simplex — uniform on the regular n-simplex via normalized exponential
  spacings (the first n coordinates of a flat Dirichlet), centered at its
  known mean 1/(n+1) and whitened with the closed-form inverse square root of
  the simplex covariance.  With a = 1/((n+1)(n+2)) the covariance is
  a*(I - J/(n+1)), whose inverse square root acts as 1/sqrt(a) orthogonal to
  the all-ones direction and sqrt((n+1)/a) along it — so whitening is two
  rank-one updates per sample, no n x n matrix.
* product_laplace — i.i.d. two-sided exponential with scale 1/sqrt(2), since
  Var(Laplace(b)) = 2 b^2.
* gaussian — standard normal coordinates.

Generation is chunked: the root ``SeedSequence`` is split into one child per
fixed-size chunk of rows, each chunk gets its own generator, and chunks write
disjoint slices of a preallocated array.  Results are therefore bit-identical
for a given (spec, count, seed) no matter how many worker threads are used,
and large batches never need more than one chunk of scratch space.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, SingularCovariance
from .model import (
    BodyKind,
    BodySpec,
    ConvolutionSchedule,
    GaussianSpec,
    _as_positive_int,
    _freeze,
    register,
)

CHUNK = 1 << 16

_SQRT3 = math.sqrt(3.0)
_LAPLACE_SCALE = 1.0 / math.sqrt(2.0)


@register("sample_batch")
@dataclass(frozen=True, eq=False)
class SampleBatch:
    """An immutable (count, dimension) block of samples with its provenance."""

    data: np.ndarray
    seed: object
    source: dict

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2:
            raise InvalidSpec(f"data must be a (count, dimension) array, got shape {a.shape}")
        object.__setattr__(self, "data", _freeze(a))
        if not isinstance(self.source, dict):
            raise InvalidSpec("source must be a JSON-ready dict")

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dimension(self) -> int:
        return self.data.shape[1]

    def to_jsonable(self) -> dict:
        return {
            "type": self.json_tag,
            "dimension": self.dimension,
            "count": self.count,
            "seed": self.seed,
            "source": self.source,
            "data": self.data.tolist(),
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "SampleBatch":
        batch = cls(data=np.asarray(d["data"], dtype=np.float64), seed=d["seed"], source=d["source"])
        if batch.count != d["count"] or batch.dimension != d["dimension"]:
            raise InvalidSpec("stored count/dimension disagree with the stored data")
        return batch


def _seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def _seed_jsonable(seed):
    """A JSON-ready description of a seed (int or spawned SeedSequence)."""
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    return int(seed)


def _generate(count: int, dim: int, seed, fill, threads: int = 1) -> np.ndarray:
    """Fill a (count, dim) array chunk by chunk with per-chunk child streams."""
    out = np.empty((count, dim), dtype=np.float64)
    bounds = [(lo, min(lo + CHUNK, count)) for lo in range(0, count, CHUNK)]
    children = _seed_seq(seed).spawn(len(bounds))

    def work(task):
        (lo, hi), child = task
        fill(np.random.default_rng(child), out[lo:hi])

    tasks = list(zip(bounds, children))
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, tasks))
    else:
        for task in tasks:
            work(task)
    return out


def _fill_cube(rng, out):
    out[...] = rng.uniform(-_SQRT3, _SQRT3, size=out.shape)


def _fill_ball(rng, out):
    m, n = out.shape
    rng.standard_normal(out=out)
    norms = np.linalg.norm(out, axis=1)
    norms[norms == 0.0] = 1.0
    radii = math.sqrt(n + 2.0) * rng.random(m) ** (1.0 / n)
    out *= (radii / norms)[:, None]


def _fill_simplex(rng, out):
    m, n = out.shape
    spacings = rng.standard_exponential(size=(m, n + 1))
    s = spacings[:, :n] / spacings.sum(axis=1, keepdims=True)
    s -= 1.0 / (n + 1.0)
    a = 1.0 / ((n + 1.0) * (n + 2.0))
    row_mean = s.mean(axis=1, keepdims=True)
    out[...] = (s - row_mean) / math.sqrt(a) + row_mean * math.sqrt((n + 1.0) / a)


def _fill_laplace(rng, out):
    out[...] = rng.laplace(0.0, _LAPLACE_SCALE, size=out.shape)


def _fill_gaussian(rng, out):
    rng.standard_normal(out=out)


_FILLS = {
    BodyKind.CUBE: _fill_cube,
    BodyKind.BALL: _fill_ball,
    BodyKind.SIMPLEX: _fill_simplex,
    BodyKind.PRODUCT_LAPLACE: _fill_laplace,
    BodyKind.STANDARD_GAUSSIAN: _fill_gaussian,
}


def sample_body(spec: BodySpec, count: int, seed, threads: int = 1) -> SampleBatch:
    """Draw i.i.d. samples from the isotropically normalized body."""
    if not isinstance(spec, BodySpec):
        raise InvalidSpec(f"spec must be a BodySpec, got {type(spec).__name__}")
    count = _as_positive_int(count, "count")
    data = _generate(count, spec.dimension, seed, _FILLS[spec.kind], threads)
    return SampleBatch(
        data=data,
        seed=_seed_jsonable(seed),
        source={"draw": "body", "spec": spec.to_jsonable()},
    )


def sample_gaussian(spec: GaussianSpec, count: int, seed, threads: int = 1) -> SampleBatch:
    """Draw i.i.d. samples from the isotropic gaussian with the given variance."""
    if not isinstance(spec, GaussianSpec):
        raise InvalidSpec(f"spec must be a GaussianSpec, got {type(spec).__name__}")
    count = _as_positive_int(count, "count")
    sigma = math.sqrt(spec.variance)

    def fill(rng, out):
        rng.standard_normal(out=out)
        if sigma != 1.0:
            out *= sigma

    data = _generate(count, spec.dimension, seed, fill, threads)
    return SampleBatch(
        data=data,
        seed=_seed_jsonable(seed),
        source={"draw": "gaussian", "spec": spec.to_jsonable()},
    )


def convolve_and_rescale(
    x: SampleBatch,
    schedule: ConvolutionSchedule,
    seed,
    noise_variance: float | None = None,
    threads: int = 1,
) -> SampleBatch:
    """Return (x + y) / sqrt(1 + v) with y fresh gaussian noise of variance v.

    v defaults to ``schedule.noise_variance(x.dimension)``; passing
    ``noise_variance=0.0`` makes the operation the identity on the data.
    The rescaling keeps an isotropic input isotropic.
    """
    v = schedule.noise_variance(x.dimension) if noise_variance is None else float(noise_variance)
    if not (v >= 0.0 and math.isfinite(v)):
        raise InvalidSpec(f"noise variance must be finite and >= 0, got {noise_variance!r}")
    source = {
        "draw": "convolved_rescaled",
        "of": x.source,
        "schedule": schedule.to_jsonable(),
        "noise_variance": v,
        "noise_seed": _seed_jsonable(seed),
    }
    if v == 0.0:
        return SampleBatch(data=x.data, seed=x.seed, source=source)

    sigma = math.sqrt(v)
    scale = 1.0 / math.sqrt(1.0 + v)
    xdata = x.data
    out = np.empty_like(xdata)
    bounds = [(lo, min(lo + CHUNK, x.count)) for lo in range(0, x.count, CHUNK)]
    children = _seed_seq(seed).spawn(len(bounds))

    def work(task):
        (lo, hi), child = task
        rng = np.random.default_rng(child)
        block = rng.standard_normal((hi - lo, xdata.shape[1]))
        block *= sigma
        block += xdata[lo:hi]
        block *= scale
        out[lo:hi] = block

    tasks = list(zip(bounds, children))
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, tasks))
    else:
        for task in tasks:
            work(task)
    return SampleBatch(data=out, seed=x.seed, source=source)


def whiten(batch: SampleBatch) -> SampleBatch:
    """Map a batch to empirical mean 0 and identity empirical covariance.

    Uses the symmetric inverse square root of the empirical covariance, which
    is deterministic and has no factorization sign ambiguity, so whitening a
    rescaled copy of a batch reproduces the same output exactly up to
    floating-point error.
    """
    n = batch.dimension
    if batch.count < n + 1:
        raise SingularCovariance(
            f"need at least dimension + 1 = {n + 1} samples to whiten, got {batch.count}"
        )
    centered = batch.data - batch.data.mean(axis=0)
    cov = (centered.T @ centered) / batch.count
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] <= eigvals[-1] * 1e-12 or eigvals[0] <= 0.0:
        raise SingularCovariance(
            f"empirical covariance is numerically singular (eigenvalue range "
            f"[{eigvals[0]:.3e}, {eigvals[-1]:.3e}])"
        )
    inv_root = (eigvecs / np.sqrt(eigvals)) @ eigvecs.T
    return SampleBatch(
        data=centered @ inv_root,
        seed=batch.seed,
        source={"draw": "whitened", "of": batch.source},
    )


def save_batch(batch: SampleBatch, path: str, config: dict | None = None) -> None:
    """Write the batch as column-major float64 binary plus a JSON sidecar."""
    batch.data.ravel(order="F").tofile(path)
    sidecar = {
        "schema_version": 1,
        "dimension": batch.dimension,
        "count": batch.count,
        "seed": batch.seed,
        "source": batch.source,
        "dtype": "float64",
        "order": "column_major",
    }
    if config is not None:
        sidecar["config"] = config
    with open(path + ".json", "w") as f:
        json.dump(sidecar, f, indent=2)
        f.write("\n")


def load_batch(path: str) -> SampleBatch:
    """Inverse of :func:`save_batch`."""
    with open(path + ".json") as f:
        sidecar = json.load(f)
    if sidecar.get("dtype") != "float64" or sidecar.get("order") != "column_major":
        raise InvalidSpec(f"unsupported batch layout in sidecar {path + '.json'}")
    count, dim = sidecar["count"], sidecar["dimension"]
    flat = np.fromfile(path, dtype=np.float64)
    if flat.size != count * dim:
        raise InvalidSpec(
            f"batch file holds {flat.size} doubles, sidecar promises {count}x{dim}"
        )
    data = flat.reshape((count, dim), order="F")
    return SampleBatch(data=data, seed=sidecar["seed"], source=sidecar["source"])


def save_batch_csv(batch: SampleBatch, path: str, config: dict | None = None) -> None:
    """Write the batch as CSV: '#'-prefixed provenance lines, header, rows."""
    header = {
        "schema_version": 1,
        "dimension": batch.dimension,
        "count": batch.count,
        "seed": batch.seed,
        "source": batch.source,
    }
    if config is not None:
        header["config"] = config
    with open(path, "w") as f:
        f.write("# " + json.dumps(header) + "\n")
        f.write(",".join(f"x{i}" for i in range(batch.dimension)) + "\n")
        for row in batch.data:
            f.write(",".join(repr(float(v)) for v in row) + "\n")
