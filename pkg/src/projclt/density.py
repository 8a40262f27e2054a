"""Pointwise density estimation of projected samples and gaussian comparison.

The estimator is a gaussian-product-kernel KDE, evaluated by streaming the
sample in fixed-size chunks and accumulating the kernel-weight sum and sum of
squares per evaluation point; the second moment yields a per-point standard
error.  Dimension is capped at 3 and the sample floor is 10^4 — beyond that
the KDE bias/variance would no longer sit below the tolerances the experiment
suite asserts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooHigh, InvalidSpec, RangeError, TooFewSamples
from .model import (
    BodySpec,
    ConvolutionSchedule,
    DensityEstimate,
    GaussianSpec,
    RatioReport,
    _as_float_array,
    _as_positive_int,
    _freeze,
    register,
)
from .grassmann import project, random_subspace
from .samplers import SampleBatch, _seed_jsonable, _seed_seq, sample_body, sample_gaussian
from .spherical import gaussian_density

MAX_KDE_DIM = 3
MIN_KDE_SAMPLES = 10_000


@register("kde_config")
@dataclass(frozen=True, eq=False)
class KdeConfig:
    """Bandwidth rule and evaluation grid for the density estimator.

    Exactly one grid style must be given: explicit ``points`` (k x l), or a
    radial grid (``radii`` plus ``direction_count`` unit directions per
    radius).  ``bandwidth_rule`` is "scott" (bandwidth sigma_hat * N^(-1/(l+4)))
    or "fixed" (bandwidth given explicitly).
    """

    bandwidth_rule: str = "scott"
    bandwidth: float | None = None
    points: np.ndarray | None = None
    radii: np.ndarray | None = None
    direction_count: int = 16
    chunk_size: int = 16384

    def __post_init__(self):
        if self.bandwidth_rule not in ("scott", "fixed"):
            raise InvalidSpec(f"bandwidth_rule must be 'scott' or 'fixed', got {self.bandwidth_rule!r}")
        if self.bandwidth_rule == "fixed":
            if self.bandwidth is None or not (float(self.bandwidth) > 0):
                raise InvalidSpec("fixed bandwidth_rule needs bandwidth > 0")
            object.__setattr__(self, "bandwidth", float(self.bandwidth))
        elif self.bandwidth is not None:
            raise InvalidSpec("bandwidth is only meaningful with bandwidth_rule='fixed'")
        if (self.points is None) == (self.radii is None):
            raise InvalidSpec("exactly one of points / radii must be given")
        if self.points is not None:
            pts = np.asarray(self.points, dtype=np.float64)
            if pts.ndim == 1:
                pts = pts[:, None]
            object.__setattr__(self, "points", _freeze(_as_float_array(pts, "points", 2)))
        else:
            radii = _freeze(_as_float_array(self.radii, "radii", 1))
            if np.any(radii < 0):
                raise InvalidSpec("radii must be nonnegative")
            object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "direction_count", _as_positive_int(self.direction_count, "direction_count"))
        object.__setattr__(self, "chunk_size", _as_positive_int(self.chunk_size, "chunk_size"))

    def to_jsonable(self) -> dict:
        return {
            "type": self.json_tag,
            "bandwidth_rule": self.bandwidth_rule,
            "bandwidth": self.bandwidth,
            "points": None if self.points is None else self.points.tolist(),
            "radii": None if self.radii is None else self.radii.tolist(),
            "direction_count": self.direction_count,
            "chunk_size": self.chunk_size,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "KdeConfig":
        return cls(
            bandwidth_rule=d["bandwidth_rule"],
            bandwidth=d["bandwidth"],
            points=None if d["points"] is None else np.asarray(d["points"]),
            radii=None if d["radii"] is None else np.asarray(d["radii"]),
            direction_count=d["direction_count"],
            chunk_size=d["chunk_size"],
        )


def unit_directions(l: int, count: int) -> np.ndarray:
    """A fixed, deterministic set of unit vectors in R^l for radial averaging.

    l=1: the two signs.  l=2: equally spaced points on the circle.  l=3: a
    Fibonacci-lattice covering of the sphere.
    """
    if l == 1:
        return np.array([[1.0], [-1.0]])
    if l == 2:
        angles = 2.0 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if l == 3:
        k = np.arange(count)
        z = 1.0 - (2.0 * k + 1.0) / count
        rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        golden = math.pi * (3.0 - math.sqrt(5.0))
        return np.column_stack([rho * np.cos(golden * k), rho * np.sin(golden * k), z])
    raise DimensionTooHigh(f"radial direction sets are defined for l <= 3, got l={l}")


def _radial_points(radii: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Points t*u laid out radius-major: all directions of radii[0], then radii[1], ..."""
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dirs.shape[1])


def scott_bandwidth(data: np.ndarray) -> float:
    """Scott's rule: sqrt(mean per-coordinate variance) * N^(-1/(l+4))."""
    count, l = data.shape
    sigma = math.sqrt(float(np.mean(np.var(data, axis=0))))
    if sigma == 0.0:
        sigma = 1.0  # degenerate sample; any positive bandwidth is as good as another
    return sigma * count ** (-1.0 / (l + 4))


def estimate_density(projected: SampleBatch, config: KdeConfig) -> DensityEstimate:
    """Gaussian-kernel density estimate of a batch at the configured grid."""
    l = projected.dimension
    if l > MAX_KDE_DIM:
        raise DimensionTooHigh(f"density estimation supports l <= {MAX_KDE_DIM}, got l={l}")
    count = projected.count
    if count < MIN_KDE_SAMPLES:
        raise TooFewSamples(f"density estimation needs >= {MIN_KDE_SAMPLES} samples, got {count}")

    if config.points is not None:
        pts = config.points
        if pts.shape[1] != l:
            raise InvalidSpec(f"evaluation points have dimension {pts.shape[1]}, batch has {l}")
    else:
        pts = _radial_points(config.radii, unit_directions(l, config.direction_count))

    h = config.bandwidth if config.bandwidth_rule == "fixed" else scott_bandwidth(projected.data)
    data = projected.data
    k = pts.shape[0]
    pts_sq = np.einsum("ij,ij->i", pts, pts)
    log_norm = -0.5 * l * math.log(2.0 * math.pi) - l * math.log(h)
    norm_const = math.exp(log_norm)
    inv_two_h2 = 1.0 / (2.0 * h * h)

    acc = np.zeros(k)
    acc_sq = np.zeros(k)
    for lo in range(0, count, config.chunk_size):
        block = data[lo : lo + config.chunk_size]
        sq = np.einsum("ij,ij->i", block, block)[:, None] + pts_sq[None, :]
        sq -= 2.0 * (block @ pts.T)
        np.clip(sq, 0.0, None, out=sq)
        w = np.exp(sq * -inv_two_h2)
        w *= norm_const
        acc += w.sum(axis=0)
        acc_sq += np.einsum("ij,ij->j", w, w)

    values = acc / count
    var = np.clip(acc_sq / count - values * values, 0.0, None)
    stderr = np.sqrt(var / count)
    return DensityEstimate(
        points=pts, values=values, stderr=stderr, sample_count=count, bandwidth=h
    )


def ratio_to_gaussian(estimate: DensityEstimate, v: float, max_radius: float) -> RatioReport:
    """Per-point estimate / gaussian_l[v] ratios over |x| <= max_radius."""
    max_radius = float(max_radius)
    if not (max_radius > 0 and math.isfinite(max_radius)):
        raise RangeError(f"max_radius must be positive, got {max_radius!r}")
    norms = np.linalg.norm(estimate.points, axis=1)
    if np.any(norms > max_radius * (1.0 + 1e-12)):
        raise RangeError(
            f"evaluation points reach radius {norms.max():.6g} > max_radius {max_radius:.6g}"
        )
    ref = gaussian_density(estimate.dim, v, norms)
    return RatioReport.from_ratios(
        norms,
        estimate.values / ref,
        meta={
            "variance": float(v),
            "max_radius": max_radius,
            "bandwidth": estimate.bandwidth,
            "sample_count": estimate.sample_count,
        },
    )


def m_tilde_profile(
    body: BodySpec,
    schedule: ConvolutionSchedule,
    l: int,
    radii,
    subspace_count: int,
    samples_per_subspace: int,
    seed,
    direction_count: int = 16,
    chunk_size: int = 16384,
    threads: int = 1,
) -> RatioReport:
    """Rotation-averaged radial profile of the smoothed projected density.

    For each of ``subspace_count`` independent Haar subspaces: draw a fresh
    body sample, add unrescaled gaussian noise of variance v(n) from the
    schedule, project, and KDE-evaluate at every radius (averaged over a fixed
    set of unit directions).  The subspace-averaged values are divided by the
    gaussian density of variance 1 + v, which is the exact law the smoothed
    projection approaches; the profile is reported as ratios against radius.
    """
    l = _as_positive_int(l, "l")
    if l > MAX_KDE_DIM:
        raise DimensionTooHigh(f"m_tilde_profile supports l <= {MAX_KDE_DIM}, got l={l}")
    subspace_count = _as_positive_int(subspace_count, "subspace_count")
    radii = _as_float_array(radii, "radii", 1)
    if np.any(radii < 0):
        raise InvalidSpec("radii must be nonnegative")
    n = body.dimension
    v = schedule.noise_variance(n)
    noise = GaussianSpec(dimension=n, variance=v)
    dirs = unit_directions(l, direction_count)
    cfg = KdeConfig(radii=radii, direction_count=direction_count, chunk_size=chunk_size)

    root = _seed_seq(seed)
    accum = np.zeros(radii.size)
    for child in root.spawn(subspace_count):
        body_seed, noise_seed, basis_seed = child.spawn(3)
        x = sample_body(body, samples_per_subspace, body_seed, threads=threads)
        y = sample_gaussian(noise, samples_per_subspace, noise_seed, threads=threads)
        smoothed = SampleBatch(
            data=x.data + y.data,
            seed=_seed_jsonable(child),
            source={"draw": "smoothed", "of": x.source, "noise_variance": v},
        )
        del x, y
        basis = random_subspace(n, l, basis_seed)
        est = estimate_density(project(smoothed, basis), cfg)
        del smoothed
        accum += est.values.reshape(radii.size, dirs.shape[0]).mean(axis=1)

    profile = (accum / subspace_count) / gaussian_density(l, 1.0 + v, radii)
    return RatioReport.from_ratios(
        radii,
        profile,
        meta={
            "body": body.to_jsonable(),
            "schedule": schedule.to_jsonable(),
            "l": l,
            "noise_variance": v,
            "subspace_count": subspace_count,
            "samples_per_subspace": samples_per_subspace,
            "direction_count": direction_count,
            "seed": _seed_jsonable(seed),
        },
    )
