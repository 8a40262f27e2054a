"""Core configuration and report types shared by every module.

All types are immutable dataclasses.  Structural checks run on construction;
:func:`validate` re-checks the full invariant set and returns the value, so a
freshly deserialized object can be gated before use.

Every type serializes to plain JSON with snake_case keys through
:func:`to_jsonable` / :func:`from_jsonable` (dispatch on a ``"type"`` tag).
Floats survive the round trip exactly because ``json`` emits shortest-repr
doubles; arrays are stored as nested lists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidSpec

_GRAM_TOL = 1e-10
_MASS_SHORTFALL = 1e-6

_REGISTRY: dict[str, type] = {}


def register(tag: str):
    """Class decorator: make a type round-trippable under the given JSON tag."""

    def deco(cls):
        cls.json_tag = tag
        _REGISTRY[tag] = cls
        return cls

    return deco


def validate(value):
    """Return ``value`` iff all of its invariants hold, else raise InvalidSpec.

    Construction already enforces structural invariants; types that have
    additional whole-value checks define ``check_invariants``.
    """
    check = getattr(value, "check_invariants", None)
    if check is not None:
        check()
    return value


def to_jsonable(value):
    """Convert a registered value to a plain JSON-ready dict."""
    conv = getattr(value, "to_jsonable", None)
    if conv is None:
        raise TypeError(f"{type(value).__name__} is not a serializable model type")
    return conv()


def from_jsonable(payload: dict):
    """Rebuild a registered value from its JSON dict (inverse of to_jsonable)."""
    if not isinstance(payload, dict) or "type" not in payload:
        raise InvalidSpec("serialized value must be a dict with a 'type' tag")
    cls = _REGISTRY.get(payload["type"])
    if cls is None:
        raise InvalidSpec(f"unknown serialized type tag {payload['type']!r}")
    return cls.from_jsonable(payload)


def dumps(value, indent=None) -> str:
    return json.dumps(to_jsonable(value), indent=indent)


def loads(text: str):
    return from_jsonable(json.loads(text))


def _as_float_array(x, name: str, ndim: int) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != ndim:
        raise InvalidSpec(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidSpec(f"{name} contains non-finite entries")
    return a


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _as_positive_int(x, name: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
        raise InvalidSpec(f"{name} must be an integer, got {x!r}")
    if x < 1:
        raise InvalidSpec(f"{name} must be >= 1, got {x}")
    return int(x)


class BodyKind(str, Enum):
    """The closed catalog of isotropically normalized source distributions."""

    CUBE = "cube"
    BALL = "ball"
    SIMPLEX = "simplex"
    PRODUCT_LAPLACE = "product_laplace"
    STANDARD_GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, value) -> "BodyKind":
        if isinstance(value, cls):
            return value
        aliases = {"laplace": "product_laplace", "standard_gaussian": "gaussian"}
        key = str(value).lower()
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            known = ", ".join(k.value for k in cls)
            raise InvalidSpec(f"unknown body kind {value!r}; known kinds: {known}") from None


@register("body_spec")
@dataclass(frozen=True)
class BodySpec:
    """A named source distribution together with its ambient dimension.

    Every kind is normalized to mean zero and identity covariance, either in
    closed form (cube, ball, product_laplace, gaussian) or by the exact
    whitening map of the regular simplex.
    """

    kind: BodyKind
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "kind", BodyKind.parse(self.kind))
        object.__setattr__(self, "dimension", _as_positive_int(self.dimension, "dimension"))

    def to_jsonable(self) -> dict:
        return {"type": self.json_tag, "kind": self.kind.value, "dimension": self.dimension}

    @classmethod
    def from_jsonable(cls, d: dict) -> "BodySpec":
        return cls(kind=d["kind"], dimension=d["dimension"])


@register("gaussian_spec")
@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic gaussian with a common per-coordinate variance."""

    dimension: int
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "dimension", _as_positive_int(self.dimension, "dimension"))
        v = float(self.variance)
        if not (v > 0.0 and math.isfinite(v)):
            raise InvalidSpec(f"variance must be positive and finite, got {self.variance!r}")
        object.__setattr__(self, "variance", v)

    def to_jsonable(self) -> dict:
        return {"type": self.json_tag, "dimension": self.dimension, "variance": self.variance}

    @classmethod
    def from_jsonable(cls, d: dict) -> "GaussianSpec":
        return cls(dimension=d["dimension"], variance=d["variance"])


@register("convolution_schedule")
@dataclass(frozen=True)
class ConvolutionSchedule:
    """Smoothing schedule: one knob ``alpha`` fixes the derived rate and the
    dimension-dependent noise variance.

    ``lambda_`` is always exactly ``1 / (5*alpha + 20)`` and the gaussian noise
    added to an n-dimensional sample has variance ``n ** (-alpha * lambda_)``.
    """

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (math.isfinite(a) and 0.0 < a < 1e5):
            raise InvalidSpec(f"alpha must lie in (0, 1e5), got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def lambda_(self) -> float:
        return 1.0 / (5.0 * self.alpha + 20.0)

    def noise_variance(self, n: int) -> float:
        n = _as_positive_int(n, "n")
        return float(n) ** (-self.alpha * self.lambda_)

    def to_jsonable(self) -> dict:
        return {"type": self.json_tag, "alpha": self.alpha, "lambda": self.lambda_}

    @classmethod
    def from_jsonable(cls, d: dict) -> "ConvolutionSchedule":
        sched = cls(alpha=d["alpha"])
        if "lambda" in d and d["lambda"] != sched.lambda_:
            raise InvalidSpec(
                f"stored lambda {d['lambda']!r} is not 1/(5*alpha+20) for alpha={d['alpha']!r}"
            )
        return sched


@register("subspace_basis")
@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """An orthonormal frame whose rows span an l-dimensional subspace of R^n."""

    rows: np.ndarray

    def __post_init__(self):
        rows = _freeze(_as_float_array(self.rows, "rows", 2))
        object.__setattr__(self, "rows", rows)
        l, n = rows.shape
        if not 1 <= l <= n:
            raise InvalidSpec(f"need 1 <= subspace_dim <= ambient_dim, got shape {rows.shape}")
        gram = rows @ rows.T
        dev = float(np.max(np.abs(gram - np.eye(l))))
        if dev > _GRAM_TOL:
            raise InvalidSpec(f"rows are not orthonormal: max Gram deviation {dev:.3e} > {_GRAM_TOL}")

    @property
    def ambient_dim(self) -> int:
        return self.rows.shape[1]

    @property
    def subspace_dim(self) -> int:
        return self.rows.shape[0]

    def to_jsonable(self) -> dict:
        return {
            "type": self.json_tag,
            "ambient_dim": self.ambient_dim,
            "subspace_dim": self.subspace_dim,
            "rows": self.rows.tolist(),
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "SubspaceBasis":
        basis = cls(rows=np.asarray(d["rows"], dtype=np.float64))
        if basis.ambient_dim != d["ambient_dim"] or basis.subspace_dim != d["subspace_dim"]:
            raise InvalidSpec("stored dimensions disagree with the stored rows")
        return basis


@register("radial_density")
@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Distribution of the euclidean norm, as bin masses or a closed form.

    Binned form: ``grid`` holds m+1 strictly increasing bin edges and ``mass``
    the probability mass per bin (histogram semantics, so quadrature against a
    kernel is a plain sum over bins).  Closed form: the norm of a standard
    n-dimensional gaussian (chi law with ``chi_dim`` degrees of freedom).
    """

    form: str
    grid: np.ndarray | None = None
    mass: np.ndarray | None = None
    chi_dim: int | None = None

    def __post_init__(self):
        if self.form == "binned":
            grid = _freeze(_as_float_array(self.grid, "grid", 1))
            mass = _freeze(_as_float_array(self.mass, "mass", 1))
            object.__setattr__(self, "grid", grid)
            object.__setattr__(self, "mass", mass)
            if grid.size < 2:
                raise InvalidSpec("binned form needs at least two grid edges")
            if not np.all(np.diff(grid) > 0):
                raise InvalidSpec("grid edges must be strictly increasing")
            if mass.size != grid.size - 1:
                raise InvalidSpec(
                    f"mass must have one entry per bin: {mass.size} masses vs {grid.size - 1} bins"
                )
            if np.any(mass < 0):
                raise InvalidSpec("bin masses must be nonnegative")
            if self.chi_dim is not None:
                raise InvalidSpec("binned form must not carry chi_dim")
        elif self.form == "chi":
            if self.grid is not None or self.mass is not None:
                raise InvalidSpec("chi form must not carry grid or mass")
            object.__setattr__(self, "chi_dim", _as_positive_int(self.chi_dim, "chi_dim"))
        else:
            raise InvalidSpec(f"form must be 'binned' or 'chi', got {self.form!r}")

    @classmethod
    def binned(cls, grid, mass) -> "RadialDensity":
        return cls(form="binned", grid=grid, mass=mass)

    @classmethod
    def closed_form_chi(cls, n: int) -> "RadialDensity":
        return cls(form="chi", chi_dim=n)

    @property
    def bin_count(self) -> int:
        if self.form != "binned":
            raise InvalidSpec("bin_count is only defined for the binned form")
        return self.mass.size

    @property
    def midpoints(self) -> np.ndarray:
        if self.form != "binned":
            raise InvalidSpec("midpoints are only defined for the binned form")
        return 0.5 * (self.grid[:-1] + self.grid[1:])

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum()) if self.form == "binned" else 1.0

    def check_invariants(self) -> None:
        if self.form == "binned":
            total = self.total_mass
            if not (1.0 - _MASS_SHORTFALL <= total <= 1.0 + 1e-12):
                raise InvalidSpec(
                    f"total mass {total!r} outside [1 - {_MASS_SHORTFALL}, 1] "
                    "(binned form may truncate only a far-tail sliver)"
                )

    def to_jsonable(self) -> dict:
        d = {"type": self.json_tag, "form": self.form}
        if self.form == "binned":
            d["grid"] = self.grid.tolist()
            d["mass"] = self.mass.tolist()
        else:
            d["chi_dim"] = self.chi_dim
        return d

    @classmethod
    def from_jsonable(cls, d: dict) -> "RadialDensity":
        if d["form"] == "binned":
            return cls.binned(np.asarray(d["grid"]), np.asarray(d["mass"]))
        return cls.closed_form_chi(d["chi_dim"])


@register("density_estimate")
@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Pointwise density values of a projected sample with per-point uncertainty."""

    points: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    sample_count: int
    bandwidth: float

    def __post_init__(self):
        points = _freeze(_as_float_array(self.points, "points", 2))
        values = _freeze(_as_float_array(self.values, "values", 1))
        stderr = _freeze(_as_float_array(self.stderr, "stderr", 1))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stderr", stderr)
        k = points.shape[0]
        if values.size != k or stderr.size != k:
            raise InvalidSpec("points, values and stderr must have matching lengths")
        if np.any(values < 0):
            raise InvalidSpec("density values must be nonnegative")
        if np.any(stderr < 0):
            raise InvalidSpec("standard errors must be nonnegative")
        object.__setattr__(self, "sample_count", _as_positive_int(self.sample_count, "sample_count"))
        bw = float(self.bandwidth)
        if not (bw > 0 and math.isfinite(bw)):
            raise InvalidSpec(f"bandwidth must be positive, got {self.bandwidth!r}")
        object.__setattr__(self, "bandwidth", bw)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_jsonable(self) -> dict:
        return {
            "type": self.json_tag,
            "points": self.points.tolist(),
            "values": self.values.tolist(),
            "stderr": self.stderr.tolist(),
            "sample_count": self.sample_count,
            "bandwidth": self.bandwidth,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "DensityEstimate":
        return cls(
            points=np.asarray(d["points"]),
            values=np.asarray(d["values"]),
            stderr=np.asarray(d["stderr"]),
            sample_count=d["sample_count"],
            bandwidth=d["bandwidth"],
        )


@register("ratio_report")
@dataclass(frozen=True, eq=False)
class RatioReport:
    """Per-point density-to-gaussian ratios and their worst deviation from 1."""

    radius_grid: np.ndarray
    per_point_ratios: np.ndarray
    sup_abs_deviation: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = _freeze(_as_float_array(self.radius_grid, "radius_grid", 1))
        ratios = _freeze(_as_float_array(self.per_point_ratios, "per_point_ratios", 1))
        object.__setattr__(self, "radius_grid", grid)
        object.__setattr__(self, "per_point_ratios", ratios)
        if grid.size != ratios.size or grid.size == 0:
            raise InvalidSpec("radius_grid and per_point_ratios must be nonempty and equal-length")
        sup = float(self.sup_abs_deviation)
        object.__setattr__(self, "sup_abs_deviation", sup)
        true_sup = float(np.max(np.abs(ratios - 1.0)))
        if not (sup >= 0 and abs(sup - true_sup) <= 1e-12 * max(1.0, true_sup)):
            raise InvalidSpec(
                f"sup_abs_deviation {sup!r} does not equal max|ratio - 1| = {true_sup!r}"
            )
        if not isinstance(self.meta, dict):
            raise InvalidSpec("meta must be a JSON-ready dict")

    @classmethod
    def from_ratios(cls, radius_grid, ratios, meta=None) -> "RatioReport":
        ratios = np.asarray(ratios, dtype=np.float64)
        if ratios.size == 0:
            raise InvalidSpec("cannot build a ratio report from an empty grid")
        sup = float(np.max(np.abs(ratios - 1.0)))
        return cls(
            radius_grid=radius_grid,
            per_point_ratios=ratios,
            sup_abs_deviation=sup,
            meta=dict(meta or {}),
        )

    def to_jsonable(self) -> dict:
        return {
            "type": self.json_tag,
            "radius_grid": self.radius_grid.tolist(),
            "per_point_ratios": self.per_point_ratios.tolist(),
            "sup_abs_deviation": self.sup_abs_deviation,
            "meta": self.meta,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "RatioReport":
        return cls(
            radius_grid=np.asarray(d["radius_grid"]),
            per_point_ratios=np.asarray(d["per_point_ratios"]),
            sup_abs_deviation=d["sup_abs_deviation"],
            meta=d.get("meta", {}),
        )


@register("deconv_certificate")
@dataclass(frozen=True)
class DeconvCertificate:
    """Admissibility verdict plus the certified radii and sandwich factors.

    The certificate keeps the parameter set it was computed from so its
    internal consistency (factors vs epsilon, admissibility vs epsilon window)
    can be re-checked after deserialization.
    """

    admissible: bool
    violated_conditions: tuple
    lower_radius: float
    upper_radius: float
    lower_factor: float
    upper_factor: float
    params: object | None = None

    def __post_init__(self):
        object.__setattr__(self, "admissible", bool(self.admissible))
        violated = tuple(str(v) for v in self.violated_conditions)
        object.__setattr__(self, "violated_conditions", violated)
        for name in ("lower_radius", "upper_radius", "lower_factor", "upper_factor"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.admissible and violated:
            raise InvalidSpec("an admissible certificate cannot list violated conditions")
        if not self.admissible and not violated:
            raise InvalidSpec("an inadmissible certificate must name the violated conditions")
        if self.params is not None:
            eps = float(self.params.epsilon)
            if self.admissible and not (0.0 < eps < 0.01):
                raise InvalidSpec(f"admissible requires 0 < epsilon < 1/100, got {eps!r}")
            if abs(self.lower_factor - (1.0 - 6.0 * eps)) > 1e-12:
                raise InvalidSpec("lower_factor must equal 1 - 6*epsilon")
            if abs(self.upper_factor - (1.0 + 8.0 * eps)) > 1e-12:
                raise InvalidSpec("upper_factor must equal 1 + 8*epsilon")
            if eps > 0 and not (self.lower_factor < 1.0 < self.upper_factor):
                raise InvalidSpec("factors must bracket 1 whenever epsilon > 0")

    def to_jsonable(self) -> dict:
        return {
            "type": self.json_tag,
            "admissible": self.admissible,
            "violated_conditions": list(self.violated_conditions),
            "lower_radius": self.lower_radius,
            "upper_radius": self.upper_radius,
            "lower_factor": self.lower_factor,
            "upper_factor": self.upper_factor,
            "params": None if self.params is None else to_jsonable(self.params),
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "DeconvCertificate":
        params = d.get("params")
        return cls(
            admissible=d["admissible"],
            violated_conditions=tuple(d["violated_conditions"]),
            lower_radius=d["lower_radius"],
            upper_radius=d["upper_radius"],
            lower_factor=d["lower_factor"],
            upper_factor=d["upper_factor"],
            params=None if params is None else from_jsonable(params),
        )
