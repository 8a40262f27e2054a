"""Experiment runner: reproducible, config-driven subcommands over all modules.

Every subcommand resolves its parameters from (defaults < config file < CLI
flags), validates them, and embeds the resolved configuration into each output
artifact — a "config" object in JSON reports and a leading '#' line in CSV —
so any artifact can be re-run bit-identically from its own header.  Paths and
thread counts are deliberately left out of the echo: they locate or schedule
the run without affecting a single output number, and their absence is what
makes reruns byte-identical across directories and --threads settings.

Exit codes: 0 success, 1 validation error, 2 acceptance-threshold failure in
`suite` (and argparse usage errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, ProjCltError
from .model import (
    BodyKind,
    BodySpec,
    ConvolutionSchedule,
    register,
    to_jsonable,
    validate,
)
from .samplers import (
    convolve_and_rescale,
    load_batch,
    sample_body,
    save_batch,
    save_batch_csv,
)
from .grassmann import project, random_subspace
from .spherical import gaussian_density, psi_gaussian_ratio_scan
from .radial import thin_shell_fraction
from .density import KdeConfig, estimate_density, m_tilde_profile, ratio_to_gaussian
from .deconvolution import DeconvParams, check_conditions, sandwich_margins
from . import suite as suite_mod

SCHEMA_VERSION = 1

_REQUIRED = object()
_STOCHASTIC = frozenset({"sample", "project", "ratio", "thinshell", "mtilde"})
_NOT_ECHOED = ("config", "output", "csv", "json_out", "basis_out", "threads")


@register("experiment_config")
@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Resolved invocation of one subcommand: parameter block, seed, sink."""

    subcommand: str
    params: dict
    seed: int | None
    output: str | None
    format: str

    def __post_init__(self):
        if self.format not in ("json", "csv", "bin"):
            raise InvalidSpec(f"format must be one of json/csv/bin, got {self.format!r}")
        if self.subcommand in _STOCHASTIC and self.seed is None:
            raise InvalidSpec(f"subcommand {self.subcommand!r} is stochastic and needs a seed")
        if not isinstance(self.params, dict):
            raise InvalidSpec("params must be a dict")

    def to_jsonable(self) -> dict:
        return {
            "type": self.json_tag,
            "subcommand": self.subcommand,
            "params": self.params,
            "seed": self.seed,
            "output": self.output,
            "format": self.format,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "ExperimentConfig":
        return cls(
            subcommand=d["subcommand"],
            params=d["params"],
            seed=d["seed"],
            output=d["output"],
            format=d["format"],
        )


def _resolve(args, table: dict):
    """Merge defaults < config file < explicit flags; returns (params, echo)."""
    cfg = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as f:
            cfg = json.load(f)
        unknown = sorted(set(cfg) - set(table))
        if unknown:
            raise InvalidSpec(f"config file sets unknown parameters: {', '.join(unknown)}")
    resolved = {}
    for key, default in table.items():
        value = getattr(args, key, None)
        if value is None:
            value = cfg.get(key)
        if value is None:
            if default is _REQUIRED:
                raise InvalidSpec(f"missing required parameter '{key}'")
            value = default
        resolved[key] = value
    echo = {"subcommand": args.subcommand}
    echo.update({k: v for k, v in resolved.items() if k not in _NOT_ECHOED})
    return resolved, echo


def _dump_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _csv_cell(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def _write_csv(path: str, echo: dict, columns, rows) -> None:
    with open(path, "w") as f:
        f.write("# " + json.dumps({"schema_version": SCHEMA_VERSION, "config": echo}) + "\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_csv_cell(v) for v in row) + "\n")


def _experiment(echo: dict, resolved: dict, fmt: str) -> ExperimentConfig:
    params = {k: v for k, v in echo.items() if k not in ("subcommand", "seed")}
    return validate(
        ExperimentConfig(
            subcommand=echo["subcommand"],
            params=params,
            seed=resolved.get("seed"),
            output=resolved.get("output"),
            format=fmt,
        )
    )


def _cmd_sample(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "body": _REQUIRED,
            "n": _REQUIRED,
            "samples": _REQUIRED,
            "seed": _REQUIRED,
            "alpha": None,
            "format": "bin",
            "threads": 1,
            "output": _REQUIRED,
        },
    )
    _experiment(echo, resolved, resolved["format"])
    spec = BodySpec(BodyKind.parse(resolved["body"]), int(resolved["n"]))
    root = np.random.SeedSequence(int(resolved["seed"]))
    body_seed, noise_seed = root.spawn(2)
    batch = sample_body(spec, int(resolved["samples"]), body_seed, threads=int(resolved["threads"]))
    if resolved["alpha"] is not None:
        schedule = ConvolutionSchedule(float(resolved["alpha"]))
        batch = convolve_and_rescale(batch, schedule, noise_seed, threads=int(resolved["threads"]))
    echo_full = dict(echo)
    if resolved["format"] == "csv":
        save_batch_csv(batch, resolved["output"], config=echo_full)
    else:
        save_batch(batch, resolved["output"], config=echo_full)
    return 0


def _cmd_project(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "input": _REQUIRED,
            "l": _REQUIRED,
            "seed": _REQUIRED,
            "format": "bin",
            "basis_out": None,
            "threads": 1,
            "output": _REQUIRED,
        },
    )
    _experiment(echo, resolved, resolved["format"])
    batch = load_batch(resolved["input"])
    basis = random_subspace(batch.dimension, int(resolved["l"]), int(resolved["seed"]))
    projected = project(batch, basis)
    if resolved["format"] == "csv":
        save_batch_csv(projected, resolved["output"], config=echo)
    else:
        save_batch(projected, resolved["output"], config=echo)
    if resolved["basis_out"]:
        _dump_json(
            {"schema_version": SCHEMA_VERSION, "config": echo, "basis": to_jsonable(basis)},
            resolved["basis_out"],
        )
    return 0


def _cmd_ratio(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "body": _REQUIRED,
            "n": _REQUIRED,
            "l": _REQUIRED,
            "samples": _REQUIRED,
            "seed": _REQUIRED,
            "alpha": None,
            "max_radius": 2.0,
            "grid_points": 81,
            "directions": 16,
            "threads": 1,
            "output": _REQUIRED,
            "csv": None,
        },
    )
    _experiment(echo, resolved, "json")
    n, l = int(resolved["n"]), int(resolved["l"])
    threads = int(resolved["threads"])
    spec = BodySpec(BodyKind.parse(resolved["body"]), n)
    root = np.random.SeedSequence(int(resolved["seed"]))
    body_seed, noise_seed, basis_seed = root.spawn(3)
    batch = sample_body(spec, int(resolved["samples"]), body_seed, threads=threads)
    if resolved["alpha"] is not None:
        schedule = ConvolutionSchedule(float(resolved["alpha"]))
        batch = convolve_and_rescale(batch, schedule, noise_seed, threads=threads)
    basis = random_subspace(n, l, basis_seed)
    projected = project(batch, basis)
    del batch
    radius = float(resolved["max_radius"])
    points = int(resolved["grid_points"])
    if l == 1:
        cfg = KdeConfig(points=np.linspace(-radius, radius, points))
    else:
        cfg = KdeConfig(
            radii=np.linspace(0.0, radius, points),
            direction_count=int(resolved["directions"]),
        )
    est = estimate_density(projected, cfg)
    report = ratio_to_gaussian(est, 1.0, radius)
    _dump_json(
        {"schema_version": SCHEMA_VERSION, "config": echo, "report": to_jsonable(report)},
        resolved["output"],
    )
    if resolved["csv"]:
        ref = gaussian_density(l, 1.0, report.radius_grid)
        rows = zip(
            report.radius_grid.tolist(),
            report.per_point_ratios.tolist(),
            (est.stderr / ref).tolist(),
        )
        _write_csv(resolved["csv"], echo, ("point", "ratio", "stderr"), rows)
    return 0


def _cmd_thinshell(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "body": _REQUIRED,
            "n": _REQUIRED,
            "samples": _REQUIRED,
            "seed": _REQUIRED,
            "epsilon": None,
            "threads": 1,
            "output": _REQUIRED,
        },
    )
    n = int(resolved["n"])
    epsilons = resolved["epsilon"]
    if epsilons is None:
        epsilons = [n ** (-1.0 / 15.0)]
    if not isinstance(epsilons, (list, tuple)):
        epsilons = [epsilons]
    echo["epsilon"] = [float(e) for e in epsilons]
    _experiment(echo, resolved, "csv")
    spec = BodySpec(BodyKind.parse(resolved["body"]), n)
    batch = sample_body(spec, int(resolved["samples"]), int(resolved["seed"]), threads=int(resolved["threads"]))
    rows = []
    for eps in epsilons:
        frac = thin_shell_fraction(batch, float(eps))
        rows.append((float(eps), frac.fraction, frac.stderr))
    _write_csv(resolved["output"], echo, ("epsilon", "fraction", "stderr"), rows)
    return 0


def _cmd_psi_scan(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "n": _REQUIRED,
            "l": _REQUIRED,
            "tmax": _REQUIRED,
            "points": 200,
            "output": _REQUIRED,
        },
    )
    _experiment(echo, resolved, "csv")
    n, l = int(resolved["n"]), int(resolved["l"])
    report = psi_gaussian_ratio_scan(n, l, float(resolved["tmax"]), int(resolved["points"]))
    ref = gaussian_density(l, 1.0, report.radius_grid)
    rows = zip(
        report.radius_grid.tolist(),
        (report.per_point_ratios * ref).tolist(),
        ref.tolist(),
        report.per_point_ratios.tolist(),
    )
    _write_csv(resolved["output"], echo, ("t", "psi", "gaussian", "ratio"), rows)
    return 0


def _cmd_mtilde(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "body": _REQUIRED,
            "n": _REQUIRED,
            "l": _REQUIRED,
            "alpha": 10.0,
            "t_max": 2.0,
            "t_points": 9,
            "subspaces": 32,
            "samples_per_subspace": 125_000,
            "directions": 16,
            "seed": _REQUIRED,
            "threads": 1,
            "output": _REQUIRED,
            "csv": None,
        },
    )
    _experiment(echo, resolved, "json")
    spec = BodySpec(BodyKind.parse(resolved["body"]), int(resolved["n"]))
    report = m_tilde_profile(
        spec,
        ConvolutionSchedule(float(resolved["alpha"])),
        l=int(resolved["l"]),
        radii=np.linspace(0.0, float(resolved["t_max"]), int(resolved["t_points"])),
        subspace_count=int(resolved["subspaces"]),
        samples_per_subspace=int(resolved["samples_per_subspace"]),
        seed=int(resolved["seed"]),
        direction_count=int(resolved["directions"]),
        threads=int(resolved["threads"]),
    )
    _dump_json(
        {"schema_version": SCHEMA_VERSION, "config": echo, "report": to_jsonable(report)},
        resolved["output"],
    )
    if resolved["csv"]:
        rows = zip(report.radius_grid.tolist(), report.per_point_ratios.tolist())
        _write_csv(resolved["csv"], echo, ("t", "profile"), rows)
    return 0


def _deconv_params(resolved) -> DeconvParams:
    return DeconvParams(
        n=int(resolved["n"]),
        alpha=float(resolved["alpha"]),
        beta=float(resolved["beta"]),
        epsilon=float(resolved["epsilon"]),
        hypothesis_radius=float(resolved["R"]),
        c0=float(resolved["c0"]),
    )


def _cmd_deconv(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "n": _REQUIRED,
            "alpha": _REQUIRED,
            "beta": _REQUIRED,
            "epsilon": _REQUIRED,
            "R": _REQUIRED,
            "c0": 1e-2,
            "output": None,
        },
    )
    _experiment(echo, resolved, "json")
    cert = check_conditions(_deconv_params(resolved))
    _dump_json(
        {"schema_version": SCHEMA_VERSION, "config": echo, "certificate": to_jsonable(cert)},
        resolved["output"],
    )
    return 0


def _cmd_deconv_verify(args) -> int:
    resolved, echo = _resolve(
        args,
        {
            "body": _REQUIRED,
            "n": _REQUIRED,
            "alpha": _REQUIRED,
            "beta": _REQUIRED,
            "epsilon": _REQUIRED,
            "R": _REQUIRED,
            "c0": 1e-2,
            "grid_points": 2001,
            "output": _REQUIRED,
            "json_out": None,
        },
    )
    _experiment(echo, resolved, "csv")
    report, rows = sandwich_margins(
        resolved["body"], _deconv_params(resolved), grid_points=int(resolved["grid_points"])
    )
    _write_csv(resolved["output"], echo, ("region", "x", "density", "bound", "margin"), rows)
    if resolved["json_out"]:
        _dump_json(
            {"schema_version": SCHEMA_VERSION, "config": echo, "report": to_jsonable(report)},
            resolved["json_out"],
        )
    return 0


def _cmd_suite(args) -> int:
    resolved, echo = _resolve(
        args,
        {"profile": "desk", "only": None, "output": None},
    )
    only = resolved["only"]
    if isinstance(only, str):
        only = [int(tok) for tok in only.split(",") if tok.strip()]
    results = suite_mod.run_all(profile=resolved["profile"], only=only)
    for result in results:
        print(result.line())
    failed = [r.index for r in results if not r.passed]
    total = sum(r.seconds for r in results)
    print(
        f"{len(results) - len(failed)}/{len(results)} criteria passed in {total:.1f}s"
        + (f"; failed: {failed}" if failed else "")
    )
    if resolved["output"]:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": echo,
            "results": [
                {
                    "index": r.index,
                    "title": r.title,
                    "passed": r.passed,
                    "detail": r.detail,
                    "seconds": r.seconds,
                }
                for r in results
            ],
        }
        _dump_json(payload, resolved["output"])
    return 0 if not failed else 2


def _add_common(sub, *, seed=False, threads=False, output=True, fmt=None):
    sub.add_argument("--config", help="JSON file of parameter defaults (flags win)")
    if seed:
        sub.add_argument("--seed", type=int)
    if threads:
        sub.add_argument("--threads", type=int)
    if output:
        sub.add_argument("--output")
    if fmt:
        sub.add_argument("--format", choices=fmt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projclt",
        description="Numerical experiments on gaussian behavior of projected isotropic samples.",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    s = subs.add_parser("sample", help="draw a batch from a catalog body")
    s.add_argument("--body")
    s.add_argument("--n", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--alpha", type=float, help="smooth and rescale with this schedule")
    _add_common(s, seed=True, threads=True, fmt=("bin", "csv"))
    s.set_defaults(func=_cmd_sample)

    s = subs.add_parser("project", help="project a saved batch onto a Haar subspace")
    s.add_argument("--input")
    s.add_argument("--l", type=int)
    s.add_argument("--basis-out", dest="basis_out", help="write the basis as JSON here")
    _add_common(s, seed=True, threads=True, fmt=("bin", "csv"))
    s.set_defaults(func=_cmd_project)

    s = subs.add_parser("ratio", help="projected-density to gaussian ratio report")
    s.add_argument("--body")
    s.add_argument("--n", type=int)
    s.add_argument("--l", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--max-radius", dest="max_radius", type=float)
    s.add_argument("--grid-points", dest="grid_points", type=int)
    s.add_argument("--directions", type=int)
    s.add_argument("--csv", help="also write (point, ratio, stderr) rows here")
    _add_common(s, seed=True, threads=True)
    s.set_defaults(func=_cmd_ratio)

    s = subs.add_parser("thinshell", help="off-shell mass fractions")
    s.add_argument("--body")
    s.add_argument("--n", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--epsilon", type=float, action="append", help="repeatable; default n^(-1/15)")
    _add_common(s, seed=True, threads=True)
    s.set_defaults(func=_cmd_thinshell)

    s = subs.add_parser("psi-scan", help="sphere-marginal vs gaussian scan")
    s.add_argument("--n", type=int)
    s.add_argument("--l", type=int)
    s.add_argument("--tmax", type=float)
    s.add_argument("--points", type=int)
    _add_common(s)
    s.set_defaults(func=_cmd_psi_scan)

    s = subs.add_parser("mtilde", help="rotation-averaged smoothed radial profile")
    s.add_argument("--body")
    s.add_argument("--n", type=int)
    s.add_argument("--l", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--t-max", dest="t_max", type=float)
    s.add_argument("--t-points", dest="t_points", type=int)
    s.add_argument("--subspaces", type=int)
    s.add_argument("--samples-per-subspace", dest="samples_per_subspace", type=int)
    s.add_argument("--directions", type=int)
    s.add_argument("--csv")
    _add_common(s, seed=True, threads=True)
    s.set_defaults(func=_cmd_mtilde)

    s = subs.add_parser("deconv", help="compute the sandwich admissibility certificate")
    s.add_argument("--n", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--R", type=float)
    s.add_argument("--c0", type=float)
    _add_common(s)
    s.set_defaults(func=_cmd_deconv)

    s = subs.add_parser("deconv-verify", help="run the 1-d sandwich and emit margins")
    s.add_argument("--body")
    s.add_argument("--n", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--R", type=float)
    s.add_argument("--c0", type=float)
    s.add_argument("--grid-points", dest="grid_points", type=int)
    s.add_argument("--json", dest="json_out", help="also write the report as JSON here")
    _add_common(s)
    s.set_defaults(func=_cmd_deconv_verify)

    s = subs.add_parser("suite", help="run the acceptance criteria and print a table")
    s.add_argument("--profile", choices=("desk", "quick"))
    s.add_argument("--only", help="comma-separated criterion indices")
    _add_common(s)
    s.set_defaults(func=_cmd_suite)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProjCltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
