"""The numeric acceptance suite: eleven oracle-backed criteria.

Each criterion is a self-contained experiment with fixed seeds and sizes; the
"desk" profile runs the full sizes the criteria are stated at, the "quick"
profile shrinks the stochastic ones to smoke-test scale (same code paths, not
the acceptance gate).  Criteria return a result record, never raise on a
failed threshold — the caller decides what a failure means.
"""

from __future__ import annotations

import filecmp
import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .model import BodyKind, BodySpec, ConvolutionSchedule, GaussianSpec
from .samplers import sample_body, sample_gaussian
from .grassmann import project, random_subspace
from .spherical import (
    KernelParams,
    gaussian_density,
    psi,
    psi_ball_mass,
    psi_gaussian_ratio_scan,
    radial_mixture_marginal,
)
from .radial import thin_shell_fraction
from .density import KdeConfig, estimate_density, m_tilde_profile, ratio_to_gaussian
from .deconvolution import DeconvParams, check_conditions, grid_convolve, verify_sandwich
from .model import RadialDensity


@dataclass
class CriterionResult:
    index: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.index:2d} ({self.seconds:6.1f}s) {self.title}: {self.detail}"


def _criterion_1(profile):
    """Chi radial mixture reproduces the standard gaussian to 1e-3 relative."""
    ns = (16, 64, 256) if profile == "desk" else (16, 64)
    ls = (1, 2, 3) if profile == "desk" else (1, 2)
    ts = np.linspace(0.0, 3.0, 13 if profile == "desk" else 7)
    worst = 0.0
    where = ""
    for n in ns:
        g = RadialDensity.closed_form_chi(n)
        for l in ls:
            mix = radial_mixture_marginal(g, n, l, ts)
            ref = gaussian_density(l, 1.0, ts)
            rel = float(np.max(np.abs(mix / ref - 1.0)))
            if rel > worst:
                worst, where = rel, f"n={n}, l={l}"
    return worst <= 1e-3, f"worst relative error {worst:.3e} (at {where}), tolerance 1e-3"


def _criterion_2(profile):
    """The 1-d marginal of the unit sphere in R^3 is flat: psi = 1/2 on [0, 1)."""
    params = KernelParams(n=3, l=1, r=1.0)
    ts = np.linspace(0.0, 0.999, 500)
    dev = float(np.max(np.abs(psi(params, ts) - 0.5)))
    return dev <= 1e-12, f"max |psi - 0.5| = {dev:.3e} over t in [0, 0.999], tolerance 1e-12"


def _criterion_3(profile):
    """Kernel mass over the supporting ball is 1 within 1e-6 across the grid."""
    ns = (3, 4, 5, 6, 8, 10, 16, 25, 50, 100, 200) if profile == "desk" else (3, 6, 25, 200)
    worst = 0.0
    where = ""
    cases = 0
    for n in ns:
        for l in range(1, min(5, n - 1) + 1):
            for r in (0.5, 1.0, math.sqrt(n)):
                dev = abs(psi_ball_mass(KernelParams(n=n, l=l, r=r)) - 1.0)
                cases += 1
                if dev > worst:
                    worst, where = dev, f"n={n}, l={l}, r={r:.3g}"
    return worst <= 1e-6, f"worst |mass - 1| = {worst:.3e} over {cases} cases (at {where}), tolerance 1e-6"


def _criterion_4(profile):
    """Log-log slope of sup|psi/gaussian - 1| vs n inside the band -0.5 +/- 0.15.

    The exact kernel's deviation at radius sqrt(n), l=1, expands as
    (6t^2 - t^4 - 3)/(4n) + O(n^-2): over t in [0, n^(1/8)] the interior
    extremum 1.5/n dominates until n is in the thousands, so on the mandated
    grid n in {100, 400, 1600} the observed slope sits near -1, far below the
    asserted band; the 1/sqrt(n) endpoint regime only takes over for n >~ 4000.
    """
    ns = (100, 400, 1600)
    sups = []
    for n in ns:
        t_max = n ** 0.125 * (1.0 - 1e-12)
        sups.append(psi_gaussian_ratio_scan(n, 1, t_max, grid_points=2001).sup_abs_deviation)
    slope = float(np.polyfit(np.log(ns), np.log(sups), 1)[0])
    ok = -0.65 <= slope <= -0.35
    sup_txt = ", ".join(f"{s:.6g}" for s in sups)
    return ok, f"sups = [{sup_txt}], log-log slope {slope:.4f}, required band -0.5 +/- 0.15"


def _criterion_5(profile):
    """Empirical mean within 0.01 and covariance within 0.02 of identity."""
    count = 1_000_000 if profile == "desk" else 100_000
    worst_mean = worst_cov = 0.0
    where = ""
    ok = True
    for bi, kind in enumerate(BodyKind):
        for ni, n in enumerate((2, 10, 50)):
            batch = sample_body(BodySpec(kind, n), count, seed=5_000 + 10 * bi + ni)
            mean = batch.data.mean(axis=0)
            centered = batch.data - mean
            cov = (centered.T @ centered) / count
            del batch, centered
            mean_dev = float(np.max(np.abs(mean)))
            cov_dev = float(np.max(np.abs(cov - np.eye(n))))
            if mean_dev > worst_mean:
                worst_mean = mean_dev
            if cov_dev > worst_cov:
                worst_cov, where = cov_dev, f"{kind.value}, n={n}"
            if mean_dev > 0.01 or cov_dev > 0.02:
                ok = False
    return ok, (
        f"N={count}: worst |mean| = {worst_mean:.4f} (tol 0.01), "
        f"worst |cov - I| = {worst_cov:.4f} (tol 0.02, at {where})"
    )


def _criterion_6(profile):
    """Cube off-shell fraction strictly shrinks from n=100 to n=400; gaussian
    fractions match the chi-square oracle within 0.005.

    The strict half cannot hold at any affordable sample size: with
    eps = n^(-1/15) (about 0.74 at n=100) the lower event
    |x| < (1-eps) sqrt(n) sits 10+ standard deviations below the mean of |x|,
    and the upper event at n=100 is outright impossible since the cube's
    farthest corner has |x| = sqrt(3n) < (1+eps) sqrt(n).  Both observed
    fractions are exactly 0 at N = 10^6, and 0 < 0 is false — the shrinking
    trend is observable only as non-strict ordering.
    """
    count = 1_000_000 if profile == "desk" else 100_000
    fracs = {}
    details = []
    for n in (100, 400):
        eps = n ** (-1.0 / 15.0)
        frac = thin_shell_fraction(
            sample_body(BodySpec(BodyKind.CUBE, n), count, seed=6_100 + n), eps
        ).fraction
        fracs[n] = frac
        details.append(f"cube n={n}: {frac:.2e}")
    strict = fracs[400] < fracs[100]

    gauss_ok = True
    for n in (100, 400):
        eps = n ** (-1.0 / 15.0)
        frac = thin_shell_fraction(
            sample_gaussian(GaussianSpec(n, 1.0), count, seed=6_200 + n), eps
        ).fraction
        lo, hi = n * (1.0 - eps) ** 2, n * (1.0 + eps) ** 2
        oracle = float(1.0 - (chi2.cdf(hi, n) - chi2.cdf(lo, n)))
        details.append(f"gaussian n={n}: {frac:.2e} vs oracle {oracle:.2e}")
        if abs(frac - oracle) > 0.005:
            gauss_ok = False
    verdict = "strict cube decrease " + ("holds" if strict else "FAILS (both fractions 0)")
    return strict and gauss_ok, f"N={count}: {'; '.join(details)}; {verdict}"


def _criterion_7(profile):
    """Projected densities stay within 5% of the gaussian at desk scale."""
    if profile == "desk":
        bodies = (BodyKind.CUBE, BodyKind.SIMPLEX)
        n, count = 300, 1_000_000
        run_l2 = True
    else:
        bodies = (BodyKind.CUBE,)
        n, count = 100, 200_000
        run_l2 = False
    sched = ConvolutionSchedule(alpha=10.0)
    details = []
    ok = True
    for bi, kind in enumerate(bodies):
        t0 = time.perf_counter()
        spec = BodySpec(kind, n)
        batch = sample_body(spec, count, seed=7_000 + bi)
        basis = random_subspace(n, 1, seed=7_100 + bi)
        proj = project(batch, basis)
        del batch
        est = estimate_density(proj, KdeConfig(points=np.linspace(-2.0, 2.0, 81)))
        del proj
        sup1 = ratio_to_gaussian(est, 1.0, 2.0).sup_abs_deviation
        body_ok = sup1 <= 0.05
        txt = f"{kind.value}: l=1 sup {sup1:.4f}"
        if run_l2:
            mt = m_tilde_profile(
                spec,
                sched,
                l=2,
                radii=np.linspace(0.0, 2.0, 9),
                subspace_count=32,
                samples_per_subspace=125_000,
                seed=7_200 + bi,
            )
            sup2 = mt.sup_abs_deviation
            body_ok = body_ok and sup2 <= 0.05
            txt += f", l=2 profile sup {sup2:.4f}"
        elapsed = time.perf_counter() - t0
        body_ok = body_ok and elapsed < 300.0
        txt += f" ({elapsed:.0f}s)"
        details.append(txt)
        ok = ok and body_ok
    return ok, "; ".join(details) + "; tolerance 0.05, budget 300s/body"


def _criterion_8(profile):
    """Discrete gaussian convolution matches the closed-form variance sum."""
    spacing = 0.002
    xs = np.arange(-12.0, 12.0 + spacing / 2.0, spacing)
    g05 = gaussian_density(1, 0.5, np.abs(xs))
    conv = grid_convolve(g05, spacing, 0.3)
    dev_sum = float(np.max(np.abs(conv - gaussian_density(1, 0.8, np.abs(xs)))))
    twice = grid_convolve(grid_convolve(g05, spacing, 0.2), spacing, 0.3)
    once = grid_convolve(g05, spacing, 0.5)
    dev_add = float(np.max(np.abs(twice - once)))
    ok = dev_sum <= 1e-6 and dev_add <= 2e-6
    return ok, (
        f"identity sup {dev_sum:.3e} (tol 1e-6), double-convolution sup {dev_add:.3e} (tol 2e-6)"
    )


def _criterion_9(profile):
    """Three hand-computed certificate examples reproduce exactly."""
    checks = []

    c1 = check_conditions(DeconvParams(n=2, alpha=1e-12, beta=0.5, epsilon=0.005, hypothesis_radius=3.0))
    checks.append(("example 1 inadmissible (noise floor 0.8 > 0.005)", not c1.admissible))

    c2 = check_conditions(DeconvParams(n=2, alpha=1e-24, beta=0.5, epsilon=0.005, hypothesis_radius=3.0, c0=1e-2))
    checks.append(("example 2 admissible", c2.admissible))

    c3 = check_conditions(DeconvParams(n=8, alpha=1e-28, beta=0.5, epsilon=0.001, hypothesis_radius=10.0))
    checks.append(("example 3 admissible", c3.admissible))
    checks.append(("lower radius min{9, 4} = 4", c3.lower_radius == 4.0))
    checks.append(("upper radius min{4, 10} - 3 = 1", c3.upper_radius == 1.0))
    checks.append(("lower factor 0.994", abs(c3.lower_factor - 0.994) <= 1e-15))
    checks.append(("upper factor 1.008", abs(c3.upper_factor - 1.008) <= 1e-15))

    bad = [name for name, good in checks if not good]
    ok = not bad
    return ok, "all seven equalities hold" if ok else "failed: " + "; ".join(bad)


_SANDWICH_MATRIX = (
    DeconvParams(n=2, alpha=1e-24, beta=0.5, epsilon=0.005, hypothesis_radius=3.0),
    DeconvParams(n=8, alpha=1e-28, beta=0.5, epsilon=0.001, hypothesis_radius=10.0),
    DeconvParams(n=2, alpha=1e-30, beta=1.0, epsilon=0.008, hypothesis_radius=4.0),
    DeconvParams(n=3, alpha=1e-26, beta=0.5, epsilon=0.002, hypothesis_radius=5.0),
)


def _criterion_10(profile):
    """Every hypothesis-met admissible case satisfies the sandwich pointwise."""
    statuses = {}
    violated = []
    verified = 0
    for params in _SANDWICH_MATRIX:
        assert check_conditions(params).admissible  # matrix is admissible by construction
        for body in ("gaussian", "gaussian_deflated", "uniform", "laplace"):
            rep = verify_sandwich(body, params)
            statuses[(body, params.n, params.alpha)] = rep.status
            if rep.status == "sandwich_violated":
                violated.append(f"{body} at n={params.n}, alpha={params.alpha:.0e}")
            elif rep.status == "verified":
                verified += 1
    not_met = sum(1 for s in statuses.values() if s == "hypothesis_not_met")
    ok = not violated and verified >= 2 * len(_SANDWICH_MATRIX)
    detail = (
        f"{verified} verified, {not_met} hypothesis-not-met (uniform/laplace are never "
        f"epsilon-close to gaussian), {len(violated)} violated"
    )
    if violated:
        detail += ": " + "; ".join(violated)
    return ok, detail


def _criterion_11(profile):
    """Stochastic subcommands re-run byte-identically, whatever --threads is."""
    from . import cli

    runs = {
        "ratio": lambda out, threads: [
            "ratio", "--body", "cube", "--n", "20", "--l", "1",
            "--samples", "20000", "--seed", "7", "--max-radius", "2",
            "--grid-points", "41", "--threads", str(threads),
            "--output", os.path.join(out, "report.json"),
            "--csv", os.path.join(out, "report.csv"),
        ],
        "thinshell": lambda out, threads: [
            "thinshell", "--body", "ball", "--n", "30", "--samples", "100000",
            "--seed", "3", "--threads", str(threads),
            "--output", os.path.join(out, "shell.csv"),
        ],
        "sample": lambda out, threads: [
            "sample", "--body", "simplex", "--n", "5", "--samples", "70000",
            "--seed", "11", "--format", "bin", "--threads", str(threads),
            "--output", os.path.join(out, "batch.bin"),
        ],
    }
    mismatches = []
    for name, argv_for in runs.items():
        with tempfile.TemporaryDirectory() as d1, tempfile.TemporaryDirectory() as d2:
            code1 = cli.main(argv_for(d1, 1))
            code2 = cli.main(argv_for(d2, 2))
            if code1 != 0 or code2 != 0:
                mismatches.append(f"{name}: nonzero exit ({code1}, {code2})")
                continue
            for fname in sorted(os.listdir(d1)):
                if not filecmp.cmp(os.path.join(d1, fname), os.path.join(d2, fname), shallow=False):
                    mismatches.append(f"{name}: {fname} differs between thread counts")
    ok = not mismatches
    return ok, "ratio, thinshell, sample byte-identical across --threads 1/2" if ok else "; ".join(mismatches)


_CRITERIA = {
    1: ("gaussian fixed point of the chi radial mixture", _criterion_1, 10.0),
    2: ("flat 1-d marginal of the sphere in R^3", _criterion_2, None),
    3: ("kernel normalization across the (n, l, r) grid", _criterion_3, None),
    4: ("gaussian-limit rate of the sphere marginal", _criterion_4, 10.0),
    5: ("isotropy of the body catalog", _criterion_5, 120.0),
    6: ("thin-shell trend and chi-square oracle", _criterion_6, None),
    7: ("desk-scale pointwise CLT for cube and simplex", _criterion_7, None),
    8: ("discrete gaussian convolution identities", _criterion_8, None),
    9: ("deconvolution certificate arithmetic", _criterion_9, None),
    10: ("deconvolution sandwich on the 1-d catalog", _criterion_10, None),
    11: ("byte-identical reruns across thread counts", _criterion_11, None),
}


def run_criterion(index: int, profile: str = "desk") -> CriterionResult:
    title, fn, budget = _CRITERIA[index]
    t0 = time.perf_counter()
    passed, detail = fn(profile)
    seconds = time.perf_counter() - t0
    if budget is not None and profile == "desk" and seconds >= budget:
        passed = False
        detail += f"; runtime {seconds:.1f}s exceeded the {budget:.0f}s budget"
    return CriterionResult(index=index, title=title, passed=passed, detail=detail, seconds=seconds)


def run_all(profile: str = "desk", only=None) -> list[CriterionResult]:
    indices = sorted(_CRITERIA) if only is None else sorted(only)
    return [run_criterion(i, profile) for i in indices]
