"""Named verification scenarios and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .constants import (SPECTRAL_RESTRICTION_CONSTANT, SUBGAUSSIAN_RESTRICTION_CONSTANT,
                        chain_field, check_restriction_subgaussian, log_e_over)
from .continuum import (ConvexOracle, DensitySpec, check_exponential_deviation,
                        check_two_sided_deviation, convex_clip_extension, mc_shell_variance,
                        pair_tail, quad_psi1_tail, quad_restricted_moments, sample_space)
from .lipschitz import lip_seminorm
from .reports import CheckReport, dumps_json, format_float, jsonable
from .space import (build_chain_subset, build_finite, build_hypercube, build_product,
                    enumerate_monotone_masks, induced_graph_metric, restrict)
from .transport import sigma_transport

SCENARIOS = ("hypercube-chain", "gaussian-shell", "exp-tail", "marton", "monotone-metric",
             "product-sigma", "thm11-sweep", "thm13-exp", "talagrand-tails", "nonlip-deviation")
EXP_LAMBDA1 = 0.25
PSI1_RESTRICTION_FACTOR = 36 * math.e


class ScenarioError(ValueError):
    """Unknown scenario or parameter out of range."""


@dataclass
class ScenarioReport:
    scenario: str
    params: dict
    seed: int
    quantities: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    runtime_ms: float = 0.0

    def quantity(self, name, value, provenance=""):
        self.quantities.append({"name": name, "value": value, "provenance": provenance})

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.counts)

    def exit_code(self) -> int:
        if any(c.counts and not c.passed for c in self.checks):
            return 1
        if any(c.status == "hypothesis-unmet" for c in self.checks):
            return 2
        return 0

    def to_dict(self) -> dict:
        return jsonable({
            "scenario": self.scenario,
            "params": self.params,
            "seed": self.seed,
            "quantities": self.quantities,
            "checks": [{"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "constant": c.constant,
                        "tolerance": c.tolerance, "passed": c.passed, "status": c.status,
                        "witness": c.witness, "details": c.details} for c in self.checks],
            "runtime_ms": self.runtime_ms,
        })


def _exact(name, value, target, witness=""):
    ok = value == target
    return CheckReport(name, float(abs(value - target)), 0.0, 0.0, 0.0, ok,
                       "pass" if ok else "fail", witness, {"value": str(value), "target": str(target)})


def _within(name, value, target, tol, relative=False, **details):
    scale = abs(target) if relative else 1.0
    return CheckReport.compare(name, abs(value - target), tol * scale, 0.0, 0.0,
                               value=value, target=target, relative=relative, **details)


def _require(cond, msg):
    if not cond:
        raise ScenarioError(msg)


# --- scenarios ----------------------------------------------------------------

def _hypercube_chain(rep, p, seed):
    n = int(p.get("n", 4))
    _require(1 <= n <= 16, "hypercube-chain needs 1 <= n <= 16")
    cube = build_hypercube(n)
    mask = build_chain_subset(n)
    idx = np.flatnonzero(mask)
    mass = sum((Fraction(float(w)) for w in cube.weights[idx]), Fraction(0))
    f = [Fraction(2 * k - n, 2) for k in range(n + 1)]  # ones count minus n/2 along the chain
    wa = [Fraction(float(w)) / mass for w in cube.weights[idx]]
    mean = sum(a * b for a, b in zip(wa, f))
    var = sum(a * (b - mean) ** 2 for a, b in zip(wa, f))
    rep.quantity("mass", float(mass), "exact rational")
    rep.quantity("variance", float(var), "exact rational")
    rep.quantity("sigma2_mu", n / 4, "Marton constant of the cube")
    rep.checks.append(_exact("chain-mass", mass, Fraction(n + 1, 2 ** n)))
    rep.checks.append(_exact("chain-mean", mean, Fraction(0)))
    rep.checks.append(_exact("chain-variance", var, Fraction(n * (n + 2), 12)))
    sub, _ = restrict(cube, mask)
    lip = lip_seminorm(np.array([float(x) for x in f]), sub)
    np.testing.assert_array_equal(np.array([float(x) for x in f]), chain_field(n))
    rep.checks.append(CheckReport.compare("chain-lipschitz", lip, 1.0, 0.0))
    rep.checks.append(CheckReport.compare("chain-variance-dominates", Fraction(n * n, 12), var, 0.0))
    lower = (n / 4) * math.log(1 / float(mass)) / (3 * math.log(2))
    rep.quantity("chain_lower_bound", lower, "(1/(3 log 2)) sigma2(mu) log(1/mu(A))")
    rep.checks.append(CheckReport.compare("chain-optimality", lower, n * n / 12, 1 / (3 * math.log(2))))


def _gaussian_shell(rep, p, seed):
    R = float(p.get("R", 2.0))
    _require(R >= 0, "R must be >= 0")
    c = float(p.get("constant", SUBGAUSSIAN_RESTRICTION_CONSTANT))
    q = quad_restricted_moments(DensitySpec("exponential-radial-2d"), R)
    rep.quantity("mass", q["mass"], "adaptive Gauss-Kronrod")
    rep.quantity("variance_x1", q["variance"], "adaptive Gauss-Kronrod")
    rep.checks.append(_within("shell-mass", q["mass"], math.exp(-R * R / 2), 1e-10))
    rep.checks.append(_within("shell-variance", q["variance"], R * R / 2 + 1, 1e-8))
    log_e = log_e_over(q["mass"])
    rep.quantity("log_e_over_mass", log_e, "")
    rep.checks.append(CheckReport.compare("shell-spread-lower", log_e, q["variance"], 1.0, 1e-12,
                                          witness="f = x1", target=R * R / 2 + 1))
    rep.checks.append(CheckReport.compare("shell-restriction-subgaussian", q["variance"], c * log_e,
                                          c, 0.0, witness="s^2 <= sigma^2, sigma^2(gamma) = 1"))
    N = int(p.get("samples", 0))
    if N:
        mc = mc_shell_variance(R, N, seed)
        rep.quantity("mc_variance", mc["variance"], f"Monte Carlo N={N}")
        rep.checks.append(_within("shell-variance-mc", mc["variance"], R * R / 2 + 1, 0.01,
                                  relative=True, stderr=mc["stderr"]))


def _exp_tail(rep, p, seed):
    R = float(p.get("R", 1.0))
    _require(R >= 0, "R must be >= 0")
    c = float(p.get("constant", SPECTRAL_RESTRICTION_CONSTANT))
    q = quad_restricted_moments(DensitySpec("two-sided-exponential"), R)
    rep.quantity("mass", q["mass"], "adaptive Gauss-Kronrod")
    rep.quantity("variance", q["variance"], "adaptive Gauss-Kronrod")
    rep.quantity("lambda1", EXP_LAMBDA1, "two-sided exponential law")
    rep.checks.append(_within("exp-mass", q["mass"], math.exp(-R), 1e-10))
    rep.checks.append(_within("exp-variance", q["variance"], R * R + 2 * R + 2, 1e-9))
    log_e = log_e_over(q["mass"])
    rep.checks.append(CheckReport.compare("exp-spread-lower", log_e ** 2, q["variance"], 1.0, 1e-12,
                                          witness="f = x", target=(R + 1) ** 2))
    rep.checks.append(CheckReport.compare("exp-restriction-spectral", q["variance"],
                                          c * log_e ** 2 / EXP_LAMBDA1, c))


def _marton(rep, p, seed):
    n = int(p.get("n", 2))
    _require(1 <= n <= 3, "marton needs 1 <= n <= 3")
    est = sigma_transport(build_hypercube(n), restarts=int(p.get("restarts", 8)), seed=seed)
    target = n / 4
    rep.quantity("sigma2_lower", est.lower, est.method)
    rep.quantity("sigma2_upper", est.upper, est.upper_method)
    rep.quantity("lp_route", est.diagnostics["lp_route"], "LP evaluations")
    rep.checks.append(_within("marton-2pct", est.lower, target, 0.02, relative=True, method=est.method))
    rep.checks.append(CheckReport.compare("marton-not-exceeded", est.lower, target + 1e-6, 0.0))
    if "grid_oracle" in est.diagnostics:
        rep.quantity("grid_oracle", est.diagnostics["grid_oracle"], "simplex grid step 0.005")
        rep.checks.append(CheckReport.compare("marton-grid-oracle", est.diagnostics["grid_oracle"],
                                              target + 1e-6, 0.0))


def _monotone_metric(rep, p, seed):
    n = int(p.get("n", 4))
    _require(1 <= n <= 4, "monotone-metric needs 1 <= n <= 4")
    cube = build_hypercube(n)
    d = np.asarray(cube.distance)
    masks = enumerate_monotone_masks(n)
    bad = 0
    for mask in masks:
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            continue
        ind = induced_graph_metric(cube, mask)
        if not (ind.connected and np.array_equal(ind.distance, d[np.ix_(idx, idx)])):
            bad += 1
    rep.quantity("monotone_sets", len(masks), "exhaustive enumeration")
    rep.checks.append(CheckReport.compare("monotone-metric-identity", bad, 0, 0.0,
                                          witness=f"{len(masks)} monotone sets"))


def _product_sigma(rep, p, seed):
    n = int(p.get("n", 2))
    _require(n in (2, 3), "product-sigma needs n in {2, 3}")
    base = build_finite([0, 1], [[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
    space = build_product(base, n)
    est = sigma_transport(space, restarts=int(p.get("restarts", 8)), seed=seed)
    rep.quantity("sigma2_lower", est.lower, est.method)
    rep.quantity("sigma2_base", 0.25, "two-point space")
    rep.checks.append(_within("product-tensorization", est.lower, n / 4, 0.02, relative=True))


def sweep_masks(n: int, count: int, seed: int) -> list:
    """Deterministic nonempty masks on the n-cube; mask i depends only on (seed, i)."""
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i, 11])
        mask = rng.random(2 ** n) < rng.uniform(0.05, 1.0)
        if not mask.any():
            mask[rng.integers(2 ** n)] = True
        out.append(mask)
    return out


def _sweep_one(args):
    n, mask, c, sigma2, restarts, seed = args
    return check_restriction_subgaussian(build_hypercube(n), mask, c=c, sigma2=sigma2,
                                         restarts=restarts, seed=seed)


def _restriction_sweep(rep, p, seed):
    n = int(p.get("n", 4))
    _require(1 <= n <= 6, "thm11-sweep needs 1 <= n <= 6")
    count = int(p.get("samples", 1000))
    c = float(p.get("constant", SUBGAUSSIAN_RESTRICTION_CONSTANT))
    sigma2 = float(p.get("sigma2", 1.0))
    restarts = int(p.get("restarts", 4))
    jobs = int(p.get("jobs", 1))
    tasks = [(n, m, c, sigma2, restarts, seed * 1_000_003 + i)
             for i, m in enumerate(sweep_masks(n, count, seed))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, tasks, chunksize=max(1, count // (4 * jobs))))
    else:
        results = [_sweep_one(t) for t in tasks]
    for i, r in enumerate(results):
        r.name = f"restriction-subgaussian[{i}]"
    rep.checks.extend(results)
    worst = max(results, key=lambda r: r.lhs / r.rhs)
    rep.quantity("masks", count, "")
    rep.quantity("worst_ratio", worst.lhs / worst.rhs, worst.name)


def _spectral_exp(rep, p, seed):
    Rs = [float(p["R"])] if "R" in p else [0.0, 0.5, 1.0, 2.0, 5.0]
    c = float(p.get("constant", SPECTRAL_RESTRICTION_CONSTANT))
    for R in Rs:
        _require(R >= 0, "R must be >= 0")
        q = quad_restricted_moments(DensitySpec("two-sided-exponential"), R)
        log_e = log_e_over(q["mass"])
        rep.checks.append(CheckReport.compare(f"spectral-spread[R={R:g}]", q["variance"],
                                              c * log_e ** 2 / EXP_LAMBDA1, c, witness="f = x"))
        psi1 = quad_psi1_tail(R)
        rep.quantity(f"psi1[R={R:g}]", psi1, "quadrature + root finding")
        rep.checks.append(CheckReport.compare(f"psi1-restricted[R={R:g}]", psi1,
                                              PSI1_RESTRICTION_FACTOR * log_e / math.sqrt(EXP_LAMBDA1),
                                              PSI1_RESTRICTION_FACTOR, witness="f = x"))


def _talagrand_tails(rep, p, seed):
    n = int(p.get("n", 4))
    N = int(p.get("samples", 20000))
    _require(1 <= n <= 64 and 2 <= N <= 100_000, "talagrand-tails parameters out of range")
    space = sample_space(DensitySpec("uniform-cube-product"), n, N, seed)
    X = np.asarray(space.coords)
    w = space.weights
    candidates = {
        "euclidean-norm": np.sqrt((X * X).sum(axis=1)),
        "max-coordinate": X.max(axis=1),
        "diagonal-linear": X.sum(axis=1) / math.sqrt(n),
        "l1-norm-scaled": np.abs(X).sum(axis=1) / math.sqrt(n),
    }
    ts = np.linspace(0.1, 2.0 * math.sqrt(n), 40)
    best = 0.0
    for name, f in candidates.items():
        fit = 0.0
        for t in ts:
            t = float(t)
            prob = pair_tail(f, w, t)
            if 0 < prob < 2:
                fit = max(fit, t * t / math.log(2.0 / prob))
        rep.quantity(f"fitted_constant[{name}]", fit, "max_t t^2 / log(2 / P(|f(x)-f(y)| >= t))")
        best = max(best, fit)
    rep.quantity("fitted_constant", best, "smallest C with empirical tails <= 2 exp(-t^2 / C)")


def _nonlip_deviation(rep, p, seed):
    N = int(p.get("samples", 100_000))
    c = float(p.get("constant", SUBGAUSSIAN_RESTRICTION_CONSTANT))
    L0 = float(p.get("L0", 1.0))
    space = sample_space(DensitySpec("gaussian-1d"), 1, N, seed)
    x = np.asarray(space.coords)[:, 0]
    rep.checks.extend(check_two_sided_deviation(space, x * x / 2, np.abs(x), L0, c, 1.0))
    # exponential-integrability route needs int exp(|grad f|^2) <= 2: f = s x^2 / 2, s = 1/2
    s = 0.5
    rep.quantity("integrability_scale", s, "1 / sqrt(1 - 2 s^2) <= 2")
    rep.checks.extend(check_exponential_deviation(space, s * x * x / 2, s * np.abs(x), c, 1.0))
    rep.checks.extend(clip_extension_grid_checks())


def clip_extension_grid_checks() -> list:
    """Exact checks of the tangent-clip extension on dyadic grids."""
    out = []
    g1 = np.arange(-64, 65) / 32.0
    cases = [
        ("quadratic-2d", np.array([(a, b) for a in g1[::4] for b in g1[::4]]), 1.0,
         ConvexOracle(lambda X: (X * X).sum(axis=1) / 2, lambda X: X)),
        ("abs-1d", g1[:, None], 0.5,
         ConvexOracle(lambda X: np.abs(X[:, 0]), lambda X: np.sign(X))),
        ("quadratic-1d", g1[:, None], 1.5,
         ConvexOracle(lambda X: X[:, 0] ** 2 / 2, lambda X: X)),
    ]
    for name, P, L, oracle in cases:
        ext = convex_clip_extension(oracle, P, L)
        f = oracle.value(P)
        g = ext.values
        excess = float((g - f).max())
        anchor_gap = float(np.abs(g[ext.anchor_mask] - f[ext.anchor_mask]).max())
        dist = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
        off = dist > 0
        lip = float((np.abs(g[:, None] - g[None, :])[off] / dist[off]).max())
        i, j = np.triu_indices(P.shape[0], 1)
        mid = ext.evaluate((P[i] + P[j]) / 2)
        convex_gap = float((mid - (g[i] + g[j]) / 2).max())
        out.append(CheckReport.compare(f"clip-below[{name}]", excess, 0.0, L))
        out.append(CheckReport.compare(f"clip-anchor[{name}]", anchor_gap, 0.0, L))
        out.append(CheckReport.compare(f"clip-lipschitz[{name}]", lip, L, L, 1e-12))
        out.append(CheckReport.compare(f"clip-midpoint[{name}]", convex_gap, 0.0, L))
    return out


_RUNNERS = {
    "hypercube-chain": _hypercube_chain,
    "gaussian-shell": _gaussian_shell,
    "exp-tail": _exp_tail,
    "marton": _marton,
    "monotone-metric": _monotone_metric,
    "product-sigma": _product_sigma,
    "thm11-sweep": _restriction_sweep,
    "thm13-exp": _spectral_exp,
    "talagrand-tails": _talagrand_tails,
    "nonlip-deviation": _nonlip_deviation,
}


def run_scenario(name: str, params: dict | None = None, seed: int = 0) -> ScenarioReport:
    if name not in _RUNNERS:
        raise ScenarioError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    params = dict(params or {})
    rep = ScenarioReport(name, {k: v for k, v in params.items() if k != "jobs"}, int(seed))
    start = time.perf_counter()
    _RUNNERS[name](rep, params, int(seed))
    rep.runtime_ms = (time.perf_counter() - start) * 1000.0
    return rep


# --- emission -----------------------------------------------------------------

def report_json(report: ScenarioReport, stable: bool = False) -> str:
    doc = report.to_dict()
    if stable:
        doc["runtime_ms"] = 0.0
    return dumps_json(doc)


def report_csv(report: ScenarioReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "lhs", "rhs", "constant", "tolerance", "passed"])
    for c in report.checks:
        writer.writerow([c.name, format_float(c.lhs), format_float(c.rhs), format_float(c.constant),
                         format_float(c.tolerance), "true" if c.passed else "false"])
    return buf.getvalue()


def emit_report(report: ScenarioReport, fmt: str = "json", path=None, stable: bool = False) -> str:
    """Serialize a report as JSON or CSV; writes to ``path`` when given."""
    if fmt == "json":
        text = report_json(report, stable)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError("format must be 'json' or 'csv'")
    if path is not None:
        Path(path).write_text(text)
    return text


def load_report(source) -> dict:
    text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
    return json.loads(text)
