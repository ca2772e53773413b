"""Command-line entry point ``conc``.

Exit codes: 0 when every counted check passes, 1 on a failed check, 2 when a
check's hypothesis is unmet (argparse usage errors also exit with 2), 3 on
invalid input data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import constants, continuum, orlicz, scenarios, space, spectral, transport
from .reports import dumps_json

EXIT_INPUT = 3


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("CONC_SEED", "0"))


def _emit(doc, args):
    text = dumps_json(doc)
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_space(args):
    if getattr(args, "hypercube", None):
        return space.build_hypercube(args.hypercube)
    if not args.space:
        raise space.SpaceError("give --space FILE or --hypercube N")
    return space.load_space(args.space)


def _load_vector(path, k, name):
    doc = json.loads(Path(path).read_text())
    values = np.asarray(doc["values"] if isinstance(doc, dict) else doc, dtype=float)
    if values.size != k:
        raise space.SpaceError(f"{name} has {values.size} entries, space has {k} points")
    return values


def _estimate_doc(est):
    return {"lower": est.lower, "upper": est.upper, "method": est.method,
            "upper_method": est.upper_method, "witness": est.witness,
            "diagnostics": est.diagnostics}


# --- handlers -----------------------------------------------------------------

def cmd_space_build(args):
    if args.kind == "hypercube":
        _emit(space.build_hypercube(args.n).to_dict(), args)
    elif args.kind == "chain":
        _emit({"members": np.flatnonzero(space.build_chain_subset(args.n)).tolist()}, args)
    else:
        base = space.load_space(args.base)
        _emit(space.build_product(base, args.n).to_dict(), args)
    return 0


def cmd_space_restrict(args):
    sp = _load_space(args)
    mask = space.load_mask(args.mask, sp.size)
    sub, mass = space.restrict(sp, mask)
    doc = sub.to_dict()
    doc["mass"] = mass
    _emit(doc, args)
    return 0


def cmd_norm(args):
    sp = _load_space(args)
    f = _load_vector(args.field, sp.size, "field")
    if args.which == "psi":
        value = orlicz.psi_norm(f, sp.weights, args.alpha)
        doc = {"norm": "psi", "alpha": args.alpha, "value": value,
               "moment_sup": orlicz.moment_sup(f, sp.weights, args.alpha)}
    else:
        doc = {"norm": "lp", "p": args.p, "value": orlicz.lp_norm(f, sp.weights, args.p)}
    _emit(doc, args)
    return 0


def cmd_const(args):
    sp = _load_space(args)
    seed = _seed(args)
    if args.which == "lambda1":
        form = (spectral.load_edges(args.edges, sp) if args.edges
                else spectral.build_graph_form(sp, args.rule))
        gap = spectral.spectral_gap(form)
        doc = {"lambda1": gap.value, "rule": form.rule, "connected": gap.connected,
               "eigenvector": gap.vector, "rayleigh": spectral.rayleigh(form, gap.vector)
               if gap.connected else None, "sweeps": gap.sweeps,
               "exp_integrability": spectral.exp_integrability_diagnostics(form, gap.vector, gap.value)}
    elif args.which == "spread":
        doc = _estimate_doc(constants.spread_estimate(sp, args.restarts, seed))
    else:
        doc = _estimate_doc(constants.sigma_estimate_lipschitz(sp, args.restarts, seed))
    _emit(doc, args)
    return 0


def cmd_transport(args):
    sp = _load_space(args)
    if args.which == "w1":
        nu1 = _load_vector(args.nu1, sp.size, "nu1")
        nu2 = _load_vector(args.nu2, sp.size, "nu2")
        plan = transport.w1(sp, nu1, nu2)
        if args.plan_csv:
            plan.to_csv(args.plan_csv)
        _emit({"value": plan.value, "gap": plan.gap, "potential": plan.potential,
               "pivots": plan.pivots}, args)
    else:
        est = transport.sigma_transport(sp, restarts=args.restarts, seed=_seed(args))
        _emit(_estimate_doc(est), args)
    return 0


def cmd_continuum(args):
    q = continuum.quad_restricted_moments(continuum.DensitySpec(args.family), args.R)
    q.update({"family": args.family, "R": args.R})
    _emit(q, args)
    return 0


def cmd_verify(args):
    params = {}
    for key in ("n", "R", "samples", "constant", "restarts"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.jobs and args.jobs > 1:
        params["jobs"] = args.jobs
    report = scenarios.run_scenario(args.scenario, params, _seed(args))
    text = scenarios.emit_report(report, args.format, args.out, stable=args.stable)
    if not args.out:
        sys.stdout.write(text)
    code = report.exit_code()
    failed = sum(1 for c in report.checks if c.counts and not c.passed)
    print(f"{args.scenario}: {len(report.checks)} checks, {failed} failed, exit {code}",
          file=sys.stderr)
    return code


# --- parser -------------------------------------------------------------------

def _space_args(p):
    p.add_argument("--space", help="space JSON file")
    p.add_argument("--hypercube", type=int, metavar="N", help="use the n-cube instead of --space")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conc", description="Concentration constants of "
                                     "finite metric probability spaces and restricted measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_space = sub.add_parser("space", help="build or restrict spaces")
    s_space = p_space.add_subparsers(dest="action", required=True)
    b = s_space.add_parser("build")
    b.add_argument("kind", choices=["hypercube", "chain", "product"])
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--base", help="base space JSON (product)")
    b.add_argument("--out")
    b.set_defaults(func=cmd_space_build)
    r = s_space.add_parser("restrict")
    _space_args(r)
    r.add_argument("--mask", required=True, help='mask JSON {"members": [...]}')
    r.add_argument("--out")
    r.set_defaults(func=cmd_space_restrict)

    p_norm = sub.add_parser("norm", help="psi_alpha and L^p norms")
    p_norm.add_argument("which", choices=["psi", "lp"])
    _space_args(p_norm)
    p_norm.add_argument("--field", required=True, help='field JSON {"values": [...]}')
    p_norm.add_argument("--alpha", type=float, default=2.0)
    p_norm.add_argument("--p", type=float, default=2.0)
    p_norm.add_argument("--out")
    p_norm.set_defaults(func=cmd_norm)

    p_const = sub.add_parser("const", help="sigma^2, s^2 and lambda_1 estimates")
    p_const.add_argument("which", choices=["sigma", "spread", "lambda1"])
    _space_args(p_const)
    p_const.add_argument("--edges", help='rates JSON {"edges": [[i, j, w], ...]}')
    p_const.add_argument("--rule", default="auto",
                         choices=["auto", "unit-distance", "coordinate-flip"])
    p_const.add_argument("--restarts", type=int, default=constants.DEFAULT_RESTARTS)
    p_const.add_argument("--seed", type=int)
    p_const.add_argument("--out")
    p_const.set_defaults(func=cmd_const)

    p_tr = sub.add_parser("transport", help="W1 and the transport-entropy constant")
    p_tr.add_argument("which", choices=["w1", "sigma"])
    _space_args(p_tr)
    p_tr.add_argument("--nu1")
    p_tr.add_argument("--nu2")
    p_tr.add_argument("--plan-csv", help="write the optimal plan as CSV (i,j,mass)")
    p_tr.add_argument("--restarts", type=int, default=16)
    p_tr.add_argument("--seed", type=int)
    p_tr.add_argument("--out")
    p_tr.set_defaults(func=cmd_transport)

    p_co = sub.add_parser("continuum", help="restricted-moment quadrature")
    s_co = p_co.add_subparsers(dest="action", required=True)
    q = s_co.add_parser("quad")
    q.add_argument("--family", required=True,
                   choices=["gaussian-1d", "two-sided-exponential", "exponential-radial-2d"])
    q.add_argument("--R", type=float, required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_continuum)

    p_v = sub.add_parser("verify", help="run a named verification scenario")
    p_v.add_argument("scenario", choices=list(scenarios.SCENARIOS))
    p_v.add_argument("--n", type=int)
    p_v.add_argument("--R", type=float)
    p_v.add_argument("--seed", type=int)
    p_v.add_argument("--samples", type=int)
    p_v.add_argument("--constant", type=float)
    p_v.add_argument("--restarts", type=int)
    p_v.add_argument("--jobs", type=int, default=1)
    p_v.add_argument("--format", choices=["json", "csv"], default="json")
    p_v.add_argument("--out")
    p_v.add_argument("--stable", action="store_true",
                     help="write runtime_ms as 0 so reports are byte-reproducible")
    p_v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "transport" and args.which == "w1" and not (args.nu1 and args.nu2):
        parser.error("transport w1 needs --nu1 and --nu2")
    if getattr(args, "kind", None) == "product" and not args.base:
        parser.error("space build product needs --base")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"conc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
