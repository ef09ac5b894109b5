"""Command line interface.

Subcommands ``metric``, ``compare``, ``geodesic``, ``scale``, ``lbk`` and
``report``.  Every command prints JSON and exits nonzero iff a verdict fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np
import yaml

from .domains import domain_from_config
from .errors import InvariantMetricsError
from .geodesics import LeftInverse, ball_geodesic, certify_stationary
from .harness import ExperimentConfig, _complex_list, _jsonable, run_experiment
from .metrics import (
    Budget, caratheodory_lower, caratheodory_reiffen_lower, closed_form, compare,
    kobayashi_distance_upper, kobayashi_royden_upper, lempert_upper,
)

QUANTITIES = ("l", "k", "c", "kappa", "gamma")


def _point(text):
    """``"0.5,0.1+0.2j"`` -> complex array."""
    return np.asarray(_complex_list([t for t in text.split(",") if t.strip()]))


def _domain(args):
    if args.domain:
        return domain_from_config(yaml.safe_load(args.domain))
    if args.config:
        data = yaml.safe_load(open(args.config))
        return domain_from_config(data.get("domain", data))
    raise SystemExit("a domain is required (--domain or --config)")


def _budget(args):
    return Budget(degree=args.degree, seed=args.seed or 0)


def _emit(payload, ok=True):
    print(json.dumps(_jsonable(payload), indent=2))
    return 0 if ok else 1


def cmd_metric(args):
    D = _domain(args)
    z = _point(args.z)
    b = _budget(args)
    q = args.quantity
    if q in ("kappa", "gamma"):
        v = _point(args.v)
        res = (kobayashi_royden_upper if q == "kappa" else caratheodory_reiffen_lower)(D, z, v, b)
        exact = closed_form(D, q, z, v)
    else:
        w = _point(args.w)
        if q == "l":
            res = lempert_upper(D, z, w, b)
        elif q == "k":
            res = kobayashi_distance_upper(D, z, w, args.chain_depth, b)
        else:
            res = caratheodory_lower(D, z, w, b)
        exact = closed_form(D, q, z, w)
    value = res if isinstance(res, float) else res.value
    exact = exact if isinstance(exact, float) else None
    return _emit({"domain": D.name, "quantity": q, "value": value, "closed_form": exact})


def cmd_compare(args):
    D = _domain(args)
    v = _point(args.v) if args.v else None
    rep = compare(D, _point(args.z), _point(args.w), v, _budget(args), args.chain_depth,
                  args.tol_eq)
    return _emit(rep.to_dict(), not rep.ordering_violations)


def cmd_geodesic(args):
    z, w = _point(args.z), _point(args.w)
    n = len(z)
    f, xi = ball_geodesic(n, z, w, return_xi=True)
    from .domains import Ball

    cert = certify_stationary(Ball(n), f)
    F = LeftInverse(f, cert.dual_map)
    lam = 0.9 * np.exp(2j * np.pi * np.arange(16) / 16)
    err = max(abs(F(f(x)) - x) for x in lam)
    return _emit({"xi": xi, "certificate": cert.to_dict(), "left_inverse_error": err},
                 cert.passes and err <= 1e-8)


def _experiment(args, name):
    cfgs = ExperimentConfig.from_yaml(args.config) if args.config else ExperimentConfig(name)
    cfgs = cfgs if isinstance(cfgs, list) else [cfgs]
    if name is not None:
        cfgs = [c for c in cfgs if c.experiment == name]
        if not cfgs:
            raise SystemExit(f"config contains no {name!r} experiment")
    if getattr(args, "name", None):
        cfgs = [c for c in cfgs if c.name == args.name]
        if not cfgs:
            raise SystemExit(f"config contains no experiment named {args.name!r}")
    ok = True
    summary = []
    for cfg in cfgs:
        if args.seed is not None:
            cfg.seed = args.seed
        if args.output:
            cfg.output = args.output
        rep = run_experiment(cfg)
        out = rep.write(cfg.output_dir)
        ok = ok and rep.passed
        summary.append({"experiment": cfg.name or rep.experiment, "verdicts": rep.verdicts,
                        "numbers": rep.numbers, "runtime": rep.runtime, "output": str(out)})
    return _emit(summary, ok)


def build_parser():
    p = argparse.ArgumentParser(prog="invmetrics", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, domain=True):
        sp.add_argument("--config", help="YAML configuration document")
        sp.add_argument("--seed", type=int, default=None)
        if domain:
            sp.add_argument("--domain", help='inline YAML, e.g. "{tag: Ball, n: 2}"')
            sp.add_argument("--degree", type=int, default=16)
            sp.add_argument("--chain-depth", type=int, default=1)

    m = sub.add_parser("metric", help="one bound for one pair or direction")
    common(m)
    m.add_argument("quantity", choices=QUANTITIES)
    m.add_argument("--z", required=True)
    m.add_argument("--w")
    m.add_argument("--v")
    m.set_defaults(func=cmd_metric)

    c = sub.add_parser("compare", help="c_low <= k_up <= l_up bracket")
    common(c)
    c.add_argument("--z", required=True)
    c.add_argument("--w", required=True)
    c.add_argument("--v")
    c.add_argument("--tol-eq", type=float, default=1e-4)
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("geodesic", help="certified ball geodesic through two points")
    common(g, domain=False)
    g.add_argument("--z", required=True)
    g.add_argument("--w", required=True)
    g.set_defaults(func=cmd_geodesic)

    for name, exp, text in (("scale", "scaling", "scaling experiment"),
                            ("lbk", "lbk", "boundary-hitting geodesics"),
                            ("report", None, "every experiment in a config")):
        sp = sub.add_parser(name, help=text)
        common(sp, domain=False)
        sp.add_argument("--output", help="output directory")
        sp.add_argument("--name", help="run only the experiment with this name")
        sp.set_defaults(func=lambda a, exp=exp: _experiment(a, exp))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InvariantMetricsError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
