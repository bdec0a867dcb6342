"""``symgame`` command line.

Exit codes: 0 ok, 1 validation or class-verification failure, 2 file or
format error, 3 non-convergence.
"""

import argparse
import json
import logging
import sys

import numpy as np

from .game import GameValidationError, ShapeError, validate_game
from .generators import GENERATORS
from .harness import (
    ADVERSARY_KINDS,
    SETTINGS,
    AdversaryConfig,
    ClassVerificationError,
    emit_results,
    run_experiment,
    verify_setting,
)
from .hsg import verify_hsg
from .io import load_game, load_payoff, save_game, save_payoff
from .matrix_game import MatrixGameError
from .msg import MEMBER_TOL, MsgSet, ProjectionError, project_msg
from .msg_basis import build_orthogonal_family
from .oracles import (
    EnumerationCapExceeded,
    check_lrsg,
    check_svg,
    msg_violation,
    pair_family,
    span_equal,
)

log = logging.getLogger("symgame")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NONCONVERGENCE = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, msg, code):
        super().__init__(msg)
        self.code = code


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _print(obj):
    print(json.dumps(_jsonable(obj), indent=1))


def _load(args, need_payoff=True):
    g, u = load_game(args.game)
    validate_game(g)
    if getattr(args, "payoff", None):
        u = load_payoff(args.payoff, g)
    if need_payoff and u is None:
        u = np.zeros(g.shape)
    return g, u


def _adversary(args):
    params = {}
    for item in args.adv_arg or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--adv-arg expects key=value, got {item!r}", EXIT_INVALID)
        params[key] = value
    policy = None
    if "policy" in params:
        with open(params.pop("policy"), encoding="utf-8") as fh:
            d = json.load(fh)
        policy = np.asarray(d.get("policy", d) if isinstance(d, dict) else d, dtype=float)
    step = float(params.pop("step")) if "step" in params else None
    if params:
        raise CliError(f"unknown adversary arguments {sorted(params)}", EXIT_INVALID)
    try:
        return AdversaryConfig(args.adversary, policy, step)
    except ValueError as e:
        raise CliError(str(e), EXIT_INVALID) from None


def cmd_run(args):
    g, u = _load(args)
    cfg = _adversary(args)
    r = run_experiment(g, u, args.setting, cfg, args.episodes, args.seed, eta=args.eta, force=args.force)
    if args.out:
        emit_results(r, args.format, args.out)
    _print(r.summary)
    return EXIT_OK


def cmd_check(args):
    g, u = _load(args)
    if args.setting == "hsg":
        verdict = verify_hsg(g, u, tol=args.tol or 1e-9)
        _print({"setting": "hsg", "ok": verdict.ok, "value_spread": verdict.value_spread,
                "skew_defect": verdict.skew_defect, "witness": verdict.witness})
        return EXIT_OK if verdict else EXIT_INVALID
    try:
        verify_setting(g, u, args.setting, tol=args.tol)
    except ClassVerificationError as e:
        _print({"setting": args.setting, "ok": False, "reason": str(e)})
        return EXIT_INVALID
    _print({"setting": args.setting, "ok": True})
    return EXIT_OK


def cmd_basis(args):
    g, _ = _load(args, need_payoff=False)
    fam = build_orthogonal_family(g)
    msg_set = MsgSet.from_family(fam, g.shape)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({
            "shape": list(g.shape),
            "rank": msg_set.rank,
            "vectors": fam.vectors.tolist(),
            "provenance": [
                {"slot": slot, "state": state, "a1": a1, "a2": a2} for slot, state, a1, a2 in fam.provenance
            ],
        }, fh)
    _print({"vectors": len(fam), "rank": msg_set.rank, "out": args.out})
    return EXIT_OK


def cmd_project(args):
    g, u = _load(args)
    msg_set = MsgSet.from_family(build_orthogonal_family(g), g.shape, member_tol=args.member_tol)
    x, info = project_msg(u, msg_set, method=args.method, return_info=True)
    residuals = {"iterations": info.iterations, "box_residual": info.box_residual,
                 "subspace_residual": info.subspace_residual, "method": info.method,
                 "distance": float(np.linalg.norm(x - u))}
    save_payoff(args.out, g, x, residuals=residuals)
    _print(residuals)
    return EXIT_OK


def cmd_gen(args):
    gen = GENERATORS[args.cls]
    rng = np.random.default_rng(args.seed)
    kw = {"mode": args.mode} if args.cls == "msg" else {}
    g, u = gen(args.layers, args.actions, rng, **kw)
    save_game(args.out, g, u)
    _print({"class": args.cls, "states": g.num_states, "horizon": g.horizon, "out": args.out})
    return EXIT_OK


def cmd_oracle(args):
    g, u = _load(args)
    tol = args.tol
    if args.check == "msg":
        worst, pair = msg_violation(g, u)
        ok = worst <= (tol or 1e-8)
        out = {"check": "msg", "ok": ok, "max_abs_C": worst}
        if not ok:
            out["witness"] = {"pi1": pair[0], "pi2": pair[1]}
    elif args.check == "lrsg":
        v = check_lrsg(g, u, tol=tol or 1e-9)
        out = {"check": "lrsg", "ok": v.ok, "witness": v.witness}
    elif args.check == "svg":
        h = args.layer or g.horizon
        v = check_svg(g, u, h, tol=tol or 1e-9)
        out = {"check": "svg", "layer": h, "ok": v.ok, "witness": v.witness}
    elif args.check == "hsg":
        v = verify_hsg(g, u, tol=tol or 1e-9)
        out = {"check": "hsg", "ok": v.ok, "value_spread": v.value_spread,
               "skew_defect": v.skew_defect, "witness": v.witness}
    else:
        fam = build_orthogonal_family(g)
        brute = pair_family(g)
        ok = span_equal(fam, brute, tol=tol or 1e-8)
        out = {"check": "span", "ok": ok, "family_vectors": len(fam), "pair_vectors": len(brute)}
    _print(out)
    return EXIT_OK if out["ok"] else EXIT_INVALID


def build_parser():
    p = argparse.ArgumentParser(prog="symgame", description="Payoff-blind copycat learners for symmetric zero-sum Markov games.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="play a learner against an adversary")
    r.add_argument("--game", required=True)
    r.add_argument("--payoff", help="payoff file overriding the game file's payoff")
    r.add_argument("--setting", required=True, choices=SETTINGS)
    r.add_argument("--adversary", required=True, choices=ADVERSARY_KINDS)
    r.add_argument("--adv-arg", action="append", metavar="KEY=VALUE",
                   help="adversary parameter: policy=FILE (fixed-markov) or step=X (ogd-informed)")
    r.add_argument("--episodes", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--eta", type=float)
    r.add_argument("--out")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--force", action="store_true", help="skip the symmetry-class check")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="verify a payoff's symmetry class")
    c.add_argument("--game", required=True)
    c.add_argument("--payoff")
    c.add_argument("--setting", required=True, choices=SETTINGS)
    c.add_argument("--tol", type=float)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("basis", help="write the orthogonal family as JSON")
    b.add_argument("--game", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_basis)

    pr = sub.add_parser("project", help="project a payoff onto the Markov-symmetric set")
    pr.add_argument("--game", required=True)
    pr.add_argument("--payoff", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--method", choices=("dykstra", "qp"), default="dykstra")
    pr.add_argument("--member-tol", type=float, default=MEMBER_TOL)
    pr.set_defaults(func=cmd_project)

    gn = sub.add_parser("gen", help="generate a random game of a symmetry class")
    gn.add_argument("--class", dest="cls", required=True, choices=sorted(GENERATORS))
    gn.add_argument("--layers", type=int, nargs="+", required=True, help="layer sizes, first must be 1")
    gn.add_argument("--actions", type=int, required=True)
    gn.add_argument("--seed", type=int, default=0)
    gn.add_argument("--mode", choices=("symmetric", "projected"), default="symmetric", help="msg generator mode")
    gn.add_argument("--out", required=True)
    gn.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="brute-force verification")
    o.add_argument("--game", required=True)
    o.add_argument("--payoff")
    o.add_argument("--check", required=True, choices=("msg", "lrsg", "svg", "hsg", "span"))
    o.add_argument("--layer", type=int, help="layer (1-based) for the svg check; default H")
    o.add_argument("--tol", type=float)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ProjectionError, MatrixGameError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (GameValidationError, ShapeError, ClassVerificationError, EnumerationCapExceeded, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
