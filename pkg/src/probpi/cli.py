"""Command-line front end.

JSON goes to stdout, diagnostics to stderr.  Exit codes: 0 success,
1 regression/fuzz mismatch, 2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from .dist import Distribution, interp
from .gen import gen_proc, gen_scalar_test
from .logic import (
    char_formula,
    char_test,
    format_formula,
    parse_formula,
    sat_structural,
    sat_via_test,
    Sat3,
)
from .parser import ParseError, parse, parse_file
from .preorders import corpus_check, decide_may, decide_must, game_may, game_must
from .semantics import step, weak_tau_vertices
from .terms import (
    Name,
    alpha_eq,
    bn_action,
    fn_proc,
    fn_state,
    format_action,
    format_proc,
    format_state,
    free_names,
    key_name,
    size_state,
)
from .testing import apply_scalar, apply_vector


def _emit(payload, pretty: bool) -> None:
    if pretty:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(json.dumps(payload, sort_keys=True))


def _load_defs(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_file(fh.read())


def _term(arg: str, args) -> object:
    defs, successes = {}, set()
    if args.defs:
        defs, successes = _load_defs(args.defs)
    if args.success:
        successes |= set(args.success.split(","))
    if arg in defs:
        return defs[arg]
    return parse(arg, successes)


def _names_flag(value: str | None, *terms) -> frozenset[Name]:
    if value:
        return frozenset(Name(n) for n in value.split(","))
    out: set[Name] = set()
    for t in terms:
        out |= {n for n in free_names(t) if not n.success}
    from .terms import fresh

    return frozenset(out | {fresh(out)})


def cmd_parse(args) -> int:
    p = _term(args.term, args)
    _emit({"term": format_proc(p)}, args.pretty)
    return 0


def cmd_interp(args) -> int:
    p = _term(args.term, args)
    _emit({"distribution": interp(p).to_json()}, args.pretty)
    return 0


def cmd_lts(args) -> int:
    p = _term(args.term, args)
    d = interp(p)
    seen = []
    frontier = list(d.support())
    nodes = set()
    edges = []
    while frontier:
        s = frontier.pop()
        if s in nodes:
            continue
        nodes.add(s)
        seen.append(s)
        for t in step(s):
            edges.append(
                {
                    "source": format_state(s),
                    "label": format_action(t.label),
                    "target": t.target.to_json(),
                }
            )
            for u in t.target.support():
                if u not in nodes:
                    frontier.append(u)
    payload = {
        "initial": d.to_json(),
        "nodes": sorted(format_state(s) for s in nodes),
        "edges": sorted(edges, key=lambda e: (e["source"], e["label"], json.dumps(e["target"]))),
    }
    _emit(payload, args.pretty)
    return 0


def cmd_apply(args) -> int:
    test = _term(args.test, args)
    proc = _term(args.proc, args)
    out = apply_scalar(test, proc)
    payload = {"test": format_proc(test), "process": format_proc(proc)}
    payload.update(out.to_json())
    _emit(payload, args.pretty)
    return 0


def cmd_apply_vec(args) -> int:
    test = _term(args.test, args)
    proc = _term(args.proc, args)
    if args.omega:
        omega = tuple(Name(w, success=True) for w in args.omega.split(","))
    else:
        omega = tuple(sorted((n for n in fn_proc(test) if n.success), key=key_name))
    out = apply_vector(test, proc, omega)
    payload = {"test": format_proc(test), "process": format_proc(proc)}
    payload.update(out.to_json())
    _emit(payload, args.pretty)
    return 0


def cmd_char_formula(args) -> int:
    p = _term(args.term, args)
    names = _names_flag(args.alphabet, p)
    f = char_formula(interp(p), names, args.logic)
    _emit(
        {
            "term": format_proc(p),
            "logic": args.logic,
            "alphabet": sorted(n.ident for n in names),
            "formula": format_formula(f),
        },
        args.pretty,
    )
    return 0


def cmd_char_test(args) -> int:
    f = parse_formula(args.formula)
    names = _names_flag(args.names)
    from .logic import fn_formula

    names = frozenset(names | fn_formula(f))
    ct = char_test(f, names)
    payload = {"formula": format_formula(f)}
    payload.update(ct.to_json())
    _emit(payload, args.pretty)
    return 0


def cmd_sat(args) -> int:
    p = _term(args.term, args)
    f = parse_formula(args.formula)
    from .logic import fn_formula

    names = _names_flag(args.names, p) | fn_formula(f)
    d = interp(p)
    if args.method == "structural":
        res = sat_structural(d, f)
        payload = {"holds": res.value, "method": "structural"}
    else:
        holds = sat_via_test(d, f, names)
        payload = {"holds": holds, "method": "test"}
    payload.update({"term": format_proc(p), "formula": format_formula(f)})
    _emit(payload, args.pretty)
    return 0


def cmd_check(args) -> int:
    p = _term(args.left, args)
    q = _term(args.right, args)
    if args.relation == "may":
        v = decide_may(p, q)
        payload = v.to_json()
    elif args.relation == "must":
        v = decide_must(p, q)
        payload = v.to_json()
    elif args.relation == "sim":
        res, w = game_may(p, q)
        payload = {"relation": "sim", "holds": res.value, "method": "game"}
    else:
        res, w = game_must(p, q)
        payload = {"relation": "fsim", "holds": res.value, "method": "game"}
    payload["left"] = format_proc(p)
    payload["right"] = format_proc(q)
    _emit(payload, args.pretty)
    return 0


# ---------------------------------------------------------------------------
# Bundled regressions: the paper's worked examples with frozen verdicts.

MISMATCH_P = "a(x).a!b.0"
MISMATCH_Q = "a(x).[x!=c]tau.a!b.0"
MISMATCH_TEST = "a!c.a(y).w1.0"
EARLY_P = "a(x).b!x.0 + a(x).0 + a(x).[x=z]b!x.0"
EARLY_Q = "tau.a(x).b!x.0 + tau.a(x).0"
DELAY_P = "a(x).(c(u).0 (+1/2) d(u).0)"
DELAY_Q = "a(x).tau.(c(u).0 (+1/2) d(u).0)"

REGRESSIONS = [
    {"name": "mismatch-may", "kind": "may", "left": MISMATCH_P, "right": MISMATCH_Q, "want": False},
    {
        "name": "mismatch-test-max",
        "kind": "apply-max",
        "test": MISMATCH_TEST,
        "left": MISMATCH_P,
        "right": MISMATCH_Q,
        "want": ["1/1", "0/1"],
    },
    {"name": "early-vs-late-may", "kind": "may", "left": EARLY_P, "right": EARLY_Q, "want": True},
    {"name": "delay-may", "kind": "may", "left": DELAY_P, "right": DELAY_Q, "want": True},
    {"name": "may-reflexive-delay", "kind": "may", "left": DELAY_P, "right": DELAY_P, "want": True},
    {"name": "must-reflexive-delay", "kind": "must", "left": DELAY_P, "right": DELAY_P, "want": True},
    {
        "name": "input-branch-must",
        "kind": "must",
        "left": "a(u).0 + b(u).0",
        "right": "a(u).0",
        "want": False,
    },
    {
        "name": "input-branch-must-rev",
        "kind": "must",
        "left": "a(u).0",
        "right": "a(u).0 + b(u).0",
        "want": False,
    },
    {"name": "apply-success", "kind": "apply", "test": "w1.0", "proc": "0", "want": ["1/1"]},
]


def cmd_regress(args) -> int:
    results = []
    ok = True
    for case in REGRESSIONS:
        got: object
        if case["kind"] in ("may", "must"):
            p, q = parse(case["left"]), parse(case["right"])
            v = decide_may(p, q) if case["kind"] == "may" else decide_must(p, q)
            got = v.holds
        elif case["kind"] == "apply":
            out = apply_scalar(parse(case["test"]), parse(case["proc"]))
            got = out.to_json()["outcomes"]
        else:  # apply-max on both processes
            t = parse(case["test"])
            frac = lambda v: f"{v.numerator}/{v.denominator}"
            got = [
                frac(apply_scalar(t, parse(case["left"])).max),
                frac(apply_scalar(t, parse(case["right"])).max),
            ]
        match = got == case["want"]
        ok = ok and match
        results.append({"name": case["name"], "want": case["want"], "got": got, "ok": match})
    _emit({"cases": results, "ok": ok}, args.pretty)
    return 0 if ok else 1


def cmd_fuzz(args) -> int:
    rng = random.Random(args.seed)
    failures = []
    for i in range(args.count):
        try:
            p = gen_proc(rng, size=rng.randint(2, args.size))
            q = parse(format_proc(p))
            if not alpha_eq(p, q):
                failures.append({"case": i, "error": "roundtrip mismatch", "term": format_proc(p)})
                continue
            d = interp(p)
            for s in d.support():
                for t in step(s):
                    for u in t.target.support():
                        if size_state(u) >= size_state(s):
                            failures.append(
                                {"case": i, "error": "target not smaller", "term": format_state(s)}
                            )
                    b = bn_action(t.label)
                    if b and next(iter(b)) in fn_state(s):
                        failures.append(
                            {"case": i, "error": "label binder not fresh", "term": format_state(s)}
                        )
            weak_tau_vertices(d)
        except Exception as exc:  # fuzzing must never crash
            failures.append({"case": i, "error": f"{type(exc).__name__}: {exc}"})
    _emit({"count": args.count, "seed": args.seed, "failures": failures}, args.pretty)
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="probpi", description=__doc__)
    ap.add_argument("--pretty", action="store_true", help="indent JSON output")
    ap.add_argument("--defs", help="term definitions file")
    ap.add_argument("--success", help="extra success names, comma separated")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a term and print it back")
    p.add_argument("term")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("interp", help="interpret a term as a distribution")
    p.add_argument("term")
    p.set_defaults(fn=cmd_interp)

    p = sub.add_parser("lts", help="emit the full transition graph")
    p.add_argument("term")
    p.set_defaults(fn=cmd_lts)

    p = sub.add_parser("apply", help="scalar test application")
    p.add_argument("--test", required=True)
    p.add_argument("--proc", required=True)
    p.set_defaults(fn=cmd_apply)

    p = sub.add_parser("apply-vec", help="vector test application")
    p.add_argument("--test", required=True)
    p.add_argument("--proc", required=True)
    p.add_argument("--omega", help="ordered success names, comma separated")
    p.set_defaults(fn=cmd_apply_vec)

    p = sub.add_parser("char-formula", help="characteristic formula of a term")
    p.add_argument("term")
    p.add_argument("--logic", choices=["L", "F"], default="L")
    p.add_argument("--alphabet", help="alphabet names, comma separated")
    p.set_defaults(fn=cmd_char_formula)

    p = sub.add_parser("char-test", help="characteristic test of a formula")
    p.add_argument("formula")
    p.add_argument("--names", help="name set N, comma separated")
    p.set_defaults(fn=cmd_char_test)

    p = sub.add_parser("sat", help="does a term satisfy a formula")
    p.add_argument("term")
    p.add_argument("formula")
    p.add_argument("--names", help="name set N, comma separated")
    p.add_argument("--method", choices=["test", "structural"], default="test")
    p.set_defaults(fn=cmd_sat)

    p = sub.add_parser("check", help="decide a preorder between two terms")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--may", dest="relation", action="store_const", const="may")
    group.add_argument("--must", dest="relation", action="store_const", const="must")
    group.add_argument("--sim", dest="relation", action="store_const", const="sim")
    group.add_argument("--fsim", dest="relation", action="store_const", const="fsim")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("regress", help="run the bundled paper-example suite")
    p.set_defaults(fn=cmd_regress)

    p = sub.add_parser("fuzz", help="random smoke testing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--size", type=int, default=12)
    p.set_defaults(fn=cmd_fuzz)

    return ap


def run(argv: list[str]) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
