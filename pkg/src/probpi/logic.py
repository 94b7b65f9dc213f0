"""Modal logics L and F, characteristic formulas, characteristic tests.

F has top, refusals, the three diamond modalities, conjunction, and
probabilistic disjunction; L omits refusals.  `sat_structural` decides
satisfaction by clause-directed search over vertex derivative sets and is
three-valued: probabilistic disjunction admits interior-point witnesses the
vertex search can miss, so failure there reports unknown.  `sat_via_test`
decides satisfaction through the characteristic test of the formula and an
exact LP comparison with its target value; it is the authoritative check.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass

from .intern import interned
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .dist import Distribution, dist_subst, mix
from .semantics import (
    dist_refuses,
    lifted_step,
    step,
    weak_alpha,
    weak_tau_vertices,
)
from .terms import (
    Barb,
    BoundInput,
    BoundOutput,
    FreeOutput,
    Name,
    NIL,
    PChoice,
    ProcTerm,
    StateProc,
    Success,
    Tau,
    fn_proc,
    fresh,
    key_name,
    pchoice_of,
    subst_proc,
    success_prefix,
    sum_of,
    tau_prefix,
)
from .terms import InputPrefix, Match, Mismatch, OutputPrefix, Sum

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


class Sat3(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __bool__(self) -> bool:
        raise TypeError("three-valued result; compare explicitly")


def sat_and(results: Iterable[Sat3]) -> Sat3:
    out = Sat3.TRUE
    for r in results:
        if r is Sat3.FALSE:
            return Sat3.FALSE
        if r is Sat3.UNKNOWN:
            out = Sat3.UNKNOWN
    return out


def sat_or(results: Iterable[Sat3]) -> Sat3:
    out = Sat3.FALSE
    for r in results:
        if r is Sat3.TRUE:
            return Sat3.TRUE
        if r is Sat3.UNKNOWN:
            out = Sat3.UNKNOWN
    return out


# ---------------------------------------------------------------------------
# Formula AST


@interned
@dataclass(frozen=True)
class Top:
    pass


@interned
@dataclass(frozen=True)
class Ref:
    barbs: frozenset[Barb]


@interned
@dataclass(frozen=True)
class DiaInput:
    subject: Name
    binder: Name
    body: "Formula"


@interned
@dataclass(frozen=True)
class DiaFreeOut:
    subject: Name
    obj: Name
    body: "Formula"


@interned
@dataclass(frozen=True)
class DiaBoundOut:
    subject: Name
    binder: Name
    body: "Formula"


@interned
@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...]


@interned
@dataclass(frozen=True)
class PDisj:
    parts: tuple[tuple[Fraction, "Formula"], ...]

    def __post_init__(self) -> None:
        total = sum((p for p, _ in self.parts), ZERO)
        if total != 1 or any(p <= 0 for p, _ in self.parts):
            raise ValueError("probabilistic disjunction weights must be positive and sum to 1")


Formula = Union[Top, Ref, DiaInput, DiaFreeOut, DiaBoundOut, And, PDisj]

TOP = Top()


def conj(items: Sequence[Formula]) -> Formula:
    flat: list[Formula] = []
    for f in items:
        if isinstance(f, And):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return TOP
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def pdisj(parts: Sequence[tuple[Fraction, Formula]]) -> Formula:
    parts = [(Fraction(p), f) for p, f in parts if p != 0]
    if len(parts) == 1:
        return parts[0][1]
    return PDisj(tuple(parts))


def fn_formula(f: Formula) -> frozenset[Name]:
    match f:
        case Top():
            return frozenset()
        case Ref(barbs=bs):
            return frozenset(b.name for b in bs)
        case DiaInput(subject=a, binder=x, body=b) | DiaBoundOut(subject=a, binder=x, body=b):
            return frozenset({a}) | (fn_formula(b) - {x})
        case DiaFreeOut(subject=a, obj=o, body=b):
            return frozenset({a, o}) | fn_formula(b)
        case And(items=items):
            out: frozenset[Name] = frozenset()
            for i in items:
                out |= fn_formula(i)
            return out
        case PDisj(parts=parts):
            out = frozenset()
            for _, i in parts:
                out |= fn_formula(i)
            return out
    raise TypeError(f)


def is_L(f: Formula) -> bool:
    match f:
        case Top():
            return True
        case Ref():
            return False
        case DiaInput(body=b) | DiaFreeOut(body=b) | DiaBoundOut(body=b):
            return is_L(b)
        case And(items=items):
            return all(is_L(i) for i in items)
        case PDisj(parts=parts):
            return all(is_L(i) for _, i in parts)
    raise TypeError(f)


def subst_formula(f: Formula, sig: dict[Name, Name]) -> Formula:
    sig = {k: v for k, v in sig.items() if k != v}
    if not sig:
        return f
    get = lambda n: sig.get(n, n)
    match f:
        case Top():
            return f
        case Ref(barbs=bs):
            return Ref(frozenset(Barb(get(b.name), b.co) for b in bs))
        case DiaInput(subject=a, binder=x, body=b) | DiaBoundOut(subject=a, binder=x, body=b):
            sig2 = {k: v for k, v in sig.items() if k != x and k in fn_formula(b)}
            nx = x
            if x in sig2.values():
                nx = fresh(fn_formula(b) | set(sig2) | set(sig2.values()) | {x, get(a)})
                sig2[x] = nx
            nb = subst_formula(b, sig2)
            cls = DiaInput if isinstance(f, DiaInput) else DiaBoundOut
            return cls(get(a), nx, nb)
        case DiaFreeOut(subject=a, obj=o, body=b):
            return DiaFreeOut(get(a), get(o), subst_formula(b, sig))
        case And(items=items):
            return And(tuple(subst_formula(i, sig) for i in items))
        case PDisj(parts=parts):
            return PDisj(tuple((p, subst_formula(i, sig)) for p, i in parts))
    raise TypeError(f)


# ---------------------------------------------------------------------------
# Formula text syntax


_F_LVL_PD, _F_LVL_AND, _F_LVL_UN = 0, 1, 2


def _fmt(f: Formula, ctx: int) -> str:
    match f:
        case Top():
            return "T"
        case Ref(barbs=bs):
            inner = ",".join(str(b) for b in sorted(bs))
            return f"ref{{{inner}}}"
        case DiaInput(subject=a, binder=x, body=b):
            return f"<{a}({x})>{_fmt(b, _F_LVL_UN)}"
        case DiaFreeOut(subject=a, obj=o, body=b):
            return f"<~{a} {o}>{_fmt(b, _F_LVL_UN)}"
        case DiaBoundOut(subject=a, binder=x, body=b):
            return f"<~{a}({x})>{_fmt(b, _F_LVL_UN)}"
        case And(items=items):
            txt = " & ".join(_fmt(i, _F_LVL_AND + (0 if k == 0 else 1)) for k, i in enumerate(items))
            return f"({txt})" if ctx > _F_LVL_AND else txt
        case PDisj(parts=parts):
            (p0, f0), rest = parts[0], parts[1:]
            if len(rest) == 1:
                tail = _fmt(rest[0][1], _F_LVL_AND)
            else:
                scale = 1 - p0
                tail = _fmt(PDisj(tuple((q / scale, g) for q, g in rest)), _F_LVL_AND)
            head = _fmt(f0, _F_LVL_AND)
            txt = f"{head} (+{p0}) {tail}"
            return f"({txt})" if ctx > _F_LVL_PD else txt
    raise TypeError(f)


def format_formula(f: Formula) -> str:
    return _fmt(f, _F_LVL_PD)


_FTOK = re.compile(
    r"""(?P<WS>\s+)|(?P<NAME>[A-Za-z_][A-Za-z0-9_']*)|(?P<INT>\d+)
      |(?P<SYM>[<>(){}~&,/+])""",
    re.VERBOSE,
)


def parse_formula(text: str, successes: Iterable[str] = ()) -> Formula:
    toks: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _FTOK.match(text, pos)
        if not m:
            raise ValueError(f"formula syntax error at {text[pos:pos + 10]!r}")
        if m.lastgroup != "WS":
            kind = m.lastgroup if m.lastgroup != "SYM" else m.group()
            toks.append((kind, m.group()))
        pos = m.end()
    toks.append(("EOF", ""))
    i = [0]

    def peek(k: int = 0):
        return toks[min(i[0] + k, len(toks) - 1)]

    def take(kind: str) -> str:
        k, v = toks[i[0]]
        if k != kind:
            raise ValueError(f"formula: expected {kind}, found {v!r}")
        i[0] += 1
        return v

    def name() -> Name:
        v = take("NAME")
        return Name(v)

    def rational() -> Fraction:
        num = int(take("INT"))
        if peek()[0] == "/":
            take("/")
            return Fraction(num, int(take("INT")))
        return Fraction(num)

    def formula() -> Formula:
        left = conj_()
        if peek()[0] == "(" and peek(1)[0] == "+":
            take("(")
            take("+")
            p = rational()
            take(")")
            right = formula()
            return PDisj(((p, left), (1 - p, right)))
        return left

    def conj_() -> Formula:
        items = [unary()]
        while peek()[0] == "&":
            take("&")
            items.append(unary())
        return conj(items) if len(items) > 1 else items[0]

    def unary() -> Formula:
        k, v = peek()
        if k == "NAME" and v == "T":
            take("NAME")
            return TOP
        if k == "NAME" and v == "ref":
            take("NAME")
            take("{")
            barbs = set()
            while peek()[0] != "}":
                co = False
                if peek()[0] == "~":
                    take("~")
                    co = True
                barbs.add(Barb(name(), co))
                if peek()[0] == ",":
                    take(",")
            take("}")
            return Ref(frozenset(barbs))
        if k == "<":
            take("<")
            if peek()[0] == "~":
                take("~")
                a = name()
                if peek()[0] == "(":
                    take("(")
                    x = name()
                    take(")")
                    take(">")
                    return DiaBoundOut(a, x, unary())
                o = name()
                take(">")
                return DiaFreeOut(a, o, unary())
            a = name()
            take("(")
            x = name()
            take(")")
            take(">")
            return DiaInput(a, x, unary())
        if k == "(":
            take("(")
            f = formula()
            take(")")
            return f
        raise ValueError(f"formula: unexpected {v!r}")

    out = formula()
    if peek()[0] != "EOF":
        raise ValueError(f"formula: trailing input {peek()[1]!r}")
    return out


# ---------------------------------------------------------------------------
# Characteristic formulas


def char_formula(d: Distribution, alphabet: Iterable[Name], logic: str = "L") -> Formula:
    """The L- or F-characteristic formula of a distribution.

    Refusal sets are the complement of the offered barbs inside the finite
    alphabet (names and co-names); the unrestricted refusal set of the
    paper is infinite, and only alphabet actions are exercisable by tests
    over these names.
    """
    assert logic in ("L", "F")
    names = tuple(sorted(set(alphabet), key=key_name))
    if not d.free_names() <= set(names):
        raise ValueError("alphabet does not cover the distribution's free names")
    memo: dict = {}

    def fresh_binder(t) -> Name:
        # the modal binder scopes over refusal sets drawn from the whole
        # alphabet, so it must avoid the alphabet, not just the source
        return fresh(set(names) | t.target.free_names() | {t.label.subject, t.label.binder})

    def phi_state(s) -> Formula:
        got = memo.get(s)
        if got is not None:
            return got
        trs = step(s)
        conjuncts: list[Formula] = []
        taus = []
        for t in trs:
            match t.label:
                case Tau():
                    taus.append(t)
                case BoundInput(subject=a, binder=x):
                    nx = fresh_binder(t)
                    conjuncts.append(DiaInput(a, nx, phi_dist(dist_subst(t.target, {x: nx}))))
                case FreeOutput(subject=a, obj=o):
                    conjuncts.append(DiaFreeOut(a, o, phi_dist(t.target)))
                case BoundOutput(subject=a, binder=x):
                    nx = fresh_binder(t)
                    conjuncts.append(DiaBoundOut(a, nx, phi_dist(dist_subst(t.target, {x: nx}))))
                case Success():
                    raise ValueError("characteristic formulas are for processes, not tests")
        if taus:
            for t in taus:
                conjuncts.append(phi_dist(t.target))
        elif logic == "F":
            offered = set()
            for t in trs:
                match t.label:
                    case BoundInput(subject=a):
                        offered.add(Barb(a, False))
                    case FreeOutput(subject=a) | BoundOutput(subject=a):
                        offered.add(Barb(a, True))
            refused = frozenset(
                Barb(n, co) for n in names for co in (False, True) if Barb(n, co) not in offered
            )
            conjuncts.append(Ref(refused))
        out = conj(conjuncts)
        memo[s] = out
        return out

    def phi_dist(dd: Distribution) -> Formula:
        return pdisj([(w, phi_state(s)) for s, w in dd.items()])

    return phi_dist(d)


# ---------------------------------------------------------------------------
# Structural satisfaction (three-valued)


def sat_structural(d: Distribution, f: Formula) -> Sat3:
    """Clause-directed satisfaction over vertex derivative sets.

    Definitive on formulas without probabilistic disjunction; under
    disjunction the split search covers whole-state partitions and the
    uniform split, and reports unknown when it fails.
    """
    memo: dict = {}

    def rec(dd: Distribution, ff: Formula) -> Sat3:
        key = (dd, ff)
        got = memo.get(key)
        if got is not None:
            return got
        memo[key] = Sat3.UNKNOWN  # defensive; recursion descends the formula
        out = _sat(dd, ff, rec)
        memo[key] = out
        return out

    return rec(d, f)


def _sat(d: Distribution, f: Formula, rec) -> Sat3:
    match f:
        case Top():
            return Sat3.TRUE
        case Ref(barbs=bs):
            ok = any(dist_refuses(v, bs) for v in weak_tau_vertices(d))
            return Sat3.TRUE if ok else Sat3.FALSE
        case And(items=items):
            return sat_and(rec(d, i) for i in items)
        case DiaFreeOut(subject=a, obj=o, body=body):
            ds = weak_alpha(d, FreeOutput(a, o))
            if ds is None:
                return Sat3.FALSE
            return sat_or(rec(v, body) for v in ds)
        case DiaBoundOut(subject=a, binder=x, body=body):
            w = fresh(d.free_names() | fn_formula(f))
            ds = weak_alpha(d, BoundOutput(a, w))
            if ds is None:
                return Sat3.FALSE
            body_w = subst_formula(body, {x: w})
            return sat_or(rec(v, body_w) for v in ds)
        case DiaInput(subject=a, binder=x, body=body):
            base = d.free_names() | fn_formula(f)
            zs = sorted(base, key=key_name) + [fresh(base)]

            def witness(z: Name) -> Sat3:
                xb = fresh(base | {z})
                results = []
                for d1 in weak_tau_vertices(d):
                    for mid in lifted_step(d1, BoundInput(a, xb)):
                        landed = dist_subst(mid, {xb: z})
                        body_z = subst_formula(body, {x: z})
                        results.append(
                            sat_or(rec(v, body_z) for v in weak_tau_vertices(landed))
                        )
                return sat_or(iter(results))

            return sat_and(witness(z) for z in zs)
        case PDisj(parts=parts):
            for theta in weak_tau_vertices(d):
                if _pdisj_split(theta, parts, rec) is Sat3.TRUE:
                    return Sat3.TRUE
            return Sat3.UNKNOWN
    raise TypeError(f)


def _pdisj_split(theta: Distribution, parts, rec) -> Sat3:
    # uniform split: every component receives theta itself
    if all(rec(theta, ff) is Sat3.TRUE for _, ff in parts):
        return Sat3.TRUE
    # whole-state partitions with exact weight matching
    support = theta.items()
    k = len(parts)
    targets = [p for p, _ in parts]

    def assign(i: int, masses: list[Fraction], buckets: list[list]) -> bool:
        if i == len(support):
            if any(m != t for m, t in zip(masses, targets)):
                return False
            for bucket, (_, ff) in zip(buckets, parts):
                sub = Distribution([(s, w / sum(x for _, x in bucket)) for s, w in bucket])
                if rec(sub, ff) is not Sat3.TRUE:
                    return False
            return True
        s, w = support[i]
        for j in range(k):
            if masses[j] + w <= targets[j]:
                masses[j] += w
                buckets[j].append((s, w))
                if assign(i + 1, masses, buckets):
                    return True
                masses[j] -= w
                buckets[j].pop()
        return False

    ok = assign(0, [ZERO] * k, [[] for _ in range(k)])
    return Sat3.TRUE if ok else Sat3.UNKNOWN


# ---------------------------------------------------------------------------
# Characteristic tests


@dataclass(frozen=True)
class CharTest:
    """A test term, its target value, and the order of its success names."""

    test: ProcTerm
    target: tuple[Fraction, ...]
    omega_order: tuple[Name, ...]

    def target_map(self) -> dict[Name, Fraction]:
        return dict(zip(self.omega_order, self.target))

    def to_json(self) -> dict:
        from .terms import format_proc

        frac = lambda q: f"{q.numerator}/{q.denominator}"
        return {
            "test": format_proc(self.test),
            "omega_order": [w.ident for w in self.omega_order],
            "target": [frac(x) for x in self.target],
        }


def _mismatch_chain(x: Name, against: Sequence[Name], body) -> object:
    term = body
    for n in sorted(against, key=key_name, reverse=True):
        term = Mismatch(x, n, term)
    return term


def char_test(f: Formula, names: Iterable[Name]) -> CharTest:
    """The characteristic test and target value of a formula over N."""
    base = frozenset(names)
    if not fn_formula(f) <= base:
        raise ValueError("formula has free names outside N")
    minted: list[Name] = []

    def mint() -> Name:
        w = Name(f"w{len(minted)}", success=True)
        minted.append(w)
        return w

    def build(ff: Formula, N: frozenset[Name]) -> tuple[ProcTerm, dict[Name, Fraction]]:
        match ff:
            case Top():
                w = mint()
                return StateProc(success_prefix(w)), {w: ONE}
            case Ref(barbs=bs):
                # each probe offers the complement of the refused barb, so
                # it can fire exactly when the process offers that barb
                w = mint()
                summands = []
                for b in sorted(bs):
                    if b.co:
                        y = fresh(N | {b.name})
                        summands.append(InputPrefix(b.name, y, StateProc(success_prefix(w))))
                    else:
                        summands.append(OutputPrefix(b.name, b.name, StateProc(success_prefix(w))))
                return StateProc(sum_of(summands)), {}
            case DiaFreeOut(subject=a, obj=o, body=body):
                sub, v = build(body, N)
                w = mint()
                y = fresh(N | fn_proc(sub) | {a, o})
                guarded = Match(y, o, tau_prefix(sub, avoid=N | fn_proc(sub) | {y, a, o}))
                inner = Sum(guarded, success_prefix(w))
                test = Sum(success_prefix(w), InputPrefix(a, y, StateProc(inner)))
                return StateProc(test), v
            case DiaBoundOut(subject=a, binder=x, body=body):
                z = fresh(N)
                n2 = N | {z}
                body_z = subst_formula(body, {x: z})
                sub, v = build(body_z, n2)
                w = mint()
                chain = _mismatch_chain(
                    z, sorted(N, key=key_name), tau_prefix(sub, avoid=n2 | fn_proc(sub) | {a})
                )
                inner = Sum(chain, success_prefix(w))
                test = Sum(success_prefix(w), InputPrefix(a, z, StateProc(inner)))
                return StateProc(test), v
            case DiaInput(subject=a, binder=x, body=body):
                z = fresh(N)
                n2 = N | {z}
                ws = sorted(n2, key=key_name)
                p = Fraction(1, len(ws))
                branches = []
                target: dict[Name, Fraction] = {}
                for wn in ws:
                    body_w = subst_formula(body, {x: wn})
                    sub, v = build(body_w, n2)
                    escape = mint()
                    branch = Sum(success_prefix(escape), OutputPrefix(a, wn, sub))
                    branches.append((p, StateProc(branch)))
                    for name_, val in v.items():
                        target[name_] = target.get(name_, ZERO) + p * val
                return pchoice_of(branches), target
            case And(items=items):
                p = Fraction(1, len(items))
                parts = []
                target = {}
                for item in items:
                    sub, v = build(item, N)
                    parts.append((p, sub))
                    for name_, val in v.items():
                        target[name_] = target.get(name_, ZERO) + p * val
                return pchoice_of(parts), target
            case PDisj(parts=parts):
                summands = []
                target: dict[Name, Fraction] = {}
                for p, item in parts:
                    sub, v = build(item, N)
                    wi = mint()
                    primed = PChoice(HALF, sub, StateProc(success_prefix(wi)))
                    summands.append(
                        tau_prefix(primed, avoid=N | fn_proc(primed))
                    )
                    for name_, val in v.items():
                        target[name_] = target.get(name_, ZERO) + p * HALF * val
                    target[wi] = target.get(wi, ZERO) + p * HALF
                return StateProc(sum_of(summands)), target
        raise TypeError(ff)

    test, target = build(f, base)
    order = tuple(minted)
    vec = tuple(target.get(w, ZERO) for w in order)
    return CharTest(test, vec, order)


def sat_via_test(d: Distribution, f: Formula, names: Iterable[Name]) -> bool:
    """Satisfaction decided through the characteristic test (authoritative)."""
    from .testing import apply_vector

    base = frozenset(names)
    if not (fn_formula(f) | d.free_names()) <= base:
        raise ValueError("N must cover the free names of the formula and distribution")
    ct = char_test(f, base)
    outcomes = apply_vector(ct.test, d, ct.omega_order)
    rel = "ge" if is_L(f) else "le"
    return outcomes.feasible(ct.target, rel) is not None


def sat_via_test_details(d: Distribution, f: Formula, names: Iterable[Name]):
    """Like sat_via_test but returns (holds, char test, LP witness or None)."""
    from .testing import apply_vector

    base = frozenset(names)
    ct = char_test(f, base)
    outcomes = apply_vector(ct.test, d, ct.omega_order)
    rel = "ge" if is_L(f) else "le"
    witness = outcomes.feasible(ct.target, rel)
    return witness is not None, ct, witness
