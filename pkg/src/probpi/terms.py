"""Term algebra for the finite probabilistic pi-calculus.

Two-sorted terms: state terms carry the transitions, process terms add
probabilistic choice.  Probabilistic choice may occur only under input and
output prefixes; the parser enforces that sort discipline.  Success names
(used by tests) live in the same identifier universe as channel names but
are flagged; they only ever appear as output-prefix subjects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .intern import interned
from typing import Iterable, Mapping, Union


@interned
@dataclass(frozen=True, order=True)
class Name:
    ident: str
    success: bool = False

    def __str__(self) -> str:
        return self.ident


def fresh(avoid: Iterable[Name]) -> Name:
    """Least name of the reserved supply n0, n1, ... not occurring in avoid."""
    used = {n.ident for n in avoid}
    for k in itertools.count():
        cand = f"n{k}"
        if cand not in used:
            return Name(cand)
    raise AssertionError("unreachable")


def fresh_many(avoid: Iterable[Name], count: int) -> list[Name]:
    out: list[Name] = []
    pool = set(avoid)
    for _ in range(count):
        x = fresh(pool)
        out.append(x)
        pool.add(x)
    return out


@interned
@dataclass(frozen=True, order=True)
class Barb:
    """A name (input capability) or co-name (output capability)."""

    name: Name
    co: bool = False

    def __str__(self) -> str:
        return ("~" if self.co else "") + self.name.ident


# ---------------------------------------------------------------------------
# Actions


@interned
@dataclass(frozen=True)
class Tau:
    pass


@interned
@dataclass(frozen=True)
class BoundInput:
    subject: Name
    binder: Name


@interned
@dataclass(frozen=True)
class FreeOutput:
    subject: Name
    obj: Name


@interned
@dataclass(frozen=True)
class BoundOutput:
    subject: Name
    binder: Name


@interned
@dataclass(frozen=True)
class Success:
    w: Name


Action = Union[Tau, BoundInput, FreeOutput, BoundOutput, Success]

TAU = Tau()


def fn_action(a: Action) -> frozenset[Name]:
    match a:
        case Tau():
            return frozenset()
        case BoundInput(subject=s) | BoundOutput(subject=s):
            return frozenset({s})
        case FreeOutput(subject=s, obj=o):
            return frozenset({s, o})
        case Success(w=w):
            return frozenset({w})
    raise TypeError(a)


def bn_action(a: Action) -> frozenset[Name]:
    match a:
        case BoundInput(binder=b) | BoundOutput(binder=b):
            return frozenset({b})
        case _:
            return frozenset()


def n_action(a: Action) -> frozenset[Name]:
    return fn_action(a) | bn_action(a)


def subst_action(a: Action, sig: Mapping[Name, Name]) -> Action:
    """Apply a substitution to an action, affecting bound names as well."""
    get = lambda n: sig.get(n, n)
    match a:
        case Tau():
            return a
        case BoundInput(subject=s, binder=b):
            return BoundInput(get(s), get(b))
        case FreeOutput(subject=s, obj=o):
            return FreeOutput(get(s), get(o))
        case BoundOutput(subject=s, binder=b):
            return BoundOutput(get(s), get(b))
        case Success(w=w):
            return Success(get(w))
    raise TypeError(a)


def format_action(a: Action) -> str:
    match a:
        case Tau():
            return "tau"
        case BoundInput(subject=s, binder=b):
            return f"{s}({b})"
        case FreeOutput(subject=s, obj=o):
            return f"{s}!{o}"
        case BoundOutput(subject=s, binder=b):
            return f"{s}!({b})"
        case Success(w=w):
            return w.ident
    raise TypeError(a)


# ---------------------------------------------------------------------------
# Terms


@interned
@dataclass(frozen=True)
class Nil:
    pass


@interned
@dataclass(frozen=True)
class InputPrefix:
    subject: Name
    binder: Name
    body: "ProcTerm"


@interned
@dataclass(frozen=True)
class OutputPrefix:
    subject: Name
    obj: Name
    body: "ProcTerm"


@interned
@dataclass(frozen=True)
class Match:
    left: Name
    right: Name
    body: "StateTerm"


@interned
@dataclass(frozen=True)
class Mismatch:
    left: Name
    right: Name
    body: "StateTerm"


@interned
@dataclass(frozen=True)
class Sum:
    left: "StateTerm"
    right: "StateTerm"


@interned
@dataclass(frozen=True)
class Par:
    left: "StateTerm"
    right: "StateTerm"


@interned
@dataclass(frozen=True)
class Restrict:
    binder: Name
    body: "StateTerm"


StateTerm = Union[Nil, InputPrefix, OutputPrefix, Match, Mismatch, Sum, Par, Restrict]

NIL = Nil()


@interned
@dataclass(frozen=True)
class StateProc:
    state: StateTerm


@interned
@dataclass(frozen=True)
class PChoice:
    prob: Fraction
    left: "ProcTerm"
    right: "ProcTerm"

    def __post_init__(self) -> None:
        if not (0 < self.prob <= 1):
            raise ValueError(f"probability {self.prob} outside (0,1]")


ProcTerm = Union[StateProc, PChoice]

NIL_PROC = StateProc(NIL)


def success_prefix(w: Name, body: ProcTerm = NIL_PROC) -> OutputPrefix:
    """The omega-prefix w.P, encoded as an output with irrelevant object w."""
    assert w.success
    return OutputPrefix(w, w, body)


def sum_of(parts: list[StateTerm]) -> StateTerm:
    """Left-nested n-ary sum; the empty sum is 0."""
    if not parts:
        return NIL
    acc = parts[0]
    for p in parts[1:]:
        acc = Sum(acc, p)
    return acc


def pchoice_of(parts: list[tuple[Fraction, ProcTerm]]) -> ProcTerm:
    """n-ary probabilistic choice as a right-nested binary tree.

    Weights must be positive and sum to 1 exactly.
    """
    if not parts:
        raise ValueError("empty probabilistic choice")
    total = sum(p for p, _ in parts)
    if total != 1:
        raise ValueError(f"probabilities sum to {total}, not 1")
    if any(p <= 0 for p, _ in parts):
        raise ValueError("probabilities must be positive")
    if len(parts) == 1:
        return parts[0][1]
    p0, t0 = parts[0]
    rest = [(q / (1 - p0), t) for q, t in parts[1:]]
    return PChoice(p0, t0, pchoice_of(rest))


# ---------------------------------------------------------------------------
# Free names


@lru_cache(maxsize=None)
def fn_state(s: StateTerm) -> frozenset[Name]:
    match s:
        case Nil():
            return frozenset()
        case InputPrefix(subject=a, binder=x, body=b):
            return frozenset({a}) | (fn_proc(b) - {x})
        case OutputPrefix(subject=a, obj=o, body=b):
            return frozenset({a, o}) | fn_proc(b)
        case Match(left=x, right=y, body=b) | Mismatch(left=x, right=y, body=b):
            return frozenset({x, y}) | fn_state(b)
        case Sum(left=l, right=r) | Par(left=l, right=r):
            return fn_state(l) | fn_state(r)
        case Restrict(binder=x, body=b):
            return fn_state(b) - {x}
    raise TypeError(s)


@lru_cache(maxsize=None)
def fn_proc(p: ProcTerm) -> frozenset[Name]:
    match p:
        case StateProc(state=s):
            return fn_state(s)
        case PChoice(left=l, right=r):
            return fn_proc(l) | fn_proc(r)
    raise TypeError(p)


def free_names(t) -> frozenset[Name]:
    """Free names of a state term, process term, or action."""
    if isinstance(t, (Nil, InputPrefix, OutputPrefix, Match, Mismatch, Sum, Par, Restrict)):
        return fn_state(t)
    if isinstance(t, (StateProc, PChoice)):
        return fn_proc(t)
    return fn_action(t)


# ---------------------------------------------------------------------------
# Size (number of constructors and names); transition targets shrink strictly.


@lru_cache(maxsize=None)
def size_state(s: StateTerm) -> int:
    match s:
        case Nil():
            return 1
        case InputPrefix(body=b) | OutputPrefix(body=b):
            return 3 + size_proc(b)
        case Match(body=b) | Mismatch(body=b):
            return 3 + size_state(b)
        case Sum(left=l, right=r) | Par(left=l, right=r):
            return 1 + size_state(l) + size_state(r)
        case Restrict(body=b):
            return 2 + size_state(b)
    raise TypeError(s)


@lru_cache(maxsize=None)
def size_proc(p: ProcTerm) -> int:
    match p:
        case StateProc(state=s):
            return size_state(s)
        case PChoice(left=l, right=r):
            return max(size_proc(l), size_proc(r))
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Substitution (capture-avoiding, simultaneous)


def _clean(sig: Mapping[Name, Name]) -> dict[Name, Name]:
    return {k: v for k, v in sig.items() if k != v}


def subst_state(s: StateTerm, sig: Mapping[Name, Name]) -> StateTerm:
    sig = _clean(sig)
    if not sig:
        return s
    return _subst_state(s, sig)


def subst_proc(p: ProcTerm, sig: Mapping[Name, Name]) -> ProcTerm:
    sig = _clean(sig)
    if not sig:
        return p
    return _subst_proc(p, sig)


def _push_binder(binder: Name, body_fn: frozenset[Name], sig: dict[Name, Name]):
    """Restrict sig under binder, renaming the binder if capture threatens."""
    sig2 = {k: v for k, v in sig.items() if k != binder and k in body_fn}
    if binder in sig2.values():
        avoid = body_fn | set(sig2) | set(sig2.values()) | {binder}
        nb = fresh(avoid)
        sig2[binder] = nb
        return nb, sig2
    return binder, sig2


def _subst_state(s: StateTerm, sig: dict[Name, Name]) -> StateTerm:
    if not (sig.keys() & fn_state(s)):
        return s  # nothing free to replace, hence no capture either
    get = lambda n: sig.get(n, n)
    match s:
        case Nil():
            return s
        case InputPrefix(subject=a, binder=x, body=b):
            nx, sig2 = _push_binder(x, fn_proc(b), sig)
            return InputPrefix(get(a), nx, _subst_proc(b, sig2) if sig2 else b)
        case OutputPrefix(subject=a, obj=o, body=b):
            sig2 = {k: v for k, v in sig.items() if k in fn_proc(b)}
            return OutputPrefix(get(a), get(o), _subst_proc(b, sig2) if sig2 else b)
        case Match(left=x, right=y, body=b):
            return Match(get(x), get(y), _subst_state(b, sig))
        case Mismatch(left=x, right=y, body=b):
            return Mismatch(get(x), get(y), _subst_state(b, sig))
        case Sum(left=l, right=r):
            return Sum(_subst_state(l, sig), _subst_state(r, sig))
        case Par(left=l, right=r):
            return Par(_subst_state(l, sig), _subst_state(r, sig))
        case Restrict(binder=x, body=b):
            nx, sig2 = _push_binder(x, fn_state(b), sig)
            return Restrict(nx, _subst_state(b, sig2) if sig2 else b)
    raise TypeError(s)


def _subst_proc(p: ProcTerm, sig: dict[Name, Name]) -> ProcTerm:
    match p:
        case StateProc(state=s):
            return StateProc(_subst_state(s, sig))
        case PChoice(prob=q, left=l, right=r):
            return PChoice(q, _subst_proc(l, sig), _subst_proc(r, sig))
    raise TypeError(p)


def substitute(t: StateTerm, sig: Mapping[Name, Name]) -> StateTerm:
    """Capture-avoiding simultaneous substitution on a state term."""
    return subst_state(t, sig)


# ---------------------------------------------------------------------------
# Canonical form and alpha-equivalence.
#
# Binders are renumbered left-to-right into the reserved namespace "#k",
# which the parser rejects in user input; canonical terms therefore compare
# and hash structurally, which is what distribution keys require.


@lru_cache(maxsize=None)
def _binder_free(s) -> bool:
    match s:
        case Nil():
            return True
        case InputPrefix() | Restrict():
            return False
        case OutputPrefix(body=b):
            return _binder_free(b)
        case Match(body=b) | Mismatch(body=b):
            return _binder_free(b)
        case Sum(left=l, right=r) | Par(left=l, right=r):
            return _binder_free(l) and _binder_free(r)
        case StateProc(state=st):
            return _binder_free(st)
        case PChoice(left=l, right=r):
            return _binder_free(l) and _binder_free(r)
    raise TypeError(s)


def _canon_state(s: StateTerm, env: dict[Name, Name], ctr) -> StateTerm:
    if _binder_free(s) and not (env.keys() & fn_state(s)):
        return s
    get = lambda n: env.get(n, n)
    match s:
        case Nil():
            return s
        case InputPrefix(subject=a, binder=x, body=b):
            nx = Name(f"#{next(ctr)}")
            return InputPrefix(get(a), nx, _canon_proc(b, {**env, x: nx}, ctr))
        case OutputPrefix(subject=a, obj=o, body=b):
            return OutputPrefix(get(a), get(o), _canon_proc(b, env, ctr))
        case Match(left=x, right=y, body=b):
            return Match(get(x), get(y), _canon_state(b, env, ctr))
        case Mismatch(left=x, right=y, body=b):
            return Mismatch(get(x), get(y), _canon_state(b, env, ctr))
        case Sum(left=l, right=r):
            return Sum(_canon_state(l, env, ctr), _canon_state(r, env, ctr))
        case Par(left=l, right=r):
            return Par(_canon_state(l, env, ctr), _canon_state(r, env, ctr))
        case Restrict(binder=x, body=b):
            nx = Name(f"#{next(ctr)}")
            return Restrict(nx, _canon_state(b, {**env, x: nx}, ctr))
    raise TypeError(s)


def _canon_proc(p: ProcTerm, env: dict[Name, Name], ctr) -> ProcTerm:
    if _binder_free(p) and not (env.keys() & fn_proc(p)):
        return p
    match p:
        case StateProc(state=s):
            return StateProc(_canon_state(s, env, ctr))
        case PChoice(prob=q, left=l, right=r):
            return PChoice(q, _canon_proc(l, env, ctr), _canon_proc(r, env, ctr))
    raise TypeError(p)


def _canon_counter(free: frozenset[Name]):
    """Positional #k supply skipping reserved tokens free in the term.

    Subterms of canonical terms can have #j names free (bound further
    out); reusing those indices for binders would capture them.  The skip
    pattern depends only on the free names, so alpha-equivalent terms
    still canonicalise identically.
    """
    taken = {n.ident for n in free if n.ident.startswith("#")}

    def gen():
        for k in itertools.count():
            if f"#{k}" not in taken:
                yield k

    return gen()


@lru_cache(maxsize=None)
def canonical_state(s: StateTerm) -> StateTerm:
    return _canon_state(s, {}, _canon_counter(fn_state(s)))


@lru_cache(maxsize=None)
def canonical_proc(p: ProcTerm) -> ProcTerm:
    return _canon_proc(p, {}, _canon_counter(fn_proc(p)))


def alpha_eq(s, t) -> bool:
    """Alpha-equivalence of two state terms or two process terms."""
    if isinstance(s, (StateProc, PChoice)):
        return canonical_proc(s) == canonical_proc(t)
    return canonical_state(s) == canonical_state(t)


# Deterministic total order on canonical terms, for sorted iteration.


def key_name(n: Name) -> tuple:
    return (n.ident, n.success)


@lru_cache(maxsize=None)
def key_state(s: StateTerm) -> tuple:
    match s:
        case Nil():
            return (0,)
        case InputPrefix(subject=a, binder=x, body=b):
            return (1, key_name(a), key_name(x), key_proc(b))
        case OutputPrefix(subject=a, obj=o, body=b):
            return (2, key_name(a), key_name(o), key_proc(b))
        case Match(left=x, right=y, body=b):
            return (3, key_name(x), key_name(y), key_state(b))
        case Mismatch(left=x, right=y, body=b):
            return (4, key_name(x), key_name(y), key_state(b))
        case Sum(left=l, right=r):
            return (5, key_state(l), key_state(r))
        case Par(left=l, right=r):
            return (6, key_state(l), key_state(r))
        case Restrict(binder=x, body=b):
            return (7, key_name(x), key_state(b))
    raise TypeError(s)


@lru_cache(maxsize=None)
def key_proc(p: ProcTerm) -> tuple:
    match p:
        case StateProc(state=s):
            return (0, key_state(s))
        case PChoice(prob=q, left=l, right=r):
            return (1, (q.numerator, q.denominator), key_proc(l), key_proc(r))
    raise TypeError(p)


def key_action(a: Action) -> tuple:
    match a:
        case Tau():
            return (0,)
        case BoundInput(subject=s, binder=b):
            return (1, key_name(s), key_name(b))
        case FreeOutput(subject=s, obj=o):
            return (2, key_name(s), key_name(o))
        case BoundOutput(subject=s, binder=b):
            return (3, key_name(s), key_name(b))
        case Success(w=w):
            return (4, key_name(w))
    raise TypeError(a)


# ---------------------------------------------------------------------------
# Barendregt convention: rename binders so they are pairwise distinct and
# distinct from every free name.  Original binder names are kept when they
# do not clash.


def barendregt(p: ProcTerm, avoid: Iterable[Name] = ()) -> ProcTerm:
    used = set(avoid) | fn_proc(p)

    def pick(x: Name) -> Name:
        if x not in used:
            used.add(x)
            return x
        nx = fresh(used)
        used.add(nx)
        return nx

    def go_s(s: StateTerm, env: dict[Name, Name]) -> StateTerm:
        get = lambda n: env.get(n, n)
        match s:
            case Nil():
                return s
            case InputPrefix(subject=a, binder=x, body=b):
                nx = pick(x)
                return InputPrefix(get(a), nx, go_p(b, {**env, x: nx}))
            case OutputPrefix(subject=a, obj=o, body=b):
                return OutputPrefix(get(a), get(o), go_p(b, env))
            case Match(left=x, right=y, body=b):
                return Match(get(x), get(y), go_s(b, env))
            case Mismatch(left=x, right=y, body=b):
                return Mismatch(get(x), get(y), go_s(b, env))
            case Sum(left=l, right=r):
                return Sum(go_s(l, env), go_s(r, env))
            case Par(left=l, right=r):
                return Par(go_s(l, env), go_s(r, env))
            case Restrict(binder=x, body=b):
                nx = pick(x)
                return Restrict(nx, go_s(b, {**env, x: nx}))
        raise TypeError(s)

    def go_p(q: ProcTerm, env: dict[Name, Name]) -> ProcTerm:
        match q:
            case StateProc(state=s):
                return StateProc(go_s(s, env))
            case PChoice(prob=pr, left=l, right=r):
                return PChoice(pr, go_p(l, env), go_p(r, env))
        raise TypeError(q)

    return go_p(p, {})


def binders_state(s: StateTerm) -> list[Name]:
    match s:
        case Nil():
            return []
        case InputPrefix(binder=x, body=b):
            return [x] + binders_proc(b)
        case OutputPrefix(body=b):
            return binders_proc(b)
        case Match(body=b) | Mismatch(body=b):
            return binders_state(b)
        case Sum(left=l, right=r) | Par(left=l, right=r):
            return binders_state(l) + binders_state(r)
        case Restrict(binder=x, body=b):
            return [x] + binders_state(b)
    raise TypeError(s)


def binders_proc(p: ProcTerm) -> list[Name]:
    match p:
        case StateProc(state=s):
            return binders_state(s)
        case PChoice(left=l, right=r):
            return binders_proc(l) + binders_proc(r)
    raise TypeError(p)


def is_barendregt(p: ProcTerm) -> bool:
    bs = binders_proc(p)
    return len(bs) == len(set(bs)) and not (set(bs) & fn_proc(p))


# ---------------------------------------------------------------------------
# tau prefix sugar: tau.P stands for new x.(x(y).0 | x!x.P) with x, y fresh.


def tau_prefix(body: ProcTerm, avoid: Iterable[Name] = ()) -> StateTerm:
    pool = set(avoid) | fn_proc(body)
    x = fresh(pool)
    y = fresh(pool | {x})
    return Restrict(x, Par(InputPrefix(x, y, NIL_PROC), OutputPrefix(x, x, body)))


# ---------------------------------------------------------------------------
# Printing.  Reserved binders (#k, from canonical forms) are renamed to a
# printable v0, v1, ... sequence first; user binder names print as written.

_LVL_PCH, _LVL_SUM, _LVL_PAR, _LVL_UN = 0, 1, 2, 3


def _display_proc(p: ProcTerm) -> ProcTerm:
    reserved = [b for b in binders_proc(p) if b.ident.startswith("#")]
    if not reserved:
        return p
    used = {n.ident for n in fn_proc(p)} | {b.ident for b in binders_proc(p)}
    ctr = itertools.count()

    def next_v() -> Name:
        while True:
            cand = f"v{next(ctr)}"
            if cand not in used:
                used.add(cand)
                return Name(cand)

    def go_s(s: StateTerm, env) -> StateTerm:
        get = lambda n: env.get(n, n)
        match s:
            case Nil():
                return s
            case InputPrefix(subject=a, binder=x, body=b):
                nx = next_v() if x.ident.startswith("#") else x
                return InputPrefix(get(a), nx, go_p(b, {**env, x: nx}))
            case OutputPrefix(subject=a, obj=o, body=b):
                return OutputPrefix(get(a), get(o), go_p(b, env))
            case Match(left=x, right=y, body=b):
                return Match(get(x), get(y), go_s(b, env))
            case Mismatch(left=x, right=y, body=b):
                return Mismatch(get(x), get(y), go_s(b, env))
            case Sum(left=l, right=r):
                return Sum(go_s(l, env), go_s(r, env))
            case Par(left=l, right=r):
                return Par(go_s(l, env), go_s(r, env))
            case Restrict(binder=x, body=b):
                nx = next_v() if x.ident.startswith("#") else x
                return Restrict(nx, go_s(b, {**env, x: nx}))
        raise TypeError(s)

    def go_p(q: ProcTerm, env) -> ProcTerm:
        match q:
            case StateProc(state=s):
                return StateProc(go_s(s, env))
            case PChoice(prob=pr, left=l, right=r):
                return PChoice(pr, go_p(l, env), go_p(r, env))
        raise TypeError(q)

    return go_p(p, {})


def _fmt_state(s: StateTerm, ctx: int) -> str:
    match s:
        case Nil():
            return "0"
        case InputPrefix(subject=a, binder=x, body=b):
            return f"{a}({x}).{_fmt_proc(b, _LVL_UN)}"
        case OutputPrefix(subject=a, obj=o, body=b):
            if a.success:
                txt = f"{a}.{_fmt_proc(b, _LVL_UN)}"
            else:
                txt = f"{a}!{o}.{_fmt_proc(b, _LVL_UN)}"
            return txt
        case Match(left=x, right=y, body=b):
            return f"[{x}={y}]{_fmt_state(b, _LVL_UN)}"
        case Mismatch(left=x, right=y, body=b):
            return f"[{x}!={y}]{_fmt_state(b, _LVL_UN)}"
        case Sum(left=l, right=r):
            txt = f"{_fmt_state(l, _LVL_SUM)} + {_fmt_state(r, _LVL_SUM + 1)}"
            return f"({txt})" if ctx > _LVL_SUM else txt
        case Par(left=l, right=r):
            txt = f"{_fmt_state(l, _LVL_PAR)} | {_fmt_state(r, _LVL_PAR + 1)}"
            return f"({txt})" if ctx > _LVL_PAR else txt
        case Restrict(binder=x, body=b):
            return f"new {x}.{_fmt_state(b, _LVL_UN)}"
    raise TypeError(s)


def _fmt_proc(p: ProcTerm, ctx: int) -> str:
    match p:
        case StateProc(state=s):
            return _fmt_state(s, ctx)
        case PChoice(prob=q, left=l, right=r):
            txt = f"{_fmt_proc(l, _LVL_SUM)} (+{q}) {_fmt_proc(r, _LVL_SUM)}"
            return f"({txt})" if ctx > _LVL_PCH else txt
    raise TypeError(p)


def format_proc(p: ProcTerm) -> str:
    return _fmt_proc(_display_proc(p), _LVL_PCH)


def format_state(s: StateTerm) -> str:
    return _fmt_proc(_display_proc(StateProc(s)), _LVL_PCH)
