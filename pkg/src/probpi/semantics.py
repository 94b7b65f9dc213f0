"""Operational semantics: strong steps, lifted steps, weak derivatives.

`step` enumerates every derivable transition of a state term under the
rules Act, Sum, Match, Mismatch, Par, Com, Close, Res and Open (both
orientations of the symmetric rules).  Bound names in labels are chosen
fresh against the free names of the source, deterministically, so
transcripts are reproducible.

Weak derivative sets are represented by their extreme points.  The calculus
is finite and acyclic (targets shrink strictly), so per-state resolution
enumeration yields a finite generating set whose convex hull is the full
set of weak derivatives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .dist import Distribution, dist_subst, mix, point
from .lp import feasible
from .terms import (
    Action,
    PChoice,
    StateProc,
    Barb,
    BoundInput,
    BoundOutput,
    FreeOutput,
    InputPrefix,
    Match,
    Mismatch,
    Name,
    Nil,
    OutputPrefix,
    Par,
    Restrict,
    StateTerm,
    Success,
    Sum,
    TAU,
    Tau,
    bn_action,
    canonical_state,
    fn_action,
    fn_state,
    fresh,
    key_action,
    key_state,
    n_action,
    subst_proc,
)


@dataclass(frozen=True)
class Transition:
    source: StateTerm
    label: Action
    target: Distribution


def key_dist(d: Distribution) -> tuple:
    return tuple((key_state(s), (w.numerator, w.denominator)) for s, w in d.items())


def _key_transition(t: Transition) -> tuple:
    return (key_action(t.label), key_dist(t.target))


# Rule composition threads raw (state, weight) lists and canonicalises once
# per finished transition target; re-normalising at every Par/Restrict layer
# would walk each composed term once per nesting level.

_Raw = list  # list[tuple[StateTerm, Fraction]]


def _raw_interp(p) -> _Raw:
    out: _Raw = []

    def walk(q, w) -> None:
        if w == 0:
            return
        match q:
            case StateProc(state=st):
                out.append((st, w))
            case PChoice(prob=pr, left=l, right=r):
                walk(l, w * pr)
                walk(r, w * (1 - pr))
    walk(p, Fraction(1))
    return out


def _raw_fn(items: _Raw) -> frozenset[Name]:
    out: frozenset[Name] = frozenset()
    for s, _ in items:
        out |= fn_state(s)
    return out


def _raw_subst(items: _Raw, sig: dict[Name, Name]) -> _Raw:
    from .terms import subst_state

    return [(subst_state(s, sig), w) for s, w in items]


def _rebind(label: Action, target: _Raw, avoid: frozenset[Name]):
    """Rename the bound name of a label (and its target) fresh w.r.t. avoid."""
    b = bn_action(label)
    if not b:
        return label, target
    (old,) = b
    new = fresh(avoid | fn_action(label) | _raw_fn(target) | {old})
    if new == old:
        return label, target
    tgt = _raw_subst(target, {old: new})
    if isinstance(label, BoundInput):
        return BoundInput(label.subject, new), tgt
    return BoundOutput(label.subject, new), tgt


_STEP_CACHE: dict[StateTerm, tuple[Transition, ...]] = {}


def step(s: StateTerm) -> tuple[Transition, ...]:
    """All strong transitions of a state term, deterministically ordered."""
    cs = canonical_state(s)
    cached = _STEP_CACHE.get(cs)
    if cached is None:
        raw = _step(cs)
        trs = [Transition(cs, label, Distribution(items)) for label, items in raw]
        cached = tuple(sorted(trs, key=_key_transition))
        _STEP_CACHE[cs] = cached
    if cs is s or cs == s:
        return cached
    return tuple(Transition(s, t.label, t.target) for t in cached)


def _inner(s: StateTerm):
    """Child transitions as raw (label, items) pairs, derived structurally.

    Each node of a state term is visited once per top-level derivation, so
    no intermediate caching or canonicalisation is needed.
    """
    return _step(s)


def _passthrough(src: StateTerm, inner) -> list:
    avoid = fn_state(src)
    return [_rebind(label, items, avoid) for label, items in inner]


def _step(s: StateTerm) -> list:
    match s:
        case Nil():
            return []
        case InputPrefix(subject=a, binder=x, body=body):
            y = fresh(fn_state(s))
            tgt = _raw_interp(subst_proc(body, {x: y}) if y != x else body)
            return [(BoundInput(a, y), tgt)]
        case OutputPrefix(subject=a, obj=o, body=body):
            label: Action = Success(a) if a.success else FreeOutput(a, o)
            return [(label, _raw_interp(body))]
        case Match(left=x, right=y, body=body):
            return _passthrough(s, _inner(body)) if x == y else []
        case Mismatch(left=x, right=y, body=body):
            return _passthrough(s, _inner(body)) if x != y else []
        case Sum(left=l, right=r):
            return _passthrough(s, _inner(l)) + _passthrough(s, _inner(r))
        case Par(left=l, right=r):
            return _step_par(s, l, r)
        case Restrict(binder=x, body=body):
            return _step_restrict(s, x, body)
    raise TypeError(s)


def _raw_par(left: _Raw, right: _Raw) -> _Raw:
    return [(Par(s1, s2), w1 * w2) for s1, w1 in left for s2, w2 in right]


def _raw_restrict(x: Name, items: _Raw) -> _Raw:
    return [(Restrict(x, s), w) for s, w in items]


def _step_par(s: StateTerm, l: StateTerm, r: StateTerm) -> list:
    avoid = fn_state(s)
    out = []
    steps_l, steps_r = _inner(l), _inner(r)
    point_l, point_r = [(l, Fraction(1))], [(r, Fraction(1))]
    for label, items in steps_l:
        label, items = _rebind(label, items, avoid)
        out.append((label, _raw_par(items, point_r)))
    for label, items in steps_r:
        label, items = _rebind(label, items, avoid)
        out.append((label, _raw_par(point_l, items)))

    def communications(ins, outs, left_inputs: bool):
        for li, ti in ins:
            if not isinstance(li, BoundInput):
                continue
            for lo, to in outs:
                if isinstance(lo, FreeOutput) and lo.subject == li.subject:
                    received = _raw_subst(ti, {li.binder: lo.obj})
                    pair = (received, to) if left_inputs else (to, received)
                    out.append((TAU, _raw_par(*pair)))
                if isinstance(lo, BoundOutput) and lo.subject == li.subject:
                    w = fresh(avoid)
                    d_in = _raw_subst(ti, {li.binder: w})
                    d_out = _raw_subst(to, {lo.binder: w})
                    pair = (d_in, d_out) if left_inputs else (d_out, d_in)
                    out.append((TAU, _raw_restrict(w, _raw_par(*pair))))

    communications(steps_l, steps_r, left_inputs=True)
    communications(steps_r, steps_l, left_inputs=False)
    return out


def _step_restrict(s: StateTerm, x: Name, body: StateTerm) -> list:
    out = []
    avoid = fn_state(body) | {x}
    for label, items in _inner(body):
        label, items = _rebind(label, items, avoid)
        if x not in n_action(label):
            out.append((label, _raw_restrict(x, items)))
        elif isinstance(label, FreeOutput) and label.obj == x and label.subject != x:
            y = fresh(fn_state(s) | {label.subject, x})
            out.append((BoundOutput(label.subject, y), _raw_subst(items, {x: y})))
    return out


# ---------------------------------------------------------------------------
# Lifted transitions and weak derivatives


@dataclass(frozen=True)
class DerivativeSet:
    """Extreme points of a convex set of distributions."""

    vertices: frozenset[Distribution]

    def __post_init__(self) -> None:
        if not self.vertices:
            raise ValueError("derivative set must be non-empty")

    def __iter__(self):
        return iter(sorted(self.vertices, key=key_dist))

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, d: Distribution) -> bool:
        return d in self.vertices


def _match_target(t: Transition, alpha: Action) -> Optional[Distribution]:
    """Target of t viewed as an alpha-transition, unifying bound names."""
    l = t.label
    match alpha:
        case Tau():
            return t.target if isinstance(l, Tau) else None
        case FreeOutput(subject=a, obj=o):
            return t.target if l == FreeOutput(a, o) else None
        case Success(w=w):
            return t.target if l == Success(w) else None
        case BoundInput(subject=a, binder=x):
            if isinstance(l, BoundInput) and l.subject == a:
                return t.target if l.binder == x else dist_subst(t.target, {l.binder: x})
            return None
        case BoundOutput(subject=a, binder=x):
            if isinstance(l, BoundOutput) and l.subject == a:
                return t.target if l.binder == x else dist_subst(t.target, {l.binder: x})
            return None
    raise TypeError(alpha)


_LIFTED_CACHE: dict[tuple, frozenset[Distribution]] = {}


def lifted_step(d: Distribution, alpha: Action) -> frozenset[Distribution]:
    """Vertex set of all lifted alpha-successors of d.

    Every support state must move; each picks one of its alpha-transitions.
    Empty if some support state has no alpha-transition.  For bound labels
    the caller must supply a binder fresh for d.
    """
    if bn_action(alpha) & d.free_names():
        raise ValueError(f"binder of {alpha} not fresh for the distribution")
    key = (d, alpha)
    cached = _LIFTED_CACHE.get(key)
    if cached is not None:
        return cached
    per_state: list[tuple[Fraction, list[Distribution]]] = []
    for s, w in d.items():
        options: list[Distribution] = []
        seen = set()
        for t in step(s):
            got = _match_target(t, alpha)
            if got is not None and got not in seen:
                seen.add(got)
                options.append(got)
        if not options:
            _LIFTED_CACHE[key] = frozenset()
            return frozenset()
        per_state.append((w, options))
    out = set()
    for combo in itertools.product(*[opts for _, opts in per_state]):
        out.add(mix([(w, dd) for (w, _), dd in zip(per_state, combo)]))
    result = frozenset(out)
    _LIFTED_CACHE[key] = result
    return result


_WTV_CACHE: dict[Distribution, DerivativeSet] = {}


def weak_tau_vertices(d: Distribution) -> DerivativeSet:
    """Extreme points of { e | d ==tau-hat==>* e }.  Always contains d."""
    cached = _WTV_CACHE.get(d)
    if cached is not None:
        return cached
    memo: dict[StateTerm, tuple[Distribution, ...]] = {}

    def vert_state(s: StateTerm) -> tuple[Distribution, ...]:
        cs = canonical_state(s)
        got = memo.get(cs)
        if got is not None:
            return got
        acc: list[Distribution] = [point(cs)]
        seen = {point(cs)}
        for t in step(cs):
            if isinstance(t.label, Tau):
                for v in vert_dist(t.target):
                    if v not in seen:
                        seen.add(v)
                        acc.append(v)
        result = tuple(acc)
        memo[cs] = result
        return result

    def vert_dist(dd: Distribution) -> tuple[Distribution, ...]:
        per = [(w, vert_state(s)) for s, w in dd.items()]
        out = []
        seen = set()
        for combo in itertools.product(*[vs for _, vs in per]):
            v = mix([(w, choice) for (w, _), choice in zip(per, combo)])
            if v not in seen:
                seen.add(v)
                out.append(v)
        return tuple(out)

    res = DerivativeSet(frozenset(vert_dist(d)))
    _WTV_CACHE[d] = res
    return res


def weak_tau_chains(d: Distribution) -> dict[Distribution, list[Distribution]]:
    """Vertices with a replayable chain of lifted hat-tau steps from d."""
    memo: dict[StateTerm, dict[Distribution, list[Distribution]]] = {}

    def chain_state(s: StateTerm) -> dict[Distribution, list[Distribution]]:
        cs = canonical_state(s)
        got = memo.get(cs)
        if got is not None:
            return got
        p = point(cs)
        acc: dict[Distribution, list[Distribution]] = {p: [p]}
        for t in step(cs):
            if isinstance(t.label, Tau):
                for v, ch in chain_dist(t.target).items():
                    if v not in acc:
                        acc[v] = [p] + ch
        memo[cs] = acc
        return acc

    def chain_dist(dd: Distribution) -> dict[Distribution, list[Distribution]]:
        per = [(w, chain_state(s)) for s, w in dd.items()]
        out: dict[Distribution, list[Distribution]] = {}
        for combo in itertools.product(*[list(cs.items()) for _, cs in per]):
            length = max(len(ch) for _, ch in combo)
            padded = [ch + [ch[-1]] * (length - len(ch)) for _, ch in combo]
            chain = [
                mix([(w, padded[i][k]) for i, (w, _) in enumerate(per)])
                for k in range(length)
            ]
            v = chain[-1]
            if v not in out:
                out[v] = chain
        return out

    return chain_dist(d)


def check_hat_tau_step(d1: Distribution, d2: Distribution) -> bool:
    """Is d1 ==hat-tau==> d2 in one lifted step?  Exact LP feasibility."""
    states = list(d1.items())
    options: list[tuple[int, Distribution]] = []  # (state index, target)
    for i, (s, _) in enumerate(states):
        options.append((i, point(s)))  # stay
        for t in step(s):
            if isinstance(t.label, Tau):
                options.append((i, t.target))
    support = d2.support()
    support_index = {canonical_state(s): k for k, s in enumerate(support)}
    n = len(options)
    a_eq: list[list[Fraction]] = []
    b_eq: list[Fraction] = []
    for i, (_, w) in enumerate(states):
        a_eq.append([Fraction(1) if oi == i else Fraction(0) for oi, _ in options])
        b_eq.append(w)
    for s_t, k in support_index.items():
        a_eq.append([tgt.weight(s_t) for _, tgt in options])
        b_eq.append(d2.weight(s_t))
    # mass on states outside supp(d2) must vanish: total mass handled above,
    # plus one row per extraneous support element forcing weight 0
    extraneous: set[StateTerm] = set()
    for _, tgt in options:
        for s_t in tgt.support():
            if canonical_state(s_t) not in support_index:
                extraneous.add(canonical_state(s_t))
    for s_t in sorted(extraneous, key=key_state):
        a_eq.append([tgt.weight(s_t) for _, tgt in options])
        b_eq.append(Fraction(0))
    return feasible(n, a_eq=a_eq, b_eq=b_eq) is not None


def replay_weak_chain(chain: list[Distribution]) -> bool:
    return all(check_hat_tau_step(a, b) for a, b in zip(chain, chain[1:]))


_WA_CACHE: dict[tuple, DerivativeSet] = {}


def weak_alpha(d: Distribution, alpha: Action) -> Optional[DerivativeSet]:
    """Vertex set of the weak alpha-hat move tau* ; alpha ; tau*.

    For alpha = tau this is the reflexive-transitive closure itself.
    Input actions are rejected: their weak moves follow the dedicated
    simulation clause.  Returns None when no resolution performs alpha.
    """
    if isinstance(alpha, BoundInput):
        raise ValueError("weak moves for input actions follow the input clause")
    if isinstance(alpha, Tau):
        return weak_tau_vertices(d)
    key = (d, alpha)
    if key in _WA_CACHE:
        return _WA_CACHE[key]
    out: set[Distribution] = set()
    for v1 in weak_tau_vertices(d):
        for mid in lifted_step(v1, alpha):
            out |= weak_tau_vertices(mid).vertices
    res = DerivativeSet(frozenset(out)) if out else None
    _WA_CACHE[key] = res
    return res


# ---------------------------------------------------------------------------
# Barbs and refusals


def barbs(s: StateTerm) -> frozenset[Barb]:
    out = set()
    for t in step(s):
        match t.label:
            case BoundInput(subject=a):
                out.add(Barb(a, co=False))
            case FreeOutput(subject=a) | BoundOutput(subject=a) | Success(w=a):
                out.add(Barb(a, co=True))
    return frozenset(out)


def has_tau(s: StateTerm) -> bool:
    return any(isinstance(t.label, Tau) for t in step(s))


def refuses(s: StateTerm, x: Iterable[Barb]) -> bool:
    """s refuses X: no tau transition and no barb named in X."""
    if has_tau(s):
        return False
    bs = barbs(s)
    return all(b not in bs for b in x)


def dist_refuses(d: Distribution, x: Iterable[Barb]) -> bool:
    xs = list(x)
    return all(refuses(s, xs) for s in d.support())
