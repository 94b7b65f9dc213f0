"""Seeded random generators for processes, tests, and formulas.

Used by the fuzz command and the property/acceptance suites.  Sizes follow
the paper's symbol count.  Guards are drawn only from names that are not
input-bound at the guard position, and received names are used as output
objects but not as subjects; characteristic-formula properties are only
sound on that fragment (see the design notes in the README).  The paper's
worked examples outside the fragment are covered by dedicated regressions.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .terms import (
    InputPrefix,
    Match,
    Mismatch,
    Name,
    NIL,
    Nil,
    OutputPrefix,
    Par,
    PChoice,
    ProcTerm,
    Restrict,
    StateProc,
    StateTerm,
    Sum,
    barendregt,
    success_prefix,
)

PROBS = [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)]

BASE_NAMES = (Name("a"), Name("b"), Name("c"))


class TermGen:
    """Grammar-directed generator over a fixed channel alphabet.

    `subjects` accumulates names usable as prefix subjects and guard
    operands; `objects` additionally contains received names.
    """

    def __init__(self, rng: random.Random, names=BASE_NAMES, full: bool = False):
        self.rng = rng
        self.base = tuple(names)
        self.full = full  # if set, received names may be subjects and guards
        self.binder_ctr = 0

    def _binder(self) -> Name:
        self.binder_ctr += 1
        return Name(f"x{self.binder_ctr}")

    def proc(self, size: int, subjects: tuple[Name, ...] = (), objects: tuple[Name, ...] = ()) -> ProcTerm:
        subjects = subjects or self.base
        objects = objects or self.base
        if size >= 4 and self.rng.random() < 0.25:
            p = self.rng.choice(PROBS)
            half = max(1, (size - 1) // 2)
            return PChoice(p, self.proc(half, subjects, objects), self.proc(half, subjects, objects))
        return StateProc(self.state(size, subjects, objects))

    def state(self, size: int, subjects: tuple[Name, ...], objects: tuple[Name, ...]) -> StateTerm:
        rng = self.rng
        if size <= 1:
            return NIL
        choices = ["input", "output"]
        if size >= 4:
            choices += ["sum", "par"]
        if size >= 5:
            choices += ["match", "mismatch", "restrict"]
        kind = rng.choice(choices)
        if kind == "input":
            subj = rng.choice(subjects)
            bind = self._binder()
            new_objects = objects + (bind,)
            new_subjects = subjects + (bind,) if self.full else subjects
            return InputPrefix(subj, bind, self.proc(size - 3, new_subjects, new_objects))
        if kind == "output":
            return OutputPrefix(rng.choice(subjects), rng.choice(objects), self.proc(size - 3, subjects, objects))
        if kind == "sum":
            half = (size - 1) // 2
            return Sum(self.state(half, subjects, objects), self.state(size - 1 - half, subjects, objects))
        if kind == "par":
            half = (size - 1) // 2
            return Par(self.state(half, subjects, objects), self.state(size - 1 - half, subjects, objects))
        if kind in ("match", "mismatch"):
            guardable = subjects if self.full else self.base
            l, r = rng.choice(guardable), rng.choice(guardable)
            body = self.state(size - 3, subjects, objects)
            return Match(l, r, body) if kind == "match" else Mismatch(l, r, body)
        # restrict: bind a fresh channel usable below
        bind = self._binder()
        return Restrict(bind, self.state(size - 2, subjects + (bind,), objects + (bind,)))


def gen_proc(rng: random.Random, size: int = 12, names=BASE_NAMES, full: bool = False) -> ProcTerm:
    return barendregt(TermGen(rng, names, full).proc(size))


def gen_state(rng: random.Random, size: int = 12, names=BASE_NAMES, full: bool = False) -> StateTerm:
    g = TermGen(rng, names, full)
    p = barendregt(StateProc(g.state(size, g.base, g.base)))
    return p.state


def gen_scalar_test(rng: random.Random, size: int = 8, names=BASE_NAMES, omega: str = "w") -> ProcTerm:
    """A random test over the given channels using the single success name."""
    w = Name(omega, success=True)

    def sprinkle(s: StateTerm, budget: int) -> StateTerm:
        # wrap with success-guarded alternatives at random points
        if budget > 0 and rng.random() < 0.5:
            return Sum(s, success_prefix(w))
        return s

    g = TermGen(rng, names)
    base = g.state(size, g.base, g.base)

    def inject_s(s: StateTerm) -> StateTerm:
        match s:
            case Nil():
                return success_prefix(w) if rng.random() < 0.5 else s
            case InputPrefix(subject=a, binder=x, body=b):
                return sprinkle(InputPrefix(a, x, inject_p(b)), 1)
            case OutputPrefix(subject=a, obj=o, body=b):
                return sprinkle(OutputPrefix(a, o, inject_p(b)), 1)
            case Match(left=l, right=r, body=b):
                return Match(l, r, inject_s(b))
            case Mismatch(left=l, right=r, body=b):
                return Mismatch(l, r, inject_s(b))
            case Sum(left=l, right=r):
                return Sum(inject_s(l), inject_s(r))
            case Par(left=l, right=r):
                return Par(inject_s(l), inject_s(r))
            case Restrict(binder=x, body=b):
                return Restrict(x, inject_s(b))
        raise TypeError(s)

    def inject_p(p: ProcTerm) -> ProcTerm:
        match p:
            case StateProc(state=s):
                return StateProc(inject_s(s))
            case PChoice(prob=q, left=l, right=r):
                return PChoice(q, inject_p(l), inject_p(r))
        raise TypeError(p)

    return barendregt(StateProc(inject_s(base)))


def gen_formula(rng: random.Random, size: int = 6, names=BASE_NAMES):
    """A random L/F formula over the given free names."""
    from .logic import DiaBoundOut, DiaFreeOut, DiaInput, PDisj, Ref, Top, conj
    from .terms import Barb

    binder_ctr = [0]

    def binder() -> Name:
        binder_ctr[0] += 1
        return Name(f"z{binder_ctr[0]}")

    def go(budget: int, scope: tuple[Name, ...]):
        if budget <= 1:
            return Top()
        kind = rng.choice(["top", "ref", "in", "out", "bout", "and", "pdisj"])
        if kind == "top":
            return Top()
        if kind == "ref":
            barbs = [Barb(n, co) for n in names for co in (False, True)]
            picked = [bb for bb in barbs if rng.random() < 0.4]
            return Ref(frozenset(picked))
        if kind == "in":
            x = binder()
            return DiaInput(rng.choice(scope), x, go(budget - 2, scope + (x,)))
        if kind == "out":
            return DiaFreeOut(rng.choice(scope), rng.choice(scope), go(budget - 2, scope))
        if kind == "bout":
            x = binder()
            return DiaBoundOut(rng.choice(scope), x, go(budget - 2, scope + (x,)))
        if kind == "and":
            h = (budget - 1) // 2
            return conj([go(h, scope), go(budget - 1 - h, scope)])
        p = rng.choice(PROBS)
        h = (budget - 1) // 2
        return PDisj(((p, go(h, scope)), (1 - p, go(budget - 1 - h, scope))))

    return go(size, tuple(names))
