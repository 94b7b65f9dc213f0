"""Finite-support distributions over canonical state terms.

Weights are exact rationals summing to 1.  Keys are canonicalised on
construction, so alpha-equivalent support elements merge and their weights
add; identity of states is therefore decidable, which every operator in the
semantics relies on.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .terms import (
    Name,
    Par,
    PChoice,
    ProcTerm,
    Restrict,
    StateProc,
    StateTerm,
    canonical_state,
    key_state,
    subst_state,
)


class Distribution:
    """Immutable map from canonical state terms to positive rational weights."""

    __slots__ = ("_items", "_hash")

    def __init__(self, weights: Mapping[StateTerm, Fraction] | Iterable[tuple[StateTerm, Fraction]]):
        acc: dict[StateTerm, Fraction] = {}
        items = weights.items() if isinstance(weights, Mapping) else weights
        for term, w in items:
            w = Fraction(w)
            if w == 0:
                continue
            if w < 0:
                raise ValueError(f"negative weight {w}")
            key = canonical_state(term)
            acc[key] = acc.get(key, Fraction(0)) + w
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
        self._items: tuple[tuple[StateTerm, Fraction], ...] = tuple(
            sorted(acc.items(), key=lambda kv: key_state(kv[0]))
        )
        self._hash = hash(self._items)

    @staticmethod
    def point(s: StateTerm) -> "Distribution":
        return Distribution([(s, Fraction(1))])

    def items(self) -> tuple[tuple[StateTerm, Fraction], ...]:
        return self._items

    def support(self) -> tuple[StateTerm, ...]:
        return tuple(s for s, _ in self._items)

    def weight(self, s: StateTerm) -> Fraction:
        key = canonical_state(s)
        for t, w in self._items:
            if t == key:
                return w
        return Fraction(0)

    @property
    def is_point(self) -> bool:
        return len(self._items) == 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __len__(self) -> int:
        return len(self._items)

    def __repr__(self) -> str:
        from .terms import format_state

        inner = ", ".join(f"{format_state(s)} -> {w}" for s, w in self._items)
        return f"{{{inner}}}"

    def free_names(self) -> frozenset[Name]:
        from .terms import fn_state

        out: frozenset[Name] = frozenset()
        for s, _ in self._items:
            out |= fn_state(s)
        return out

    def to_json(self) -> list[dict]:
        from .terms import format_state

        entries = [
            {"term": format_state(s), "weight": f"{w.numerator}/{w.denominator}"}
            for s, w in self._items
        ]
        return sorted(entries, key=lambda e: e["term"])


def point(s: StateTerm) -> Distribution:
    return Distribution.point(s)


def interp(p: ProcTerm) -> Distribution:
    """Interpretation of a process term as a distribution over states."""
    acc: list[tuple[StateTerm, Fraction]] = []

    def walk(q: ProcTerm, w: Fraction) -> None:
        if w == 0:
            return
        match q:
            case StateProc(state=s):
                acc.append((s, w))
            case PChoice(prob=pr, left=l, right=r):
                walk(l, w * pr)
                walk(r, w * (1 - pr))
            case _:
                raise TypeError(q)

    walk(p, Fraction(1))
    return Distribution(acc)


def mix(parts: Iterable[tuple[Fraction, Distribution]]) -> Distribution:
    """Weighted sum of distributions; weights must sum to 1."""
    parts = list(parts)
    total = sum((Fraction(p) for p, _ in parts), Fraction(0))
    if total != 1:
        raise ValueError(f"mixture weights sum to {total}, not 1")
    acc: list[tuple[StateTerm, Fraction]] = []
    for p, d in parts:
        if p < 0:
            raise ValueError(f"negative mixture weight {p}")
        if p == 0:
            continue
        for s, w in d.items():
            acc.append((s, p * w))
    return Distribution(acc)


def dist_par(d1: Distribution, d2: Distribution) -> Distribution:
    """Product distribution over parallel compositions."""
    return Distribution(
        [(Par(s1, s2), w1 * w2) for s1, w1 in d1.items() for s2, w2 in d2.items()]
    )


def dist_restrict(x: Name, d: Distribution) -> Distribution:
    return Distribution([(Restrict(x, s), w) for s, w in d.items()])


def dist_restrict_many(xs: Iterable[Name], d: Distribution) -> Distribution:
    for x in sorted(set(xs), reverse=True):
        d = dist_restrict(x, d)
    return d


def dist_subst(d: Distribution, sig: Mapping[Name, Name]) -> Distribution:
    """Substitution lifted to distributions; collapsing states add weights."""
    return Distribution([(subst_state(s, sig), w) for s, w in d.items()])
