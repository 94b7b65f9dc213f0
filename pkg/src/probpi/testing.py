"""Results gathering and test application.

Scalar outcomes follow the state-based reading: a state with a success
transition scores 1 outright.  Vector outcomes are action-based: success
actions must actually fire, and each state contributes the convex closure
of its per-resolution outcome tuples.  The two disciplines induce the same
preorders here (no divergence); for outcome-level comparisons the
`omega_respecting` flag prunes non-success moves from success-enabled
states, which is the discipline under which scalar and vector extremes
agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

from . import convex
from .convex import EMPTY_LEAF, ConvexExpr, cbang, cjoin, cmix, leaf, sv_dense
from .dist import Distribution, dist_par, dist_restrict_many, interp, point
from .semantics import step
from .terms import (
    Name,
    ProcTerm,
    StateTerm,
    Success,
    Tau,
    canonical_state,
    fn_proc,
)

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Scalar outcomes (single success name, state-based)


@lru_cache(maxsize=None)
def _scalar_extreme(s: StateTerm, want_max: bool) -> Fraction:
    trs = step(s)
    if any(isinstance(t.label, Success) for t in trs):
        return ONE
    taus = [t.target for t in trs if isinstance(t.label, Tau)]
    if not taus:
        return ZERO
    vals = [
        sum((w * _scalar_extreme(t, want_max) for t, w in d.items()), ZERO) for d in taus
    ]
    return max(vals) if want_max else min(vals)


@lru_cache(maxsize=None)
def _scalar_values(s: StateTerm) -> frozenset[Fraction]:
    trs = step(s)
    if any(isinstance(t.label, Success) for t in trs):
        return frozenset({ONE})
    taus = [t.target for t in trs if isinstance(t.label, Tau)]
    if not taus:
        return frozenset({ZERO})
    out: set[Fraction] = set()
    for d in taus:
        combos: set[Fraction] = {ZERO}
        for t, w in d.items():
            combos = {acc + w * v for acc in combos for v in _scalar_values(t)}
        out |= combos
    return frozenset(out)


@dataclass(frozen=True)
class ScalarOutcomes:
    """The set V(dist): all weighted combinations of per-state results."""

    dist: Distribution

    @property
    def max(self) -> Fraction:
        return sum((w * _scalar_extreme(s, True) for s, w in self.dist.items()), ZERO)

    @property
    def min(self) -> Fraction:
        return sum((w * _scalar_extreme(s, False) for s, w in self.dist.items()), ZERO)

    @property
    def values(self) -> frozenset[Fraction]:
        combos: set[Fraction] = {ZERO}
        for s, w in self.dist.items():
            combos = {acc + w * v for acc in combos for v in _scalar_values(s)}
        return frozenset(combos)

    def to_json(self) -> dict:
        vals = sorted(self.values)
        frac = lambda q: f"{q.numerator}/{q.denominator}"
        return {"outcomes": [frac(v) for v in vals], "max": frac(self.max), "min": frac(self.min)}


def gather_scalar(s: StateTerm) -> ScalarOutcomes:
    return ScalarOutcomes(point(s))


def gather_scalar_dist(d: Distribution) -> ScalarOutcomes:
    return ScalarOutcomes(d)


def _compose(test: ProcTerm, proc: Union[ProcTerm, Distribution]) -> Distribution:
    td = interp(test)
    pd = proc if isinstance(proc, Distribution) else interp(proc)
    names = fn_proc(test) | pd.free_names()
    hidden = sorted(n for n in names if not n.success)
    return dist_restrict_many(hidden, dist_par(td, pd))


def apply_scalar(test: ProcTerm, proc: Union[ProcTerm, Distribution]) -> ScalarOutcomes:
    """Apply(T, P): V over the interpretation of new x..(T | P)."""
    return ScalarOutcomes(_compose(test, proc))


def hoare_leq(o1: ScalarOutcomes, o2: ScalarOutcomes) -> bool:
    return o1.max <= o2.max


def smyth_leq(o1: ScalarOutcomes, o2: ScalarOutcomes) -> bool:
    return o1.min <= o2.min


# ---------------------------------------------------------------------------
# Vector outcomes (finite ordered Omega, action-based)


OutcomeVector = tuple[Fraction, ...]


@dataclass(frozen=True)
class VectorOutcomes:
    """Convex set of outcome vectors indexed by an ordered Omega."""

    omega_order: tuple[Name, ...]
    expr: ConvexExpr

    def vertices(self, cap: int = 50_000) -> tuple[OutcomeVector, ...]:
        vs = convex.vertex_set(self.expr, cap=cap)
        if vs is None:
            raise ValueError("vertex expansion exceeds cap; use the LP queries")
        d = len(self.omega_order)
        return tuple(sorted(sv_dense(v, d) for v in vs))

    def _align(self, v) -> tuple[Fraction, ...]:
        if isinstance(v, dict):
            return tuple(Fraction(v.get(w, 0)) for w in self.omega_order)
        v = tuple(Fraction(x) for x in v)
        assert len(v) == len(self.omega_order)
        return v

    def feasible(self, v, rel: str) -> Optional[OutcomeVector]:
        return convex.feasible_point(self.expr, self._align(v), rel)

    def feasible_leq(self, v):
        return self.feasible(v, "le")

    def feasible_geq(self, v):
        return self.feasible(v, "ge")

    def feasible_eq(self, v):
        return self.feasible(v, "eq")

    def max_comp(self, w: Name) -> Fraction:
        return convex.comp_extreme(self.expr, self.omega_order.index(w), True)

    def min_comp(self, w: Name) -> Fraction:
        return convex.comp_extreme(self.expr, self.omega_order.index(w), False)

    def to_json(self) -> dict:
        frac = lambda q: f"{q.numerator}/{q.denominator}"
        return {
            "omega_order": [w.ident for w in self.omega_order],
            "vertices": [[frac(x) for x in v] for v in self.vertices()],
        }


def _vector_node(
    s: StateTerm,
    omega_index: dict[Name, int],
    memo: dict[StateTerm, ConvexExpr],
    omega_respecting: bool,
) -> ConvexExpr:
    cs = canonical_state(s)
    got = memo.get(cs)
    if got is not None:
        return got
    trs = step(cs)
    if omega_respecting and any(isinstance(t.label, Success) for t in trs):
        trs = tuple(t for t in trs if isinstance(t.label, Success))
    if not trs:
        node: ConvexExpr = EMPTY_LEAF
    else:
        options = []
        for t in trs:
            child = cmix(
                [
                    (w, _vector_node(u, omega_index, memo, omega_respecting))
                    for u, w in t.target.items()
                ]
            )
            if isinstance(t.label, Success) and t.label.w in omega_index:
                child = cbang(omega_index[t.label.w], child)
            options.append(child)
        node = cjoin(options)
    memo[cs] = node
    return node


def gather_vector(
    s: StateTerm, omega_order: Sequence[Name], omega_respecting: bool = False
) -> VectorOutcomes:
    """V^Omega(s) as a convex set of outcome tuples."""
    order = tuple(omega_order)
    idx = {w: i for i, w in enumerate(order)}
    node = _vector_node(s, idx, {}, omega_respecting)
    return VectorOutcomes(order, node)


def gather_vector_dist(
    d: Distribution, omega_order: Sequence[Name], omega_respecting: bool = False
) -> VectorOutcomes:
    order = tuple(omega_order)
    idx = {w: i for i, w in enumerate(order)}
    memo: dict[StateTerm, ConvexExpr] = {}
    node = cmix(
        [(w, _vector_node(s, idx, memo, omega_respecting)) for s, w in d.items()]
    )
    return VectorOutcomes(order, node)


def apply_vector(
    test: ProcTerm,
    proc: Union[ProcTerm, Distribution],
    omega_order: Sequence[Name],
    omega_respecting: bool = False,
) -> VectorOutcomes:
    """Apply^Omega(T, P): V^Omega over new x..(T | P), x.. = fn - Omega."""
    order = tuple(omega_order)
    bad = [w for w in fn_proc(test) if w.success and w not in order]
    if bad:
        raise ValueError(f"test success names outside Omega: {bad}")
    return gather_vector_dist(_compose(test, proc), order, omega_respecting)


def convex_exists_leq(o: VectorOutcomes, v, direction: str = "le") -> bool:
    """Is some point of conv(o) componentwise <= v (or >= for 'ge')?"""
    assert direction in ("le", "ge")
    return o.feasible(v, direction) is not None


def vector_hoare(o1: VectorOutcomes, o2: VectorOutcomes) -> bool:
    """Every point of conv(o1) is dominated by some point of conv(o2)."""
    assert o1.omega_order == o2.omega_order
    return all(o2.feasible_geq(v) is not None for v in o1.vertices())


def vector_smyth(o1: VectorOutcomes, o2: VectorOutcomes) -> bool:
    """Every point of conv(o2) dominates some point of conv(o1)."""
    assert o1.omega_order == o2.omega_order
    return all(o1.feasible_leq(v) is not None for v in o2.vertices())
