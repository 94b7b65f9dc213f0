"""Symbolic convex sets of rational vectors.

Vector outcome sets are built compositionally: leaves are single vectors,
`CMix` is a weighted Minkowski sum, `CJoin` a convex hull of a union, and
`CBang` the affine update that pins one component to 1.  Keeping the
structure avoids expanding the (exponential) vertex combinations; queries
compile to small exact LPs or run by direct recursion.

Vectors are sparse: ordered tuples of (index, weight) with zero entries
omitted.  Outcome dimensions run to hundreds of success names, almost all
of them zero in any one resolution, so dense tuples would dominate the
run time.  Nodes with small vertex expansions are flattened eagerly, which
keeps the LP encodings compact on deep systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Union

from .intern import interned
from .lp import feasible

ZERO = Fraction(0)
ONE = Fraction(1)

_FLATTEN_CAP = 24

SVec = tuple[tuple[int, Fraction], ...]  # sorted by index, nonzero weights


def sv_from_dense(vec: Sequence[Fraction]) -> SVec:
    return tuple((i, Fraction(v)) for i, v in enumerate(vec) if v != 0)


def sv_dense(v: SVec, dim: int) -> tuple[Fraction, ...]:
    out = [ZERO] * dim
    for i, x in v:
        out[i] = x
    return tuple(out)


def sv_get(v: SVec, idx: int) -> Fraction:
    for i, x in v:
        if i == idx:
            return x
    return ZERO


def sv_add_scaled(acc: dict, v: SVec, f: Fraction) -> None:
    for i, x in v:
        acc[i] = acc.get(i, ZERO) + f * x


def sv_from_map(acc: dict) -> SVec:
    return tuple(sorted((i, x) for i, x in acc.items() if x != 0))


def sv_set_one(v: SVec, idx: int) -> SVec:
    return tuple(sorted(({i: x for i, x in v} | {idx: ONE}).items()))


@interned
@dataclass(frozen=True)
class CLeaf:
    vec: SVec


@interned
@dataclass(frozen=True)
class CMix:
    parts: tuple[tuple[Fraction, "ConvexExpr"], ...]


@interned
@dataclass(frozen=True)
class CJoin:
    options: tuple["ConvexExpr", ...]


@interned
@dataclass(frozen=True)
class CBang:
    index: int
    child: "ConvexExpr"


ConvexExpr = Union[CLeaf, CMix, CJoin, CBang]

EMPTY_LEAF = CLeaf(())


def leaf(vec: Sequence[Fraction]) -> CLeaf:
    return CLeaf(sv_from_dense(vec))


def cjoin(options: Sequence[ConvexExpr]) -> ConvexExpr:
    flat: list[ConvexExpr] = []
    for o in options:
        if isinstance(o, CJoin):
            flat.extend(o.options)
        else:
            flat.append(o)
    uniq = list(dict.fromkeys(flat))
    if not uniq:
        raise ValueError("empty join")
    if len(uniq) == 1:
        return uniq[0]
    node = CJoin(tuple(uniq))
    vs = vertex_set(node, cap=_FLATTEN_CAP)
    if vs is not None:
        return CJoin(tuple(CLeaf(v) for v in vs)) if len(vs) > 1 else CLeaf(vs[0])
    return node


def cmix(parts: Sequence[tuple[Fraction, ConvexExpr]]) -> ConvexExpr:
    parts = [(Fraction(w), n) for w, n in parts if w != 0]
    total = sum((w for w, _ in parts), ZERO)
    if total != 1:
        raise ValueError(f"mix weights sum to {total}")
    if len(parts) == 1:
        return parts[0][1]
    node = CMix(tuple(parts))
    vs = vertex_set(node, cap=_FLATTEN_CAP)
    if vs is not None:
        return CJoin(tuple(CLeaf(v) for v in vs)) if len(vs) > 1 else CLeaf(vs[0])
    return node


def cbang(index: int, child: ConvexExpr) -> ConvexExpr:
    if isinstance(child, CLeaf):
        return CLeaf(sv_set_one(child.vec, index))
    if isinstance(child, CJoin) and all(isinstance(o, CLeaf) for o in child.options):
        return cjoin([cbang(index, o) for o in child.options])
    return CBang(index, child)


@lru_cache(maxsize=None)
def _vertex_set_cached(node: ConvexExpr, cap: int) -> Optional[tuple[SVec, ...]]:
    match node:
        case CLeaf(vec=v):
            return (v,)
        case CBang(index=i, child=c):
            inner = _vertex_set_cached(c, cap)
            if inner is None:
                return None
            return tuple(dict.fromkeys(sv_set_one(v, i) for v in inner))
        case CJoin(options=opts):
            out: list[SVec] = []
            for o in opts:
                inner = _vertex_set_cached(o, cap)
                if inner is None:
                    return None
                out.extend(inner)
            uniq = tuple(dict.fromkeys(out))
            return uniq if len(uniq) <= cap else None
        case CMix(parts=parts):
            acc: list[dict] = [{}]
            for w, child in parts:
                inner = _vertex_set_cached(child, cap)
                if inner is None:
                    return None
                if len(acc) * len(inner) > 4 * cap * cap:
                    return None
                nxt = []
                seen = set()
                for prefix in acc:
                    for v in inner:
                        m = dict(prefix)
                        sv_add_scaled(m, v, w)
                        key = sv_from_map(m)
                        if key not in seen:
                            seen.add(key)
                            nxt.append(m)
                acc = nxt
                if len(acc) > cap:
                    return None
            return tuple(dict.fromkeys(sv_from_map(m) for m in acc))
    raise TypeError(node)


def vertex_set(node: ConvexExpr, cap: int = 10_000) -> Optional[tuple[SVec, ...]]:
    """Vertex expansion (sparse) with duplicate removal, or None past cap."""
    return _vertex_set_cached(node, cap)


@lru_cache(maxsize=None)
def all_extremes(node: ConvexExpr, want_max: bool) -> tuple[tuple[int, Fraction], ...]:
    """Componentwise max (or min) over the set, sparse (absent = 0)."""
    match node:
        case CLeaf(vec=v):
            return v
        case CBang(index=i, child=c):
            m = dict(all_extremes(c, want_max))
            m[i] = ONE
            return sv_from_map(m)
        case CJoin(options=opts):
            maps = [dict(all_extremes(o, want_max)) for o in opts]
            keys = set()
            for m in maps:
                keys |= set(m)
            agg = max if want_max else min
            out = {k: agg(m.get(k, ZERO) for m in maps) for k in keys}
            return sv_from_map(out)
        case CMix(parts=parts):
            acc: dict[int, Fraction] = {}
            for w, c in parts:
                sv_add_scaled(acc, all_extremes(c, want_max), w)
            return sv_from_map(acc)
    raise TypeError(node)


def comp_extreme(node: ConvexExpr, index: int, want_max: bool) -> Fraction:
    """Exact max (or min) of one component over the convex set."""
    return sv_get(all_extremes(node, want_max), index)


@lru_cache(maxsize=None)
def active_indices(node: ConvexExpr) -> frozenset[int]:
    """Components that can be nonzero somewhere in the set."""
    match node:
        case CLeaf(vec=v):
            return frozenset(i for i, _ in v)
        case CBang(index=i, child=c):
            return active_indices(c) | {i}
        case CJoin(options=opts):
            out: frozenset[int] = frozenset()
            for o in opts:
                out |= active_indices(o)
            return out
        case CMix(parts=parts):
            out = frozenset()
            for _, c in parts:
                out |= active_indices(c)
            return out
    raise TypeError(node)


class _LpBuilder:
    def __init__(self) -> None:
        self.n_vars = 0
        self.a_eq: list[dict[int, Fraction]] = []
        self.b_eq: list[Fraction] = []

    def var(self) -> int:
        self.n_vars += 1
        return self.n_vars - 1

    def add_eq(self, coeffs: dict[int, Fraction], rhs: Fraction) -> None:
        self.a_eq.append({k: v for k, v in coeffs.items() if v != 0})
        self.b_eq.append(rhs)


_Lin = tuple[dict[int, Fraction], Fraction]  # sparse linear expression, const


def _lin_add(a: _Lin, b: _Lin) -> _Lin:
    co = dict(a[0])
    for k, v in b[0].items():
        co[k] = co.get(k, ZERO) + v
    return (co, a[1] + b[1])


def _lin_scale(a: _Lin, f: Fraction) -> _Lin:
    if f == 0:
        return ({}, ZERO)
    return ({k: v * f for k, v in a[0].items()}, a[1] * f)


def _emit(node: ConvexExpr, mass: _Lin, b: _LpBuilder) -> dict[int, _Lin]:
    """Component -> linear expression for a scaled point of the node's set.

    Components absent from the result are identically zero at this node.
    """
    match node:
        case CLeaf(vec=v):
            return {i: _lin_scale(mass, x) for i, x in v}
        case CBang(index=i, child=c):
            vec = _emit(c, mass, b)
            vec[i] = mass
            return vec
        case CJoin(options=opts):
            masses: list[_Lin] = []
            coeffs: dict[int, Fraction] = {}
            for _ in opts:
                x = b.var()
                masses.append(({x: ONE}, ZERO))
                coeffs[x] = ONE
            for k, v in mass[0].items():
                coeffs[k] = coeffs.get(k, ZERO) - v
            b.add_eq(coeffs, mass[1])
            vec: dict[int, _Lin] = {}
            for m, o in zip(masses, opts):
                for i, e in _emit(o, m, b).items():
                    vec[i] = _lin_add(vec[i], e) if i in vec else e
            return vec
        case CMix(parts=parts):
            vec = {}
            for w, c in parts:
                for i, e in _emit(c, mass, b).items():
                    scaled = _lin_scale(e, w)
                    vec[i] = _lin_add(vec[i], scaled) if i in vec else scaled
            return vec
    raise TypeError(node)


def feasible_point(
    node: ConvexExpr, target: Sequence[Fraction], rel: str
) -> Optional[tuple[Fraction, ...]]:
    """A point o of the set with o rel target componentwise, or None.

    rel is 'le', 'ge' or 'eq'.  The witness is evaluated and checked
    exactly before being returned (dense, aligned with target).
    """
    d = len(target)
    target = [Fraction(t) for t in target]
    active = active_indices(node)
    # inactive components are identically zero; settle them directly
    for k in range(d):
        if k in active:
            continue
        if rel in ("ge", "eq") and target[k] > 0:
            return None
        if rel == "le" and target[k] < 0:
            return None
    # cheap necessary conditions from independent component bounds
    if rel in ("le", "eq"):
        for k, lo in all_extremes(node, False):
            if lo > target[k]:
                return None
    if rel in ("ge", "eq"):
        his = dict(all_extremes(node, True))
        for k in active:
            if his.get(k, ZERO) < target[k]:
                return None
    b = _LpBuilder()
    vec = _emit(node, ({}, ONE), b)
    a_ub: list[dict[int, Fraction]] = []
    b_ub: list[Fraction] = []
    for k, (co, const) in vec.items():
        if rel in ("le", "eq"):
            a_ub.append(co)
            b_ub.append(target[k] - const)
        if rel in ("ge", "eq"):
            a_ub.append({j: -v for j, v in co.items()})
            b_ub.append(const - target[k])

    sol = feasible(b.n_vars, a_eq=b.a_eq, b_eq=b.b_eq, a_ub=a_ub, b_ub=b_ub)
    if sol is None:
        return None

    def ev(lin: _Lin) -> Fraction:
        co, const = lin
        return sum((v * sol[j] for j, v in co.items()), const)

    o = tuple(ev(vec[k]) if k in vec else ZERO for k in range(d))
    for k in range(d):
        if rel == "le":
            assert o[k] <= target[k]
        elif rel == "ge":
            assert o[k] >= target[k]
        else:
            assert o[k] == target[k]
    return o
