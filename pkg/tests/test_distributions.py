from fractions import Fraction

import pytest
from hypothesis import given, settings

from probpi.dist import Distribution, dist_par, dist_restrict, dist_subst, interp, mix, point
from probpi.parser import parse, parse_state
from probpi.terms import (
    Name,
    NIL,
    OutputPrefix,
    NIL_PROC,
    Par,
    PChoice,
    StateProc,
    alpha_eq,
    fn_proc,
    subst_proc,
)

from gen_strategies import procs

F = Fraction
a, b, x, y = Name("a"), Name("b"), Name("x"), Name("y")


def brute_leaves(p, w=F(1)):
    """Independent oracle for interp: expand the choice tree, no merging."""
    if isinstance(p, PChoice):
        out = brute_leaves(p.left, w * p.prob)
        if p.prob != 1:
            out += brute_leaves(p.right, w * (1 - p.prob))
        return out
    return [(p.state, w)]


class TestInterp:
    def test_identical_branches_merge(self):
        d = interp(parse("0 (+1/2) 0"))
        assert d == point(NIL)

    def test_weights(self):
        d = interp(parse("a!a.0 (+1/3) 0"))
        assert d.weight(NIL) == F(2, 3)
        assert d.weight(parse_state("a!a.0")) == F(1, 3)

    def test_nested_arithmetic(self):
        s, t = "a!a.0", "b!b.0"
        d = interp(parse(f"({s} (+1/2) {t}) (+1/2) {t}"))
        assert d.weight(parse_state(s)) == F(1, 4)
        assert d.weight(parse_state(t)) == F(3, 4)

    @settings(max_examples=120, deadline=None)
    @given(procs())
    def test_matches_brute_force_expansion(self, p):
        d = interp(p)
        acc = {}
        for s, w in brute_leaves(p):
            for t in acc:
                if alpha_eq(s, t):
                    acc[t] += w
                    break
            else:
                acc[s] = w
        assert len(acc) == len(d.items())
        for s, w in acc.items():
            assert d.weight(s) == w

    @settings(max_examples=80, deadline=None)
    @given(procs())
    def test_total_weight_one(self, p):
        assert sum(w for _, w in interp(p).items()) == 1


class TestMix:
    def test_identity(self):
        d = interp(parse("a!b.0 (+1/2) 0"))
        assert mix([(F(1), d)]) == d

    def test_two_points(self):
        s, t = parse_state("a!a.0"), parse_state("b!b.0")
        d = mix([(F(1, 2), point(s)), (F(1, 2), point(t))])
        assert d.weight(s) == F(1, 2) and d.weight(t) == F(1, 2)

    def test_merging(self):
        s = parse_state("a!a.0")
        assert mix([(F(1, 2), point(s)), (F(1, 2), point(s))]) == point(s)

    def test_bad_weights_rejected(self):
        with pytest.raises(ValueError):
            mix([(F(1, 2), point(NIL))])


class TestDistPar:
    def test_points(self):
        s, t = parse_state("a!a.0"), parse_state("b!b.0")
        assert dist_par(point(s), point(t)) == point(Par(s, t))

    def test_left_mixture(self):
        s, sp, t = parse_state("a!a.0"), parse_state("a!b.0"), parse_state("b!b.0")
        d = dist_par(mix([(F(1, 2), point(s)), (F(1, 2), point(sp))]), point(t))
        assert d.weight(Par(s, t)) == F(1, 2)
        assert d.weight(Par(sp, t)) == F(1, 2)

    def test_weights_multiply(self):
        s, sp = parse_state("a!a.0"), parse_state("a!b.0")
        t, tp = parse_state("b!b.0"), parse_state("b!a.0")
        d = dist_par(
            mix([(F(1, 2), point(s)), (F(1, 2), point(sp))]),
            mix([(F(1, 3), point(t)), (F(2, 3), point(tp))]),
        )
        assert d.weight(Par(s, t)) == F(1, 6)


class TestDistRestrict:
    def test_point(self):
        from probpi.terms import Restrict

        assert dist_restrict(x, point(NIL)) == point(Restrict(x, NIL))

    def test_mixture(self):
        s, t = parse_state("a!a.0"), parse_state("b!b.0")
        d = dist_restrict(x, mix([(F(1, 4), point(s)), (F(3, 4), point(t))]))
        from probpi.terms import Restrict

        assert d.weight(Restrict(x, s)) == F(1, 4)

    def test_alpha_merging(self):
        sx = parse_state("new x.x!a.0")
        sy = parse_state("new y.y!a.0")
        d = mix([(F(1, 2), point(sx)), (F(1, 2), point(sy))])
        assert d.is_point  # alpha-equivalent keys merged on construction


class TestDistSubst:
    def test_point_rename(self):
        d = point(OutputPrefix(x, a, NIL_PROC))
        assert dist_subst(d, {x: y}) == point(OutputPrefix(y, a, NIL_PROC))

    def test_collapse_adds_weights(self):
        sx = OutputPrefix(x, a, NIL_PROC)
        sy = OutputPrefix(y, a, NIL_PROC)
        d = mix([(F(1, 2), point(sx)), (F(1, 2), point(sy))])
        assert dist_subst(d, {x: y}) == point(sy)

    @settings(max_examples=100, deadline=None)
    @given(procs())
    def test_commutes_with_interp(self, p):
        names = sorted(fn_proc(p))
        if not names:
            return
        sig = {names[0]: Name("b")}
        assert dist_subst(interp(p), sig) == interp(subst_proc(p, sig))

    @settings(max_examples=60, deadline=None)
    @given(procs())
    def test_total_weight_preserved_under_merging_map(self, p):
        sig = {n: Name("a") for n in fn_proc(p)}
        d = dist_subst(interp(p), sig)
        assert sum(w for _, w in d.items()) == 1
