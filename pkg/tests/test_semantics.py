import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from probpi.dist import dist_subst, interp, mix, point
from probpi.parser import parse, parse_state
from probpi.semantics import (
    DerivativeSet,
    barbs,
    check_hat_tau_step,
    lifted_step,
    refuses,
    replay_weak_chain,
    step,
    weak_alpha,
    weak_tau_chains,
    weak_tau_vertices,
)
from probpi.terms import (
    Barb,
    BoundInput,
    BoundOutput,
    FreeOutput,
    Name,
    NIL,
    Success,
    Tau,
    alpha_eq,
    bn_action,
    fn_state,
    key_name,
    size_state,
    subst_action,
    subst_state,
)

from gen_strategies import states

F = Fraction
a, b, c = Name("a"), Name("b"), Name("c")


def labels(s):
    return {type(t.label).__name__ for t in step(s)}


class TestStep:
    def test_act_input(self):
        (t,) = step(parse_state("a(x).0"))
        assert isinstance(t.label, BoundInput) and t.label.subject == a
        assert t.target == point(NIL)

    def test_match_guards(self):
        assert step(parse_state("[a!=a]b!a.0")) == ()
        (t,) = step(parse_state("[a=a]b!a.0"))
        assert t.label == FreeOutput(b, a)

    def test_mismatch_guards(self):
        (t,) = step(parse_state("[a!=b]b!a.0"))
        assert t.label == FreeOutput(b, a)
        assert step(parse_state("[a=b]b!a.0")) == ()

    def test_com_substitutes_object(self):
        # a(x).x!b.0 | a!c.0  --tau-->  c!b.0 | 0
        trs = [t for t in step(parse_state("a(x).x!b.0 | a!c.0")) if isinstance(t.label, Tau)]
        assert len(trs) == 1
        assert trs[0].target == point(parse_state("c!b.0 | 0"))

    def test_open_extrudes(self):
        (t,) = step(parse_state("new z.x!z.0"))
        assert isinstance(t.label, BoundOutput) and t.label.subject == Name("x")
        assert t.target == point(NIL)

    def test_restricted_subject_blocked(self):
        assert step(parse_state("new x.x!a.0")) == ()
        assert step(parse_state("new x.x(y).0")) == ()

    def test_close_scopes_fresh_name(self):
        trs = [t for t in step(parse_state("a(x).x!x.0 | new z.a!z.0")) if isinstance(t.label, Tau)]
        assert len(trs) == 1
        tgt = trs[0].target
        assert tgt.is_point
        assert alpha_eq(tgt.support()[0], parse_state("new v.(v!v.0 | 0)"))

    def test_success_prefix_label(self):
        (t,) = step(parse_state("w1.0"))
        assert isinstance(t.label, Success)

    def test_probabilistic_target(self):
        (t,) = step(parse_state("a(x).(b!b.0 (+1/3) 0)"))
        assert t.target.weight(parse_state("b!b.0")) == F(1, 3)
        assert t.target.weight(NIL) == F(2, 3)


@settings(max_examples=120, deadline=None)
@given(states())
def test_lemma_rename_injective(s):
    names = sorted(fn_state(s), key=key_name)
    perm = dict(zip(names, reversed(names)))  # an involution, injective
    s2 = subst_state(s, perm)
    left = {(subst_action(t.label, perm), dist_subst(t.target, perm)) for t in step(s)}
    right = {(t.label, t.target) for t in step(s2)}

    def canon(pairs):
        out = set()
        for lab, d in pairs:
            bn = bn_action(lab)
            if bn:
                (old,) = bn
                fresh_b = Name("zz")
                lab = subst_action(lab, {old: fresh_b})
                d = dist_subst(d, {old: fresh_b})
            out.add((lab, d))
        return out

    assert canon(left) == canon(right)


@settings(max_examples=120, deadline=None)
@given(states())
def test_trans_size_strictly_decreasing(s):
    for t in step(s):
        for u in t.target.support():
            assert size_state(u) < size_state(s)


@settings(max_examples=120, deadline=None)
@given(states())
def test_label_binders_fresh(s):
    for t in step(s):
        for x in bn_action(t.label):
            assert x not in fn_state(s)


class TestLiftedStep:
    def test_shared_output_label(self):
        s = parse_state("a!b.c!c.0")
        t = parse_state("a!b.0")
        d = mix([(F(1, 2), point(s)), (F(1, 2), point(t))])
        (out,) = lifted_step(d, FreeOutput(a, b))
        assert out == mix([(F(1, 2), point(parse_state("c!c.0"))), (F(1, 2), point(NIL))])

    def test_mismatched_subjects_blocked(self):
        d = mix(
            [
                (F(1, 2), point(parse_state("a!b.0"))),
                (F(1, 2), point(parse_state("b!b.0"))),
            ]
        )
        assert lifted_step(d, FreeOutput(a, b)) == frozenset()

    def test_point_vertices_are_per_transition_choices(self):
        s = parse_state("a(x).0 + a(x).b!b.0")
        x9 = Name("x9")
        outs = lifted_step(point(s), BoundInput(a, x9))
        want = {point(NIL), point(parse_state("b!b.0"))}
        assert outs == want


class TestWeakTau:
    def test_no_tau_reflexive(self):
        d = point(NIL)
        assert weak_tau_vertices(d).vertices == {d}

    def test_single_tau(self):
        d = interp(parse("tau.0"))
        vs = weak_tau_vertices(d)
        assert d in vs and point(parse_state("new x.(0 | 0)")) in vs
        assert len(vs) == 2

    def test_tau_then_output(self):
        d = interp(parse("tau.c!c.0"))
        vs = weak_tau_vertices(d)
        assert len(vs) == 2
        assert d in vs
        assert point(parse_state("new x.(0 | c!c.0)")) in vs

    @settings(max_examples=60, deadline=None)
    @given(states())
    def test_reflexivity(self, s):
        d = point(s)
        assert d in weak_tau_vertices(d)

    @settings(max_examples=40, deadline=None)
    @given(states())
    def test_chains_replay(self, s):
        chains = weak_tau_chains(point(s))
        verts = weak_tau_vertices(point(s)).vertices
        assert set(chains) == verts
        for v, chain in chains.items():
            assert chain[0] == point(s) and chain[-1] == v
            assert replay_weak_chain(chain)


class TestWeakAlpha:
    def test_immediate_output(self):
        d = point(parse_state("a!b.0"))
        vs = weak_alpha(d, FreeOutput(a, b))
        assert vs.vertices == {point(NIL)}

    def test_after_tau(self):
        d = interp(parse("tau.a!b.0"))
        vs = weak_alpha(d, FreeOutput(a, b))
        assert vs is not None
        assert point(parse_state("new x.(0 | 0)")) in vs

    def test_none_when_absent(self):
        assert weak_alpha(point(NIL), FreeOutput(a, b)) is None

    def test_rejects_inputs(self):
        with pytest.raises(ValueError):
            weak_alpha(point(NIL), BoundInput(a, b))


class TestRefuses:
    def test_nil_refuses_everything(self):
        assert refuses(NIL, {Barb(a, False), Barb(a, True)})

    def test_input_offers_name_barb(self):
        s = parse_state("a(x).0")
        assert refuses(s, {Barb(a, True)})
        assert not refuses(s, {Barb(a, False)})

    def test_tau_never_refuses(self):
        assert not refuses(parse_state("tau.0"), set())


def test_hat_tau_step_checker():
    d = interp(parse("tau.0"))
    nxt = point(parse_state("new x.(0 | 0)"))
    assert check_hat_tau_step(d, d)  # stay
    assert check_hat_tau_step(d, nxt)  # fire
    half = mix([(F(1, 2), d), (F(1, 2), nxt)])
    assert check_hat_tau_step(d, half)  # interior split allowed
    assert not check_hat_tau_step(nxt, d)  # no way back
