"""Deciding the may/must testing preorders.

The authoritative route is logical: the characteristic formula of one side
is checked against the other via its characteristic test and an exact LP
(the preorders coincide with the modal preorders induced by L and F).  The
simulation game is a sound cross-validator: it answers true only with a
replayable witness and unknown otherwise, since its lifted-relation search
is restricted to vertex witnesses, whole-block decompositions and the
proportional split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from .dist import Distribution, dist_subst, interp
from .logic import (
    Formula,
    Sat3,
    char_formula,
    format_formula,
    sat_via_test_details,
)
from .semantics import (
    barbs,
    dist_refuses,
    has_tau,
    key_dist,
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
    ProcTerm,
    StateTerm,
    Success,
    Tau,
    canonical_state,
    fn_proc,
    fn_state,
    format_action,
    format_proc,
    format_state,
    fresh,
    key_name,
)

ZERO = Fraction(0)


@dataclass(frozen=True)
class Verdict:
    relation: str  # "may" or "must"
    holds: bool
    method: str
    witness: dict

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "holds": self.holds,
            "method": self.method,
            "witness": self.witness,
        }


def _check_pure(p: ProcTerm, what: str) -> None:
    if any(n.success for n in fn_proc(p)):
        raise ValueError(f"{what} must not mention success names")


def _decision_names(p: ProcTerm, q: ProcTerm) -> frozenset[Name]:
    base = fn_proc(p) | fn_proc(q)
    return frozenset(base | {fresh(base)})


def decide_may(p: ProcTerm, q: ProcTerm) -> Verdict:
    """P below Q in may testing, via the L-characteristic formula of P."""
    _check_pure(p, "process")
    _check_pure(q, "process")
    names = _decision_names(p, q)
    psi = char_formula(interp(p), names, "L")
    holds, ct, lp_witness = sat_via_test_details(interp(q), psi, names)
    frac = lambda v: f"{v.numerator}/{v.denominator}"
    witness = {
        "formula": format_formula(psi),
        "test": format_proc(ct.test),
        "omega_order": [w.ident for w in ct.omega_order],
        "target": [frac(x) for x in ct.target],
        "lp_witness": [frac(x) for x in lp_witness] if lp_witness is not None else None,
    }
    return Verdict("may", holds, "logic", witness)


def decide_must(p: ProcTerm, q: ProcTerm) -> Verdict:
    """P below Q in must testing, via the F-characteristic formula of Q.

    The orientation is reversed: P must satisfy everything Q's formula
    promises.
    """
    _check_pure(p, "process")
    _check_pure(q, "process")
    names = _decision_names(p, q)
    phi = char_formula(interp(q), names, "F")
    holds, ct, lp_witness = sat_via_test_details(interp(p), phi, names)
    frac = lambda v: f"{v.numerator}/{v.denominator}"
    witness = {
        "formula": format_formula(phi),
        "test": format_proc(ct.test),
        "omega_order": [w.ident for w in ct.omega_order],
        "target": [frac(x) for x in ct.target],
        "lp_witness": [frac(x) for x in lp_witness] if lp_witness is not None else None,
    }
    return Verdict("must", holds, "logic", witness)


# ---------------------------------------------------------------------------
# Simulation game (sound; true or unknown)


class _Game:
    def __init__(self, mode: str):
        assert mode in ("S", "FS")
        self.mode = mode
        self.memo: dict = {}

    # -- state vs distribution -----------------------------------------
    def check_state(self, s: StateTerm, theta: Distribution) -> Optional[dict]:
        s = canonical_state(s)
        key = (s, theta)
        if key in self.memo:
            return self.memo[key]
        self.memo[key] = None  # descends term size; defensive cycle guard
        witness = self._state_witness(s, theta)
        self.memo[key] = witness
        return witness

    def _state_witness(self, s: StateTerm, theta: Distribution) -> Optional[dict]:
        moves = []
        for t in step(s):
            label = t.label
            if isinstance(label, BoundInput):
                mv = self._input_move(s, theta, t)
            elif isinstance(label, BoundOutput):
                w = fresh(fn_state(s) | theta.free_names())
                delta = dist_subst(t.target, {label.binder: w})
                mv = self._plain_move(theta, BoundOutput(label.subject, w), delta)
            else:
                mv = self._plain_move(theta, label, t.target)
            if mv is None:
                return None
            moves.append(mv)
        refusal = None
        if self.mode == "FS" and not has_tau(s):
            alpha = fn_state(s) | theta.free_names()
            offered = barbs(s)
            xmax = frozenset(
                Barb(n, co) for n in alpha for co in (False, True) if Barb(n, co) not in offered
            )
            landed = next(
                (tp for tp in weak_tau_vertices(theta) if dist_refuses(tp, xmax)), None
            )
            if landed is None:
                return None
            refusal = {"refused": sorted(str(b) for b in xmax), "theta_prime": landed}
        return {"state": s, "theta": theta, "moves": moves, "refusal": refusal}

    def _plain_move(self, theta: Distribution, label, delta: Distribution) -> Optional[dict]:
        ds = weak_alpha(theta, label)
        if ds is None:
            return None
        for tp in ds:
            lw = self.check_lifted(delta, tp)
            if lw is not None:
                return {"label": format_action(label), "theta_prime": tp, "lifted": lw}
        return None

    def _input_move(self, s: StateTerm, theta: Distribution, t) -> Optional[dict]:
        label: BoundInput = t.label
        base = fn_state(s) | theta.free_names()
        ws = sorted(base, key=key_name) + [fresh(base)]
        instances = []
        for wname in ws:
            xb = fresh(base | {wname})
            delta_w = dist_subst(t.target, {label.binder: wname})
            found = None
            for th1 in weak_tau_vertices(theta):
                for th2 in lifted_step(th1, BoundInput(label.subject, xb)):
                    landed = dist_subst(th2, {xb: wname})
                    for tp in weak_tau_vertices(landed):
                        lw = self.check_lifted(delta_w, tp)
                        if lw is not None:
                            found = {
                                "w": wname.ident,
                                "theta1": th1,
                                "theta2": th2,
                                "theta_prime": tp,
                                "lifted": lw,
                            }
                            break
                    if found:
                        break
                if found:
                    break
            if found is None:
                return None
            instances.append(found)
        return {"label": format_action(label), "instances": instances}

    # -- lifted relation -------------------------------------------------
    def check_lifted(self, delta: Distribution, theta: Distribution) -> Optional[dict]:
        key = (delta, theta)
        memo_key = ("lifted", key)
        if memo_key in self.memo:
            return self.memo[memo_key]
        self.memo[memo_key] = None
        out = self._lifted_witness(delta, theta)
        self.memo[memo_key] = out
        return out

    def _lifted_witness(self, delta: Distribution, theta: Distribution) -> Optional[dict]:
        # proportional split: every support state simulated by theta itself
        parts = []
        for u, q in delta.items():
            w = self.check_state(u, theta)
            if w is None:
                parts = None
                break
            parts.append({"state": u, "weight": q, "theta_part": theta, "witness": w})
        if parts is not None:
            return {"split": "proportional", "parts": parts}
        if delta.is_point:
            return None
        # whole-state block decompositions of theta across delta's support
        support_d = delta.items()
        support_t = theta.items()
        targets = [q for _, q in support_d]

        result: Optional[list] = None

        def assign(i: int, masses: list[Fraction], buckets: list[list]) -> bool:
            nonlocal result
            if i == len(support_t):
                if any(m != t for m, t in zip(masses, targets)):
                    return False
                acc = []
                for bucket, (u, q) in zip(buckets, support_d):
                    sub = Distribution([(st, wt / q) for st, wt in bucket])
                    w = self.check_state(u, sub)
                    if w is None:
                        return False
                    acc.append({"state": u, "weight": q, "theta_part": sub, "witness": w})
                result = acc
                return True
            st, wt = support_t[i]
            for j in range(len(support_d)):
                if masses[j] + wt <= targets[j]:
                    masses[j] += wt
                    buckets[j].append((st, wt))
                    if assign(i + 1, masses, buckets):
                        return True
                    masses[j] -= wt
                    buckets[j].pop()
            return False

        if assign(0, [ZERO] * len(support_d), [[] for _ in support_d]):
            return {"split": "blocks", "parts": result}
        return None


def simulate_game(s: StateTerm, theta: Distribution, mode: str = "S") -> tuple[Sat3, Optional[dict]]:
    """Sound search for `s` simulated by `theta`; true or unknown."""
    game = _Game(mode)
    w = game.check_state(s, theta)
    return (Sat3.TRUE, w) if w is not None else (Sat3.UNKNOWN, None)


def game_may(p: ProcTerm, q: ProcTerm) -> tuple[Sat3, Optional[dict]]:
    """P below Q in the simulation preorder, by vertex search; true/unknown."""
    game = _Game("S")
    dp = interp(p)
    for theta in weak_tau_vertices(interp(q)):
        w = game.check_lifted(dp, theta)
        if w is not None:
            return Sat3.TRUE, {"theta": theta, "lifted": w}
    return Sat3.UNKNOWN, None


def game_must(p: ProcTerm, q: ProcTerm) -> tuple[Sat3, Optional[dict]]:
    """P below Q in the failure-simulation preorder (note the orientation)."""
    game = _Game("FS")
    dq = interp(q)
    for theta in weak_tau_vertices(interp(p)):
        w = game.check_lifted(dq, theta)
        if w is not None:
            return Sat3.TRUE, {"theta": theta, "lifted": w}
    return Sat3.UNKNOWN, None


# ---------------------------------------------------------------------------
# Corpus falsification


@dataclass(frozen=True)
class CorpusReport:
    mode: str
    total: int
    violations: tuple[dict, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "tests": self.total,
            "violations": list(self.violations),
            "ok": self.ok,
        }


def corpus_check(
    p: ProcTerm, q: ProcTerm, tests: Iterable[ProcTerm], mode: str = "may"
) -> CorpusReport:
    """Compare Apply outcomes over a finite test corpus.

    Falsifies preorders (any violation settles the question negatively);
    never proves them.
    """
    from .testing import apply_scalar

    assert mode in ("may", "must")
    violations = []
    total = 0
    frac = lambda v: f"{v.numerator}/{v.denominator}"
    for t in tests:
        total += 1
        op, oq = apply_scalar(t, p), apply_scalar(t, q)
        if mode == "may":
            ok, vp, vq = op.max <= oq.max, op.max, oq.max
        else:
            ok, vp, vq = op.min <= oq.min, op.min, oq.min
        if not ok:
            violations.append({"test": format_proc(t), "left": frac(vp), "right": frac(vq)})
    return CorpusReport(mode, total, tuple(violations))
