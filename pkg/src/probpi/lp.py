"""Exact-rational linear feasibility via two-phase simplex.

Constraint systems here come from convex-combination encodings: very
sparse, moderately sized.  Rows are kept as {column: Fraction} dicts and
pivots touch only nonzero entries.  Bland's rule guarantees termination.
Feasible verdicts return the witness point, which is replayed against the
constraints exactly before being returned; floating point never enters.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence, Union

ZERO = Fraction(0)
ONE = Fraction(1)

SparseRow = dict[int, Fraction]
Row = Union[SparseRow, Sequence[Fraction]]


def _sparse(row: Row) -> SparseRow:
    if isinstance(row, dict):
        return {j: Fraction(v) for j, v in row.items() if v != 0}
    return {j: Fraction(v) for j, v in enumerate(row) if v != 0}


def feasible(
    n_vars: int,
    a_eq: Sequence[Row] = (),
    b_eq: Sequence[Fraction] = (),
    a_ub: Sequence[Row] = (),
    b_ub: Sequence[Fraction] = (),
) -> Optional[list[Fraction]]:
    """Find x >= 0 with a_eq x = b_eq and a_ub x <= b_ub, or None."""
    rows: list[SparseRow] = []
    rhs: list[Fraction] = []
    n_slack = len(a_ub)
    total = n_vars + n_slack
    for i, (row, b) in enumerate(zip(a_ub, b_ub)):
        r = _sparse(row)
        r[n_vars + i] = ONE
        rows.append(r)
        rhs.append(Fraction(b))
    for row, b in zip(a_eq, b_eq):
        rows.append(_sparse(row))
        rhs.append(Fraction(b))
    m = len(rows)
    if m == 0:
        out = [ZERO] * n_vars
        return out
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = {j: -v for j, v in rows[i].items()}
            rhs[i] = -rhs[i]

    # Phase 1: one artificial variable per row, minimise their sum.
    # Column-major sparse tableau: cols[j] maps row -> coefficient.
    cols: dict[int, dict[int, Fraction]] = {}
    for i, r in enumerate(rows):
        for j, v in r.items():
            cols.setdefault(j, {})[i] = v
    basis = [total + i for i in range(m)]
    in_basis = set(basis)
    beta = rhs[:]  # current basic values, row-indexed
    # reduced costs of the phase-1 objective over structural columns
    obj: dict[int, Fraction] = {}
    for j, col in cols.items():
        s = sum(col.values(), ZERO)
        if s != 0:
            obj[j] = s
    obj_rhs = sum(beta, ZERO)

    # row-major view kept in sync for pivoting
    rowv: list[SparseRow] = [dict(r) for r in rows]
    for i in range(m):
        rowv[i][total + i] = ONE

    def pivot(pr: int, pc: int) -> None:
        nonlocal obj_rhs
        prow = rowv[pr]
        piv = prow[pc]
        if piv != 1:
            inv = 1 / piv
            for j in list(prow):
                prow[j] *= inv
            beta[pr] *= inv
        pcol = [i for i in range(m) if i != pr and rowv[i].get(pc)]
        for i in pcol:
            f = rowv[i][pc]
            ri = rowv[i]
            for j, w in prow.items():
                nv = ri.get(j, ZERO) - f * w
                if nv == 0:
                    ri.pop(j, None)
                else:
                    ri[j] = nv
            beta[i] -= f * beta[pr]
        f = obj.get(pc)
        if f:
            for j, w in prow.items():
                if j < total:
                    nv = obj.get(j, ZERO) - f * w
                    if nv == 0:
                        obj.pop(j, None)
                    else:
                        obj[j] = nv
            obj_rhs -= f * beta[pr]
        in_basis.discard(basis[pr])
        basis[pr] = pc
        in_basis.add(pc)

    # Dantzig pricing for speed; after a stall, Bland's rule guarantees
    # termination on degenerate problems.  Artificials never re-enter.
    stall = 0
    while True:
        pc = None
        if stall < 40:
            best_cost = ZERO
            for j, v in obj.items():
                if j < total and v > best_cost and j not in in_basis:
                    best_cost, pc = v, j
        else:
            for j in sorted(obj):
                if j < total and obj[j] > 0 and j not in in_basis:
                    pc = j
                    break
        if pc is None:
            break
        best = None
        for i in range(m):
            a = rowv[i].get(pc)
            if a and a > 0:
                cand = (beta[i] / a, basis[i], i)
                if best is None or cand < best:
                    best = cand
        if best is None:
            break
        prev = obj_rhs
        pivot(best[2], pc)
        stall = stall + 1 if obj_rhs == prev else 0

    if obj_rhs != 0:
        return None

    # Drive residual artificials (all at value 0) out of the basis.
    for i in range(m):
        if basis[i] >= total:
            pc = next((j for j in sorted(rowv[i]) if j < total and rowv[i][j] != 0), None)
            if pc is not None:
                pivot(i, pc)

    x = [ZERO] * n_vars
    for i in range(m):
        if basis[i] < n_vars:
            x[basis[i]] = beta[i]

    _replay(x, a_eq, b_eq, a_ub, b_ub)
    return x


def _replay(x, a_eq, b_eq, a_ub, b_ub) -> None:
    def dot(row: Row) -> Fraction:
        items = row.items() if isinstance(row, dict) else enumerate(row)
        return sum((v * x[j] for j, v in items if v != 0), ZERO)

    assert all(v >= 0 for v in x), "negative component in LP witness"
    for row, b in zip(a_eq, b_eq):
        got = dot(row)
        assert got == b, f"equality constraint violated: {got} != {b}"
    for row, b in zip(a_ub, b_ub):
        got = dot(row)
        assert got <= b, f"inequality constraint violated: {got} > {b}"
