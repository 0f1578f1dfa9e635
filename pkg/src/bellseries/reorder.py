"""Legitimate reordering of factual tables into Sica form.

A reordering permutes slots inside each setting-pair quarter, moving both
stations' outcomes together, so every joint-outcome count is preserved.
The table can be brought into Sica form exactly when there is a multiset
of rows ``(a, b, a', b')`` whose four pairwise projections reproduce the
quarter profiles: ``(a, b')`` for (alpha,beta'), ``(a, b)`` for
(alpha,beta), ``(a', b)`` for (alpha',beta) and ``(a', b')`` for
(alpha',beta'). The search is over those row-type counts, optionally
allowing a number of slots per quarter to be discarded.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from bellseries.table_model import (
    QUARTERS,
    CondensedTable,
    RunTable,
    ScheduleError,
    UnbalancedQuartersError,
    check_sica_condition,
    condense,
)

Quad = tuple[int, int, int, int]

# positions of (station A, station B) inside a quadruple (a, b, a', b'), per quarter
_PROJECTION = ((0, 3), (0, 1), (2, 1), (2, 3))
# row checked between two quarters for a factual table: (row letter, quarter i, quarter j, station)
_SHARED_ROWS = (("a", 0, 1, 0), ("b", 1, 2, 1), ("a'", 2, 3, 0), ("b'", 0, 3, 1))

BRUTE_FORCE_MAX_Q = 6


class ReorderError(ValueError):
    pass


@dataclass(frozen=True)
class JointAssignment:
    """Row-type counts for the condensed table plus per-quarter discards.

    ``counts`` maps ``(a, b, a', b')`` to a positive count. ``discards[k]``
    maps a joint outcome of quarter ``k`` (canonical order) to the number
    of its slots left out.
    """

    counts: dict[Quad, int]
    discards: tuple[dict[tuple[int, int], int], ...]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def marginal(self, k: int) -> Counter:
        return _marginal(self.counts, k)


@dataclass(frozen=True)
class Witness:
    """Why no legitimate reordering exists.

    ``kind`` is ``"marginal-mismatch"`` (one station's outcomes differ as
    multisets between two quarters), ``"chsh-violation"`` (the factual S
    exceeds 2 on a +/-1 table) or ``"exhausted-search"``.
    """

    kind: str
    detail: str


@dataclass(frozen=True)
class ReorderOutcome:
    feasible: bool
    assignment: Optional[JointAssignment] = None
    permutations: Optional[tuple[tuple[int, ...], ...]] = None
    reordered: Optional[RunTable] = None
    condensed: Optional[CondensedTable] = None
    discarded_fraction: Optional[float] = None
    witness: Optional[Witness] = None

    @property
    def verdict(self) -> str:
        return "feasible" if self.feasible else "infeasible"


def _quarter_blocks(table: RunTable) -> list[np.ndarray]:
    if not table.schedule.is_block_form():
        raise ScheduleError("feasibility needs a block-form schedule; normalize it first")
    return [table.schedule.slots(p) for p in QUARTERS]


def _profiles(table: RunTable, blocks) -> list[Counter]:
    return [Counter(zip(table.a[idx].tolist(), table.b[idx].tolist())) for idx in blocks]


def _station_multisets_witness(table: RunTable, blocks) -> Optional[Witness]:
    for row, i, j, station in _SHARED_ROWS:
        src = table.a if station == 0 else table.b
        ci = Counter(src[blocks[i]].tolist())
        cj = Counter(src[blocks[j]].tolist())
        if ci != cj:
            return Witness(
                "marginal-mismatch",
                f"row {row}: outcomes {dict(sorted(ci.items()))} in quarter {i + 1} "
                f"vs {dict(sorted(cj.items()))} in quarter {j + 1}",
            )
    return None


def _chsh_witness(table: RunTable, profiles) -> Optional[Witness]:
    if any(u == 0 or v == 0 for prof in profiles for (u, v) in prof):
        return None
    q = sum(profiles[0].values())
    if q == 0:
        return None
    sums = [sum(u * v * n for (u, v), n in prof.items()) for prof in profiles]
    # quarters: 0 = (a,b'), 1 = (a,b), 2 = (a',b), 3 = (a',b')
    s_count = abs(sums[1] - sums[0]) + abs(sums[2] + sums[3])
    if s_count > 2 * q:
        return Witness("chsh-violation", f"factual S = {s_count / q:g} > 2")
    return None


def _max_assignment(profiles) -> tuple[int, dict[Quad, int]]:
    """Largest number of condensed rows whose projections fit inside ``profiles``."""
    alphabet = sorted({v for prof in profiles for pair in prof for v in pair})
    quads = []
    upper = []
    for quad in itertools.product(alphabet, repeat=4):
        ub = min(profiles[k][(quad[i], quad[j])] for k, (i, j) in enumerate(_PROJECTION))
        if ub > 0:
            quads.append(quad)
            upper.append(ub)
    if not quads:
        return 0, {}
    rows, rhs = [], []
    for k, (i, j) in enumerate(_PROJECTION):
        for pair, n in sorted(profiles[k].items()):
            coeffs = [1.0 if (quad[i], quad[j]) == pair else 0.0 for quad in quads]
            rows.append(coeffs)
            rhs.append(n)
    res = milp(
        c=-np.ones(len(quads)),
        constraints=LinearConstraint(np.array(rows), -np.inf, np.array(rhs, dtype=float)),
        integrality=np.ones(len(quads)),
        bounds=Bounds(0, np.array(upper, dtype=float)),
    )
    if res.x is None:
        raise ReorderError(f"integer solver failed: {res.message}")
    x = np.rint(res.x).astype(np.int64)
    counts = {quad: int(n) for quad, n in zip(quads, x) if n > 0}
    for k, (i, j) in enumerate(_PROJECTION):
        used: Counter = Counter()
        for quad, n in counts.items():
            used[(quad[i], quad[j])] += n
        if any(used[p] > profiles[k][p] for p in used):
            raise ReorderError("integer solver returned an assignment outside the profiles")
    return int(x.sum()), counts


def feasibility(
    table: RunTable, discard_budget: float = 0.0, coincident_only: bool = False
) -> ReorderOutcome:
    """Decide whether legitimate reordering can bring ``table`` into Sica form.

    At most ``floor(discard_budget * Q)`` slots per quarter may be left out;
    every quarter keeps the same number of slots. When feasible, the fewest
    possible slots are discarded and the reordered table, its condensation
    and the per-quarter slot permutations are returned.

    With ``coincident_only`` slots where either station saw nothing are
    dropped first; the budget then applies to each filtered quarter.
    """
    if not 0.0 <= discard_budget <= 1.0:
        raise ReorderError(f"discard budget must lie in [0, 1], got {discard_budget}")
    blocks = _quarter_blocks(table)
    if coincident_only:
        both = (table.a != 0) & (table.b != 0)
        blocks = [idx[both[idx]] for idx in blocks]
    elif not table.schedule.is_balanced():
        raise UnbalancedQuartersError(
            f"quarters must have equal length, got {table.schedule.quarter_sizes()}"
        )
    sizes = [int(idx.size) for idx in blocks]
    profiles = _profiles(table, blocks)
    need = max(n - math.floor(discard_budget * n + 1e-9) for n in sizes)

    if not coincident_only and check_sica_condition(table).holds:
        return _identity_outcome(table, blocks, profiles)

    if discard_budget == 0.0 and len(set(sizes)) == 1:
        witness = _station_multisets_witness(table, blocks)
        if witness is not None:
            return ReorderOutcome(False, witness=witness)

    best, counts = _max_assignment(profiles)
    if best < need:
        witness = None
        if discard_budget == 0.0:
            witness = _chsh_witness(table, profiles)
        if witness is None:
            witness = Witness(
                "exhausted-search",
                f"at most {best} slots per quarter can be kept; {need} required",
            )
        return ReorderOutcome(False, witness=witness)

    discards = []
    for k, prof in enumerate(profiles):
        used = _marginal(counts, k)
        discards.append({p: n - used[p] for p, n in sorted(prof.items()) if used[p] < n})
    assignment = JointAssignment(counts, tuple(discards))
    reordered, perms = _realize(table, blocks, assignment)
    total = sum(sizes)
    fraction = 0.0 if total == 0 else (total - 4 * best) / total
    return ReorderOutcome(
        True,
        assignment=assignment,
        permutations=perms,
        reordered=reordered,
        condensed=condense(reordered),
        discarded_fraction=fraction,
    )


def _identity_outcome(table: RunTable, blocks, profiles) -> ReorderOutcome:
    condensed = condense(table)
    counts = dict(sorted(Counter(condensed.quadruples()).items()))
    assignment = JointAssignment(counts, ({}, {}, {}, {}))
    return ReorderOutcome(
        True,
        assignment=assignment,
        permutations=tuple(tuple(idx.tolist()) for idx in blocks),
        reordered=table,
        condensed=condensed,
        discarded_fraction=0.0,
    )


def minimal_discard_fraction(table: RunTable, coincident_only: bool = False) -> float:
    """Smallest fraction of slots to discard for a legitimate reordering to exist."""
    out = feasibility(table, 1.0, coincident_only)
    return out.discarded_fraction


def _marginal(counts: dict[Quad, int], k: int) -> Counter:
    i, j = _PROJECTION[k]
    out: Counter = Counter()
    for quad, n in counts.items():
        out[(quad[i], quad[j])] += n
    return out


def _realize(table: RunTable, blocks, assignment: JointAssignment):
    profiles = _profiles(table, blocks)
    pools = []
    for k, idx in enumerate(blocks):
        marg = assignment.marginal(k)
        drop = assignment.discards[k] if k < len(assignment.discards) else {}
        for pair in set(profiles[k]) | set(marg) | set(drop):
            if marg[pair] + drop.get(pair, 0) != profiles[k][pair]:
                raise ReorderError(
                    f"assignment inconsistent with quarter {k + 1} profile at {pair}"
                )
        by_type: dict[tuple[int, int], list[int]] = defaultdict(list)
        for slot in idx.tolist():
            by_type[(int(table.a[slot]), int(table.b[slot]))].append(slot)
        # leave out the earliest slots of each type
        pools.append({p: s[drop.get(p, 0):] for p, s in by_type.items()})

    # (alpha,beta) keeps its recorded order; every other quarter follows it.
    by_ab: dict[tuple[int, int], list[Quad]] = defaultdict(list)
    for quad in sorted(assignment.counts):
        by_ab[(quad[0], quad[1])].extend([quad] * assignment.counts[quad])
    order: list[Quad] = []
    anchor = sorted(s for slots in pools[1].values() for s in slots)
    for slot in anchor:
        order.append(by_ab[(int(table.a[slot]), int(table.b[slot]))].pop(0))

    cursors = [{p: 0 for p in pool} for pool in pools]
    perms = []
    for k, (i, j) in enumerate(_PROJECTION):
        seq = []
        for quad in order:
            key = (quad[i], quad[j])
            seq.append(pools[k][key][cursors[k][key]])
            cursors[k][key] += 1
        perms.append(tuple(seq))
    reordered = table.permuted([s for seq in perms for s in seq])
    return reordered, tuple(perms)


def realize_permutations(table: RunTable, assignment: JointAssignment) -> RunTable:
    """Apply an assignment: permute (and trim) each quarter into Sica form.

    The (alpha,beta) quarter keeps its recorded order; the other quarters
    are rearranged to match it, carrying the partner outcome along. Within
    each joint outcome type, slots keep their relative order.
    """
    blocks = _quarter_blocks(table)
    if len(assignment.discards) != 4:
        raise ReorderError("assignment needs discard counts for all four quarters")
    reordered, _ = _realize(table, blocks, assignment)
    return reordered


def _distinct_orders(pairs: list[tuple[int, int]]) -> set[tuple[tuple[int, int], ...]]:
    return {tuple(pairs[i] for i in perm) for perm in itertools.permutations(range(len(pairs)))}


def brute_force_feasibility(table: RunTable) -> ReorderOutcome:
    """Exhaustive permutation search for a Sica-form reordering (Q <= 6).

    The (alpha,beta) quarter is held fixed, which loses no generality since
    only the relative order of the quarters matters.
    """
    blocks = _quarter_blocks(table)
    if not table.schedule.is_balanced():
        raise UnbalancedQuartersError("brute force needs balanced quarters")
    q = int(blocks[0].size)
    if q > BRUTE_FORCE_MAX_Q:
        raise ReorderError(f"brute force limited to Q <= {BRUTE_FORCE_MAX_Q}, got {q}")
    quarters = [list(zip(table.a[idx].tolist(), table.b[idx].tolist())) for idx in blocks]
    anchor = quarters[1]
    a_target = [u for u, _ in anchor]
    b_target = [v for _, v in anchor]
    first = [o for o in _distinct_orders(quarters[0]) if [u for u, _ in o] == a_target]
    third = [o for o in _distinct_orders(quarters[2]) if [v for _, v in o] == b_target]
    fourth = _distinct_orders(quarters[3])
    tried = 0
    for o1 in first:
        for o3 in third:
            tried += 1
            want = tuple((o3[i][0], o1[i][1]) for i in range(q))
            if want in fourth:
                orders = [o1, tuple(anchor), o3, want]
                return _from_orders(table, blocks, orders)
    return ReorderOutcome(
        False,
        witness=Witness("exhausted-search", f"{tried} quarter orderings tried, none in Sica form"),
    )


def _from_orders(table: RunTable, blocks, orders) -> ReorderOutcome:
    perms = []
    for idx, seq in zip(blocks, orders):
        free: dict[tuple[int, int], list[int]] = defaultdict(list)
        for slot in idx.tolist():
            free[(int(table.a[slot]), int(table.b[slot]))].append(slot)
        perms.append(tuple(free[p].pop(0) for p in seq))
    reordered = table.permuted([s for seq in perms for s in seq])
    if not check_sica_condition(reordered).holds:
        raise ReorderError("brute force produced a table outside Sica form")
    return ReorderOutcome(
        True,
        permutations=tuple(perms),
        reordered=reordered,
        condensed=condense(reordered),
        discarded_fraction=0.0,
    )


def matching_discard(table: RunTable) -> tuple[list[np.ndarray], int]:
    """Fewest equal-length discards making row ``a`` (and ``a'``) agree as multisets.

    Returns the kept slots of each quarter, in recorded order, and the kept
    length. Excess slots of an outcome are dropped earliest first; further
    drops needed to equalize lengths remove matched slot pairs, again
    earliest first.
    """
    blocks = _quarter_blocks(table)
    if not table.schedule.is_balanced():
        raise UnbalancedQuartersError("matching discard needs balanced quarters")

    def matched(i: int, j: int) -> tuple[list[int], list[int]]:
        keep_i, keep_j = [], []
        for u in sorted(set(table.a[blocks[i]].tolist()) | set(table.a[blocks[j]].tolist())):
            si = [s for s in blocks[i].tolist() if table.a[s] == u]
            sj = [s for s in blocks[j].tolist() if table.a[s] == u]
            m = min(len(si), len(sj))
            keep_i += si[len(si) - m :]
            keep_j += sj[len(sj) - m :]
        return sorted(keep_i), sorted(keep_j)

    k1, k2 = matched(0, 1)
    k3, k4 = matched(3, 2)[::-1]
    m = min(len(k1), len(k3))

    def trim(lead: list[int], other: list[int]) -> tuple[list[int], list[int]]:
        lead, other = list(lead), list(other)
        while len(lead) > m:
            s = lead.pop(0)
            u = table.a[s]
            other.remove(next(t for t in other if table.a[t] == u))
        return lead, other

    k1, k2 = trim(k1, k2)
    k4, k3 = trim(k4, k3)
    return [np.array(k, dtype=np.int64) for k in (k1, k2, k3, k4)], m


def subtable(table: RunTable, kept: list[np.ndarray]) -> RunTable:
    """Block table made of the kept slots of each quarter, in the given order."""
    order = np.concatenate(kept)
    return RunTable(table.schedule.permuted(order), table.a[order], table.b[order])
