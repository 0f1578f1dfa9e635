"""CHSH and Clauser-Horne statistics, and detector efficiencies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from bellseries.table_model import (
    ALPHA,
    ALPHA_P,
    BETA,
    BETA_P,
    CondensedTable,
    Pair,
    RunTable,
)

PER_COINCIDENCE = "per-coincidence"
PER_SLOT = "per-slot"
Normalization = Literal["per-coincidence", "per-slot"]

CHSH_PAIRS: tuple[Pair, ...] = (
    (ALPHA, BETA),
    (ALPHA, BETA_P),
    (ALPHA_P, BETA),
    (ALPHA_P, BETA_P),
)

_TOL = 1e-12


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationEstimate:
    pair: Pair
    value: float
    samples: int
    mode: str

    def __post_init__(self):
        if self.samples < 1:
            raise EstimatorError("a correlation needs at least one sample")
        if abs(self.value) > 1 + _TOL:
            raise EstimatorError(f"correlation {self.value} outside [-1, 1]")


@dataclass(frozen=True)
class ChshResult:
    correlations: tuple[CorrelationEstimate, ...]
    s: float
    mode: str  # "disjoint-factual" or "condensed"

    def correlation(self, pair: Pair) -> float:
        for est in self.correlations:
            if est.pair == tuple(pair):
                return est.value
        raise KeyError(pair)


@dataclass(frozen=True)
class ChResult:
    coincidences: dict[Pair, int]
    singles_alpha: int
    singles_beta: int
    j: int
    terms: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class EfficiencyReport:
    """Coincidence/singles ratios; ``None`` marks a detector that never fired."""

    detectors: dict[str, Optional[float]]
    station_a: Optional[float]
    station_b: Optional[float]
    overall: Optional[float]
    coincidence_slots: tuple[int, ...]


def correlation(
    table: RunTable, pair: Pair, mode: Normalization = PER_COINCIDENCE
) -> CorrelationEstimate:
    """Mean product of the outcomes recorded under ``pair``.

    ``per-coincidence`` averages over slots where both stations detected;
    ``per-slot`` divides by every slot of the block, so non-detections
    count as zero.
    """
    ua, ub = table.block(pair)
    if ua.size == 0:
        raise EstimatorError(f"no slots carry {table.labels.pair_name(pair)}")
    prod = ua.astype(np.int64) * ub
    if mode == PER_COINCIDENCE:
        n = int(np.count_nonzero(prod))
        if n == 0:
            raise EstimatorError(f"no coincidences under {table.labels.pair_name(pair)}")
    elif mode == PER_SLOT:
        n = int(ua.size)
    else:
        raise EstimatorError(f"unknown normalization {mode!r}")
    return CorrelationEstimate(tuple(pair), float(prod.sum()) / n, n, mode)


def _s_value(e_ab, e_abp, e_apb, e_apbp) -> float:
    return abs(e_ab - e_abp) + abs(e_apb + e_apbp)


def chsh(table: RunTable, mode: Normalization = PER_COINCIDENCE) -> ChshResult:
    """S from four blocks recorded at different times.

    Only the trivial bound ``S <= 4`` applies to this quantity.
    """
    ests = tuple(correlation(table, p, mode) for p in CHSH_PAIRS)
    s = _s_value(*(e.value for e in ests))
    return ChshResult(ests, s, "disjoint-factual")


def chsh_condensed(table: CondensedTable) -> ChshResult:
    """S from shared-index sums over a condensed table.

    When every value is +1 or -1 the result cannot exceed 2; a larger value
    would mean a broken table and raises ``AssertionError``.
    """
    m = len(table)
    if m == 0:
        raise EstimatorError("condensed table is empty")
    a, b, ap, bp = (r.astype(np.int64) for r in (table.a, table.b, table.a_prime, table.b_prime))
    sums = {
        (ALPHA, BETA): int(a @ b),
        (ALPHA, BETA_P): int(a @ bp),
        (ALPHA_P, BETA): int(ap @ b),
        (ALPHA_P, BETA_P): int(ap @ bp),
    }
    ests = tuple(CorrelationEstimate(p, sums[p] / m, m, PER_SLOT) for p in CHSH_PAIRS)
    s = _s_value(*(e.value for e in ests))
    if np.all(table.values != 0):
        assert s <= 2 + _TOL, f"condensed S={s} exceeds 2 on a +/-1 table"
    return ChshResult(ests, s, "condensed")


def to_ch_encoding(table: Union[RunTable, CondensedTable]):
    """Keep only the '+' detectors: +1 -> 1, and -1 or 0 -> 0."""
    if isinstance(table, CondensedTable):
        rows = [(r == 1).astype(np.int8) for r in (table.a, table.b, table.a_prime, table.b_prime)]
        return CondensedTable.from_rows(rows, table.factual)
    return RunTable(table.schedule, (table.a == 1).astype(np.int8), (table.b == 1).astype(np.int8))


def _require_boolean(arrays) -> None:
    for arr in arrays:
        if not np.isin(arr, (0, 1)).all():
            raise EstimatorError("CH quantities need outcomes encoded as 0/1")


def ch_j(table: RunTable) -> ChResult:
    """J = Nc(a,b) + Nc(a,b') + Nc(a',b) - Nc(a',b') - S(a) - S(b).

    Singles are summed over every slot of the run in which the station used
    the unprimed setting.
    """
    _require_boolean((table.a, table.b))
    nc = {}
    for pair in CHSH_PAIRS:
        ua, ub = table.block(pair)
        nc[pair] = int(np.count_nonzero(ua & ub))
    s_alpha = int(table.a[table.schedule.alice == ALPHA].sum())
    s_beta = int(table.b[table.schedule.bob == BETA].sum())
    j = (
        nc[(ALPHA, BETA)]
        + nc[(ALPHA, BETA_P)]
        + nc[(ALPHA_P, BETA)]
        - nc[(ALPHA_P, BETA_P)]
        - s_alpha
        - s_beta
    )
    return ChResult(nc, s_alpha, s_beta, j)


def ch_terms_condensed(table: CondensedTable) -> ChResult:
    """Per-row terms T_i of J on a condensed 0/1 table; every T_i is <= 0."""
    a, b, ap, bp = (r.astype(np.int64) for r in (table.a, table.b, table.a_prime, table.b_prime))
    _require_boolean((a, b, ap, bp))
    terms = a * (b + bp) + ap * (b - bp) - a - b
    assert np.all(terms <= 0), "a Boolean row produced a positive CH term"
    nc = {
        (ALPHA, BETA): int(a @ b),
        (ALPHA, BETA_P): int(a @ bp),
        (ALPHA_P, BETA): int(ap @ b),
        (ALPHA_P, BETA_P): int(ap @ bp),
    }
    return ChResult(nc, int(a.sum()), int(b.sum()), int(terms.sum()), tuple(terms.tolist()))


def efficiency(table: RunTable) -> EfficiencyReport:
    """Coincidences/singles for each detector and station."""
    both = (table.a != 0) & (table.b != 0)

    def ratio(fired: np.ndarray) -> Optional[float]:
        n = int(np.count_nonzero(fired))
        return None if n == 0 else int(np.count_nonzero(fired & both)) / n

    detectors = {
        "A+": ratio(table.a == 1),
        "A-": ratio(table.a == -1),
        "B+": ratio(table.b == 1),
        "B-": ratio(table.b == -1),
    }
    singles_a = int(np.count_nonzero(table.a))
    singles_b = int(np.count_nonzero(table.b))
    coinc = int(np.count_nonzero(both))
    overall = None
    if singles_a + singles_b:
        overall = 2 * coinc / (singles_a + singles_b)
    return EfficiencyReport(
        detectors,
        ratio(table.a != 0),
        ratio(table.b != 0),
        overall,
        tuple(int(i) for i in np.flatnonzero(both)),
    )


def efficiency_bound_ratio(s: float, eta: float) -> tuple[float, str]:
    """Return ``S * eta`` and whether it is below, at, or above 2."""
    if not 0 < eta <= 1:
        raise EstimatorError(f"efficiency must be in (0, 1], got {eta}")
    if not 0 <= s <= 4 + _TOL:
        raise EstimatorError(f"S must be in [0, 4], got {s}")
    prod = s * eta
    if abs(prod - 2) <= 1e-9:
        flag = "at-bound"
    else:
        flag = "above" if prod > 2 else "below"
    return prod, flag
