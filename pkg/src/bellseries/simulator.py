"""Stochastic sources of factual run tables.

Every slot consumes one row of four uniforms from a counter-based Philox
stream keyed by the seed, so the draws for slots ``[start, stop)`` can be
regenerated on their own (see :func:`slot_uniforms`) and the result does
not depend on how the run is split up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from bellseries.table_model import (
    QUARTERS,
    RunTable,
    SettingLabels,
    SettingSchedule,
)

CHSH_ANGLES = (0.0, 45.0, 22.5, 67.5)  # alpha, alpha', beta, beta'
_DRAWS_PER_SLOT = 4


class SimulationError(ValueError):
    pass


def _check_angles(angles) -> tuple[float, float, float, float]:
    if len(angles) != 4:
        raise SimulationError("angles must be (alpha, alpha', beta, beta')")
    out = tuple(float(x) for x in angles)
    if not all(np.isfinite(out)):
        raise SimulationError(f"angles must be finite, got {angles}")
    return out


@dataclass(frozen=True)
class QmModel:
    """Polarization-entangled pairs: P(u, v) = (1 + u v cos 2(tA - tB)) / 4."""

    angles: tuple[float, float, float, float] = CHSH_ANGLES

    def __post_init__(self):
        object.__setattr__(self, "angles", _check_angles(self.angles))

    def joint(self, theta_a: float, theta_b: float) -> dict[tuple[int, int], float]:
        c = np.cos(np.radians(2 * (theta_a - theta_b)))
        return {(u, v): (1 + u * v * c) / 4 for u in (1, -1) for v in (1, -1)}


@dataclass(frozen=True)
class LhvModel:
    """Shared angle lam uniform on [0, 180); each side answers sign(cos 2(t - lam))."""

    angles: tuple[float, float, float, float] = CHSH_ANGLES

    def __post_init__(self):
        object.__setattr__(self, "angles", _check_angles(self.angles))


Model = Union[QmModel, LhvModel]


@dataclass(frozen=True)
class DetectionChannel:
    """Independent loss at each station: an outcome survives with probability eta."""

    eta_a: float = 1.0
    eta_b: float = 1.0

    def __post_init__(self):
        for eta in (self.eta_a, self.eta_b):
            if not 0.0 <= eta <= 1.0:
                raise SimulationError(f"efficiency must be in [0, 1], got {eta}")


def _setting_angles(model: Model, schedule: SettingSchedule) -> tuple[np.ndarray, np.ndarray]:
    al, alp, be, bep = model.angles
    theta_a = np.where(schedule.alice == 0, al, alp)
    theta_b = np.where(schedule.bob == 0, be, bep)
    return theta_a, theta_b


def slot_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniform draws for slots ``start..stop-1``, shape ``(stop - start, 4)``."""
    bitgen = np.random.Philox(key=seed)
    bitgen.advance(start)
    return np.random.Generator(bitgen).random((stop - start, _DRAWS_PER_SLOT))


def _response(theta: np.ndarray, lam: np.ndarray) -> np.ndarray:
    return np.where(np.cos(np.radians(2 * (theta - lam))) >= 0, 1, -1).astype(np.int8)


def simulate(
    model: Model,
    schedule: SettingSchedule,
    channel: DetectionChannel | None = None,
    seed: int = 0,
) -> RunTable:
    """Draw one joint outcome per slot under that slot's settings.

    Column 0 of each slot's uniforms selects the joint outcome (or the hidden
    angle), columns 1 and 2 decide detection at A and B.
    """
    if len(schedule) == 0:
        raise SimulationError("schedule has no slots")
    if seed < 0:
        raise SimulationError("seed must be nonnegative")
    channel = channel or DetectionChannel()
    draws = slot_uniforms(seed, 0, len(schedule))
    theta_a, theta_b = _setting_angles(model, schedule)

    if isinstance(model, QmModel):
        c = np.cos(np.radians(2 * (theta_a - theta_b)))
        same, diff = (1 + c) / 4, (1 - c) / 4
        r = draws[:, 0]
        # cumulative order: (+,+), (-,-), (+,-), (-,+)
        cuts = [r < same, r < 2 * same, r < 2 * same + diff]
        a = np.select(cuts, [1, -1, 1], -1)
        b = np.select(cuts, [1, -1, -1], 1)
    elif isinstance(model, LhvModel):
        lam = 180.0 * draws[:, 0]
        a = _response(theta_a, lam)
        b = _response(theta_b, lam)
    else:
        raise SimulationError(f"unknown model {model!r}")

    a = np.where(draws[:, 1] < channel.eta_a, a, 0)
    b = np.where(draws[:, 2] < channel.eta_b, b, 0)
    return RunTable(schedule, a.astype(np.int8), b.astype(np.int8))


def expected_correlation(model: Model, pair: tuple[int, int]) -> float:
    """Closed-form E for a setting pair (ideal detection)."""
    al, alp, be, bep = model.angles
    delta = (al, alp)[pair[0]] - (be, bep)[pair[1]]
    if isinstance(model, QmModel):
        return float(np.cos(np.radians(2 * delta)))
    # two square waves of period 180 deg: correlation falls linearly from 1 at
    # delta = 0 to -1 at |delta| = 90
    d = abs((delta + 90.0) % 180.0 - 90.0)
    return 1.0 - 4.0 * d / 180.0


def make_schedule(
    q: int, kind: str = "block", seed: int = 0, labels: SettingLabels | None = None
) -> SettingSchedule:
    """Schedules for simulation runs.

    ``block`` is the canonical quarter layout, ``shuffled`` the same balanced
    slots in random order, and ``random`` draws every slot's pair uniformly
    (4*q slots, quarters not necessarily equal).
    """
    labels = labels or SettingLabels()
    if kind == "block":
        return SettingSchedule.block(q, labels)
    rng = np.random.default_rng(seed)
    if kind == "shuffled":
        pairs = [p for p in QUARTERS for _ in range(q)]
        order = rng.permutation(len(pairs))
        return SettingSchedule.from_pairs([pairs[i] for i in order], labels)
    if kind == "random":
        codes = rng.integers(0, 4, size=4 * q)
        return SettingSchedule.from_pairs([QUARTERS[c] for c in codes], labels)
    raise SimulationError(f"unknown schedule kind {kind!r}")
