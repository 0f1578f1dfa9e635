"""Plain-text and structured reports."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Union

from bellseries.fileio import table_to_json
from bellseries.estimators import ChResult, ChshResult, EfficiencyReport
from bellseries.reorder import ReorderOutcome
from bellseries.table_model import (
    ROWS,
    CompleteTable,
    CondensedTable,
    RunTable,
    SettingLabels,
)

_SIGN = {1: "+", -1: "-", 0: "0"}
# wider condensed tables are summarized in text output; JSON keeps them whole
MAX_GRID_COLUMNS = 40


@dataclass(frozen=True)
class CompletionSummary:
    count: int
    with_discards: bool
    tables: tuple[CompleteTable, ...] = ()
    choices: tuple[str, ...] = ()


@dataclass(frozen=True)
class Note:
    """Free-form line, e.g. a statistic that could not be computed."""

    title: str
    text: str


def _cell(value: Optional[int], factual: Optional[bool]) -> str:
    if value is None:
        return ""
    s = _SIGN[value]
    return s if factual is not False else f"({s})"


def render_grid(table: Union[RunTable, CompleteTable, CondensedTable]) -> str:
    """Rows a, b, a', b' with 1-based slot columns; counterfactual cells in brackets."""
    if isinstance(table, RunTable):
        cells = [[_cell(v, True) for v in row] for row in table.grid()]
    else:
        vals = table.values.tolist()
        fac = table.factual
        fac = [[None] * len(table)] * 4 if fac is None else fac.tolist()
        cells = [[_cell(v, f) for v, f in zip(vr, fr)] for vr, fr in zip(vals, fac)]
    n = len(cells[0]) if cells else 0
    width = max([3, len(str(n))] + [len(c) for row in cells for c in row])
    head = "set\\i".ljust(6) + "".join(str(i + 1).rjust(width + 1) for i in range(n))
    lines = [head]
    for name, row in zip(ROWS, cells):
        lines.append(name.ljust(6) + "".join(c.rjust(width + 1) for c in row))
    return "\n".join(line.rstrip() for line in lines)


def _pair_key(labels: SettingLabels, pair) -> str:
    return f"{labels.alice[pair[0]]},{labels.bob[pair[1]]}"


def _section(item: Any, labels: SettingLabels) -> tuple[str, str, Any]:
    if isinstance(item, ChshResult):
        body = {
            "mode": item.mode,
            "S": item.s,
            "correlations": {
                _pair_key(labels, e.pair): {"E": e.value, "samples": e.samples, "normalization": e.mode}
                for e in item.correlations
            },
        }
        lines = [f"S = {item.s:.6g} ({item.mode})"]
        lines += [
            f"  E{labels.pair_name(e.pair)} = {e.value:+.6g}  [{e.samples} samples, {e.mode}]"
            for e in item.correlations
        ]
        return "chsh", "\n".join(lines), body
    if isinstance(item, ChResult):
        body = {
            "J": item.j,
            "coincidences": {_pair_key(labels, p): n for p, n in item.coincidences.items()},
            "singles_alpha": item.singles_alpha,
            "singles_beta": item.singles_beta,
            "terms": None if item.terms is None else list(item.terms),
        }
        lines = [f"J = {item.j}"]
        lines += [f"  Nc{labels.pair_name(p)} = {n}" for p, n in item.coincidences.items()]
        lines.append(
            f"  S({labels.alice[0]}) = {item.singles_alpha}, S({labels.bob[0]}) = {item.singles_beta}"
        )
        return "ch", "\n".join(lines), body
    if isinstance(item, EfficiencyReport):
        body = {
            "detectors": item.detectors,
            "station_a": item.station_a,
            "station_b": item.station_b,
            "overall": item.overall,
            "coincidence_slots": list(item.coincidence_slots),
        }
        fmt = lambda x: "n/a" if x is None else f"{x:.6g}"  # noqa: E731
        lines = ["efficiency " + ", ".join(f"{k}={fmt(v)}" for k, v in item.detectors.items())]
        lines.append(
            f"  station A={fmt(item.station_a)}, station B={fmt(item.station_b)}, "
            f"overall={fmt(item.overall)}"
        )
        return "efficiency", "\n".join(lines), body
    if isinstance(item, ReorderOutcome):
        body: dict = {"verdict": item.verdict, "discarded_fraction": item.discarded_fraction}
        lines = [f"reordering: {item.verdict}"]
        if item.witness is not None:
            body["witness"] = {"kind": item.witness.kind, "detail": item.witness.detail}
            lines.append(f"  witness ({item.witness.kind}): {item.witness.detail}")
        if item.feasible:
            lines.append(f"  discarded fraction = {item.discarded_fraction:.6g}")
            body["condensed"] = table_to_json(item.condensed)
            if len(item.condensed) <= MAX_GRID_COLUMNS:
                lines.append("  condensed table:")
                lines.append(render_grid(item.condensed))
            else:
                lines.append(f"  condensed table: {len(item.condensed)} columns (not shown)")
        return "reorder", "\n".join(lines), body
    if isinstance(item, CompletionSummary):
        body = {
            "count": item.count,
            "with_discards": item.with_discards,
            "choices": list(item.choices),
            "tables": [table_to_json(t) for t in item.tables],
        }
        lines = [f"complete tables: {item.count}" + (" (with discards)" if item.with_discards else "")]
        for choice, t in zip(item.choices, item.tables):
            lines.append(f"  choice {choice}:")
            lines.append(render_grid(t))
        return "completion", "\n".join(lines), body
    if isinstance(item, (RunTable, CompleteTable, CondensedTable)):
        kind = {RunTable: "run", CompleteTable: "complete", CondensedTable: "condensed"}[type(item)]
        return f"table:{kind}", render_grid(item), table_to_json(item)
    if isinstance(item, Note):
        return item.title, f"{item.title}: {item.text}", item.text
    raise TypeError(f"cannot report {type(item).__name__}")


def emit_report(
    results: Sequence[Any], labels: SettingLabels | None = None
) -> tuple[str, list[dict]]:
    """Render results in the given order as text and as a list of sections."""
    labels = labels or SettingLabels()
    texts, sections = [], []
    for item in results:
        name, text, body = _section(item, labels)
        texts.append(text)
        sections.append({"section": name, "data": body})
    text = "\n\n".join(texts)
    return (text + "\n" if text else ""), sections


def dumps_structured(sections: list[dict]) -> str:
    return json.dumps(sections, indent=1) + "\n"
