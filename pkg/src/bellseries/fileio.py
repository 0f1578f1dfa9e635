"""Run files (CSV) and table files (JSON).

Run file::

    # alice: alpha=0, alpha'=45
    # bob: beta=22.5, beta'=67.5
    slot,setting_a,setting_b,a,b
    0,alpha,beta',-1,+1

The ``# alice:`` / ``# bob:`` lines are optional (defaults: ``alpha``,
``alpha'``, ``beta``, ``beta'``); angles are optional but must be given for
all four labels or none. Slots start at 0 and increase by one.

Table files are JSON with a ``format_version`` field. Each cell is
``null`` (not performed) or ``{"value": v, "kind": "factual" |
"counterfactual"}``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import TextIO, Union

import numpy as np

from bellseries.table_model import (
    ROWS,
    CompleteTable,
    CondensedTable,
    RunTable,
    SettingLabels,
    SettingSchedule,
    TableError,
)

HEADER = ["slot", "setting_a", "setting_b", "a", "b"]
FORMAT_NAME = "bellseries-table"
FORMAT_VERSION = 1

_TOKENS = {"+1": 1, "1": 1, "+": 1, "-1": -1, "-": -1, "−1": -1, "0": 0}

Table = Union[RunTable, CompleteTable, CondensedTable]


class RunfileError(TableError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_directive(text: str, line: int) -> tuple[list[str], list[float]]:
    labels, angles = [], []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, angle = item.partition("=")
        labels.append(name.strip())
        if sep:
            try:
                angles.append(float(angle))
            except ValueError:
                raise RunfileError(line, f"bad angle {angle!r}") from None
    if len(labels) != 2:
        raise RunfileError(line, "a station declares exactly two setting labels")
    if angles and len(angles) != 2:
        raise RunfileError(line, "give angles for both labels or neither")
    return labels, angles


def read_runfile(stream: TextIO) -> RunTable:
    alice, bob = ["alpha", "alpha'"], ["beta", "beta'"]
    ang_a: list[float] = []
    ang_b: list[float] = []
    header_seen = False
    pairs, out_a, out_b = [], [], []
    labels = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, rest = body.partition(":")
            if key.strip() in ("alice", "bob"):
                if header_seen:
                    raise RunfileError(lineno, "setting declarations must precede the header")
                names, angles = _parse_directive(rest, lineno)
                if key.strip() == "alice":
                    alice, ang_a = names, angles
                else:
                    bob, ang_b = names, angles
            continue
        fields = [f.strip() for f in next(csv.reader([line]))]
        if not header_seen:
            if fields != HEADER:
                raise RunfileError(lineno, f"expected header {','.join(HEADER)}")
            header_seen = True
            if bool(ang_a) != bool(ang_b):
                raise RunfileError(lineno, "angles declared for one station only")
            try:
                labels = SettingLabels(
                    tuple(alice), tuple(bob), tuple(ang_a + ang_b) if ang_a else None
                )
            except TableError as exc:
                raise RunfileError(lineno, str(exc)) from None
            continue
        if len(fields) != 5:
            raise RunfileError(lineno, f"expected 5 fields, got {len(fields)}")
        try:
            slot = int(fields[0])
        except ValueError:
            raise RunfileError(lineno, f"bad slot {fields[0]!r}") from None
        if slot != len(pairs):
            if slot < len(pairs):
                raise RunfileError(lineno, f"slot {slot} not increasing")
            raise RunfileError(lineno, f"missing slot {len(pairs)}")
        try:
            pair = (labels.alice_index(fields[1]), labels.bob_index(fields[2]))
        except TableError as exc:
            raise RunfileError(lineno, str(exc)) from None
        outcomes = []
        for name, tok in (("a", fields[3]), ("b", fields[4])):
            if tok not in _TOKENS:
                raise RunfileError(lineno, f"bad outcome {name}={tok}")
            outcomes.append(_TOKENS[tok])
        pairs.append(pair)
        out_a.append(outcomes[0])
        out_b.append(outcomes[1])
    if not header_seen:
        raise RunfileError(0, "missing header line")
    schedule = SettingSchedule.from_pairs(pairs, labels)
    return RunTable(schedule, np.array(out_a, dtype=np.int8), np.array(out_b, dtype=np.int8))


def parse_runfile(path: Union[str, Path]) -> RunTable:
    with open(path, newline="") as fh:
        return read_runfile(fh)


def _fmt_angle(x: float) -> str:
    return f"{x:g}"


def write_runfile(table: RunTable, stream: TextIO) -> None:
    labels = table.labels
    ang = labels.angles
    for station, names, idx in (("alice", labels.alice, 0), ("bob", labels.bob, 2)):
        if ang is None:
            stream.write(f"# {station}: {names[0]}, {names[1]}\n")
        else:
            stream.write(
                f"# {station}: {names[0]}={_fmt_angle(ang[idx])}, "
                f"{names[1]}={_fmt_angle(ang[idx + 1])}\n"
            )
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    tok = {1: "+1", -1: "-1", 0: "0"}
    for slot, ((i, j), u, v) in enumerate(
        zip(table.schedule.pairs(), table.a.tolist(), table.b.tolist())
    ):
        writer.writerow([slot, labels.alice[i], labels.bob[j], tok[u], tok[v]])


def emit_runfile(table: RunTable, path: Union[str, Path, None] = None) -> str:
    buf = io.StringIO()
    write_runfile(table, buf)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# -- table files -------------------------------------------------------------


def _labels_json(labels: SettingLabels) -> dict:
    return {
        "alice": list(labels.alice),
        "bob": list(labels.bob),
        "angles": None if labels.angles is None else list(labels.angles),
    }


def _cells(values, factual) -> list:
    out = []
    for v, f in zip(values, factual):
        if f is None:
            out.append({"value": int(v)})
        else:
            out.append({"value": int(v), "kind": "factual" if f else "counterfactual"})
    return out


def table_to_json(table: Table) -> dict:
    doc: dict = {"format": FORMAT_NAME, "format_version": FORMAT_VERSION}
    if isinstance(table, CondensedTable):
        doc["kind"] = "condensed"
        fac = table.factual
        doc["rows"] = {
            name: _cells(table.values[r], [None] * len(table) if fac is None else fac[r].tolist())
            for r, name in enumerate(ROWS)
        }
        return doc
    labels = table.labels
    doc["labels"] = _labels_json(labels)
    doc["schedule"] = [[labels.alice[i], labels.bob[j]] for i, j in table.schedule.pairs()]
    if isinstance(table, CompleteTable):
        doc["kind"] = "complete"
        doc["with_discards"] = table.with_discards
        fac = table.factual
        doc["rows"] = {
            name: _cells(table.values[r], fac[r].tolist()) for r, name in enumerate(ROWS)
        }
    else:
        doc["kind"] = "run"
        doc["rows"] = {
            name: [None if c is None else {"value": c, "kind": "factual"} for c in row]
            for name, row in zip(ROWS, table.grid())
        }
    return doc


def dumps_table(table: Table) -> str:
    return json.dumps(table_to_json(table), indent=1) + "\n"


def emit_tablefile(table: Table, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_table(table))


def _read_rows(doc: dict, n: int, allow_null: bool):
    rows = doc.get("rows")
    if not isinstance(rows, dict) or set(rows) != set(ROWS):
        raise TableError(f"table file needs rows {list(ROWS)}")
    values = np.zeros((4, n), dtype=np.int8)
    kinds = np.empty((4, n), dtype=object)
    present = np.ones((4, n), dtype=bool)
    for r, name in enumerate(ROWS):
        cells = rows[name]
        if len(cells) != n:
            raise TableError(f"row {name} has {len(cells)} cells, expected {n}")
        for i, cell in enumerate(cells):
            if cell is None:
                if not allow_null:
                    raise TableError(f"row {name} slot {i} is empty")
                present[r, i] = False
                continue
            values[r, i] = cell["value"]
            kinds[r, i] = cell.get("kind")
    return values, kinds, present


def table_from_json(doc: dict) -> Table:
    if doc.get("format") != FORMAT_NAME:
        raise TableError("not a bellseries table file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise TableError(f"unsupported table format version {doc.get('format_version')}")
    kind = doc.get("kind")
    if kind == "condensed":
        n = len(doc["rows"]["a"])
        values, kinds, _ = _read_rows(doc, n, allow_null=False)
        tagged = kinds != None  # noqa: E711
        if tagged.all():
            factual = kinds == "factual"
        elif not tagged.any():
            factual = None
        else:
            raise TableError("condensed table mixes tagged and untagged cells")
        return CondensedTable.from_rows(values, factual)

    lab = doc["labels"]
    labels = SettingLabels(
        tuple(lab["alice"]), tuple(lab["bob"]), None if lab["angles"] is None else tuple(lab["angles"])
    )
    pairs = [(labels.alice_index(x), labels.bob_index(y)) for x, y in doc["schedule"]]
    schedule = SettingSchedule.from_pairs(pairs, labels)
    n = len(schedule)
    measured = schedule.measured_mask()
    if kind == "run":
        values, kinds, present = _read_rows(doc, n, allow_null=True)
        if not np.array_equal(present, measured):
            raise TableError("run table cells do not match the schedule")
        if np.any((kinds != "factual") & present):
            raise TableError("run tables hold factual cells only")
        a = np.where(schedule.alice == 0, values[0], values[2])
        b = np.where(schedule.bob == 0, values[1], values[3])
        return RunTable(schedule, a, b)
    if kind == "complete":
        values, kinds, _ = _read_rows(doc, n, allow_null=False)
        if not np.array_equal(kinds == "factual", measured):
            raise TableError("factual/counterfactual tags do not match the schedule")
        return CompleteTable(schedule, values, bool(doc.get("with_discards", False)))
    raise TableError(f"unknown table kind {kind!r}")


def loads_table(text: str) -> Table:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableError(f"table file is not valid JSON: {exc}") from None
    try:
        return table_from_json(doc)
    except (KeyError, TypeError) as exc:
        raise TableError(f"malformed table file: {exc!r}") from None


def parse_tablefile(path: Union[str, Path]) -> Table:
    return loads_table(Path(path).read_text())
