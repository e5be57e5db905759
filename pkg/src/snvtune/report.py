"""Consolidate scenario summaries (and acceptance results) into one report."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import records
from .errors import UsageError


@dataclass
class Report:
    document: dict
    table: str

    @property
    def passed(self) -> bool:
        return self.document["pass"]


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, dict):
        return ", ".join(f"{k}={_fmt_value(x)}" for k, x in v.items())
    return str(v)


def _as_dict(item) -> dict:
    if isinstance(item, dict):
        return item
    if hasattr(item, "to_dict"):
        return item.to_dict()
    raise UsageError(f"cannot report on {type(item).__name__}")


def _rows(doc: dict) -> list[dict]:
    if "criterion" in doc:
        detail = "; ".join(f"{c['name']}: {_fmt_value(c['value'])}" for c in doc["checks"])
        return [{"source": f"criterion {doc['criterion']}", "name": doc["title"], "value": detail,
                 "target": "all checks", "pass": doc["pass"]}]
    return [{"source": doc["scenario"], "name": c["name"], "value": _fmt_value(c["value"]),
             "target": c["target"], "pass": c["pass"]} for c in doc.get("checks", [])]


def format_table(rows: list[dict]) -> str:
    head = ("source", "check", "value", "target", "result")
    body = [(r["source"], r["name"], r["value"], r["target"], "PASS" if r["pass"] else "FAIL") for r in rows]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(head), line(["-" * w for w in widths])]
    out += [line(b) for b in body]
    n_fail = sum(not r["pass"] for r in rows)
    out.append(f"\n{len(rows) - n_fail}/{len(rows)} checks passed")
    return "\n".join(out) + "\n"


def emit_report(results, out_dir=None) -> Report:
    """Build the consolidated report; write report.json and report.txt if ``out_dir`` is given.

    ``results`` may mix ScenarioResult, acceptance Criterion objects and
    already-decoded summary dicts.
    """
    docs = [_as_dict(r) for r in results]
    if not docs:
        raise UsageError("nothing to report: no results given")
    rows = [row for d in docs for row in _rows(d)]
    document = {"results": docs, "rows": rows, "pass": all(r["pass"] for r in rows)}
    report = Report(document, format_table(rows))
    if out_dir is not None:
        records.write_json(Path(out_dir) / "report.json", document)
        records.atomic_write_text(Path(out_dir) / "report.txt", report.table)
    return report


def load_results(root) -> list[dict]:
    """Every ``summary.json`` under ``root`` (itself or one level down), in path order."""
    root = Path(root)
    if not root.is_dir():
        raise UsageError(f"{root} is not a directory")
    paths = sorted(set(root.glob("summary.json")) | set(root.glob("*/summary.json")))
    out = []
    for p in paths:
        with open(p) as fh:
            out.append(json.load(fh))
    return out
