"""Rendering of result documents into paper-style tables.

Rendering is a pure function of the report document: the same JSON always
produces byte-identical output.  Gains and UARs print with three decimals
and no leading zero (".121", "-.518").  In markdown the highest gain per
target is bold; in text it gets a trailing star.  Ablation marks render as
the significance arrows.
"""

from __future__ import annotations

from .experiments import APPROACHES, SCENARIOS


class ReportSchemaError(ValueError):
    """Document does not look like a known report."""


def fmt3(value: float) -> str:
    """Paper-style 3-decimal format without the leading zero."""
    text = f"{value:.3f}"
    if text.startswith("0."):
        return text[1:]
    if text.startswith("-0."):
        return "-" + text[2:]
    return text


def _cell_order(cells: dict) -> list:
    order = [f"{s}-{a}" for s in SCENARIOS for a in APPROACHES]
    known = [name for name in order if name in cells]
    extras = [name for name in sorted(cells) if name not in order]
    return known + extras


def render_report(document: dict, style: str = "text") -> str:
    if style not in ("markdown", "text"):
        raise ValueError(f"style must be markdown or text, got {style!r}")
    kind = document.get("experiment")
    if kind in ("matrix", "transfer"):
        return _render_matrix(document, style)
    if kind == "ablation":
        return _render_ablation(document, style)
    if kind == "tt":
        return _render_tt(document, style)
    raise ReportSchemaError(f"unknown report kind {kind!r}")


def _render_tt(document: dict, style: str) -> str:
    folds = " ".join(fmt3(u) for u in document["fold_uars"])
    rows = [["Target", "TT", "Folds"],
            [document["target"], fmt3(document["mean_uar"]), folds]]
    return _table(rows, style)


def _render_matrix(document: dict, style: str) -> str:
    cells = document["cells"]
    order = _cell_order(cells)
    header = ["Target", "TT"] + order
    best = max(order, key=lambda name: cells[name]["gain"]) if order else None
    row = [document["target"], fmt3(document["baseline"]["mean_uar"])]
    for name in order:
        text = fmt3(cells[name]["gain"])
        if name == best:
            text = f"**{text}**" if style == "markdown" else f"{text}*"
        row.append(text)
    return _table([header, row], style)


def _render_ablation(document: dict, style: str) -> str:
    rows_doc = document["rows"]
    row_names = ["All"] + [name for name in rows_doc if name != "All"]
    columns = _cell_order(rows_doc[row_names[0]])
    # bold/star the highest UAR per column, as in the ablation table
    best = {col: max(row_names, key=lambda r: rows_doc[r][col]["uar"]) for col in columns}
    table = [["Source"] + columns]
    for row_name in row_names:
        line = [row_name]
        for col in columns:
            cell = rows_doc[row_name][col]
            text = fmt3(cell["uar"])
            if row_name == best[col]:
                text = f"**{text}**" if style == "markdown" else f"{text}*"
            if row_name != "All":
                text += cell["mark"]
            line.append(text)
        table.append(line)
    return _table(table, style)


def _table(rows: list, style: str) -> str:
    if style == "markdown":
        lines = ["| " + " | ".join(rows[0]) + " |",
                 "|" + "|".join("---" for _ in rows[0]) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows[1:]]
        return "\n".join(lines) + "\n"
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    return "\n".join(lines) + "\n"
