"""Plain-text evaluation report with an embedded JSON block."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict

from errors import ParseError

from .metrics import EvalReport, Setting

JSON_FENCE = "```json"


def _model_to_dict(model) -> Dict[str, Any]:
    if hasattr(model, "model_dump"):
        return model.model_dump()
    return model.dict()


def _number(value) -> str:
    return "n/a" if value is None else format(float(value), ".6f")


def render_report(report: EvalReport) -> str:
    lines = [
        "# multi-label evaluation",
        f"samples: {report.num_samples}",
        f"categories: {len(report.categories)}",
        f"categories_with_positives: {len(report.included_categories)}",
        f"mAP: {_number(report.mAP)}",
        "",
    ]
    for setting in Setting:
        scores = report.setting(setting)
        title = f"top{report.k}" if setting == Setting.TOP3 else "threshold"
        lines.append(f"[{title}]")
        for name, value in scores.rates().items():
            lines.append(f"{name}: {_number(value)}")
        lines.append("")

    lines.append("[per-category AP]")
    for name in report.categories:
        lines.append(f"{name}: {_number(report.ap.get(name))}")
    lines.append("")

    lines.append(JSON_FENCE)
    lines.append(json.dumps(_model_to_dict(report), indent=2, sort_keys=True))
    lines.append("```")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_report(report))
    os.replace(tmp_path, path)
    return path


def parse_report(text: str) -> EvalReport:
    """Recover the numbers from the JSON block of a rendered report."""
    lines = text.split("\n")
    try:
        start = lines.index(JSON_FENCE) + 1
        end = lines.index("```", start)
    except ValueError:
        raise ParseError("report has no JSON block") from None
    try:
        payload = json.loads("\n".join(lines[start:end]))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON block: {exc.msg}", line=start + exc.lineno) from None
    return EvalReport(**payload)


def read_report(path: Path) -> EvalReport:
    return parse_report(Path(path).read_text(encoding="utf-8"))
