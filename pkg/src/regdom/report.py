"""Deterministic report and CSV emission.

Reports rendered here must be byte-identical across reruns and worker
counts, so keys are sorted and every float is printed with 17 significant
digits, enough to round-trip the underlying double exactly.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import UsageError

VERSION = "0.1.0"


def _fmt_float(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        raise UsageError(f"non-finite value {v!r} cannot enter a report")
    return f"{v:.17g}"


def render_json(obj, indent: int = 0) -> str:
    """JSON text with sorted keys and fixed float formatting."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj)
        if any(not isinstance(k, str) for k in keys):
            raise UsageError("report keys must be strings")
        rows = [f'{inner}{render_json(k)}: {render_json(obj[k], indent + 1)}'
                for k in keys]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = [render_json(v, indent + 1) for v in obj]
        if not items:
            return "[]"
        return "[\n" + ",\n".join(inner + s for s in items) + f"\n{pad}]"
    raise UsageError(f"cannot serialize {type(obj).__name__} into a report")


def build_report(command: str, scenario_echo: dict, task: dict, result,
                 ok: bool) -> dict:
    return {
        "version": VERSION,
        "command": command,
        "scenario": scenario_echo,
        "task": task,
        "result": result,
        "pass": bool(ok),
    }


def write_report(report: dict, out_dir, name: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    path.write_text(render_json(report) + "\n")
    return path


def write_csv(path, header, rows) -> Path:
    """Delimited output with the same float convention as the reports."""
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return _fmt_float(float(v))
        return str(v)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path
