"""Report emission: text tables, structured JSON and plot-ready series files.

All writers are byte-deterministic: keys are sorted, floats are printed with
fixed formats (tables) or shortest round-trip ``repr`` (JSON, series).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import OutputError
from .explain import ShapleyReport, rank_correlation_matrix
from .safe_eval import SafeReport

__all__ = [
    "cell",
    "safe_table",
    "shapley_table",
    "matrix_table",
    "to_json",
    "safe_report_from_json",
    "shapley_report_from_json",
    "series_files",
    "emit_safe_report",
    "emit_shapley_report",
]


def cell(mean: float, sd: float, digits: int = 3) -> str:
    """Format ``mean (sd)``, e.g. ``0.641 (0.015)``."""
    return f"{mean:.{digits}f} ({sd:.{digits}f})"


def _pm(mean: float, sd: float, digits: int) -> str:
    return f"{mean:.{digits}f} +- {sd:.{digits}f}"


def _render(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def safe_table(report: SafeReport, digits: int = 3) -> str:
    """One block per target: a row per metric, a column per model."""
    out = []
    targets = list(dict.fromkeys(e.target for e in report.entries))
    for t in targets:
        entries = [e for e in report.entries if e.target == t]
        metrics = [name for name, _ in entries[0].metric_rows()]
        rows = []
        for name in metrics:
            row = [name]
            for e in entries:
                stats = dict(e.metric_rows())[name]
                row.append(cell(stats.mean, stats.sd, digits))
            rows.append(row)
        out.append(f"Target: {t}\n" + _render(["Metric", *[e.model for e in entries]], rows))
    out.append("Cells are fold means with sample standard deviations in parentheses.\n")
    return "\n".join(out)


def shapley_table(report: ShapleyReport) -> str:
    """Per target: a row per feature with ``Shapley +- SD`` and ``Imp % +- SD`` per model."""
    out = []
    targets = list(dict.fromkeys(e.target for e in report.entries))
    for t in targets:
        entries = [e for e in report.entries if e.target == t]
        header = ["Feature"]
        for e in entries:
            header += [f"{e.model} Shapley +- SD", f"{e.model} Imp % +- SD"]
        stats = [(e.mean_sd("shapley"), e.mean_sd("importance")) for e in entries]
        rows = []
        for j, f in enumerate(entries[0].features):
            row = [f]
            for (sm, ss), (im, isd) in stats:
                row += [_pm(sm[j], ss[j], 4), _pm(im[j], isd[j], 2)]
            rows.append(row)
        out.append(f"Target: {t}\n" + _render(header, rows))
    return "\n".join(out)


def matrix_table(labels: Sequence[str], matrix: np.ndarray, digits: int = 3) -> str:
    rows = [[lab, *[f"{v:.{digits}f}" for v in row]] for lab, row in zip(labels, matrix)]
    return _render(["", *labels], rows)


def to_json(report: SafeReport | ShapleyReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def safe_report_from_json(text: str) -> SafeReport:
    return SafeReport.from_dict(json.loads(text))


def shapley_report_from_json(text: str) -> ShapleyReport:
    return ShapleyReport.from_dict(json.loads(text))


def _slug(s: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in s).strip("_")


def series_files(report: SafeReport) -> dict[str, str]:
    """Two-column ``fold value`` text series, one per (target, model, metric)."""
    files = {}
    for e in report.entries:
        for name, stats in e.metric_rows():
            body = "".join(f"{i + 1} {v!r}\n" for i, v in enumerate(stats.values))
            files[f"{_slug(e.target)}__{e.model}__{_slug(name)}.dat"] = "# fold value\n" + body
    return files


def _write(directory: Path, name: str, text: str) -> Path:
    path = directory / name
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def emit_safe_report(report: SafeReport, directory: str | Path) -> list[Path]:
    """Write ``safe_table.txt``, ``safe_report.json`` and ``series/*.dat``."""
    d = Path(directory)
    paths = [_write(d, "safe_table.txt", safe_table(report)),
             _write(d, "safe_report.json", to_json(report))]
    for name, text in sorted(series_files(report).items()):
        paths.append(_write(d / "series", name, text))
    return paths


def emit_shapley_report(report: ShapleyReport, directory: str | Path) -> list[Path]:
    """Write ``shapley_table.txt``, ``shapley_report.json`` and ``spearman.txt``."""
    d = Path(directory)
    labels, mat = rank_correlation_matrix(report.entries)
    return [_write(d, "shapley_table.txt", shapley_table(report)),
            _write(d, "shapley_report.json", to_json(report)),
            _write(d, "spearman.txt", matrix_table(labels, mat))]
