"""Bundled scan jobs for each figure and their canonical CSV schemas."""

from __future__ import annotations

import csv
import io
import json
from importlib import resources

from .scan import ScanJob, ScanResult, run_scan
from .verify import fmt

# figure number -> (job file, [(csv column, scan column)])
FIGURES: dict[int, tuple[str, list[tuple[str, str]]]] = {
    2: ("fig2.json", [("f", "f"), ("G", "value")]),
    3: ("fig3.json", [("f", "f"), ("det", "det")]),
    4: ("fig4.json", [("f", "f"), ("S", "S"), ("R", "scalar_R")]),
    5: ("fig5.json", [("f", "f"), ("S", "S"), ("det", "det")]),
    6: ("fig6.json", [("f", "f"), ("det", "det")]),
    7: ("fig7.json", [("f", "f"), ("R", "scalar_R"), ("R_mcur", "R_mcur")]),
}


class UnknownFigure(KeyError):
    pass


def job_path(fig: int):
    if fig not in FIGURES:
        raise UnknownFigure(f"unknown figure {fig!r}; choose from {sorted(FIGURES)}")
    return resources.files("ctrlgeom") / "figures" / FIGURES[fig][0]


def load_job(fig: int) -> ScanJob:
    return ScanJob.from_json(json.loads(job_path(fig).read_text()))


def figure_csv(fig: int, result: ScanResult) -> str:
    """Canonical CSV: only the schema columns, empty fields at singular cells."""
    schema = FIGURES[fig][1]
    cols = [result.column(src) for _, src in schema]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([name for name, _ in schema])
    for row in zip(*cols):
        w.writerow(["" if v is None else fmt(v) for v in row])
    return buf.getvalue()


def figure_data(fig: int, workers: int | None = None) -> tuple[ScanResult, str]:
    result = run_scan(load_job(fig), workers)
    return result, figure_csv(fig, result)
