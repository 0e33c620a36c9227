"""Delimited and JSON outputs of a first-passage run."""
from __future__ import annotations

import io
import json
import os
from pathlib import Path

import numpy as np

PMF_HEADER = "n,t,probability,error_bound"


def fmt(x) -> str:
    """17 significant digits, locale independent."""
    return format(float(x), ".17g")


def _write_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def pmf_csv_text(values, dt: float, error_bounds=None, rows: int | None = None) -> str:
    values = np.asarray(values, dtype=float)
    rows = values.size if rows is None else rows
    buf = io.StringIO()
    if error_bounds is None:
        buf.write("n,t,probability\n")
        for n in range(rows):
            buf.write(f"{n},{fmt(n * dt)},{fmt(values[n])}\n")
    else:
        buf.write(PMF_HEADER + "\n")
        for n in range(rows):
            buf.write(f"{n},{fmt(n * dt)},{fmt(values[n])},{fmt(error_bounds[n])}\n")
    return buf.getvalue()


def spectrum_csv_text(values, dt: float) -> str:
    values = np.asarray(values, dtype=complex)
    N = values.size
    buf = io.StringIO()
    buf.write("k,omega,re,im\n")
    for k, v in enumerate(values):
        buf.write(f"{k},{fmt(k / (N * dt))},{fmt(v.real)},{fmt(v.imag)}\n")
    return buf.getvalue()


def inverse_csv_text(values, dt: float) -> str:
    values = np.asarray(values, dtype=complex)
    buf = io.StringIO()
    buf.write("n,t,re,im\n")
    for n, v in enumerate(values):
        buf.write(f"{n},{fmt(n * dt)},{fmt(v.real)},{fmt(v.imag)}\n")
    return buf.getvalue()


def write_result(result, prefix, inputs: dict, plot: bool = False) -> dict:
    """Write ``<prefix>.pmf.csv`` and ``<prefix>.report.json`` (and optionally
    ``<prefix>.pmf.png``).  Returns the report dictionary.
    """
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_name(prefix.name + ".pmf.csv")
    json_path = prefix.with_name(prefix.name + ".report.json")
    bounds = result.error_bounds()
    rows = bounds.size
    csv_text = pmf_csv_text(result.pmf.values, result.pmf.dt, bounds, rows)
    report = {
        "pmf_path": str(csv_path),
        "rows": rows,
        "certificate": result.certificate.to_json(),
        "moments": result.moments.to_json() if result.moments else None,
        "timing": result.timing,
        "diagnostics": result.diagnostics,
        "inputs_echo": inputs,
    }
    figure = None
    if plot:
        from .plotting import plot_first_passage
        figure = prefix.with_name(prefix.name + ".pmf.png")
        plot_first_passage(result, figure)
        report["figure_path"] = str(figure)
    _write_atomic(csv_path, csv_text)
    _write_atomic(json_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
