"""Report serialization: normative CSV schemas and deterministic JSON.

Floating-point numbers are written with 17 significant digits in both
formats, which round-trips IEEE doubles bit-exactly.  JSON is emitted by
a small local encoder (the stdlib writer formats floats with repr, which
is shortest-round-trip rather than fixed 17-digit).  No timestamps are
written: the same config and seed must produce byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .eigensolve import SpectrumResult
from .errors import DriftSpectraError


def fmt17(x: float) -> str:
    x = float(x)
    if x != x:
        return "NaN"  # json.loads accepts NaN/Infinity; bare 'nan' it does not
    if x in (float("inf"), float("-inf")):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


@dataclass(frozen=True)
class SpectrumTable:
    """CSV/JSON view of a SpectrumResult; ``index_base`` is 0 for Neumann
    spectra and 1 for Dirichlet spectra."""

    result: SpectrumResult = field(repr=False)
    index_base: int = 0

    def csv_rows(self):
        header = ["k", "eigenvalue", "residual"]
        rows = [[self.index_base + i, v, r]
                for i, (v, r) in enumerate(zip(self.result.eigenvalues,
                                               self.result.residuals))]
        return header, rows

    def to_dict(self):
        return {
            "index_base": self.index_base,
            "solver_path": self.result.solver,
            "iterations": self.result.iterations,
            "converged": bool(self.result.converged),
        }


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt17(v)
    return str(v)


def write_csv(report, path: str):
    """Write a report's rows under its normative header."""
    header, rows = report.csv_rows()
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")
    except OSError as exc:
        raise DriftSpectraError(f"cannot write csv {path!r}: {exc}") from exc


def _encode(value, indent: int) -> str:
    pad = " " * indent
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt17(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        inner = ",\n".join(pad + "  " + _encode(v, indent + 2) for v in value)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        inner = ",\n".join(
            pad + "  " + json.dumps(str(k)) + ": " + _encode(v, indent + 2)
            for k, v in value.items())
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(value)!r}")


def report_document(report, kind: str, config_echo: dict, version: str) -> dict:
    """JSON document: the CSV rows plus metadata and the report's own
    summary fields (fitted orders, verdicts, ...)."""
    header, rows = report.csv_rows()
    doc = {
        "version": version,
        "kind": kind,
        "config": config_echo,
        "columns": header,
        "rows": rows,
    }
    doc.update(report.to_dict())
    return doc


def write_json(doc: dict, path: str):
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(_encode(doc, 0) + "\n")
    except OSError as exc:
        raise DriftSpectraError(f"cannot write json {path!r}: {exc}") from exc
