"""Trace persistence: the fixed-header CSV format plus summary emitters.

Reals are written at 17 significant digits so files round-trip losslessly
and identical runs produce byte-identical traces apart from the wall-time
column.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ParseError
from .optimizers import IterationRecord, Trace

TRACE_HEADER = ("k,f,grad_norm,sigma,step_norm,rho,accepted,beta,"
                "momentum_sign,krylov_dim,model_decrease,wall_time_s")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(trace: Trace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in trace.records:
            fh.write(",".join([
                str(r.k), _fmt(r.f), _fmt(r.grad_norm), _fmt(r.sigma),
                _fmt(r.step_norm), _fmt(r.rho), r.accepted, _fmt(r.beta),
                str(r.momentum_sign), str(r.krylov_dim),
                _fmt(r.model_decrease), _fmt(r.wall_time_s),
            ]) + "\n")


def read_trace_csv(path) -> list[IterationRecord]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        raise ParseError(f"{path}: missing or wrong trace header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 12:
            raise ParseError(f"{path}:{lineno}: expected 12 cells")
        try:
            records.append(IterationRecord(
                k=int(cells[0]), f=float(cells[1]), grad_norm=float(cells[2]),
                sigma=float(cells[3]), step_norm=float(cells[4]),
                rho=float(cells[5]), accepted=cells[6], beta=float(cells[7]),
                momentum_sign=int(cells[8]), krylov_dim=int(cells[9]),
                model_decrease=float(cells[10]), wall_time_s=float(cells[11])))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return records


def write_summary(rows: list[dict], path_txt, path_json) -> None:
    """Emit one key: value block per optimizer plus a JSON twin."""
    path_txt = Path(path_txt)
    path_txt.parent.mkdir(parents=True, exist_ok=True)
    blocks = []
    for row in rows:
        blocks.append("\n".join(f"{k}: {v}" for k, v in row.items()))
    path_txt.write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
    Path(path_json).write_text(json.dumps(rows, indent=2, default=str) + "\n",
                               encoding="utf-8")
