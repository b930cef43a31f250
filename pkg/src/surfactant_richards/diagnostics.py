"""Norms, convergence-history analytics and report writers."""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, fields

import numpy as np

from .assembly import unit_mass
from .mesh import MeshP1

SWEEP_COLUMNS = ("scheme", "coupling", "m", "tau", "total_iterations", "converged",
                 "cond_monolithic", "cond_flow", "cond_transport")


def discrete_l2_norm(field, mesh: MeshP1) -> float:
    """``sqrt(v^T M v)`` with the unit-weight P1 mass matrix."""
    v = np.asarray(field, dtype=float)
    if v.shape != (mesh.n_nodes,):
        raise ValueError(f"field has shape {v.shape}, expected ({mesh.n_nodes},)")
    return float(math.sqrt(max(float(v @ (unit_mass(mesh) @ v)), 0.0)))


def _positive_history(increments, minimum=3):
    d = np.asarray(increments, dtype=float).ravel()
    if d.size < minimum:
        raise ValueError(f"need at least {minimum} increments, got {d.size}")
    if np.any(~np.isfinite(d)) or np.any(d <= 0.0):
        raise ValueError("increments must be finite and positive")
    return d


def contraction_rate(increments) -> float:
    """Geometric mean of the ratios of successive increments."""
    d = _positive_history(increments)
    return float(np.exp(np.mean(np.log(d[1:] / d[:-1]))))


def convergence_order(increments) -> float:
    """Least-squares slope of ``log d[j+1]`` against ``log d[j]``."""
    d = _positive_history(increments)
    x, y = np.log(d[:-1]), np.log(d[1:])
    if np.ptp(x) == 0.0:
        raise ValueError("constant increments carry no order information")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def increment_ratios(increments) -> np.ndarray:
    d = np.asarray(increments, dtype=float).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        return d[1:] / d[:-1]


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    coupling: str
    m: int
    tau: float
    total_iterations: int
    converged: bool
    cond_monolithic: float | None = None
    cond_flow: float | None = None
    cond_transport: float | None = None

    @property
    def sort_key(self):
        return (self.scheme, self.coupling, self.m, self.tau)

    @classmethod
    def from_result(cls, result) -> SweepRow:
        mono, flow, transport = result.first_conditions()
        return cls(result.config.linearization, result.config.coupling, result.m,
                   result.config.tau, result.total_iterations, result.converged,
                   mono, flow, transport)


@dataclass
class SweepReport:
    """Rows keyed by (scheme, coupling, m, tau); failed runs are kept."""

    rows: list

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: r.sort_key)

    def lookup(self, scheme, coupling, m, tau):
        for r in self.rows:
            if r.sort_key == (scheme, coupling, m, tau) or (
                    r.scheme == scheme and r.coupling == coupling and r.m == m
                    and math.isclose(r.tau, tau, rel_tol=1e-12)):
                return r
        raise KeyError((scheme, coupling, m, tau))

    def to_csv(self) -> str:
        return emit_sweep_report(self.rows)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def emit_sweep_report(rows, format: str = "csv") -> str:
    """Serialize sweep rows in deterministic (scheme, coupling, m, tau) order."""
    if format != "csv":
        raise ValueError(f"unsupported format {format!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in sorted(rows, key=lambda r: r.sort_key):
        writer.writerow([_fmt(getattr(r, name)) for name in SWEEP_COLUMNS])
    return buf.getvalue()


def read_sweep_report(text: str) -> list:
    out = []
    reader = csv.DictReader(io.StringIO(text))
    types = {f.name: f.type for f in fields(SweepRow)}
    for rec in reader:
        kw = {}
        for k, v in rec.items():
            t = str(types[k])
            if v == "":
                kw[k] = None
            elif t == "bool":
                kw[k] = v == "true"
            elif t == "int":
                kw[k] = int(v)
            elif t == "str":
                kw[k] = v
            else:
                kw[k] = float(v)
        out.append(SweepRow(**kw))
    return out


def history_csv(reports) -> str:
    """Per-iteration increments of a run: step, iteration, dpsi, dc."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("step", "time", "iteration", "dpsi", "dc", "converged"))
    for rep in reports:
        for j, (dpsi, dc) in enumerate(rep.increments, start=1):
            writer.writerow((rep.step, repr(float(rep.time)), j, _fmt(float(dpsi)),
                             _fmt(float(dc)), _fmt(rep.converged)))
    return buf.getvalue()


def snapshot_text(mesh: MeshP1, state) -> str:
    """Plain-text node table ``x y psi c`` of one state."""
    buf = io.StringIO()
    buf.write(f"# time {state.time!r}\n# x y psi c\n")
    data = np.column_stack([mesh.nodes, state.psi, state.c])
    np.savetxt(buf, data, fmt="%.17g")
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


__all__ = [
    "SWEEP_COLUMNS", "SweepReport", "SweepRow", "contraction_rate", "convergence_order",
    "discrete_l2_norm", "emit_sweep_report", "history_csv", "increment_ratios",
    "read_sweep_report", "snapshot_text", "write_atomic",
]
