"""Benchmark problems on the unit square: Examples 1A, 1B, 2A and 2B.

Problems are plain value objects. Initial data, sources and boundary data
are derived from a handful of numbers so that every problem round-trips
through the INI format used by the CLI.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .constitutive import VanGenuchtenParams, scaling_factor
from .mesh import DIRICHLET, MeshP1, build_unit_square_mesh, classify_boundary, nearest_node

DIRICHLET_REGIONS = ("top", "none", "all")


@dataclass(frozen=True)
class Well:
    """Point well realized as a nodal Dirichlet constraint at the nearest mesh node."""

    x: float = 0.5
    y: float = 0.625
    psi: float = -10.0
    c: float = 10.0

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError("well position outside the domain")


@dataclass(frozen=True)
class ProblemSpec:
    """Coupled flow/transport benchmark.

    Initial pressure is ``psi_up`` above ``interface_y`` and
    ``psi_down_slope * y + psi_down_offset`` below it. Both equations share
    the source ``source_amplitude * cos(4/3 pi y) sin(x)`` on the upper part.
    """

    name: str
    params: VanGenuchtenParams = field(default_factory=VanGenuchtenParams)
    T_final: float = 1.0
    interface_y: float = 0.25
    psi_up: float = -2.0
    psi_down_slope: float = -1.0
    psi_down_offset: float = -0.25
    c_initial: float = 1.0
    dirichlet_region: str = "top"
    dirichlet_psi: float = -3.0
    dirichlet_c: float = 4.0
    source_amplitude: float = 0.006
    reaction_enabled: bool = False
    well: Well | None = None

    def __post_init__(self):
        if self.dirichlet_region not in DIRICHLET_REGIONS:
            raise ValueError(f"dirichlet_region must be one of {DIRICHLET_REGIONS}")
        if self.T_final <= 0.0:
            raise ValueError("T_final must be positive")
        scaling_factor(self.c_initial, self.params)

    def initial_psi(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.where(y >= self.interface_y, self.psi_up,
                        self.psi_down_slope * y + self.psi_down_offset)

    def initial_c(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.full(x.shape, self.c_initial)

    def source(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        f = self.source_amplitude * np.cos(4.0 / 3.0 * math.pi * y) * np.sin(x)
        return np.where(y >= self.interface_y, f, 0.0)

    def dirichlet_predicate(self):
        if self.dirichlet_region == "top":
            return lambda x, y: np.abs(y - 1.0) < 1e-12
        if self.dirichlet_region == "all":
            return lambda x, y: np.ones_like(x, dtype=bool)
        return None

    def without_well(self) -> ProblemSpec:
        return replace(self, well=None)

    # -- serialization -------------------------------------------------

    def to_ini(self) -> str:
        cp = _config_parser()
        cp["problem"] = {f.name: repr(getattr(self, f.name)) if isinstance(getattr(self, f.name), float)
                         else str(getattr(self, f.name))
                         for f in fields(self) if f.name not in ("params", "well")}
        cp["params"] = {f.name: repr(getattr(self.params, f.name))
                        for f in fields(self.params) if f.name != "metadata"}
        if self.well is not None:
            cp["well"] = {f.name: repr(getattr(self.well, f.name)) for f in fields(self.well)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> ProblemSpec:
        cp = _config_parser()
        cp.read_string(text)
        return cls.from_config(cp)

    @classmethod
    def from_config(cls, cp: configparser.ConfigParser) -> ProblemSpec:
        if "problem" not in cp:
            raise ValueError("problem definition needs a [problem] section")
        kw = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in cp["problem"].items():
            if key not in types or key in ("params", "well"):
                raise ValueError(f"unknown problem key {key!r}")
            kw[key] = _parse_value(raw, types[key])
        if "params" in cp:
            pkw = {}
            ptypes = {f.name: f.type for f in fields(VanGenuchtenParams)}
            for key, raw in cp["params"].items():
                if key not in ptypes or key == "metadata":
                    raise ValueError(f"unknown params key {key!r}")
                pkw[key] = _parse_value(raw, ptypes[key])
            kw["params"] = VanGenuchtenParams(**pkw)
        if "well" in cp:
            kw["well"] = Well(**{k: float(v) for k, v in cp["well"].items()})
        return cls(**kw)


def _config_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case (K_s, D, T_final)
    return cp


def _parse_value(raw: str, typ):
    raw = raw.strip()
    t = str(typ)
    if t == "str":
        return raw
    if t == "bool":
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if "None" in t and raw == "None":
        return None
    return float(raw)


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    """A problem bound to a mesh: Dirichlet DOFs, their values and nodal initial data."""

    problem: ProblemSpec
    mesh: MeshP1
    dirichlet_nodes: np.ndarray
    dirichlet_psi: np.ndarray
    dirichlet_c: np.ndarray
    source_q: np.ndarray
    well_node: int | None = None

    @property
    def params(self) -> VanGenuchtenParams:
        return self.problem.params

    def initial_state(self):
        x, y = self.mesh.nodes.T
        psi = self.problem.initial_psi(x, y).astype(float)
        c = self.problem.initial_c(x, y).astype(float)
        psi[self.dirichlet_nodes] = self.dirichlet_psi
        c[self.dirichlet_nodes] = self.dirichlet_c
        return psi, c


def discretize(problem: ProblemSpec, mesh: MeshP1 | int) -> DiscreteProblem:
    if not isinstance(mesh, MeshP1):
        mesh = build_unit_square_mesh(mesh)
    mesh = classify_boundary(mesh, problem.dirichlet_predicate())
    nodes = list(np.flatnonzero(mesh.tags == DIRICHLET))
    psi_vals = [problem.dirichlet_psi] * len(nodes)
    c_vals = [problem.dirichlet_c] * len(nodes)
    well_node = None
    if problem.well is not None:
        well_node = nearest_node(mesh, (problem.well.x, problem.well.y))
        if well_node in nodes:
            k = nodes.index(well_node)
            psi_vals[k], c_vals[k] = problem.well.psi, problem.well.c
        else:
            nodes.append(well_node)
            psi_vals.append(problem.well.psi)
            c_vals.append(problem.well.c)
    order = np.argsort(nodes, kind="stable")
    xq = mesh.quadrature_coordinates()
    return DiscreteProblem(
        problem=problem,
        mesh=mesh,
        dirichlet_nodes=np.asarray(nodes, dtype=np.int64)[order],
        dirichlet_psi=np.asarray(psi_vals, dtype=float)[order],
        dirichlet_c=np.asarray(c_vals, dtype=float)[order],
        source_q=problem.source(xq[..., 0], xq[..., 1]),
        well_node=well_node,
    )


def example_1a() -> ProblemSpec:
    """Strictly unsaturated medium."""
    return ProblemSpec(name="1a")


def example_1b() -> ProblemSpec:
    """Saturated lower part (degenerate Richards equation) with reaction."""
    return ProblemSpec(name="1b", psi_down_offset=0.25, reaction_enabled=True)


# The well concentration lies outside the domain of the surface-tension
# scaling, so the well problems evaluate the scaling at most at the
# boundary concentration of Example 1.
_WELL_PARAMS = VanGenuchtenParams(scaling_cap=4.0)


def example_2a() -> ProblemSpec:
    """Example 1A plus a well in the upper subdomain."""
    return ProblemSpec(name="2a", params=_WELL_PARAMS, well=Well())


def example_2b() -> ProblemSpec:
    """Example 2A with the initial pressure of Example 1B, run for one hour (1/24 day)."""
    return ProblemSpec(name="2b", params=_WELL_PARAMS, psi_down_offset=0.25,
                       T_final=1.0 / 24.0, well=Well())


EXAMPLES = {"1a": example_1a, "1b": example_1b, "2a": example_2a, "2b": example_2b}


def get_problem(name: str) -> ProblemSpec:
    try:
        return EXAMPLES[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(EXAMPLES)}") from None


__all__ = [
    "DiscreteProblem", "EXAMPLES", "ProblemSpec", "Well", "discretize",
    "example_1a", "example_1b", "example_2a", "example_2b", "get_problem",
]
