"""Command-line driver for single runs and parameter sweeps.

Exit codes: 0 success (non-converged runs are data, not errors), 1 usage
error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .diagnostics import SweepRow, emit_sweep_report, history_csv, snapshot_text, write_atomic
from .problems import EXAMPLES, ProblemSpec, discretize, get_problem
from .schemes import COUPLINGS, DEFAULT_LINEARIZATIONS, LINEARIZATIONS, SchemeConfig, run_simulation

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str = "1a"
    schemes: tuple = DEFAULT_LINEARIZATIONS
    couplings: tuple = COUPLINGS
    meshes: tuple = (10,)
    taus: tuple = (0.1,)
    eps1: float = 1e-7
    eps2: float = 1e-7
    L1: float = 0.1
    L2: float = 0.005
    out: str = "results"
    snapshot_times: tuple | None = None
    workers: int = 1
    seed: int = 0
    max_iters: int | None = None
    scheme_options: dict = field(default_factory=dict)
    problem_spec: ProblemSpec | None = None

    def resolve_problem(self) -> ProblemSpec:
        return self.problem_spec if self.problem_spec is not None else get_problem(self.problem)

    def scheme_configs(self):
        for lin in self.schemes:
            for coup in self.couplings:
                for m in self.meshes:
                    for tau in self.taus:
                        cfg = SchemeConfig(linearization=lin, coupling=coup, tau=tau, L1=self.L1,
                                           L2=self.L2, eps1=self.eps1, eps2=self.eps2,
                                           max_iterations=self.max_iters, seed=self.seed,
                                           **self.scheme_options)
                        yield m, cfg


# -- value parsing -------------------------------------------------------------


def parse_number(text: str) -> float:
    """Float or rational such as ``1/20``."""
    text = text.strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _split(text) -> list:
    if isinstance(text, (list, tuple)):
        return list(text)
    return [t.strip() for t in str(text).replace(";", ",").split(",") if t.strip()]


def _numbers(text) -> tuple:
    return tuple(parse_number(t) for t in _split(text))


def _ints(text) -> tuple:
    out = []
    for t in _split(text):
        try:
            out.append(int(t))
        except ValueError:
            raise UsageError(f"not an integer: {t!r}") from None
    return tuple(out)


def _choices(text, allowed, what) -> tuple:
    items = tuple(s.lower() for s in _split(text))
    bad = [s for s in items if s not in allowed]
    if bad:
        raise UsageError(f"unknown {what} {bad}; choose from {list(allowed)}")
    return items


def _bool(text) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


_SCHEME_OPTIONS = {
    "lagged_flux": _bool,
    "full_jacobian": _bool,
    "norm": str,
    "condition_numbers": str,
    "reaction_linearization": str,
    "transport_derivative": str,
}

# keys accepted in the [run] section and as CLI flags
_RUN_KEYS = ("problem", "schemes", "couplings", "mesh", "tau", "eps", "eps1", "eps2", "L1",
             "L2", "out", "workers", "snapshot_times", "max_iters", "seed")


# -- argument parsing -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="surfactant-richards",
                description="Linearization schemes for coupled Richards flow and surfactant transport.")
    p.add_argument("--problem", help="1a, 1b, 2a, 2b or a problem INI file")
    p.add_argument("--schemes", help=f"comma list from {', '.join(LINEARIZATIONS)}")
    p.add_argument("--couplings", help=f"comma list from {', '.join(COUPLINGS)}")
    p.add_argument("--mesh", help="cells per side, comma list (e.g. 10,20,40)")
    p.add_argument("--tau", help="time steps, comma list; rationals allowed (1/20)")
    p.add_argument("--eps", help="stopping tolerance for both increments")
    p.add_argument("--L1", help="flow stabilization of the L-scheme")
    p.add_argument("--L2", help="transport stabilization of the L-scheme")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", help="parallel worker processes")
    p.add_argument("--config", help="INI file with [run], [scheme] and optional problem sections")
    p.add_argument("--snapshot-times", dest="snapshot_times", help="comma list of output times")
    p.add_argument("--max-iters", dest="max_iters", help="iteration cap per time step")
    p.add_argument("--seed", help="seed for condition-number estimation")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _read_config_file(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from None
    return cp


def parse_config(argv=None) -> RunConfig:
    """Merge built-in defaults, an optional config file and CLI flags (highest priority)."""
    args = build_parser().parse_args(argv)
    values: dict = {}
    scheme_options: dict = {}
    problem_spec = None
    if args.config:
        cp = _read_config_file(args.config)
        for section in cp.sections():
            if section not in ("run", "scheme", "problem", "params", "well"):
                raise UsageError(f"unknown config section [{section}]")
        if "run" in cp:
            for key, raw in cp["run"].items():
                if key not in _RUN_KEYS:
                    raise UsageError(f"unknown key {key!r} in [run]")
                values[key] = raw
        if "scheme" in cp:
            for key, raw in cp["scheme"].items():
                if key not in _SCHEME_OPTIONS:
                    raise UsageError(f"unknown key {key!r} in [scheme]")
                scheme_options[key] = _SCHEME_OPTIONS[key](raw)
        if "problem" in cp:
            try:
                problem_spec = ProblemSpec.from_config(cp)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"invalid problem definition: {exc}") from None
    for key in _RUN_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return _build_run_config(values, scheme_options, problem_spec)


def _build_run_config(values: dict, scheme_options: dict, problem_spec) -> RunConfig:
    kw: dict = {}
    if "problem" in values:
        name = str(values["problem"]).strip()
        if name.lower() in EXAMPLES:
            kw["problem"] = name.lower()
            problem_spec = None
        elif os.path.isfile(name):
            try:
                with open(name) as fh:
                    problem_spec = ProblemSpec.from_ini(fh.read())
            except (ValueError, TypeError, configparser.Error) as exc:
                raise UsageError(f"invalid problem file {name}: {exc}") from None
            kw["problem"] = problem_spec.name
        else:
            raise UsageError(f"unknown problem {name!r}; use one of {sorted(EXAMPLES)} or a file")
    if problem_spec is not None:
        kw["problem_spec"] = problem_spec
        kw.setdefault("problem", problem_spec.name)
    if "schemes" in values:
        kw["schemes"] = _choices(values["schemes"], LINEARIZATIONS, "scheme")
    if "couplings" in values:
        kw["couplings"] = _choices(values["couplings"], COUPLINGS, "coupling")
    if "mesh" in values:
        kw["meshes"] = _ints(values["mesh"])
    if "tau" in values:
        kw["taus"] = _numbers(values["tau"])
    if "eps" in values:
        kw["eps1"] = kw["eps2"] = parse_number(values["eps"])
    for key in ("eps1", "eps2", "L1", "L2"):
        if key in values:
            kw[key] = parse_number(values[key])
    if "out" in values:
        kw["out"] = str(values["out"])
    if "workers" in values:
        kw["workers"] = _ints(values["workers"])[0] if _split(values["workers"]) else 0
    if "seed" in values:
        kw["seed"] = _ints(values["seed"])[0]
    if "max_iters" in values:
        kw["max_iters"] = _ints(values["max_iters"])[0]
    if "snapshot_times" in values:
        kw["snapshot_times"] = _numbers(values["snapshot_times"])
    cfg = RunConfig(scheme_options=scheme_options, **kw)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    for name in ("schemes", "couplings", "meshes", "taus"):
        if not getattr(cfg, name):
            raise UsageError(f"{name} selector is empty")
    if any(m < 2 for m in cfg.meshes):
        raise UsageError("mesh sizes must be >= 2")
    if any(t <= 0 for t in cfg.taus):
        raise UsageError("time steps must be positive")
    if cfg.workers < 1:
        raise UsageError("workers must be >= 1")
    if cfg.max_iters is not None and cfg.max_iters < 1:
        raise UsageError("max-iters must be >= 1")
    if "picard_two_derivative" in cfg.schemes and set(cfg.couplings) - {"monolithic"}:
        raise UsageError("picard_two_derivative couples both unknowns and needs "
                         "--couplings monolithic")
    if cfg.snapshot_times is not None:
        T = cfg.resolve_problem().T_final
        bad = [t for t in cfg.snapshot_times if not 0.0 <= t <= T + 1e-12]
        if bad:
            raise UsageError(f"snapshot times {bad} outside [0, {T}]")
    try:
        for _, sc in cfg.scheme_configs():
            pass
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


# -- execution ------------------------------------------------------------------------


def run_key(problem: str, cfg: SchemeConfig, m: int) -> str:
    return f"{problem}_{cfg.linearization}_{cfg.coupling}_m{m}_tau{cfg.tau:.6g}"


def _execute(job):
    problem, m, cfg, snapshot_times = job
    result = run_simulation(problem, cfg, m, snapshot_times=snapshot_times)
    return m, cfg, result


def run(config: RunConfig) -> int:
    """Execute the sweep and write ``sweep.csv``, histories and snapshots."""
    problem = config.resolve_problem()
    try:
        os.makedirs(config.out, exist_ok=True)
        if not os.access(config.out, os.W_OK):
            raise OSError(f"output directory {config.out} is not writable")
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    jobs = [(problem, m, cfg, config.snapshot_times) for m, cfg in config.scheme_configs()]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_execute, jobs))
    else:
        results = [_execute(j) for j in jobs]
    results.sort(key=lambda r: (r[1].linearization, r[1].coupling, r[0], r[1].tau))
    rows = []
    meshes = {}
    try:
        for m, cfg, result in results:
            rows.append(SweepRow.from_result(result))
            key = run_key(problem.name, cfg, m)
            write_atomic(os.path.join(config.out, f"history_{key}.csv"), history_csv(result.reports))
            if m not in meshes:
                meshes[m] = discretize(problem, m).mesh
            states = result.trajectory if config.snapshot_times is not None else result.trajectory[-1:]
            for state in states:
                name = f"snapshot_{key}_t{state.time:.6g}.txt"
                write_atomic(os.path.join(config.out, name), snapshot_text(meshes[m], state))
            status = "converged" if result.converged else f"failed ({result.aborted or 'iteration cap'})"
            log.info("%s: %d iterations, %s", key, result.total_iterations, status)
        write_atomic(os.path.join(config.out, "sweep.csv"), emit_sweep_report(rows))
    except OSError as exc:
        log.error("writing results failed: %s", exc)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    try:
        argv_list = sys.argv[1:] if argv is None else list(argv)
        verbose = "-v" in argv_list or "--verbose" in argv_list
        logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        config = parse_config(argv_list)
    except UsageError as exc:
        print(f"surfactant-richards: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"surfactant-richards: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
