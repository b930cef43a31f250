"""Linearization schemes for one backward-Euler step of the coupled system.

Every scheme is written as a quasi-Newton update ``J (x^{j+1} - x^j) = -F(x^j)``
where ``F`` is the discrete residual and ``J`` the scheme's matrix:

* ``newton``: mass weighted by d(theta)/d(psi) plus the conductivity
  derivative term in the flow block; mass weighted by ``theta + c
  d(theta)/dc`` in the transport block (``transport_derivative="printed"``
  drops the factor ``c``).
* ``picard``: as ``newton`` without the conductivity derivative.
* ``picard_two_derivative``: ``picard`` plus the cross derivatives of theta
  (monolithic coupling only).
* ``lscheme``: derivative masses replaced by ``L1`` and ``L2`` times the
  unit mass matrix.

Couplings: ``monolithic`` solves both blocks at once, ``alternate_splitting``
does one flow step then one transport step per iteration,
``nonlinear_splitting`` converges flow, then transport, and repeats.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import kernels
from .assembly import (
    apply_dirichlet,
    as_quadrature,
    assemble_advection,
    assemble_convection,
    assemble_gravity_load,
    assemble_source,
    assemble_weighted_mass,
    assemble_weighted_stiffness,
    compute_water_flux,
    element_gradient,
    unit_mass,
    E_Z,
)
from .constitutive import ConstitutiveDomainError, reaction_linearized
from .linalg import SingularMatrixError, condition_number_2norm, solve_direct
from .mesh import MeshP1
from .problems import DiscreteProblem, ProblemSpec, discretize

log = logging.getLogger(__name__)

LINEARIZATIONS = ("newton", "picard", "picard_two_derivative", "lscheme")
COUPLINGS = ("monolithic", "nonlinear_splitting", "alternate_splitting")
DEFAULT_LINEARIZATIONS = ("newton", "lscheme", "picard")


@dataclass(frozen=True)
class SchemeConfig:
    linearization: str = "newton"
    coupling: str = "monolithic"
    tau: float = 0.1
    L1: float = 0.1
    L2: float = 0.005
    eps1: float = 1e-7
    eps2: float = 1e-7
    max_iterations: int | None = None
    lagged_flux: bool = True
    full_jacobian: bool = False
    reaction_linearization: str = "semi_implicit"
    transport_derivative: str = "product_rule"
    norm: str = "l2"
    condition_numbers: str = "first_step"
    seed: int = 0

    def __post_init__(self):
        if self.linearization not in LINEARIZATIONS:
            raise ValueError(f"linearization must be one of {LINEARIZATIONS}")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}")
        if self.linearization == "lscheme" and not (self.L1 > 0 and self.L2 > 0):
            raise ValueError("the L-scheme needs L1, L2 > 0")
        if self.L1 < 0 or self.L2 < 0:
            raise ValueError("L1, L2 must be non-negative")
        if not (self.eps1 > 0 and self.eps2 > 0):
            raise ValueError("eps1, eps2 must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.norm not in ("l2", "euclidean"):
            raise ValueError("norm must be 'l2' or 'euclidean'")
        if self.condition_numbers not in ("none", "first_step", "every_step"):
            raise ValueError("condition_numbers must be none, first_step or every_step")
        if self.transport_derivative not in ("product_rule", "printed"):
            raise ValueError("transport_derivative must be product_rule or printed")
        if self.reaction_linearization not in ("semi_implicit", "printed"):
            raise ValueError("reaction_linearization must be semi_implicit or printed")

    @property
    def iteration_cap(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 10000 if self.linearization == "lscheme" else 50

    @property
    def key(self) -> str:
        return f"{self.coupling}-{self.linearization}"


@dataclass
class StateFields:
    psi: np.ndarray
    c: np.ndarray
    time: float = 0.0

    def copy(self) -> StateFields:
        return StateFields(self.psi.copy(), self.c.copy(), self.time)

    @property
    def has_negative_concentration(self) -> bool:
        return bool(np.any(self.c < -1e-10))


@dataclass
class IterationReport:
    """Convergence record of one time step.

    ``increments`` holds one ``(|dpsi|, |dc|)`` pair per iteration (per outer
    sweep for nonlinear splitting, whose inner counts are kept separately).
    """

    step: int
    time: float
    increments: list = field(default_factory=list)
    converged: bool = False
    cond_monolithic: float | None = None
    cond_flow: float | None = None
    cond_transport: float | None = None
    inner_flow_iterations: int = 0
    inner_transport_iterations: int = 0
    failure: str | None = None

    @property
    def iterations(self) -> int:
        return len(self.increments)

    @property
    def inner_iterations(self) -> int:
        return self.inner_flow_iterations + self.inner_transport_iterations

    @property
    def total_iterations(self) -> int:
        """Headline count: inner plus outer iterations for nonlinear splitting."""
        return self.iterations + self.inner_iterations


class SchemeFailure(RuntimeError):
    """A linearized system could not be solved or left the model's domain."""


# -- coefficient evaluation ----------------------------------------------------


@dataclass
class Coefficients:
    """Constitutive quantities at the quadrature points of a state."""

    psi: np.ndarray
    c: np.ndarray
    theta: np.ndarray
    theta_psi: np.ndarray
    theta_c: np.ndarray
    K: np.ndarray
    dK_dtheta: np.ndarray

    @property
    def dK_dpsi(self):
        return self.dK_dtheta * self.theta_psi

    @property
    def dK_dc(self):
        return self.dK_dtheta * self.theta_c


def evaluate_coefficients(dp: DiscreteProblem, psi, c) -> Coefficients:
    mesh, p = dp.mesh, dp.params
    psi_q = mesh.interpolate_to_quadrature(psi)
    c_q = mesh.interpolate_to_quadrature(c)
    if not (np.all(np.isfinite(psi_q)) and np.all(np.isfinite(c_q))):
        raise SchemeFailure("non-finite state")
    cap = math.inf if p.scaling_cap is None else p.scaling_cap
    out, flag = kernels.vg_fields(psi_q, c_q, p.theta_r, p.theta_s, p.n, p.alpha,
                                  p.K_s, p.a, p.b, p.log_base, cap)
    if flag == 1:
        raise ConstitutiveDomainError("negative concentration at a quadrature point")
    if flag == 2:
        raise ConstitutiveDomainError("concentration beyond the scaling's validity")
    shape = psi_q.shape
    theta, th_psi, th_c, K, dK, _ = (np.asarray(a).reshape(shape) for a in out)
    return Coefficients(psi_q, c_q, theta, th_psi, th_c, K, dK)


class StepContext:
    """Quantities fixed during one time step: previous state, flux, loads."""

    def __init__(self, dp: DiscreteProblem, config: SchemeConfig, prev: StateFields):
        self.dp = dp
        self.config = config
        self.mesh = dp.mesh
        self.prev = prev
        self.prev_coef = evaluate_coefficients(dp, prev.psi, prev.c)
        self.prev_flux = compute_water_flux(dp.mesh, prev.psi, prev.c, dp.params)
        mesh = dp.mesh
        self.N = mesh.n_nodes
        self.tau = config.tau
        self.source = assemble_source(mesh, dp.source_q)
        self.theta_prev_q = self.prev_coef.theta
        self.thetac_prev_q = self.prev_coef.theta * self.prev_coef.c
        self.stiff_D = dp.params.D * assemble_weighted_stiffness(mesh, 1.0)
        self.mass = unit_mass(mesh)
        self.free_mask = np.ones(self.N, dtype=bool)
        self.free_mask[dp.dirichlet_nodes] = False

    def flux(self, psi, c):
        if self.config.lagged_flux:
            return self.prev_flux
        return compute_water_flux(self.mesh, psi, c, self.dp.params)

    def norm(self, v) -> float:
        if self.config.norm == "euclidean":
            return float(np.linalg.norm(v))
        return float(math.sqrt(max(v @ (self.mass @ v), 0.0)))


# -- residuals -------------------------------------------------------------------


def _reaction_model(ctx: StepContext, coef: Coefficients):
    """Linearized reaction at quadrature points: value at c^j and slope."""
    if not ctx.dp.problem.reaction_enabled:
        return None, None
    slope, offset = reaction_linearized(coef.c, ctx.config.reaction_linearization)
    return slope * coef.c + offset, slope


def flow_residual(ctx: StepContext, psi, coef: Coefficients) -> np.ndarray:
    mesh, tau = ctx.mesh, ctx.tau
    r = assemble_source(mesh, coef.theta - ctx.theta_prev_q)
    r += tau * (assemble_weighted_stiffness(mesh, coef.K) @ psi)
    r += tau * assemble_gravity_load(mesh, coef.K)
    r -= tau * ctx.source
    return r


def transport_residual(ctx: StepContext, c, coef: Coefficients, flux, exact_reaction=False) -> np.ndarray:
    mesh, tau = ctx.mesh, ctx.tau
    r = assemble_source(mesh, coef.theta * coef.c - ctx.thetac_prev_q)
    r += tau * (ctx.stiff_D @ c)
    r -= tau * (assemble_convection(mesh, flux) @ c)
    if ctx.dp.problem.reaction_enabled:
        if exact_reaction:
            rq = coef.c / (1.0 + coef.c)
        else:
            rq, _ = _reaction_model(ctx, coef)
        r += tau * assemble_source(mesh, rq)
    r -= tau * ctx.source
    return r


def residuals(candidate: StateFields, prev: StateFields, dp: DiscreteProblem,
              config: SchemeConfig | None = None):
    """Nodal residuals of the discrete step problem on the free nodes.

    Dirichlet rows are zeroed. The reaction enters exactly, ``c / (1 + c)``.
    """
    config = config or SchemeConfig(tau=candidate.time - prev.time or 1.0)
    ctx = StepContext(dp, config, prev)
    coef = evaluate_coefficients(dp, candidate.psi, candidate.c)
    F1 = flow_residual(ctx, candidate.psi, coef)
    F2 = transport_residual(ctx, candidate.c, coef, ctx.flux(candidate.psi, candidate.c),
                            exact_reaction=True)
    F1[~ctx.free_mask] = 0.0
    F2[~ctx.free_mask] = 0.0
    return F1, F2


# -- scheme matrices ---------------------------------------------------------------


def _flow_gradient(ctx: StepContext, psi) -> np.ndarray:
    return element_gradient(ctx.mesh, psi) + E_Z


def flow_matrix(ctx: StepContext, kind: str, psi, coef: Coefficients) -> sp.csr_matrix:
    mesh, tau = ctx.mesh, ctx.tau
    A = tau * assemble_weighted_stiffness(mesh, coef.K)
    if kind == "lscheme":
        A = A + ctx.config.L1 * ctx.mass
    else:
        A = A + assemble_weighted_mass(mesh, coef.theta_psi)
    if kind == "newton":
        A = A + tau * assemble_advection(mesh, _flow_gradient(ctx, psi), coef.dK_dpsi)
    return A.tocsr()


def transport_matrix(ctx: StepContext, kind: str, coef: Coefficients, flux) -> sp.csr_matrix:
    mesh, tau = ctx.mesh, ctx.tau
    if kind == "lscheme":
        A = assemble_weighted_mass(mesh, coef.theta) + ctx.config.L2 * ctx.mass
    elif ctx.config.transport_derivative == "printed":
        A = assemble_weighted_mass(mesh, coef.theta + coef.theta_c)
    else:
        A = assemble_weighted_mass(mesh, coef.theta + coef.c * coef.theta_c)
    A = A + tau * ctx.stiff_D - tau * assemble_convection(mesh, flux)
    _, slope = _reaction_model(ctx, coef)
    if slope is not None:
        A = A + tau * assemble_weighted_mass(mesh, slope)
    return A.tocsr()


def cross_matrices(ctx: StepContext, kind: str, psi, coef: Coefficients):
    """Off-diagonal blocks (d flow / d c, d transport / d psi) or ``(None, None)``."""
    cfg = ctx.config
    mesh, tau = ctx.mesh, ctx.tau
    if kind == "picard_two_derivative":
        return (assemble_weighted_mass(mesh, coef.theta_c),
                assemble_weighted_mass(mesh, coef.c * coef.theta_psi))
    if kind == "newton" and cfg.full_jacobian:
        B12 = assemble_weighted_mass(mesh, coef.theta_c)
        B12 = B12 + tau * assemble_advection(mesh, _flow_gradient(ctx, psi), coef.dK_dc)
        B21 = assemble_weighted_mass(mesh, coef.c * coef.theta_psi)
        return B12.tocsr(), B21.tocsr()
    return None, None


@dataclass
class LinearizedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    iterate: np.ndarray
    dirichlet: np.ndarray
    values: np.ndarray


def linearized_step(kind: str, coupling: str, ctx: StepContext, psi, c) -> LinearizedSystem:
    """Assemble the full (unreduced) system whose solution is the next iterate.

    ``coupling`` is ``monolithic``, ``flow`` or ``transport``. For the
    transport block, ``psi`` is the pressure head the water content is
    evaluated at (iterate j, or j+1 for the splittings).
    """
    dp = ctx.dp
    coef = evaluate_coefficients(dp, psi, c)
    if coupling in ("monolithic", "flow"):
        F1 = flow_residual(ctx, psi, coef)
        J11 = flow_matrix(ctx, kind, psi, coef)
    if coupling in ("monolithic", "transport"):
        flux = ctx.flux(psi, c)
        F2 = transport_residual(ctx, c, coef, flux)
        J22 = transport_matrix(ctx, kind, coef, flux)
    nodes = dp.dirichlet_nodes
    if coupling == "flow":
        return LinearizedSystem(J11, J11 @ psi - F1, psi, nodes, dp.dirichlet_psi)
    if coupling == "transport":
        return LinearizedSystem(J22, J22 @ c - F2, c, nodes, dp.dirichlet_c)
    if coupling != "monolithic":
        raise ValueError(f"unknown coupling {coupling!r}")
    B12, B21 = cross_matrices(ctx, kind, psi, coef)
    J = sp.bmat([[J11, B12], [B21, J22]], format="csr")
    x = np.concatenate([psi, c])
    F = np.concatenate([F1, F2])
    return LinearizedSystem(J, J @ x - F, x,
                            np.concatenate([nodes, nodes + ctx.N]),
                            np.concatenate([dp.dirichlet_psi, dp.dirichlet_c]))


def _solve(system: LinearizedSystem, want_condition: bool, seed: int):
    reduced = apply_dirichlet(system.matrix, system.rhs, system.dirichlet, system.values)
    cond = None
    if want_condition:
        cond = float(condition_number_2norm(reduced.matrix, seed=seed))
    try:
        x = solve_direct(reduced.matrix, reduced.rhs)
    except SingularMatrixError as exc:
        raise SchemeFailure(f"singular linearized system: {exc}") from exc
    return reduced.expand(x), cond


# -- time step ---------------------------------------------------------------------


def stopping_check(dpsi_norm: float, dc_norm: float, config: SchemeConfig) -> bool:
    """Both increments at or below their tolerances."""
    return dpsi_norm <= config.eps1 and dc_norm <= config.eps2


def solve_time_step(config: SchemeConfig, dp: DiscreteProblem, prev: StateFields,
                    step: int = 1, want_condition: bool = True,
                    initial_guess: StateFields | None = None):
    """Advance one step of length ``config.tau`` from ``prev``.

    Iterations start from ``initial_guess`` (default: ``prev``). Returns the
    last iterate and an IterationReport; non-convergence is reported, not
    raised. Singular systems and domain violations are recorded as failures.
    """
    guess = initial_guess or prev
    psi, c = guess.psi.copy(), guess.c.copy()
    psi[dp.dirichlet_nodes] = dp.dirichlet_psi
    c[dp.dirichlet_nodes] = dp.dirichlet_c
    time = prev.time + config.tau
    report = IterationReport(step=step, time=time)
    runner = {
        "monolithic": _run_monolithic,
        "alternate_splitting": _run_alternate,
        "nonlinear_splitting": _run_nonlinear_splitting,
    }[config.coupling]
    try:
        ctx = StepContext(dp, config, prev)
        psi, c = runner(ctx, psi, c, report, want_condition)
    except (SchemeFailure, ConstitutiveDomainError, FloatingPointError, ZeroDivisionError) as exc:
        report.converged = False
        report.failure = str(exc)
    return StateFields(psi, c, time), report


def _run_monolithic(ctx, psi, c, report, want_condition):
    cfg = ctx.config
    N = ctx.N
    for j in range(cfg.iteration_cap):
        system = linearized_step(cfg.linearization, "monolithic", ctx, psi, c)
        x, cond = _solve(system, want_condition and j == 0, cfg.seed)
        if j == 0 and want_condition:
            report.cond_monolithic = cond
        psi_new, c_new = x[:N], x[N:]
        dpsi, dc = ctx.norm(psi_new - psi), ctx.norm(c_new - c)
        psi, c = psi_new, c_new
        report.increments.append((dpsi, dc))
        if not (math.isfinite(dpsi) and math.isfinite(dc)):
            raise SchemeFailure("non-finite iterate")
        if stopping_check(dpsi, dc, cfg):
            report.converged = True
            break
    return psi, c


def _run_alternate(ctx, psi, c, report, want_condition):
    cfg = ctx.config
    kind = cfg.linearization
    for j in range(cfg.iteration_cap):
        first = want_condition and j == 0
        sys_f = linearized_step(kind, "flow", ctx, psi, c)
        psi_new, cond = _solve(sys_f, first, cfg.seed)
        if first:
            report.cond_flow = cond
        sys_t = linearized_step(kind, "transport", ctx, psi_new, c)
        c_new, cond = _solve(sys_t, first, cfg.seed)
        if first:
            report.cond_transport = cond
        dpsi, dc = ctx.norm(psi_new - psi), ctx.norm(c_new - c)
        psi, c = psi_new, c_new
        report.increments.append((dpsi, dc))
        if not (math.isfinite(dpsi) and math.isfinite(dc)):
            raise SchemeFailure("non-finite iterate")
        if stopping_check(dpsi, dc, cfg):
            report.converged = True
            break
    return psi, c


def _inner_loop(ctx, block, psi, c, report, want_condition):
    cfg = ctx.config
    eps = cfg.eps1 if block == "flow" else cfg.eps2
    x = psi if block == "flow" else c
    for j in range(cfg.iteration_cap):
        system = linearized_step(cfg.linearization, block, ctx, psi, c)
        first = want_condition and j == 0
        x_new, cond = _solve(system, first, cfg.seed)
        if block == "flow":
            report.inner_flow_iterations += 1
            if first:
                report.cond_flow = cond
        else:
            report.inner_transport_iterations += 1
            if first:
                report.cond_transport = cond
        d = ctx.norm(x_new - x)
        x = x_new
        if block == "flow":
            psi = x
        else:
            c = x
        if not math.isfinite(d):
            raise SchemeFailure("non-finite iterate")
        if d <= eps:
            return x, True
    return x, False


def _run_nonlinear_splitting(ctx, psi, c, report, want_condition):
    cfg = ctx.config
    for k in range(cfg.iteration_cap):
        first = want_condition and k == 0
        psi_new, ok_f = _inner_loop(ctx, "flow", psi, c, report, first)
        if not ok_f:
            report.increments.append((ctx.norm(psi_new - psi), math.nan))
            raise SchemeFailure("flow subproblem did not converge")
        c_new, ok_t = _inner_loop(ctx, "transport", psi_new, c, report, first)
        dpsi, dc = ctx.norm(psi_new - psi), ctx.norm(c_new - c)
        psi, c = psi_new, c_new
        report.increments.append((dpsi, dc))
        if not ok_t:
            raise SchemeFailure("transport subproblem did not converge")
        if stopping_check(dpsi, dc, cfg):
            report.converged = True
            break
    return psi, c


# -- whole runs ------------------------------------------------------------------------


@dataclass
class SimulationResult:
    config: SchemeConfig
    problem: str
    m: int
    trajectory: list
    reports: list
    aborted: str | None = None

    @property
    def converged(self) -> bool:
        return self.aborted is None and all(r.converged for r in self.reports)

    @property
    def total_iterations(self) -> int:
        return sum(r.total_iterations for r in self.reports)

    @property
    def final_state(self) -> StateFields:
        return self.trajectory[-1]

    def first_conditions(self):
        for r in self.reports:
            if any(v is not None for v in (r.cond_monolithic, r.cond_flow, r.cond_transport)):
                return r.cond_monolithic, r.cond_flow, r.cond_transport
        return None, None, None


def time_levels(T_final: float, tau: float) -> list:
    """Step end times; a final short step covers a non-integral T / tau."""
    n_full = int(math.floor(T_final / tau + 1e-9))
    times = [min((k + 1) * tau, T_final) for k in range(n_full)]
    if not times or T_final - times[-1] > 1e-9 * T_final:
        times.append(T_final)
    return times


def run_simulation(problem: ProblemSpec | DiscreteProblem, config: SchemeConfig,
                   mesh: MeshP1 | int = 10, snapshot_times=None,
                   stop_on_failure: bool = False) -> SimulationResult:
    """Run all time steps; non-converged steps are recorded and stepping continues.

    The run is aborted when the state becomes non-finite or leaves the
    model's domain, or a linear system is singular. ``stop_on_failure``
    additionally aborts at the first non-converged step.
    """
    dp = problem if isinstance(problem, DiscreteProblem) else discretize(problem, mesh)
    spec = dp.problem
    psi, c = dp.initial_state()
    state = StateFields(psi, c, 0.0)
    trajectory = [state.copy()]
    reports = []
    aborted = None
    wanted = None if snapshot_times is None else sorted(snapshot_times)
    t_prev = 0.0
    for step, t in enumerate(time_levels(spec.T_final, config.tau), start=1):
        cfg = config if abs((t - t_prev) - config.tau) < 1e-12 else replace(config, tau=t - t_prev)
        want_cond = config.condition_numbers == "every_step" or (
            config.condition_numbers == "first_step" and step == 1)
        new_state, report = solve_time_step(cfg, dp, state, step=step, want_condition=want_cond)
        new_state.time = t
        reports.append(report)
        if report.failure is not None:
            aborted = f"step {step}: {report.failure}"
            log.info("%s aborted: %s", config.key, aborted)
            break
        if not (np.all(np.isfinite(new_state.psi)) and np.all(np.isfinite(new_state.c))):
            aborted = f"step {step}: non-finite state"
            break
        state = new_state
        if wanted is None or any(abs(t - s) < 1e-9 for s in wanted):
            trajectory.append(state.copy())
        if stop_on_failure and not report.converged:
            aborted = f"step {step}: no convergence within {cfg.iteration_cap} iterations"
            break
        t_prev = t
    if wanted is not None and trajectory[-1].time != state.time:
        trajectory.append(state.copy())
    return SimulationResult(config, spec.name, dp.mesh.m, trajectory, reports, aborted)


# -- admissibility of L1, L2, tau --------------------------------------------------------


@dataclass
class AdmissibilityBounds:
    """Constants entering the sufficient convergence conditions of the L-scheme."""

    alpha_psi: float
    alpha_c: float
    theta_m: float
    theta_M: float
    M_u: float
    M_psi: float
    M_c: float
    K_m: float
    L_K: float
    C_omega: float = 4.0 / math.pi**2


@dataclass
class AdmissibilityReport:
    bounds: AdmissibilityBounds
    L1_required: float
    L2_required: float
    L1_ok: bool
    L2_ok: bool
    tau_flow_margin: float
    tau_transport_margin: float

    @property
    def tau_ok(self) -> bool:
        return self.tau_flow_margin >= 0.0 and self.tau_transport_margin >= 0.0

    @property
    def satisfied(self) -> bool:
        return self.L1_ok and self.L2_ok and self.tau_ok

    def summary(self) -> str:
        b = self.bounds
        return (f"L1 >= {self.L1_required:.4g}: {self.L1_ok}; "
                f"L2 >= {self.L2_required:.4g}: {self.L2_ok}; "
                f"tau margins {self.tau_flow_margin:.3g}, {self.tau_transport_margin:.3g}; "
                f"alpha_psi={b.alpha_psi:.3g}, theta in [{b.theta_m:.3g}, {b.theta_M:.3g}]")


def sample_bounds(dp: DiscreteProblem, states) -> AdmissibilityBounds:
    """Estimate the bound constants from sampled states (advisory only)."""
    th, thp, K, dK, umax, gmax, cmax = [], [], [], [], 0.0, 0.0, 0.0
    for s in states:
        coef = evaluate_coefficients(dp, s.psi, s.c)
        th.append(coef.theta.ravel())
        thp.append(coef.theta_psi.ravel())
        K.append(coef.K.ravel())
        dK.append(coef.dK_dtheta.ravel())
        u = compute_water_flux(dp.mesh, s.psi, s.c, dp.params)
        umax = max(umax, float(np.max(np.linalg.norm(u, axis=1))))
        gmax = max(gmax, float(np.max(np.linalg.norm(element_gradient(dp.mesh, s.psi), axis=1))))
        cmax = max(cmax, float(np.max(np.abs(s.c))))
    th, thp, K, dK = (np.concatenate(v) for v in (th, thp, K, dK))
    lip = float(np.max(thp))
    return AdmissibilityBounds(
        alpha_psi=1.0 / lip if lip > 0 else math.inf,
        alpha_c=0.0,
        theta_m=float(th.min()),
        theta_M=float(th.max()),
        M_u=umax,
        M_psi=gmax,
        M_c=cmax,
        K_m=float(K.min()),
        L_K=float(np.max(np.abs(dK[np.isfinite(dK)]))) if np.any(np.isfinite(dK)) else 0.0,
    )


def admissibility_report(config: SchemeConfig, params, bounds: AdmissibilityBounds) -> AdmissibilityReport:
    """Check L1, L2 and tau against the sufficient conditions; never gates a run."""
    b, tau = bounds, config.tau
    L1_req = 2.0 / b.alpha_psi
    L2_req = 2.0 * b.M_c**2 / b.alpha_psi + (b.theta_M**2 / b.theta_m if b.theta_m > 0 else math.inf)
    # first condition reproduced as printed, including the repeated tau
    flow_margin = b.alpha_psi - 2.0 * tau * (tau * (b.M_psi**2 + 1.0) * b.L_K**2 / b.K_m) \
        if b.K_m > 0 else -math.inf
    transport_margin = b.theta_m + 2.0 * b.alpha_c + tau * params.D / b.C_omega \
        - 2.0 * tau * b.M_u**2 / params.D
    return AdmissibilityReport(b, L1_req, L2_req, config.L1 >= L1_req, config.L2 >= L2_req,
                               flow_margin, transport_margin)


__all__ = [
    "AdmissibilityBounds", "AdmissibilityReport", "COUPLINGS", "Coefficients",
    "IterationReport", "LINEARIZATIONS", "SchemeConfig", "SchemeFailure",
    "SimulationResult", "StateFields", "StepContext", "admissibility_report",
    "as_quadrature", "evaluate_coefficients", "linearized_step", "residuals",
    "run_simulation", "sample_bounds", "solve_time_step", "stopping_check",
    "time_levels",
]
