"""Van Genuchten-Mualem laws with surfactant-dependent capillary scaling.

All functions accept scalars or numpy arrays and broadcast. Pressure heads
``psi > 0`` are saturated: the water content is ``theta_s`` and the
conductivity ``K_s``; derivatives there vanish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConstitutiveDomainError(ValueError):
    """Raised when an argument lies outside the range where a law is defined."""


@dataclass(frozen=True)
class VanGenuchtenParams:
    """Soil and fluid constants.

    ``log_base`` selects the logarithm in the surface-tension scaling; with
    base ``e`` the default surfactant constants make ``c = 1`` invalid, so
    base 10 is the default. ``scaling_cap``, when set, evaluates the scaling
    at ``min(c, scaling_cap)``; it is off by default so that out-of-range
    concentrations raise. ``zeta`` and ``sigma0`` are carried as metadata
    only.
    """

    theta_r: float = 0.0026
    theta_s: float = 0.42
    n: float = 2.9
    alpha: float = 0.95
    K_s: float = 0.12
    a: float = 0.044
    b: float = 0.4745
    D: float = 6.0e-4
    log_base: float = 10.0
    scaling_cap: float | None = None
    zeta: float = 2.4901
    sigma0: float = 73.0
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not 0.0 <= self.theta_r < self.theta_s <= 1.0:
            raise ValueError("require 0 <= theta_r < theta_s <= 1")
        if self.n <= 1.0:
            raise ValueError("require n > 1")
        for name in ("alpha", "K_s", "a", "D"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"require {name} > 0")
        if self.b < 0.0:
            raise ValueError("require b >= 0")
        if self.log_base <= 1.0:
            raise ValueError("require log_base > 1")
        if self.scaling_cap is not None and not 0.0 <= self.scaling_cap < self.max_concentration:
            raise ValueError("scaling_cap must lie inside the scaling's domain")

    @property
    def m(self) -> float:
        return (self.n - 1.0) / self.n

    @property
    def max_concentration(self) -> float:
        """Supremum of concentrations with a finite scaling factor."""
        if self.b == 0.0:
            return math.inf
        return self.a * (self.log_base ** (1.0 / self.b) - 1.0)


def _scaling_denominator(c, p: VanGenuchtenParams):
    c = np.asarray(c, dtype=float)
    if np.any(c < 0.0):
        raise ConstitutiveDomainError("negative concentration")
    if p.scaling_cap is not None:
        c = np.minimum(c, p.scaling_cap)
    den = 1.0 - p.b * np.log1p(c / p.a) / math.log(p.log_base)
    if np.any(den <= 0.0):
        raise ConstitutiveDomainError(
            f"concentration beyond model validity (c >= {p.max_concentration:.6g})"
        )
    return den


def scaling_factor(c, p: VanGenuchtenParams):
    """Surface-tension ratio ``1 / (1 - b log(c/a + 1))``."""
    return 1.0 / _scaling_denominator(c, p)


def d_scaling_factor_d_c(c, p: VanGenuchtenParams):
    s = scaling_factor(c, p)
    c = np.asarray(c, dtype=float)
    ds = s * s * p.b / (math.log(p.log_base) * (c + p.a))
    if p.scaling_cap is not None:
        ds = np.where(c > p.scaling_cap, 0.0, ds)
    return ds


def _retention(x, p):
    # S(x) = (1 + x^n)^-m and dS/dx for x = -alpha * psi_eff >= 0
    xn = x**p.n
    base = 1.0 + xn
    S = base ** (-p.m)
    dS = -p.m * p.n * x ** (p.n - 1.0) * base ** (-p.m - 1.0)
    return S, dS


def water_content(psi, c, p: VanGenuchtenParams):
    psi = np.asarray(psi, dtype=float)
    s = scaling_factor(c, p)
    x = np.maximum(-p.alpha * s * psi, 0.0)
    S, _ = _retention(x, p)
    theta = p.theta_r + (p.theta_s - p.theta_r) * S
    out = np.where(psi > 0.0, p.theta_s, theta)
    return out[()] if out.ndim == 0 else out


def d_theta_d_psi(psi, c, p: VanGenuchtenParams):
    psi = np.asarray(psi, dtype=float)
    s = scaling_factor(c, p)
    x = np.maximum(-p.alpha * s * psi, 0.0)
    _, dS = _retention(x, p)
    out = np.where(psi > 0.0, 0.0, -(p.theta_s - p.theta_r) * dS * p.alpha * s)
    return out[()] if out.ndim == 0 else out


def d_theta_d_c(psi, c, p: VanGenuchtenParams):
    psi = np.asarray(psi, dtype=float)
    s = scaling_factor(c, p)
    ds = d_scaling_factor_d_c(c, p)
    x = np.maximum(-p.alpha * s * psi, 0.0)
    _, dS = _retention(x, p)
    out = np.where(psi > 0.0, 0.0, (p.theta_s - p.theta_r) * dS * (-p.alpha * psi) * ds)
    return out[()] if out.ndim == 0 else out


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0.0) | (theta > 1.0)) or not np.all(np.isfinite(theta)):
        raise ConstitutiveDomainError("water content outside [0, 1]")
    return theta


def hydraulic_conductivity(theta, p: VanGenuchtenParams, saturated=False):
    """Mualem conductivity ``K_s sqrt(theta) [1 - (1 - theta^(1/m))^m]``.

    ``saturated`` (bool or boolean array, typically ``psi > 0``) selects
    ``K_s`` directly.
    """
    theta = _check_theta(theta)
    inner = 1.0 - theta ** (1.0 / p.m)
    K = p.K_s * np.sqrt(theta) * (1.0 - np.maximum(inner, 0.0) ** p.m)
    out = np.where(saturated, p.K_s, K)
    return out[()] if out.ndim == 0 else out


def d_K_d_theta(theta, p: VanGenuchtenParams, saturated=False):
    theta = _check_theta(theta)
    inv_m = 1.0 / p.m
    inner = np.maximum(1.0 - theta**inv_m, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bracket = 1.0 - inner**p.m
        dK = p.K_s * (
            0.5 * bracket / np.sqrt(theta)
            + np.sqrt(theta) * inner ** (p.m - 1.0) * theta ** (inv_m - 1.0)
        )
    out = np.where(saturated, 0.0, dK)
    return out[()] if out.ndim == 0 else out


def conductivity_of_state(psi, c, p: VanGenuchtenParams):
    psi = np.asarray(psi, dtype=float)
    return hydraulic_conductivity(water_content(psi, c, p), p, saturated=psi > 0.0)


def reaction(c):
    """Langmuir-type consumption ``c / (1 + c)``."""
    c = np.asarray(c, dtype=float)
    if np.any(1.0 + c == 0.0):
        raise ZeroDivisionError("reaction undefined at c = -1")
    out = c / (1.0 + c)
    return out[()] if out.ndim == 0 else out


def reaction_linearized(c_prev, mode: str = "semi_implicit"):
    """Affine model ``R(c_next) ~ slope * c_next + offset`` around ``c_prev``.

    ``semi_implicit`` gives ``c_next / (1 + c_prev)``, exact at a fixed
    point. ``printed`` gives ``(1 + c_next) / c_prev``, kept for comparison.
    Returns ``(slope, offset)``.
    """
    c_prev = np.asarray(c_prev, dtype=float)
    if mode == "semi_implicit":
        if np.any(1.0 + c_prev == 0.0):
            raise ZeroDivisionError("1 + c_prev = 0")
        return 1.0 / (1.0 + c_prev), np.zeros_like(c_prev)
    if mode == "printed":
        if np.any(c_prev == 0.0):
            raise ZeroDivisionError("printed reaction linearization needs c_prev != 0")
        return 1.0 / c_prev, 1.0 / c_prev
    raise ValueError(f"unknown reaction linearization {mode!r}")
