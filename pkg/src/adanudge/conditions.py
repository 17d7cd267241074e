"""
A-priori parameter conditions and phenomenological scaling estimates.

These evaluators report whether a (chi, H) pair satisfies the sufficient
conditions for uniform-in-time error decay, and what fully-developed
turbulence scaling suggests those conditions demand at a given Reynolds
number. They are diagnostics for experiment design and run reports; the
controllers never enforce them.

The 2d chi-condition is published with coefficient 1/(2 nu) although the
underlying estimate derives 2/nu; both evaluators expose the coefficient,
defaulting to the published form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "FlowScales",
    "ConditionReport",
    "h_condition",
    "chi_condition_2d",
    "chi_condition_3d",
    "refined_h_condition",
    "re_scalings",
]

_C3D = 2048.0 / 19683.0


@dataclass(frozen=True)
class FlowScales:
    """Large-scale flow descriptors; Re = L U / nu, Tstar = L / U."""

    L: float
    U: float
    nu: float
    kf: float | None = None

    def __post_init__(self) -> None:
        if self.L <= 0 or self.U <= 0 or self.nu <= 0:
            raise ValueError("L, U, nu must all be positive")
        if self.kf is not None and self.kf <= 0:
            raise ValueError("kf must be positive when given")

    @property
    def re(self) -> float:
        return self.L * self.U / self.nu

    @property
    def tstar(self) -> float:
        return self.L / self.U


@dataclass(frozen=True)
class ConditionReport:
    """Boolean verdicts with signed slacks and scaling recommendations."""

    h_ok: bool
    chi2d_ok: bool
    chi3d_ok: bool
    margins: dict = field(default_factory=dict)
    recommendations: dict | None = None

    def to_dict(self) -> dict:
        return {
            "h_ok": self.h_ok,
            "chi2d_ok": self.chi2d_ok,
            "chi3d_ok": self.chi3d_ok,
            "margins": dict(self.margins),
            "recommendations": None if self.recommendations is None else dict(self.recommendations),
        }


def _snap_zero(slack: float, scale: float) -> float:
    """Treat a slack within a few ulps of zero as exactly zero, so exact
    boundary inputs evaluate as boundary cases."""
    if abs(slack) <= 8.0 * math.ulp(scale):
        return 0.0
    return slack


def h_condition(nu: float, c1: float, h: float, chi: float) -> tuple[bool, float]:
    """nu - 2 c1^2 H^2 chi >= 0; returns (ok, slack)."""
    term = 2.0 * c1 * c1 * h * h * chi
    slack = _snap_zero(nu - term, nu + term)
    return slack >= 0.0, slack


def chi_condition_2d(
    chi: float,
    nu: float,
    avg_grad_sq: float,
    chi0: float,
    coefficient: float = 0.5,
) -> tuple[bool, float]:
    """chi - coefficient * avg ||grad u||^2 / nu >= chi0; returns (ok, slack)."""
    term = coefficient * avg_grad_sq / nu
    slack = _snap_zero(chi - term - chi0, chi + term + chi0)
    return slack >= 0.0, slack


def chi_condition_3d(
    chi: float,
    nu: float,
    avg_grad_4: float,
    chi0: float,
    coefficient: float = _C3D,
) -> tuple[bool, float]:
    """2 [chi - coefficient nu^-3 avg ||grad u||^4] >= chi0; returns (ok, slack)."""
    term = coefficient * nu ** -3 * avg_grad_4
    slack = _snap_zero(2.0 * (chi - term) - chi0, 2.0 * (chi + term) + chi0)
    return slack >= 0.0, slack


def refined_h_condition(
    chi: float,
    nu: float,
    c1: float,
    h: float,
    lambda_t_e: float,
    avg_grad_4: float,
) -> tuple[bool, float]:
    """Smooth-solution variant: the H-term is absorbed using the solution
    length scale lambda_T(e) instead of Re. Returns (ok, slack) with
    slack = 2 [chi (1 - c1^2 (H / lambda_T)^2) - (2048/19683) nu^-3 avg||grad u||^4],
    ok iff slack > 0."""
    if lambda_t_e <= 0:
        raise ValueError("lambda_t_e must be positive")
    r = c1 * h / lambda_t_e
    slack = 2.0 * (chi * (1.0 - r * r) - _C3D * nu ** -3 * avg_grad_4)
    return slack > 0.0, slack


def re_scalings(scales: FlowScales, dim: int) -> dict:
    """Order-of-magnitude demands of the conditions under fully developed
    turbulence: lower bound on chi Tstar and upper bound on H / L.

    These come from worst-case energy-dissipation estimates plus a
    spherical-cow moment assumption; treat them as indicative only.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    re = scales.re
    if dim == 2:
        if scales.kf is None:
            raise ValueError("2d scaling needs the forcing wavenumber kf")
        lkf = scales.L * scales.kf
        chi_tstar = 2.0 * lkf ** 1.5 * re ** 1.5
        h_over_l = re ** -1.25
    else:
        chi_tstar = 0.1 * re ** 5
        h_over_l = re ** -3.0
    return {
        "dim": dim,
        "re": re,
        "chi_tstar_min": chi_tstar,
        "chi_min": chi_tstar / scales.tstar,
        "h_over_l_max": h_over_l,
        "h_max": h_over_l * scales.L,
    }
