"""
BDF2-IMEX time stepper for the 2D incompressible NSE and its nudged variant.

The semi-implicit scheme advances divergence-free Fourier coefficients by

    (3 v^{n+1} - 4 v^n + v^{n-1}) / (2 tau)
        + N(v*) + nu A v^{n+1} + chi I_H v^{n+1}
        = f^{n+1} + chi I_H u^{n+1},       v* = 2 v^n - v^{n-1},

where A is the spectral Laplacian and N the dealiased, skew-symmetrized
advection term, treated explicitly through the second-order extrapolant v*.
For Fourier low-pass observers I_H is diagonal per mode, so the implicit
solve is a closed-form scalar division; for cell-average observers the
feedback is split as chi v^{n+1} - chi (I - I_H) v* which keeps the solve
diagonal while remaining second order in tau. The first step (no history)
is a single backward-Euler step, preserving global second-order accuracy.

Analytic flows used as manufactured truths live here as well. All of them
use the fundamental wavenumber 2 pi / l of the grid's torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    Grid,
    SpectralField,
    _check_same_grid,
    _phys,
    _spec,
    from_physical,
    inner,
    leray_project,
    zero_field,
)
from .observers import FourierLowPass

__all__ = [
    "ForcingSpec",
    "SolverConfig",
    "SolverState",
    "NudgeTerm",
    "trilinear_skew",
    "nonlinear_term",
    "bdf2_step",
    "initial_state",
    "forcing_field",
    "analytic_truth",
    "manufactured_truth",
    "manufactured_forcing",
    "taylor_green_field",
    "taylor_green_truth",
]

FORCING_KINDS = (
    "manufactured-periodic",
    "linear-manufactured",
    "taylor-green-zero",
    "kolmogorov",
)


@dataclass(frozen=True)
class ForcingSpec:
    """Body force / flow family. k_f, amplitude, ramp apply to 'kolmogorov';
    amplitude also scales the Taylor-Green and linear-manufactured flows."""

    kind: str = "kolmogorov"
    k_f: int = 4
    amplitude: float = 1.0
    ramp: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in FORCING_KINDS:
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "kolmogorov":
            if self.k_f < 1:
                raise ValueError(f"kolmogorov k_f must be a positive integer, got {self.k_f}")
            if self.ramp <= 0:
                raise ValueError(f"kolmogorov ramp must be positive, got {self.ramp}")


@dataclass(frozen=True)
class SolverConfig:
    """Viscosity, step size, grid, and forcing; nonlinearity is fixed
    (skew form with 2/3-rule dealiasing)."""

    nu: float
    dt: float
    grid: Grid
    forcing: ForcingSpec = field(default_factory=ForcingSpec)

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        if self.dt <= 0:
            raise ValueError(f"time step must be positive, got {self.dt}")


@dataclass(frozen=True)
class SolverState:
    """Two time levels of the velocity; v_prev is None before the first step."""

    v_now: SpectralField
    v_prev: SpectralField | None
    t: float
    step_index: int


@dataclass(frozen=True)
class NudgeTerm:
    """Feedback -chi I_H (u_data - v) with data at the new time level."""

    observer: object
    chi: float
    data: SpectralField


def initial_state(v0: SpectralField, t0: float = 0.0) -> SolverState:
    return SolverState(v_now=v0, v_prev=None, t=t0, step_index=0)


# ---------------------------------------------------------------------------
# Nonlinearity


def _advect_hat(a_hat: np.ndarray, b_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """(a . grad) b in coefficient form, output truncated to the 2/3 band."""
    ikx = 1j * grid.kx
    iky = 1j * grid.ky
    ap = _phys(a_hat, grid)
    gb = _phys(
        np.stack([ikx * b_hat[0], iky * b_hat[0], ikx * b_hat[1], iky * b_hat[1]]),
        grid,
    )
    out = _spec(
        np.stack([ap[0] * gb[0] + ap[1] * gb[1], ap[0] * gb[2] + ap[1] * gb[3]]),
        grid,
    )
    return out * grid.dealias_mask


def trilinear_skew(a: SpectralField, b: SpectralField, c: SpectralField) -> float:
    """Skew form 0.5 (a.grad b, c) - 0.5 (a.grad c, b), dealiased."""
    _check_same_grid(a.grid, b.grid)
    _check_same_grid(a.grid, c.grid)
    g = a.grid
    ad = a.coeffs * g.dealias_mask
    bd = SpectralField(g, b.coeffs * g.dealias_mask)
    cd = SpectralField(g, c.coeffs * g.dealias_mask)
    d1 = SpectralField(g, _advect_hat(ad, bd.coeffs, g))
    d2 = SpectralField(g, _advect_hat(ad, cd.coeffs, g))
    return 0.5 * inner(d1, cd) - 0.5 * inner(d2, bd)


def nonlinear_term(v_star: SpectralField) -> SpectralField:
    """Skew-symmetrized advection of v_star by itself, dealiased and
    projected onto divergence-free fields."""
    g = v_star.grid
    vd = v_star.coeffs * g.dealias_mask
    ikx = 1j * g.kx
    iky = 1j * g.ky
    # One batched transform each way: [v0, v1, dx v0, dy v0, dx v1, dy v1]
    p = _phys(
        np.stack([vd[0], vd[1], ikx * vd[0], iky * vd[0], ikx * vd[1], iky * vd[1]]),
        g,
    )
    back = _spec(
        np.stack(
            [
                p[0] * p[2] + p[1] * p[3],  # (v . grad v)_x
                p[0] * p[4] + p[1] * p[5],  # (v . grad v)_y
                p[0] * p[0],
                p[0] * p[1],
                p[1] * p[1],
            ]
        ),
        g,
    )
    div0 = ikx * back[2] + iky * back[3]
    div1 = ikx * back[3] + iky * back[4]
    n_hat = 0.5 * np.stack([back[0] + div0, back[1] + div1]) * g.dealias_mask
    return leray_project(SpectralField(g, n_hat))


# ---------------------------------------------------------------------------
# Analytic flows and forcings


def manufactured_truth(t: float, grid: Grid) -> SpectralField:
    """u(x, y, t) = e^t (cos 2 pi y, sin 2 pi x); divergence-free, ||u(0)|| = 1."""
    s = 2.0 * math.pi / grid.l
    ex = math.exp(t)
    samples = np.stack([ex * np.cos(s * grid.y), ex * np.sin(s * grid.x)])
    return from_physical(samples, grid)


def manufactured_forcing(t: float, cfg: SolverConfig) -> SpectralField:
    """Body force making manufactured_truth solve the NSE, Leray-projected
    (the pressure gradient of p = (1 + t) sin(2 pi (x - y)) is absorbed)."""
    if cfg.forcing.kind != "manufactured-periodic":
        raise ValueError(f"wrong forcing kind {cfg.forcing.kind!r}")
    g = cfg.grid
    s = 2.0 * math.pi / g.l
    ex = math.exp(t)
    cy, sx = np.cos(s * g.y), np.sin(s * g.x)
    sy, cx = np.sin(s * g.y), np.cos(s * g.x)
    # u_t + u.grad u - nu lap u + grad p
    f0 = ex * cy + s * ex * ex * (-sx * sy) + cfg.nu * s * s * ex * cy
    f1 = ex * sx + s * ex * ex * (cx * cy) + cfg.nu * s * s * ex * sx
    cp = (1.0 + t) * s * np.cos(s * (g.x - g.y))
    return leray_project(from_physical(np.stack([f0 + cp, f1 - cp]), g))


def _linear_manufactured_truth(t: float, grid: Grid, amplitude: float) -> SpectralField:
    """Debug flow (1 + t) * A * Taylor-Green; its advection term is a pure
    gradient, so the scheme reproduces it exactly in time."""
    return taylor_green_field(grid, amplitude * (1.0 + t))


def _linear_manufactured_forcing(t: float, cfg: SolverConfig) -> SpectralField:
    g = cfg.grid
    a = cfg.forcing.amplitude
    s = 2.0 * math.pi / g.l
    phi = taylor_green_field(g, 1.0)
    # u = (1 + t) a phi: u_t = a phi, -nu lap u = 2 s^2 nu (1 + t) a phi,
    # P(u . grad u) = 0.
    coeff = a + 2.0 * s * s * cfg.nu * (1.0 + t) * a
    return SpectralField(g, coeff * phi.coeffs)


def taylor_green_field(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """A (-cos 2 pi x sin 2 pi y, sin 2 pi x cos 2 pi y)."""
    s = 2.0 * math.pi / grid.l
    samples = np.stack(
        [
            -amplitude * np.cos(s * grid.x) * np.sin(s * grid.y),
            amplitude * np.sin(s * grid.x) * np.cos(s * grid.y),
        ]
    )
    return from_physical(samples, grid)


def taylor_green_truth(t: float, grid: Grid, nu: float, amplitude: float = 1.0) -> SpectralField:
    """Unforced decaying Taylor-Green vortex: amplitude e^{-2 nu (2 pi / l)^2 t}."""
    s = 2.0 * math.pi / grid.l
    return taylor_green_field(grid, amplitude * math.exp(-2.0 * nu * s * s * t))


def kolmogorov_forcing(t: float, cfg: SolverConfig) -> SpectralField:
    """amplitude * min(1, t / ramp) * (sin(2 pi k_f y / l), 0), single-mode."""
    spec = cfg.forcing
    g = cfg.grid
    if spec.k_f >= g.n // 2:
        raise ValueError(f"kolmogorov k_f={spec.k_f} not representable on n={g.n}")
    r = min(1.0, t / spec.ramp)
    f = zero_field(g)
    c = 0.5 * spec.amplitude * r
    f.coeffs[0, 0, spec.k_f] = -1j * c
    f.coeffs[0, 0, -spec.k_f] = 1j * c
    return f


def forcing_field(t: float, cfg: SolverConfig) -> SpectralField:
    kind = cfg.forcing.kind
    if kind == "manufactured-periodic":
        return manufactured_forcing(t, cfg)
    if kind == "linear-manufactured":
        return _linear_manufactured_forcing(t, cfg)
    if kind == "taylor-green-zero":
        return zero_field(cfg.grid)
    if kind == "kolmogorov":
        return kolmogorov_forcing(t, cfg)
    raise ValueError(f"unknown forcing kind {kind!r}")


def analytic_truth(t: float, cfg: SolverConfig) -> SpectralField:
    """Closed-form truth for flow families that have one."""
    kind = cfg.forcing.kind
    if kind == "manufactured-periodic":
        return manufactured_truth(t, cfg.grid)
    if kind == "linear-manufactured":
        return _linear_manufactured_truth(t, cfg.grid, cfg.forcing.amplitude)
    if kind == "taylor-green-zero":
        return taylor_green_truth(t, cfg.grid, cfg.nu, cfg.forcing.amplitude)
    raise ValueError(f"forcing kind {kind!r} has no analytic truth")


# ---------------------------------------------------------------------------
# Time stepping


def bdf2_step(state: SolverState, cfg: SolverConfig, nudge: NudgeTerm | None = None) -> SolverState:
    """Advance one step; backward Euler when no history is available yet."""
    g = cfg.grid
    tau = cfg.dt
    t_new = state.t + tau
    bootstrap = state.v_prev is None

    v_n = state.v_now.coeffs
    if bootstrap:
        v_star = state.v_now
        hist = v_n.copy()
        base, wt = 1.0, tau
    else:
        v_star = SpectralField(g, 2.0 * v_n - state.v_prev.coeffs)
        hist = 4.0 * v_n - state.v_prev.coeffs
        base, wt = 3.0, 2.0 * tau

    rhs = hist + wt * (
        forcing_field(t_new, cfg).coeffs - nonlinear_term(v_star).coeffs
    )

    implicit = base + wt * cfg.nu * g.k2
    if nudge is not None and nudge.chi != 0.0:
        _check_same_grid(nudge.data.grid, g)
        chi = nudge.chi
        obs = nudge.observer
        if isinstance(obs, FourierLowPass):
            m = obs.mask(g)
            implicit = implicit + wt * chi * m
            rhs = rhs + wt * chi * (m * nudge.data.coeffs)
        else:
            # Non-diagonal observer: implicit chi on all modes plus explicit
            # correction chi (I - I_H) v*, second order through v*.
            implicit = implicit + wt * chi
            proj_data = obs.project(nudge.data)
            proj_star = obs.project(v_star)
            rhs = rhs + wt * chi * (
                proj_data.coeffs + (v_star.coeffs - proj_star.coeffs)
            )

    new = leray_project(SpectralField(g, rhs)).coeffs / implicit
    return SolverState(
        v_now=SpectralField(g, new),
        v_prev=state.v_now,
        t=t_new,
        step_index=state.step_index + 1,
    )
