"""
Self-adaptive selection of the nudging parameter chi.

Three controllers share one protocol: `constant` never moves chi; the
estimator-driven controller (algo1) doubles chi and repeats the step when
the observed projection error grew by more than a safety factor, and halves
the next step's chi when it fell below a tolerance; the analysis-band
controller (algo2) keeps

    chi_n - (1 / 2 nu) (1 / tau) int_{t_n}^{t_n+1} ||grad v||^2 ds

inside [chi0, 2 chi0], re-stepping with chi = 1.1 chi0 + Q when the band
quantity falls below chi0 and resetting the next step's chi when it
overshoots. All chi values are clamped to [chi0, chi_max]. Repeat loops are
bounded; on exhaustion (or when clamping would repeat the identical step)
the step is accepted and flagged, never fatal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fields import SpectralField, h1_seminorm, l2_norm
from .solver import NudgeTerm, SolverConfig, SolverState, bdf2_step

__all__ = [
    "ControllerConfig",
    "ControllerState",
    "StepOutcome",
    "StepRecord",
    "StepDiagnostics",
    "ChiController",
    "ConstantController",
    "Algo1Controller",
    "Algo2Controller",
    "ScriptedController",
    "make_controller",
    "algo1_decide",
    "algo2_decide",
    "trapezoid_band",
    "algo2_band_3d",
    "assimilate_step",
]

CONTROLLER_KINDS = ("constant", "algo1", "algo2")


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "algo2"
    chi0: float = 1.0
    chi_max: float = 1.0e6
    factor: float = 1.3
    tol: float = 0.2
    max_repeats: int = 25

    def __post_init__(self) -> None:
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.chi0 <= 0:
            raise ValueError(f"chi0 must be positive, got {self.chi0}")
        if self.chi_max < self.chi0:
            raise ValueError("chi_max must be at least chi0")
        if self.factor < 1.0:
            raise ValueError(f"factor must be >= 1, got {self.factor}")
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_repeats < 0:
            raise ValueError("max_repeats must be nonnegative")


@dataclass
class ControllerState:
    chi_n: float
    prev_estimator: float | None = None
    repeats_used: int = 0


@dataclass(frozen=True)
class StepOutcome:
    """accept: keep the step; repeat: redo it with chi_next;
    accept_then: keep the step, use chi_next from the next step on."""

    decision: str  # "accept" | "repeat" | "accept_then"
    chi_next: float | None = None
    forced: bool = False
    diagnostic: float | None = None


@dataclass(frozen=True)
class StepDiagnostics:
    """Quantities the controllers look at after a trial step."""

    proj_err_new: float  # ||I_H (u - v)|| at the new time level
    band_q: float  # trapezoid value of (1/2nu)(1/tau) int ||grad v||^2


@dataclass(frozen=True)
class StepRecord:
    """One accepted step; the CSV row plus in-memory bookkeeping."""

    step: int
    t: float
    chi: float
    err_l2: float
    rel_err: float
    proj_err: float
    rel_proj_err: float
    grad_v_sq: float
    repeats: int
    forced: bool = False

    CSV_FIELDS = ("step", "t", "chi", "err_l2", "rel_err", "proj_err",
                  "rel_proj_err", "grad_v_sq", "repeats")


def _clamp(chi: float, cfg: ControllerConfig) -> float:
    return min(max(chi, cfg.chi0), cfg.chi_max)


def trapezoid_band(nu: float, tau: float, g_n: float, g_np1: float) -> float:
    """(1 / 2 nu) (1 / tau) int ||grad v||^2 ds by the trapezoid rule."""
    if nu <= 0 or tau <= 0:
        raise ValueError("nu and tau must be positive")
    return (g_n + g_np1) / (4.0 * nu)


def algo2_band_3d(nu: float, tau: float, g4_n: float, g4_np1: float) -> float:
    """3d replacement: (2048/19683) nu^-3 (1/tau) int ||grad v||^4 dt."""
    if nu <= 0 or tau <= 0:
        raise ValueError("nu and tau must be positive")
    return (2048.0 / 19683.0) * nu ** -3 * 0.5 * (g4_n + g4_np1)


def algo1_decide(
    state: ControllerState,
    est_prev: float,
    est_new: float,
    cfg: ControllerConfig,
) -> StepOutcome:
    """Estimator-driven decision on ||I_H e||: grew by >= factor -> double
    chi and repeat; shrank below tol -> halve chi for the next step;
    otherwise accept unchanged."""
    if est_prev < 0 or est_new < 0:
        raise ValueError("estimators must be nonnegative")
    ratio = est_new / est_prev if est_prev > 0 else math.inf
    if est_prev == 0.0:
        # Degenerate history: the growth test would fire on any est_new > 0
        # although no finite chi can improve on exact data agreement.
        return StepOutcome("accept", diagnostic=ratio)
    if est_new >= cfg.factor * est_prev:
        if state.repeats_used >= cfg.max_repeats:
            return StepOutcome("accept", forced=True, diagnostic=ratio)
        chi_next = _clamp(2.0 * state.chi_n, cfg)
        if chi_next == state.chi_n:
            # Clamped: repeating would re-solve the identical step.
            return StepOutcome("accept", forced=True, diagnostic=ratio)
        return StepOutcome("repeat", chi_next=chi_next, diagnostic=ratio)
    if est_new <= cfg.tol * est_prev:
        return StepOutcome(
            "accept_then", chi_next=_clamp(0.5 * state.chi_n, cfg), diagnostic=ratio
        )
    return StepOutcome("accept", diagnostic=ratio)


def algo2_decide(state: ControllerState, q: float, cfg: ControllerConfig) -> StepOutcome:
    """Analysis-band decision on g = chi - Q: accept when chi0 <= g <= 2 chi0,
    reset next chi when g > 2 chi0, reset and repeat when g < chi0."""
    if q < 0:
        raise ValueError("band quadrature must be nonnegative")
    gap = state.chi_n - q
    if cfg.chi0 <= gap <= 2.0 * cfg.chi0:
        return StepOutcome("accept", diagnostic=gap)
    reset = _clamp(1.1 * cfg.chi0 + q, cfg)
    if gap > 2.0 * cfg.chi0:
        return StepOutcome("accept_then", chi_next=reset, diagnostic=gap)
    if state.repeats_used >= cfg.max_repeats:
        return StepOutcome("accept", forced=True, diagnostic=gap)
    if reset == state.chi_n:
        return StepOutcome("accept", forced=True, diagnostic=gap)
    return StepOutcome("repeat", chi_next=reset, diagnostic=gap)


# ---------------------------------------------------------------------------
# Controller objects


class ChiController:
    """Owns chi across a run. decide() inspects a trial step; take_repeat()
    moves chi for a re-solve; commit() finalizes an accepted step."""

    def __init__(self, cfg: ControllerConfig, chi_init: float | None = None):
        self.cfg = cfg
        chi = cfg.chi0 if chi_init is None else chi_init
        self.state = ControllerState(chi_n=_clamp(chi, cfg))

    @property
    def chi(self) -> float:
        return self.state.chi_n

    def seed_estimator(self, est0: float) -> None:
        self.state.prev_estimator = est0

    def decide(self, diag: StepDiagnostics) -> StepOutcome:
        raise NotImplementedError

    def take_repeat(self, outcome: StepOutcome) -> None:
        self.state.chi_n = outcome.chi_next
        self.state.repeats_used += 1

    def commit(self, outcome: StepOutcome, diag: StepDiagnostics) -> None:
        self.state.repeats_used = 0
        if outcome.decision == "accept_then" and outcome.chi_next is not None:
            self.state.chi_n = outcome.chi_next


class ConstantController(ChiController):
    def decide(self, diag: StepDiagnostics) -> StepOutcome:
        return StepOutcome("accept")


class Algo1Controller(ChiController):
    def decide(self, diag: StepDiagnostics) -> StepOutcome:
        if self.state.prev_estimator is None:
            raise RuntimeError("estimator history not seeded; call seed_estimator")
        return algo1_decide(self.state, self.state.prev_estimator, diag.proj_err_new, self.cfg)

    def commit(self, outcome: StepOutcome, diag: StepDiagnostics) -> None:
        super().commit(outcome, diag)
        self.state.prev_estimator = diag.proj_err_new


class Algo2Controller(ChiController):
    def decide(self, diag: StepDiagnostics) -> StepOutcome:
        return algo2_decide(self.state, diag.band_q, self.cfg)


class ScriptedController(ChiController):
    """Replays a fixed per-step chi sequence; used to audit checkpointing."""

    def __init__(self, cfg: ControllerConfig, sequence):
        super().__init__(cfg, chi_init=sequence[0])
        self.sequence = list(sequence)
        self._next = 1

    def decide(self, diag: StepDiagnostics) -> StepOutcome:
        return StepOutcome("accept")

    def commit(self, outcome: StepOutcome, diag: StepDiagnostics) -> None:
        super().commit(outcome, diag)
        if self._next < len(self.sequence):
            self.state.chi_n = self.sequence[self._next]
            self._next += 1


def make_controller(cfg: ControllerConfig, chi_init: float | None = None) -> ChiController:
    cls = {
        "constant": ConstantController,
        "algo1": Algo1Controller,
        "algo2": Algo2Controller,
    }[cfg.kind]
    return cls(cfg, chi_init=chi_init)


# ---------------------------------------------------------------------------
# One assimilation step with repeat handling


def assimilate_step(
    u_data: SpectralField,
    state: SolverState,
    controller: ChiController,
    observer,
    cfg: SolverConfig,
) -> tuple[SolverState, StepRecord]:
    """Advance the assimilated solution by one accepted step.

    The state at t_n is kept as a checkpoint; on a repeat decision the trial
    is discarded and re-run from the checkpoint with the controller's new
    chi. The returned record describes the finally accepted step. The
    controller is updated in place.
    """
    g_n = h1_seminorm(state.v_now) ** 2
    repeats = 0
    while True:
        trial = bdf2_step(state, cfg, NudgeTerm(observer, controller.chi, u_data))
        err_field = u_data - trial.v_now
        est_new = l2_norm(observer.project(err_field))
        g_np1 = h1_seminorm(trial.v_now) ** 2
        if not (math.isfinite(est_new) and math.isfinite(g_np1)):
            raise FloatingPointError(
                f"solution became non-finite at t={trial.t:.6g}; "
                "the explicit advection is unstable at this dt/grid/forcing"
            )
        diag = StepDiagnostics(
            proj_err_new=est_new,
            band_q=trapezoid_band(cfg.nu, cfg.dt, g_n, g_np1),
        )
        outcome = controller.decide(diag)
        if outcome.decision == "repeat":
            controller.take_repeat(outcome)
            repeats += 1
            continue
        break

    controller_chi_used = controller.chi
    controller.commit(outcome, diag)

    u_l2 = l2_norm(u_data)
    err = l2_norm(err_field)
    if u_l2 > 0.0:
        rel, rel_proj = err / u_l2, est_new / u_l2
    else:
        rel = 0.0 if err == 0.0 else math.inf
        rel_proj = 0.0 if est_new == 0.0 else math.inf
    record = StepRecord(
        step=trial.step_index,
        t=trial.t,
        chi=controller_chi_used,
        err_l2=err,
        rel_err=rel,
        proj_err=est_new,
        rel_proj_err=rel_proj,
        grad_v_sq=g_np1,
        repeats=repeats,
        forced=outcome.forced,
    )
    return trial, record
