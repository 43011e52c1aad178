"""Integrating-factor RK4 time stepping and the sampled run loop.

Diffusion is integrated exactly per mode by evolving exp(nu |k|^2 t) u_hat;
the convective, taming and forcing terms are treated explicitly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .diagnostics import (
    BudgetAccumulator,
    DiagnosticsSample,
    RunOutputs,
    make_sample,
    summarize,
)
from .dynamics import Forcing, explicit_rhs_coeffs
from .errors import BlowUpError, ConfigurationError
from .spectral import GridSpec, SpectralVelocity, inverse, project_coeffs
from .taming import TamingProfile

log = logging.getLogger(__name__)

SUP_GUARD = 1e-12


@dataclass(frozen=True)
class StepPolicy:
    cfl: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-8
    sample_interval: float = 1e-2

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ConfigurationError(f"must lie in (0, 1], got {self.cfl}", key="time.cfl")
        if not 0 < self.dt_min <= self.dt_max:
            raise ConfigurationError("need 0 < dt_min <= dt_max", key="time.dt_max")
        if self.sample_interval <= 0:
            raise ConfigurationError("must be positive", key="time.sample_interval")

    def cfl_dt(self, grid: GridSpec, sup_u: float) -> float:
        return min(self.dt_max, self.cfl * grid.dx / (sup_u + SUP_GUARD))


@dataclass(frozen=True)
class TimeState:
    t: float
    u: SpectralVelocity
    step_count: int = 0
    dt: float = 0.0


def _sup(c, M):
    u = inverse(c, M)
    return float(np.sqrt(np.max(np.sum(u * u, axis=0))))


def _rk4_coeffs(c, t, dt, grid, profile, forcing):
    waves = grid.waves
    e_half = np.exp(-profile.nu * waves.ksq * (0.5 * dt))
    e_full = e_half * e_half

    def N(x, s):
        return explicit_rhs_coeffs(x, s, grid, profile, forcing)

    k1 = N(c, t)
    k2 = N(e_half * (c + 0.5 * dt * k1), t + 0.5 * dt)
    k3 = N(e_half * c + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = N(e_full * c + dt * e_half * k3, t + dt)
    new = e_full * c + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    # Re-impose the invariants against round-off drift.
    return project_coeffs(new * waves.dealias_mask, waves)


def step(
    state: TimeState,
    policy: StepPolicy,
    profile: TamingProfile,
    f: Forcing,
    dt: Optional[float] = None,
) -> TimeState:
    """Advance one step.  ``dt`` defaults to the CFL choice of ``policy``."""
    grid = state.u.grid
    c = state.u.coeffs
    if dt is None:
        sup_u = _sup(c, grid.size)
        dt = policy.cfl_dt(grid, sup_u)
        if not math.isfinite(sup_u) or dt < policy.dt_min:
            raise BlowUpError(state.t, sup_u)
    new = _rk4_coeffs(c, state.t, dt, grid, profile, f)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(state.t + dt, float("inf"), "state became non-finite")
    return TimeState(
        t=state.t + dt,
        u=SpectralVelocity(new, grid, divfree=True),
        step_count=state.step_count + 1,
        dt=dt,
    )


@dataclass
class SimulationResult:
    outputs: RunOutputs
    final: TimeState
    error: Optional[BlowUpError] = None

    @property
    def samples(self):
        return self.outputs.samples

    @property
    def summary(self):
        return self.outputs.summary


def simulate(
    u0: SpectralVelocity,
    t_end: float,
    policy: StepPolicy,
    profile: TamingProfile,
    forcing: Forcing,
    t0: float = 0.0,
    keep_fields: bool = False,
    on_sample: Optional[Callable[[DiagnosticsSample, TimeState], None]] = None,
    scenario_key: str = "",
    raise_on_blowup: bool = True,
    step_count: int = 0,
) -> SimulationResult:
    """Integrate from ``t0`` to ``t_end`` sampling every ``policy.sample_interval``.

    Steps inside each sample interval are uniform; their count is the smallest
    one respecting the CFL bound at the start of each step.  Sample times are
    whole multiples of the interval, so a run restarted from one of its own
    samples retraces the original steps exactly.  Energy-budget time integrals
    are accumulated by the trapezoid rule at step resolution.
    """
    if t_end < t0:
        raise ConfigurationError("t_end must not precede the start time", key="time.t_end")
    grid = u0.grid
    waves = grid.waves
    c0 = u0.coeffs
    if not (u0.divfree and not np.any(c0[:, ~waves.dealias_mask])):
        # projecting is idempotent only up to round-off, so skip it for states
        # that already satisfy the invariants (e.g. restarts)
        c0 = project_coeffs(c0 * waves.dealias_mask, waves)
    state = TimeState(t0, SpectralVelocity(c0, grid, divfree=True), step_count)

    budget = BudgetAccumulator(profile, forcing, grid)
    budget.start(state.u, t0)
    samples = [make_sample(state.u, t0, profile, forcing, budget)]
    fields = [state.u] if keep_fields else []
    if on_sample:
        on_sample(samples[-1], state)

    h = policy.sample_interval
    first = int(math.floor(t0 / h + 1e-9)) + 1
    last = int(math.ceil(t_end / h - 1e-9))
    error = None
    try:
        for i in range(first, last + 1):
            t_next = min(i * h, t_end)
            if t_next <= t0:
                continue
            while True:
                remaining = t_next - state.t
                if remaining <= 1e-12 * h:
                    break
                sup_u = _sup(state.u.coeffs, grid.size)
                dt_cfl = policy.cfl_dt(grid, sup_u)
                if not math.isfinite(sup_u) or dt_cfl < policy.dt_min:
                    raise BlowUpError(state.t, sup_u)
                n = max(1, int(math.ceil(remaining / dt_cfl - 1e-9)))
                dt = remaining / n
                state = step(state, policy, profile, forcing, dt=dt)
                if n == 1:
                    # land exactly on the sample time
                    state = TimeState(t_next, state.u, state.step_count, dt)
                budget.advance(state.u, state.t)
            state = TimeState(t_next, state.u, state.step_count, state.dt)
            samples.append(make_sample(state.u, state.t, profile, forcing, budget))
            if keep_fields:
                fields.append(state.u)
            if on_sample:
                on_sample(samples[-1], state)
    except BlowUpError as exc:
        log.warning("blow-up: %s", exc)
        if raise_on_blowup:
            exc.partial = _package(samples, fields, grid, profile, forcing, scenario_key)
            raise
        error = exc

    outputs = _package(samples, fields, grid, profile, forcing, scenario_key)
    return SimulationResult(outputs, state, error)


def _package(samples, fields, grid, profile, forcing, scenario_key):
    return RunOutputs(
        samples=list(samples),
        fields=list(fields),
        grid=grid,
        profile=profile,
        forcing=forcing,
        summary=summarize(samples, profile, scenario_key=scenario_key),
    )


def run(config, keep_fields: bool = False, on_sample=None, initial: Optional[TimeState] = None):
    """Run a single simulation described by a ``SimConfig``.

    Returns ``(samples, summary, final_state)``.  ``initial`` resumes from a
    checkpointed state instead of the configured scenario.
    """
    result = run_full(config, keep_fields=keep_fields, on_sample=on_sample, initial=initial)
    return result.samples, result.summary, result.final


def run_full(config, keep_fields=False, on_sample=None, initial=None, raise_on_blowup=True):
    from .scenarios import make_forcing, make_initial

    grid = GridSpec(config.grid_size)
    profile = config.taming_profile()
    forcing = make_forcing(config)
    policy = config.step_policy()
    if initial is None:
        u0, t0 = make_initial(config.scenario(), grid), 0.0
    else:
        if initial.u.grid != grid:
            raise ConfigurationError("checkpoint grid differs from configuration", key="grid.size")
        u0, t0 = initial.u, initial.t
    return simulate(
        u0,
        config.t_end,
        policy,
        profile,
        forcing,
        t0=t0,
        keep_fields=keep_fields,
        on_sample=on_sample,
        scenario_key=config.scenario_key(),
        raise_on_blowup=raise_on_blowup,
        step_count=0 if initial is None else initial.step_count,
    )
