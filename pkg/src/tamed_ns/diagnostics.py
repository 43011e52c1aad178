"""Sampled diagnostics and the checks built on them.

Each sample records Sobolev norms, the sup-norm on the grid and the terms of
the energy balance

    |u(t)|^2 + 2 int_0^t (nu |grad u|^2 + int g_N(|u|^2)|u|^2 dx) ds
        = |u_0|^2 + 2 int_0^t <f, u> ds.

Bound constants of the a priori estimates are not known, so the growth checks
test the functional form: LHS / (1 + N) and LHS / (1 + N^2) must stay bounded.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields as dc_fields
from typing import Mapping, Optional, Sequence

import numpy as np

from .dynamics import Forcing, recover_pressure, taming_physical
from .errors import ConfigurationError
from .spectral import (
    VOLUME,
    GridSpec,
    SpectralVelocity,
    divergence_ratio,
    gradient_norm_sq,
    gradient_physical,
    inner_product,
    laplacian_norm_sq,
    sobolev_norm_sq,
    weighted_sum,
)
from .taming import TamingProfile, eval_g_field

CSV_COLUMNS = (
    "t",
    "h0sq",
    "h1sq",
    "h2sq",
    "grad_sq",
    "sup_u",
    "taming_dissipation",
    "forcing_power",
    "activation",
)
TIME_TOL = 1e-12


@dataclass(frozen=True)
class DiagnosticsSample:
    t: float
    h0sq: float
    h1sq: float
    h2sq: float
    grad_sq: float
    sup_u: float
    taming_dissipation: float
    forcing_power: float
    activation: bool
    # Not part of the CSV schema; absent (None) for samples read back from disk.
    lap_sq: Optional[float] = None
    forcing_h0: Optional[float] = None
    divergence: Optional[float] = None
    cum_viscous: Optional[float] = None
    cum_taming: Optional[float] = None
    cum_forcing: Optional[float] = None
    cum_forcing_norm: Optional[float] = None

    def csv_row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]

    @property
    def laplacian_sq(self) -> float:
        if self.lap_sq is not None:
            return self.lap_sq
        # (1+k^2)^2 - 2(1+k^2) + 1 = k^4
        return max(self.h2sq - 2.0 * self.h1sq + self.h0sq, 0.0)


def taming_dissipation(u_phys: np.ndarray, profile: TamingProfile) -> float:
    """int g_N(|u|^2) |u|^2 dx by grid quadrature."""
    if not profile.enabled:
        return 0.0
    r = np.sum(u_phys * u_phys, axis=0)
    return float(VOLUME * np.mean(eval_g_field(profile, r) * r))


class BudgetAccumulator:
    """Running trapezoid integrals of the energy-balance rates."""

    def __init__(self, profile: TamingProfile, forcing: Forcing, grid: GridSpec):
        self.profile = profile
        self.forcing = forcing
        self.grid = grid
        self.t = None
        self.rates = None
        self.viscous = 0.0
        self.taming = 0.0
        self.forcing_work = 0.0
        self.forcing_norm = 0.0

    def _rates(self, u: SpectralVelocity, t: float):
        u_phys = u.to_physical()
        f = self.forcing.at(self.grid, t)
        return dict(
            u_phys=u_phys,
            grad_sq=gradient_norm_sq(u),
            taming=taming_dissipation(u_phys, self.profile),
            power=inner_product(f, u),
            f_h0=math.sqrt(sobolev_norm_sq(f, 0)),
        )

    def start(self, u, t):
        self.t, self.rates = t, self._rates(u, t)

    def advance(self, u, t):
        new = self._rates(u, t)
        old = self.rates
        h = 0.5 * (t - self.t)
        nu = self.profile.nu
        self.viscous += h * nu * (old["grad_sq"] + new["grad_sq"])
        self.taming += h * (old["taming"] + new["taming"])
        self.forcing_work += h * (old["power"] + new["power"])
        self.forcing_norm += h * (old["f_h0"] + new["f_h0"])
        self.t, self.rates = t, new


def make_sample(u, t, profile, forcing, budget: Optional[BudgetAccumulator] = None):
    if budget is not None and budget.t == t:
        rates = budget.rates
    else:
        rates = BudgetAccumulator(profile, forcing, u.grid)._rates(u, t)
    u_phys = rates["u_phys"]
    sup_u = float(np.sqrt(np.max(np.sum(u_phys * u_phys, axis=0))))
    extra = {}
    if budget is not None:
        extra = dict(
            cum_viscous=budget.viscous,
            cum_taming=budget.taming,
            cum_forcing=budget.forcing_work,
            cum_forcing_norm=budget.forcing_norm,
        )
    return DiagnosticsSample(
        t=float(t),
        h0sq=sobolev_norm_sq(u, 0),
        h1sq=sobolev_norm_sq(u, 1),
        h2sq=sobolev_norm_sq(u, 2),
        grad_sq=rates["grad_sq"],
        sup_u=sup_u,
        taming_dissipation=rates["taming"],
        forcing_power=rates["power"],
        activation=bool(sup_u * sup_u >= profile.activation_threshold()),
        lap_sq=laplacian_norm_sq(u),
        forcing_h0=rates["f_h0"],
        divergence=divergence_ratio(u),
        **extra,
    )


# -- time quadrature ----------------------------------------------------------


def _times(samples):
    return np.array([s.t for s in samples], dtype=float)


def trapezoid_weights(t: np.ndarray) -> np.ndarray:
    w = np.zeros_like(t)
    if len(t) > 1:
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
    return w


def _cumtrapz(t, y):
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


# -- energy budget ------------------------------------------------------------


@dataclass(frozen=True)
class EnergyResidual:
    value: float
    relative: bool  # False when the initial energy vanishes

    def __float__(self):
        return self.value


def energy_budget_residual(samples: Sequence[DiagnosticsSample], nu: float = 1.0) -> EnergyResidual:
    """max_t |R(t)| / |u_0|^2 for the residual R of the energy balance.

    Uses the step-resolution integrals carried by samples from a live run;
    otherwise (e.g. samples read from CSV) the trapezoid rule on the samples.
    """
    if len(samples) < 2:
        raise ConfigurationError("energy budget needs at least two samples")
    h0 = np.array([s.h0sq for s in samples])
    if all(s.cum_viscous is not None for s in samples):
        drain = np.array([s.cum_viscous + s.cum_taming for s in samples])
        work = np.array([s.cum_forcing for s in samples])
    else:
        t = _times(samples)
        drain = _cumtrapz(
            t, np.array([nu * s.grad_sq + s.taming_dissipation for s in samples])
        )
        work = _cumtrapz(t, np.array([s.forcing_power for s in samples]))
    R = h0 + 2.0 * drain - h0[0] - 2.0 * work
    worst = float(np.max(np.abs(R)))
    if h0[0] > 0:
        return EnergyResidual(worst / h0[0], True)
    return EnergyResidual(worst, False)


# -- L^2 bound ----------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    ok: bool
    worst_slack: float  # relative; negative means violated


def verify_l2_bound(samples, f_norm_integral=None, tol: float = 1e-7) -> BoundCheck:
    """Check |u(t)| <= |u_0| + int_0^t |f| at every sample.

    ``f_norm_integral`` gives the cumulative forcing-norm integral at each
    sample; by default it comes from the samples themselves.
    """
    norms = np.sqrt(np.array([s.h0sq for s in samples]))
    if f_norm_integral is None:
        if all(s.cum_forcing_norm is not None for s in samples):
            F = np.array([s.cum_forcing_norm for s in samples])
        elif all(s.forcing_h0 is not None for s in samples):
            F = _cumtrapz(_times(samples), np.array([s.forcing_h0 for s in samples]))
        else:
            F = np.zeros(len(samples))
    else:
        F = np.broadcast_to(np.asarray(f_norm_integral, dtype=float), norms.shape)
    bound = norms[0] + F
    scale = np.where(bound > 0, bound, 1.0)
    slack = (bound - norms) / scale
    # equality holds trivially at the first sample, so it is left out of the margin
    worst = float(slack[1:].min()) if len(slack) > 1 else 0.0
    return BoundCheck(worst >= -tol, worst)


def h0_nonincreasing(samples, tol: float = 1e-7) -> bool:
    norms = np.sqrt(np.array([s.h0sq for s in samples]))
    return bool(np.all(norms[1:] <= norms[:-1] * (1.0 + tol) + 1e-300))


# -- activation and sup-norm ratios --------------------------------------------


def activation_measure(samples, N: float) -> float:
    """Discrete Lebesgue measure of {t : sup_x |u| >= sqrt(N)}.

    Each sample carries its trapezoid weight, so the result lies in [0, T].
    """
    if not N > 0:
        raise ConfigurationError("activation measure needs N > 0", key="taming.N")
    t = _times(samples)
    active = np.array([s.sup_u**2 >= N for s in samples])
    return float(np.sum(trapezoid_weights(t)[active]))


def first_activation_time(samples, N: float) -> Optional[float]:
    for s in samples:
        if s.sup_u**2 >= N:
            return s.t
    return None


def agmon_ratio(samples) -> Optional[float]:
    """max_t sup|u|^2 / (|Lap u| |grad u|), skipping near-trivial states."""
    grads = np.array([s.grad_sq for s in samples])
    if grads.size == 0 or grads.max() <= 0:
        return None
    floor = 1e-14 * grads.max()
    best = None
    for s in samples:
        lap = s.laplacian_sq
        if s.grad_sq <= floor or lap <= 0:
            continue
        ratio = s.sup_u**2 / math.sqrt(lap * s.grad_sq)
        best = ratio if best is None else max(best, ratio)
    return best


# -- run-level summary ---------------------------------------------------------


@dataclass(frozen=True)
class RunSummary:
    scenario_key: str
    N: Optional[float]
    nu: float
    taming_enabled: bool
    t_end: float
    n_samples: int
    energy_residual_max: float
    energy_residual_relative: bool
    activation_measure: float
    first_activation_time: Optional[float]
    sup_h0sq: float
    int_h1sq: float
    sup_h1sq: float
    int_h2sq: float
    sup_h2sq: float
    agmon_ratio_max: Optional[float]
    l2_bound_ok: bool
    l2_bound_slack: float
    divergence_max: float
    divergence_ok: bool

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dc_fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def summarize(samples, profile: TamingProfile, scenario_key: str = "") -> RunSummary:
    t = _times(samples)
    w = trapezoid_weights(t)
    h1 = np.array([s.h1sq for s in samples])
    h2 = np.array([s.h2sq for s in samples])
    if len(samples) >= 2:
        er = energy_budget_residual(samples, profile.nu)
    else:
        er = EnergyResidual(0.0, samples[0].h0sq > 0)
    if profile.enabled and profile.N > 0:
        act = activation_measure(samples, profile.N)
        first = first_activation_time(samples, profile.N)
    elif profile.enabled:
        act, first = float(t[-1] - t[0]), float(t[0])
    else:
        act, first = 0.0, None
    l2 = verify_l2_bound(samples)
    div = max((s.divergence or 0.0) for s in samples)
    return RunSummary(
        scenario_key=scenario_key,
        N=profile.N if profile.enabled else None,
        nu=profile.nu,
        taming_enabled=profile.enabled,
        t_end=float(t[-1]),
        n_samples=len(samples),
        energy_residual_max=er.value,
        energy_residual_relative=er.relative,
        activation_measure=act,
        first_activation_time=first,
        sup_h0sq=float(max(s.h0sq for s in samples)),
        int_h1sq=float(np.dot(w, h1)),
        sup_h1sq=float(h1.max()),
        int_h2sq=float(np.dot(w, h2)),
        sup_h2sq=float(h2.max()),
        agmon_ratio_max=agmon_ratio(samples),
        l2_bound_ok=l2.ok,
        l2_bound_slack=l2.worst_slack,
        divergence_max=div,
        divergence_ok=div <= 1e-12,
    )


# -- growth envelopes in N ---------------------------------------------------------


@dataclass(frozen=True)
class GrowthReport:
    envelope: str
    Ns: list
    lhs: list
    ratios: list
    bound: float
    ok: bool
    fitted_exponent: Optional[float]

    def to_dict(self):
        return asdict(self)


def _growth(sweep: Mapping[float, RunSummary], lhs_of, env_of, name, slack=2.0):
    if len(sweep) < 3:
        raise ConfigurationError("growth checks need at least three values of N", key="experiment.N_list")
    keys = {s.scenario_key for s in sweep.values()}
    if len(keys) > 1:
        raise ConfigurationError(f"sweep mixes scenarios: {sorted(keys)}")
    Ns = sorted(float(n) for n in sweep)
    by_n = {float(n): s for n, s in sweep.items()}
    lhs = np.array([lhs_of(by_n[n]) for n in Ns])
    ratios = lhs / np.array([env_of(n) for n in Ns])
    bound = slack * ratios[0]
    exponent = None
    if np.all(lhs > 0):
        exponent = float(np.polyfit(np.log1p(Ns), np.log(lhs), 1)[0])
    return GrowthReport(
        envelope=name,
        Ns=Ns,
        lhs=lhs.tolist(),
        ratios=ratios.tolist(),
        bound=float(bound),
        ok=bool(np.all(ratios <= bound)),
        fitted_exponent=exponent,
    )


def verify_h1_growth(sweep: Mapping[float, RunSummary]) -> GrowthReport:
    """[sup |u_N|_{H1}^2 + int |u_N|_{H2}^2] / (1 + N) bounded across the sweep."""
    return _growth(sweep, lambda s: s.sup_h1sq + s.int_h2sq, lambda n: 1.0 + n, "1+N")


def verify_h2_growth(sweep: Mapping[float, RunSummary]) -> GrowthReport:
    """sup |u_N|_{H2}^2 / (1 + N^2) bounded across the sweep."""
    return _growth(sweep, lambda s: s.sup_h2sq, lambda n: 1.0 + n * n, "1+N^2")


# -- whole-run outputs ------------------------------------------------------------


@dataclass
class RunOutputs:
    samples: list
    fields: list  # SpectralVelocity per sample, empty unless kept
    grid: GridSpec
    profile: TamingProfile
    forcing: Forcing
    summary: RunSummary

    @property
    def times(self) -> np.ndarray:
        return _times(self.samples)


def _check_comparable(a: RunOutputs, b: RunOutputs):
    if a.grid != b.grid:
        raise ConfigurationError("runs live on different grids", key="grid.size")
    ta, tb = a.times, b.times
    if ta.shape != tb.shape or np.max(np.abs(ta - tb), initial=0.0) > TIME_TOL * max(1.0, ta.max(initial=0)):
        raise ConfigurationError("runs have different sample times", key="time.sample_interval")
    if len(a.fields) != len(ta) or len(b.fields) != len(tb):
        raise ConfigurationError("runs were not kept with fields")


def compare_runs(a: RunOutputs, b: RunOutputs, region=None) -> float:
    """Space-time L^2 distance (int_0^T int_region |a - b|^2)^(1/2).

    ``region`` is None for the full torus or ((x0, x1), (y0, y1), (z0, z1)).
    """
    _check_comparable(a, b)
    w = trapezoid_weights(a.times)
    total = 0.0
    if region is None:
        waves = a.grid.waves
        for wi, fa, fb in zip(w, a.fields, b.fields):
            d = np.sum(np.abs(fa.coeffs - fb.coeffs) ** 2, axis=0)
            total += wi * VOLUME * weighted_sum(d, waves)
    else:
        X = a.grid.mesh()
        mask = np.ones(a.grid.physical_shape, bool)
        for xi, (lo, hi) in zip(X, region):
            mask &= (xi >= lo) & (xi <= hi)
        cell = a.grid.dx**3
        for wi, fa, fb in zip(w, a.fields, b.fields):
            d = fa.to_physical() - fb.to_physical()
            total += wi * cell * float(np.sum(np.sum(d * d, axis=0)[mask]))
    return math.sqrt(max(total, 0.0))


def embed(u: SpectralVelocity, grid: GridSpec) -> np.ndarray:
    """Zero-pad (or truncate) coefficients onto another grid's half spectrum."""
    M_src, M_dst = u.grid.size, grid.size
    K = min(M_src, M_dst) // 2 - 1
    ks = np.arange(-K, K + 1)
    src_idx = np.ix_(ks % M_src, ks % M_src)
    dst_idx = np.ix_(ks % M_dst, ks % M_dst)
    out = np.zeros((3,) + grid.spectral_shape, complex)
    for j in range(3):
        out[j][dst_idx + (slice(0, K + 1),)] = u.coeffs[j][src_idx + (slice(0, K + 1),)]
    return out


def resolution_distance(a: RunOutputs, b: RunOutputs) -> float:
    """Space-time L^2 distance between runs on different grids (finer grid basis)."""
    ta, tb = a.times, b.times
    if ta.shape != tb.shape or np.max(np.abs(ta - tb), initial=0.0) > TIME_TOL * max(1.0, ta.max(initial=0)):
        raise ConfigurationError("runs have different sample times", key="time.sample_interval")
    fine = a.grid if a.grid.size >= b.grid.size else b.grid
    waves = fine.waves
    w = trapezoid_weights(ta)
    total = 0.0
    for wi, fa, fb in zip(w, a.fields, b.fields):
        d = np.sum(np.abs(embed(fa, fine) - embed(fb, fine)) ** 2, axis=0)
        total += wi * VOLUME * weighted_sum(d, waves)
    return math.sqrt(total)


# -- localized energy identity --------------------------------------------------------


def _bump(s):
    return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 4, 0.0)


@dataclass(frozen=True)
class BumpFunction:
    """phi(t, x) = b((t - t0)/tau) * b(|x - x0| / rho) with b(s) = (1 - s^2)^4.

    Distances are minimum-image on the torus, so rho must stay below pi.
    """

    center: tuple[float, float, float]
    t0: float
    rho: float
    tau: float

    def __post_init__(self):
        if not 0 < self.rho < np.pi:
            raise ConfigurationError("spatial radius must lie in (0, pi)")
        if self.tau <= 0:
            raise ConfigurationError("temporal radius must be positive")

    def time_factor(self, t):
        return float(_bump((t - self.t0) / self.tau))

    def time_factor_dt(self, t):
        s = (t - self.t0) / self.tau
        if abs(s) >= 1.0:
            return 0.0
        return float(-8.0 * s * (1.0 - s * s) ** 3 / self.tau)

    def spatial(self, grid: GridSpec):
        """(phi_x, grad phi_x, Laplacian phi_x) on the grid."""
        X = grid.mesh()
        d = np.stack(
            [np.mod(xi - ci + np.pi, 2 * np.pi) - np.pi for xi, ci in zip(X, self.center)]
        )
        q = np.sum(d * d, axis=0) / self.rho**2
        inside = q < 1.0
        one_q = np.where(inside, 1.0 - q, 0.0)
        phi = one_q**4
        grad = -8.0 * one_q**3 * d / self.rho**2
        lap = -24.0 / self.rho**2 * one_q**2 * (1.0 - 3.0 * q) * inside
        return phi, grad, lap


@dataclass(frozen=True)
class LocalEnergyResult:
    lhs: float
    rhs: float
    residual: float


def local_energy_identity(
    outputs: RunOutputs, phi: BumpFunction, pressure_coefficient: float = -2.0
) -> LocalEnergyResult:
    """Residual of the localized energy identity weighted by ``phi``:

        2 nu int|grad u|^2 phi + 2 int g_N(|u|^2)|u|^2 phi
          = int |u|^2 (phi_t + nu Lap phi) + 2 (u.f) phi + (|u|^2 + c p) u.grad phi

    with c = ``pressure_coefficient``.  For pressure from ``recover_pressure``
    (equation written with +grad p) the identity holds with c = -2.
    """
    times = outputs.times
    if len(outputs.fields) != len(times):
        raise ConfigurationError("local energy identity needs the run's fields")
    T0, T1 = times[0], times[-1]
    if not (phi.t0 - phi.tau > T0 and phi.t0 + phi.tau < T1):
        raise ConfigurationError("bump support must lie strictly inside the run's time span")
    grid, profile, nu = outputs.grid, outputs.profile, outputs.profile.nu
    phi_x, grad_phi, lap_phi = phi.spatial(grid)
    cell = grid.dx**3
    lhs_t = np.zeros(len(times))
    rhs_t = np.zeros(len(times))
    for i, (t, u) in enumerate(zip(times, outputs.fields)):
        pt, dpt = phi.time_factor(t), phi.time_factor_dt(t)
        if pt == 0.0 and dpt == 0.0:
            continue
        u_phys = u.to_physical()
        speed_sq = np.sum(u_phys * u_phys, axis=0)
        grad_sq = np.sum(gradient_physical(u) ** 2, axis=(0, 1))
        g = eval_g_field(profile, speed_sq)
        p = recover_pressure(u, profile).to_physical()
        f = outputs.forcing.at(grid, t).to_physical()
        u_dot_gphi = np.sum(u_phys * grad_phi, axis=0)
        lhs_t[i] = cell * np.sum((2 * nu * grad_sq + 2 * g * speed_sq) * phi_x) * pt
        rhs_t[i] = cell * np.sum(
            speed_sq * (dpt * phi_x + nu * pt * lap_phi)
            + 2.0 * np.sum(u_phys * f, axis=0) * phi_x * pt
            + (speed_sq + pressure_coefficient * p) * u_dot_gphi * pt
        )
    w = trapezoid_weights(times)
    lhs, rhs_val = float(np.dot(w, lhs_t)), float(np.dot(w, rhs_t))
    scale = max(abs(lhs), abs(rhs_val))
    return LocalEnergyResult(lhs, rhs_val, abs(lhs - rhs_val) / scale if scale > 0 else 0.0)
