"""Desk-scale experiments: temporal convergence, property sweeps, blow-up probes."""
from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import lp_norm, mass, regime_report
from .errors import BlowupDetected, ValidationError
from .grid import BackendKind
from .scheme import (
    InitialCondition,
    ListSink,
    RunConfig,
    concentration_from_density,
    integrate,
    run,
    step,
)

# tolerances for the monitored properties
MASS_TOL = {BackendKind.SPECTRAL: 1e-12, BackendKind.FD: 1e-11}
POSITIVITY_TOL = 1e-10
ENERGY_TOL = 1e-8
LP_GROWTH = 10.0


def fit_order(dts, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dt)``."""
    slope, _ = np.polyfit(np.log(np.asarray(dts, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


@dataclass
class ConvergenceReport:
    T: float
    dt_ref: float
    dts: list
    p_list: list
    errors: dict  # (p, "rho" | "c") -> list aligned with dts
    fitted_orders: dict = field(default_factory=dict)


def _steps_for(T, dt):
    n = round(T / dt)
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ValidationError(f"dt={dt} does not divide T={T}")
    return n


def temporal_convergence(cfg: RunConfig, dts, p_list=(2, 4), stepper=step) -> ConvergenceReport:
    """Errors at ``T = cfg.dt * cfg.n_steps`` against a run with ``min(dts)/16``.

    The grid stays fixed, so the measured errors isolate the time discretisation.
    """
    dts = [float(d) for d in dts]
    if not dts:
        raise ValidationError("need at least one dt")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValidationError("dts must be strictly decreasing")
    T = cfg.T
    steps = [_steps_for(T, dt) for dt in dts]
    dt_ref = dts[-1] / 16
    ref = integrate(cfg, dt_ref, _steps_for(T, dt_ref), stepper)

    errors = {(p, var): [] for p in p_list for var in ("rho", "c")}
    for dt, n in zip(dts, steps):
        s = integrate(cfg, dt, n, stepper)
        for p in p_list:
            errors[(p, "rho")].append(lp_norm(s.rho - ref.rho, p))
            errors[(p, "c")].append(lp_norm(s.c - ref.c, p))
    report = ConvergenceReport(T=T, dt_ref=dt_ref, dts=dts, p_list=list(p_list), errors=errors)
    if len(dts) >= 2:
        report.fitted_orders = {k: fit_order(dts, v) for k, v in errors.items()}
    return report


@dataclass
class SweepRow:
    point: dict
    mass_drift: float  # max |M_n - M_0| / M_0
    min_rho_rel: float  # min_n min(rho_n) / max(rho_0)
    max_d_energy_rel: float  # max_n (E_{n+1} - E_n) / |E_0|
    min_e8_slack_rel: float  # min_n (-dE - dissipation) / |E_0|
    lp_growth: float  # max over p in {2, 4} of sup_n ||rho_n||_p / ||rho_0||_p
    mass_ok: bool
    positivity_ok: bool
    energy_ok: bool
    dissipation_ok: bool
    lp_ok: bool
    regime: object = None
    error: str = ""

    @property
    def passed(self) -> bool:
        return (self.mass_ok and self.positivity_ok and self.energy_ok
                and self.dissipation_ok and self.lp_ok and not self.error)


@dataclass
class SweepReport:
    rows: list

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)


class SupercriticalSweepPoint(ValidationError):
    def __init__(self, point, regime):
        super().__init__(
            f"sweep point {point} is not subcritical: M = {regime.mass:.6g} >= "
            f"4*pi/(chi*gamma) = {regime.threshold:.6g}"
        )
        self.point = point
        self.regime = regime


_SWEEPABLE = ("chi", "alpha", "gamma", "tau", "cgn")


def sweep_points(param_grid: dict):
    names = list(param_grid)
    for name in names:
        if name not in _SWEEPABLE:
            raise ValidationError(f"cannot sweep over {name!r}; choose from {_SWEEPABLE}")
    if not names:
        return []
    return [dict(zip(names, combo)) for combo in itertools.product(*(param_grid[n] for n in names))]


def config_for_point(template: RunConfig, point: dict) -> RunConfig:
    """``template`` with the model parameters in ``point`` substituted.

    Switching to ``tau > 0`` without a template concentration starts from the
    elliptic concentration of the initial density; switching to ``tau = 0``
    drops the supplied concentration.
    """
    params = dataclasses.replace(template.params, **{k: float(v) for k, v in point.items()})
    initial_c = template.initial_c
    if params.tau == 0:
        initial_c = None
    elif initial_c is None:
        rho0 = template.initial_rho.build(template.grid)
        initial_c = InitialCondition.from_field(concentration_from_density(rho0, params))
    return template.replace(params=params, initial_c=initial_c)


def evaluate_records(records, backend) -> dict:
    r0 = records[0]
    m0, e0 = r0.mass, abs(r0.energy)
    later = records[1:]
    out = dict(
        mass_drift=max(abs(r.mass - m0) for r in records) / m0,
        min_rho_rel=min(r.min_rho for r in records) / r0.max_rho,
        lp_growth=max(max(r.l2_rho for r in records) / r0.l2_rho,
                      max(r.l4_rho for r in records) / r0.l4_rho),
    )
    energies_ok = all(r.d_energy is not None for r in later)
    if later and energies_ok:
        out["max_d_energy_rel"] = max(r.d_energy for r in later) / e0
        out["min_e8_slack_rel"] = min(-r.d_energy - r.dissipation for r in later) / e0
    else:
        out["max_d_energy_rel"] = 0.0 if not later else math.inf
        out["min_e8_slack_rel"] = 0.0 if not later else -math.inf
    out.update(
        mass_ok=out["mass_drift"] <= MASS_TOL[backend],
        positivity_ok=out["min_rho_rel"] >= -POSITIVITY_TOL,
        energy_ok=out["max_d_energy_rel"] <= ENERGY_TOL,
        dissipation_ok=out["min_e8_slack_rel"] >= -ENERGY_TOL,
        lp_ok=out["lp_growth"] <= LP_GROWTH,
    )
    return out


def property_sweep(cfg_template: RunConfig, param_grid: dict) -> SweepReport:
    """Run every point of the Cartesian ``param_grid`` and check the monitored properties.

    All points are checked against the mass threshold before anything runs.
    """
    points = sweep_points(param_grid)
    configs = []
    for point in points:
        cfg = config_for_point(cfg_template, point).replace(diag_every=1)
        regime = regime_report(cfg.params, cfg.initial_rho.build(cfg.grid))
        if not regime.subcritical:
            raise SupercriticalSweepPoint(point, regime)
        configs.append((point, cfg, regime))

    rows = []
    for point, cfg, regime in configs:
        sink = ListSink()
        error = ""
        try:
            run(cfg, sink)
        except BlowupDetected as exc:
            error = str(exc)
        stats = evaluate_records(sink.records, cfg.grid.backend)
        rows.append(SweepRow(point=point, regime=regime, error=error, **stats))
    return SweepReport(rows)


@dataclass
class ProbeRow:
    scale: float
    mass: float
    blew_up: bool
    t_blowup: float | None
    initial_max: float
    final_max: float
    trace: list  # (t, max rho)
    message: str = ""

    @property
    def bounded(self) -> bool:
        return not self.blew_up and self.final_max <= LP_GROWTH * self.initial_max and all(
            m <= LP_GROWTH * self.initial_max for _, m in self.trace
        )


@dataclass
class ProbeReport:
    threshold: float
    rows: list


def blowup_probe(cfg: RunConfig, mass_scales) -> ProbeReport:
    """Rescale the initial density to ``scale * 4*pi/(chi*gamma)`` and watch ``max(rho)``.

    Purely qualitative: large scales are expected to trip the blow-up
    detector, small ones to stay bounded.
    """
    params = cfg.params
    threshold = params.threshold
    if math.isinf(threshold):
        raise ValidationError("blow-up probe needs chi > 0")
    profile = cfg.initial_rho.build(cfg.grid)
    m = mass(profile)
    rows = []
    for scale in mass_scales:
        rho0 = profile * (float(scale) * threshold / m)
        point_cfg = cfg.replace(initial_rho=InitialCondition.from_field(rho0), diag_every=1)
        sink = ListSink()
        blew_up, t_fire, message = False, None, ""
        try:
            run(point_cfg, sink)
        except BlowupDetected as exc:
            blew_up, message = True, str(exc)
            t_fire = exc.last_state.t + cfg.dt if exc.last_state is not None else None
        trace = [(r.t, r.max_rho) for r in sink.records]
        rows.append(ProbeRow(
            scale=float(scale), mass=mass(rho0), blew_up=blew_up, t_blowup=t_fire,
            initial_max=trace[0][1], final_max=trace[-1][1], trace=trace, message=message,
        ))
    return ProbeReport(threshold=threshold, rows=rows)
