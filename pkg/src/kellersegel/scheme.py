"""Semi-implicit Euler stepping for the Keller-Segel system.

One step solves, in order,

    (rho1 - rho0)/dt = Lap rho1 - chi div(rho1 grad c0)
    tau (c1 - c0)/dt = Lap c1 - alpha c1 + gamma rho1

Both are linear, and the density solve only sees the lagged concentration,
so the two solves decouple. ``step_exponential`` advances the density through
the equivalent form ``div(exp(chi c0) grad(rho1 exp(-chi c0)))`` and serves
as a cross-check.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import grid as G
from .errors import (
    BlowupDetected,
    NegativeInitialData,
    NoConvergence,
    NonFiniteField,
    NonFiniteIterate,
    OverflowInExponential,
    ValidationError,
    ZeroInitialMass,
)
from .grid import Field, Grid
from .linsolve import KrylovConfig, advdiff_solve, helmholtz_solve, solve_conservative

EXP_LIMIT = 700.0


@dataclass(frozen=True)
class ModelParams:
    chi: float = 1.0
    alpha: float = 1.0
    gamma: float = 1.0
    tau: float = 0.0
    cgn: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "gamma", "cgn"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        # chi = 0 is allowed: it decouples the density into a heat equation
        for name in ("chi", "tau"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def threshold(self) -> float:
        """Critical mass ``4*pi/(chi*gamma)``; infinite when ``chi = 0``."""
        if self.chi == 0:
            return math.inf
        return 4 * math.pi / (self.chi * self.gamma)


@dataclass(frozen=True)
class InitialCondition:
    """Recipe for an initial field.

    ``kind`` is one of ``constant``, ``gaussian``, ``perturbed_constant``,
    ``file`` or ``field`` (an in-memory :class:`Field`).
    """

    kind: str
    args: Any

    @classmethod
    def constant(cls, value):
        return cls("constant", float(value))

    @classmethod
    def gaussian(cls, amplitude, x0, y0, sigma, background=0.0):
        return cls("gaussian", dict(amplitude=amplitude, x0=x0, y0=y0, sigma=sigma,
                                    background=background))

    @classmethod
    def perturbed_constant(cls, mean, eps, kx, ky):
        return cls("perturbed_constant", dict(mean=mean, eps=eps, kx=kx, ky=ky))

    @classmethod
    def from_field(cls, f: Field):
        return cls("field", f)

    @classmethod
    def from_file(cls, path):
        return cls("file", str(path))

    def build(self, grid: Grid) -> Field:
        if self.kind == "constant":
            return grid.constant(self.args)
        if self.kind == "gaussian":
            return gaussian_field(grid, **self.args)
        if self.kind == "perturbed_constant":
            a = self.args
            return grid.from_function(
                lambda X, Y: a["mean"]
                + a["eps"]
                * np.cos(2 * np.pi * a["kx"] * X / grid.Lx)
                * np.cos(2 * np.pi * a["ky"] * Y / grid.Ly)
            )
        if self.kind == "field":
            if self.args.grid != grid:
                raise ValidationError("initial field lives on a different grid")
            return self.args
        if self.kind == "file":
            from .io import read_snapshot

            f, _ = read_snapshot(self.args, grid=grid)
            return f
        raise ValidationError(f"unknown initial condition kind {self.kind!r}")


def gaussian_field(grid: Grid, amplitude, x0, y0, sigma, background=0.0) -> Field:
    """Gaussian bump; on periodic grids the nearest periodic images are summed."""
    X, Y = grid.mesh()
    shifts = (-1, 0, 1) if grid.bc is G.BcKind.PERIODIC else (0,)
    total = np.zeros(grid.shape)
    for sx in shifts:
        for sy in shifts:
            r2 = (X - x0 + sx * grid.Lx) ** 2 + (Y - y0 + sy * grid.Ly) ** 2
            total += np.exp(-r2 / (2 * sigma**2))
    return Field(grid, background + amplitude * total)


@dataclass(frozen=True)
class SchemeState:
    rho: Field
    c: Field
    c_prev: Optional[Field] = None
    n: int = 0
    t: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    dt: float
    n_steps: int
    grid: Grid
    initial_rho: InitialCondition
    initial_c: Optional[InitialCondition] = None
    solver: KrylovConfig = field(default_factory=KrylovConfig)
    diag_every: int = 1
    max_density: float = 1e8

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValidationError(f"n_steps must be non-negative, got {self.n_steps}")
        if self.diag_every < 1:
            raise ValidationError("diag_every must be >= 1")
        if (self.params.tau > 0) != (self.initial_c is not None):
            raise ValidationError("initial c is required iff tau > 0")

    @property
    def T(self) -> float:
        return self.dt * self.n_steps

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def concentration_from_density(rho: Field, params: ModelParams) -> Field:
    """Elliptic relation ``c = gamma (alpha I - Lap)^{-1} rho``."""
    return params.gamma * helmholtz_solve(rho, params.alpha)


def init_state(cfg: RunConfig) -> SchemeState:
    rho = cfg.initial_rho.build(cfg.grid)
    if rho.min() < 0:
        raise NegativeInitialData(f"initial density has minimum {rho.min():.3e} < 0")
    if not rho.values.any():
        raise ZeroInitialMass("initial density is identically zero")
    if cfg.params.tau == 0:
        c = concentration_from_density(rho, cfg.params)
    else:
        c = cfg.initial_c.build(cfg.grid)
        if c.min() < 0:
            raise NegativeInitialData(f"initial concentration has minimum {c.min():.3e} < 0")
    return SchemeState(rho=rho, c=c, c_prev=None, n=0, t=0.0)


def _concentration_step(rho_next: Field, c: Field, params: ModelParams, dt: float) -> Field:
    if params.tau == 0:
        return concentration_from_density(rho_next, params)
    beta = params.tau / dt + params.alpha
    return helmholtz_solve((params.tau / dt) * c + params.gamma * rho_next, beta)


def _advance(state, rho_next, params, dt):
    c_next = _concentration_step(rho_next, state.c, params, dt)
    return SchemeState(
        rho=rho_next,
        c=c_next,
        c_prev=state.c if params.tau > 0 else None,
        n=state.n + 1,
        t=(state.n + 1) * dt,
    )


def step(state: SchemeState, params: ModelParams, dt: float, cfg: KrylovConfig | None = None):
    rho_next = advdiff_solve(state.rho / dt, state.c, dt, params.chi, cfg)
    return _advance(state, rho_next, params, dt)


def step_exponential(state: SchemeState, params: ModelParams, dt: float,
                     cfg: KrylovConfig | None = None):
    """Density update through the exponentially reweighted operator."""
    c = state.c
    top = params.chi * c.max()
    if top > EXP_LIMIT or params.chi * (c.max() - c.min()) > EXP_LIMIT:
        raise OverflowInExponential(f"chi*max(c) = {top:.3g} exceeds {EXP_LIMIT}")
    # shifting c by a constant rescales both weights inversely and cancels
    s = params.chi * (c.values - c.max())
    weight = Field(c.grid, np.exp(s))
    inv_weight = Field(c.grid, np.exp(-s))

    def apply(rho):
        inner = G.product(rho, inv_weight)
        return rho / dt - G.divergence(G.flux(weight, G.gradient(inner)))

    rho_next = solve_conservative(apply, state.rho / dt, dt, cfg or KrylovConfig())
    return _advance(state, rho_next, params, dt)


@dataclass
class RunResult:
    state: SchemeState
    records: list


class ListSink:
    def __init__(self):
        self.records = []

    def emit(self, record):
        self.records.append(record)


_SOLVER_FAILURES = (NoConvergence, NonFiniteIterate, NonFiniteField)


def run(cfg: RunConfig, sink=None, observer: Callable[[SchemeState], None] | None = None,
        stepper=step) -> RunResult:
    """Advance ``cfg.n_steps`` steps, emitting diagnostics every ``diag_every`` steps.

    ``observer`` sees every state, including the initial one. Raises
    :class:`BlowupDetected` when the density exceeds ``cfg.max_density`` or a
    solve fails; records emitted up to that point stay in the sink.
    """
    from .diagnostics import make_record

    sink = sink if sink is not None else ListSink()
    emitted = []

    def emit(record):
        emitted.append(record)
        sink.emit(record)

    state = init_state(cfg)
    params, dt = cfg.params, cfg.dt
    emit(make_record(state, None, params, dt))
    if observer:
        observer(state)
    for k in range(cfg.n_steps):
        try:
            new = stepper(state, params, dt, cfg.solver)
        except _SOLVER_FAILURES as exc:
            raise BlowupDetected(
                f"solve failed at step {state.n + 1} (t={state.t + dt:.6g}): {exc}",
                last_state=state, records=emitted, cause=exc,
            ) from exc
        peak = new.rho.max()
        due = (new.n % cfg.diag_every == 0) or (k == cfg.n_steps - 1)
        if peak > cfg.max_density:
            emit(make_record(new, state, params, dt))
            raise BlowupDetected(
                f"max density {peak:.3e} exceeded ceiling {cfg.max_density:.3e} "
                f"at step {new.n} (t={new.t:.6g})",
                last_state=state, records=emitted,
            )
        if due:
            emit(make_record(new, state, params, dt))
        if observer:
            observer(new)
        state = new
    return RunResult(state, emitted)


def integrate(cfg: RunConfig, dt: float, n_steps: int, stepper=step) -> SchemeState:
    """Final state after ``n_steps`` of size ``dt``, without diagnostics."""
    state = init_state(cfg)
    for _ in range(n_steps):
        state = stepper(state, cfg.params, dt, cfg.solver)
    return state
