"""Quantities the scheme is supposed to keep under control.

Every integral uses the equal-weight rule ``hx*hy*sum``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .errors import BadExponent, NegativeDensity, NegativeInitialData, ZeroInitialMass
from .grid import BackendKind, Field, dealias, gradient

NEGATIVE_TOL = 1e-10  # tolerated undershoot, relative to max(rho)
ENTROPY_FLOOR = 1e-14
LOG_GRAD_CUTOFF = 1e-12  # relative to max(rho)


@dataclass(frozen=True)
class DiagRecord:
    """Per-step ledger entry.

    Quantities tied to the step that produced state ``n`` (``d_energy``, the
    three dissipation terms, ``dc_dt_l2``) are ``None`` at ``n = 0``.
    ``energy`` is ``None`` if the density undershoots zero by more than the
    tolerance.
    """

    n: int
    t: float
    mass: float
    min_rho: float
    max_rho: float
    energy: Optional[float]
    d_energy: Optional[float]
    diss_rho: Optional[float]
    diss_c_grad: Optional[float]
    diss_c: Optional[float]
    l2_rho: float
    l4_rho: float
    linf_rho: float
    dc_dt_l2: Optional[float]

    @property
    def lp_norms(self):
        return {2: self.l2_rho, 4: self.l4_rho, math.inf: self.linf_rho}

    @property
    def dissipation(self) -> Optional[float]:
        if self.diss_rho is None:
            return None
        return self.diss_rho + self.diss_c_grad + self.diss_c

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def mass(f: Field) -> float:
    return float(np.sum(f.values) * f.grid.cell_area)


def lp_norm(f: Field, p) -> float:
    if p == math.inf or p == "inf":
        return float(np.max(np.abs(f.values)))
    p = float(p)
    if not p > 1:
        raise BadExponent(f"p must lie in (1, inf], got {p}")
    return float((np.sum(np.abs(f.values) ** p) * f.grid.cell_area) ** (1.0 / p))


def l2_norm(f: Field) -> float:
    return lp_norm(f, 2)


def _grad_sq(f: Field) -> Field:
    g = gradient(f)
    out = Field(f.grid, g.norm_sq())
    if f.grid.backend is BackendKind.SPECTRAL:
        out = dealias(out)
    return out


def entropy_density(r: np.ndarray) -> np.ndarray:
    """``r log r - r`` with ``0 log 0 = 0``; tiny samples contribute ``-r``."""
    safe = np.maximum(r, ENTROPY_FLOOR)
    return np.where(r >= ENTROPY_FLOOR, r * np.log(safe) - r, -r)


def check_density(rho: Field):
    top = max(rho.max(), 0.0)
    if rho.min() < -NEGATIVE_TOL * top:
        raise NegativeDensity(f"min(rho) = {rho.min():.3e} below tolerance (max {top:.3e})")


def energy(rho: Field, c: Field, params) -> float:
    """Free energy ``int rho log rho - rho - chi rho c + chi/(2 gamma)|grad c|^2 + alpha chi/(2 gamma) c^2``."""
    check_density(rho)
    chi, gamma, alpha = params.chi, params.gamma, params.alpha
    r, cv = rho.values, c.values
    integrand = (
        entropy_density(r)
        - chi * r * cv
        + chi / (2 * gamma) * _grad_sq(c).values
        + alpha * chi / (2 * gamma) * cv**2
    )
    return float(np.sum(integrand) * rho.grid.cell_area)


def dissipation_terms(prev, next, params, dt) -> dict:
    """The three non-negative terms bounding the energy decrease of one step.

    ``prev``/``next`` are consecutive :class:`SchemeState` objects.
    """
    chi, gamma, alpha, tau = params.chi, params.gamma, params.alpha, params.tau
    grid = next.rho.grid
    r = next.rho.values
    cutoff = LOG_GRAD_CUTOFF * max(r.max(), 0.0)
    keep = r >= cutoff
    mu = Field(grid, np.log(np.maximum(r, max(cutoff, ENTROPY_FLOOR))) - chi * prev.c.values)
    weight = np.where(keep, r, 0.0)
    diss_rho = dt * float(np.sum(weight * gradient(mu).norm_sq()) * grid.cell_area)
    dc = next.c - prev.c
    diss_c_grad = chi / (2 * gamma) * float(np.sum(gradient(dc).norm_sq()) * grid.cell_area)
    diss_c = chi / gamma * (tau / dt + alpha / 2) * float(np.sum(dc.values**2) * grid.cell_area)
    out = dict(diss_rho=diss_rho, diss_c_grad=diss_c_grad, diss_c=diss_c)
    try:
        out["d_energy"] = energy(next.rho, next.c, params) - energy(prev.rho, prev.c, params)
    except NegativeDensity:
        out["d_energy"] = None
    return out


def make_record(state, prev, params, dt) -> DiagRecord:
    rho = state.rho
    try:
        e = energy(rho, state.c, params)
    except NegativeDensity:
        e = None
    inc = dict(d_energy=None, diss_rho=None, diss_c_grad=None, diss_c=None, dc_dt_l2=None)
    if prev is not None:
        inc.update(dissipation_terms(prev, state, params, dt))
        inc["dc_dt_l2"] = l2_norm((state.c - prev.c) / dt)
    return DiagRecord(
        n=state.n,
        t=state.t,
        mass=mass(rho),
        min_rho=rho.min(),
        max_rho=rho.max(),
        energy=e,
        l2_rho=lp_norm(rho, 2),
        l4_rho=lp_norm(rho, 4),
        linf_rho=lp_norm(rho, math.inf),
        **inc,
    )


@dataclass(frozen=True)
class RegimeReport:
    """Where the initial mass sits relative to the two smallness conditions.

    ``gn_value`` is ``(2+tau) gamma chi C_gn M``; its flag is only as good as
    the supplied ``C_gn`` estimate.
    """

    mass: float
    cgn: float
    gn_value: float
    threshold: float

    @property
    def gn_subcritical(self) -> bool:
        return self.gn_value < 1.0

    @property
    def below_threshold(self) -> bool:
        return self.mass < self.threshold

    @property
    def subcritical(self) -> bool:
        return self.below_threshold

    def lines(self):
        return [
            f"mass M = {self.mass:.12g}",
            f"(2+tau)*gamma*chi*C_gn*M = {self.gn_value:.12g} "
            f"({'subcritical' if self.gn_subcritical else 'supercritical'}, "
            f"conditional on C_gn = {self.cgn:g})",
            f"threshold 4*pi/(chi*gamma) = {self.threshold:.12g}; M is "
            f"{'below' if self.below_threshold else 'above'} the threshold "
            f"({'subcritical' if self.below_threshold else 'supercritical'})",
        ]


def regime_report(params, rho0: Field) -> RegimeReport:
    if rho0.min() < 0:
        raise NegativeInitialData("initial density must be non-negative")
    m = mass(rho0)
    if m == 0:
        raise ZeroInitialMass("initial density has zero mass")
    gn = (2 + params.tau) * params.gamma * params.chi * params.cgn * m
    return RegimeReport(mass=m, cgn=params.cgn, gn_value=gn,
                        threshold=params.threshold)
