"""Linear solves for one time step.

``helmholtz_solve`` inverts the constant-coefficient operator ``beta*I - Lap``;
``advdiff_solve`` inverts the non-symmetric density operator

    (1/dt) rho - Lap rho + chi div(rho grad c)

with restarted GMRES, right-preconditioned by ``(1/dt) I - Lap``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NoConvergence, NonFiniteField, NonFiniteIterate, ValidationError
from .grid import (
    BackendKind,
    Field,
    VectorField,
    _fft,
    _ifft,
    dealias_vector,
    divergence,
    flux,
    gradient,
    laplacian,
    wavenumbers,
)


@dataclass(frozen=True)
class KrylovConfig:
    rel_tol: float = 1e-10
    max_iters: int = 500
    restart: int = 50

    def __post_init__(self):
        if not (0 < self.rel_tol <= 1e-2):
            raise ValidationError(f"rel_tol={self.rel_tol} must lie in (0, 1e-2]")
        if not (self.max_iters >= self.restart >= 1):
            raise ValidationError("need max_iters >= restart >= 1")


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float  # relative, in the quadrature L2 norm


def gmres(matvec, b, *, precond=None, rel_tol=1e-10, restart=50, max_iters=500, ref_norm=None):
    """Restarted flexible GMRES with right preconditioning.

    Stops once ``||b - A x|| <= rel_tol * ref_norm`` (``ref_norm`` defaults to
    ``||b||``). The preconditioner may vary between iterations, so inexact
    inner solves are fine. Returns ``(x, SolveInfo)``.
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.size
    ref = float(np.linalg.norm(b)) if ref_norm is None else float(ref_norm)
    x = np.zeros(n)
    if ref == 0.0:
        return x, SolveInfo(0, 0.0)
    target = rel_tol * ref
    precond = precond or (lambda v: v)

    r = b.copy()
    beta = float(np.linalg.norm(r))
    total = 0
    while beta > target:
        if total >= max_iters:
            raise NoConvergence(
                f"GMRES stalled after {total} iterations at relative residual {beta / ref:.3e}",
                residual=beta / ref,
                iterations=total,
            )
        m = min(restart, max_iters - total)
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        for j in range(m):
            Z[j] = precond(V[j])
            w = matvec(Z[j])
            # two passes of classical Gram-Schmidt
            for _ in range(2):
                h = V[: j + 1] @ w
                w = w - V[: j + 1].T @ h
                H[: j + 1, j] += h
            H[j + 1, j] = np.linalg.norm(w)
            breakdown = H[j + 1, j] == 0
            if not breakdown:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                hi, hj = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hj
                H[i + 1, j] = -sn[i] * hi + cs[i] * hj
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            k = j + 1
            if abs(g[j + 1]) <= target or breakdown:
                break
        y = solve_triangular(H[:k, :k], g[:k])
        x = x + Z[:k].T @ y
        if not np.isfinite(x).all():
            raise NonFiniteIterate(f"GMRES iterate became non-finite after {total} iterations")
        r = b - matvec(x)
        beta = float(np.linalg.norm(r))
    return x, SolveInfo(total, beta / ref)


def conjugate_gradient(matvec, b, *, rel_tol=1e-12, max_iters=10000):
    """Plain CG for symmetric positive-definite operators."""
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, SolveInfo(0, 0.0)
    r = b.copy()
    p = r.copy()
    rr = float(r @ r)
    for it in range(1, max_iters + 1):
        Ap = matvec(p)
        a = rr / float(p @ Ap)
        x += a * p
        r -= a * Ap
        rr_new = float(r @ r)
        if np.sqrt(rr_new) <= rel_tol * bnorm:
            # confirm against the true residual
            true = float(np.linalg.norm(b - matvec(x)))
            if true <= rel_tol * bnorm:
                return x, SolveInfo(it, true / bnorm)
            r = b - matvec(x)
            rr_new = float(r @ r)
            p = r.copy()
            rr = rr_new
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    if not np.isfinite(x).all():
        raise NonFiniteIterate("CG iterate became non-finite")
    raise NoConvergence(
        f"CG did not converge in {max_iters} iterations",
        residual=float(np.linalg.norm(b - matvec(x))) / bnorm,
        iterations=max_iters,
    )


def helmholtz_apply(u: Field, beta: float) -> Field:
    return beta * u - laplacian(u)


def _helmholtz_values(grid, f_values, beta, rel_tol=1e-12, max_iters=None):
    if grid.backend is BackendKind.SPECTRAL:
        kx, ky = wavenumbers(grid)
        return _ifft(grid, _fft(grid, f_values) / (beta + kx**2 + ky**2))

    def matvec(v):
        return helmholtz_apply(Field(grid, v), beta).flat()

    x, _ = conjugate_gradient(
        matvec, np.ravel(f_values), rel_tol=rel_tol, max_iters=max_iters or 20 * grid.size
    )
    return x.reshape(grid.shape)


def helmholtz_solve(f: Field, beta: float, *, max_iters=None) -> Field:
    """Solve ``(beta I - Lap) u = f``.

    Exact per Fourier mode on the spectral backend, CG to a relative
    residual of 1e-12 on the finite-difference backend.
    """
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    return Field(f.grid, _helmholtz_values(f.grid, f.values, beta, max_iters=max_iters))


def advection_velocity(c: Field) -> VectorField:
    """``grad c``, dealiased on spectral grids; frozen for the whole step."""
    g = gradient(c)
    if c.grid.backend is BackendKind.SPECTRAL:
        g = dealias_vector(g)
    return g


def advdiff_apply(rho: Field, grad_c: VectorField, dt: float, chi: float) -> Field:
    out = rho / dt - laplacian(rho)
    if chi != 0.0:
        out = out + chi * divergence(flux(rho, grad_c))
    return out


def solve_conservative(apply, rhs: Field, dt: float, cfg: KrylovConfig, return_info=False):
    """GMRES for an operator whose mean part is ``mean(apply(u)) = mean(u)/dt``.

    The mean of the solution is fixed to ``dt*mean(rhs)`` up front and the
    Krylov iteration only sees the mean-free remainder.
    """
    grid = rhs.grid
    rhs_norm = float(np.linalg.norm(rhs.values))
    base = dt * rhs.mean()
    b = rhs.values - apply(grid.constant(base)).values
    b = b - b.mean()

    def matvec(v):
        try:
            return apply(Field(grid, v)).flat()
        except NonFiniteField as exc:
            raise NonFiniteIterate(str(exc)) from exc

    def precond(v):
        return _helmholtz_values(grid, v.reshape(grid.shape), 1.0 / dt).ravel()

    x, info = gmres(
        matvec,
        b.ravel(),
        precond=precond,
        rel_tol=cfg.rel_tol,
        restart=cfg.restart,
        max_iters=cfg.max_iters,
        ref_norm=rhs_norm,
    )
    x = x - x.mean()
    out = Field(grid, base + x.reshape(grid.shape))
    if return_info:
        return out, info
    return out


def advdiff_solve(rhs: Field, c: Field, dt: float, chi: float, cfg: KrylovConfig | None = None,
                  return_info=False):
    """Solve ``(1/dt) rho - Lap rho + chi div(rho grad c) = rhs`` for ``rho``."""
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    cfg = cfg or KrylovConfig()
    grad_c = advection_velocity(c)
    return solve_conservative(
        lambda rho: advdiff_apply(rho, grad_c, dt, chi), rhs, dt, cfg, return_info=return_info
    )
