"""Figures written next to the CSV reports."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def _figure(nrows=1, ncols=1, width=6.4, height=None):
    golden = (math.sqrt(5) - 1) / 2
    height = height or width * golden * nrows / ncols
    with plt.rc_context(RC):
        return plt.subplots(nrows, ncols, figsize=(width, height), squeeze=False)


def _save(fig, path):
    with plt.rc_context(RC):
        fig.tight_layout()
        fig.savefig(path)
    plt.close(fig)


def plot_diagnostics(records, path):
    fig, axes = _figure(2, 2, width=8)
    t = [r.t for r in records]
    m0 = records[0].mass
    ax = axes[0, 0]
    ax.plot(t, [(r.mass - m0) / m0 for r in records])
    ax.set(xlabel="t", ylabel="relative mass drift")
    ax = axes[0, 1]
    pts = [(r.t, r.energy) for r in records if r.energy is not None]
    ax.plot([p[0] for p in pts], [p[1] for p in pts])
    ax.set(xlabel="t", ylabel="free energy")
    ax = axes[1, 0]
    ax.plot(t, [r.min_rho for r in records], label="min")
    ax.plot(t, [r.max_rho for r in records], label="max")
    ax.set(xlabel="t", ylabel="density")
    ax.legend()
    ax = axes[1, 1]
    ax.plot(t, [r.l2_rho for r in records], label="L2")
    ax.plot(t, [r.l4_rho for r in records], label="L4")
    ax.set(xlabel="t", ylabel="norm of density")
    ax.legend()
    _save(fig, path)


def plot_convergence(report, path):
    fig, axes = _figure()
    ax = axes[0, 0]
    for (p, var), errs in report.errors.items():
        order = report.fitted_orders.get((p, var))
        label = f"{var}, p={p:g}" + (f" (order {order:.3f})" if order is not None else "")
        ax.loglog(report.dts, errs, "o-", label=label)
    ref = report.errors[next(iter(report.errors))]
    ax.loglog(report.dts, [ref[0] * d / report.dts[0] for d in report.dts], "k--", lw=0.8,
              label="slope 1")
    ax.set(xlabel="time step", ylabel=f"error at T={report.T:g}")
    ax.legend()
    _save(fig, path)


def plot_probe(report, path):
    fig, axes = _figure()
    ax = axes[0, 0]
    for row in report.rows:
        ts, ms = zip(*row.trace)
        tag = "blow-up" if row.blew_up else "bounded"
        ax.semilogy(ts, ms, label=f"M = {row.scale:g} x threshold ({tag})")
    ax.set(xlabel="t", ylabel="max density")
    ax.legend()
    _save(fig, path)


def plot_sweep(report, path):
    fig, axes = _figure()
    ax = axes[0, 0]
    labels = [", ".join(f"{k}={v:g}" for k, v in row.point.items()) for row in report.rows]
    slack = [row.min_e8_slack_rel for row in report.rows]
    colors = ["tab:green" if row.passed else "tab:red" for row in report.rows]
    ax.barh(range(len(labels)), slack, color=colors)
    ax.set_yticks(range(len(labels)), labels)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set(xlabel="worst dissipation slack / |E0|")
    _save(fig, path)
