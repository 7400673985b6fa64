"""Acceptance suite: one group of tests per criterion, at the stated tolerances.

The summary printed at the end of the session lists PASS/FAIL per criterion.
"""
import json
import math
import time

import numpy as np
import pytest

from kellersegel.cli import main
from kellersegel.diagnostics import mass
from kellersegel.experiments import blowup_probe, temporal_convergence
from kellersegel.grid import Field, dealias, make_grid
from kellersegel.io import parse_diag_csv, parse_snapshot, snapshot_bytes, write_diag_csv
from kellersegel.linsolve import advdiff_solve, helmholtz_solve
from kellersegel.scheme import InitialCondition, ModelParams, RunConfig, SchemeState, run, step, step_exponential

from oracles import DenseOps, smooth_trig

TWO_PI = 2 * np.pi
CENTRE = math.pi


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def subcritical_cfg(tau, dt=1e-3, n_steps=1000):
    g = make_grid(64, 64, TWO_PI, TWO_PI)
    rho = InitialCondition.gaussian(2.0, CENTRE, CENTRE, 0.6, background=0.1)
    c = InitialCondition.constant(0.2) if tau else None
    return RunConfig(ModelParams(tau=tau), dt, n_steps, g, rho, c)


@pytest.fixture(scope="module", params=[0.0, 1.0], ids=["tau0", "tau1"])
def long_run(request):
    cfg = subcritical_cfg(request.param)
    start = time.perf_counter()
    result = run(cfg)
    return cfg, result.records, time.perf_counter() - start


@criterion(1, "mass conservation over 1000 steps")
def test_mass_conservation(long_run):
    cfg, records, elapsed = long_run
    assert len(records) == cfg.n_steps + 1
    m0 = records[0].mass
    drift = max(abs(r.mass - m0) for r in records)
    assert drift <= 1e-12 * m0
    assert elapsed <= 60.0


@criterion(2, "energy decrease and dissipation inequality")
def test_energy_dissipation(long_run):
    _, records, _ = long_run
    e0 = abs(records[0].energy)
    for r in records[1:]:
        assert r.d_energy <= 1e-8 * e0, r.n
        assert -r.d_energy >= r.diss_rho + r.diss_c_grad + r.diss_c - 1e-8 * e0, r.n


@criterion(3, "positivity monitor")
def test_positivity(long_run):
    _, records, _ = long_run
    assert records[0].min_rho >= 0.1
    assert min(r.min_rho for r in records) >= -1e-10 * records[0].max_rho


LADDER = [1 / 40, 1 / 80, 1 / 160, 1 / 320]


@pytest.fixture(scope="module")
def ladders():
    out, start = {}, time.perf_counter()
    for tau in (0.0, 1.0):
        cfg = subcritical_cfg(tau, dt=LADDER[0], n_steps=20)
        out[tau] = temporal_convergence(cfg, LADDER, p_list=(2, 4))
    return out, time.perf_counter() - start


@criterion(4, "first-order temporal convergence")
@pytest.mark.parametrize("tau", [0.0, 1.0])
def test_temporal_order(ladders, tau):
    reports, elapsed = ladders
    report = reports[tau]
    assert report.T == pytest.approx(0.5)
    assert report.dt_ref == pytest.approx(LADDER[-1] / 16)
    for key, order in report.fitted_orders.items():
        assert 0.9 <= order <= 1.1, (key, order)
    for key, errs in report.errors.items():
        assert all(e > 0 for e in errs)
        rises = sum(b >= a for a, b in zip(errs, errs[1:]))
        assert rises <= 1, key
    assert elapsed <= 600.0


@criterion(5, "elliptic error coupling for tau = 0")
def test_error_coupling(ladders):
    report = ladders[0][0.0]
    params = ModelParams()
    for e_rho, e_c in zip(report.errors[(2, "rho")], report.errors[(2, "c")]):
        assert e_c <= 2 * (params.gamma / params.alpha) * e_rho


ORACLE_GRIDS = [("periodic", "spectral"), ("periodic", "fd"), ("neumann", "fd")]


@criterion(6, "dense-matrix oracle equivalence on 8x8")
def test_dense_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = dict(step=0.0, helmholtz=0.0, advdiff=0.0)
    count = 0
    for bc, backend in ORACLE_GRIDS:
        g = make_grid(8, 8, TWO_PI, rng.uniform(3.0, 8.0), bc, backend)
        ops = DenseOps(g)
        X, Y = g.mesh()
        for _ in range(8):
            rho = Field(g, 1.0 + smooth_trig(rng, X, Y, g.Lx, g.Ly, amp=0.2))
            c = Field(g, 1.0 + smooth_trig(rng, X, Y, g.Lx, g.Ly, amp=0.2))
            params = ModelParams(chi=rng.uniform(0.1, 2.0), alpha=rng.uniform(0.5, 2.0),
                                 gamma=rng.uniform(0.5, 2.0), tau=float(rng.choice([0.0, 1.0])))
            dt = 10 ** rng.uniform(-3, -1)
            new = step(SchemeState(rho=rho, c=c), params, dt)
            r_ref, c_ref = ops.step(rho.flat(), c.flat(), dt, params.chi, params.alpha,
                                    params.gamma, params.tau)
            worst["step"] = max(worst["step"],
                                np.linalg.norm(new.rho.flat() - r_ref) / np.linalg.norm(r_ref),
                                np.linalg.norm(new.c.flat() - c_ref) / np.linalg.norm(c_ref))

            beta = rng.uniform(0.1, 50.0)
            f = Field(g, rng.standard_normal(g.shape))
            ref = np.linalg.solve(ops.helmholtz_matrix(beta), f.flat())
            worst["helmholtz"] = max(worst["helmholtz"],
                                     np.linalg.norm(helmholtz_solve(f, beta).flat() - ref) / np.linalg.norm(ref))

            ref = np.linalg.solve(ops.advdiff_matrix(c.flat(), dt, params.chi), f.flat())
            got = advdiff_solve(f, c, dt, params.chi)
            worst["advdiff"] = max(worst["advdiff"], np.linalg.norm(got.flat() - ref) / np.linalg.norm(ref))
            count += 1
    assert count >= 20
    assert worst["step"] <= 1e-9, worst
    assert worst["helmholtz"] <= 1e-9, worst
    assert worst["advdiff"] <= 1e-10, worst
    assert time.perf_counter() - start <= 30.0


@criterion(7, "exponential reformulation agrees with the direct step")
def test_reformulation_equivalence():
    g = make_grid(64, 64, TWO_PI, TWO_PI)
    X, Y = g.mesh()
    rng = np.random.default_rng(7)
    params = ModelParams()
    for _ in range(10):
        rho = dealias(Field(g, 1.0 + smooth_trig(rng, X, Y, g.Lx, g.Ly, modes=3, amp=0.1)))
        c = dealias(Field(g, 1.0 + smooth_trig(rng, X, Y, g.Lx, g.Ly, modes=3, amp=0.1)))
        state = SchemeState(rho=rho, c=c)
        dt = 10 ** rng.uniform(-3, -1)
        a = step(state, params, dt)
        b = step_exponential(state, params, dt)
        assert np.linalg.norm((b.rho - a.rho).values) <= 1e-6 * np.linalg.norm(a.rho.values)
        assert abs(mass(b.rho) - mass(rho)) <= 1e-12 * mass(rho)


@criterion(8, "chi = 0 backward-Euler Fourier factor over 50 steps")
@pytest.mark.parametrize("tau", [0.0, 1.0])
def test_closed_form_heat(tau):
    g = make_grid(32, 32, TWO_PI, TWO_PI)
    X, Y = g.mesh()
    modes = [(1, 0, 0.2), (2, 3, 0.1), (5, 1, 0.05)]
    dt = 0.01

    def exact(n):
        out = np.ones(g.shape)
        for kx, ky, a in modes:
            out += a * np.cos(kx * X) * np.cos(ky * Y) / (1 + dt * (kx * kx + ky * ky)) ** n
        return out

    c0 = InitialCondition.constant(1.0) if tau else None
    cfg = RunConfig(ModelParams(chi=0.0, tau=tau), dt, 50, g,
                    InitialCondition.from_field(Field(g, exact(0))), c0)
    seen = []
    run(cfg, observer=seen.append)
    assert len(seen) == 51
    for s in seen:
        assert np.abs(s.rho.values - exact(s.n)).max() <= 1e-12


@criterion(9, "qualitative blow-up probe around 4*pi/(chi*gamma)")
def test_blowup_probe():
    g = make_grid(64, 64, TWO_PI, TWO_PI)
    profile = InitialCondition.gaussian(1.0, CENTRE, CENTRE, 0.3)
    cfg = RunConfig(ModelParams(), 1e-3, 1000, g, profile)
    report = blowup_probe(cfg, [4.0, 0.1])
    above, below = report.rows
    assert above.mass == pytest.approx(4 * 4 * math.pi, rel=1e-12)
    assert above.blew_up and above.t_blowup < 1.0
    assert below.mass == pytest.approx(0.1 * 4 * math.pi, rel=1e-12)
    assert not below.blew_up
    assert len(below.trace) == 1001
    assert max(m for _, m in below.trace) <= 10 * below.initial_max


@criterion(10, "I/O round trips and deterministic reruns")
def test_io_contracts():
    cfg = subcritical_cfg(1.0, dt=1e-2, n_steps=20).replace(
        grid=make_grid(32, 32, TWO_PI, TWO_PI))
    a, b = run(cfg), run(cfg)
    for f in (a.state.rho, a.state.c):
        data = snapshot_bytes(f, a.state.t)
        back, t = parse_snapshot(data, f.grid)
        assert back.values.tobytes() == f.values.tobytes() and t == a.state.t
    assert parse_diag_csv(write_diag_csv(a.records).decode()) == a.records
    assert write_diag_csv(a.records) == write_diag_csv(b.records)
    assert a.state.rho.values.tobytes() == b.state.rho.values.tobytes()


@criterion(10, "I/O round trips and deterministic reruns")
def test_cli_reruns_bit_identical(tmp_path):
    doc = {
        "grid": {"nx": 32, "ny": 32, "Lx": TWO_PI, "Ly": TWO_PI},
        "params": {"chi": 1, "alpha": 1, "gamma": 1, "tau": 0},
        "time": {"dt": 0.01, "n_steps": 20},
        "initial": {"rho": {"gaussian": {"amplitude": 2, "x0": CENTRE, "y0": CENTRE,
                                         "sigma": 0.6, "background": 0.1}}},
        "output": {"snapshot_every": 10},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["run", "--config", str(path), "--out", str(out), "--no-figures"]) == 0
    files = sorted(p.name for p in outs[0].iterdir())
    assert "diag.csv" in files and "rho_000020.ksf" in files
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
