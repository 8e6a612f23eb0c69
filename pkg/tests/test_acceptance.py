"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one line (criterion, PASS/FAIL, measured values) that is
printed in the terminal summary, then asserts. The sweep-based criteria share
one run of the default sweep.
"""
import filecmp
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from eulera.corrector import EXPECTED_SLOPES, scaling_study
from eulera.elliptic import AlphaEllipticSolver, biot_savart_alpha
from eulera.experiments import (
    DEFAULT_LENGTH,
    ParallelFlowCase,
    SweepConfig,
    initial_velocity,
    lift_family,
    parallel_flow_verify,
    run_sweep,
)
from eulera.grid import l2, make_grid
from eulera.initdata import certify_E1, project_family, stokes_eigenbasis
from eulera.stepper import FlowModel, StepConfig, integrate

Q_TOL = 1e-9


def record(log, n, ok, detail):
    log[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def grid():
    return make_grid(DEFAULT_LENGTH, 32, 64)


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep_a")
    t = time.perf_counter()
    res = run_sweep(SweepConfig(out=str(out)))
    return res, time.perf_counter() - t, out


@pytest.fixture(scope="module")
def parallel_reports(grid):
    reps = {}
    for profile in ("poiseuille", "sin"):
        for alpha in (0.1, 0.05):
            reps[profile, alpha] = parallel_flow_verify(ParallelFlowCase(profile, alpha), grid, T=1.0, dt=1e-3)
    return reps


@pytest.fixture(scope="module")
def energy_study(grid):
    """Energy drift of the alpha = 0.1 sweep member at dt = 4e-3, 2e-3, 1e-3."""
    u0 = initial_velocity(grid)
    member = lift_family(u0, (0.1,)).members[0]
    model = FlowModel(grid, 0.1)
    s0 = model.state_from_velocity(member.u)
    out = []
    for dt in (4e-3, 2e-3, 1e-3):
        t = time.perf_counter()
        tr = integrate(s0, 1.0, StepConfig(dt=dt), model, stride=10**9)
        E, Q = tr.column("energy"), tr.column("l2_q")
        out.append((dt, abs(E[-1] - E[0]) / E[0], float(Q.max() / Q[0]), time.perf_counter() - t))
    return out


def test_criterion_01_elliptic_manufactured(acceptance_log):
    import sympy as sp

    x1, x2 = sp.symbols("x1 x2")
    L = DEFAULT_LENGTH
    phi = sp.sin(2 * sp.pi * x1 / L) * x2**2 * (1 - x2) ** 2
    lap = lambda f: sp.diff(f, x1, 2) + sp.diff(f, x2, 2)
    q_expr = lap(phi) - sp.Rational(1, 100) * lap(lap(phi))
    t = time.perf_counter()
    g = make_grid(L, 32, 64)
    q = g.field(sp.lambdify((x1, x2), q_expr, "numpy"))
    got, _ = biot_savart_alpha(AlphaEllipticSolver(g, 0.1), q)
    elapsed = time.perf_counter() - t
    want = g.field(sp.lambdify((x1, x2), phi, "numpy"))
    err = l2(got - want) / l2(want)
    record(acceptance_log, 1, err <= 1e-8 and elapsed < 1.0, f"rel L2 error {err:.2e} (<= 1e-8), {elapsed:.3f} s (< 1 s)")


def test_criterion_02_closed_form_1d(acceptance_log):
    a = 0.1
    g = make_grid(DEFAULT_LENGTH, 32, 64)
    phi, _ = AlphaEllipticSolver(g, a).solve(g.field(lambda x1, x2: 1.0 + 0 * x1))
    # phi'' - a^2 phi'''' = 1, clamped: y^2/2 + c cosh(y/a) + b with y = x2 - 1/2
    y = g.x2_nodes - 0.5
    c = -a / (2 * math.sinh(1 / (2 * a)))
    b = -0.125 - c * math.cosh(1 / (2 * a))
    exact = y**2 / 2 + c * np.cosh(y / a) + b
    err = np.abs(phi.values - exact[None, :]).max() / np.abs(exact).max()
    record(acceptance_log, 2, err <= 1e-8, f"max rel error {err:.2e} (<= 1e-8)")


def test_criterion_03_stokes_eigenvalues(acceptance_log, grid):
    basis = stokes_eigenbasis(grid, 15, 8)
    shear = sorted(p.lam for p in basis.pairs if p.mode == 0)[:5]
    rel = max(abs(lam - (j * math.pi) ** 2) / (j * math.pi) ** 2 for j, lam in enumerate(shear, 1))
    gram = np.abs(basis.gramian(10) - np.eye(10)).max()
    record(
        acceptance_log, 3, rel <= 1e-8 and gram <= 1e-8,
        f"k=0 branch rel error {rel:.2e} (<= 1e-8), Gram residual of first 10 {gram:.2e} (<= 1e-8)",
    )


def test_criterion_04_potential_vorticity_bound(acceptance_log, sweep, parallel_reports, energy_study):
    res, _, _ = sweep
    ratios = {"reference": res.reference["q_ratio"]}
    ratios.update({f"alpha={r.alpha:g}": r.q_ratio for r in res.rows})
    ratios.update({f"{p} alpha={a:g}": rep.q_ratio for (p, a), rep in parallel_reports.items()})
    ratios.update({f"energy study dt={dt:g}": q for dt, _, q, _ in energy_study})
    worst = max(ratios, key=ratios.get)
    ok = all(math.isfinite(v) and v <= 1 + Q_TOL for v in ratios.values())
    record(
        acceptance_log, 4, ok,
        f"{len(ratios)} trajectories, worst max|q(t)|/|q0| - 1 = {ratios[worst] - 1:.2e} ({worst}, <= 1e-9)",
    )


def test_criterion_05_energy_identity(acceptance_log, energy_study):
    (_, d1, _, _), (_, d2, _, _), (_, d3, _, t3) = energy_study
    order = math.log2((d1 - d2) / (d2 - d3)) if d2 != d3 and (d1 - d2) / (d2 - d3) > 0 else float("nan")
    slowest = max(t for *_, t in energy_study)
    ok = d3 <= 1e-3 and order >= 2.0 and slowest < 120
    record(
        acceptance_log, 5, ok,
        f"drift at dt=1e-3 {d3:.2e} (<= 1e-3); drifts {d1:.3e}, {d2:.3e}, {d3:.3e}; "
        f"3-point order {order:.3f} (>= 2); pairwise {math.log2(d1 / d2):.3f}, {math.log2(d2 / d3):.3f}; "
        f"slowest run {slowest:.0f} s (< 120 s)",
    )


def test_criterion_06_parallel_flows(acceptance_log, parallel_reports):
    stat = max(r.stationarity for r in parallel_reports.values())
    res = max(r.residual_l2 for r in parallel_reports.values())
    record(acceptance_log, 6, stat <= 1e-4 and res <= 1e-8, f"sup stationarity {stat:.2e} (<= 1e-4), residual {res:.2e} (<= 1e-8)")


def test_criterion_07_corrector_scalings(acceptance_log):
    g = make_grid(1.0, 4, 128)
    t = time.perf_counter()
    rep = scaling_study(g.field(lambda x1, x2: (x2 * (1 - x2)) ** 2 + 0 * x1), [2.0**-j for j in range(3, 7)])
    elapsed = time.perf_counter() - t
    within = rep.within(0.15)
    detail = ", ".join(f"{k} {rep.slopes[k]:+.3f} vs {EXPECTED_SLOPES[k]:+.1f}" for k in EXPECTED_SLOPES)
    record(acceptance_log, 7, all(within.values()) and elapsed < 10, f"slopes {detail} (+-0.15); {elapsed:.2f} s")


def test_criterion_08_projection_certificate(acceptance_log, grid):
    basis = stokes_eigenbasis(grid, 15, 8)
    fam = project_family(basis, initial_velocity(grid), (0.2, 0.1, 0.05, 0.025))
    rep = certify_E1(fam)
    slope = rep.slope_energy_layer
    ok = rep.energy_layer_ok and rep.wall_ok and rep.gap_monotone
    record(
        acceptance_log, 8, ok,
        f"m = {[mb.m for mb in fam.members]}; slope of alpha^2|grad u0a|^2 {slope:.3f} (>= {2 / 3 - 0.2:.3f}); "
        f"wall max {rep.wall_max.max():.1e} (<= 1e-9); gaps {np.array2string(rep.l2_gap, precision=3)} (strictly decreasing)",
    )


def test_criterion_09_main_sweep(acceptance_log, sweep):
    res, elapsed, _ = sweep
    g = res.gate
    ok = g["passed"] and elapsed < 15 * 60
    diffs = ", ".join(f"{r.sup_L2_diff:.3e}" for r in res.rows)
    grads = ", ".join(f"{r.sup_alpha2_gradnorm:.3e}" for r in res.rows)
    record(
        acceptance_log, 9, ok,
        f"sup|u-ubar| {diffs}; sup a^2|grad u| {grads}; smallest {res.rows[-1].sup_L2_diff:.3e} "
        f"< bound {g.get('smallness_bound', float('nan')):.3e}; runtime {elapsed:.0f} s (< 900 s)",
    )


def test_criterion_10_determinism(acceptance_log, sweep, tmp_path):
    from eulera.cli import cli_main

    res, _, out_a = sweep
    out_b = tmp_path / "sweep_b"
    run_sweep(replace(res.config, out=str(out_b)))
    same = {"sweep.csv": filecmp.cmp(out_a / "sweep.csv", out_b / "sweep.csv", shallow=False),
            "reference.csv": filecmp.cmp(out_a / "reference.csv", out_b / "reference.csv", shallow=False)}
    for name, argv, csv_name in (
        ("corrector", ["corrector"], "corrector.csv"),
        ("eigen", ["eigen"], "manifest.csv"),
    ):
        runs = []
        for tag in "ab":
            d = tmp_path / f"{name}_{tag}"
            assert cli_main(argv + ["--out", str(d)]) == 0
            runs.append(d / csv_name)
        same[csv_name] = filecmp.cmp(*runs, shallow=False)
    record(acceptance_log, 10, all(same.values()), "bit-identical: " + ", ".join(f"{k} {v}" for k, v in same.items()))
