import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eulera.errors import ValidationError
from eulera.experiments import (
    ConvergenceRow,
    ParallelFlowCase,
    SweepConfig,
    build_family,
    initial_velocity,
    lift_family,
    mollify_family,
    parallel_flow_verify,
    reconstruct_parallel_pressure,
    run_sweep,
    steady_residual,
    sweep_gate,
)
from eulera.grid import curl, l2, make_grid
from eulera.initdata import certify_E1
from eulera.stepper import FlowModel


@pytest.fixture(scope="module")
def grid():
    return make_grid(16 * np.pi, 16, 48)


def rows(diffs, grads, init=None):
    init = init or [0.0] * len(diffs)
    out = []
    for a, d, g, i in zip((0.2, 0.1, 0.05, 0.025), diffs, grads, init):
        r = ConvergenceRow(a)
        r.sup_L2_diff, r.sup_alpha2_gradnorm, r.init_diff = d, g, i
        out.append(r)
    return out


class TestGate:
    def test_passes(self):
        g = sweep_gate(rows([4, 2, 1, 0.5], [3, 2, 1, 0.5], [3, 1.5, 0.8, 0.4]), 0.01)
        assert g["passed"]
        assert g["smallness_bound"] == pytest.approx(2 * 0.41)

    def test_non_monotone_difference(self):
        g = sweep_gate(rows([4, 5, 1, 0.5], [3, 2, 1, 0.5], [1, 1, 1, 1]), 0.0)
        assert not g["diff_decreasing"] and not g["passed"]

    def test_equal_values_are_not_strictly_decreasing(self):
        g = sweep_gate(rows([4, 2, 2, 0.5], [3, 2, 1, 0.5], [1, 1, 1, 1]), 0.0)
        assert not g["diff_decreasing"]

    def test_smallness(self):
        g = sweep_gate(rows([4, 2, 1, 0.5], [3, 2, 1, 0.5], [0.1, 0.1, 0.1, 0.1]), 0.01)
        assert not g["smallest_below_bound"]

    def test_nan_floor_fails_smallness(self):
        g = sweep_gate(rows([4, 2, 1, 0.5], [3, 2, 1, 0.5], [1, 1, 1, 1]), math.nan)
        assert not g["passed"]

    def test_failed_row(self):
        rs = rows([4, 2, 1, 0.5], [3, 2, 1, 0.5], [1, 1, 1, 1])
        rs[-1].failure = "PicardConvergenceError: x"
        g = sweep_gate(rs, 0.0)
        assert not g["rows_ok"] and not g["passed"]


class TestSweepConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"alphas": (0.2, 0.1, 0.05)},
            {"alphas": (0.1, 0.2, 0.05, 0.01)},
            {"alphas": (0.2, 0.1, 0.05, 0.0)},
            {"T": 0.0},
            {"dt": -1.0},
            {"init_mode": "random"},
            {"stride": 0},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError):
            SweepConfig(**kwargs)

    def test_defaults(self):
        c = SweepConfig()
        assert (c.N1, c.N2, c.T, c.dt) == (32, 64, 1.0, 1e-3)
        assert c.alphas == (0.2, 0.1, 0.05, 0.025)
        assert c.n_steps == 1000 and c.sample_stride == 20


class TestInitialData:
    def test_default_datum(self, grid):
        u = initial_velocity(grid)
        L = grid.L
        X1, X2 = grid.mesh()
        want = -np.sin(2 * np.pi * X1 / L) * 2 * np.pi * np.sin(np.pi * X2) * np.cos(np.pi * X2)
        np.testing.assert_allclose(u.u1.values, want, atol=1e-10)
        assert u.wall_max() < 1e-12

    def test_unknown_profile(self, grid):
        with pytest.raises(ValidationError):
            initial_velocity(grid, "vortex")

    def test_lift_family(self, grid):
        u0 = initial_velocity(grid)
        fam = lift_family(u0, (0.2, 0.1, 0.05, 0.025))
        for mb in fam.members:
            assert mb.u.wall_max() < 1e-10
            q = FlowModel(grid, mb.alpha).potential_vorticity(mb.u)
            assert l2(q - curl(u0)) < 1e-7 * l2(curl(u0))
        rep = certify_E1(fam)
        assert rep.passed and rep.gap_monotone and rep.energy_layer_ok

    def test_lift_keeps_flux(self, grid):
        u0 = initial_velocity(grid, "poiseuille")
        fam = lift_family(u0, (0.2, 0.1, 0.05, 0.025))
        net = lambda v: (v.u1.values @ grid.w2).mean()
        for mb in fam.members:
            assert net(mb.u) == pytest.approx(net(u0), rel=1e-10)

    def test_mollify_family(self, grid):
        u0 = initial_velocity(grid)
        fam = mollify_family(u0, (0.2, 0.1, 0.05, 0.025))
        gaps = [l2(mb.u - u0) for mb in fam.members]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert all(mb.u.wall_max() < 1e-10 for mb in fam.members)

    @pytest.mark.parametrize("mode", ["lift", "mollify"])
    def test_build_family_members_are_reconstructed(self, grid, mode):
        cfg = SweepConfig(N1=16, N2=48, init_mode=mode)
        fam = build_family(cfg, grid, initial_velocity(grid))
        for mb in fam.members:
            again = FlowModel(grid, mb.alpha).state_from_velocity(mb.u).u
            assert l2(again - mb.u) < 1e-8 * l2(mb.u)


class TestParallel:
    @pytest.mark.parametrize("profile", ["sin", "poiseuille"])
    @pytest.mark.parametrize("alpha", [0.0, 0.1, 0.05])
    def test_steady_residual_closed_form_pressure(self, profile, alpha):
        g = make_grid(2 * np.pi, 8, 32)
        case = ParallelFlowCase(profile, alpha)
        u = case.velocity(g)
        p = reconstruct_parallel_pressure(case, g)
        assert l2(steady_residual(u, alpha, p)) < 1e-10

    def test_wrong_pressure_leaves_residual(self):
        g = make_grid(2 * np.pi, 8, 32)
        case = ParallelFlowCase("sin", 0.1)
        assert l2(steady_residual(case.velocity(g), 0.1, g.zeros())) > 1e-2

    def test_non_parallel_flow_not_steady(self):
        g = make_grid(2 * np.pi, 16, 32)
        u = initial_velocity(g)
        assert l2(steady_residual(u, 0.1, g.zeros())) > 1e-3

    def test_profile_must_vanish(self):
        with pytest.raises(ValidationError):
            ParallelFlowCase(lambda y: 1 + 0 * y)

    def test_callable_profile(self):
        g = make_grid(2 * np.pi, 8, 32)
        case = ParallelFlowCase(lambda y: y**2 * (1 - y), 0.1)
        assert l2(steady_residual(case.velocity(g), 0.1, reconstruct_parallel_pressure(case, g))) < 1e-10

    @pytest.mark.parametrize("bad", ["cosine", 3])
    def test_unknown_profile(self, bad):
        with pytest.raises(ValidationError):
            ParallelFlowCase(bad)

    def test_short_stationarity_run(self, tmp_path):
        g = make_grid(2 * np.pi, 8, 32)
        rep = parallel_flow_verify(ParallelFlowCase("poiseuille", 0.1), g, T=0.02, dt=5e-3, out=tmp_path)
        assert rep.stationarity < 1e-10
        assert (tmp_path / "pressure.eaf1").exists()

    def test_zero_profile(self):
        g = make_grid(2 * np.pi, 8, 32)
        rep = parallel_flow_verify(ParallelFlowCase("zero", 0.1), g, T=0.01, dt=5e-3)
        assert rep.stationarity == 0.0 and rep.residual_l2 == 0.0

    def test_rough_profile_warns(self):
        g = make_grid(2 * np.pi, 8, 32)
        case = ParallelFlowCase(lambda y: np.abs(y - 0.5) - 0.5, 0.1)
        with pytest.warns(UserWarning, match="under-resolved"):
            parallel_flow_verify(case, g, T=0.005, dt=5e-3)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.0, 0.3), st.floats(0.1, 3.0))
    def test_pressure_residual_any_alpha(self, alpha, amp):
        g = make_grid(2 * np.pi, 4, 24)
        case = ParallelFlowCase(lambda y: amp * np.sin(np.pi * y) ** 2, alpha)
        p = reconstruct_parallel_pressure(case, g)
        assert l2(steady_residual(case.velocity(g), alpha, p)) < 1e-9 * (1 + amp) ** 3


@pytest.fixture(scope="module")
def cfg(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    return SweepConfig(N1=8, N2=32, T=0.02, dt=5e-3, stride=2, out=str(out))


class TestSmallSweep:
    def test_outputs(self, cfg):
        res = run_sweep(cfg)
        assert [r.alpha for r in res.rows] == [0.2, 0.1, 0.05, 0.025]
        assert all(r.ok for r in res.rows)
        rows = list(csv.DictReader(open(f"{cfg.out}/sweep.csv")))
        assert len(rows) == 4 and float(rows[0]["alpha"]) == 0.2
        ref = dict(csv.reader(open(f"{cfg.out}/reference.csv")))
        assert int(ref["samples"]) == 3
        assert open(f"{cfg.out}/sweep.svg").read().startswith("<svg")

    def test_deterministic(self, cfg, tmp_path):
        run_sweep(cfg)
        first = open(f"{cfg.out}/sweep.csv", "rb").read()
        run_sweep(replace(cfg, out=str(tmp_path)))
        assert (tmp_path / "sweep.csv").read_bytes() == first

    def test_no_half_dt_check_gives_nan_floor(self, cfg):
        res = run_sweep(replace(cfg, half_dt_check=False, out=None))
        assert math.isnan(res.reference["dt_floor"])
        assert not res.gate["smallest_below_bound"]
