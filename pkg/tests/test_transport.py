import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from eulera.errors import CFLError, ValidationError
from eulera.grid import VectorField, l2, make_grid
from eulera.transport import (
    AdvectionScheme,
    Interpolator,
    advect,
    backward_feet,
    cfl_number,
    step_error_estimate,
)


def uniform(grid, c1, c2=0.0):
    return VectorField(grid.field(lambda a, b: c1 + 0 * a), grid.field(lambda a, b: c2 + 0 * a))


def shear(grid, amp=1.0):
    # parallel flow, u2 = 0 so feet stay on their x2 line
    return VectorField(grid.field(lambda a, b: amp * np.sin(np.pi * b) + 0 * a), grid.zeros())


class TestInterpolator:
    @pytest.mark.parametrize("kind", ["spectral", "cubic"])
    def test_reproduces_nodes(self, grid_small, kind):
        f = grid_small.field(lambda a, b: np.sin(a) * np.exp(b))
        X1, X2 = grid_small.mesh()
        out = Interpolator(grid_small, X1, X2, kind)(f.values)
        np.testing.assert_allclose(out, f.values.ravel(), atol=1e-12)

    def test_spectral_exact_for_band_limited_polynomial(self, grid_small):
        rng = np.random.default_rng(7)
        x1 = rng.uniform(0, grid_small.L, 50)
        x2 = rng.uniform(0, 1, 50)
        f = lambda a, b: np.cos(3 * a) * b**5 + np.sin(a) * b
        out = Interpolator(grid_small, x1, x2)(grid_small.field(f).values)
        np.testing.assert_allclose(out, f(x1, x2), atol=1e-12)

    def test_periodic_wrap(self, grid_small):
        f = grid_small.field(lambda a, b: np.sin(a) + b)
        ip = Interpolator(grid_small, [0.3 + grid_small.L, -grid_small.L + 0.3], [0.4, 0.4])
        out = ip(f.values)
        np.testing.assert_allclose(out, np.sin(0.3) + 0.4, atol=1e-12)

    def test_unknown_kind(self, grid_small):
        with pytest.raises(ValidationError):
            Interpolator(grid_small, [0.0], [0.0], "linear")

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_limiter_keeps_cell_range(self, seed):
        g = make_grid(2 * np.pi, 8, 12)
        rng = np.random.default_rng(seed)
        vals = rng.normal(size=g.shape)
        x1 = rng.uniform(0, g.L, 40)
        x2 = rng.uniform(0, 1, 40)
        ip = Interpolator(g, x1, x2)
        out = ip(vals, limit=True)
        corners = vals[ip.cell1[:, :, None], ip.cell2[:, None, :]].reshape(40, 4)
        assert np.all(out >= corners.min(axis=1) - 1e-15)
        assert np.all(out <= corners.max(axis=1) + 1e-15)


class TestAdvect:
    def test_zero_velocity_is_identity(self, grid_small):
        q = grid_small.field(lambda a, b: np.sin(a) * b)
        out = advect(AdvectionScheme(grid_small), q, VectorField.zeros(grid_small), 0.1)
        np.testing.assert_array_equal(out.values, q.values)

    @pytest.mark.parametrize("order", [1, 2])
    def test_uniform_translation(self, grid_32x64, order):
        c, dt = 0.7, 0.05
        q = grid_32x64.field(lambda a, b: np.sin(2 * a) * np.cos(b))
        s = AdvectionScheme(grid_32x64, order=order, limiter=False)
        out = advect(s, q, uniform(grid_32x64, c), dt)
        want = grid_32x64.field(lambda a, b: np.sin(2 * (a - c * dt)) * np.cos(b))
        assert np.abs(out.values - want.values).max() < 1e-12

    def test_shear_flow_exact(self, grid_32x64):
        dt = 0.02
        q = grid_32x64.field(lambda a, b: np.cos(a) * b)
        s = AdvectionScheme(grid_32x64, limiter=False)
        out = advect(s, q, shear(grid_32x64), dt)
        want = grid_32x64.field(lambda a, b: np.cos(a - dt * np.sin(np.pi * b)) * b)
        assert np.abs(out.values - want.values).max() < 1e-10

    def test_x2_independent_fields_are_invariant_under_shear(self, grid_32x64):
        q = grid_32x64.field(lambda a, b: b**3 + 0 * a)
        out = advect(AdvectionScheme(grid_32x64), q, shear(grid_32x64), 0.05)
        np.testing.assert_allclose(out.values, q.values, atol=1e-13)

    def test_limited_output_within_data_range(self, grid_32x64):
        q = grid_32x64.field(lambda a, b: np.tanh(20 * (b - 0.5)) + 0 * a)
        u = VectorField(grid_32x64.field(lambda a, b: 0 * a + 0.3), grid_32x64.field(lambda a, b: 0.2 * np.sin(a) * np.sin(np.pi * b)))
        out = advect(AdvectionScheme(grid_32x64, limiter=True), q, u, 0.05)
        assert out.values.max() <= q.values.max() + 1e-14
        assert out.values.min() >= q.values.min() - 1e-14

    def test_midpoint_feet_local_error_third_order(self, grid_32x64):
        g = grid_32x64
        f1 = lambda a, b: np.sin(np.pi * b)
        f2 = lambda a, b: 0.1 * np.sin(a) * np.sin(np.pi * b) ** 2
        u = VectorField(g.field(lambda a, b: f1(a, b) + 0 * a), g.field(f2))
        X1, X2 = g.mesh()
        pts = [(5, 20), (11, 31), (23, 45)]
        errs = []
        for dt in (0.04, 0.02):
            F1, F2 = backward_feet(AdvectionScheme(g, order=2), u, dt)
            for i, j in pts:
                sol = solve_ivp(lambda t, y: [-f1(*y), -f2(*y)], (0, dt), [X1[i, j], X2[i, j]], rtol=1e-13, atol=1e-14)
                errs.append(np.hypot(F1[i, j] - sol.y[0, -1], F2[i, j] - sol.y[1, -1]))
        coarse, fine = max(errs[:3]), max(errs[3:])
        assert np.log2(coarse / fine) > 2.7

    def test_step_error_estimate_small_for_smooth_data(self, grid_32x64):
        q = grid_32x64.field(lambda a, b: np.sin(a) * np.cos(np.pi * b))
        s = AdvectionScheme(grid_32x64, limiter=False)
        e = step_error_estimate(s, q, shear(grid_32x64), 0.01)
        assert e < 1e-8 * l2(q)


class TestValidation:
    def test_cfl_number_uniform(self, grid_32x64):
        c = cfl_number(grid_32x64, uniform(grid_32x64, 2.0), 0.01)
        assert c == pytest.approx(2.0 * 0.01 / grid_32x64.h1)

    def test_cfl_violation(self, grid_32x64):
        q = grid_32x64.zeros()
        with pytest.raises(CFLError):
            advect(AdvectionScheme(grid_32x64), q, uniform(grid_32x64, 100.0), 1.0)

    def test_nonfinite_velocity(self, grid_small):
        u = uniform(grid_small, np.nan)
        with pytest.raises(CFLError):
            advect(AdvectionScheme(grid_small), grid_small.zeros(), u, 0.01)

    @pytest.mark.parametrize("dt", [0.0, -1e-3])
    def test_nonpositive_dt(self, grid_small, dt):
        with pytest.raises(ValidationError):
            advect(AdvectionScheme(grid_small), grid_small.zeros(), uniform(grid_small, 1.0), dt)

    @pytest.mark.parametrize("kwargs", [{"order": 3}, {"interpolation": "linear"}])
    def test_bad_scheme(self, grid_small, kwargs):
        with pytest.raises(ValidationError):
            AdvectionScheme(grid_small, **kwargs)
