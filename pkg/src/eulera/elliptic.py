"""Per-Fourier-mode elliptic solves for the stream function.

``AlphaEllipticSolver`` inverts  d - a^2 d^2  (d the Laplacian) with clamped
walls, which is the Biot-Savart-alpha map from potential vorticity to
velocity. ``EulerStreamSolver`` inverts the Dirichlet Laplacian for the
alpha = 0 reference. Boundary conditions replace the collocation rows next
to each wall, so both solvers leave the PDE unenforced on those rows.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import SingularModeError, ValidationError
from .grid import ScalarField, perp_gradient

_PIVOT_FLOOR = 1e-13


def _mode_operator(grid, kk):
    return grid.D2sq - kk * np.eye(grid.N2)


def _wavenumbers_sq(grid):
    # -(ik)^2, so the Nyquist mode sees the same symbol as the x1 derivative
    return (-(grid.ik**2)).real


def _factor(A, mode):
    # Row equilibration: the substituted boundary rows and the fourth-order
    # rows differ in scale by ~N2^6, which otherwise costs about six digits.
    scale = 1.0 / np.abs(A).max(axis=1)
    A = A * scale[:, None]
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            lu, piv = lu_factor(A, check_finite=False)
        except (LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
            raise SingularModeError(mode, str(exc)) from None
    d = np.abs(np.diag(lu))
    if not np.all(np.isfinite(d)) or d.min() <= _PIVOT_FLOOR * d.max():
        raise SingularModeError(mode, f"pivot ratio {d.min() / d.max():.2e}")
    return lu, piv, scale


def _solve_modes(factors, grid, rhs_values, bc_rows, flux=0.0):
    rhs = np.fft.rfft(rhs_values, axis=0)
    rhs[:, bc_rows] = 0.0
    # stream value on the upper wall carries the net x1 flux: u1 = -d(phi)/dx2
    rhs[0, grid.N2 - 1] = -flux * grid.N1
    out = np.empty_like(rhs)
    for m, fac in enumerate(factors):
        lu, piv, scale = fac
        b = np.stack([rhs[m].real, rhs[m].imag], axis=1) * scale[:, None]
        x = lu_solve((lu, piv), b, check_finite=False)
        out[m] = x[:, 0] + 1j * x[:, 1]
    return np.fft.irfft(out, n=grid.N1, axis=0)


def _check_input(solver, q):
    if not solver.grid.same_as(q.grid):
        raise ValidationError("field and solver live on different grids")
    if not np.all(np.isfinite(q.values)):
        raise ValidationError("right-hand side contains non-finite values")


class AlphaEllipticSolver:
    """Clamped solve of  d(phi) - alpha^2 d^2(phi) = q  for every Fourier mode.

    One LU factorization per rfft mode is built at construction; the solver
    is read-only afterwards.
    """

    def __init__(self, grid, alpha):
        if not alpha > 0:
            raise ValidationError(f"alpha must be positive, got {alpha}")
        self.grid = grid
        self.alpha = float(alpha)
        n = grid.N2
        self.bc_rows = [0, 1, n - 2, n - 1]
        self._ops = []
        self.factors = []
        a2 = self.alpha**2
        for m, kk in enumerate(_wavenumbers_sq(grid)):
            Lm = _mode_operator(grid, kk)
            op = Lm - a2 * (Lm @ Lm)
            A = op.copy()
            A[[0, n - 1]] = 0.0
            A[0, 0] = A[n - 1, n - 1] = 1.0
            A[1] = grid.D2[0]
            A[n - 2] = grid.D2[n - 1]
            self._ops.append(op)
            self.factors.append(_factor(A, m))

    def solve(self, q, flux=0.0):
        """Return (phi, u). ``flux`` is the net x1 volume flux through the
        channel, imposed as phi = 0 on the lower wall and phi = -flux on the
        upper wall; zero gives the fully clamped problem."""
        _check_input(self, q)
        phi = _solve_modes(self.factors, self.grid, q.values, self.bc_rows, flux)
        phi = ScalarField(self.grid, phi)
        return phi, perp_gradient(phi)

    def forward(self, phi):
        coef = np.fft.rfft(phi.values, axis=0)
        out = np.einsum("mij,mj->mi", np.asarray(self._ops), coef)
        return ScalarField(self.grid, np.fft.irfft(out, n=self.grid.N1, axis=0))

    @property
    def interior(self):
        return slice(2, self.grid.N2 - 2)


class EulerStreamSolver:
    """Dirichlet solve of  d(psi) = omega  for every Fourier mode."""

    alpha = 0.0

    def __init__(self, grid):
        self.grid = grid
        n = grid.N2
        self.bc_rows = [0, n - 1]
        self._ops = []
        self.factors = []
        for m, kk in enumerate(_wavenumbers_sq(grid)):
            op = _mode_operator(grid, kk)
            A = op.copy()
            A[[0, n - 1]] = 0.0
            A[0, 0] = A[n - 1, n - 1] = 1.0
            self._ops.append(op)
            self.factors.append(_factor(A, m))

    def solve(self, omega, flux=0.0):
        _check_input(self, omega)
        psi = _solve_modes(self.factors, self.grid, omega.values, self.bc_rows, flux)
        psi = ScalarField(self.grid, psi)
        return psi, perp_gradient(psi)

    def forward(self, psi):
        coef = np.fft.rfft(psi.values, axis=0)
        out = np.einsum("mij,mj->mi", np.asarray(self._ops), coef)
        return ScalarField(self.grid, np.fft.irfft(out, n=self.grid.N1, axis=0))

    @property
    def interior(self):
        return slice(1, self.grid.N2 - 1)


def make_solver(grid, alpha):
    """Biot-Savart-alpha solver for alpha > 0, Euler stream solver for alpha == 0."""
    if alpha == 0:
        return EulerStreamSolver(grid)
    return AlphaEllipticSolver(grid, alpha)


def biot_savart_alpha(solver, q, flux=0.0):
    """q -> (phi, u = perp_gradient(phi)) with clamped phi."""
    return solver.solve(q, flux)


def euler_stream(solver, omega, flux=0.0):
    """omega -> (psi, u = perp_gradient(psi)) with psi = 0 on the walls."""
    return solver.solve(omega, flux)


def apply_forward(solver, phi):
    """Nodal values of  d(phi) - alpha^2 d^2(phi)."""
    return solver.forward(phi)


def interior_residual(solver, rhs, stream):
    """Relative L2 (quadrature) residual over the rows where the PDE is collocated."""
    g = solver.grid
    r = solver.forward(stream).values - rhs.values
    sl = solver.interior
    w = g.weights[:, sl]
    num = np.sum(w * r[:, sl] ** 2)
    den = np.sum(w * rhs.values[:, sl] ** 2)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))
