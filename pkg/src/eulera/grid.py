"""Periodic channel [0, L) x [0, 1] with Fourier-Chebyshev collocation.

Nodal arrays have shape ``(N1, N2)``: axis 0 runs over the uniform periodic
x1 nodes, axis 1 over Chebyshev-Lobatto x2 nodes ordered from the lower wall
(x2 = 0) to the upper wall (x2 = 1).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


def cheb_lobatto(n_points):
    """Chebyshev-Lobatto nodes on [0, 1] (ascending) and first-derivative matrix.

    Off-diagonal entries use the trigonometric form of the node differences
    and the diagonal is fixed by the negative-sum rule, which keeps the
    derivative of a constant at round-off level.
    """
    n = n_points - 1
    j = np.arange(n_points)
    theta = np.pi * j / n
    # t_j = cos(theta_j) descends from 1 to -1; x = (1 - t)/2 ascends.
    x = np.sin(theta / 2.0) ** 2
    x[0], x[-1] = 0.0, 1.0
    c = np.ones(n_points)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    ii, jj = np.meshgrid(j, j, indexing="ij")
    # t_i - t_j, written to avoid cancellation
    dt = 2.0 * np.sin(np.pi * (ii + jj) / (2 * n)) * np.sin(np.pi * (jj - ii) / (2 * n))
    np.fill_diagonal(dt, 1.0)
    D = np.outer(c, 1.0 / c) / dt
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    # dx/dt = -1/2
    return x, -2.0 * D


def clenshaw_curtis(n_points):
    """Clenshaw-Curtis weights for the Lobatto nodes, scaled to [0, 1]."""
    n = n_points - 1
    theta = np.pi * np.arange(n_points) / n
    w = np.zeros(n_points)
    interior = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k * k - 1)
        v -= np.cos(n * theta[interior]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k * k - 1)
    w[interior] = 2.0 * v / n
    return 0.5 * w


@dataclass(frozen=True, eq=False)
class Grid:
    L: float
    N1: int
    N2: int
    x1_nodes: np.ndarray = field(repr=False)
    x2_nodes: np.ndarray = field(repr=False)
    D2: np.ndarray = field(repr=False)
    D2sq: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)  # angular wavenumbers of the rfft modes
    ik: np.ndarray = field(repr=False)  # x1 derivative symbol (Nyquist zeroed)

    @property
    def shape(self):
        return (self.N1, self.N2)

    @property
    def h1(self):
        return self.L / self.N1

    @property
    def n_modes(self):
        return self.N1 // 2 + 1

    @property
    def weights(self):
        """2D quadrature weights, shape (N1, N2)."""
        return np.outer(np.full(self.N1, self.h1), self.w2)

    def mesh(self):
        return np.meshgrid(self.x1_nodes, self.x2_nodes, indexing="ij")

    def field(self, func):
        """Sample ``func(x1, x2)`` on the nodes."""
        X1, X2 = self.mesh()
        return ScalarField(self, np.broadcast_to(func(X1, X2), self.shape).astype(float))

    def zeros(self):
        return ScalarField(self, np.zeros(self.shape))

    def same_as(self, other):
        return self is other or (
            self.N1 == other.N1 and self.N2 == other.N2 and self.L == other.L
        )


def make_grid(L, N1, N2):
    if not (np.isfinite(L) and L > 0):
        raise ValidationError(f"channel length must be positive, got {L}")
    if int(N1) != N1 or N1 < 4 or N1 % 2:
        raise ValidationError(f"N1 must be an even integer >= 4, got {N1}")
    if int(N2) != N2 or N2 < 8:
        raise ValidationError(f"N2 must be an integer >= 8, got {N2}")
    N1, N2, L = int(N1), int(N2), float(L)
    x2, D2 = cheb_lobatto(N2)
    k = 2.0 * np.pi / L * np.arange(N1 // 2 + 1)
    ik = 1j * k
    ik[-1] = 0.0
    arrays = dict(
        x1_nodes=L * np.arange(N1) / N1,
        x2_nodes=x2,
        D2=D2,
        D2sq=D2 @ D2,
        w2=clenshaw_curtis(N2),
        k=k,
        ik=ik,
    )
    for a in arrays.values():
        a.flags.writeable = False
    return Grid(L=L, N1=N1, N2=N2, **arrays)


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValidationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def modes(self):
        """Complex x1-Fourier coefficients, shape (N1//2 + 1, N2)."""
        return np.fft.rfft(self.values, axis=0)

    @classmethod
    def from_modes(cls, grid, modes):
        return cls(grid, np.fft.irfft(modes, n=grid.N1, axis=0))

    def _wrap(self, values):
        return ScalarField(self.grid, values)

    def _other(self, other):
        if isinstance(other, ScalarField):
            if not self.grid.same_as(other.grid):
                raise ValidationError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self._wrap(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.values)

    def __mul__(self, other):
        return self._wrap(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / self._other(other))

    def __neg__(self):
        return self._wrap(-self.values)

    def wall_values(self):
        return np.concatenate([self.values[:, 0], self.values[:, -1]])


@dataclass(frozen=True, eq=False)
class VectorField:
    u1: ScalarField
    u2: ScalarField

    @property
    def grid(self):
        return self.u1.grid

    @classmethod
    def zeros(cls, grid):
        return cls(grid.zeros(), grid.zeros())

    @property
    def components(self):
        return (self.u1, self.u2)

    def __add__(self, other):
        return VectorField(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other):
        return VectorField(self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, c):
        return VectorField(self.u1 * c, self.u2 * c)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(-self.u1, -self.u2)

    def magnitude(self):
        return np.hypot(self.u1.values, self.u2.values)

    def wall_max(self):
        return float(
            max(np.abs(self.u1.wall_values()).max(), np.abs(self.u2.wall_values()).max())
        )


# ---------------------------------------------------------------------------
# differentiation


def dx1(grid, values, order=1):
    """Spectral x1-derivative of nodal values."""
    if order == 0:
        return values
    coef = np.fft.rfft(values, axis=0)
    coef *= (grid.ik**order)[:, None]
    return np.fft.irfft(coef, n=grid.N1, axis=0)


def dx2(grid, values, order=1):
    """Chebyshev x2-derivative of nodal values."""
    out = values
    for _ in range(order):
        out = out @ grid.D2.T
    return out


def laplacian_values(grid, values):
    return dx1(grid, values, 2) + values @ grid.D2sq.T


def _check_finite(f):
    if not np.all(np.isfinite(f.values)):
        raise ValidationError("field contains non-finite values")


def gradient(f):
    _check_finite(f)
    g = f.grid
    return VectorField(ScalarField(g, dx1(g, f.values)), ScalarField(g, dx2(g, f.values)))


def perp_gradient(f):
    """(-d f/dx2, d f/dx1)."""
    _check_finite(f)
    g = f.grid
    return VectorField(ScalarField(g, -dx2(g, f.values)), ScalarField(g, dx1(g, f.values)))


def curl(u):
    g = u.grid
    return ScalarField(g, dx1(g, u.u2.values) - dx2(g, u.u1.values))


def divergence(u):
    g = u.grid
    return ScalarField(g, dx1(g, u.u1.values) + dx2(g, u.u2.values))


def laplacian(f):
    if isinstance(f, VectorField):
        return VectorField(laplacian(f.u1), laplacian(f.u2))
    return ScalarField(f.grid, laplacian_values(f.grid, f.values))


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1_semi: float
    h3: float
    linf: float

    @property
    def h1(self):
        return float(np.hypot(self.l2, self.h1_semi))


def inner(a, b):
    """Quadrature inner product of two scalar or two vector fields."""
    if isinstance(a, VectorField):
        return inner(a.u1, b.u1) + inner(a.u2, b.u2)
    if not a.grid.same_as(b.grid):
        raise ValidationError("fields live on different grids")
    return float(np.sum(a.grid.weights * a.values * b.values))


def _sq(grid, values):
    return float(np.sum(grid.weights * values * values))


def norms(f):
    comps = f.components if isinstance(f, VectorField) else (f,)
    g = comps[0].grid
    l2 = h1 = h3 = 0.0
    for c in comps:
        v = c.values
        l2 += _sq(g, v)
        h1 += _sq(g, dx1(g, v)) + _sq(g, dx2(g, v))
        for a in range(4):
            da = dx1(g, v, a)
            for b in range(4 - a):
                h3 += _sq(g, dx2(g, da, b))
    if isinstance(f, VectorField):
        linf = float(f.magnitude().max())
    else:
        linf = float(np.abs(f.values).max())
    return NormReport(l2=l2**0.5, h1_semi=h1**0.5, h3=h3**0.5, linf=linf)


def l2(f):
    if isinstance(f, VectorField):
        return (_sq(f.grid, f.u1.values) + _sq(f.grid, f.u2.values)) ** 0.5
    return _sq(f.grid, f.values) ** 0.5


def h1_semi(f):
    comps = f.components if isinstance(f, VectorField) else (f,)
    g = comps[0].grid
    return sum(_sq(g, dx1(g, c.values)) + _sq(g, dx2(g, c.values)) for c in comps) ** 0.5


def h1(f):
    return float(np.hypot(l2(f), h1_semi(f)))
