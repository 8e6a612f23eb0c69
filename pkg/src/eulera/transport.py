"""Semi-Lagrangian transport of a scalar by a frozen velocity field.

Feet are traced backward with the explicit midpoint rule, the advected
field is interpolated at the feet, and an optional limiter clips each
interpolated value to the data range of the grid cell containing the foot.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CFLError, ValidationError
from .grid import ScalarField, l2

CFL_MAX = 2.0


def _cubic_weights(s):
    """Lagrange weights for nodes -1, 0, 1, 2 at offset s in [0, 1)."""
    return np.stack(
        [
            -s * (s - 1.0) * (s - 2.0) / 6.0,
            (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0,
            (s + 1.0) * s * (s - 1.0) / 6.0,
        ],
        axis=-1,
    )


class Interpolator:
    """Evaluates nodal fields at arbitrary points of the channel.

    The geometry of the query points is computed once, so several fields can
    be sampled at the same feet cheaply.
    """

    def __init__(self, grid, x1, x2, kind="spectral"):
        self.grid = grid
        self.kind = kind
        x1 = np.mod(np.ravel(x1), grid.L)
        x2 = np.clip(np.ravel(x2), 0.0, 1.0)
        self.n = x1.size
        h = grid.h1
        xn = grid.x2_nodes
        # cell containing each point (used by the limiter and the cubic stencil)
        c1 = np.minimum(np.floor(x1 / h).astype(int), grid.N1 - 1)
        c2 = np.clip(np.searchsorted(xn, x2, side="right") - 1, 0, grid.N2 - 2)
        self.cell1 = np.stack([c1, (c1 + 1) % grid.N1], axis=1)
        self.cell2 = np.stack([c2, c2 + 1], axis=1)
        if kind == "spectral":
            self._setup_spectral(x1, x2)
        elif kind == "cubic":
            self._setup_cubic(x1, x2, c1, c2)
        else:
            raise ValidationError(f"unknown interpolation kind {kind!r}")

    def _setup_spectral(self, x1, x2):
        g = self.grid
        n1 = g.N1
        d = x1[:, None] - g.x1_nodes[None, :]
        a = np.pi * d / g.L
        sin_n = np.sin(n1 * a)
        tan_1 = np.tan(a)
        hit = np.abs(np.sin(a)) < 1e-14
        with np.errstate(divide="ignore", invalid="ignore"):
            W1 = sin_n / (n1 * tan_1)
        W1[hit] = 0.0
        rows = hit.any(axis=1)
        W1[rows] = hit[rows].astype(float)
        self.W1 = W1
        # barycentric Chebyshev-Lobatto weights
        n2 = g.N2
        bw = (-1.0) ** np.arange(n2)
        bw[0] *= 0.5
        bw[-1] *= 0.5
        d2 = x2[:, None] - g.x2_nodes[None, :]
        hit2 = d2 == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = bw / d2
        rows2 = hit2.any(axis=1)
        t[rows2] = hit2[rows2].astype(float)
        self.W2 = t / t.sum(axis=1, keepdims=True)

    def _setup_cubic(self, x1, x2, c1, c2):
        g = self.grid
        s = x1 / g.h1 - c1
        self.idx1 = (c1[:, None] + np.arange(-1, 3)[None, :]) % g.N1
        self.W1 = _cubic_weights(s)
        # non-uniform 4-point stencil in x2, shifted inward at the walls
        start = np.clip(c2 - 1, 0, g.N2 - 4)
        self.idx2 = start[:, None] + np.arange(4)[None, :]
        xs = g.x2_nodes[self.idx2]
        W2 = np.ones((self.n, 4))
        for j in range(4):
            for m in range(4):
                if m != j:
                    W2[:, j] *= (x2 - xs[:, m]) / (xs[:, j] - xs[:, m])
        self.W2 = W2

    def __call__(self, values, limit=False):
        if self.kind == "spectral":
            out = np.einsum("pj,pj->p", self.W1 @ values, self.W2)
        else:
            block = values[self.idx1[:, :, None], self.idx2[:, None, :]]
            out = np.einsum("pa,pab,pb->p", self.W1, block, self.W2)
        if limit:
            corners = values[self.cell1[:, :, None], self.cell2[:, None, :]].reshape(self.n, 4)
            out = np.clip(out, corners.min(axis=1), corners.max(axis=1))
        return out


@dataclass(frozen=True)
class AdvectionScheme:
    """Semi-Lagrangian scheme settings.

    ``interpolation`` is ``"spectral"`` (trigonometric in x1, barycentric
    Chebyshev in x2) or ``"cubic"`` (periodic cubic in x1, local cubic on the
    Chebyshev nodes in x2).
    """

    grid: object
    order: int = 2
    interpolation: str = "spectral"
    limiter: bool = True

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValidationError("trajectory order must be 1 or 2")
        if self.interpolation not in ("spectral", "cubic"):
            raise ValidationError(f"unknown interpolation kind {self.interpolation!r}")

    def interpolator(self, x1, x2):
        return Interpolator(self.grid, x1, x2, self.interpolation)


def cfl_number(grid, u, dt):
    """Largest per-direction Courant number using local node spacing.

    In x2 the spacing at a node is the larger of its two neighbour gaps, so
    the clustered wall nodes (where the normal velocity vanishes) do not
    dominate.
    """
    gaps = np.diff(grid.x2_nodes)
    h2 = np.maximum(np.concatenate([[gaps[0]], gaps]), np.concatenate([gaps, [gaps[-1]]]))
    c1 = np.abs(u.u1.values).max() * dt / grid.h1
    c2 = (np.abs(u.u2.values) * dt / h2[None, :]).max()
    return float(max(c1, c2))


def backward_feet(scheme, u, dt):
    g = scheme.grid
    X1, X2 = g.mesh()
    if scheme.order == 1:
        return X1 - dt * u.u1.values, np.clip(X2 - dt * u.u2.values, 0.0, 1.0)
    m1 = X1 - 0.5 * dt * u.u1.values
    m2 = np.clip(X2 - 0.5 * dt * u.u2.values, 0.0, 1.0)
    ip = scheme.interpolator(m1, m2)
    um1 = ip(u.u1.values).reshape(g.shape)
    um2 = ip(u.u2.values).reshape(g.shape)
    return X1 - dt * um1, np.clip(X2 - dt * um2, 0.0, 1.0)


def _validate(scheme, q, u, dt):
    if not dt > 0:
        raise ValidationError(f"time step must be positive, got {dt}")
    if not (np.all(np.isfinite(u.u1.values)) and np.all(np.isfinite(u.u2.values))):
        raise CFLError("velocity contains non-finite values")
    if not np.all(np.isfinite(q.values)):
        raise ValidationError("advected field contains non-finite values")
    cfl = cfl_number(scheme.grid, u, dt)
    if cfl > CFL_MAX:
        raise CFLError(f"CFL number {cfl:.3g} exceeds {CFL_MAX}")


def advect(scheme, q, u, dt):
    """q(X(x)) with X the backward foot of x over one step of length dt."""
    _validate(scheme, q, u, dt)
    if not (np.any(u.u1.values) or np.any(u.u2.values)):
        return ScalarField(q.grid, q.values.copy())
    f1, f2 = backward_feet(scheme, u, dt)
    ip = scheme.interpolator(f1, f2)
    return ScalarField(q.grid, ip(q.values, limit=scheme.limiter).reshape(q.grid.shape))


def step_error_estimate(scheme, q, u, dt):
    """L2 gap between one full step and two half steps."""
    full = advect(scheme, q, u, dt)
    half = advect(scheme, advect(scheme, q, u, 0.5 * dt), u, 0.5 * dt)
    return l2(full - half)
