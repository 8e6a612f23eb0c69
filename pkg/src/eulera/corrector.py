"""Boundary-layer corrector u_b = perp_grad(z psi_bar) with z = xi(rho / delta).

The cutoff derivatives are known in closed form, so u_b and its gradient
are assembled by the product rule: the collar factors z, z', z'' are exact
and vanish identically where rho >= delta, while psi_bar is differentiated
spectrally. Differentiating the nodal product z * psi_bar instead smears the
finite-smoothness kink at rho = delta across the whole channel.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .errors import ValidationError
from .grid import ScalarField, VectorField, dx1, dx2
from .initdata import loglog_slope
from .report import loglog_svg

MIN_COLLAR_POINTS = 8
FUNCTIONALS = ("ub_L2", "grad_ub_L2", "rho2_grad_ub_Linf", "rho_grad_ub_L2")
EXPECTED_SLOPES = {"ub_L2": 0.5, "grad_ub_L2": -0.5, "rho2_grad_ub_Linf": 1.0, "rho_grad_ub_L2": 0.5}


def _poly(r):
    """(1 - r)^3 (1 + 3r + 6r^2) and two derivatives on [0, 1)."""
    xi = (1 - r) ** 3 * (1 + 3 * r + 6 * r * r)
    d1 = -30 * r * r * (1 - r) ** 2
    d2 = -60 * r * (1 - r) * (1 - 2 * r)
    return xi, d1, d2


# 1 - r^5 (126 - 420 r + 540 r^2 - 315 r^3 + 70 r^4): C4 at both ends, so
# fourth derivatives of a cut-off stream (the potential vorticity) stay bounded
_C4 = np.polynomial.Polynomial([1, 0, 0, 0, 0, -126, 420, -540, 315, -70])
_C4_D = (_C4, _C4.deriv(1), _C4.deriv(2))


def _c4(r):
    return tuple(p(r) for p in _C4_D)


PROFILES = {"poly": _poly, "c4": _c4}


@dataclass(frozen=True)
class Cutoff:
    """xi(r) with xi(0) = 1 and xi = 0 for r >= 1, scaled to width ``delta``."""

    delta: float
    profile: str = "poly"

    def __post_init__(self):
        if not 0 < self.delta < 0.5:
            raise ValidationError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.profile not in PROFILES:
            raise ValidationError(f"unknown cutoff profile {self.profile!r}")

    def xi(self, r, order=0):
        """Profile value (order 0) or its first or second derivative in r."""
        r = np.asarray(r, float)
        out = np.zeros(np.shape(r))
        inside = (r >= 0) & (r < 1)
        vals = PROFILES[self.profile](r[inside])
        out[inside] = vals[order]
        if order == 0:
            out[r < 0] = 1.0
            out[r == 0] = 1.0
        return out

    def z(self, rho):
        """z, dz/drho, d2z/drho2 for z = xi(rho / delta)."""
        r = np.asarray(rho, float) / self.delta
        return self.xi(r), self.xi(r, 1) / self.delta, self.xi(r, 2) / self.delta**2


def distance(grid):
    """rho = min(x2, 1 - x2) on the nodes."""
    _, X2 = grid.mesh()
    return ScalarField(grid, np.minimum(X2, 1.0 - X2))


def collar_points(grid, delta):
    """Collocation points with 0 < rho < delta next to one wall (the two collars are mirror images)."""
    return int(np.count_nonzero((grid.x2_nodes > 0) & (grid.x2_nodes < delta)))


@dataclass
class CorrectorBundle:
    grid: object
    cutoff: Cutoff
    rho: ScalarField = field(repr=False)
    z: ScalarField = field(repr=False)
    u_b: VectorField = field(repr=False)
    grad_u_b: tuple = field(repr=False)  # (d1 u1, d2 u1, d1 u2, d2 u2)
    dt_u_b: VectorField = field(repr=False)
    ub_L2: float = 0.0
    grad_ub_L2: float = 0.0
    rho2_grad_ub_Linf: float = 0.0
    rho_grad_ub_L2: float = 0.0

    @property
    def functionals(self):
        return {k: getattr(self, k) for k in FUNCTIONALS}


def _stream_derivatives(psi):
    g = psi.grid
    p1 = dx1(g, psi.values)
    return {
        "p": psi.values, "p1": p1, "p2": dx2(g, psi.values),
        "p11": dx1(g, psi.values, 2), "p12": dx2(g, p1), "p22": dx2(g, psi.values, 2),
    }


def _product_rule(d, zs, sign, offset=None):
    z, z1, z2 = zs
    p = d["p"] if offset is None else d["p"] - offset
    # d/dx2 of z(rho) is sign * z'(rho) with sign = +1 on the lower half, -1 on the upper
    zx = sign * z1
    u1 = -(zx * p + z * d["p2"])
    u2 = z * d["p1"]
    d1u1 = -(zx * d["p1"] + z * d["p12"])
    d2u1 = -(z2 * p + 2 * zx * d["p2"] + z * d["p22"])
    d1u2 = z * d["p11"]
    d2u2 = zx * d["p1"] + z * d["p12"]
    return u1, u2, (d1u1, d2u1, d1u2, d2u2)


def _assemble(psi, zs, sign, offset=None):
    """u_b and its gradient for stream z * (psi - offset).

    ``offset`` holds wall values of psi that are constant along each wall,
    so it changes the product but none of the derivatives of psi.
    """
    g = psi.grid
    u1, u2, grads = _product_rule(_stream_derivatives(psi), zs, sign, offset)
    return VectorField(ScalarField(g, u1), ScalarField(g, u2)), grads


def _weighted_sup(psi, cutoff, samples=2048):
    """sup of rho^2 |grad u_b| over the collars, sampled finely in x2.

    The maximum sits between collocation nodes, so the psi derivatives are
    interpolated (barycentric Chebyshev, spectrally accurate) onto a dense
    collar grid while z and its derivatives are evaluated exactly.
    """
    g = psi.grid
    d = _stream_derivatives(psi)
    r = np.linspace(0.0, cutoff.delta, samples)
    # closed-form Lobatto weights; scipy's default computation shuffles nodes at random
    wi = (-1.0) ** np.arange(g.N2)
    wi[[0, -1]] *= 0.5
    best = 0.0
    for x2, sign in ((r, 1.0), (1.0 - r, -1.0)):
        dense = {k: BarycentricInterpolator(g.x2_nodes, v, axis=1, wi=wi)(x2) for k, v in d.items()}
        _, _, grads = _product_rule(dense, cutoff.z(r[None, :]), sign)
        gnorm = np.sqrt(sum(v * v for v in grads))
        best = max(best, float(np.max(r[None, :] ** 2 * gnorm)))
    return best


def build_corrector(psi_bar, cutoff, psi_bar_t=None, wall_tol=1e-9):
    """Corrector fields and the four layer functionals for stream ``psi_bar``."""
    g = psi_bar.grid
    if not np.all(np.isfinite(psi_bar.values)):
        raise ValidationError("psi_bar contains non-finite values")
    wall = float(np.abs(psi_bar.wall_values()).max())
    if wall > wall_tol:
        raise ValidationError(f"psi_bar must vanish on the walls (max wall value {wall:.2e})")
    npts = collar_points(g, cutoff.delta)
    if npts < MIN_COLLAR_POINTS:
        raise ValidationError(
            f"layer unresolved: {npts} collocation points inside the delta = {cutoff.delta:g} "
            f"collar, need {MIN_COLLAR_POINTS}"
        )
    rho = distance(g)
    zs = cutoff.z(rho.values)
    _, X2 = g.mesh()
    sign = np.where(X2 <= 0.5, 1.0, -1.0)
    u_b, grads = _assemble(psi_bar, zs, sign)
    if psi_bar_t is None:
        dt_u_b = VectorField.zeros(g)
    else:
        dt_u_b, _ = _assemble(psi_bar_t, zs, sign)
    w = g.weights
    gsq = sum(d * d for d in grads)
    r = rho.values
    return CorrectorBundle(
        grid=g,
        cutoff=cutoff,
        rho=rho,
        z=ScalarField(g, zs[0]),
        u_b=u_b,
        grad_u_b=grads,
        dt_u_b=dt_u_b,
        ub_L2=float(np.sqrt(np.sum(w * (u_b.u1.values**2 + u_b.u2.values**2)))),
        grad_ub_L2=float(np.sqrt(np.sum(w * gsq))),
        rho2_grad_ub_Linf=_weighted_sup(psi_bar, cutoff),
        rho_grad_ub_L2=float(np.sqrt(np.sum(w * r * r * gsq))),
    )


@dataclass
class ScalingReport:
    deltas: np.ndarray
    values: dict  # functional name -> array over deltas
    slopes: dict
    skipped: list  # deltas rejected as unresolved
    profile: str = "poly"

    expected = EXPECTED_SLOPES

    @property
    def degenerate(self):
        return any(math.isnan(s) for s in self.slopes.values())

    def within(self, tol=0.15):
        return {k: (not math.isnan(self.slopes[k])) and abs(self.slopes[k] - v) <= tol
                for k, v in EXPECTED_SLOPES.items()}

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("delta",) + FUNCTIONALS)
            for i, d in enumerate(self.deltas):
                w.writerow([f"{d:.17g}"] + [f"{self.values[k][i]:.17g}" for k in FUNCTIONALS])

    def write_svg(self, path):
        series = {k: self.values[k] for k in FUNCTIONALS}
        Path(path).write_text(loglog_svg(self.deltas, series, "delta", "layer functionals"))


def scaling_study(psi_bar, deltas, cutoff_profile="poly", psi_bar_t=None):
    """Log-log slopes of the four layer functionals against delta."""
    deltas = sorted((float(d) for d in deltas), reverse=True)
    used, skipped, rows = [], [], []
    for d in deltas:
        if collar_points(psi_bar.grid, d) < MIN_COLLAR_POINTS:
            skipped.append(d)
            continue
        b = build_corrector(psi_bar, Cutoff(d, cutoff_profile), psi_bar_t)
        used.append(d)
        rows.append(b.functionals)
    if len(used) < 4:
        raise ValidationError(
            f"only {len(used)} of {len(deltas)} deltas are resolved on this grid; need at least 4"
        )
    x = np.array(used)
    values = {k: np.array([r[k] for r in rows]) for k in FUNCTIONALS}
    slopes = {k: loglog_slope(x, values[k]) for k in FUNCTIONALS}
    return ScalingReport(x, values, slopes, skipped, cutoff_profile)


def wall_cutoff_field(stream, cutoff):
    """perp_grad(z (stream - stream_wall)) for a stream that is constant on each wall.

    Subtracting this from perp_grad(stream) gives a velocity that vanishes on
    both walls and keeps the net flux. ``stream_wall`` is the wall value of
    the nearer wall.
    """
    g = stream.grid
    npts = collar_points(g, cutoff.delta)
    if npts < MIN_COLLAR_POINTS:
        raise ValidationError(
            f"layer unresolved: {npts} collocation points inside the delta = {cutoff.delta:g} "
            f"collar, need {MIN_COLLAR_POINTS}"
        )
    _, X2 = g.mesh()
    lower = X2 <= 0.5
    offset = np.where(lower, stream.values[:, :1], stream.values[:, -1:])
    zs = cutoff.z(distance(g).values)
    u, _ = _assemble(stream, zs, np.where(lower, 1.0, -1.0), offset)
    return u


def delta_schedule(alpha, exponent=1.0):
    """delta = alpha**exponent; any exponent in (0, 2) keeps delta -> 0 and alpha^2/delta -> 0."""
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < exponent < 2:
        raise ValidationError(f"exponent must lie in (0, 2), got {exponent}")
    return float(alpha**exponent)
