"""Stokes eigenfunctions of the channel and the projected initial-data family.

Each Fourier mode reduces the Stokes eigenproblem to a one-dimensional
problem in x2. For k != 0 it is solved in stream form,

    (D^2 - k^2)^2 psi = -lambda (D^2 - k^2) psi,   psi = psi' = 0 at the walls,

on the null space of the four clamped conditions, so no spurious infinite
eigenvalues appear. For k = 0 the periodic pressure carries no mean
gradient and the problem is the shear problem -w'' = lambda w with
Dirichlet ends, giving u = (w(x2), 0).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import io
from .errors import NumericalError, ValidationError
from .grid import ScalarField, VectorField, divergence, h1_semi, inner, l2, norms, perp_gradient

RESIDUAL_FILTER = 1e-6


@dataclass(frozen=True)
class EigenPair:
    lam: float
    w: VectorField = field(repr=False)
    mode: int  # Fourier mode index m, wavenumber k = 2 pi m / L
    parity: str  # "cos", "sin" or "shear"
    profile: np.ndarray = field(repr=False)  # stream (k != 0) or velocity (k = 0) in x2
    residual: float = 0.0


@dataclass
class EigenBasis:
    grid: object
    pairs: list
    gram_residual: float
    rejected: list = field(default_factory=list)  # (mode, lambda, residual) of filtered modes

    def __len__(self):
        return len(self.pairs)

    @property
    def eigenvalues(self):
        return np.array([p.lam for p in self.pairs])

    @property
    def lambda1(self):
        return float(self.pairs[0].lam)

    def gramian(self, count=None):
        ws = [p.w for p in self.pairs[: count or len(self.pairs)]]
        return np.array([[inner(a, b) for b in ws] for a in ws])

    def coefficients(self, u, count=None):
        """Quadrature inner products (w_j, u) for the first ``count`` eigenfields."""
        w = self.grid.weights
        return np.array(
            [np.sum(w * (p.w.u1.values * u.u1.values + p.w.u2.values * u.u2.values))
             for p in self.pairs[: count or len(self.pairs)]]
        )

    def synthesize(self, coef):
        u1 = sum(c * p.w.u1.values for c, p in zip(coef, self.pairs))
        u2 = sum(c * p.w.u2.values for c, p in zip(coef, self.pairs))
        zero = np.zeros(self.grid.shape)
        return VectorField(ScalarField(self.grid, zero + u1), ScalarField(self.grid, zero + u2))

    def write(self, directory):
        """EAF1 files per eigenfield plus ``manifest.csv`` (j, k, lambda_j, residual)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "manifest.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "k", "lambda_j", "residual"])
            for j, p in enumerate(self.pairs, start=1):
                k = 2.0 * math.pi * p.mode / self.grid.L
                w.writerow([j, f"{k:.17g}", f"{p.lam:.17g}", f"{p.residual:.3e}"])
                io.write_field(directory / f"w{j:04d}_u1.eaf1", p.w.u1)
                io.write_field(directory / f"w{j:04d}_u2.eaf1", p.w.u2)


def _shear_branch(grid, count):
    A = -grid.D2sq[1:-1, 1:-1]
    lam, vec = scipy.linalg.eig(A)
    out = []
    for j in np.argsort(lam.real):
        lj = lam[j]
        if abs(lj.imag) > 1e-8 * abs(lj.real) or lj.real <= 0:
            continue
        v = np.zeros(grid.N2)
        v[1:-1] = vec[:, j].real
        res = np.linalg.norm(A @ v[1:-1] - lj.real * v[1:-1]) / (lj.real * np.linalg.norm(v))
        out.append((float(lj.real), v, float(res)))
        if len(out) == count:
            break
    return out


def _clamped_nullspace(grid):
    C = np.zeros((4, grid.N2))
    C[0, 0] = C[1, -1] = 1.0
    C[2] = grid.D2[0]
    C[3] = grid.D2[-1]
    return scipy.linalg.null_space(C)


def _stream_branch(grid, kk, count, Z):
    n = grid.N2
    Lm = grid.D2sq - kk * np.eye(n)
    rows = slice(2, n - 2)
    A = (Lm @ Lm @ Z)[rows]
    B = -(Lm @ Z)[rows]
    try:
        lam, vec = scipy.linalg.eig(A, B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed for k^2 = {kk:.4g}: {exc}") from None
    good, bad = [], []
    for j in np.argsort(np.where(np.isfinite(lam.real), lam.real, np.inf)):
        lj = lam[j]
        if not np.isfinite(lj):
            continue
        psi = (Z @ vec[:, j]).real
        if not np.any(psi):
            psi = (Z @ vec[:, j]).imag
        scale = np.linalg.norm((Lm @ Lm @ psi)[rows])
        res = np.linalg.norm((Lm @ Lm @ psi + lj.real * (Lm @ psi))[rows]) / scale
        if lj.real <= 0 or abs(lj.imag) > 1e-8 * abs(lj.real) or res > RESIDUAL_FILTER:
            bad.append((float(lj.real), float(res)))
            continue
        good.append((float(lj.real), psi, float(res)))
        if len(good) == count:
            break
    return good, bad


def _normalize(w):
    return w * (1.0 / math.sqrt(inner(w, w)))


def stokes_eigenbasis(grid, k_max, per_mode_count):
    """Lowest ``per_mode_count`` Stokes eigenpairs of every Fourier mode up to ``k_max``.

    Modes k != 0 contribute a cosine and a sine eigenfield per eigenvalue.
    The merged set is sorted by eigenvalue and orthonormalized in the
    quadrature inner product.
    """
    if not 0 <= k_max < grid.N1 // 2:
        raise ValidationError(f"k_max must satisfy 0 <= k_max < N1/2 = {grid.N1 // 2}")
    if not 1 <= per_mode_count < grid.N2 - 4:
        raise ValidationError(f"per_mode_count must satisfy 1 <= count < N2 - 4 = {grid.N2 - 4}")
    X1, _ = grid.mesh()
    zero = np.zeros(grid.shape)
    pairs, rejected = [], []
    for lam, prof, res in _shear_branch(grid, per_mode_count):
        w = VectorField(ScalarField(grid, np.broadcast_to(prof, grid.shape).copy()), ScalarField(grid, zero))
        pairs.append(EigenPair(lam, _normalize(w), 0, "shear", prof, res))
    Z = _clamped_nullspace(grid)
    for m in range(1, k_max + 1):
        k = 2.0 * math.pi * m / grid.L
        good, bad = _stream_branch(grid, k * k, per_mode_count, Z)
        rejected.extend((m, lam, res) for lam, res in bad)
        for lam, psi, res in good:
            for parity, trig in (("cos", np.cos), ("sin", np.sin)):
                stream = ScalarField(grid, trig(k * X1) * psi[None, :])
                pairs.append(EigenPair(lam, _normalize(perp_gradient(stream)), m, parity, psi, res))
    pairs.sort(key=lambda p: (p.lam, p.mode, p.parity))
    # Householder QR in the quadrature-weighted coordinates is Gram-Schmidt
    # in the discrete L2 inner product, applied in eigenvalue order.
    sw = np.sqrt(grid.weights).ravel()
    M = np.stack([np.concatenate([p.w.u1.values.ravel() * sw, p.w.u2.values.ravel() * sw]) for p in pairs], axis=1)
    Q, R = np.linalg.qr(M)
    Q *= np.sign(np.diag(R))[None, :]
    half = grid.N1 * grid.N2
    ortho = []
    for j, p in enumerate(pairs):
        u1 = (Q[:half, j] / sw).reshape(grid.shape)
        u2 = (Q[half:, j] / sw).reshape(grid.shape)
        w = VectorField(ScalarField(grid, u1), ScalarField(grid, u2))
        ortho.append(EigenPair(p.lam, w, p.mode, p.parity, p.profile, p.residual))
    gram = Q.T @ Q
    return EigenBasis(grid, ortho, float(np.abs(gram - np.eye(len(ortho))).max()), rejected)


# ---------------------------------------------------------------------------
# projection family


def projection_size(alpha, lambda1):
    """m = floor(1 / (alpha^2 lambda_1))."""
    return int(math.floor(1.0 / (alpha * alpha * lambda1)))


@dataclass
class FamilyMember:
    alpha: float
    m: int
    u: VectorField = field(repr=False)
    report: object = None


@dataclass
class ApproximationFamily:
    u0: VectorField = field(repr=False)
    members: list
    construction: str = "projection"

    @property
    def alphas(self):
        return np.array([mb.alpha for mb in self.members])

    @classmethod
    def from_members(cls, u0, pairs, construction="custom"):
        """Build a family from explicit (alpha, field) pairs."""
        members = [FamilyMember(float(a), 0, u, norms(u)) for a, u in pairs]
        return cls(u0, members, construction)


def check_solenoidal(u, tol=1e-8):
    """Reject fields that are not divergence-free with zero normal wall trace."""
    scale = max(1.0, h1_semi(u))
    div = float(np.abs(divergence(u).values).max())
    if div > tol * scale:
        raise ValidationError(f"velocity is not divergence-free (max |div u| = {div:.2e})")
    wall = float(np.abs(u.u2.wall_values()).max())
    if wall > tol * max(1.0, float(np.abs(u.u2.values).max())):
        raise ValidationError(f"velocity has nonzero normal wall trace ({wall:.2e})")


def project(basis, u0, m):
    if m > len(basis):
        raise ValidationError(
            f"projection needs m = {m} eigenfields but the basis holds {len(basis)}; "
            f"enlarge k_max or per_mode_count to at least {m} members"
        )
    return basis.synthesize(basis.coefficients(u0, m))


def project_family(basis, u0, alphas):
    """P_m u0 with m = floor(1/(alpha^2 lambda_1)) for each alpha."""
    check_solenoidal(u0)
    alphas = [float(a) for a in alphas]
    if any(not a > 0 for a in alphas):
        raise ValidationError("alphas must be positive")
    lam1 = basis.lambda1
    need = max(projection_size(a, lam1) for a in alphas)
    if need > len(basis):
        raise ValidationError(
            f"basis exhausted: alpha = {min(alphas)} needs m = {need} eigenfields, "
            f"basis holds {len(basis)}"
        )
    # expand once, then truncate per member
    coef = basis.coefficients(u0, need)
    members = []
    for a in alphas:
        m = projection_size(a, lam1)
        u = basis.synthesize(coef[:m])
        members.append(FamilyMember(a, m, u, norms(u)))
    return ApproximationFamily(u0, members, "projection")


# ---------------------------------------------------------------------------
# certification


@dataclass
class E1Report:
    alphas: np.ndarray
    wall_max: np.ndarray  # (i)
    l2_gap: np.ndarray  # (ii) |u0^a - u0|
    grad_product: np.ndarray  # alpha |grad u0^a|
    h3: np.ndarray
    slope_grad_product: float  # (iii), must be > 0
    slope_h3: float  # (iv), must be >= -3.3
    slope_energy_layer: float  # alpha^2 |grad u0^a|^2 against alpha, >= 2/3 - 0.2
    u0_l2: float
    wall_tol: float = 1e-9

    @property
    def wall_ok(self):
        return bool(np.all(self.wall_max <= self.wall_tol))

    @property
    def gap_ok(self):
        return bool(np.all(np.diff(self.l2_gap) < 0) and self.l2_gap[-1] < 0.1 * self.u0_l2)

    @property
    def gap_monotone(self):
        return bool(np.all(np.diff(self.l2_gap) < 0))

    @property
    def grad_ok(self):
        return bool(self.slope_grad_product > 0)

    @property
    def h3_ok(self):
        return bool(self.slope_h3 >= -3.3)

    @property
    def energy_layer_ok(self):
        return bool(self.slope_energy_layer >= 2.0 / 3.0 - 0.2)

    @property
    def passed(self):
        return self.wall_ok and self.gap_ok and self.grad_ok and self.h3_ok

    def failures(self):
        names = {"(i) wall trace": self.wall_ok, "(ii) L2 convergence": self.gap_ok,
                 "(iii) gradient growth": self.grad_ok, "(iv) H3 growth": self.h3_ok}
        return [k for k, ok in names.items() if not ok]


def loglog_slope(x, y):
    """Least-squares slope of log y against log x; nan if any y is not positive."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def certify_E1(family):
    """Finite-ladder checks of the four approximation conditions."""
    if len(family.members) < 4:
        raise ValidationError("certification needs at least 4 family members")
    ms = sorted(family.members, key=lambda mb: -mb.alpha)
    alphas = np.array([mb.alpha for mb in ms])
    wall = np.array([mb.u.wall_max() for mb in ms])
    gap = np.array([l2(mb.u - family.u0) for mb in ms])
    grad = np.array([h1_semi(mb.u) for mb in ms])
    h3 = np.array([(mb.report or norms(mb.u)).h3 for mb in ms])
    prod = alphas * grad
    return E1Report(
        alphas=alphas,
        wall_max=wall,
        l2_gap=gap,
        grad_product=prod,
        h3=h3,
        slope_grad_product=loglog_slope(alphas, prod),
        slope_h3=loglog_slope(alphas, h3),
        slope_energy_layer=loglog_slope(alphas, prod**2),
        u0_l2=l2(family.u0),
    )
