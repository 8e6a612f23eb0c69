"""Experiment drivers: the alpha -> 0 sweep and the parallel-flow checks."""
from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .corrector import Cutoff, wall_cutoff_field
from .elliptic import AlphaEllipticSolver, EulerStreamSolver
from .errors import EulerAlphaError, NumericalError, ValidationError
from .grid import (
    ScalarField, VectorField, curl, dx1, dx2, h1_semi, l2, laplacian, make_grid, perp_gradient,
)
from .initdata import (
    ApproximationFamily, FamilyMember, certify_E1, project_family, stokes_eigenbasis,
)
from .report import loglog_svg
from .stepper import FlowModel, StepConfig, flux, integrate

log = logging.getLogger(__name__)

DEFAULT_LENGTH = 16 * math.pi
SWEEP_FIELDS = ("alpha", "sup_L2_diff", "sup_alpha2_gradnorm", "init_diff", "energy_drift", "q_ratio")


# ---------------------------------------------------------------------------
# initial data


def _default_stream(L):
    return lambda x1, x2: np.sin(2 * np.pi * x1 / L) * np.sin(np.pi * x2) ** 2


PARALLEL_PROFILES = {
    "sin": (lambda y: np.sin(np.pi * y), lambda y: np.pi * np.cos(np.pi * y)),
    "poiseuille": (lambda y: y * (1 - y), lambda y: 1 - 2 * y),
    "zero": (lambda y: 0 * y, lambda y: 0 * y),
}


def initial_velocity(grid, profile="default", u0_file=None):
    """Named analytic velocity, or perp_grad of a stream function read from an EAF1 file."""
    if u0_file:
        return perp_gradient(io.read_field(u0_file, grid))
    if profile == "default":
        return perp_gradient(grid.field(_default_stream(grid.L)))
    if profile in PARALLEL_PROFILES:
        phi = grid.field(lambda x1, x2: PARALLEL_PROFILES[profile][0](x2))
        return VectorField(phi, grid.zeros())
    raise ValidationError(
        f"unknown profile {profile!r}; choose default, {', '.join(PARALLEL_PROFILES)} or give an EAF1 file"
    )


def stream_of(u):
    """Stream function with value 0 on the lower wall (Dirichlet solve of curl u)."""
    psi, _ = EulerStreamSolver(u.grid).solve(curl(u), flux(u))
    return psi


def mollify_family(u0, alphas, exponent=2.0 / 3.0, profile="c4"):
    """u0 minus the wall-cutoff field of its stream, collar width alpha**exponent."""
    psi = stream_of(u0)
    members = []
    for a in alphas:
        d = float(a) ** exponent
        ua = u0 - wall_cutoff_field(psi, Cutoff(d, profile))
        members.append(FamilyMember(float(a), 0, ua))
    return ApproximationFamily(u0, members, "mollify")


def lift_family(u0, alphas):
    """Clamped Euler-alpha velocities whose potential vorticity is curl(u0).

    Each member keeps the net flux of u0 and differs from it only in a wall
    layer of width ~alpha, and its q equals the Euler vorticity, so the
    alpha and Euler runs start from the same transported field.
    """
    omega = curl(u0)
    F = flux(u0)
    members = []
    for a in alphas:
        _, ua = AlphaEllipticSolver(u0.grid, float(a)).solve(omega, F)
        members.append(FamilyMember(float(a), 0, ua))
    return ApproximationFamily(u0, members, "lift")


INIT_MODES = ("lift", "mollify", "projection")


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepConfig:
    N1: int = 32
    N2: int = 64
    L: float = DEFAULT_LENGTH
    profile: str = "default"
    u0_file: str | None = None
    alphas: tuple = (0.2, 0.1, 0.05, 0.025)
    T: float = 1.0
    dt: float = 1e-3
    stride: int | None = None  # None: enough for 50 samples
    init_mode: str = "lift"  # see INIT_MODES
    mollify_exponent: float = 2.0 / 3.0
    k_max: int = 15
    per_mode_count: int = 8
    half_dt_check: bool = True
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        a = tuple(float(x) for x in self.alphas)
        object.__setattr__(self, "alphas", a)
        if len(a) < 4:
            raise ValidationError("the alpha ladder needs at least 4 values")
        if any(x <= 0 for x in a) or any(b >= c for c, b in zip(a, a[1:])):
            raise ValidationError("alpha ladder must be positive and strictly decreasing")
        if not self.T > 0:
            raise ValidationError("T must be positive")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.init_mode not in INIT_MODES:
            raise ValidationError(f"unknown init_mode {self.init_mode!r}")
        if self.stride is not None and self.stride < 1:
            raise ValidationError("stride must be >= 1")

    @property
    def n_steps(self):
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def sample_stride(self):
        return self.stride or max(1, self.n_steps // 50)

    def grid(self):
        return make_grid(self.L, self.N1, self.N2)

    def step_config(self, dt=None):
        return StepConfig(dt=dt or self.dt)


@dataclass
class ConvergenceRow:
    alpha: float
    sup_L2_diff: float = math.nan
    sup_alpha2_gradnorm: float = math.nan
    init_diff: float = math.nan
    energy_drift: float = math.nan
    q_ratio: float = math.nan
    failure: str | None = None

    @property
    def ok(self):
        return self.failure is None


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list
    reference: dict
    family: object = field(repr=False, default=None)
    certificate: object = field(repr=False, default=None)
    gate: dict = field(default_factory=dict)

    @property
    def successful(self):
        return [r for r in self.rows if r.ok]

    @property
    def failed(self):
        return len(self.successful) < 3


def _run(state, T, cfg, stride):
    return integrate(state, T, cfg, stride=stride)


def _sup_diff(a_states, b_states):
    if len(a_states) != len(b_states):
        raise NumericalError("trajectories were sampled at different times")
    return max(l2(a.u - b.u) for a, b in zip(a_states, b_states))


def _row_job(args):
    cfg, alpha, u_init, ref_states = args
    grid = u_init.grid
    row = ConvergenceRow(alpha)
    try:
        model = FlowModel(grid, alpha)
        s0 = model.state_from_velocity(u_init)
        tr = _run(s0, cfg.T, cfg.step_config(), cfg.sample_stride)
        row.sup_L2_diff = _sup_diff(tr.states, ref_states)
        row.sup_alpha2_gradnorm = max(alpha**2 * h1_semi(s.u) for s in tr.states)
        row.init_diff = l2(s0.u - ref_states[0].u)
        E = tr.column("energy")
        Q = tr.column("l2_q")
        row.energy_drift = float(np.max(np.abs(E - E[0])) / E[0]) if E[0] > 0 else 0.0
        row.q_ratio = float(np.max(Q) / Q[0]) if Q[0] > 0 else 1.0
        return row, tr
    except EulerAlphaError as exc:
        row.failure = f"{type(exc).__name__}: {exc}"
        return row, None


def build_family(cfg, grid, u0):
    """Initial-data family for the sweep, with members mapped through their own
    elliptic reconstruction so t = 0 gaps match the certified ones exactly."""
    if cfg.init_mode == "projection":
        basis = stokes_eigenbasis(grid, cfg.k_max, cfg.per_mode_count)
        raw = project_family(basis, u0, cfg.alphas)
    elif cfg.init_mode == "lift":
        raw = lift_family(u0, cfg.alphas)
    else:
        raw = mollify_family(u0, cfg.alphas, cfg.mollify_exponent)
    ref0 = FlowModel(grid, 0.0).state_from_velocity(u0).u
    members = []
    for mb in raw.members:
        u = FlowModel(grid, mb.alpha).state_from_velocity(mb.u).u
        members.append(FamilyMember(mb.alpha, mb.m, u))
    return ApproximationFamily(ref0, members, raw.construction)


def run_sweep(cfg):
    """Euler reference plus one Euler-alpha run per ladder rung."""
    grid = cfg.grid()
    u0 = initial_velocity(grid, cfg.profile, cfg.u0_file)
    stride = cfg.sample_stride
    family = build_family(cfg, grid, u0)
    certificate = certify_E1(family)

    ref_state = FlowModel(grid, 0.0).state_from_velocity(u0)
    ref = _run(ref_state, cfg.T, cfg.step_config(), stride)
    E = ref.column("energy")
    Q = ref.column("l2_q")
    reference = {
        "samples": len(ref.states),
        "energy_drift": float(np.max(np.abs(E - E[0])) / E[0]) if E[0] > 0 else 0.0,
        "q_ratio": float(np.max(Q) / Q[0]) if Q[0] > 0 else 1.0,
        "sup_L2": max(l2(s.u) for s in ref.states),
    }
    jobs = [(cfg, mb.alpha, mb.u, ref.states) for mb in family.members]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_row_job, jobs))
    else:
        results = [_row_job(j) for j in jobs]
    rows = [r for r, _ in results]
    trajs = {r.alpha: t for r, t in results}
    rows.sort(key=lambda r: -r.alpha)

    floor = math.nan
    if cfg.half_dt_check:
        # time-step floor: half-dt reruns of the reference and the smallest alpha
        fine = cfg.step_config(cfg.dt / 2)
        ref_f = _run(ref_state, cfg.T, fine, 2 * stride)
        floor = _sup_diff(ref.states, ref_f.states)
        last = rows[-1]
        if last.ok:
            s0 = trajs[last.alpha].states[0]
            try:
                fine_tr = _run(s0, cfg.T, fine, 2 * stride)
                floor += _sup_diff(trajs[last.alpha].states, fine_tr.states)
            except EulerAlphaError as exc:
                log.warning("half-dt rerun failed: %s", exc)
                floor = math.nan
    reference["dt_floor"] = floor

    result = SweepResult(cfg, rows, reference, family, certificate)
    result.gate = sweep_gate(rows, floor)
    if cfg.out:
        write_sweep(result, cfg.out)
    return result


def sweep_gate(rows, floor):
    """Ordering and smallness checks on the sup quantities."""
    ok = [r for r in rows if r.ok]
    d = [r.sup_L2_diff for r in ok]
    g = [r.sup_alpha2_gradnorm for r in ok]
    gate = {
        "rows_ok": len(ok) == len(rows) and len(ok) >= 3,
        "diff_decreasing": all(b < a for a, b in zip(d, d[1:])),
        "grad_decreasing": all(b < a for a, b in zip(g, g[1:])),
    }
    if ok and rows[-1].ok and math.isfinite(floor):
        bound = 2.0 * (rows[-1].init_diff + floor)
        gate["smallness_bound"] = bound
        gate["smallest_below_bound"] = rows[-1].sup_L2_diff < bound
    else:
        gate["smallest_below_bound"] = False
    gate["passed"] = all(v for k, v in gate.items() if isinstance(v, bool))
    return gate


def _fmt(x):
    return f"{x:.17g}"


def write_sweep(result, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_FIELDS)
        for r in result.rows:
            w.writerow([_fmt(getattr(r, k)) for k in SWEEP_FIELDS])
    with open(out / "reference.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "value"])
        for k, v in result.reference.items():
            w.writerow([k, _fmt(v) if isinstance(v, float) else v])
    alphas = [r.alpha for r in result.rows]
    series = {
        "sup_L2_diff": [r.sup_L2_diff for r in result.rows],
        "sup_alpha2_gradnorm": [r.sup_alpha2_gradnorm for r in result.rows],
        "init_diff": [r.init_diff for r in result.rows],
    }
    (out / "sweep.svg").write_text(loglog_svg(alphas, series, "alpha", "alpha -> 0 sweep"))


# ---------------------------------------------------------------------------
# parallel flows


@dataclass(frozen=True)
class ParallelFlowCase:
    """u = (phi(x2), 0); ``profile`` is a name or a callable of x2."""

    profile: object = "sin"
    alpha: float = 0.1

    def __post_init__(self):
        if self.alpha < 0:
            raise ValidationError("alpha must be nonnegative")
        phi = self.phi
        for wall in (0.0, 1.0):
            v = float(phi(np.array([wall]))[0])
            if abs(v) > 1e-12:
                raise ValidationError(f"profile must vanish on the walls, phi({wall:g}) = {v:.3e}")

    @property
    def phi(self):
        if callable(self.profile):
            return self.profile
        if self.profile not in PARALLEL_PROFILES:
            raise ValidationError(f"unknown parallel profile {self.profile!r}")
        return PARALLEL_PROFILES[self.profile][0]

    def velocity(self, grid):
        phi = grid.field(lambda x1, x2: self.phi(x2))
        return VectorField(phi, grid.zeros())


def reconstruct_parallel_pressure(case, grid):
    """p = -(phi^2 - alpha^2 phi'^2) / 2, with phi' from the Chebyshev derivative."""
    phi = case.velocity(grid).u1.values
    dphi = dx2(grid, phi)
    return ScalarField(grid, -0.5 * (phi**2 - case.alpha**2 * dphi**2))


def steady_residual(u, alpha, p):
    """u.grad v + sum_j v_j grad u_j + grad p with v = u - alpha^2 lap u."""
    g = u.grid
    v = u - alpha**2 * laplacian(u) if alpha > 0 else u
    comps = []
    for i, d in enumerate((lambda f: dx1(g, f), lambda f: dx2(g, f))):
        adv = u.u1.values * dx1(g, v.components[i].values) + u.u2.values * dx2(g, v.components[i].values)
        stretch = v.u1.values * d(u.u1.values) + v.u2.values * d(u.u2.values)
        comps.append(adv + stretch + d(p.values))
    return VectorField(ScalarField(g, comps[0]), ScalarField(g, comps[1]))


@dataclass
class ParallelReport:
    alpha: float
    stationarity: float
    residual_l2: float
    pressure: ScalarField = field(repr=False)
    spectral_tail: float = 0.0
    q_ratio: float = 1.0  # max_t |q(t)| / |q(0)|


def _chebyshev_tail(values):
    """Relative size of the top Chebyshev coefficients of a profile on Lobatto nodes."""
    n = values.size - 1
    c = np.polynomial.chebyshev.chebfit(np.cos(np.pi * np.arange(n + 1) / n), values[::-1], n)
    scale = np.abs(c).max()
    return float(np.abs(c[-4:]).max() / scale) if scale > 0 else 0.0


def parallel_flow_verify(case, grid, T=1.0, dt=1e-3, stride=10, out=None):
    """Stationarity over [0, T] and the steady momentum residual with the closed-form pressure."""
    u = case.velocity(grid)
    tail = _chebyshev_tail(u.u1.values[0])
    if tail > 1e-6:
        warnings.warn(f"profile looks under-resolved or not smooth (Chebyshev tail {tail:.1e})", stacklevel=2)
    p = reconstruct_parallel_pressure(case, grid)
    res = l2(steady_residual(u, case.alpha, p))
    model = FlowModel(grid, case.alpha)
    s0 = model.state_from_velocity(u)
    norm0 = l2(s0.u)
    stat, q_ratio = 0.0, 1.0
    if norm0 > 0:
        tr = integrate(s0, T, StepConfig(dt=dt), model, stride=stride)
        stat = max(l2(s.u - s0.u) for s in tr.states) / norm0
        Q = tr.column("l2_q")
        q_ratio = float(Q.max() / Q[0]) if Q[0] > 0 else 1.0
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_field(out / "pressure.eaf1", p)
    return ParallelReport(case.alpha, stat, res, p, tail, q_ratio)


__all__ = [
    "SweepConfig", "ConvergenceRow", "SweepResult", "ParallelFlowCase", "ParallelReport",
    "run_sweep", "sweep_gate", "lift_family", "parallel_flow_verify", "reconstruct_parallel_pressure",
    "steady_residual", "initial_velocity", "mollify_family", "build_family",
]
