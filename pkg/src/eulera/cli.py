"""Command-line entry point.

Global flags (--grid, --length, --dt, --T, --out, --config) are accepted
before or after the subcommand. A config file holds flat ``key = value``
lines using the long option names (dashes or underscores); command-line
values win over the file.
"""
from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import NumericalError, ValidationError
from .grid import make_grid, norms

log = logging.getLogger("eulera")

GLOBAL_DEFAULTS = {"grid": "32x64", "length": "16pi", "dt": 1e-3, "T": 1.0, "out": None}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def parse_length(text):
    """Float, or a multiple of pi written like ``16pi`` or ``2*pi``."""
    s = str(text).strip().lower().replace("*", "")
    m = re.fullmatch(r"([0-9.eE+-]*)pi", s)
    try:
        value = (float(m.group(1)) if m.group(1) else 1.0) * math.pi if m else float(s)
    except ValueError:
        raise ValidationError(f"cannot read channel length {text!r}") from None
    if not value > 0:
        raise ValidationError(f"channel length must be positive, got {text!r}")
    return value


def parse_grid(text):
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", str(text))
    if not m:
        raise ValidationError(f"grid must look like N1xN2, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def parse_floats(text):
    try:
        return tuple(float(v) for v in re.split(r"[,\s]+", str(text).strip()) if v)
    except ValueError:
        raise ValidationError(f"cannot read a number list from {text!r}") from None


def read_config(path):
    """Flat key = value file; '#' starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _globals(parser, suppress):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--grid", default=d, help="collocation grid N1xN2 (default 32x64)")
    parser.add_argument("--length", default=d, help="channel length, e.g. 16pi (default)")
    parser.add_argument("--dt", type=float, default=d, help="time step (default 1e-3)")
    parser.add_argument("--T", type=float, default=d, help="final time (default 1)")
    parser.add_argument("--out", default=d, help="output directory")
    parser.add_argument("--config", default=d, help="key = value config file")


def build_parser():
    p = _Parser(prog="eulera", description="Euler-alpha and Euler solver on a periodic channel.")
    _globals(p, suppress=False)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        _globals(sp, suppress=True)
        return sp

    sp = add("solve", "integrate one trajectory")
    sp.add_argument("--alpha", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--profile", default=argparse.SUPPRESS, help="default, sin, poiseuille or zero")
    sp.add_argument("--u0", default=argparse.SUPPRESS, help="EAF1 stream function for u0")
    sp.add_argument("--stride", type=int, default=argparse.SUPPRESS)

    sp = add("sweep", "alpha -> 0 convergence sweep")
    sp.add_argument("--alphas", default=argparse.SUPPRESS, help="comma-separated decreasing ladder")
    sp.add_argument("--profile", default=argparse.SUPPRESS)
    sp.add_argument("--u0", default=argparse.SUPPRESS)
    sp.add_argument("--init-mode", dest="init_mode", default=argparse.SUPPRESS, help="lift (default), mollify or projection")
    sp.add_argument("--stride", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--no-half-dt", dest="half_dt_check", action="store_const", const="false", default=argparse.SUPPRESS)

    sp = add("eigen", "Stokes eigenbasis and manifest")
    sp.add_argument("--k-max", dest="k_max", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--count", type=int, default=argparse.SUPPRESS, help="eigenpairs per Fourier mode")

    sp = add("project", "projection family and approximation certificate")
    sp.add_argument("--alphas", default=argparse.SUPPRESS)
    sp.add_argument("--profile", default=argparse.SUPPRESS)
    sp.add_argument("--u0", default=argparse.SUPPRESS)
    sp.add_argument("--k-max", dest="k_max", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--count", type=int, default=argparse.SUPPRESS)

    sp = add("corrector", "boundary-layer scaling study")
    sp.add_argument("--psi", default=argparse.SUPPRESS, help="quartic x2^2(1-x2)^2 or quadratic x2(1-x2)")
    sp.add_argument("--deltas", default=argparse.SUPPRESS)
    sp.add_argument("--cutoff", default=argparse.SUPPRESS, help="poly or c4")

    sp = add("parallel", "parallel-flow stationarity and pressure check")
    sp.add_argument("--profile", default=argparse.SUPPRESS, help="sin, poiseuille or zero")
    sp.add_argument("--alpha", type=float, default=argparse.SUPPRESS)

    sp = add("norms", "norm report of an EAF1 field")
    sp.add_argument("file")
    return p


class Options:
    """Merged view: built-in defaults < config file < command line."""

    def __init__(self, ns, defaults):
        cfg = read_config(ns.config) if getattr(ns, "config", None) else {}
        self._values = {**GLOBAL_DEFAULTS, **defaults, **cfg}
        for k, v in vars(ns).items():
            if v is not None and k not in ("command", "config", "verbose"):
                self._values[k] = v

    def get(self, key, cast=str):
        v = self._values.get(key)
        if v is None:
            return None
        try:
            return cast(v)
        except (TypeError, ValueError):
            raise ValidationError(f"bad value for {key}: {v!r}") from None

    def flag(self, key):
        v = str(self._values.get(key, "false")).strip().lower()
        return v in ("1", "true", "yes", "on")

    def grid(self):
        n1, n2 = parse_grid(self._values["grid"])
        return make_grid(parse_length(self._values["length"]), n1, n2)


def _out_dir(opts, default):
    return Path(opts.get("out") or default)


def cmd_solve(opts):
    from .experiments import initial_velocity
    from .stepper import FlowModel, StepConfig, integrate

    g = opts.grid()
    alpha = opts.get("alpha", float)
    u0 = initial_velocity(g, opts.get("profile"), opts.get("u0"))
    model = FlowModel(g, alpha)
    s0 = model.state_from_velocity(u0)
    T, dt = opts.get("T", float), opts.get("dt", float)
    n = max(1, math.ceil(T / dt - 1e-9))
    stride = opts.get("stride", int) or max(1, n // 50)
    tr = integrate(s0, T, StepConfig(dt=dt), model, stride=stride)
    out = _out_dir(opts, "solve_out")
    tr.write_csv(out / "trajectory.csv")
    tr.write_checkpoints(out / "checkpoints")
    E, Q = tr.column("energy"), tr.column("l2_q")
    print(f"alpha={alpha:g} steps={n} samples={len(tr.states)}")
    print(f"energy drift {np.max(np.abs(E - E[0])) / max(E[0], 1e-300):.3e}")
    print(f"max |q(t)|/|q0| {np.max(Q) / max(Q[0], 1e-300):.12f}")
    print(f"wrote {out}")
    return 0


def cmd_sweep(opts):
    from .experiments import SweepConfig, run_sweep

    n1, n2 = parse_grid(opts.get("grid"))
    kwargs = dict(
        N1=n1, N2=n2, L=parse_length(opts.get("length")), T=opts.get("T", float), dt=opts.get("dt", float),
        profile=opts.get("profile"), u0_file=opts.get("u0"), init_mode=opts.get("init_mode"),
        workers=opts.get("workers", int), half_dt_check=opts.flag("half_dt_check"),
        out=str(_out_dir(opts, "sweep_out")),
    )
    if opts.get("alphas"):
        kwargs["alphas"] = parse_floats(opts.get("alphas"))
    if opts.get("stride"):
        kwargs["stride"] = opts.get("stride", int)
    res = run_sweep(SweepConfig(**kwargs))
    print("alpha      sup|u-ubar|   sup a^2|grad u|  init_diff     energy_drift  q_ratio")
    for r in res.rows:
        if r.ok:
            print(f"{r.alpha:<10g} {r.sup_L2_diff:<13.6e} {r.sup_alpha2_gradnorm:<16.6e} "
                  f"{r.init_diff:<13.6e} {r.energy_drift:<13.3e} {r.q_ratio:.12f}")
        else:
            print(f"{r.alpha:<10g} FAILED {r.failure}")
    for k, v in res.reference.items():
        print(f"reference {k}: {v}")
    for k, v in res.gate.items():
        print(f"gate {k}: {v}")
    print(f"wrote {kwargs['out']}")
    if res.failed:
        raise NumericalError("fewer than 3 sweep rows succeeded")
    return 0


def cmd_eigen(opts):
    from .initdata import stokes_eigenbasis

    g = opts.grid()
    b = stokes_eigenbasis(g, opts.get("k_max", int), opts.get("count", int))
    out = _out_dir(opts, "eigen_out")
    b.write(out)
    print(f"{len(b)} eigenfields, lambda_1 = {b.lambda1:.12g}, Gram residual {b.gram_residual:.2e}, "
          f"{len(b.rejected)} filtered")
    for j, p in enumerate(b.pairs[:10], 1):
        print(f"  j={j:<3d} mode={p.mode:<3d} {p.parity:<5s} lambda={p.lam:.10g}")
    print(f"wrote {out}")
    return 0


def cmd_project(opts):
    from .experiments import initial_velocity
    from .initdata import certify_E1, project_family, stokes_eigenbasis

    g = opts.grid()
    b = stokes_eigenbasis(g, opts.get("k_max", int), opts.get("count", int))
    u0 = initial_velocity(g, opts.get("profile"), opts.get("u0"))
    fam = project_family(b, u0, parse_floats(opts.get("alphas")))
    rep = certify_E1(fam)
    print("alpha      m      wall_max     |u0a-u0|      alpha|grad u0a|  H3")
    for mb, w, gap, gp, h3 in zip(sorted(fam.members, key=lambda m: -m.alpha), rep.wall_max, rep.l2_gap,
                                  rep.grad_product, rep.h3):
        print(f"{mb.alpha:<10g} {mb.m:<6d} {w:<12.3e} {gap:<13.6e} {gp:<16.6e} {h3:.6e}")
    print(f"slope alpha|grad u0a|: {rep.slope_grad_product:.4f}   slope H3: {rep.slope_h3:.4f}   "
          f"slope alpha^2|grad u0a|^2: {rep.slope_energy_layer:.4f}")
    fails = rep.failures()
    print("certificate: " + ("passed" if not fails else "failed " + ", ".join(fails)))
    return 0


PSI_BAR = {
    "quartic": lambda x1, x2: (x2 * (1 - x2)) ** 2,
    "quadratic": lambda x1, x2: x2 * (1 - x2),
}


def cmd_corrector(opts):
    from .corrector import EXPECTED_SLOPES, scaling_study

    g = opts.grid()
    name = opts.get("psi")
    if name not in PSI_BAR:
        raise ValidationError(f"unknown psi_bar {name!r}; choose {', '.join(PSI_BAR)}")
    rep = scaling_study(g.field(PSI_BAR[name]), parse_floats(opts.get("deltas")), opts.get("cutoff"))
    out = _out_dir(opts, "corrector_out")
    rep.write_csv(out / "corrector.csv")
    rep.write_svg(out / "corrector.svg")
    within = rep.within()
    for k, s in rep.slopes.items():
        print(f"{k:<18s} slope {s:+.4f} (expected {EXPECTED_SLOPES[k]:+.1f}) {'ok' if within[k] else 'off'}")
    if rep.skipped:
        print("skipped unresolved deltas: " + ", ".join(f"{d:g}" for d in rep.skipped))
    print(f"wrote {out}")
    return 0


def cmd_parallel(opts):
    from .experiments import ParallelFlowCase, parallel_flow_verify

    g = opts.grid()
    case = ParallelFlowCase(opts.get("profile"), opts.get("alpha", float))
    rep = parallel_flow_verify(case, g, opts.get("T", float), opts.get("dt", float), out=opts.get("out"))
    print(f"profile={opts.get('profile')} alpha={case.alpha:g}")
    print(f"stationarity sup|u(t)-u(0)|/|u(0)| = {rep.stationarity:.3e}")
    print(f"steady momentum residual L2 = {rep.residual_l2:.3e}")
    return 0


def cmd_norms(opts):
    f = io.read_field(opts.get("file"))
    r = norms(f)
    print(f"l2 {r.l2:.12e}\nh1_semi {r.h1_semi:.12e}\nh3 {r.h3:.12e}\nlinf {r.linf:.12e}")
    return 0


COMMANDS = {
    "solve": (cmd_solve, {"alpha": 0.1, "profile": "default", "stride": None}),
    "sweep": (cmd_sweep, {"profile": "default", "init_mode": "lift", "workers": 1, "half_dt_check": "true"}),
    "eigen": (cmd_eigen, {"k_max": 15, "count": 8}),
    "project": (cmd_project, {"alphas": "0.2,0.1,0.05,0.025", "profile": "default", "k_max": 15, "count": 8}),
    "corrector": (cmd_corrector, {"grid": "4x128", "length": "1", "psi": "quartic",
                                  "deltas": "0.125,0.0625,0.03125,0.015625", "cutoff": "poly"}),
    "parallel": (cmd_parallel, {"profile": "sin", "alpha": 0.1}),
    "norms": (cmd_norms, {}),
}


def cli_main(argv=None):
    """Run a subcommand; 0 on success, 1 on invalid input, 2 on numerical failure."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func, defaults = COMMANDS[ns.command]
    try:
        return func(Options(ns, defaults))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())
