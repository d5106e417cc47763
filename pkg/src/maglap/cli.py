"""Command-line front end: ``maglap <subcommand> [options]``.

Every run writes a summary JSON {subcommand, config_echo, results, checks}
to stdout and to ``<out-dir>/<subcommand>.json``; tabular output goes to
CSV files next to it.  Exit status: 0 success, 1 scientific failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import selftest as st
from .bands import default_k_grid, table_from_sweep
from .cauchy import DensityFunction, boundary_value, epsilon_sweep
from .decay import (
    analytic_continuation,
    cauchy_riemann_residual,
    decay_certificate,
    direct_harmonic_norm,
    overlap_kernel,
)
from .errors import MaglapError
from .fiber import Discretization, default_workers, fiber_sweep, landau_level
from .lap import ResolventQuery, holder_certificate, resolvent_element
from .modes import default_y_grid, mode_from_descriptor, project_mode, synthesize_grid, weighted_norm
from .records import Check, csv_text, dumps, write_text

log = logging.getLogger("maglap")

SUBCOMMANDS = ("bands", "resolvent", "lap-sweep", "project", "density", "decay", "continue", "selftest")
DEFAULT_TOLERANCES = {
    "anchor": 1e-6,
    "additivity": 1e-12,
    "parseval": 1e-4,
    "jump": 1e-8,
    "cauchy_riemann": 1e-5,
    "real_y": 1e-6,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {**self.options, "tolerances": dict(self.tolerances)}


# -- parsing ----------------------------------------------------------------

def _interval(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in str(text).split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}") from exc
    if not b > a:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return a, b


def _complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _band_range(text: str) -> list[int]:
    parts = str(text).split(":")
    try:
        lo, hi = (int(parts[0]), int(parts[-1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected n or n1:n2, got {text!r}") from exc
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad band range {text!r}")
    return list(range(lo, hi + 1))


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("grids and output")
    g.add_argument("--config", help="JSON file with option values (flags win)")
    g.add_argument("--out-dir", default=".", help="directory for JSON/CSV output")
    g.add_argument("--n-max", type=int, default=6, help="number of bands computed per fiber")
    g.add_argument("--k-min", type=float, default=-4.0)
    g.add_argument("--k-max", type=float, default=4.5)
    g.add_argument("--k-step", type=float, default=0.025)
    g.add_argument("--x-max", type=float, default=16.5)
    g.add_argument("--n-points", type=int, default=1653)
    g.add_argument("--workers", type=int, default=None, help="parallel fibers (default: $MAGLAP_WORKERS or 1)")
    g.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="tolerance override")


def _modes(p: argparse.ArgumentParser, g_too: bool = False) -> None:
    p.add_argument("--mode", action="append", default=[], help="mode descriptor, e.g. bump:n=1,k0=1.5,w=0.3")
    if g_too:
        p.add_argument("--mode-g", action="append", default=[], help="descriptors for g (default: same as f)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="maglap", description="Magnetic half-plane LAP toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    subs = {}

    p = subs["bands"] = sub.add_parser("bands", help="tabulate band functions")
    _common(p)
    p.add_argument("--n", type=_band_range, default=[1], help="band or range n1:n2")

    p = subs["resolvent"] = sub.add_parser("resolvent", help="<R(z) f, g> or its boundary value")
    _common(p)
    _modes(p, g_too=True)
    p.add_argument("--z", type=_complex, default=None, help="complex point, e.g. 2+0.5i")
    p.add_argument("--lam", type=float, default=None, help="real energy for a boundary value")
    p.add_argument("--side", choices=("plus", "minus"), default="plus")
    p.add_argument("--cutoff", type=int, default=6, help="mode cutoff N")
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--s", type=float, default=1.0)

    p = subs["lap-sweep"] = sub.add_parser("lap-sweep", help="Holder certificate over a window")
    _common(p)
    _modes(p, g_too=True)
    p.add_argument("--window", type=_interval, default=(0.9, 1.5), help="energy interval a:b")
    p.add_argument("--eta", type=float, default=0.1, help="largest imaginary part")
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=70)
    p.add_argument("--side", choices=("plus", "minus"), default="plus")
    p.add_argument("--negative-control", action="store_true")

    p = subs["project"] = sub.add_parser("project", help="synthesize modes on a grid and project back")
    _common(p)
    _modes(p)
    p.add_argument("--y-max", type=float, default=20.0)
    p.add_argument("--dy", type=float, default=0.05)

    p = subs["density"] = sub.add_parser("density", help="Cauchy integral and Plemelj boundary values")
    _common(p)
    p.add_argument("--psi", default="one", help="one | linear | holder:c=0.5,p=0.4 | gauss:c=0.5,w=0.1")
    p.add_argument("--interval", type=_interval, default=(0.0, 1.0))
    p.add_argument("--lam", type=float, default=0.25)
    p.add_argument("--side", choices=("plus", "minus"), default="plus")
    p.add_argument("--eps", default="1e-1,1e-2,1e-3,1e-4,1e-5")

    p = subs["decay"] = sub.add_parser("decay", help="tail masses and the decay certificate")
    _common(p)
    _modes(p)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--L-window", dest="L_window", type=_interval, default=(3.0, 6.0))
    p.add_argument("--L-step", dest="L_step", type=float, default=0.25)

    p = subs["continue"] = sub.add_parser("continue", help="analytic continuation of ||Pi_n f(., y)||^2")
    _common(p)
    _modes(p)
    p.add_argument("--y", type=_complex, default=complex(0.0, -0.5))

    p = subs["selftest"] = sub.add_parser("selftest", help="run the acceptance checks")
    _common(p)
    p.add_argument("--criteria", default="", help="comma separated subset, e.g. 1,4,6")
    return parser, subs


def parse_config(argv, parser_bundle=None) -> RunConfig:
    parser, subs = parser_bundle or build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        sp = subs[args.subcommand]
        known = {a.dest for a in sp._actions}
        conv = {}
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            if dest not in known or dest in ("config", "help"):
                raise UsageError(f"unknown config key {key!r}")
            action = next(a for a in sp._actions if a.dest == dest)
            if dest == "tol" and isinstance(val, dict):
                val = [f"{k}={v}" for k, v in val.items()]
            elif action.type is not None and isinstance(val, str):
                val = action.type(val)
            elif dest in ("window", "L_window", "interval") and isinstance(val, list):
                val = tuple(float(v) for v in val)
            conv[dest] = val
        sp.set_defaults(**conv)
        args = parser.parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config", "tol")}
    if opts.get("workers") is None:
        opts["workers"] = default_workers()
    tols = dict(DEFAULT_TOLERANCES)
    for item in args.tol:
        name, _, val = item.partition("=")
        try:
            v = float(val)
        except ValueError as exc:
            raise UsageError(f"bad tolerance {item!r}") from exc
        if not v > 0 or name not in tols:
            raise UsageError(f"tolerance {item!r}: unknown name or non-positive value")
        tols[name] = v
    _validate(args.subcommand, opts)
    return RunConfig(args.subcommand, opts, tols)


def _validate(sub: str, o: dict) -> None:
    if "alpha" in o and not 0.0 <= o["alpha"] < 1.0:
        raise UsageError(f"alpha={o['alpha']} outside [0, 1)")
    if o["n_max"] < 1 or o["workers"] < 1:
        raise UsageError("n-max and workers must be positive")
    if not o["k_max"] > o["k_min"] or not o["k_step"] > 0:
        raise UsageError("need k-min < k-max and k-step > 0")
    if sub == "bands" and max(o["n"]) > o["n_max"]:
        raise UsageError("requested band above n-max")
    out = Path(o["out_dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    if sub == "resolvent" and (o["z"] is None) == (o["lam"] is None):
        raise UsageError("resolvent needs exactly one of --z and --lam")
    if sub in ("resolvent", "lap-sweep", "project", "decay", "continue") and not o["mode"]:
        raise UsageError(f"{sub} needs at least one --mode")
    if sub == "lap-sweep" and not (o["eta"] > 0 and o["samples"] >= 10):
        raise UsageError("lap-sweep needs eta > 0 and at least 10 samples")


# -- shared setup -----------------------------------------------------------

class Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        o = cfg.options
        self.k_grid = default_k_grid(o["k_min"], o["k_max"], o["k_step"])
        self.disc = Discretization(x_max=o["x_max"], n_points=o["n_points"])
        self._sweep = None
        self._bands = {}

    @property
    def sweep(self):
        if self._sweep is None:
            o = self.cfg.options
            self._sweep = fiber_sweep(self.k_grid, n_max=o["n_max"], disc=self.disc, workers=o["workers"])
        return self._sweep

    def band(self, n: int):
        if n not in self._bands:
            self._bands[n] = table_from_sweep(self.sweep, n)
        return self._bands[n]

    def modes(self, descriptors) -> dict:
        out = {}
        for d in descriptors:
            desc = d if isinstance(d, (dict, str)) else str(d)
            n = int(desc.get("n", 1)) if isinstance(desc, dict) else _descriptor_band(desc)
            if n > self.cfg.options["n_max"]:
                raise UsageError(f"mode on band {n} above n-max")
            m = mode_from_descriptor(desc, self.k_grid, {n: self.band(n)})
            if m.n in out:
                raise UsageError(f"two modes given for band {m.n}")
            out[m.n] = m
        return out


def _descriptor_band(desc: str) -> int:
    for item in desc.partition(":")[2].split(","):
        key, _, val = item.partition("=")
        if key.strip() == "n":
            return int(float(val))
    return 1


def _tol(cfg, name):
    return cfg.tolerances[name]


# -- subcommands ------------------------------------------------------------

def cmd_bands(ctx: Context):
    results, checks, files = {}, [], {}
    for n in ctx.cfg.options["n"]:
        t = ctx.band(n)
        files[f"bands_n{n}.csv"] = t.to_csv()
        gap = float(np.min(t.lam - t.E_n))
        res = {"nodes": int(t.k.size), "E_n": t.E_n, "min_excess": gap}
        checks.append(Check(f"n{n}_above_threshold", gap > 0, gap, 0.0))
        mono = float(np.max(t.lam_prime))
        checks.append(Check(f"n{n}_decreasing", mono < 0, mono, 0.0))
        j = np.flatnonzero(np.isclose(t.k, 0.0, atol=1e-12))
        if j.size:
            lam0 = float(t.lam[j[0]])
            rel = abs(lam0 - (4 * n - 1)) / (4 * n - 1)
            res["lambda_at_0"] = lam0
            checks.append(Check(f"n{n}_anchor_4n_minus_1", rel <= _tol(ctx.cfg, "anchor"), rel, _tol(ctx.cfg, "anchor")))
        results[f"band_{n}"] = res
    return results, checks, files


def _fg(ctx):
    f = ctx.modes(ctx.cfg.options["mode"])
    g = ctx.modes(ctx.cfg.options["mode_g"]) if ctx.cfg.options.get("mode_g") else f
    return f, g


def cmd_resolvent(ctx: Context):
    o = ctx.cfg.options
    f, g = _fg(ctx)
    bands = {n: ctx.band(n) for n in set(f) | set(g)}
    point = o["z"] if o["z"] is not None else (o["lam"], o["side"])
    q = ResolventQuery(f, g, point, mode_cutoff=o["cutoff"])
    kw = {"alpha": o["alpha"], "s": o["s"]} if isinstance(point, tuple) else {}
    res = resolvent_element(q, bands, **kw)
    total = sum(res.per_mode.values(), 0j)
    add = abs(res.value - total)
    checks = [Check("per_mode_additivity", add <= _tol(ctx.cfg, "additivity"), add, _tol(ctx.cfg, "additivity"))]
    if f is g and not isinstance(point, tuple) and point.imag > 0:
        checks.append(Check("herglotz_im_nonnegative", res.value.imag >= 0, res.value.imag, 0.0))
    out = {"point": point if not isinstance(point, tuple) else {"lambda": point[0], "side": point[1]}}
    out.update(res.as_dict())
    return out, checks, {}


def cmd_lap_sweep(ctx: Context):
    o = ctx.cfg.options
    f, g = _fg(ctx)
    bands = {n: ctx.band(n) for n in set(f) | set(g)}
    window = (o["window"][0], o["window"][1], o["eta"])
    cert = holder_certificate(f, g, window, o["alpha"], o["samples"], bands, side=o["side"], s=o["s"],
                              negative_control=o["negative_control"])
    rows = [(z.real, z.imag, o["side"], v.real, v.imag) for z, v in zip(cert.points, cert.values)]
    files = {"lap_sweep.csv": csv_text(["re_z", "im_z", "side", "re", "im"], rows)}
    results = {
        "holder_constant": cert.constant,
        "alpha": cert.alpha,
        "window": list(cert.window),
        "thresholds_inside": [landau_level(m) for m in cert.thresholds],
        "n_samples": cert.n_samples,
        "n_pairs": cert.n_pairs,
        "negative_control": cert.negative_control,
    }
    checks = [Check("certificate_finite", math.isfinite(cert.constant), cert.constant, math.inf)]
    return results, checks, files


def cmd_project(ctx: Context):
    o = ctx.cfg.options
    modes = ctx.modes(o["mode"])
    sw = ctx.sweep
    y = default_y_grid(o["y_max"], o["dy"])
    grid = synthesize_grid(modes, sw, y)
    files, per = {}, {}
    total = 0.0
    for n in range(1, o["n_max"] + 1):
        p = project_mode(grid, sw, n)
        total += p.norm**2
        per[str(n)] = p.norm**2
        if n in modes:
            files[f"project_n{n}.csv"] = p.to_csv()
    grid_norm2 = weighted_norm(grid, 0.0) ** 2
    rel = abs(total - grid_norm2) / grid_norm2 if grid_norm2 > 0 else 0.0
    results = {"mode_norm2": per, "sum_mode_norm2": total, "grid_norm2": grid_norm2, "parseval_rel_error": rel}
    checks = [Check("parseval", rel <= _tol(ctx.cfg, "parseval"), rel, _tol(ctx.cfg, "parseval"))]
    return results, checks, files


def density_from_text(text: str, a: float, b: float) -> DensityFunction:
    kind, _, rest = text.partition(":")
    par = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        par[key.strip()] = float(val)
    if kind == "one":
        return DensityFunction.constant(1.0, a, b)
    if kind == "linear":
        return DensityFunction(a, b, lambda t: np.asarray(t, dtype=float) + 0j)
    if kind == "holder":
        c, p = par.get("c", 0.5 * (a + b)), par.get("p", 0.4)
        return DensityFunction(a, b, lambda t: np.abs(np.asarray(t, dtype=float) - c) ** p + 0j, p)
    if kind == "gauss":
        c, w = par.get("c", 0.5 * (a + b)), par.get("w", 0.1)
        return DensityFunction(a, b, lambda t: np.exp(-((np.asarray(t, dtype=float) - c) / w) ** 2) + 0j)
    raise UsageError(f"unknown density {text!r}")


def cmd_density(ctx: Context):
    o = ctx.cfg.options
    a, b = o["interval"]
    psi = density_from_text(o["psi"], a, b)
    try:
        eps = [float(v) for v in str(o["eps"]).split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --eps {o['eps']!r}") from exc
    sw = epsilon_sweep(psi, o["lam"], o["side"], eps)
    bp = boundary_value(psi, o["lam"], "plus").value
    bm = boundary_value(psi, o["lam"], "minus").value
    jump = abs(bp - bm - 2j * math.pi * complex(psi(o["lam"])))
    files = {"density.csv": csv_text(["eps", "gap"], sw.rows())}
    results = {
        "boundary_value": sw.boundary.value,
        "principal_value": sw.boundary.pv_part,
        "jump_part": sw.boundary.jump_part,
        "rate": sw.rate,
    }
    checks = [
        Check("jump_identity", jump <= _tol(ctx.cfg, "jump"), jump, _tol(ctx.cfg, "jump")),
        Check("gap_monotone", sw.monotone, float(sw.monotone), 1.0),
    ]
    return results, checks, files


def _single_mode(ctx):
    modes = ctx.modes(ctx.cfg.options["mode"])
    if len(modes) != 1:
        raise UsageError("this subcommand takes exactly one --mode")
    return next(iter(modes.values()))


def cmd_decay(ctx: Context):
    o = ctx.cfg.options
    m = _single_mode(ctx)
    prof = decay_certificate(m, ctx.sweep, ctx.band(m.n), o["alpha"], L_window=o["L_window"],
                             L_step=o["L_step"], s=o["s"])
    results = {
        "fitted_beta": prof.fitted_beta,
        "theorem_bound": prof.theorem_bound,
        "gamma": prof.gamma,
        "fit_window": list(prof.fit_window),
        "abscissa_shift": prof.abscissa_shift,
        "pass": prof.passed,
    }
    checks = [Check("fitted_beta_vs_theorem_bound", prof.passed, prof.fitted_beta, prof.theorem_bound)]
    return results, checks, {"decay.csv": prof.to_csv()}


def cmd_continue(ctx: Context):
    o = ctx.cfg.options
    m = _single_mode(ctx)
    K = overlap_kernel(ctx.sweep, m.n)
    y = o["y"]
    val = analytic_continuation(m, K, y)
    checks = K.checks()
    results = {"y": y, "value": val}
    if y.imag < 0:
        cr = cauchy_riemann_residual(m, K, y) if y.imag + 1e-3 <= 0 else math.nan
        results["cauchy_riemann_residual"] = cr
        if math.isfinite(cr):
            checks.append(Check("cauchy_riemann", cr <= _tol(ctx.cfg, "cauchy_riemann"), cr,
                                _tol(ctx.cfg, "cauchy_riemann")))
    d = abs(analytic_continuation(m, K, y.real) - direct_harmonic_norm(m, ctx.sweep, y.real))
    results["real_part_check_y"] = y.real
    checks.append(Check("real_y_agreement", d <= _tol(ctx.cfg, "real_y"), d, _tol(ctx.cfg, "real_y")))
    return results, checks, {}


def cmd_selftest(ctx: Context):
    text = ctx.cfg.options["criteria"]
    which = None
    if text:
        try:
            which = {int(v) for v in text.split(",")}
        except ValueError as exc:
            raise UsageError(f"bad --criteria {text!r}") from exc
        if not which <= set(st.CRITERIA):
            raise UsageError(f"unknown criteria in {text!r}")
    out = st.run_all(which)
    results, checks = {}, []
    for num, (title, cs) in out.items():
        ok = all(c.passed for c in cs)
        results[str(num)] = {"title": title, "pass": ok}
        checks.extend(Check(f"c{num}_{c.name}", c.passed, c.value, c.tolerance) for c in cs)
        print(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}", file=sys.stderr)
    return results, checks, {}


HANDLERS = {
    "bands": cmd_bands,
    "resolvent": cmd_resolvent,
    "lap-sweep": cmd_lap_sweep,
    "project": cmd_project,
    "density": cmd_density,
    "decay": cmd_decay,
    "continue": cmd_continue,
    "selftest": cmd_selftest,
}


def run(cfg: RunConfig) -> int:
    out_dir = Path(cfg.options["out_dir"])
    status = 0
    try:
        results, checks, files = HANDLERS[cfg.subcommand](Context(cfg))
    except UsageError:
        raise
    except MaglapError as exc:
        results, checks, files = {"error": f"{type(exc).__name__}: {exc}"}, [], {}
        status = 1
    if any(not c.passed for c in checks):
        status = 1
    for name, text in files.items():
        write_text(out_dir / name, text)
    summary = {
        "subcommand": cfg.subcommand,
        "config_echo": cfg.echo(),
        "results": results,
        "checks": [c.as_dict() for c in checks],
    }
    text = dumps(summary)
    write_text(out_dir / f"{cfg.subcommand}.json", text)
    sys.stdout.write(text)
    return status


def _join_signed_values(argv):
    # argparse takes "--y -0.5i" for two options; glue complex values to their flag
    out = list(argv)
    i = 0
    while i < len(out) - 1:
        if out[i] in ("--z", "--y") and out[i + 1].startswith("-"):
            try:
                _complex(out[i + 1])
            except argparse.ArgumentTypeError:
                pass
            else:
                out[i:i + 2] = [f"{out[i]}={out[i + 1]}"]
        i += 1
    return out


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MAGLAP_LOGLEVEL", "WARNING"))
    try:
        cfg = parse_config(_join_signed_values(sys.argv[1:] if argv is None else argv))
        return run(cfg)
    except (UsageError, ValueError) as exc:
        print(f"maglap: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse
        return int(exc.code) if isinstance(exc.code, int) else 2


if __name__ == "__main__":
    sys.exit(main())
