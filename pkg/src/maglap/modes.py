"""Fourier coefficients f_n(k), harmonics, weighted norms and membership in
the absorption spaces.

Conventions: the partial Fourier transform in y is unitary,

    (F_y f)(x, k) = (2 pi)^(-1/2) int e^{-iky} f(x, y) dy,
    Pi_n f(x, y)  = (2 pi)^(-1/2) int e^{iky} f_n(k) u_n(x, k) dk,

so that ||f||^2 = sum_n ||f_n||^2 holds without extra factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import CubicSpline

from .bands import TAIL_FLOOR, BandTable
from .cauchy import loglog_slope
from .errors import AliasingError, ResolutionError, TruncationError
from .fiber import FiberSweep, landau_level
from .records import csv_text

SQRT_2PI = math.sqrt(2.0 * math.pi)
GAUSS_CUT = 6.0


def trapezoid_weights(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def smooth_step(k):
    """C-infinity cutoff: 0 for k <= 0, 1 for k >= 1."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(k > 0, np.exp(-1.0 / np.where(k > 0, k, 1.0)), 0.0)
        b = np.where(k < 1, np.exp(-1.0 / np.where(k < 1, 1.0 - k, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True, eq=False)
class ModeFunction:
    n: int
    k: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    descriptor: dict | None = None
    support: tuple | None = None
    func: Callable | None = field(default=None, repr=False)

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(k), dtype=complex)
        spl = _spline_cache(self)
        inside = (k >= self.k[0]) & (k <= self.k[-1])
        return np.where(inside, spl(np.clip(k, self.k[0], self.k[-1])), 0.0)

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.sum(trapezoid_weights(self.k) * np.abs(self.samples) ** 2)))

    def scaled(self, c: complex) -> "ModeFunction":
        func = None if self.func is None else (lambda k, f=self.func: c * f(k))
        desc = None if self.descriptor is None else {**self.descriptor, "scale": complex(c)}
        return ModeFunction(self.n, self.k, c * self.samples, desc, self.support, func)

    def to_csv(self) -> str:
        rows = zip(self.k, self.samples.real, self.samples.imag)
        return csv_text(["k", "re_f", "im_f"], rows)


_SPLINES: dict = {}


def _spline_cache(mode: ModeFunction):
    key = id(mode)
    hit = _SPLINES.get(key)
    if hit is None or hit[0] is not mode:
        hit = (mode, CubicSpline(mode.k, mode.samples))
        _SPLINES[key] = hit
    return hit[1]


def zero_mode(n: int, k_grid) -> ModeFunction:
    k_grid = np.asarray(k_grid, dtype=float)
    return ModeFunction(n, k_grid, np.zeros(k_grid.size, dtype=complex), {"kind": "zero", "n": n},
                        None, lambda k: np.zeros(np.shape(k), dtype=complex))


def gaussian_bump(n: int, k0: float, w: float, k_grid, amplitude: complex = 1.0) -> ModeFunction:
    """exp(-(k - k0)^2 / w^2), truncated at |k - k0| = 6 w."""
    k_grid = np.asarray(k_grid, dtype=float)

    def func(k):
        k = np.asarray(k, dtype=float)
        s = (k - k0) / w
        return np.where(np.abs(s) <= GAUSS_CUT, amplitude * np.exp(-s * s), 0.0)

    desc = {"kind": "gaussian-bump", "n": n, "k0": k0, "w": w}
    return ModeFunction(n, k_grid, func(k_grid).astype(complex), desc,
                        (k0 - GAUSS_CUT * w, k0 + GAUSS_CUT * w), func)


def smooth_bump(n: int, a: float, b: float, k_grid, amplitude: complex = 1.0) -> ModeFunction:
    """Compactly supported C-infinity bump exp(1 - 1/(1 - s^2)) on (a, b)."""
    k_grid = np.asarray(k_grid, dtype=float)

    def func(k):
        s = (2.0 * np.asarray(k, dtype=float) - a - b) / (b - a)
        inside = np.abs(s) < 1
        q = np.where(inside, 1.0 - s * s, 1.0)
        return np.where(inside, amplitude * np.exp(1.0 - 1.0 / q), 0.0)

    desc = {"kind": "smooth-cutoff-bump", "n": n, "a": a, "b": b}
    return ModeFunction(n, k_grid, func(k_grid).astype(complex), desc, (a, b), func)


def threshold_mode(band: BandTable, power: float, k_grid=None, amplitude: complex = 1.0) -> ModeFunction:
    """chi(k) |lambda_n'(k)|^(1/2) (lambda_n(k) - E_n)^power with a smooth step chi.

    Transported to energies this gives mu_n f~_n = chi~ (lam - E_n)^power, so
    power = 0 is the canonical non-member and power > alpha a member.
    """
    k_grid = band.k if k_grid is None else np.asarray(k_grid, dtype=float)

    def func(k):
        k = np.asarray(k, dtype=float)
        kk = np.maximum(k, 0.0)
        chi = smooth_step(k)
        d = band.excess_at(kk)
        val = chi * np.sqrt(np.abs(band.derivative(kk))) * np.where(d > 0, d, 0.0) ** power
        return amplitude * np.where(d > TAIL_FLOOR, val, 0.0)

    desc = {"kind": "threshold", "n": band.n, "power": power}
    return ModeFunction(band.n, k_grid, func(k_grid).astype(complex), desc, (0.0, math.inf), func)


def mode_from_descriptor(desc: Mapping | str, k_grid, bands: Mapping[int, BandTable] | None = None) -> ModeFunction:
    """Build a mode from a JSON-style dict or a ``kind:key=val,...`` string."""
    if isinstance(desc, str):
        kind, _, rest = desc.partition(":")
        params = {}
        for item in filter(None, rest.split(",")):
            key, _, val = item.partition("=")
            params[key.strip()] = float(val)
        desc = {"kind": kind.strip(), **params}
    desc = dict(desc)
    kind = desc.pop("kind")
    n = int(desc.pop("n", 1))
    amp = desc.pop("amplitude", 1.0)
    if kind in ("bump", "gaussian", "gaussian-bump"):
        return gaussian_bump(n, float(desc["k0"]), float(desc["w"]), k_grid, amp)
    if kind in ("smooth", "smooth-cutoff-bump"):
        return smooth_bump(n, float(desc["a"]), float(desc["b"]), k_grid, amp)
    if kind == "threshold":
        if bands is None or n not in bands:
            raise ValueError("threshold modes need the band table")
        return threshold_mode(bands[n], float(desc.get("power", 0.0)), k_grid, amp)
    raise ValueError(f"unknown mode kind {kind!r}")


# -- half-plane functions --------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridSamples:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # shape (len(x), len(y))


@dataclass(frozen=True, eq=False)
class HalfPlaneFunction:
    modes: Mapping[int, ModeFunction] = field(default_factory=dict)
    grid: GridSamples | None = None

    @property
    def mode_norm2(self) -> float:
        return sum(m.norm**2 for m in self.modes.values())


def default_y_grid(y_max: float = 20.0, dy: float = 0.05) -> np.ndarray:
    n = int(round(2 * y_max / dy))
    return -y_max + dy * np.arange(n + 1)


def _mode_on_sweep(mode: ModeFunction, sweep: FiberSweep) -> np.ndarray:
    if mode.k.shape == sweep.k.shape and np.array_equal(mode.k, sweep.k):
        return mode.samples
    return mode(sweep.k)


def _check_oscillation(sweep: FiberSweep, y) -> None:
    dk = float(np.max(np.diff(sweep.k)))
    ymax = float(np.max(np.abs(y)))
    if ymax * dk > 0.5 + 1e-9:
        raise AliasingError(f"|y|*dk = {ymax * dk:.3g} > 0.5: e^(iky) unresolved on the k-grid")


def synthesize_grid(modes, sweep: FiberSweep, y) -> GridSamples:
    """Samples of sum_n Pi_n f on sweep.x times y."""
    y = np.asarray(y, dtype=float)
    _check_oscillation(sweep, y)
    wk = trapezoid_weights(sweep.k)
    phase = np.exp(1j * np.outer(sweep.k, y))
    total = np.zeros((sweep.x.size, y.size), dtype=complex)
    for mode in (modes.values() if isinstance(modes, Mapping) else modes):
        coef = wk * _mode_on_sweep(mode, sweep) / SQRT_2PI
        total += sweep.u[mode.n - 1].T @ (coef[:, None] * phase)
    return GridSamples(sweep.x, y, total)


def synthesize_harmonic(mode: ModeFunction, sweep: FiberSweep, x: float, y: float) -> complex:
    """Pi_n f(x, y) by trapezoid quadrature over the sweep's k-grid."""
    if not 0.0 <= x <= sweep.x[-1]:
        raise ValueError(f"x={x} outside [0, {sweep.x[-1]}]")
    _check_oscillation(sweep, [y])
    coef = trapezoid_weights(sweep.k) * _mode_on_sweep(mode, sweep) * np.exp(1j * sweep.k * y) / SQRT_2PI
    column = sweep.u[mode.n - 1].T @ coef
    j = int(round(x / sweep.h))
    if abs(sweep.x[j] - x) < 1e-12:
        return complex(column[j])
    lo = max(0, min(j - 2, sweep.x.size - 5))
    sl = slice(lo, lo + 5)
    return complex(CubicSpline(sweep.x[sl], column[sl])(x))


def harmonic_profile_grid(mode: ModeFunction, sweep: FiberSweep) -> np.ndarray:
    """x -> ||Pi_n f(x, .)||^2_{L^2(R)} = int u_n(x,k)^2 |f_n(k)|^2 dk on sweep.x."""
    wk = trapezoid_weights(sweep.k) * np.abs(_mode_on_sweep(mode, sweep)) ** 2
    u = sweep.u[mode.n - 1]
    return wk @ (u * u)


def harmonic_profile(mode: ModeFunction, sweep: FiberSweep, x: float) -> float:
    if x < 0:
        raise ValueError("x must be nonnegative")
    prof = harmonic_profile_grid(mode, sweep)
    if x >= sweep.x[-1]:
        return float(prof[-1])
    return float(max(np.interp(x, sweep.x, prof), 0.0))


def project_mode(f: HalfPlaneFunction | GridSamples, sweep: FiberSweep, n: int) -> ModeFunction:
    """f_n(k) = <F_y f(., k), u_n(., k)> on the sweep's k-grid."""
    grid = f.grid if isinstance(f, HalfPlaneFunction) else f
    if grid is None:
        raise ValueError("projection needs grid samples")
    if grid.x.shape != sweep.x.shape or not np.allclose(grid.x, sweep.x):
        raise ValueError("grid x-nodes must coincide with the fiber grid")
    dy = float(np.max(np.diff(grid.y)))
    kmax = float(np.max(np.abs(sweep.k)))
    if kmax * dy >= math.pi:
        raise AliasingError(f"y-spacing {dy} does not resolve |k| up to {kmax} (Nyquist)")
    wy = trapezoid_weights(grid.y)
    dens = np.abs(grid.values) ** 2
    strip = np.abs(grid.y) >= grid.y.max() - 1.0
    total = float(np.sum(dens * wy))
    if total > 0 and float(np.sum(dens[:, strip] * wy[strip])) > 1e-10 * total:
        raise TruncationError("function mass reaches the edge of the y-rectangle")
    phase = np.exp(-1j * np.outer(grid.y, sweep.k)) * wy[:, None] / SQRT_2PI
    fy = grid.values @ phase  # (x, k)
    u = sweep.u[n - 1]  # (k, x)
    coeff = sweep.h * np.einsum("kx,xk->k", u, fy)
    return ModeFunction(n, sweep.k.copy(), coeff, {"kind": "projected", "n": n})


def weighted_norm(f: HalfPlaneFunction | GridSamples, s: float) -> float:
    """(int (1 + y^2)^s |f|^2 dx dy)^(1/2) by the trapezoid rule."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    grid = f.grid if isinstance(f, HalfPlaneFunction) else f
    if grid is None:
        raise ValueError("weighted norm needs grid samples")
    wx = trapezoid_weights(grid.x)
    wy = trapezoid_weights(grid.y) * (1.0 + grid.y**2) ** s
    dens = wx @ (np.abs(grid.values) ** 2)
    total = float(dens @ wy)
    strip = np.abs(grid.y) >= 0.95 * np.abs(grid.y).max()
    if total > 0 and float(dens[strip] @ wy[strip]) > 1e-6 * total:
        raise TruncationError("weighted mass at the rectangle boundary exceeds tolerance")
    return math.sqrt(total)


# -- membership -------------------------------------------------------------

@dataclass(frozen=True)
class MembershipReport:
    n: int
    alpha: float
    s: float
    vanishing_value: float
    holder_constant_estimate: float
    holder_slope: float
    w_alpha_sup: float
    verdict: str

    @property
    def member(self) -> bool:
        return self.verdict == "in"


SLOPE_TOL = 0.05
MIN_WINDOW_NODES = 8


def energy_accumulation_grid(band: BandTable, d_max: float = 1.0, ratio: float = 0.5) -> np.ndarray:
    """Excess energies d_j = d_max ratio^j above E_n down to the tail floor."""
    d_max = min(d_max, float(band.excess[0]))
    nodes = []
    d = d_max
    while d > 2.0 * TAIL_FLOOR:
        nodes.append(d)
        d *= ratio
    return np.array(nodes)


def membership_report(mode: ModeFunction, band: BandTable, alpha: float, s: float,
                      window_decades: float = 3.0) -> MembershipReport:
    """Decide numerically whether the mode lies in X^{s,alpha}_{n,0}.

    mu_n f~_n is sampled on a geometric energy grid accumulating at E_n; its
    limit and Holder exponent come from a log-log regression over the last
    ``window_decades`` decades of resolved nodes.
    """
    if not (0.0 <= alpha < min(1.0, s - 0.5)):
        raise ValueError("need 0 <= alpha < min(1, s - 1/2)")
    if mode.n != band.n:
        raise ValueError("mode and band index differ")
    d = energy_accumulation_grid(band)
    k_d = band.invert_excess(d)
    v = np.abs(mode(k_d)) * np.abs(band.derivative(k_d)) ** -0.5
    window = d <= d[-1] * 10.0**window_decades
    if window.sum() < MIN_WINDOW_NODES:
        raise ResolutionError(f"only {window.sum()} energy nodes in the regression window")

    scale = max(float(np.max(np.abs(mode.samples))), float(np.max(v)), 1e-300)
    vw, dw = v[window], d[window]
    if np.all(vw <= 1e-14 * scale):
        slope = math.inf
        limit = 0.0
    else:
        slope = loglog_slope(dw, vw)
        limit = float(vw[-1]) if slope <= SLOPE_TOL else 0.0

    # Holder quotient at E_n and the sup of w_n^alpha |f_n| (equal when limit = 0)
    quot = np.abs(v - limit) / d**alpha
    holder = float(np.max(quot))
    tail_slope = loglog_slope(dw, quot[window]) if np.any(quot[window] > 0) else math.inf
    if tail_slope < -SLOPE_TOL:
        holder = math.inf

    kg = band.k[band.k > 0]
    wf = band.w_alpha(kg, alpha) * np.abs(mode(kg))
    wq = v / d**alpha
    w_sup = float(max(np.max(wf), np.max(wq)))
    wq_slope = loglog_slope(dw, wq[window]) if np.any(wq[window] > 0) else math.inf
    if wq_slope < -SLOPE_TOL:
        w_sup = math.inf

    if limit > 1e-6 * scale:
        verdict = "out"
    elif slope >= alpha + SLOPE_TOL and math.isfinite(holder) and math.isfinite(w_sup):
        verdict = "in"
    elif slope <= alpha - SLOPE_TOL:
        verdict = "out"
    else:
        verdict = "undecided"
    return MembershipReport(n=band.n, alpha=alpha, s=s, vanishing_value=limit,
                            holder_constant_estimate=holder, holder_slope=slope,
                            w_alpha_sup=w_sup, verdict=verdict)


def landau_threshold(n: int) -> float:
    return landau_level(n)
