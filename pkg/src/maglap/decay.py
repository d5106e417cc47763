"""Localization of harmonics near the boundary x = 0: tail masses, Agmon
envelopes of the fiber eigenfunctions, overlap kernels and the analytic
continuation of y -> ||Pi_n f(., y)||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.special import erfc

from .bands import BandTable
from .errors import DominationError, FitError, MembershipError, TruncationError
from .fiber import Eigenpair, FiberSweep, _discrete_eigs, turning_point
from .modes import SQRT_2PI, ModeFunction, _mode_on_sweep, harmonic_profile_grid, membership_report, trapezoid_weights
from .records import Check, csv_text

ENVELOPE_SLACK = 1e-10
NOISE_FLOOR = 1e-12  # relative size below which eigenvector samples are rounding noise
TAIL_BETA = 0.9
CR_RADIUS = 1e-3


def theorem_beta_bound(alpha: float) -> float:
    """min(1, (2 alpha + 1) / (1 + sqrt(2 alpha + 1)))."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    s2 = 2.0 * alpha + 1.0
    return min(1.0, s2 / (1.0 + math.sqrt(s2)))


def split_gamma(alpha: float, beta: float) -> float:
    """gamma = sqrt(beta) / (1 + sqrt(2 alpha + 1)), the split k(L) = gamma L."""
    return math.sqrt(beta) / (1.0 + math.sqrt(2.0 * alpha + 1.0))


def balancing_gamma(alpha: float, beta: float) -> float:
    """gamma at which (2 alpha + 1) gamma^2 = beta (1 - gamma)^2."""
    return math.sqrt(beta) / (math.sqrt(beta) + math.sqrt(2.0 * alpha + 1.0))


def split_exponents(alpha: float, beta: float, gamma: float) -> tuple[float, float]:
    """Gaussian rates of the two pieces of the split: coefficient tail and Agmon part."""
    return (2.0 * alpha + 1.0) * gamma**2, beta * (1.0 - gamma) ** 2


# -- tail masses ------------------------------------------------------------

def _envelope_constants(sweep: FiberSweep, n: int, beta: float = TAIL_BETA) -> np.ndarray:
    """C(k) = max_x |u_n(x,k)| e^{beta (x-k)^2 / 2} on the grid."""
    x = sweep.x
    u = np.abs(sweep.u[n - 1])
    u = np.where(u >= NOISE_FLOOR * u.max(axis=1, keepdims=True), u, 0.0)
    expo = 0.5 * beta * (x[None, :] - sweep.k[:, None]) ** 2
    with np.errstate(over="ignore", under="ignore"):
        return np.max(u * np.exp(np.minimum(expo, 700.0)), axis=1)


def beyond_grid_bound(mode: ModeFunction, sweep: FiberSweep, L: float, beta: float = TAIL_BETA) -> float:
    """Upper estimate of int_L^inf ||Pi_n f(x,.)||^2 dx from the gaussian envelope."""
    C = _envelope_constants(sweep, mode.n, beta)
    f2 = np.abs(_mode_on_sweep(mode, sweep)) ** 2 * trapezoid_weights(sweep.k)
    arg = math.sqrt(beta) * np.maximum(L - sweep.k, 0.0)
    per_k = C**2 * 0.5 * math.sqrt(math.pi / beta) * erfc(arg)
    return float(per_k @ f2)


def tail_mass(mode: ModeFunction, sweep: FiberSweep, L: float, profile: np.ndarray | None = None) -> float:
    """int_L^inf ||Pi_n f(x, .)||^2_{L^2(R)} dx."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    x = sweep.x
    prof = harmonic_profile_grid(mode, sweep) if profile is None else profile
    total = float(simpson(prof, x=x))
    if total > 0 and prof[-1] > 1e-14 * total:
        raise TruncationError(f"profile at x_max={x[-1]:.4g} is {prof[-1]:.3g}; enlarge the fiber grid")
    beyond = beyond_grid_bound(mode, sweep, max(L, x[-1]))
    if L >= x[-1]:
        return beyond
    j = int(np.searchsorted(x, L, side="right"))
    # piece [L, x_j] by linear interpolation, then Simpson on the nodes
    p_L = float(np.interp(L, x, prof))
    head = 0.5 * (p_L + prof[j]) * (x[j] - L)
    body = float(simpson(prof[j:], x=x[j:])) if x.size - j >= 2 else 0.0
    return head + body + beyond


@dataclass(frozen=True, eq=False)
class DecayProfile:
    L_grid: np.ndarray
    tail_mass: np.ndarray
    fitted_beta: float
    fit_window: tuple
    abscissa_shift: float
    alpha: float
    theorem_bound: float
    gamma: float
    passed: bool

    def rows(self):
        return [(L, t, -math.log(t) if t > 0 else math.inf) for L, t in zip(self.L_grid, self.tail_mass)]

    def to_csv(self) -> str:
        return csv_text(["L", "tail", "minus_log_tail"], self.rows())


def decay_certificate(mode: ModeFunction, sweep: FiberSweep, band: BandTable, alpha: float,
                      L_window: tuple = (3.0, 6.0), L_step: float = 0.25, beta_split: float = 0.75,
                      s: float = 1.0) -> DecayProfile:
    """Fit -log tail_mass against (L - k_max)^2 (compact k-support) or L^2."""
    bound = theorem_beta_bound(alpha)
    compact = mode.support is not None and math.isfinite(mode.support[1])
    if not compact:
        rep = membership_report(mode, band, alpha, s)
        if rep.verdict != "in":
            raise MembershipError(f"mode fails membership at alpha={alpha} (verdict {rep.verdict!r})")
    shift = max(float(mode.support[1]), 0.0) if compact else 0.0
    a, b = L_window
    L = np.arange(a, b + 0.5 * L_step, L_step)
    prof = harmonic_profile_grid(mode, sweep)
    tail = np.array([tail_mass(mode, sweep, float(v), prof) for v in L])
    if np.any(tail <= 0) or tail[0] / tail[-1] < 1e4:
        raise FitError("tail mass spans fewer than 4 decades on the window (or underflows)")
    slope = float(np.polyfit((L - shift) ** 2, -np.log(tail), 1)[0])
    return DecayProfile(L_grid=L, tail_mass=tail, fitted_beta=slope, fit_window=(a, b),
                        abscissa_shift=shift, alpha=alpha, theorem_bound=bound,
                        gamma=split_gamma(alpha, beta_split), passed=slope >= bound)


# -- Agmon envelopes --------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeReport:
    n: int
    k: float
    beta: float
    branch: str
    margin: float
    constant: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def agmon_envelope_values(n: int, k: float, beta: float, x: np.ndarray) -> np.ndarray:
    """2^(1/2) (x_n - k)^(1/2) exp(-(2/3)(1-beta^2)^(1/2)(x_n-k)^(1/2)(x-x_n)^(3/2) - (beta/2)(x-x_n)^2)."""
    xn = turning_point(n)
    r = np.maximum(x - xn, 0.0)
    c = math.sqrt(xn - k)
    expo = (2.0 / 3.0) * math.sqrt(1.0 - beta**2) * c * r**1.5 + 0.5 * beta * r**2
    return math.sqrt(2.0) * c * np.exp(-expo)


def agmon_envelope(pair: Eigenpair, beta: float, branch: str | None = None) -> EnvelopeReport:
    """Pointwise comparison of |u_n(., k)| with its Agmon-type envelope.

    For k <= 0 the explicit envelope is checked on x >= x_n.  For k >= 0 the
    constant of the gaussian envelope C e^{-beta (x-k)^2 / 2} is not
    explicit; the empirical constant max |u| e^{beta (x-k)^2 / 2} is reported.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    branch = branch or ("negative" if pair.k <= 0 else "positive")
    x, u = pair.x, np.abs(pair.u)
    if branch == "negative":
        if pair.k > 0:
            raise ValueError("the explicit envelope needs k <= 0")
        sel = x >= turning_point(pair.n)
        env = agmon_envelope_values(pair.n, pair.k, beta, x[sel])
        margin = float(np.min(env - u[sel]))
        meaningful = env > ENVELOPE_SLACK
        const = float(np.max(u[sel][meaningful] / env[meaningful]))
        return EnvelopeReport(pair.n, pair.k, beta, branch, margin, const, margin >= -ENVELOPE_SLACK)
    if pair.k < 0:
        raise ValueError("the gaussian envelope branch needs k >= 0")
    keep = u >= NOISE_FLOOR * u.max()
    const = float(np.max(u[keep] * np.exp(0.5 * beta * (x[keep] - pair.k) ** 2)))
    return EnvelopeReport(pair.n, pair.k, beta, branch, math.nan, const, math.isfinite(const))


def sup_norm_growth(sweep: FiberSweep, n: int) -> list[tuple[float, float, float]]:
    """(k, ||u_n(., k)||_inf, 2^(1/2) lambda_n(k)^(1/4)) for k <= 0."""
    rows = []
    for j, k in enumerate(sweep.k):
        if k <= 0:
            rows.append((float(k), float(np.abs(sweep.u[n - 1, j]).max()),
                         math.sqrt(2.0) * float(sweep.lam[n - 1, j]) ** 0.25))
    return rows


# -- overlap kernel and analytic continuation -------------------------------

@dataclass(frozen=True, eq=False)
class OverlapKernel:
    n: int
    k: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def checks(self) -> list[Check]:
        F = self.values
        diag = float(np.max(np.abs(np.diag(F) - 1.0)))
        sup = float(np.max(np.abs(F)))
        sym = float(np.max(np.abs(F - F.T)))
        return [
            Check("overlap_diagonal", diag <= 1e-8, diag, 1e-8),
            Check("overlap_bounded", sup <= 1.0 + 1e-12, sup, 1.0),
            Check("overlap_symmetric", sym <= 1e-14, sym, 1e-14),
        ]

    def at(self, k1: float, k2: float) -> float:
        i = int(np.argmin(np.abs(self.k - k1)))
        j = int(np.argmin(np.abs(self.k - k2)))
        return float(self.values[i, j])


@lru_cache(maxsize=16)
def _coarse_vectors(sweep: FiberSweep, n: int) -> np.ndarray:
    """Band-n eigenvectors on the 2h grid (same x_max) for every sweep momentum."""
    d = sweep.disc
    return np.array([_discrete_eigs(float(k), d.x_max, d.intervals // 2, n)[2][n - 1] for k in sweep.k])


def overlap_kernel(sweep: FiberSweep, n: int, extrapolate: bool = True) -> OverlapKernel:
    """F(k, k') = int u_n(x, k) u_n(x, k') dx on the sweep's k-grid.

    The grid overlap carries the O(h^2) eigenvector error; by default it is
    Richardson-combined with the 2h-grid overlap.
    """
    U = sweep.u[n - 1]
    F = sweep.h * U @ U.T
    if extrapolate:
        V = _coarse_vectors(sweep, n)
        F = F + (F - 2.0 * sweep.h * V @ V.T) / 3.0
    F = 0.5 * (F + F.T)
    return OverlapKernel(n, sweep.k.copy(), F)


def _check_domination(f: np.ndarray, k: np.ndarray, y: complex) -> None:
    weight = np.abs(f) * np.exp(abs(y.imag) * np.abs(k))
    peak = float(weight.max())
    if peak == 0.0:
        return
    edge = max(float(weight[0]), float(weight[-1]))
    if edge > 1e-10 * peak:
        raise DominationError(
            f"|f_n(k)| e^(|Im y| |k|) is {edge / peak:.3g} of its peak at the grid ends; "
            "the mode tail is too heavy for this Im y"
        )


def analytic_continuation(mode: ModeFunction, kernel: OverlapKernel, y: complex) -> complex:
    """Holomorphic extension of y -> ||Pi_n f(., y)||^2 to Im y <= 0.

    (2 pi)^-1 sum_{k,k'} e^{i (k - k') y} f_n(k) conj(f_n(k')) F(k, k') with
    trapezoid weights; at real y this is the squared norm of the harmonic.
    """
    y = complex(y)
    if y.imag > 0:
        raise ValueError("analytic continuation is to Im y <= 0")
    if mode.n != kernel.n:
        raise ValueError("mode and kernel band differ")
    f = mode(kernel.k) if not np.array_equal(mode.k, kernel.k) else mode.samples
    _check_domination(f, kernel.k, y)
    a = trapezoid_weights(kernel.k) * f * np.exp(1j * kernel.k * y)
    b = trapezoid_weights(kernel.k) * np.conj(f) * np.exp(-1j * kernel.k * y)
    return complex(a @ kernel.values @ b) / (2.0 * math.pi)


def direct_harmonic_norm(mode: ModeFunction, sweep: FiberSweep, y: float, extrapolate: bool = True) -> float:
    """||Pi_n f(., y)||^2 by synthesis on the x-grid (h, 2h Richardson by default)."""
    coef = trapezoid_weights(sweep.k) * _mode_on_sweep(mode, sweep) * np.exp(1j * sweep.k * y) / SQRT_2PI
    fine = sweep.h * float(np.sum(np.abs(sweep.u[mode.n - 1].T @ coef) ** 2))
    if not extrapolate:
        return fine
    coarse = 2.0 * sweep.h * float(np.sum(np.abs(_coarse_vectors(sweep, mode.n).T @ coef) ** 2))
    return fine + (fine - coarse) / 3.0


def cauchy_riemann_residual(mode: ModeFunction, kernel: OverlapKernel, y0: complex,
                            radius: float = CR_RADIUS) -> float:
    """|d/da + i d/db| of the continuation at y0 = a + i b, five-point cross."""
    g = lambda y: analytic_continuation(mode, kernel, y)  # noqa: E731
    y0 = complex(y0)
    if y0.imag + radius > 0:
        raise ValueError("stencil must stay in the closed lower half-plane")
    gx = (g(y0 + radius) - g(y0 - radius)) / (2 * radius)
    gy = (g(y0 + 1j * radius) - g(y0 - 1j * radius)) / (2 * radius)
    return abs(gx + 1j * gy)
