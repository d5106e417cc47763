"""Dispersion curves, their monotone inverse, the weights mu_n and w_n^alpha,
and the large-k asymptotic model.

Tables store the excess energy d(k) = lambda_n(k) - E_n rather than lambda_n
itself so that the right tail, where d ~ k^(2n-1) exp(-k^2), keeps full
relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import FitError, MonotonicityError, OutOfRangeError
from .fiber import Discretization, FiberSweep, fiber_sweep, landau_level
from .records import csv_text

TAIL_FLOOR = 1e-12
K_STEP = 0.025
K_MIN, K_MAX = -4.0, 4.5


def default_k_grid(k_min: float = K_MIN, k_max: float = K_MAX, step: float = K_STEP) -> np.ndarray:
    n = int(round((k_max - k_min) / step))
    return k_min + step * np.arange(n + 1)


def asymptotic_constant(n: int) -> float:
    """C_n = 2^n / ((n-1)! sqrt(pi))."""
    return 2.0**n / (math.factorial(n - 1) * math.sqrt(math.pi))


@dataclass(frozen=True)
class AsymptoticModel:
    n: int
    C_n: float
    scale: float = 1.0  # matches the table at its right end; 1.0 is the bare model

    @classmethod
    def for_band(cls, n: int, scale: float = 1.0) -> "AsymptoticModel":
        return cls(n=n, C_n=asymptotic_constant(n), scale=scale)

    def C_n_alpha(self, alpha: float) -> float:
        return self.C_n ** (-alpha - 0.5) * 2.0**-0.5

    def excess(self, k):
        n = self.n
        k = np.asarray(k, dtype=float)
        return self.scale * self.C_n * k ** (2 * n - 1) * np.exp(-k * k)

    def excess_prime(self, k):
        n = self.n
        k = np.asarray(k, dtype=float)
        return self.scale * self.C_n * np.exp(-k * k) * ((2 * n - 1) * k ** (2 * n - 2) - 2.0 * k ** (2 * n))

    def w_alpha(self, k, alpha: float):
        """Leading-order w_n^alpha(k) = C_{n,alpha} k^(-n(2 alpha+1)+alpha) e^{k^2(alpha+1/2)}."""
        k = np.asarray(k, dtype=float)
        return self.C_n_alpha(alpha) * k ** (-self.n * (2 * alpha + 1) + alpha) * np.exp(k * k * (alpha + 0.5))

    def invert_excess(self, d, k_start: float | None = None):
        """Solve excess(k) = d for k on the decreasing branch."""
        d = np.asarray(d, dtype=float)
        n = self.n
        logc = math.log(self.scale * self.C_n)
        k = np.sqrt(np.maximum(-np.log(d), 1.0)) if k_start is None else np.full_like(d, k_start)
        for _ in range(50):
            g = logc + (2 * n - 1) * np.log(k) - k * k - np.log(d)
            dg = (2 * n - 1) / k - 2.0 * k
            step = g / dg
            k = k - step
            if np.all(np.abs(step) < 1e-14 * np.abs(k)):
                break
        return k


@dataclass(frozen=True, eq=False)
class BandTable:
    n: int
    k: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    lam_prime: np.ndarray = field(repr=False)
    excess: np.ndarray = field(repr=False)
    spline: CubicHermiteSpline = field(repr=False)
    tail: AsymptoticModel = field(repr=False)

    @property
    def E_n(self) -> float:
        return landau_level(self.n)

    @property
    def k_min(self) -> float:
        return float(self.k[0])

    @property
    def k_max(self) -> float:
        return float(self.k[-1])

    @property
    def lam_cut(self) -> float:
        """Energy at the left end of the table; above it the band is handled in k-space."""
        return float(self.lam[0])

    @property
    def excess_min(self) -> float:
        return float(self.excess[-1])

    # -- k -> energy -----------------------------------------------------
    def excess_at(self, k):
        k = np.asarray(k, dtype=float)
        if np.any(k < self.k_min - 1e-12):
            raise OutOfRangeError(f"k below tabulated range [{self.k_min}, {self.k_max}]")
        inside = k <= self.k_max
        out = np.where(inside, self.spline(np.minimum(k, self.k_max)), 0.0)
        if not np.all(inside):
            out = np.where(inside, out, self.tail.excess(np.maximum(k, self.k_max)))
        return out if out.ndim else float(out)

    def excess_prime_at(self, k):
        k = np.asarray(k, dtype=float)
        if np.any(k < self.k_min - 1e-12):
            raise OutOfRangeError(f"k below tabulated range [{self.k_min}, {self.k_max}]")
        inside = k <= self.k_max
        out = np.where(inside, self.spline(np.minimum(k, self.k_max), 1), 0.0)
        if not np.all(inside):
            out = np.where(inside, out, self.tail.excess_prime(np.maximum(k, self.k_max)))
        return out if out.ndim else float(out)

    def evaluate(self, k):
        return self.E_n + self.excess_at(k)

    def derivative(self, k):
        return self.excess_prime_at(k)

    # -- energy -> k -----------------------------------------------------
    def invert_excess(self, d):
        """Momentum k with lambda_n(k) - E_n = d.

        Below the table's smallest excess the calibrated asymptotic model is
        used; below ``TAIL_FLOOR`` the energy is out of range.
        """
        d = np.asarray(d, dtype=float)
        scalar = d.ndim == 0
        d = np.atleast_1d(d)
        if np.any(d > self.excess[0]) or np.any(d <= TAIL_FLOOR):
            raise OutOfRangeError(
                f"excess energy outside invertible range ({TAIL_FLOOR}, {self.excess[0]:.6g}]"
            )
        k = np.empty_like(d)
        model = d < self.excess[-1]
        if np.any(model):
            k[model] = self.tail.invert_excess(d[model])
        tab = ~model
        if np.any(tab):
            k[tab] = self._invert_spline(d[tab])
        return float(k[0]) if scalar else k

    def invert(self, lam):
        return self.invert_excess(np.asarray(lam, dtype=float) - self.E_n)

    def is_model_energy(self, lam) -> np.ndarray:
        return np.asarray(lam, dtype=float) - self.E_n < self.excess[-1]

    def _invert_scalar(self, d: float) -> float:
        # same Newton-bisection as below, without array overhead (quadrature hot path)
        j = len(self.k) - 1 - int(np.searchsorted(self.excess[::-1], d, side="left"))
        j = min(max(j, 0), len(self.k) - 2)
        c0, c1, c2, c3 = (float(v) for v in self.spline.c[:, j])
        width = float(self.k[j + 1] - self.k[j])
        d0, d1 = float(self.excess[j]), float(self.excess[j + 1])
        s = width * (d0 - d) / (d0 - d1) if d0 != d1 else 0.0
        lo, hi = 0.0, width
        tol = 4e-15 * (1.0 + abs(float(self.k[j])))
        for _ in range(60):
            p = ((c0 * s + c1) * s + c2) * s + c3 - d
            dp = (3 * c0 * s + 2 * c1) * s + c2
            if p > 0:
                lo = s
            else:
                hi = s
            s_new = s - p / dp if dp != 0 else math.nan
            if not lo <= s_new <= hi:
                s_new = 0.5 * (lo + hi)
            if abs(s_new - s) <= tol:
                s = s_new
                break
            s = s_new
        return float(self.k[j]) + s

    def _invert_spline(self, d: np.ndarray) -> np.ndarray:
        if d.size == 1:
            return np.array([self._invert_scalar(float(d[0]))])
        # excess is decreasing: segment j has excess[j] >= d >= excess[j+1]
        rev = self.excess[::-1]
        j = len(self.k) - 1 - np.searchsorted(rev, d, side="left")
        j = np.clip(j, 0, len(self.k) - 2)
        c = self.spline.c[:, j]
        width = self.k[j + 1] - self.k[j]
        d0, d1 = self.excess[j], self.excess[j + 1]
        s = width * (d0 - d) / np.where(d0 != d1, d0 - d1, 1.0)
        lo = np.zeros_like(s)
        hi = width.copy()
        for _ in range(60):
            p = ((c[0] * s + c[1]) * s + c[2]) * s + c[3] - d
            dp = (3 * c[0] * s + 2 * c[1]) * s + c[2]
            # p is decreasing in s: p > 0 means the root lies to the right
            lo = np.where(p > 0, s, lo)
            hi = np.where(p > 0, hi, s)
            s_new = s - p / np.where(dp != 0, dp, -1.0)
            bad = (s_new < lo) | (s_new > hi) | ~np.isfinite(s_new)
            s_new = np.where(bad, 0.5 * (lo + hi), s_new)
            done = np.abs(s_new - s) <= 4e-15 * (1.0 + np.abs(self.k[j]))
            s = s_new
            if np.all(done):
                break
        return self.k[j] + s

    # -- weights -----------------------------------------------------------
    def mu(self, lam):
        """mu_n(lam) = |lambda_n' o lambda_n^{-1}(lam)|^{-1/2}."""
        return np.abs(self.derivative(self.invert(lam))) ** -0.5

    def w_alpha(self, k, alpha: float):
        return self.excess_at(k) ** -alpha * np.abs(self.derivative(k)) ** -0.5

    def to_csv(self) -> str:
        mu = np.abs(self.lam_prime) ** -0.5
        rows = zip(self.k, self.lam, self.lam_prime, mu)
        return csv_text(["k", "lambda", "lambda_prime", "mu"], rows)


def table_from_sweep(sweep: FiberSweep, n: int) -> BandTable:
    if not 1 <= n <= sweep.n_max:
        raise ValueError(f"band {n} outside 1..{sweep.n_max}")
    k = np.asarray(sweep.k, dtype=float)
    lam = np.asarray(sweep.lam[n - 1], dtype=float)
    dlam = np.asarray(sweep.dlam[n - 1], dtype=float)
    excess = lam - landau_level(n)
    _check_monotone(n, k, excess, dlam)
    spline = CubicHermiteSpline(k, excess, dlam)
    scale = excess[-1] / float(AsymptoticModel.for_band(n).excess(k[-1]))
    tail = AsymptoticModel.for_band(n, scale=scale)
    return BandTable(n=n, k=k, lam=lam, lam_prime=dlam, excess=excess, spline=spline, tail=tail)


def _check_monotone(n, k, excess, dlam):
    if np.any(np.diff(k) <= 0):
        raise ValueError("k_grid must be strictly increasing")
    if np.any(excess <= 0):
        j = int(np.argmin(excess))
        raise MonotonicityError(f"band {n}: lambda <= E_n at k={k[j]}")
    if np.any(np.diff(excess) >= 0) or np.any(dlam >= 0):
        raise MonotonicityError(f"band {n}: dispersion curve not strictly decreasing")
    if not excess[-1] < excess[0]:
        raise MonotonicityError(f"band {n}: no decrease towards E_n")
    # Fritsch-Carlson sufficient condition for a monotone Hermite cubic
    slope = np.diff(excess) / np.diff(k)
    a = dlam[:-1] / slope
    b = dlam[1:] / slope
    if np.any(a * a + b * b > 9.0):
        j = int(np.argmax(a * a + b * b))
        raise MonotonicityError(f"band {n}: Hermite cubic not monotone on [{k[j]}, {k[j + 1]}]")


def build_band_table(
    n: int,
    k_grid: Sequence[float] | None = None,
    disc: Discretization | None = None,
    n_max: int = 6,
) -> BandTable:
    k_grid = default_k_grid() if k_grid is None else np.asarray(k_grid, dtype=float)
    if k_grid[0] > K_MIN + 1e-12 or k_grid[-1] < K_MAX - 1e-12:
        raise ValueError(f"k_grid must span at least [{K_MIN}, {K_MAX}]")
    sweep = fiber_sweep(k_grid, max(n_max, n), disc)
    return table_from_sweep(sweep, n)


def invert_band(table: BandTable, lam: float) -> float:
    return table.invert(lam)


def weight_mu(table: BandTable, lam: float) -> float:
    return float(table.mu(lam))


def weight_w_alpha(table: BandTable, k: float, alpha: float) -> float:
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if not table.k_min <= k <= table.k_max:
        raise OutOfRangeError(f"k={k} outside tabulated range")
    return float(table.w_alpha(k, alpha))


@dataclass(frozen=True)
class AsymptoticFit:
    n: int
    window: tuple
    C_n: float
    lam_prefactor: float
    der_prefactor: float
    lam_prefactor_raw: float
    der_prefactor_raw: float
    k: np.ndarray = field(repr=False)
    ratio: np.ndarray = field(repr=False)

    @property
    def lam_rel_error(self) -> float:
        return abs(self.lam_prefactor / self.C_n - 1.0)

    @property
    def der_rel_error(self) -> float:
        return abs(self.der_prefactor / self.C_n - 1.0)

    def ratio_at(self, k: float) -> float:
        return float(np.interp(k, self.k, self.ratio))


def _leading_coefficient(k: np.ndarray, y: np.ndarray) -> float:
    # y ~ A (1 + O(k^-2)): fit A + B k^-2 and keep A
    design = np.column_stack([np.ones_like(k), k**-2])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0])


def asymptotic_check(table: BandTable, k_window: tuple = (2.5, 3.5)) -> AsymptoticFit:
    """Fit the large-k prefactors of lambda_n - E_n and lambda_n' on a window."""
    lo, hi = map(float, k_window)
    if hi > 6.0:
        raise FitError("window too wide: exp(-k^2) underflows the tabulated resolution beyond k ~ 6")
    if lo < table.k_min or hi > table.k_max + 1e-12 or lo >= hi:
        raise OutOfRangeError(f"window {k_window} not inside the table")
    sel = (table.k >= lo - 1e-12) & (table.k <= hi + 1e-12)
    k = table.k[sel]
    if k.size < 3:
        raise FitError("fewer than 3 nodes in the fit window")
    n = table.n
    gauss = np.exp(-k * k)
    p_lam = table.excess[sel] / (k ** (2 * n - 1) * gauss)
    p_der = -table.lam_prime[sel] / (2.0 * k ** (2 * n) * gauss)
    ratio = table.lam_prime[sel] / table.excess[sel]
    return AsymptoticFit(
        n=n,
        window=(lo, hi),
        C_n=asymptotic_constant(n),
        lam_prefactor=_leading_coefficient(k, p_lam),
        der_prefactor=_leading_coefficient(k, p_der),
        lam_prefactor_raw=float(np.mean(p_lam)),
        der_prefactor_raw=float(np.mean(p_der)),
        k=k,
        ratio=ratio,
    )
