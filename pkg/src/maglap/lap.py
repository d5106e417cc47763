"""Resolvent matrix elements, their boundary values on the spectrum and
Holder certificates.

Per band, r_n(z) = int f_n(k) conj(g_n(k)) / (lambda_n(k) - z) dk.  Off the
cut this is computed in momentum space.  On the cut the energy density

    H_n = f~_n conj(g~_n) / |lambda~_n'|      (tilde: composed with lambda_n^{-1})

is fed to the Plemelj routine on a bounded window J around lambda, and the
rest of the integral stays in momentum space where it is regular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .bands import TAIL_FLOOR, BandTable
from .cauchy import BoundaryValue, DensityFunction, boundary_value, cquad, holder_constant, offaxis_cauchy
from .errors import MembershipError, ResolutionError
from .fiber import landau_level
from .modes import ModeFunction, membership_report

K_CAP = 6.5
CUT_GAP = 1e-6
THRESHOLD_FLOOR = 1e-10
PAIR_BUDGET = 10_000


# -- single band ------------------------------------------------------------

def _support(mode: ModeFunction) -> tuple[float, float]:
    if mode.support is not None:
        return float(mode.support[0]), float(mode.support[1])
    return float(mode.k[0]), float(mode.k[-1])


def k_range(f: ModeFunction, g: ModeFunction, band: BandTable) -> tuple[float, float] | None:
    """Momentum interval carrying f conj(g), clipped to where the band is known."""
    fa, fb = _support(f)
    ga, gb = _support(g)
    a = max(fa, ga, band.k_min)
    b = min(fb, gb, K_CAP)
    return (a, b) if b > a else None


def _product(f: ModeFunction, g: ModeFunction):
    def prod(k):
        return f(k) * np.conj(g(k))
    return prod


def _knots(band: BandTable, a: float, b: float, energy: bool = False) -> list:
    # the interpolant is piecewise cubic; its nodes are natural breakpoints
    nodes = band.lam if energy else band.k
    return [float(v) for v in nodes if a < v < b] + ([band.k_max] if not energy and a < band.k_max < b else [])


def _graded(center: float, width: float, a: float, b: float) -> list:
    pts = [center]
    r = max(width, 1e-12)
    while r < (b - a):
        pts += [center - r, center + r]
        r *= 8.0
    return pts


def _rn_kspace(f, g, band: BandTable, z: complex, a: float, b: float) -> tuple[complex, float]:
    prod = _product(f, g)
    z = complex(z)

    def integrand(k):
        return prod(k) / (band.evaluate(k) - z)

    pts = []
    lam_a, lam_b = float(band.evaluate(b)), float(band.evaluate(a))
    if lam_a < z.real < lam_b and z.real - band.E_n > band.excess_min:
        ks = float(band.invert(z.real))
        slope = abs(float(band.derivative(ks)))
        pts = _graded(ks, abs(z.imag) / max(slope, 1e-300), a, b)
    return cquad(integrand, a, b, points=pts + _knots(band, a, b))


def rn_value(f: ModeFunction, g: ModeFunction, band: BandTable, z: complex) -> complex:
    """r_n(z) by momentum-space quadrature for z off the closure of the band range."""
    z = complex(z)
    if z.imag == 0.0 and z.real > band.E_n - CUT_GAP:
        raise ValueError(f"z={z} lies on or within {CUT_GAP} of the cut [E_n, inf); "
                         "use rn_boundary for boundary values")
    rng = k_range(f, g, band)
    if rng is None:
        return 0j
    return _rn_kspace(f, g, band, z, *rng)[0]


def energy_density(f: ModeFunction, g: ModeFunction, band: BandTable):
    """lam -> H_n(lam) = f~ conj(g~) / |lambda~'|, zero below the tail floor."""
    def H(t):
        t = np.asarray(t, dtype=float)
        d = t - band.E_n
        ok = (d > 2.0 * TAIL_FLOOR) & (d <= band.excess[0])
        out = np.zeros(t.shape, dtype=complex)
        if np.any(ok):
            k = band.invert(t[ok])
            out[ok] = f(k) * np.conj(g(k)) / np.abs(band.derivative(k))
        return out if out.ndim else complex(out)
    return H


def rn_value_lambda(f: ModeFunction, g: ModeFunction, band: BandTable, z: complex) -> complex:
    """r_n(z) as the energy-space Cauchy integral of H_n (change of variables)."""
    rng = k_range(f, g, band)
    if rng is None:
        return 0j
    a, b = rng
    lo = max(float(band.evaluate(b)), band.E_n + 2.0 * TAIL_FLOOR)
    hi = float(band.evaluate(a))
    return offaxis_cauchy(DensityFunction(lo, hi, energy_density(f, g, band)), z,
                          extra_points=_knots(band, lo, hi, True))


@dataclass(frozen=True)
class BandBoundary:
    """r_n^{+/-}(lam) with the bookkeeping of the split."""

    n: int
    boundary: BoundaryValue
    window: tuple
    remainder: complex
    method: str

    @property
    def value(self) -> complex:
        return self.boundary.value


def _require_members(f, g, band, alpha, s):
    for name, mode in (("f", f), ("g", g)):
        rep = membership_report(mode, band, alpha, s)
        if rep.verdict != "in":
            raise MembershipError(
                f"{name}_{band.n}: verdict {rep.verdict!r} at alpha={alpha}. The boundary value at "
                f"energies near E_{band.n} needs mu_n f~_n to vanish there (so H_n(E_n) = 0); "
                f"estimated limit {rep.vanishing_value:.3g}, Holder slope {rep.holder_slope:.3g}"
            )


def threshold_window(band: BandTable, lam: float, width: float = 1.0) -> tuple[float, float]:
    E = band.E_n
    if lam - E < width:
        return E, min(max(E + width, lam + 0.5 * width), band.lam_cut)
    return lam - 0.5 * width, min(lam + 0.5 * width, band.lam_cut)


def rn_boundary(f: ModeFunction, g: ModeFunction, band: BandTable, lam: float, side: str = "plus",
                window_width: float = 1.0, alpha: float = 0.4, s: float = 1.0,
                require_membership: bool = True) -> BandBoundary:
    """Boundary value r_n^{+/-}(lam) = lim r_n(lam +/- i eps)."""
    lam = float(lam)
    E = band.E_n
    side = "plus" if side in ("plus", "+", 1) else "minus" if side in ("minus", "-", -1) else side
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    if abs(lam - E) < THRESHOLD_FLOOR:
        raise ResolutionError(f"lambda={lam} within {THRESHOLD_FLOOR} of E_{band.n}")
    rng = k_range(f, g, band)
    if lam < E:
        val = 0j if rng is None else _rn_kspace(f, g, band, lam, *rng)[0]
        bv = BoundaryValue(lam, side, val, val, 0j, 0.0)
        return BandBoundary(band.n, bv, (), 0j, "k-space")
    if lam >= band.lam_cut - CUT_GAP:
        raise ValueError(f"lambda={lam} beyond the tabulated energy range (< {band.lam_cut})")
    if require_membership and lam - E < window_width:
        _require_members(f, g, band, alpha, s)

    ja, jb = threshold_window(band, lam, window_width)
    H = energy_density(f, g, band)
    psi = DensityFunction(ja, jb, H)
    bv = boundary_value(psi, lam, side, extra_points=_threshold_points(E, ja, jb) + _knots(band, ja, jb, True))

    remainder, err = 0j, 0.0
    if rng is not None:
        a, b = rng
        k_lo = float(band.invert(jb))  # lambda_n decreases in k
        k_hi = math.inf if ja <= E else float(band.invert(ja))
        prod = _product(f, g)

        def integrand(k):
            return prod(k) / (band.evaluate(k) - lam)

        for lo, hi in ((a, min(b, k_lo)), (max(a, k_hi), b)):
            if hi > lo:
                v, e = cquad(integrand, lo, hi, points=_knots(band, lo, hi))
                remainder += v
                err += e
    method = "split" if remainder != 0 else "lambda-space-plemelj"
    total = BoundaryValue(lam, side, bv.value + remainder, bv.pv_part + remainder, bv.jump_part,
                          bv.error_estimate + err)
    return BandBoundary(band.n, total, (ja, jb), remainder, method)


def _threshold_points(E: float, a: float, b: float) -> list:
    if a > E:
        return []
    return [E + 10.0**-j for j in range(1, 11) if E + 10.0**-j < b]


# -- full resolvent ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResolventQuery:
    f: Mapping[int, ModeFunction]
    g: Mapping[int, ModeFunction]
    point: complex | tuple
    mode_cutoff: int = 6
    window: tuple | None = None
    outside: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        present = set(self.f) | set(self.g)
        if present and self.mode_cutoff < max(present):
            raise ValueError("mode cutoff below the largest band index present")
        if isinstance(self.point, tuple):
            lam, side = self.point
            if lam < landau_level(1) - 1:
                raise ValueError("real query point must satisfy lambda >= E_1 - 1")
            if side not in ("plus", "minus"):
                raise ValueError("side must be 'plus' or 'minus'")


@dataclass(frozen=True)
class LapResult:
    value: complex
    per_mode: dict
    tail_bound: float
    method_tags: dict

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "per_mode": {str(n): v for n, v in self.per_mode.items()},
            "tail_bound": self.tail_bound,
            "method_tags": {str(n): t for n, t in self.method_tags.items()},
        }


def distance_to_high_bands(point, window, N: int) -> float:
    """Distance from the query (or its window) to [E_{N+1}, inf)."""
    E = landau_level(N + 1)
    if window is not None:
        lam_hi, eta = float(window[1]), 0.0
    elif isinstance(point, tuple):
        lam_hi, eta = float(point[0]), 0.0
    else:
        lam_hi, eta = complex(point).real, abs(complex(point).imag)
    dx = max(E - lam_hi, 0.0)
    return math.hypot(dx, eta)


def resolvent_element(q: ResolventQuery, bands: Mapping[int, BandTable], **kw) -> LapResult:
    """<R(z) f, g> = sum_n r_n(z), or its boundary value at (lambda, side)."""
    per_mode, tags = {}, {}
    for n in sorted(set(q.f) & set(q.g)):
        if n > q.mode_cutoff:
            continue
        f, g, band = q.f[n], q.g[n], bands[n]
        if isinstance(q.point, tuple):
            lam, side = q.point
            bb = rn_boundary(f, g, band, lam, side, **kw)
            per_mode[n], tags[n] = bb.value, bb.method
        else:
            per_mode[n], tags[n] = rn_value(f, g, band, q.point), "k-space"
    value = complex(sum(per_mode.values(), 0j))

    # modes above the cutoff: |r_n| <= ||f_n|| ||g_n|| / dist(z, [E_n, inf))
    f_hi = math.sqrt(sum(m.norm**2 for n, m in q.f.items() if n > q.mode_cutoff) + q.outside.get("f", 0.0))
    g_hi = math.sqrt(sum(m.norm**2 for n, m in q.g.items() if n > q.mode_cutoff) + q.outside.get("g", 0.0))
    if f_hi == 0.0 or g_hi == 0.0:
        tail = 0.0
    else:
        d = distance_to_high_bands(q.point, q.window, q.mode_cutoff)
        tail = math.inf if d == 0.0 else f_hi * g_hi / d
    return LapResult(value, per_mode, tail, tags)


# -- spectral projector -----------------------------------------------------

def spectral_projector_element(f: Mapping[int, ModeFunction], g: Mapping[int, ModeFunction],
                               a: float, b: float, bands: Mapping[int, BandTable]) -> complex:
    """<E(a, b) f, g> = sum_n int_a^b 1_{(E_n, inf)} H_n(lam) dlam."""
    if not a < b:
        raise ValueError("need a < b")
    total = 0j
    for n in sorted(set(f) & set(g)):
        band = bands[n]
        rng = k_range(f[n], g[n], band)
        if rng is None:
            continue
        ka, kb = rng
        lo = max(a, band.E_n + 2.0 * TAIL_FLOOR, float(band.evaluate(kb)))
        hi = min(b, float(band.evaluate(ka)))
        if hi <= lo:
            continue
        H = energy_density(f[n], g[n], band)
        pts = _threshold_points(band.E_n, band.E_n, hi) + _knots(band, lo, hi, True)
        total += cquad(H, lo, hi, points=pts, epsrel=1e-10)[0]
    return complex(total)


# -- Holder certificates ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class HolderCertificate:
    window: tuple
    alpha: float
    side: str
    points: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    constant: float
    thresholds: tuple
    negative_control: bool

    @property
    def n_samples(self) -> int:
        return int(self.points.size)

    @property
    def n_pairs(self) -> int:
        return self.n_samples * (self.n_samples - 1) // 2


def certificate_points(window: tuple, n_samples: int, heights: int = 4, side: str = "plus") -> np.ndarray:
    """p energy midpoints times heights eta_max 2^-j (j < heights) plus the axis."""
    lam_a, lam_b, eta_max = (float(v) for v in window)
    p = max(2, n_samples // (heights + 1))
    lam = lam_a + (np.arange(p) + 0.5) * (lam_b - lam_a) / p
    sign = 1.0 if side == "plus" else -1.0
    etas = [eta_max * 2.0**-j for j in range(heights)] + [0.0]
    return np.array([x + sign * 1j * e for e in etas for x in lam])


def holder_certificate(f: Mapping[int, ModeFunction], g: Mapping[int, ModeFunction], window: tuple,
                       alpha: float, n_samples: int, bands: Mapping[int, BandTable], side: str = "plus",
                       s: float = 1.0, negative_control: bool = False,
                       heights: int = 4) -> HolderCertificate:
    """Empirical alpha-Holder constant of <R(z) f, g> over K = [lam_a, lam_b] x [0, i eta_max].

    Membership is required at every threshold E_m inside K unless
    ``negative_control`` is set, in which case the sweep proceeds and the
    (divergent) constant is reported.
    """
    lam_a, lam_b, eta_max = (float(v) for v in window)
    if not (lam_a < lam_b and eta_max > 0):
        raise ValueError("window must be (lam_a < lam_b, eta_max > 0)")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    modes = sorted(set(f) & set(g))
    inside = tuple(m for m in modes if lam_a <= bands[m].E_n <= lam_b)
    if not negative_control:
        for m in inside:
            _require_members(f[m], g[m], bands[m], alpha, s)

    pts = certificate_points(window, n_samples, heights, side)
    if pts.size * (pts.size - 1) // 2 > PAIR_BUDGET:
        raise ValueError(f"{pts.size} samples exceed the pair budget {PAIR_BUDGET}")
    vals = np.empty(pts.size, dtype=complex)
    for i, z in enumerate(pts):
        total = 0j
        for m in modes:
            if z.imag == 0.0:
                total += rn_boundary(f[m], g[m], bands[m], z.real, side, alpha=alpha, s=s,
                                     require_membership=False).value
            else:
                total += rn_value(f[m], g[m], bands[m], z)
        vals[i] = total
    const = holder_constant(vals, alpha, points=pts)
    return HolderCertificate(window=(lam_a, lam_b, eta_max), alpha=alpha, side=side, points=pts,
                             values=vals, constant=const, thresholds=inside,
                             negative_control=negative_control)


def shrink_window(window: tuple, center: float, factor: float) -> tuple:
    lam_a, lam_b, eta = window
    return (center - (center - lam_a) / factor, center + (lam_b - center) / factor, eta / factor)
