"""Cauchy integrals of Holder densities, their Plemelj boundary values and
empirical Holder moduli.

Boundary values use singularity subtraction,

    p.v. int_a^b psi(t)/(t - lam) dt
        = int_a^b (psi(t) - psi(lam))/(t - lam) dt + psi(lam) ln((b - lam)/(lam - a)),

with the jump +/- i pi psi(lam) added on the chosen side.  Off-axis values
close to the cut use the same subtraction with the complex logarithm.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import roots_legendre
from scipy.interpolate import CubicSpline

from .errors import EndpointProximityError, FitError, QuadratureError

PANEL_CAP = 2**14
ENDPOINT_GAP = 1e-6


@dataclass(frozen=True)
class DensityFunction:
    a: float
    b: float
    func: Callable = field(repr=False)
    holder_hint: float = 1.0

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("density interval must satisfy b > a")

    def __call__(self, t):
        return self.func(t)

    @classmethod
    def constant(cls, value: complex, a: float, b: float) -> "DensityFunction":
        return cls(a, b, lambda t: value + 0.0 * np.asarray(t, dtype=float))

    @classmethod
    def from_samples(cls, t: Sequence[float], values: Sequence[complex], kind: str = "cubic",
                     holder_hint: float = 1.0) -> "DensityFunction":
        t = np.asarray(t, dtype=float)
        v = np.asarray(values)
        if not np.all(np.isfinite(v)):
            raise ValueError("density samples must be finite")
        if kind == "cubic":
            func = CubicSpline(t, v)
        elif kind == "linear":
            def func(s, t=t, v=v):
                return np.interp(s, t, v.real) + 1j * np.interp(s, t, v.imag) if np.iscomplexobj(v) \
                    else np.interp(s, t, v)
        else:
            raise ValueError(f"unknown interpolation rule {kind!r}")
        return cls(float(t[0]), float(t[-1]), func, holder_hint)


@dataclass(frozen=True)
class BoundaryValue:
    lam: float
    side: str
    value: complex
    pv_part: complex
    jump_part: complex
    error_estimate: float


def _side_sign(side: str) -> int:
    if side in ("plus", "+", 1):
        return 1
    if side in ("minus", "-", -1):
        return -1
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


_GL_LO = roots_legendre(12)
_GL_HI = roots_legendre(24)


def _panels(func, lo, hi):
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    est = []
    for nodes, weights in (_GL_LO, _GL_HI):
        x = mid[:, None] + half[:, None] * nodes[None, :]
        v = np.asarray(func(x.ravel()), dtype=complex).reshape(x.shape)
        est.append(half * (v @ weights))
    return est[1], np.abs(est[1] - est[0])


def cquad(func, a: float, b: float, points=None, epsrel: float = 1e-12, epsabs: float = 1e-14):
    """Adaptive composite Gauss-Legendre quadrature of a vectorized complex integrand.

    The interval is cut at ``points`` (never sampled); each panel carries a
    24-node value and its distance to the 12-node value as error.  Each pass
    bisects the largest-error panels until the summed error meets the global
    tolerance, so panels that only carry rounding noise are left alone.
    Returns (value, abserr).
    """
    a, b = float(a), float(b)
    edges = [a] + sorted({float(p) for p in (points or ()) if a < p < b}) + [b]
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])
    est, err = _panels(func, lo, hi)
    while np.all(np.isfinite(est)):
        tol = max(epsabs, epsrel * abs(est.sum()))
        total_err = err.sum()
        if total_err <= tol:
            break
        mid = 0.5 * (lo + hi)
        splittable = 0.5 * (hi - lo) > 1e-14 * np.maximum(1.0, np.abs(mid))  # rounding floor
        cand = np.flatnonzero(splittable)
        if cand.size == 0:
            break
        cand = cand[np.argsort(-err[cand], kind="stable")]
        left = total_err - np.cumsum(err[cand])
        pick = cand[: int(np.searchsorted(-left, -0.5 * tol)) + 1]
        if lo.size + pick.size > PANEL_CAP:
            break
        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        nlo = np.concatenate([lo[pick], mid[pick]])
        nhi = np.concatenate([mid[pick], hi[pick]])
        nest, nerr = _panels(func, nlo, nhi)
        lo, hi = np.concatenate([lo[keep], nlo]), np.concatenate([hi[keep], nhi])
        est, err = np.concatenate([est[keep], nest]), np.concatenate([err[keep], nerr])
    total = complex(est.sum())
    if not cmath.isfinite(total):
        return total, math.inf
    return total, float(err.sum())


def _graded_points(lam: float, eps: float, a: float, b: float) -> list:
    # geometric breakpoints around the near-singular point keep QAGS honest
    pts = [lam]
    r = eps
    while r < (b - a):
        pts += [lam - r, lam + r]
        r *= 8.0
    return pts


def offaxis_cauchy(psi: DensityFunction, z: complex, with_error: bool = False, extra_points=None):
    """int_a^b psi(t)/(t - z) dt for Im z != 0."""
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("offaxis_cauchy needs Im z != 0; use boundary_value on the cut")
    a, b = psi.a, psi.b
    lam = z.real
    extra = list(extra_points or [])
    if a < lam < b and abs(z.imag) < (b - a):
        p0 = complex(psi(lam))

        def integrand(t):
            return (psi(t) - p0) / (t - z)

        val, err = cquad(integrand, a, b, points=_graded_points(lam, abs(z.imag), a, b) + extra)
        val += p0 * (cmath.log(b - z) - cmath.log(a - z))
    else:
        val, err = cquad(lambda t: psi(t) / (t - z), a, b, points=[lam] + extra)
    scale = max(abs(val), 1e-300)
    if not math.isfinite(err) or err > 1e-8 * max(scale, 1.0):
        raise QuadratureError(f"Cauchy quadrature did not converge at z={z} (err {err:.3g})")
    return (val, err) if with_error else val


def boundary_value(psi: DensityFunction, lam: float, side: str = "plus",
                   extra_points=None) -> BoundaryValue:
    """Plemelj boundary value r^{+/-}(lam) = p.v. integral +/- i pi psi(lam)."""
    sign = _side_sign(side)
    a, b = psi.a, psi.b
    lam = float(lam)
    if not a < lam < b:
        raise ValueError(f"lambda={lam} not strictly inside ({a}, {b})")
    for end in (a, b):
        if abs(lam - end) < ENDPOINT_GAP and abs(complex(psi(end))) > 1e-14:
            raise EndpointProximityError(
                f"lambda={lam} within {ENDPOINT_GAP} of endpoint {end} where the density is nonzero; "
                "the boundary value has a logarithmic singularity there"
            )
    p0 = complex(psi(lam))

    def integrand(t):
        dt = t - lam
        return np.where(dt != 0, (psi(t) - p0) / np.where(dt != 0, dt, 1.0), 0.0)

    extra = list(extra_points or [])
    if psi.holder_hint < 1:
        # the subtracted integrand behaves like |t - lam|^(alpha - 1): fold it about lam
        # and substitute r = u^m with m alpha >= 2 so the panel rule sees a smooth endpoint
        alpha = max(psi.holder_hint, 0.05)
        m = max(2, math.ceil(2.0 / alpha))
        delta = min(lam - a, b - lam)

        def pair(r):
            return integrand(lam + r) + integrand(lam - r)

        def folded(u):
            return pair(u**m) * (m * u ** (m - 1))

        # offsets below r0 are not resolvable around lam; close [0, r0] with the power law
        # (a power of two, so lam +/- r0 and lam +/- 2 r0 are exact)
        r0 = 2.0 ** math.floor(math.log2(min(1e-9 * max(1.0, abs(lam)), 0.25 * delta)))
        u0, u1 = r0 ** (1.0 / m), delta ** (1.0 / m)
        inner_pts = sorted({abs(p - lam) ** (1.0 / m) for p in extra if r0 < abs(p - lam) < delta})
        reg, err = cquad(folded, u0, u1, points=inner_pts)
        g0, g1 = (complex(v) for v in pair(np.array([r0, 2.0 * r0])))
        expo = math.log2(abs(g1) / abs(g0)) if g0 != 0 and g1 != 0 else 0.0
        expo = min(max(expo, alpha - 1.0), 2.0)
        reg += g0 * r0 / (expo + 1.0)
        for lo, hi in ((a, lam - delta), (lam + delta, b)):
            if hi - lo > 1e-15 * (b - a):
                part, e = cquad(integrand, lo, hi, points=extra)
                reg, err = reg + part, err + e
    else:
        reg, err = cquad(integrand, a, b, points=[lam] + extra)
    pv = reg + p0 * math.log((b - lam) / (lam - a))
    jump = sign * 1j * math.pi * p0
    side_name = "plus" if sign > 0 else "minus"
    return BoundaryValue(lam=lam, side=side_name, value=pv + jump, pv_part=pv, jump_part=jump,
                         error_estimate=err)


@dataclass(frozen=True)
class EpsilonSweep:
    lam: float
    side: str
    eps: np.ndarray
    gap: np.ndarray
    boundary: BoundaryValue
    rate: float

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.gap) < 0))

    def rows(self):
        return list(zip(self.eps.tolist(), self.gap.tolist()))


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def epsilon_sweep(psi: DensityFunction, lam: float, side: str, eps_list: Sequence[float]) -> EpsilonSweep:
    eps = np.asarray(eps_list, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_list must be positive and decreasing")
    sign = _side_sign(side)
    bv = boundary_value(psi, lam, side)
    gap = np.array([abs(offaxis_cauchy(psi, lam + sign * 1j * e) - bv.value) for e in eps])
    return EpsilonSweep(lam=float(lam), side=bv.side, eps=eps, gap=gap, boundary=bv,
                        rate=loglog_slope(eps, gap))


def holder_constant(values: Mapping[complex, complex] | Sequence, alpha: float,
                    points: Sequence[complex] | None = None) -> float:
    """max over pairs |v(z) - v(z')| / |z - z'|^alpha.

    ``values`` is either a mapping point -> value or a sequence of values
    with ``points`` given separately.
    """
    if points is None:
        items = list(values.items())
        z = np.array([p for p, _ in items], dtype=complex)
        v = np.array([q for _, q in items], dtype=complex)
    else:
        z = np.asarray(points, dtype=complex)
        v = np.asarray(values, dtype=complex)
    if z.size < 10:
        raise FitError("holder_constant needs at least 10 sample points")
    best = 0.0
    chunk = 512
    for i in range(0, z.size, chunk):
        dz = np.abs(z[i:i + chunk, None] - z[None, :])
        dv = np.abs(v[i:i + chunk, None] - v[None, :])
        mask = dz > 0
        if np.any(mask):
            best = max(best, float(np.max(dv[mask] / dz[mask] ** alpha)))
    return best
