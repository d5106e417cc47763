"""Acceptance checks shared by ``maglap selftest`` and the test-suite.

Each criterion returns a list of Check records.  Runtimes are not part of
the records (they would break byte-identical reruns); the test-suite times
the criteria separately.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

from .bands import asymptotic_check, default_k_grid, table_from_sweep
from .cauchy import DensityFunction, boundary_value, offaxis_cauchy
from .decay import (
    agmon_envelope,
    analytic_continuation,
    cauchy_riemann_residual,
    decay_certificate,
    direct_harmonic_norm,
    overlap_kernel,
    theorem_beta_bound,
)
from .fiber import _fiber_sweep_cached, band_derivative, fiber_sweep, landau_level, solve_fiber
from .lap import holder_certificate, rn_boundary, rn_value, shrink_window, spectral_projector_element
from .modes import (
    default_y_grid,
    gaussian_bump,
    membership_report,
    smooth_bump,
    synthesize_grid,
    threshold_mode,
    weighted_norm,
)
from .records import Check

EPS_LIST = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
CERT_WINDOW = (0.9, 1.5, 0.1)


@lru_cache(maxsize=1)
def default_sweep():
    return fiber_sweep(default_k_grid())


@lru_cache(maxsize=8)
def default_table(n: int):
    return table_from_sweep(default_sweep(), n)


def reset_caches() -> None:
    default_sweep.cache_clear()
    default_table.cache_clear()
    _fiber_sweep_cached.cache_clear()


def canonical_bump(k_grid=None):
    """Gaussian bump f_1 centred at k = 1.5 with width 0.3, unit amplitude."""
    return gaussian_bump(1, 1.5, 0.3, default_k_grid() if k_grid is None else k_grid)


def criterion_1() -> list[Check]:
    pairs = solve_fiber(0.0, n_max=4)
    rel = max(abs(p.lam - (4 * p.n - 1)) / (4 * p.n - 1) for p in pairs)
    sw = default_sweep()
    gap = min(float(np.min(sw.lam[n - 1] - landau_level(n))) for n in range(1, 5))
    return [
        Check("landau_anchor_rel_error", rel <= 1e-6, rel, 1e-6),
        Check("band_above_threshold_min_gap", gap > 0.0, gap, 0.0),
    ]


def criterion_2() -> list[Check]:
    f1 = asymptotic_check(default_table(1))
    f2 = asymptotic_check(default_table(2))
    return [
        Check("asymptotic_C1_rel_error", f1.lam_rel_error <= 0.05, f1.lam_rel_error, 0.05),
        Check("asymptotic_C2_rel_error", f2.lam_rel_error <= 0.10, f2.lam_rel_error, 0.10),
    ]


def criterion_3() -> list[Check]:
    worst = 0.0
    dk = 1e-2
    for k in (-3.0, -1.0, 0.0, 1.0, 3.0):
        fh = band_derivative(solve_fiber(k, n_max=1)[0])
        lam = [solve_fiber(k + j * dk, n_max=1)[0].lam for j in (-2, -1, 1, 2)]
        fd = (lam[0] - 8 * lam[1] + 8 * lam[2] - lam[3]) / (12 * dk)
        worst = max(worst, abs(fh - fd) / abs(fd))
    p = solve_fiber(3.0, n_max=1)[0]
    ratio = band_derivative(p) / (p.lam - 1.0)
    dev = abs(ratio / -6.0 - 1.0)
    return [
        Check("feynman_hellmann_vs_fd_rel", worst <= 1e-5, worst, 1e-5),
        Check("log_derivative_ratio_k3_rel", dev <= 0.02, dev, 0.02),
    ]


def _test_densities():
    return {
        "one": DensityFunction.constant(1.0, 0.0, 1.0),
        "linear": DensityFunction(0.0, 1.0, lambda t: np.asarray(t, dtype=float) + 0j),
        "holder": DensityFunction(0.0, 1.0, lambda t: np.abs(np.asarray(t, dtype=float) - 0.5) ** 0.4 + 0j, 0.4),
        "oscillating": DensityFunction(-1.0, 2.0, lambda t: np.exp(2j * np.asarray(t, dtype=float)) * np.cos(t)),
    }


def criterion_4() -> list[Check]:
    one = DensityFunction.constant(1.0, 0.0, 1.0)
    e1 = abs(offaxis_cauchy(one, 1j) - cmath.log(1 + 1j))
    e2 = abs(boundary_value(one, 0.25, "minus").value - complex(math.log(3.0), -math.pi))
    jump = 0.0
    for psi in _test_densities().values():
        for lam in np.linspace(psi.a, psi.b, 9)[1:-1]:
            d = boundary_value(psi, lam, "plus").value - boundary_value(psi, lam, "minus").value
            jump = max(jump, abs(d - 2j * math.pi * complex(psi(lam))))
    return [
        Check("offaxis_ln_1_plus_i", e1 <= 1e-10, e1, 1e-10),
        Check("boundary_ln3_minus_i_pi", e2 <= 1e-10, e2, 1e-10),
        Check("jump_identity", jump <= 1e-8, jump, 1e-8),
    ]


def epsilon_gaps(lam: float) -> np.ndarray:
    band = default_table(1)
    f = canonical_bump()
    r_plus = rn_boundary(f, f, band, lam, "plus").value
    return np.array([abs(rn_value(f, f, band, lam + 1j * e) - r_plus) for e in EPS_LIST])


def criterion_5() -> list[Check]:
    out = []
    for lam in (1.2, 2.0):
        gaps = epsilon_gaps(lam)
        mono = bool(np.all(np.diff(gaps) < 0))
        out.append(Check(f"eps_sweep_monotone_lam_{lam}", mono, float(mono), 1.0))
        out.append(Check(f"eps_sweep_final_gap_lam_{lam}", gaps[-1] <= 1e-6, gaps[-1], 1e-6))
    return out


def parseval_modes():
    kg = default_k_grid()
    return {
        1: gaussian_bump(1, 1.0, 0.5, kg),
        2: gaussian_bump(2, -0.5, 0.6, kg, amplitude=0.5 - 0.5j),
        3: gaussian_bump(3, 0.5, 0.7, kg, amplitude=0.3j),
    }


def criterion_6() -> list[Check]:
    modes = parseval_modes()
    grid = synthesize_grid(modes, default_sweep(), default_y_grid())
    lhs = sum(m.norm**2 for m in modes.values())
    rhs = weighted_norm(grid, 0.0) ** 2
    rel = abs(lhs - rhs) / lhs
    return [Check("parseval_rel_error", rel <= 1e-4, rel, 1e-4)]


def criterion_7() -> list[Check]:
    f = {1: smooth_bump(1, 0.0, 1.0, default_k_grid())}
    bands = {1: default_table(1)}
    Lam = float(bands[1].evaluate(0.0)) + 1.0
    full = spectral_projector_element(f, f, landau_level(1), Lam, bands)
    norm2 = f[1].norm ** 2
    rel = abs(full - norm2) / norm2
    below = abs(spectral_projector_element(f, f, -5.0, landau_level(1), bands))
    return [
        Check("projector_full_mass_rel", rel <= 1e-3, rel, 1e-3),
        Check("projector_below_E1", below <= 1e-12, below, 1e-12),
    ]


def criterion_8() -> list[Check]:
    band = default_table(1)
    bands = {1: band}
    mem = threshold_mode(band, 0.5)
    verdict = membership_report(mem, band, 0.4, 1.0).verdict == "in"
    c1 = holder_certificate({1: mem}, {1: mem}, CERT_WINDOW, 0.4, 70, bands).constant
    c2 = holder_certificate({1: mem}, {1: mem}, CERT_WINDOW, 0.4, 140, bands).constant
    drift = abs(c2 / c1 - 1.0) if math.isfinite(c1) and c1 > 0 else math.inf
    neg = threshold_mode(band, 0.0)
    n1 = holder_certificate({1: neg}, {1: neg}, CERT_WINDOW, 0.4, 70, bands, negative_control=True).constant
    small = shrink_window(CERT_WINDOW, landau_level(1), 4.0)
    n2 = holder_certificate({1: neg}, {1: neg}, small, 0.4, 70, bands, negative_control=True).constant
    growth = n2 / n1
    return [
        Check("member_verdict", verdict, float(verdict), 1.0),
        Check("member_certificate_finite", math.isfinite(c1), c1, math.inf),
        Check("member_refinement_drift", drift <= 0.2, drift, 0.2),
        Check("negative_control_growth", growth >= 10.0, growth, 10.0),
    ]


def criterion_9() -> list[Check]:
    f = smooth_bump(1, 0.0, 1.0, default_k_grid())
    prof = decay_certificate(f, default_sweep(), default_table(1), 0.4, L_window=(3.0, 6.0))
    bound = theorem_beta_bound(0.4)
    return [
        Check("decay_fitted_beta", prof.fitted_beta >= 0.7, prof.fitted_beta, 0.7),
        Check("theorem_bound_alpha_0.4", abs(bound - 0.7687) <= 1e-4, bound, 0.7687),
    ]


def criterion_10() -> list[Check]:
    worst = math.inf
    for k in (-3.0, -1.0, 0.0):
        pair = solve_fiber(k, n_max=1)[0]
        for beta in (0.5, 0.75):
            worst = min(worst, agmon_envelope(pair, beta).margin)
    sw = default_sweep()
    sup_margin = min(
        math.sqrt(2.0) * sw.lam[0, j] ** 0.25 - float(np.abs(sw.u[0, j]).max())
        for j in range(sw.k.size) if sw.k[j] <= 0
    )
    return [
        Check("agmon_envelope_margin", worst >= -1e-10, worst, -1e-10),
        Check("sup_bound_margin", sup_margin >= 0.0, sup_margin, 0.0),
    ]


def criterion_11() -> list[Check]:
    sw = default_sweep()
    K = overlap_kernel(sw, 1)
    checks = K.checks()
    f = gaussian_bump(1, 1.0, 0.5, default_k_grid())
    v = analytic_continuation(f, K, -0.5j)
    cr = cauchy_riemann_residual(f, K, -0.5j)
    real_err = max(abs(analytic_continuation(f, K, y) - direct_harmonic_norm(f, sw, y)) for y in (0.0, 0.7, 2.0))
    return checks + [
        Check("continuation_finite", cmath.isfinite(v), abs(v), math.inf),
        Check("cauchy_riemann_residual", cr <= 1e-5, cr, 1e-5),
        Check("real_y_agreement", real_err <= 1e-6, real_err, 1e-6),
    ]


CRITERIA = {
    1: ("Landau anchors", criterion_1),
    2: ("Asymptotic constant", criterion_2),
    3: ("Derivative consistency", criterion_3),
    4: ("Plemelj closed forms", criterion_4),
    5: ("Epsilon sweep", criterion_5),
    6: ("Parseval", criterion_6),
    7: ("Spectral projector", criterion_7),
    8: ("Threshold LAP certificate", criterion_8),
    9: ("Decay", criterion_9),
    10: ("Agmon envelopes", criterion_10),
    11: ("Overlap kernel", criterion_11),
}


def run_all(which=None) -> dict:
    """Run the criteria; returns {number: (title, [Check, ...])}."""
    out = {}
    for num, (title, fn) in CRITERIA.items():
        if which is None or num in which:
            out[num] = (title, fn())
    return out
