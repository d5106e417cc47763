import math

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from maglap import selftest as st
from maglap.decay import (
    agmon_envelope,
    agmon_envelope_values,
    analytic_continuation,
    balancing_gamma,
    beyond_grid_bound,
    cauchy_riemann_residual,
    decay_certificate,
    direct_harmonic_norm,
    overlap_kernel,
    split_exponents,
    split_gamma,
    sup_norm_growth,
    tail_mass,
    theorem_beta_bound,
)
from maglap.errors import DominationError, FitError, MembershipError, TruncationError
from maglap.fiber import Discretization, fiber_sweep, solve_fiber, turning_point
from maglap.modes import gaussian_bump, smooth_bump, threshold_mode

# Overlap of the normalized ground states at k = 0 and k = 3 from parabolic
# cylinder functions (mpmath, 25 digits).
F_0_3 = 0.3152551583118504
# int_L^inf ||Pi_1 f(x, .)||^2 dx for the smooth bump on [0, 1]: parabolic-cylinder
# eigenfunctions, 60-point Gauss-Legendre in k, adaptive quad in x.
TAIL_ORACLE = {3.0: 0.0008673068763413725, 5.0: 1.0684938735568795e-09}


@pytest.fixture(scope="module")
def bump01(sweep):
    return smooth_bump(1, 0.0, 1.0, sweep.k)


@pytest.fixture(scope="module")
def kernel(sweep):
    return overlap_kernel(sweep, 1)


def test_theorem_bound():
    assert theorem_beta_bound(0.4) == pytest.approx(0.7687, abs=1e-4)
    assert theorem_beta_bound(0.4) == pytest.approx(1.8 / (1 + math.sqrt(1.8)), rel=1e-15)
    assert theorem_beta_bound(0.0) == 0.5
    with pytest.raises(ValueError):
        theorem_beta_bound(1.0)


@given(hst.floats(min_value=0.0, max_value=0.99), hst.floats(min_value=0.05, max_value=0.99))
def test_split_exponents_agree_at_balancing_gamma(alpha, beta):
    a, b = split_exponents(alpha, beta, balancing_gamma(alpha, beta))
    assert a == pytest.approx(b, rel=1e-12)


@given(hst.floats(min_value=0.0, max_value=0.99))
def test_split_gamma_balances_only_at_beta_one(alpha):
    assert split_gamma(alpha, 1.0) == pytest.approx(balancing_gamma(alpha, 1.0), rel=1e-14)
    a, b = split_exponents(alpha, 0.75, split_gamma(alpha, 0.75))
    assert a < b


def test_tail_mass_oracle(bump01, sweep):
    for L, ref in TAIL_ORACLE.items():
        tol = 1e-3 if L == 3.0 else 1e-2  # eigenvector tails carry the O(h^2) grid error
        assert tail_mass(bump01, sweep, L) == pytest.approx(ref, rel=tol)


def test_tail_mass_properties(bump01, sweep):
    assert tail_mass(bump01, sweep, 0.0) == pytest.approx(bump01.norm**2, rel=1e-4)
    L = np.linspace(0, 12, 49)
    t = [tail_mass(bump01, sweep, v) for v in L]
    assert all(b <= a for a, b in zip(t, t[1:]))
    assert tail_mass(bump01, sweep, 40.0) < 1e-200
    with pytest.raises(ValueError):
        tail_mass(bump01, sweep, -1.0)


def test_tail_at_five_against_envelope_integration(bump01, sweep):
    t = tail_mass(bump01, sweep, 5.0)
    env = beyond_grid_bound(bump01, sweep, 5.0)
    assert t <= env <= 10 * t


def test_truncation_detected(sweep):
    from maglap.fiber import FiberSweep

    cut = FiberSweep(sweep.k, sweep.x[:301], sweep.lam, sweep.dlam, sweep.u[:, :, :301], sweep.disc)
    with pytest.raises(TruncationError):
        tail_mass(gaussian_bump(1, 0.0, 0.3, sweep.k), cut, 1.0)


def test_decay_certificate(bump01, sweep, band1):
    prof = decay_certificate(bump01, sweep, band1, 0.4)
    assert prof.fitted_beta >= 0.7 and prof.passed
    assert prof.theorem_bound == pytest.approx(0.7687, abs=1e-4)
    assert prof.abscissa_shift == 1.0 and prof.fit_window == (3.0, 6.0)
    lines = prof.to_csv().splitlines()
    assert lines[0] == "L,tail,minus_log_tail" and len(lines) == 14
    with pytest.raises(FitError):
        decay_certificate(bump01, sweep, band1, 0.4, L_window=(3.0, 3.5))


def test_decay_certificate_requires_membership(sweep, band1):
    with pytest.raises(MembershipError):
        decay_certificate(threshold_mode(band1, 0.0, sweep.k), sweep, band1, 0.4)


@pytest.mark.parametrize("k", [-3.0, -1.0, 0.0])
@pytest.mark.parametrize("beta", [0.5, 0.75, 0.9])
def test_agmon_envelope_dominates(k, beta):
    rep = agmon_envelope(solve_fiber(k, n_max=1)[0], beta)
    assert rep.passed and rep.branch == "negative"
    assert rep.margin >= -1e-10


def test_agmon_envelope_formula():
    x = np.array([turning_point(1), 3.0])
    v = agmon_envelope_values(1, -1.0, 0.5, x)
    c = math.sqrt(math.sqrt(3) + 1)
    r = 3.0 - math.sqrt(3)
    assert v[0] == pytest.approx(math.sqrt(2) * c)
    expect = math.sqrt(2) * c * math.exp(-(2 / 3) * math.sqrt(0.75) * c * r**1.5 - 0.25 * r * r)
    assert v[1] == pytest.approx(expect)


@pytest.mark.parametrize("k", [0.0, 1.0, 2.0, 4.0])
def test_gaussian_branch_constant(k):
    rep = agmon_envelope(solve_fiber(k, n_max=1)[0], 0.9, branch="positive")
    assert 0.1 < rep.constant < 5.0  # largest at k = 0, where u is not centred at x = k
    with pytest.raises(ValueError):
        agmon_envelope(solve_fiber(-1.0, n_max=1)[0], 0.9, branch="positive")
    with pytest.raises(ValueError):
        agmon_envelope(solve_fiber(k, n_max=1)[0], 1.0)


def test_sup_norm_bound(sweep):
    rows = sup_norm_growth(sweep, 1)
    assert all(sup <= bound for _, sup, bound in rows)
    assert rows[0][0] == -4.0


def test_overlap_kernel(kernel):
    assert all(c.passed for c in kernel.checks())
    assert kernel.at(0.0, 3.0) == pytest.approx(F_0_3, abs=1e-6)


def test_overlap_refinement_stable(sweep):
    fine = fiber_sweep(np.array([0.0, 3.0]), n_max=1, disc=Discretization(n_points=3301))
    F = overlap_kernel(fine, 1).values[0, 1]
    assert abs(F - overlap_kernel(sweep, 1).at(0.0, 3.0)) <= 1e-6


@given(hst.floats(min_value=-3.0, max_value=3.0))
def test_continuation_matches_real_profile(y):
    sw = st.default_sweep()
    f = gaussian_bump(1, 1.0, 0.5, sw.k)
    K = overlap_kernel(sw, 1)
    assert abs(analytic_continuation(f, K, y) - direct_harmonic_norm(f, sw, y)) <= 1e-6


@given(hst.floats(min_value=-2.0, max_value=2.0), hst.floats(min_value=-1.0, max_value=-0.01))
def test_cauchy_riemann(a, b):
    sw = st.default_sweep()
    f = gaussian_bump(1, 1.0, 0.5, sw.k)
    assert cauchy_riemann_residual(f, overlap_kernel(sw, 1), complex(a, b)) <= 1e-5


def test_continuation_guards(kernel, sweep):
    f = gaussian_bump(1, 1.0, 0.5, sweep.k)
    with pytest.raises(ValueError):
        analytic_continuation(f, kernel, 0.5j)
    with pytest.raises(ValueError):
        analytic_continuation(gaussian_bump(2, 1.0, 0.5, sweep.k), kernel, -0.5j)
    with pytest.raises(ValueError):
        cauchy_riemann_residual(f, kernel, -0.0001j)
    wide = gaussian_bump(1, 0.0, 3.0, sweep.k)
    with pytest.raises(DominationError):
        analytic_continuation(wide, kernel, -5j)
