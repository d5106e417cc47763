import math

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from maglap.errors import MaglapError
from maglap.fiber import (
    Discretization,
    band_derivative,
    fiber_identity_report,
    landau_level,
    richardson,
    solve_fiber,
    turning_point,
)

# Lowest Dirichlet eigenvalues from the parabolic-cylinder condition
# D_nu(-sqrt(2) k) = 0, nu = (lambda - 1)/2, root-found in 30-digit arithmetic.
PCF_ORACLE = {
    (1, -2.0): 10.884333506701228,
    (1, -1.0): 6.074391061607877,
    (1, 0.5): 2.060765791630573,
    (1, 1.0): 1.4684677434670868,
    (1, 2.0): 1.0357633946055065,
    (2, -1.0): 11.207646834634138,
    (2, 1.0): 4.394925677258296,
}
PCF_DERIVATIVE = {-1.0: -3.921661333139425, 1.0: -0.8767800798170632}


def test_landau_levels_and_turning_points():
    assert [landau_level(n) for n in (1, 2, 3)] == [1.0, 3.0, 5.0]
    assert turning_point(2) == pytest.approx(math.sqrt(7.0))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_value_at_zero_momentum(n):
    lam = solve_fiber(0.0, n_max=4)[n - 1].lam
    assert abs(lam - (4 * n - 1)) <= 1e-8


@pytest.mark.parametrize("key", sorted(PCF_ORACLE))
def test_matches_parabolic_cylinder_oracle(key):
    n, k = key
    assert solve_fiber(k, n_max=2)[n - 1].lam == pytest.approx(PCF_ORACLE[key], abs=1e-8)


@pytest.mark.parametrize("k", sorted(PCF_DERIVATIVE))
def test_feynman_hellmann_matches_oracle(k):
    assert band_derivative(solve_fiber(k, n_max=1)[0]) == pytest.approx(PCF_DERIVATIVE[k], rel=1e-7)


def test_richardson_exact_on_quadratic_error():
    exact = 2.5
    vals = [exact + 0.3 * h**2 + 0.1 * h**4 for h in (0.01, 0.02, 0.04)]
    est, _ = richardson(vals)
    assert est == pytest.approx(exact, abs=1e-14)


def test_discretization_rounds_to_shared_grids():
    d = Discretization(x_max=10.0, n_points=1001)
    assert (d.n_points - 1) % 4 == 0
    with pytest.raises(ValueError):
        Discretization(x_max=100.0, n_points=300)


@given(hst.floats(min_value=-4.0, max_value=4.0))
def test_eigenpair_conventions(k):
    pairs = solve_fiber(k, n_max=3)
    for p in pairs:
        assert p.u[0] == 0.0
        assert p.h * np.sum(p.u**2) == pytest.approx(1.0, abs=1e-10)
        assert p.deriv_at_zero_sign == 1
        assert p.lam > landau_level(p.n)
    lams = [p.lam for p in pairs]
    assert all(a < b for a, b in zip(lams, lams[1:]))


@given(hst.floats(min_value=-4.0, max_value=0.0))
def test_variational_sandwich(k):
    for p in solve_fiber(k, n_max=3):
        assert k * k <= p.lam <= (turning_point(p.n) - k) ** 2 + 1e-8  # equality at k = 0


@given(hst.floats(min_value=-4.0, max_value=3.0))
def test_identity_report_passes(k):
    assert fiber_identity_report(solve_fiber(k, n_max=3)).passed


def test_second_order_convergence_witness():
    # the raw finite-difference eigenvalue moves by about a factor 4 when h halves
    base = Discretization(x_max=12.0, n_points=1201)
    lam_h = [solve_fiber(0.5, n_max=1, disc=d)[0].lam_h for d in (base, base.refined(), base.refined().refined())]
    ratio = (lam_h[0] - lam_h[1]) / (lam_h[1] - lam_h[2])
    assert ratio == pytest.approx(4.0, rel=0.02)


def test_rejects_bad_input():
    with pytest.raises((ValueError, MaglapError)):
        solve_fiber(float("nan"))
    with pytest.raises((ValueError, MaglapError)):
        solve_fiber(0.0, n_max=0)
