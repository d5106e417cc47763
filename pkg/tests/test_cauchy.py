import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from maglap.cauchy import (
    DensityFunction,
    boundary_value,
    cquad,
    epsilon_sweep,
    holder_constant,
    loglog_slope,
    offaxis_cauchy,
)
from maglap.errors import EndpointProximityError, FitError

# p.v. int_0^1 |t - 1/2|^0.4 / (t - 0.3) dt, mpmath at 30 digits with the singularity subtracted
PV_HOLDER_03 = -0.147419118136645901489318359508


def one():
    return DensityFunction.constant(1.0, 0.0, 1.0)


def linear():
    return DensityFunction(0.0, 1.0, lambda t: np.asarray(t, dtype=float) + 0j)


def holder():
    return DensityFunction(0.0, 1.0, lambda t: np.abs(np.asarray(t, dtype=float) - 0.5) ** 0.4 + 0j, 0.4)


def test_cquad_basic_integrals():
    v, e = cquad(lambda t: np.exp(1j * t), 0.0, math.pi)
    assert abs(v - 2j) < 1e-14 and e < 1e-12
    v, _ = cquad(lambda t: np.sqrt(t), 0.0, 1.0)
    assert abs(v - 2 / 3) < 1e-12
    v, _ = cquad(lambda t: np.abs(t - 0.37) ** 0.3, 0.0, 1.0)
    assert abs(v - (0.37**1.3 + 0.63**1.3) / 1.3) < 1e-12


def test_cquad_not_fooled_by_noisy_panels():
    # breakpoints that force tiny panels full of rounding noise must not stop refinement elsewhere
    f = lambda t: np.abs(t - 0.5) ** 0.4
    pts = [0.3 + s * 10.0**-j for j in range(4, 13) for s in (-1, 1)]
    v, _ = cquad(lambda t: (f(t) - f(0.3)) / np.where(t != 0.3, t - 0.3, 1.0), 0.0, 1.0, pts)
    assert abs(v + f(0.3) * math.log(0.7 / 0.3) - PV_HOLDER_03) < 1e-12


def test_offaxis_closed_form():
    assert abs(offaxis_cauchy(one(), 1j) - cmath.log(1 + 1j)) <= 1e-10
    z = 0.3 + 0.2j
    assert abs(offaxis_cauchy(linear(), z) - (1 + z * cmath.log((1 - z) / (-z)))) <= 1e-12


def test_boundary_closed_form():
    bv = boundary_value(one(), 0.25, "minus")
    assert abs(bv.value - complex(math.log(3.0), -math.pi)) <= 1e-10
    assert bv.pv_part.imag == 0.0


def test_boundary_holder_density_oracle():
    assert boundary_value(holder(), 0.3).pv_part.real == pytest.approx(PV_HOLDER_03, abs=1e-12)


def test_boundary_at_holder_point():
    # psi(0.5) = 0 and the subtracted integrand has an integrable |t-1/2|^-0.6 singularity
    ref = -(0.5**0.4) / 0.4 + 0.5**0.4 / 0.4  # the two halves cancel by symmetry
    assert boundary_value(holder(), 0.5).pv_part.real == pytest.approx(ref, abs=1e-10)


densities = hst.sampled_from(["one", "linear", "holder", "osc"])


def _density(name):
    if name == "osc":
        return DensityFunction(-1.0, 2.0, lambda t: np.exp(2j * np.asarray(t, dtype=float)) * np.cos(t))
    return {"one": one, "linear": linear, "holder": holder}[name]()


@given(densities, hst.floats(min_value=0.02, max_value=0.98))
def test_plemelj_jump(name, s):
    psi = _density(name)
    lam = psi.a + s * (psi.b - psi.a)
    d = boundary_value(psi, lam, "plus").value - boundary_value(psi, lam, "minus").value
    assert abs(d - 2j * math.pi * complex(psi(lam))) <= 1e-8


@given(hst.floats(min_value=-0.5, max_value=1.5), hst.floats(min_value=1e-3, max_value=2.0))
def test_schwarz_symmetry(x, y):
    psi = holder()
    assert abs(offaxis_cauchy(psi, complex(x, -y)) - offaxis_cauchy(psi, complex(x, y)).conjugate()) <= 1e-12


@given(hst.sampled_from(["one", "linear", "holder"]), hst.floats(min_value=0.05, max_value=0.95))
def test_pv_real_for_real_density(name, lam):
    assert boundary_value(_density(name), lam).pv_part.imag == 0.0


@pytest.mark.parametrize("side", ["plus", "minus"])
def test_epsilon_sweep_converges(side):
    psi = DensityFunction(0.0, 1.0, lambda t: np.exp(-((np.asarray(t, dtype=float) - 0.4) / 0.2) ** 2) + 0j)
    sw = epsilon_sweep(psi, 0.45, side, [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
    assert sw.monotone
    assert sw.gap[-1] < 1e-3
    assert sw.rate == pytest.approx(1.0, abs=0.1)  # Lipschitz density: linear rate


def test_endpoint_policy():
    with pytest.raises(EndpointProximityError):
        boundary_value(one(), 1e-8)
    vanishing = DensityFunction(0.0, 1.0, lambda t: np.sin(math.pi * np.asarray(t, dtype=float)) + 0j)
    assert math.isfinite(boundary_value(vanishing, 1e-8).value.real)
    with pytest.raises(ValueError):
        boundary_value(one(), 1.5)
    with pytest.raises(ValueError):
        offaxis_cauchy(one(), 0.5)


def test_density_from_samples():
    t = np.linspace(0, 1, 201)
    psi = DensityFunction.from_samples(t, t**2)
    assert abs(offaxis_cauchy(psi, 0.5 + 0.5j) - offaxis_cauchy(
        DensityFunction(0, 1, lambda s: np.asarray(s) ** 2 + 0j), 0.5 + 0.5j)) < 1e-10
    with pytest.raises(ValueError):
        DensityFunction.from_samples(t, np.full_like(t, np.nan))
    with pytest.raises(ValueError):
        DensityFunction(1.0, 1.0, lambda s: s)


def test_holder_constant_and_slope():
    z = np.linspace(0, 1, 30)
    assert holder_constant(np.sqrt(z), 0.5, points=z) == pytest.approx(1.0)
    assert holder_constant(dict(zip(z, 3 * z)), 1.0) == pytest.approx(3.0)
    with pytest.raises(FitError):
        holder_constant(z[:5], 0.5, points=z[:5])
    assert loglog_slope(np.array([1e-1, 1e-2]), np.array([1e-2, 1e-4])) == pytest.approx(2.0)


def test_boundary_at_asymmetric_cusp():
    # psi = |t - 1/2|^0.4 on the right, twice that on the left: p.v. = -(1/2)^0.4 / 0.4
    def f(t):
        t = np.asarray(t, dtype=float)
        return np.abs(t - 0.5) ** 0.4 * np.where(t < 0.5, 2.0, 1.0) + 0j

    psi = DensityFunction(0.0, 1.0, f, 0.4)
    assert boundary_value(psi, 0.5).pv_part.real == pytest.approx(-(0.5**0.4) / 0.4, abs=1e-10)
