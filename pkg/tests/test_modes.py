import math

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from maglap import selftest as st
from maglap.errors import AliasingError, ResolutionError, TruncationError
from maglap.modes import (
    HalfPlaneFunction,
    default_y_grid,
    energy_accumulation_grid,
    gaussian_bump,
    harmonic_profile,
    membership_report,
    mode_from_descriptor,
    project_mode,
    smooth_bump,
    smooth_step,
    synthesize_grid,
    synthesize_harmonic,
    threshold_mode,
    trapezoid_weights,
    weighted_norm,
    zero_mode,
)


def test_gaussian_norm_closed_form(k_grid):
    # ||a e^{-(k-k0)^2/w^2}||^2 = |a|^2 w sqrt(pi/2)
    m = gaussian_bump(1, 0.7, 0.4, k_grid, amplitude=1 - 2j)
    assert m.norm**2 == pytest.approx(5 * 0.4 * math.sqrt(math.pi / 2), rel=1e-12)
    assert m.support == pytest.approx((0.7 - 2.4, 0.7 + 2.4))


def test_smooth_bump_and_step(k_grid):
    m = smooth_bump(2, 0.0, 1.0, k_grid)
    assert m(0.5) == pytest.approx(1.0)
    assert m(np.array([-0.1, 0.0, 1.0, 1.2])).tolist() == [0, 0, 0, 0]
    k = np.linspace(-1, 2, 31)
    s = smooth_step(k)
    assert np.all(s[k <= 0] == 0) and np.all(s[k >= 1] == 1)
    assert smooth_step(0.5) == pytest.approx(0.5)
    assert np.all(np.diff(s) >= 0)


def test_trapezoid_weights():
    t = np.array([0.0, 1.0, 3.0])
    assert trapezoid_weights(t).tolist() == [0.5, 1.5, 1.0]


def test_descriptors(k_grid, band1):
    a = mode_from_descriptor("bump:n=2,k0=0.5,w=0.3", k_grid)
    b = mode_from_descriptor({"kind": "gaussian-bump", "n": 2, "k0": 0.5, "w": 0.3}, k_grid)
    assert a.n == 2 and np.array_equal(a.samples, b.samples)
    c = mode_from_descriptor("smooth:a=0,b=1", k_grid)
    assert c.n == 1 and c.descriptor["kind"] == "smooth-cutoff-bump"
    t = mode_from_descriptor("threshold:n=1,power=0.5", k_grid, {1: band1})
    assert t.support[1] == math.inf
    with pytest.raises(ValueError):
        mode_from_descriptor("nonsense:n=1", k_grid)
    with pytest.raises(ValueError):
        mode_from_descriptor("threshold:n=1", k_grid)


def test_mode_csv(k_grid):
    lines = gaussian_bump(1, 0, 1, k_grid, amplitude=1j).to_csv().splitlines()
    assert lines[0] == "k,re_f,im_f" and len(lines) == k_grid.size + 1


def test_grid_mode_interpolates(k_grid):
    m = gaussian_bump(1, 0.3, 0.5, k_grid)
    grid_only = type(m)(1, m.k, m.samples)
    k = np.linspace(-1, 1.5, 17)
    assert np.max(np.abs(grid_only(k) - m(k))) < 1e-5
    assert grid_only(np.array([-10.0, 10.0])).tolist() == [0, 0]


def test_parseval_three_modes(sweep):
    modes = st.parseval_modes()
    grid = synthesize_grid(modes, sweep, default_y_grid())
    lhs = sum(m.norm**2 for m in modes.values())
    assert abs(weighted_norm(grid, 0.0) ** 2 - lhs) / lhs <= 1e-4
    assert HalfPlaneFunction(modes, grid).mode_norm2 == pytest.approx(lhs)


def test_projection_round_trip(sweep):
    modes = st.parseval_modes()
    grid = synthesize_grid(modes, sweep, default_y_grid())
    for n, m in modes.items():
        p = project_mode(grid, sweep, n)
        assert np.max(np.abs(p.samples - m.samples)) <= 1e-4 * np.max(np.abs(m.samples))
    assert project_mode(grid, sweep, 5).norm < 1e-8


def test_projection_guards(sweep):
    narrow = {1: gaussian_bump(1, 1.0, 0.3, sweep.k)}  # spreads beyond |y| = 20 in y
    with pytest.raises(TruncationError):
        project_mode(synthesize_grid(narrow, sweep, default_y_grid()), sweep, 1)
    coarse = synthesize_grid(st.parseval_modes(), sweep, default_y_grid(20.0, 1.0))
    with pytest.raises(AliasingError):
        project_mode(coarse, sweep, 1)
    with pytest.raises(AliasingError):
        synthesize_grid(st.parseval_modes(), sweep, default_y_grid(40.0, 0.05))


def test_harmonic_pointwise_matches_grid(sweep):
    m = gaussian_bump(1, 0.5, 0.6, sweep.k)
    y = default_y_grid()
    grid = synthesize_grid({1: m}, sweep, y)
    j, i = 120, 400
    assert abs(synthesize_harmonic(m, sweep, sweep.x[j], y[i]) - grid.values[j, i]) < 1e-14
    # L^2 in y of Pi_1 f at fixed x equals the harmonic profile (Parseval in y)
    prof = harmonic_profile(m, sweep, sweep.x[j])
    assert np.sum(trapezoid_weights(y) * np.abs(grid.values[j]) ** 2) == pytest.approx(prof, rel=1e-6)


def test_uniform_coefficient_bound(sweep):
    # sup_k |f_n| / ||f||_{L^{2,s}} for unit-shape modes on bands 1..4 stays of order one
    ratios = []
    for n in range(1, 5):
        m = gaussian_bump(n, 0.2, 0.6, sweep.k)
        norm = weighted_norm(synthesize_grid({n: m}, sweep, default_y_grid()), 1.0)
        ratios.append(np.max(np.abs(m.samples)) / norm)
    assert max(ratios) / min(ratios) < 3.0 and max(ratios) < 2.0


def test_weighted_norm_monotone_in_s(sweep):
    grid = synthesize_grid(st.parseval_modes(), sweep, default_y_grid())
    assert weighted_norm(grid, 0.0) < weighted_norm(grid, 0.5) < weighted_norm(grid, 1.0)
    with pytest.raises(ValueError):
        weighted_norm(grid, -1.0)


def test_energy_grid(band1):
    d = energy_accumulation_grid(band1)
    assert d[0] == 1.0 and np.allclose(d[1:] / d[:-1], 0.5)
    assert d[-1] > 2e-12


@pytest.mark.parametrize(
    "kind,verdict",
    [(("threshold", 0.0), "out"), (("threshold", 0.3), "out"), (("threshold", 0.5), "in"),
     (("threshold", 1.0), "in"), (("smooth", None), "in"), (("gaussian", None), "in")],
)
def test_membership_verdicts(kind, verdict, band1):
    name, p = kind
    if name == "threshold":
        m = threshold_mode(band1, p)
    elif name == "smooth":
        m = smooth_bump(1, 0.0, 1.0, band1.k)
    else:
        m = gaussian_bump(1, 1.0, 0.5, band1.k)
    rep = membership_report(m, band1, 0.4, 1.0)
    assert rep.verdict == verdict
    assert rep.member == (verdict == "in")


def test_membership_reports_slope(band1):
    rep = membership_report(threshold_mode(band1, 0.7), band1, 0.4, 1.0)
    assert rep.holder_slope == pytest.approx(0.7, abs=0.02)
    assert rep.vanishing_value == 0.0 and math.isfinite(rep.holder_constant_estimate)
    out = membership_report(threshold_mode(band1, 0.0), band1, 0.4, 1.0)
    assert out.vanishing_value == pytest.approx(1.0, rel=1e-6)


def test_membership_guards(band1, band2):
    m = threshold_mode(band1, 0.5)
    with pytest.raises(ValueError):
        membership_report(m, band1, 0.6, 1.0)  # alpha must stay below s - 1/2
    with pytest.raises(ValueError):
        membership_report(m, band2, 0.4, 1.0)
    with pytest.raises(ResolutionError):
        membership_report(m, band1, 0.4, 1.0, window_decades=1.0)


modes_for_scaling = hst.sampled_from(["t0", "t03", "t05", "smooth", "gauss"])
scalars = hst.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False)


@given(modes_for_scaling, scalars)
def test_membership_scale_invariant(name, c):
    band = st.default_table(1)
    base = {
        "t0": lambda: threshold_mode(band, 0.0),
        "t03": lambda: threshold_mode(band, 0.3),
        "t05": lambda: threshold_mode(band, 0.5),
        "smooth": lambda: smooth_bump(1, 0.0, 1.0, band.k),
        "gauss": lambda: gaussian_bump(1, 1.0, 0.5, band.k),
    }[name]()
    v0 = membership_report(base, band, 0.4, 1.0).verdict
    assert membership_report(base.scaled(c), band, 0.4, 1.0).verdict == v0


def test_zero_mode(k_grid):
    z = zero_mode(3, k_grid)
    assert z.norm == 0 and z(1.0) == 0
