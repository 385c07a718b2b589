import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscilab import FamilySpec, gradient_bounded, plateau_cascade, plateau_window, step_plateau, tail_family, time_blowup
from oscilab.families import cascade_levels, smooth_cutoff


def _mirror_error(f):
    x = f.x
    return float(np.max(np.abs(f(x) - f(-x))))


# -- step plateau --------------------------------------------------------


def test_step_value_at_center():
    f = step_plateau(1e-2, 1.0, 1e-3, 2.0)
    assert f(0.0) == pytest.approx(102.0, rel=1e-14)
    g = step_plateau(1e-3, 0.5, 1e-5)
    assert g(0.0) == pytest.approx(1e-3**-0.5 + 2.0, rel=1e-14)


def test_step_shape_claims():
    s, d, eps, C = 1e-3, 0.5, 1e-5, 2.0
    f = step_plateau(s, d, eps, C)
    w = f.meta["mollify_width"]
    x, v = f.x, f.values
    H = s**-d
    inner = np.abs(x) <= s - w
    outer = np.abs(x) >= s + eps + w
    np.testing.assert_allclose(v[inner], H + C, rtol=1e-14)
    np.testing.assert_allclose(v[outer], C, rtol=1e-14)
    ramp = (np.abs(x) >= s + w) & (np.abs(x) <= s + eps - w)
    expect = C + H * (s + eps - np.abs(x[ramp])) / eps
    np.testing.assert_allclose(v[ramp], expect, rtol=1e-9)
    assert _mirror_error(f) == 0.0


def test_step_is_c1_after_mollification():
    f = step_plateau(1e-3, 0.5, 1e-5)
    x, v = f.x, f.values
    slope = np.diff(v) / np.diff(x)
    # the largest slope jump between neighbouring cells is tiny relative to
    # the ramp slope H/eps, unlike the raw corner jump of the full H/eps
    jump = np.max(np.abs(np.diff(slope)))
    assert jump < 0.25 * f.meta["height"] / f.meta["eps"]


def test_step_scaled_unit_mode():
    s = math.exp(-100)
    f = step_plateau(s, 0.5, 0.01 * s)
    assert f.meta["scaled_unit_mode"] is True
    assert f.meta["length_scale"] == s
    assert f.meta["log_inv_s"] == pytest.approx(100.0, rel=1e-15)
    # the plateau spans one grid unit and keeps the physical height
    assert f(0.0) == pytest.approx(math.exp(50) + 2.0, rel=1e-14)
    assert f(0.5) == f(0.0)
    assert f(2.0) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(s=1e-3, delta_exp=0.5, eps=1e-3),  # eps > s/10
        dict(s=-1.0, delta_exp=0.5, eps=1e-5),
        dict(s=1e-3, delta_exp=0.5, eps=1e-5, C=1.0),
        dict(s=1e-3, delta_exp=0.5, eps=1e-5, mollify_width=1e-5),
    ],
)
def test_step_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        step_plateau(**kwargs)


def test_step_converges_to_bounded_profile_as_delta_vanishes():
    vals = [step_plateau(1e-3, d, 1e-5)(0.0) for d in (0.1, 0.01, 0.001, 1e-6)]
    assert vals == sorted(vals, reverse=True)
    assert vals[-1] == pytest.approx(3.0, rel=1e-5)


@settings(max_examples=15)
@given(st.floats(1e-6, 1e-2), st.floats(0.05, 2.0), st.floats(0.01, 0.1))
def test_step_even_for_any_parameters(s, d, ratio):
    f = step_plateau(s, d, ratio * s)
    assert _mirror_error(f) == 0.0
    assert np.all(f.values >= 2.0 * (1 - 1e-14))


# -- tail ------------------------------------------------------------------


def test_tail_derived_parameters():
    f = tail_family(0.01, 0.5)
    m = f.meta
    assert m["delta_exp"] == pytest.approx(0.1, rel=1e-15)
    assert m["s_analytic"] == pytest.approx(math.exp(-100), rel=1e-14)
    assert m["clamped"] is True
    assert m["height"] == pytest.approx(math.exp(10), rel=1e-14)


def test_tail_dominance_ratio_grows():
    ratios = [tail_family(t, 0.5).meta["dominance_ratio"] for t in (0.25, 0.1, 0.05, 0.01)]
    for t, r in zip((0.25, 0.1, 0.05, 0.01), ratios):
        assert r == pytest.approx(t**0.5 * math.exp(1 / math.sqrt(t)), rel=1e-14)
    assert ratios == sorted(ratios)


def test_tail_is_power_law_outside_t():
    t, ell = 0.1, 0.5
    f = tail_family(t, ell)
    x = f.x
    far = (np.abs(x) > t * (1 + 1 / 16)) & (np.abs(x) < 1)
    np.testing.assert_allclose(f.values[far], np.abs(x[far]) ** -ell, rtol=1e-12)
    assert f.meta["lower_exponent"] > 0
    assert _mirror_error(f) == 0.0


def test_tail_errors():
    with pytest.raises(ValueError):
        tail_family(1.5, 0.5)
    with pytest.raises(ValueError):
        tail_family(0.1, -1.0)


# -- gradient bounded --------------------------------------------------------


def test_gradient_bounded_root():
    s, d, ell = 1e-3, 0.01, 2.0
    f = gradient_bounded(s, d, ell)
    b = f.meta["b"]
    # independent residual in relative form
    assert abs(s**-d - s**-ell + b**-ell) <= 1e-10 * s**-ell
    assert 0 < f.meta["b_gap_ratio"] < 0.1
    assert f.meta["alt_jump_at_b"] == pytest.approx(0.0, abs=1e-9 * s**-ell)


def test_gradient_bounded_support_and_bounds():
    f = gradient_bounded(1e-3, 0.5, 2.0)
    x = f.x
    edge = f.meta["b"] + f.meta["ramp_width"]
    out = np.abs(x) > edge * 1.01
    np.testing.assert_allclose(f.values[out], 2.0, rtol=1e-14)
    assert f.meta["gradient_constant"] < 4
    assert _mirror_error(f) == 0.0


def test_gradient_bounded_l1_bounded_along_sweep():
    l1 = [gradient_bounded(s, d, 2.0).meta["l1_norm"] for s, d in ((1e-3, 0.5), (1e-6, 0.25), (1e-9, 0.125))]
    assert max(l1) / min(l1) < 2


def test_gradient_bounded_errors():
    with pytest.raises(ValueError):
        gradient_bounded(1e-3, 0.5, 1.0)
    with pytest.raises(ValueError):
        gradient_bounded(1e-3, 3.0, 2.0)  # s^-ell < s^-delta: no root


# -- cascade ---------------------------------------------------------------


def test_cascade_levels():
    lv = cascade_levels(4, [2, 4, 6, 8])
    assert lv[2]["a"] == 1 / 256
    assert lv[3]["a"] == 2.0**-16
    assert lv[1]["width"] == pytest.approx((1 / 16) ** 4, rel=1e-15)
    with pytest.raises(ValueError):
        cascade_levels(3, [2, 4])


def test_cascade_sandwich():
    alpha, beta = 0.5, 2.0
    f = plateau_cascade(alpha, beta, [2, 4], 2)
    x, v = f.x, f.values
    assert np.all(v >= x**-alpha * (1 - 1e-12))
    cap = x**-beta
    for _, a, wd in f.meta["levels"]:
        near = (x >= a - 0.1 * wd) & (x <= a + 1.1 * wd)
        cap = np.where(near, np.maximum(cap, a**-beta), cap)
    assert np.all(v <= cap * (1 + 1e-12))
    assert all(r < 0.5 for r in f.meta["separation"])


def test_cascade_errors():
    with pytest.raises(ValueError):
        plateau_cascade(2.0, 0.5, [2, 4], 2)  # alpha >= beta
    with pytest.raises(ValueError):
        plateau_cascade(0.5, 2.0, [4, 2], 2)  # decreasing gammas
    with pytest.raises(ValueError):
        plateau_cascade(0.5, 2.0, [2, 4, 6], 3)  # level 3 below double resolution


def test_cascade_constant_gamma_flags_control():
    assert plateau_cascade(0.5, 2.0, [2, 2], 2).meta["degenerate_control"] is True
    assert plateau_cascade(0.5, 2.0, [2, 4], 2).meta["degenerate_control"] is False


def test_window_matches_cascade_plateau():
    full = plateau_cascade(0.5, 2.0, [2, 4], 2)
    win = plateau_window(0.5, 2.0, [2, 4], 2)
    _, a, wd = full.meta["levels"][1]
    # plateau top and background on either side agree in physical units
    for xi in (0.5, -2.0, 3.0):
        assert win(xi) == pytest.approx(full(a + xi * wd), rel=1e-9)
    assert win.meta["log_length_scale"] == pytest.approx(math.log(wd), rel=1e-14)


def test_window_reaches_deep_levels():
    f = plateau_window(0.5, 2.0, [2, 4, 6, 8], 4)
    assert f.meta["log_a"] == pytest.approx(-16 * math.log(2), rel=1e-15)
    assert f(0.5) == pytest.approx(2.0 ** (16 * 2.0), rel=1e-12)
    assert f.meta["log_length_scale"] == pytest.approx(-128 * math.log(2), rel=1e-15)


# -- time blow-up ----------------------------------------------------------


def test_time_blowup_center_value():
    f = time_blowup(0.5, 0.5, 1.0, 0.99)
    assert f(0.0) == pytest.approx(0.01**-0.5, rel=1e-14)
    assert f.meta["ell1"] == 1.5
    assert f.meta["ell2"] == pytest.approx(1.5, rel=1e-15)


def test_time_blowup_limit_profile():
    f = time_blowup(0.5, 1.0, 1.0, 1.0 - 1e-8, extra=(0.1,))
    assert f(0.1) == pytest.approx(0.1**-0.5, rel=1e-6)


def test_time_blowup_support():
    f = time_blowup(0.5, 0.5, 1.0, 0.5, amplitude=3.0)
    x = f.x
    core = np.abs(x) <= 0.5
    np.testing.assert_allclose(f.values[core], 3.0 / (np.abs(x[core]) ** 0.5 + 0.5**0.5), rtol=1e-14)
    assert np.all(f.values[np.abs(x) >= 1] == 0.0)
    assert _mirror_error(f) == 0.0


def test_smooth_cutoff():
    x = np.linspace(-1.2, 1.2, 241)
    c = smooth_cutoff(x)
    assert np.all(c[np.abs(x) <= 0.5] == 1.0)
    assert np.all(c[np.abs(x) >= 1] == 0.0)
    assert np.all(np.diff(c[x >= 0]) <= 0)


def test_time_blowup_gradient_growth_is_reported():
    taus = np.array([1e-2, 1e-3, 1e-4])
    g = [np.max(np.abs(np.gradient(f.values, f.x)))
         for f in (time_blowup(0.5, 0.5, 1.0, 1.0 - tau) for tau in taus)]
    slope = -np.polyfit(np.log(taus), np.log(g), 1)[0]
    assert math.isfinite(slope) and slope > 0


def test_time_blowup_errors():
    with pytest.raises(ValueError):
        time_blowup(0.5, 0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        time_blowup(0.0, 0.5, 1.0, 0.5)


# -- family records ----------------------------------------------------------


def test_family_spec_round_trip_and_determinism():
    spec = FamilySpec("step_plateau", {"s": 1e-3, "delta_exp": 0.5, "eps": 1e-5})
    again = FamilySpec.from_dict(spec.to_dict())
    assert again == spec
    a, b = spec.build(), again.build()
    assert np.array_equal(a.x, b.x) and np.array_equal(a.values, b.values)
    assert a.values.tobytes() == step_plateau(1e-3, 0.5, 1e-5).values.tobytes()


def test_family_spec_rejects_unknown_kind():
    with pytest.raises(ValueError):
        FamilySpec("sawtooth")
    with pytest.raises(TypeError):
        FamilySpec("tail", {"t": 0.1, "ell": 0.5, "bogus": 1}).build()
