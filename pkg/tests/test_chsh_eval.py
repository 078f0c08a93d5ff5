import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import chsh_eval
from errors import DomainError, InfeasibleRange
from protocol_model import Variant

SQRT2 = math.sqrt(2)
unit = st.floats(min_value=0.0, max_value=1.0)
open_unit = st.floats(min_value=1e-6, max_value=1 - 1e-6)


def test_sos_bound_at_maximal_incompatibility():
    sos = chsh_eval.sos_bound(1.0, 1.0, 0.0)
    assert sos.bound == pytest.approx(2 * SQRT2)
    assert sos.omega1 == pytest.approx(SQRT2)


def test_sos_bound_with_commuting_settings():
    assert chsh_eval.sos_bound(1.0, 1.0, 2.0).bound == pytest.approx(2)
    assert chsh_eval.sos_bound(0.5, 1.0, -2.0).bound == pytest.approx(2)


@pytest.mark.parametrize("args", [(1.1, 0.5, 0.0), (0.5, -0.1, 0.0), (0.5, 0.5, 2.5)])
def test_sos_bound_rejects_out_of_range(args):
    with pytest.raises(DomainError):
        chsh_eval.sos_bound(*args)


def test_critical_curve_endpoints():
    assert chsh_eval.critical_eta_curve(0.0, "a") == pytest.approx(1 / SQRT2, abs=1e-12)
    assert chsh_eval.critical_eta_curve(2.0, "a") == pytest.approx(1, abs=1e-12)
    assert chsh_eval.critical_eta_curve(1.0, "a") == pytest.approx(2 / (math.sqrt(3) + 1))
    assert chsh_eval.critical_eta_curve(0.0, "b") == pytest.approx(SQRT2 - 1, abs=1e-12)
    assert chsh_eval.critical_eta_curve(2.0, "b") == pytest.approx(0, abs=1e-9)


def test_critical_curves_are_monotone():
    xs = np.linspace(0, 2, 201)
    a = [chsh_eval.critical_eta_curve(float(x), "a") for x in xs]
    b = [chsh_eval.critical_eta_curve(float(x), "b") for x in xs]
    assert all(p < q for p, q in zip(a, a[1:]))
    assert all(p > q for p, q in zip(b, b[1:]))


def test_critical_curve_rejects_unknown_names():
    with pytest.raises(DomainError):
        chsh_eval.critical_eta_curve(1.0, "c")
    with pytest.raises(DomainError):
        chsh_eval.critical_eta_curve(-0.5, "a")


def test_closed_form_maximal_violation():
    value = chsh_eval.closed_form_ppm(1, math.pi / 4, math.pi / 4, [1.0])
    assert value == pytest.approx(2 * SQRT2, abs=1e-12)


def test_closed_form_trivial_bob_sits_on_the_local_bound():
    delta = 0.3
    assert chsh_eval.closed_form_ppm(1, delta, math.pi / 4 - delta / 2, [0.0]) == pytest.approx(2, abs=1e-14)


def test_closed_form_needs_one_alpha_per_bob():
    with pytest.raises(DomainError):
        chsh_eval.closed_form_ppm(2, 0.3, 0.5, [0.5])
    with pytest.raises(DomainError):
        chsh_eval.closed_form_ppm(0, 0.3, 0.5, [])


@given(alphas=st.lists(unit, min_size=1, max_size=5), delta=st.floats(0, math.pi / 2), theta=st.floats(0, math.pi / 4))
def test_four_kraus_at_v_one_is_ppm(alphas, delta, theta):
    k = len(alphas)
    general = chsh_eval.closed_form_general(k, delta, theta, 1.0, alphas, Variant.FOUR_KRAUS)
    assert general == pytest.approx(chsh_eval.closed_form_ppm(k, delta, theta, alphas), abs=1e-12)


def test_closed_form_general_refuses_ppm_family():
    with pytest.raises(DomainError):
        chsh_eval.closed_form_general(1, 0.3, 0.5, 1.0, [0.5], "ppm")
    with pytest.raises(DomainError):
        chsh_eval.closed_form_general(1, 0.3, 0.5, 1.0, [0.5], "three-kraus")


@given(v=unit, alpha=unit)
def test_xi_agrees_with_cancellation_free_complement(v, alpha):
    factors = chsh_eval.xi(v, alpha)
    assert 0 <= factors.xi_exact <= 1 + 1e-12
    assert 1 - factors.xi_exact == pytest.approx(chsh_eval.one_minus_xi(v, alpha), abs=1e-12)


def test_xi_special_cases():
    assert chsh_eval.xi(0.5, 0.6).xi_exact == pytest.approx(0.8)
    assert chsh_eval.xi(1.0, 0.75).xi_exact == pytest.approx(0.5)
    assert math.isnan(chsh_eval.xi(0.0, 0.3).xi_series)


@given(v=open_unit, alpha=st.floats(min_value=0.0, max_value=0.5))
def test_xi_series_never_exceeds_one(v, alpha):
    assert chsh_eval.xi(v, alpha).xi_series <= 1 + 1e-15


@pytest.mark.parametrize("v", [0.2, 0.3, 0.4])
def test_xi_series_gap_is_third_order(v):
    def gap(alpha):
        factors = chsh_eval.xi(v, alpha)
        return abs(1 - chsh_eval.one_minus_xi(v, alpha) - factors.xi_series)

    assert gap(1e-3) / gap(5e-4) == pytest.approx(8, rel=0.1)


def test_one_minus_xi_is_second_order():
    v = 0.3
    w = 1 / (8 * v * (1 - v))
    assert chsh_eval.one_minus_xi(v, 1e-6) == pytest.approx(w * 1e-12, rel=1e-4)
    assert chsh_eval.one_minus_xi(v, 0.0) == 0


def test_alpha_cap_and_admissibility():
    assert chsh_eval.alpha_cap(0.45) == pytest.approx(0.0388, abs=1e-4)
    assert chsh_eval.alpha_cap(0.5) == 0
    assert chsh_eval.alpha_cap(0.2) == pytest.approx(chsh_eval.alpha_cap(0.8))
    assert chsh_eval.is_admissible_v(0.1)
    assert chsh_eval.is_admissible_v(0.9)
    for v in (0.0, 0.05, 0.5, 0.95, 1.0):
        assert not chsh_eval.is_admissible_v(v)


def test_excluded_alpha():
    assert chsh_eval.excluded_alpha(0.1) == pytest.approx(-0.1435, abs=1e-4)
    assert chsh_eval.excluded_alpha(0.9) == pytest.approx(chsh_eval.excluded_alpha(0.1))
    assert chsh_eval.excluded_alpha(0.3) is None


@pytest.mark.parametrize("delta,theta", [(0.3, 0.5), (0.1, 0.7), (1.0, 0.2)])
def test_alpha1_bound_matches_compact_form_at_v_one(delta, theta):
    compact = (1 - math.sin(2 * theta + delta)) / (math.sin(delta) * (1 - math.cos(2 * theta)))
    assert chsh_eval.alpha1_lower_bound(delta, theta) == pytest.approx(compact, rel=1e-12)


def test_alpha1_bound_is_the_k1_root():
    bound = chsh_eval.alpha1_lower_bound(0.3, 0.5, v=0.7)
    assert bound == pytest.approx(chsh_eval.alphak_root(1, 0.3, 0.5, 0.7, [], "four-kraus"), rel=1e-12)
    assert chsh_eval.closed_form_general(1, 0.3, 0.5, 0.7, [bound], "four-kraus") == pytest.approx(2, abs=1e-12)


def test_alpha1_bound_degenerates_without_delta():
    with pytest.raises(InfeasibleRange):
        chsh_eval.alpha1_lower_bound(0.0, 0.5)


def test_ppm_threshold_is_the_exact_root():
    delta, prefix = 0.1, [0.1, 0.2]
    threshold = chsh_eval.alphak_lower_bound_ppm(3, delta, prefix)
    root = chsh_eval.alphak_root(3, delta, math.pi / 4 - delta / 2, 1.0, prefix, "ppm")
    assert threshold == pytest.approx(root, rel=1e-9)


@pytest.mark.parametrize("delta", [0.0, math.asin(0.25), 0.3])
def test_ppm_threshold_outside_window(delta):
    with pytest.raises(InfeasibleRange):
        chsh_eval.alphak_lower_bound_ppm(3, delta, [0.1, 0.2])


def test_ppm_threshold_keeps_tiny_products():
    threshold = chsh_eval.alphak_lower_bound_ppm(2, 0.1, [1e-14])
    ratio = chsh_eval.k2_ratio(0.1)
    assert threshold == pytest.approx(1e-14 * ratio, rel=1e-9)


def test_series_threshold_is_sufficient():
    delta, v, prefix = 0.05, 0.3, [0.05]
    series = chsh_eval.alphak_lower_bound_twokraus(2, delta, v, prefix)
    exact = chsh_eval.alphak_root(2, delta, math.pi / 4, v, prefix, "two-kraus")
    assert series >= exact
    assert series - exact < 1e-3


def test_two_kraus_threshold_domain():
    with pytest.raises(DomainError):
        chsh_eval.alphak_lower_bound_twokraus(2, 0.9, 0.3, [0.01])
    with pytest.raises(DomainError):
        chsh_eval.alphak_lower_bound_twokraus(2, 0.1, 0.5, [0.0])
    with pytest.raises(DomainError):
        chsh_eval.alphak_lower_bound_twokraus(2, 0.1, 0.3, [0.9])


def test_margins_match_closed_forms():
    delta, alphas = 0.2, [0.3, 0.6]
    ppm = chsh_eval.closed_form_ppm(2, delta, math.pi / 4 - delta / 2, alphas)
    assert chsh_eval.violation_margin_ppm_t1(2, delta, alphas) == pytest.approx(ppm - 2, abs=1e-12)

    two = chsh_eval.closed_form_general(2, delta, math.pi / 4, 0.3, alphas, "two-kraus")
    assert chsh_eval.violation_margin_twokraus(2, delta, 0.3, alphas) == pytest.approx(two - 2, abs=1e-12)


def test_margin_resolves_values_below_double_precision_of_two():
    margin = chsh_eval.violation_margin_ppm_t1(1, 0.1, [1e-20])
    assert margin == pytest.approx(2e-20 * math.sin(0.1) * (1 - math.sin(0.1)), rel=1e-12)


def test_series_bound_sits_below_exact_value():
    delta, v, alphas = 0.01, 0.3, [0.01, 0.02]
    exact = chsh_eval.closed_form_general(2, delta, math.pi / 4, v, alphas, "two-kraus")
    assert chsh_eval.series_lower_bound_twokraus(2, delta, v, alphas) <= exact + 1e-12


def test_concurrence_threshold():
    assert chsh_eval.concurrence_threshold(2) == pytest.approx(math.sqrt(3) / 2)
    for k in range(2, 9):
        assert chsh_eval.concurrence_threshold(k) == pytest.approx(math.cos(math.asin(2 ** (1 - k))))
    with pytest.raises(DomainError):
        chsh_eval.concurrence_threshold(1)


def test_k2_optimum():
    delta, ratio = chsh_eval.k2_optimal_delta()
    assert delta == pytest.approx(0.2713, abs=1e-4)
    assert delta == pytest.approx(chsh_eval.K2_OPTIMAL_DELTA, abs=1e-6)
    assert ratio == pytest.approx(chsh_eval.K2_RATIO_MIN, abs=1e-6)
    assert chsh_eval.k2_alpha1_cap() == pytest.approx(chsh_eval.K2_ALPHA1_CAP, abs=1e-6)
