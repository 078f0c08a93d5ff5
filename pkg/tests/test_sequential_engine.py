import functools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import chsh_eval
import qmath
import sequential_engine
from errors import DomainError
from protocol_model import MeasurementScheme, Variant, build_alice_observables, build_initial_state
from qmath import I2
from sequential_engine import (
    ProtocolConfig,
    bob_channel,
    run_protocol,
    run_protocols,
    unsharp_chsh_value,
)

unit = st.floats(min_value=0.0, max_value=1.0)


def test_single_sharp_bob_reaches_tsirelson():
    config = ProtocolConfig.uniform(1, math.pi / 4, math.pi / 4, Variant.PPM3, [1.0])
    (value,) = run_protocol(config).chsh_values
    assert value == pytest.approx(2 * math.sqrt(2), abs=1e-10)


def test_trace_holds_one_state_per_bob():
    config = ProtocolConfig.uniform(3, 0.2, 0.5, Variant.PPM3, [0.1, 0.2, 0.3])
    trace = run_protocol(config)
    assert len(trace.states) == len(trace.chsh_values) == 3
    assert trace.alice_marginal_drift() < 1e-12


@settings(max_examples=40, deadline=None)
@given(
    delta=st.floats(min_value=0.0, max_value=math.pi / 2),
    theta=st.floats(min_value=0.0, max_value=math.pi / 4),
    alphas=st.lists(unit, min_size=1, max_size=4),
)
def test_ppm_chain_matches_closed_form(delta, theta, alphas):
    k = len(alphas)
    trace = run_protocol(ProtocolConfig.uniform(k, delta, theta, Variant.PPM3, alphas))
    for j, value in enumerate(trace.chsh_values, start=1):
        assert value == pytest.approx(chsh_eval.closed_form_ppm(j, delta, theta, alphas[:j]), abs=1e-9)


@pytest.mark.parametrize("variant", [Variant.FOUR_KRAUS, Variant.TWO_KRAUS])
@settings(max_examples=40, deadline=None)
@given(
    delta=st.floats(min_value=0.0, max_value=math.pi / 2),
    theta=st.floats(min_value=0.0, max_value=math.pi / 4),
    v=unit,
    alphas=st.lists(unit, min_size=1, max_size=4),
)
def test_general_chain_matches_closed_form(variant, delta, theta, v, alphas):
    k = len(alphas)
    trace = run_protocol(ProtocolConfig.uniform(k, delta, theta, variant, alphas, v))
    for j, value in enumerate(trace.chsh_values, start=1):
        expected = chsh_eval.closed_form_general(j, delta, theta, v, alphas[:j], variant)
        assert value == pytest.approx(expected, abs=1e-9)


@given(alpha=unit, v=unit)
def test_four_kraus_channel_does_not_depend_on_v(alpha, v):
    rho = build_initial_state(0.4)
    four = bob_channel(rho, MeasurementScheme.four_kraus(alpha, v)).matrix
    ppm = bob_channel(rho, MeasurementScheme.ppm(alpha)).matrix
    np.testing.assert_allclose(four, ppm, atol=1e-12)


@pytest.mark.parametrize(
    "scheme",
    [MeasurementScheme.ppm(0.3), MeasurementScheme.four_kraus(0.6, 0.2), MeasurementScheme.two_kraus(0.8, 0.7)],
)
def test_channel_preserves_trace_positivity_and_alice_marginal(scheme):
    rho = build_initial_state(0.35)
    out = bob_channel(rho, scheme)
    assert qmath.trace(out.matrix) == pytest.approx(1)
    assert qmath.hermitian_eigenvalues(out.matrix)[0] > -1e-12
    np.testing.assert_allclose(out.alice_marginal, rho.alice_marginal, atol=1e-12)


def test_bell_diagonal_term_vanishes_on_maximally_entangled_state():
    delta = 0.4
    config = ProtocolConfig.uniform(4, delta, math.pi / 4, Variant.TWO_KRAUS, [0.2, 0.4, 0.6, 0.8], 0.3)
    op = qmath.tensor(build_alice_observables(delta).difference, I2)
    for state in run_protocol(config).states:
        assert abs(state.expectation(op)) < 1e-12


def test_post_measurement_states_depend_on_realization():
    rho = build_initial_state(math.pi / 4)
    ppm = bob_channel(rho, MeasurementScheme.ppm(0.5)).matrix
    two = bob_channel(rho, MeasurementScheme.two_kraus(0.5, 1.0)).matrix
    assert np.max(np.abs(ppm - two)) > 1e-3


def test_faulty_input_weight_breaks_the_closed_form():
    config = ProtocolConfig.uniform(2, 0.3, 0.6, Variant.PPM3, [0.5, 0.5])
    faulty = functools.partial(bob_channel, input_weight=0.6)
    value = run_protocol(config, faulty).chsh_values[1]
    assert abs(value - chsh_eval.closed_form_ppm(2, 0.3, 0.6, [0.5, 0.5])) > 1e-3


def test_batch_runs_keep_input_order():
    configs = [ProtocolConfig.uniform(2, d, math.pi / 4, Variant.PPM3, [0.3, 0.9]) for d in (0.1, 0.5, 1.0)]
    batch = run_protocols(configs, max_concurrency=2)
    assert [t.chsh_values for t in batch] == [run_protocol(c).chsh_values for c in configs]


def test_batches_are_bounded_by_the_concurrency(monkeypatch):
    sizes = []

    class CountingRunner(sequential_engine.GridRunner):
        def run(self, points):
            points = list(points)
            sizes.append(len(points))
            return super().run(points)

    monkeypatch.setattr(sequential_engine, "GridRunner", CountingRunner)
    configs = [ProtocolConfig.uniform(1, 0.1 * (i + 1), 0.5, Variant.PPM3, [0.5]) for i in range(7)]
    traces = run_protocols(configs, max_concurrency=3)
    assert sizes == [3]
    assert [t.chsh_values for t in traces] == [run_protocol(c).chsh_values for c in configs]
    assert run_protocols([], max_concurrency=3) == []


def test_config_validation():
    with pytest.raises(DomainError):
        ProtocolConfig.uniform(2, 0.1, 0.1, Variant.PPM3, [0.5])
    with pytest.raises(DomainError):
        ProtocolConfig(1, 0.1, 0.1, [MeasurementScheme.ppm(0.5)], input_prob_y0=0.3)
    with pytest.raises(DomainError):
        ProtocolConfig(1, 0.1, 1.0, [MeasurementScheme.ppm(0.5)])
    with pytest.raises(DomainError):
        ProtocolConfig(0, 0.1, 0.1, [])


def test_unsharp_value_with_sharp_bob():
    rho = build_initial_state(math.pi / 4).matrix
    assert unsharp_chsh_value(rho, math.pi / 4, 1.0, 1.0) == pytest.approx(2 * math.sqrt(2))


@settings(max_examples=60)
@given(
    delta=st.floats(min_value=0.0, max_value=math.pi / 2),
    theta=st.floats(min_value=0.0, max_value=math.pi / 4),
    eta0=unit,
    eta1=unit,
)
def test_unsharp_value_respects_sos_bound(delta, theta, eta0, eta1):
    rho = build_initial_state(theta).matrix
    bound = chsh_eval.sos_bound(eta0, eta1, max(-2.0, min(2.0, 2 * math.cos(2 * delta)))).bound
    assert unsharp_chsh_value(rho, delta, eta0, eta1) <= bound + 1e-9
