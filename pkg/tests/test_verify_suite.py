import time

import pytest

from errors import DomainError
from verify_suite import SUITES, VerifySuite


@pytest.fixture(scope="module")
def small_run():
    return VerifySuite(seed=42, trials=8).run()


def test_every_suite_passes(small_run):
    assert [r.name for r in small_run] == list(SUITES)
    failed = [(r.name, r.max_deviation, r.detail) for r in small_run if not r.passed]
    assert failed == []


def test_runs_are_deterministic(small_run):
    again = VerifySuite(seed=42, trials=8).run()
    assert again == small_run


def test_subsets_reproduce_the_full_run(small_run):
    subset = VerifySuite(seed=42, trials=8).run(["sos-soundness", "channel-trace"])
    by_name = {r.name: r for r in small_run}
    assert subset == [by_name["sos-soundness"], by_name["channel-trace"]]


def test_injected_fault_breaks_oracle_equivalence():
    (result,) = VerifySuite(seed=42, trials=8, fault="channel-coefficient").run(["oracle-equivalence"])
    assert not result.passed
    assert result.max_deviation > 1e-6


def test_injected_fault_keeps_channel_invariants():
    results = VerifySuite(seed=42, trials=8, fault="channel-coefficient").run(
        ["channel-trace", "channel-positivity", "marginal-invariance"]
    )
    assert all(r.passed for r in results)


def test_unknown_names_are_rejected():
    with pytest.raises(DomainError):
        VerifySuite(seed=1, trials=1).run(["no-such-suite"])
    with pytest.raises(DomainError):
        VerifySuite(seed=1, trials=1, fault="flip-everything")
    with pytest.raises(DomainError):
        VerifySuite(seed=1, trials=0)


def test_oracle_equivalence_at_full_size_is_quick():
    started = time.perf_counter()
    (result,) = VerifySuite(seed=42).run(["oracle-equivalence"])
    elapsed = time.perf_counter() - started
    assert result.passed
    assert result.trials == 500
    assert elapsed < 5.0
