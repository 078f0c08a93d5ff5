"""Seeded invariant suites behind ``nlshare verify``."""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np

import chsh_eval
import qmath
import synthesis
from errors import DomainError
from protocol_model import (
    DensityMatrix,
    MeasurementScheme,
    Variant,
    build_alice_observables,
    build_initial_state,
    build_kraus_set,
    effective_povm,
    povm_from_kraus,
)
from qmath import I2
from sequential_engine import ProtocolConfig, bob_channel, run_protocol, run_protocols, unsharp_chsh_value

logger = logging.getLogger(__name__)

SUITES = (
    "povm-completeness",
    "channel-trace",
    "channel-positivity",
    "marginal-invariance",
    "bell-diagonal",
    "realization-dependence",
    "oracle-equivalence",
    "sos-soundness",
    "t1-monotonicity",
    "t2-monotonicity",
)
FAULTS = ("channel-coefficient",)
ORACLE_FAMILIES = ("ppm-t1", "ppm", "four-kraus", "two-kraus")
STATE_TOLERANCE = 1e-10
STATISTICS_TOLERANCE = 1e-12
REALIZATION_GAP = 1e-6
MAX_K = 6


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    trials: int
    max_deviation: float
    detail: str = ""


def random_density(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real)


def random_pure_state(rng):
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    return qmath.projector(psi / np.linalg.norm(psi))


def random_scheme(rng, variant=None):
    variant = Variant(variant or rng.choice([v.value for v in Variant]))
    alpha = float(rng.uniform())
    v = 1.0 if variant is Variant.PPM3 else float(rng.uniform())
    return MeasurementScheme(variant, alpha, v)


class VerifySuite:
    def __init__(self, seed, trials=500, tolerance=1e-9, fault=None, max_concurrency=10):
        if trials < 1:
            raise DomainError(f"trials must be positive, got {trials}")
        if fault is not None and fault not in FAULTS:
            raise DomainError(f"Unknown fault {fault!r}")
        self.seed = seed
        self.trials = trials
        self.tolerance = tolerance
        self.fault = fault
        self.max_concurrency = max_concurrency

    def _rng(self, name):
        # each suite draws from its own stream so subsets reproduce full runs
        return np.random.default_rng([self.seed, SUITES.index(name)])

    def _channel(self):
        if self.fault == "channel-coefficient":
            return functools.partial(bob_channel, input_weight=0.6)
        return functools.partial(bob_channel, input_weight=0.5)

    def run(self, names=None):
        names = list(names or SUITES)
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            raise DomainError(f"Unknown suite(s): {', '.join(unknown)}")

        results = []
        for name in names:
            method = getattr(self, "_suite_" + name.replace("-", "_"))
            try:
                result = method(self._rng(name))
            except (DomainError, RuntimeError) as e:
                result = SuiteResult(name, False, self.trials, math.inf, str(e))
            if not result.passed:
                logger.warning(f"Suite {name} failed: {result.detail or result.max_deviation}")
            results.append(result)
        return results

    def _result(self, name, deviation, limit, detail=""):
        return SuiteResult(name, bool(deviation <= limit), self.trials, float(deviation), detail)

    def _suite_povm_completeness(self, rng):
        worst = 0.0
        for _ in range(self.trials):
            scheme = random_scheme(rng)
            completeness = sum(k.conj().T @ k for k in build_kraus_set(scheme))
            grouped, effects = povm_from_kraus(scheme), effective_povm(scheme)
            worst = max(
                worst,
                float(np.max(np.abs(completeness - I2))),
                float(np.max(np.abs(grouped.e_plus - effects.e_plus))),
                float(np.max(np.abs(grouped.e_minus - effects.e_minus))),
            )
        return self._result("povm-completeness", worst, STATE_TOLERANCE)

    def _suite_channel_trace(self, rng):
        channel = self._channel()
        worst = 0.0
        for _ in range(self.trials):
            out = channel(random_density(rng), random_scheme(rng))
            worst = max(worst, abs(qmath.trace(out.matrix) - 1))
        return self._result("channel-trace", worst, STATE_TOLERANCE)

    def _suite_channel_positivity(self, rng):
        channel = self._channel()
        worst = 0.0
        for _ in range(self.trials):
            out = channel(random_density(rng), random_scheme(rng))
            worst = max(worst, -float(qmath.hermitian_eigenvalues(out.matrix)[0]))
        return self._result("channel-positivity", worst, STATE_TOLERANCE)

    def _random_chain(self, rng, theta=None, variant=None):
        k = int(rng.integers(1, MAX_K + 1))
        delta = float(rng.uniform(0, math.pi / 2))
        theta = float(rng.uniform(0, math.pi / 4)) if theta is None else theta
        schemes = [random_scheme(rng, variant) for _ in range(k)]
        return ProtocolConfig(k, delta, theta, schemes)

    def _suite_marginal_invariance(self, rng):
        channel = self._channel()
        worst = 0.0
        for _ in range(self.trials):
            trace = run_protocol(self._random_chain(rng), channel)
            worst = max(worst, trace.alice_marginal_drift())
        return self._result("marginal-invariance", worst, STATE_TOLERANCE)

    def _suite_bell_diagonal(self, rng):
        channel = self._channel()
        worst = 0.0
        for _ in range(self.trials):
            config = self._random_chain(rng, theta=math.pi / 4)
            op = qmath.tensor(build_alice_observables(config.delta).difference, I2)
            for state in run_protocol(config, channel).states:
                worst = max(worst, abs(state.expectation(op)))
        return self._result("bell-diagonal", worst, STATE_TOLERANCE)

    def _suite_realization_dependence(self, rng):
        channel = self._channel()
        phi_plus = build_initial_state(math.pi / 4)
        worst, smallest_gap = 0.0, math.inf
        for _ in range(self.trials):
            alpha = float(rng.uniform(0.05, 0.95))
            ppm = MeasurementScheme.ppm(alpha)
            two = MeasurementScheme.two_kraus(alpha, 1.0)
            gap = float(np.max(np.abs(channel(phi_plus, ppm).matrix - channel(phi_plus, two).matrix)))
            smallest_gap = min(smallest_gap, gap)
            a, b = povm_from_kraus(ppm), povm_from_kraus(two)
            for ea, eb in ((a.e_plus, b.e_plus), (a.e_minus, b.e_minus)):
                pa = phi_plus.expectation(qmath.tensor(I2, ea))
                pb = phi_plus.expectation(qmath.tensor(I2, eb))
                worst = max(worst, abs(pa - pb))
        passed = worst <= STATISTICS_TOLERANCE and smallest_gap > REALIZATION_GAP
        detail = f"smallest state gap {smallest_gap:.3g}"
        return SuiteResult("realization-dependence", passed, self.trials, worst, detail)

    def _oracle_config(self, rng, family):
        k = int(rng.integers(1, MAX_K + 1))
        delta = float(rng.uniform(0, math.pi / 2))
        theta = math.pi / 4 - delta / 2 if family == "ppm-t1" else float(rng.uniform(0, math.pi / 4))
        alphas = [float(a) for a in rng.uniform(size=k)]
        if family in ("ppm-t1", "ppm"):
            return ProtocolConfig.uniform(k, delta, theta, Variant.PPM3, alphas), 1.0
        v = float(rng.uniform())
        return ProtocolConfig.uniform(k, delta, theta, Variant(family), alphas, v), v

    def _suite_oracle_equivalence(self, rng):
        configs, expected = [], []
        for family in ORACLE_FAMILIES:
            for _ in range(self.trials):
                config, v = self._oracle_config(rng, family)
                alphas = [s.alpha for s in config.schemes]
                values = []
                for j in range(1, config.k + 1):
                    if family.startswith("ppm"):
                        values.append(chsh_eval.closed_form_ppm(j, config.delta, config.theta, alphas[:j]))
                    else:
                        values.append(
                            chsh_eval.closed_form_general(
                                j, config.delta, config.theta, v, alphas[:j], family
                            )
                        )
                configs.append(config)
                expected.append(values)

        traces = run_protocols(configs, self.max_concurrency, self._channel())
        worst = max(
            max(abs(a - b) for a, b in zip(trace.chsh_values, values))
            for trace, values in zip(traces, expected)
        )
        return self._result("oracle-equivalence", worst, self.tolerance)

    def _suite_sos_soundness(self, rng):
        worst = 0.0
        for _ in range(self.trials):
            rho = random_pure_state(rng)
            delta = float(rng.uniform(0, math.pi / 2))
            eta0, eta1 = (float(x) for x in rng.uniform(size=2))
            pair = build_alice_observables(delta)
            anticomm = qmath.expectation(
                qmath.tensor(qmath.anticommutator(pair.a0.matrix, pair.a1.matrix), I2), rho
            )
            anticomm = min(2.0, max(-2.0, anticomm))
            bound = chsh_eval.sos_bound(eta0, eta1, anticomm).bound
            worst = max(worst, unsharp_chsh_value(rho, delta, eta0, eta1) - bound)
        return self._result("sos-soundness", max(worst, 0.0), self.tolerance)

    def _suite_t1_monotonicity(self, rng):
        worst, feasible = 0.0, 0
        epsilon = synthesis.DEFAULT_EPSILON
        for _ in range(self.trials):
            k = int(rng.integers(2, MAX_K + 1))
            delta = synthesis.t1_window_hi(k) * float(rng.uniform(0.05, 0.95))
            alpha1 = 10 ** float(rng.uniform(-14, -4))
            result = synthesis.synthesize_t1(k, delta, epsilon, alpha1)
            feasible += result.feasible
            s = result.sequence
            if len(s) >= 2:
                worst = max(worst, 1 - s[1] / (2 * (1 + epsilon) * (chsh_eval.SQRT3 + 2) * s[0]))
            for l in range(2, len(s)):
                worst = max(worst, 1 - s[l] / (2 * s[l - 1]))
        return self._result("t1-monotonicity", max(worst, 0.0), 1e-12, f"{feasible} feasible")

    def _suite_t2_monotonicity(self, rng):
        worst, feasible, breaches = 0.0, 0, 0
        epsilon = synthesis.DEFAULT_EPSILON
        for _ in range(self.trials):
            v = float(rng.uniform(0.06, 0.49))
            if rng.uniform() < 0.5:
                v = 1 - v
            k = int(rng.integers(2, MAX_K + 1))
            delta = math.pi / 4 * 10 ** float(rng.uniform(-4, 0))
            result = synthesis.synthesize_t2(k, delta, epsilon, v)
            feasible += result.feasible
            s = result.sequence
            for l in range(1, len(s)):
                worst = max(worst, 1 - s[l] / (2 * s[l - 1]))
            # the envelope must stay strictly above every computed term
            beta = synthesis.bounding_sequence_t2(k, delta, epsilon, v).beta
            breaches += sum(s_l >= beta_l for s_l, beta_l in zip(s, beta))
        worst = max(worst, 0.0)
        passed = worst == 0.0 and breaches == 0
        detail = f"{feasible} feasible, {breaches} envelope breaches"
        return SuiteResult("t2-monotonicity", passed, self.trials, worst, detail)
