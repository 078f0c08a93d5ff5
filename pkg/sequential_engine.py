"""Brute-force evolution of the shared pair through each Bob's unselective channel."""

import functools
import math
from dataclasses import dataclass

import numpy as np

import qmath
from errors import DomainError
from grid_runner import GridRunner
from protocol_model import (
    B0_MINUS,
    B0_PLUS,
    DensityMatrix,
    MeasurementScheme,
    build_alice_observables,
    build_bob_observables,
    build_initial_state,
    build_kraus_set,
    effective_observable,
)
from qmath import I2, SIGMA_X, SIGMA_Z

MARGINAL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ProtocolConfig:
    k: int
    delta: float
    theta: float
    schemes: tuple
    input_prob_y0: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not isinstance(self.k, int) or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        if len(self.schemes) != self.k:
            raise DomainError(f"Expected {self.k} measurement schemes, got {len(self.schemes)}")
        if not all(isinstance(s, MeasurementScheme) for s in self.schemes):
            raise DomainError("Every scheme must be a MeasurementScheme")
        if not 0 <= self.delta <= math.pi / 2:
            raise DomainError(f"delta must lie in [0, π/2], got {self.delta}")
        if not 0 <= self.theta <= math.pi / 4:
            raise DomainError(f"theta must lie in [0, π/4], got {self.theta}")
        if self.input_prob_y0 != 0.5:
            raise DomainError("Bob's inputs are drawn uniformly; input_prob_y0 is fixed at 1/2")

    @classmethod
    def uniform(cls, k, delta, theta, variant, alphas, v=1.0):
        if len(alphas) != k:
            raise DomainError(f"Expected {k} sharpness values, got {len(alphas)}")
        return cls(k, delta, theta, tuple(MeasurementScheme(variant, a, v) for a in alphas))


@dataclass(frozen=True)
class SequentialTrace:
    states: tuple
    chsh_values: tuple

    def alice_marginal_drift(self):
        first = self.states[0].alice_marginal
        return max(float(np.max(np.abs(s.alice_marginal - first))) for s in self.states)


def _lift_to_bob(op):
    """I ⊗ op for a 2x2 operand that is already known to be well formed."""
    return np.kron(I2, op)


LIFTED_B0_PROJECTORS = (_lift_to_bob(B0_PLUS), _lift_to_bob(B0_MINUS))


def bob_channel(rho, scheme, input_weight=0.5):
    """Average post-measurement state of one Bob whose input is y=0 with ``input_weight``."""
    r = rho.matrix
    sharp = sum(P @ r @ P for P in LIFTED_B0_PROJECTORS)
    unsharp = np.zeros((4, 4), dtype=complex)
    for kraus in build_kraus_set(scheme):
        K = _lift_to_bob(kraus)
        unsharp += K @ r @ K.conj().T
    return DensityMatrix(input_weight * sharp + (1 - input_weight) * unsharp)


def chsh_operator(pair, b0, b1):
    return qmath.tensor(pair.sum, b0) + qmath.tensor(pair.difference, b1)


def run_protocol(config, channel=None):
    if channel is None:
        channel = functools.partial(bob_channel, input_weight=config.input_prob_y0)

    pair = build_alice_observables(config.delta)
    b0, _ = build_bob_observables()
    rho = build_initial_state(config.theta)
    # the Alice side of the CHSH operator is shared by every Bob
    left = np.kron(pair.sum, b0.matrix)
    difference = pair.difference

    states = []
    values = []
    for j, scheme in enumerate(config.schemes):
        if j:
            rho = channel(rho, config.schemes[j - 1])
        states.append(rho)
        values.append(rho.expectation(left + np.kron(difference, effective_observable(scheme))))

    trace = SequentialTrace(tuple(states), tuple(values))
    drift = trace.alice_marginal_drift()
    if drift > MARGINAL_TOLERANCE:
        raise RuntimeError(f"Alice's marginal drifted by {drift:.3g} along the chain")
    return trace


def _evaluate(configs, channel):
    return [run_protocol(c, channel) for c in configs]


def run_protocols(configs, max_concurrency=10, channel=None):
    """Traces for ``configs`` in order.

    The configs are cut into at most ``max_concurrency`` contiguous batches and
    each batch is one grid point.
    """
    configs = list(configs)
    size = max(1, math.ceil(len(configs) / max_concurrency))
    batches = [configs[i : i + size] for i in range(0, len(configs), size)]
    runner = GridRunner(functools.partial(_evaluate, channel=channel), max_concurrency)
    return [trace for batch in runner.run(batches) for trace in batch]


def unsharp_chsh_value(rho, delta, eta0, eta1):
    """Tr[{η0(A0+A1)⊗σx + η1(A0−A1)⊗σz} rho] for a 4x4 state ``rho``."""
    pair = build_alice_observables(delta)
    op = chsh_operator(pair, eta0 * SIGMA_X, eta1 * SIGMA_Z)
    return qmath.expectation(op, rho)
