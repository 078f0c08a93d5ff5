"""Sharpness sequences that let an arbitrary chain of Bobs violate CHSH.

Two constructions are provided. The three-Kraus chain at theta = π/4 - δ/2
starts from a chosen α1 (T1). The two-Kraus chain on the maximally entangled
state starts from tan(δ/2) (T2).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq

import chsh_eval
from errors import DomainError, InfeasibleRange
from grid_runner import GridRunner
from protocol_model import Variant

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.01
# sin δ ≥ κ δ on (0, π/4]; this is what the bounding sequence needs.
SINE_FLOOR = 2 * math.sqrt(2) / math.pi
LOG_ALPHA1_FLOOR = -30.0
AUTO_DELTA_DECADES = 8
AUTO_DELTA_FLOOR = 1e-150


class Theorem(str, Enum):
    T1 = "T1"
    T2 = "T2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        text = str(value).upper()
        if not text.startswith("T"):
            text = f"T{text}"
        try:
            return cls(text)
        except ValueError:
            raise DomainError(f"Unknown theorem {value!r}; expected 1 or 2") from None


@dataclass(frozen=True)
class SynthesisResult:
    theorem: Theorem
    k: int
    delta: float
    theta: float
    v: float
    epsilon: float
    sequence: tuple
    feasible: bool
    per_bob_chsh: tuple
    concurrence: float
    infeasible_at: Optional[int] = None
    thresholds: tuple = ()
    per_bob_margin: tuple = ()
    series_bound: tuple = ()
    alpha1: Optional[float] = None
    reason: Optional[str] = None

    def __post_init__(self):
        if not self.feasible:
            return
        upper = self.upper
        if len(self.sequence) != self.k or len(self.per_bob_margin) != self.k:
            raise ValueError("A feasible result must cover every Bob")
        for s, threshold, margin in zip(self.sequence, self.thresholds, self.per_bob_margin):
            if not threshold < s <= upper:
                raise ValueError(f"s={s} escapes ({threshold}, {upper}]")
            if margin <= 0:
                raise ValueError("A feasible result must violate CHSH for every Bob")

    @property
    def upper(self):
        return 1.0 if self.theorem is Theorem.T1 else chsh_eval.alpha_cap(self.v)


@dataclass(frozen=True)
class BoundingSequence:
    beta: tuple
    kappa: float = SINE_FLOOR
    truncated_at: Optional[int] = None

    def __post_init__(self):
        for prev, cur in zip(self.beta, self.beta[1:]):
            if not cur > prev:
                raise ValueError("Bounding sequence must be strictly increasing")


@dataclass(frozen=True)
class DeltaWindow:
    lo: float
    hi: float
    hi_inclusive: bool
    theta_lo: float
    theta_hi: float


@dataclass(frozen=True)
class VAdmissibility:
    admissible: bool
    alpha_cap: float
    excluded_alpha: Optional[float]


def _check_epsilon(epsilon, allow_zero=False):
    lo_ok = epsilon >= 0 if allow_zero else epsilon > 0
    if not (math.isfinite(epsilon) and lo_ok and epsilon <= 1):
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")


def _check_k(k):
    if not isinstance(k, int) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")


def t1_window_hi(k):
    return math.asin(2 ** (1 - k))


def _t1_terms(k, delta, epsilon, alpha1):
    """Runs the T1 recursion until it ends or a term leaves (threshold, 1].

    Returns (terms, thresholds, failure) where failure is (index, reason) or None.
    """
    terms, thresholds = [alpha1], [0.0]
    if alpha1 > 1:
        return terms, thresholds, (1, f"alpha1={alpha1:.6g} exceeds 1")
    for l in range(2, k + 1):
        if terms[-1] >= 1:
            return terms, thresholds, (l, f"s_{l - 1} reached 1, so no finite s_{l} exists")
        try:
            threshold = chsh_eval.alphak_lower_bound_ppm(l, delta, terms)
        except InfeasibleRange as e:
            return terms, thresholds, (l, str(e))
        thresholds.append(threshold)
        terms.append((1 + epsilon) * threshold)
        if terms[-1] > 1:
            return terms, thresholds, (l, f"s_{l}={terms[-1]:.6g} exceeds 1")
    return terms, thresholds, None


def alpha1_cap_t1(k, delta, epsilon=DEFAULT_EPSILON):
    """Largest α1 whose T1 sequence stays within (0, 1] for all k Bobs, or None."""
    _check_k(k)
    _check_epsilon(epsilon, allow_zero=True)

    def excess(log_alpha1):
        terms, _, failure = _t1_terms(k, delta, epsilon, 10**log_alpha1)
        return 1.0 if failure else terms[-1] - 1

    if excess(LOG_ALPHA1_FLOOR) > 0:
        return None
    if excess(0.0) <= 0:
        return 1.0
    root = brentq(excess, LOG_ALPHA1_FLOOR, 0.0, xtol=1e-14, rtol=1e-15)
    while excess(root) > 0:
        root -= 1e-13
    return 10**root


def auto_alpha1_t1(k, delta, epsilon=DEFAULT_EPSILON):
    cap = alpha1_cap_t1(k, delta, epsilon)
    return cap / 2 if cap else None


def _t1_without_alpha1(k, delta, epsilon, theta):
    # the smallest α1 tried still breaks the chain; report where, choose nothing
    _, _, (index, reason) = _t1_terms(k, delta, epsilon, 10**LOG_ALPHA1_FLOOR)
    reason = f"no alpha1 keeps {k} Bobs feasible; the chain breaks at Bob {index}: {reason}"
    logger.info(f"T1 synthesis infeasible at Bob {index}: {reason}")
    return SynthesisResult(
        theorem=Theorem.T1,
        k=k,
        delta=delta,
        theta=theta,
        v=1.0,
        epsilon=epsilon,
        sequence=(),
        feasible=False,
        per_bob_chsh=(),
        concurrence=math.sin(2 * theta),
        infeasible_at=index,
        alpha1=None,
        reason=reason,
    )


def synthesize_t1(k, delta, epsilon=DEFAULT_EPSILON, alpha1=None):
    _check_k(k)
    _check_epsilon(epsilon)
    if not 0 < delta <= math.pi / 2:
        raise DomainError(f"delta must lie in (0, π/2], got {delta}")
    theta = math.pi / 4 - delta / 2
    if alpha1 is None:
        alpha1 = auto_alpha1_t1(k, delta, epsilon)
        if alpha1 is None:
            return _t1_without_alpha1(k, delta, epsilon, theta)
    if not (math.isfinite(alpha1) and alpha1 > 0):
        raise DomainError(f"alpha1 must be positive, got {alpha1}")

    terms, thresholds, failure = _t1_terms(k, delta, epsilon, alpha1)
    usable = terms if failure is None else terms[: failure[0] - 1]

    chsh, margins = [], []
    for l in range(1, len(usable) + 1):
        chsh.append(chsh_eval.closed_form_ppm(l, delta, theta, usable[:l]))
        margins.append(chsh_eval.violation_margin_ppm_t1(l, delta, usable[:l]))
        if failure is None and margins[-1] <= 0:
            failure = (l, f"Bob {l} does not violate CHSH (margin {margins[-1]:.3g})")

    result = SynthesisResult(
        theorem=Theorem.T1,
        k=k,
        delta=delta,
        theta=theta,
        v=1.0,
        epsilon=epsilon,
        sequence=tuple(terms),
        feasible=failure is None,
        per_bob_chsh=tuple(chsh),
        concurrence=math.sin(2 * theta),
        infeasible_at=failure[0] if failure else None,
        thresholds=tuple(thresholds),
        per_bob_margin=tuple(margins),
        alpha1=alpha1,
        reason=failure[1] if failure else None,
    )
    if failure:
        logger.info(f"T1 synthesis infeasible at Bob {failure[0]}: {failure[1]}")
    return result


def synthesize_t2(k, delta, epsilon=DEFAULT_EPSILON, v=None):
    _check_k(k)
    _check_epsilon(epsilon)
    if v is None:
        raise DomainError("The two-Kraus construction needs v")
    chsh_eval.check_two_kraus_domain(delta, v)

    cap = chsh_eval.alpha_cap(v)
    first = math.tan(delta / 2)
    terms, thresholds = [(1 + epsilon) * first], [first]
    failure = None
    if terms[0] > cap:
        failure = (1, f"s_1={terms[0]:.6g} exceeds the sharpness cap {cap:.6g}")
    for l in range(2, k + 1):
        if failure:
            break
        try:
            threshold = chsh_eval.alphak_lower_bound_twokraus(l, delta, v, terms)
        except DomainError as e:
            failure = (l, str(e))
            break
        thresholds.append(threshold)
        terms.append((1 + epsilon) * threshold)
        if terms[-1] > cap:
            failure = (l, f"s_{l}={terms[-1]:.6g} exceeds the sharpness cap {cap:.6g}")

    usable = terms if failure is None else terms[: failure[0] - 1]
    theta = math.pi / 4
    chsh, margins, series = [], [], []
    for l in range(1, len(usable) + 1):
        prefix = usable[:l]
        chsh.append(chsh_eval.closed_form_general(l, delta, theta, v, prefix, Variant.TWO_KRAUS))
        margins.append(chsh_eval.violation_margin_twokraus(l, delta, v, prefix))
        series.append(chsh_eval.series_lower_bound_twokraus(l, delta, v, prefix))
        if failure is None and margins[-1] <= 0:
            failure = (l, f"Bob {l} does not violate CHSH (margin {margins[-1]:.3g})")

    if failure:
        logger.info(f"T2 synthesis infeasible at Bob {failure[0]}: {failure[1]}")
    return SynthesisResult(
        theorem=Theorem.T2,
        k=k,
        delta=delta,
        theta=theta,
        v=v,
        epsilon=epsilon,
        sequence=tuple(terms),
        feasible=failure is None,
        per_bob_chsh=tuple(chsh),
        concurrence=1.0,
        infeasible_at=failure[0] if failure else None,
        thresholds=tuple(thresholds),
        per_bob_margin=tuple(margins),
        series_bound=tuple(series),
        reason=failure[1] if failure else None,
    )


def synthesize(theorem, k, delta, epsilon=DEFAULT_EPSILON, v=None, alpha1=None):
    if Theorem.parse(theorem) is Theorem.T1:
        return synthesize_t1(k, delta, epsilon, alpha1)
    return synthesize_t2(k, delta, epsilon, v)


def bounding_sequence_t2(k, delta, epsilon=DEFAULT_EPSILON, v=None, kappa=SINE_FLOOR):
    """Upper envelope β of the T2 sequence, polynomial in δ with lowest power one.

    kappa=1 gives the envelope with 1/δ in place of 1/(κδ); it does not bound s.
    """
    _check_k(k)
    _check_epsilon(epsilon, allow_zero=True)
    if v is None:
        raise DomainError("The two-Kraus construction needs v")
    chsh_eval.check_two_kraus_domain(delta, v)
    if not 0 < kappa <= 1:
        raise DomainError(f"kappa must lie in (0, 1], got {kappa}")

    c = 16 * v * (1 - v)
    beta = [(1 + epsilon) * delta / (2 * kappa)]
    truncated_at = None
    for l in range(2, k + 1):
        if beta[-1] >= 1 or beta[-1] ** 2 >= c:
            truncated_at = l
            break
        log_terms = [math.log1p(-(delta**2) / 2)] + [math.log1p(-(b**2) / c) for b in beta]
        complement = max(0.0, -math.expm1(math.fsum(log_terms)))
        beta.append(2 ** (l - 1) * (1 + epsilon) / (kappa * delta) * complement)
    return BoundingSequence(tuple(beta), kappa, truncated_at)


def max_feasible_k(theorem, delta, epsilon=DEFAULT_EPSILON, v=None, alpha1=None, k_cap=1):
    if not isinstance(k_cap, int) or k_cap < 1:
        raise DomainError(f"k_cap must be a positive integer, got {k_cap}")
    try:
        result = synthesize(theorem, k_cap, delta, epsilon, v, alpha1)
    except DomainError as e:
        logger.info(f"No Bob can violate: {e}")
        return 0
    return k_cap if result.feasible else result.infeasible_at - 1


def delta_window(theorem, k, v=None):
    _check_k(k)
    if Theorem.parse(theorem) is Theorem.T1:
        hi = t1_window_hi(k)
        return DeltaWindow(0.0, hi, False, math.pi / 4 - hi / 2, math.pi / 4)
    if v is None or not chsh_eval.is_admissible_v(v):
        raise DomainError(f"v={v} is not admissible for the two-Kraus construction")
    return DeltaWindow(0.0, math.pi / 4, True, math.pi / 4, math.pi / 4)


def v_admissibility(v):
    if not 0 < v < 1:
        return VAdmissibility(False, math.nan, None)
    return VAdmissibility(
        chsh_eval.is_admissible_v(v), chsh_eval.alpha_cap(v), chsh_eval.excluded_alpha(v)
    )


def concurrence_window_t1(k):
    return chsh_eval.concurrence_threshold(k), 1.0


def delta_upper_edge_t1(k, alpha1, epsilon=DEFAULT_EPSILON, samples=400):
    """Largest δ at which the T1 sequence with this α1 is still feasible, or None."""
    _check_k(k)
    _check_epsilon(epsilon, allow_zero=True)
    hi = t1_window_hi(k)

    def excess(delta):
        terms, _, failure = _t1_terms(k, delta, epsilon, alpha1)
        return 1.0 if failure else terms[-1] - 1

    grid = np.geomspace(hi * 1e-9, hi * (1 - 1e-12), samples)
    feasible = [i for i, d in enumerate(grid) if excess(d) <= 0]
    if not feasible:
        return None
    last = feasible[-1]
    if last == len(grid) - 1:
        return float(grid[last])
    return float(brentq(excess, grid[last], grid[last + 1], xtol=1e-15, rtol=1e-15))


def scan_delta(theorem, k, deltas, epsilon=DEFAULT_EPSILON, v=None, alpha1=None, max_concurrency=10):
    """Synthesis at each δ of the grid, returned in grid order."""

    def point(delta):
        return synthesize(theorem, k, float(delta), epsilon, v, alpha1)

    return GridRunner(point, max_concurrency).run(deltas)


def auto_delta(theorem, k, epsilon=DEFAULT_EPSILON, v=None, alpha1=None, samples=41, max_concurrency=10):
    """Geometric midpoint of the feasible part of a logarithmic δ grid.

    The grid spans AUTO_DELTA_DECADES below its top; while nothing in it is
    feasible the next grid moves that many decades further down, stopping at
    AUTO_DELTA_FLOOR.
    """
    window = delta_window(theorem, k, v)
    top = window.hi if window.hi_inclusive else window.hi * (1 - 1e-9)
    while top > AUTO_DELTA_FLOOR:
        bottom = max(top * 10**-AUTO_DELTA_DECADES, AUTO_DELTA_FLOOR)
        grid = np.geomspace(bottom, top, samples)
        results = scan_delta(theorem, k, grid, epsilon, v, alpha1, max_concurrency)
        feasible = [i for i, r in enumerate(results) if r.feasible]
        if feasible:
            return float(grid[feasible[len(feasible) // 2]])
        logger.debug(f"No feasible delta in [{bottom:.3g}, {top:.3g}], moving down")
        top = bottom
    return None


def vanishing_slope(theorem, k, ladder, delta=None, v=None, epsilon=DEFAULT_EPSILON):
    """(slope, peaks): log-log slope of max_l s_l against α1 (T1, fixed δ) or δ (T2, fixed v)."""
    theorem = Theorem.parse(theorem)
    peaks = []
    for value in ladder:
        if theorem is Theorem.T1:
            terms, _, failure = _t1_terms(k, delta, epsilon, value)
            if failure:
                raise DomainError(f"alpha1={value:g} leaves the feasible region: {failure[1]}")
            peaks.append(max(terms))
        else:
            result = synthesize_t2(k, value, epsilon, v)
            if not result.feasible:
                raise DomainError(f"delta={value:g} leaves the feasible region: {result.reason}")
            peaks.append(max(result.sequence))
    return float(np.polyfit(np.log(ladder), np.log(peaks), 1)[0]), peaks
