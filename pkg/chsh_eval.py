"""Closed-form CHSH values, sharing thresholds and sum-of-squares bounds.

Products of the shape 1 - prod(1 - x_j) are evaluated as -expm1(sum(log1p(-x_j)))
so that thresholds for tiny sharpness parameters stay accurate.
"""

import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from errors import DomainError, InfeasibleRange
from protocol_model import Variant, two_kraus_coefficients

SQRT3 = math.sqrt(3)
K2_RATIO_MIN = 2 * (SQRT3 + 2)
K2_OPTIMAL_DELTA = 2 * math.atan(2 + SQRT3 - math.sqrt(6 + 4 * SQRT3))
K2_ALPHA1_CAP = (2 - SQRT3) / 2

# Below this v (and above its mirror) one sharpness value has to be avoided.
EXCLUDED_ALPHA_V_LIMIT = (2 - math.sqrt(2)) / 4

DEGENERATE = 1e-15
RADICAND_TOLERANCE = 1e-12
SOS_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SosBound:
    eta0: float
    eta1: float
    anticomm: float
    bound: float
    omega1: float
    omega2: float

    def __post_init__(self):
        if abs(self.bound - (self.omega1 + self.omega2)) > SOS_TOLERANCE:
            raise ValueError("SOS bound must equal omega1 + omega2")


@dataclass(frozen=True)
class XiFactors:
    v: float
    alpha: float
    q1: float
    q2: float
    xi_exact: float
    xi_series: float

    def __post_init__(self):
        if not -RADICAND_TOLERANCE <= self.xi_exact <= 1 + RADICAND_TOLERANCE:
            raise ValueError(f"xi_exact={self.xi_exact} left [0, 1]")


def _check_range(name, value, lo, hi):
    if not (isinstance(value, (int, float)) and math.isfinite(value)) or not lo <= value <= hi:
        raise DomainError(f"{name} must lie in [{lo:g}, {hi:g}], got {value}")


def _check_k(k, minimum=1):
    if not isinstance(k, int) or k < minimum:
        raise DomainError(f"k must be an integer ≥ {minimum}, got {k}")


def _check_alphas(alphas, length, upper=1.0):
    alphas = [float(a) for a in alphas]
    if len(alphas) != length:
        raise DomainError(f"Expected {length} sharpness values, got {len(alphas)}")
    for a in alphas:
        _check_range("alpha", a, 0.0, upper)
    return alphas


def _complement(log_terms):
    """1 - exp(sum(log_terms)) for non-positive log terms."""
    return max(0.0, -math.expm1(math.fsum(log_terms)))


def _ppm_log_terms(alphas):
    return [math.log1p(-a / 2) for a in alphas]


def _family(scheme_family):
    try:
        return Variant(scheme_family)
    except ValueError:
        raise DomainError(f"Unknown measurement family: {scheme_family}") from None


def sos_bound(eta0, eta1, anticomm):
    _check_range("eta0", eta0, 0.0, 1.0)
    _check_range("eta1", eta1, 0.0, 1.0)
    _check_range("anticomm", anticomm, -2.0, 2.0)
    omega1 = eta0 * math.sqrt(max(0.0, 2 + anticomm))
    omega2 = eta1 * math.sqrt(max(0.0, 2 - anticomm))
    return SosBound(eta0, eta1, anticomm, omega1 + omega2, omega1, omega2)


def critical_eta_curve(anticomm, curve):
    """Critical unsharpness above which the CHSH value exceeds 2.

    Curve "a" has both of Bob's observables equally unsharp, curve "b" keeps B0
    sharp. Curve b is written as sqrt(2-x)/(2+sqrt(2+x)), which is finite at x=2.
    """
    _check_range("anticomm", anticomm, 0.0, 2.0)
    x = anticomm
    if curve == "a":
        return 2 / (math.sqrt(2 + x) + math.sqrt(2 - x))
    if curve == "b":
        return math.sqrt(2 - x) / (2 + math.sqrt(2 + x))
    raise DomainError(f"Unknown curve {curve!r}; expected 'a' or 'b'")


def closed_form_ppm(k, delta, theta, alphas):
    _check_k(k)
    alphas = _check_alphas(alphas, k)
    _check_range("delta", delta, 0.0, math.pi / 2)
    _check_range("theta", theta, 0.0, math.pi / 4)

    s, c = math.sin(delta), math.cos(delta)
    sin2t, cos2t = math.sin(2 * theta), math.cos(2 * theta)
    decay = math.prod(1 - a / 2 for a in alphas[:-1])
    return 2 * (
        c * sin2t * decay
        + s * cos2t
        + alphas[-1] / 2 ** (k - 1) * s * (1 - 2 ** (k - 1) * cos2t)
    )


def closed_form_general(k, delta, theta, v, alphas, scheme_family):
    family = _family(scheme_family)
    if family is Variant.PPM3:
        raise DomainError("Use closed_form_ppm for the three-Kraus realization")
    _check_k(k)
    alphas = _check_alphas(alphas, k)
    _check_range("delta", delta, 0.0, math.pi / 2)
    _check_range("theta", theta, 0.0, math.pi / 4)
    _check_range("v", v, 0.0, 1.0)

    if family is Variant.FOUR_KRAUS:
        decay = math.prod(1 - a / 2 for a in alphas[:-1])
    else:
        decay = math.prod((1 + xi(v, a).xi_exact) / 2 for a in alphas[:-1])

    s, c = math.sin(delta), math.cos(delta)
    sin2t, cos2t = math.sin(2 * theta), math.cos(2 * theta)
    bias = 2 * v - 1
    return 2 * (
        c * sin2t * decay
        + bias * s * cos2t
        + alphas[-1] / 2 ** (k - 1) * s * (1 - 2 ** (k - 1) * bias * cos2t)
    )


def xi(v, alpha):
    _check_range("v", v, 0.0, 1.0)
    _check_range("alpha", alpha, 0.0, 1.0)

    if 0 < v < 1:
        q1 = alpha * (1 - 2 * v) / v - alpha**2 * (1 - v) / v
        q2 = alpha * (1 - 2 * v) / (1 - v) + alpha**2 * v / (1 - v)
        w = 1 / (8 * v * (1 - v))
        series = 1 - alpha**2 * w + alpha**3 * (w - 0.5) - alpha**4 * (w - 0.375)
    else:
        q1 = q2 = series = math.nan

    # equals v·sqrt(1 + q1) + (1 - v)·sqrt(1 - q2) without dividing by v or 1 - v
    m1, m2, n1, n2 = two_kraus_coefficients(alpha, v)
    return XiFactors(v, alpha, q1, q2, m1 * m2 + n1 * n2, series)


def one_minus_xi(v, alpha):
    """1 - xi_exact without cancellation: (α²/2)[1/(m1+m2)² + 1/(n1+n2)²]."""
    _check_range("v", v, 0.0, 1.0)
    _check_range("alpha", alpha, 0.0, 1.0)
    if alpha == 0:
        return 0.0
    m1, m2, n1, n2 = two_kraus_coefficients(alpha, v)
    # m1² ≥ α and n2² ≥ α, so both ratios stay finite for subnormal α
    return alpha / 2 * (alpha / (m1 + m2) ** 2 + alpha / (n1 + n2) ** 2)


def alpha_cap(v):
    _check_range("v", v, 0.0, 1.0)
    return (1 - 2 * v) ** 2 / (1 - 3 * v + 3 * v**2)


def is_admissible_v(v):
    if not 0 < v < 1:
        return False
    cap = alpha_cap(v)
    return 0 < cap and cap**2 < 16 * v * (1 - v)


def excluded_alpha(v):
    u = min(v, 1 - v)
    if not 0 < u < EXCLUDED_ALPHA_V_LIMIT:
        return None
    return 1 - (1 + 2 * math.sqrt(1 - 8 * u * (1 - u))) / (2 * (1 - u))


def alpha1_lower_bound(delta, theta, v=1.0):
    _check_range("delta", delta, 0.0, math.pi / 2)
    _check_range("theta", theta, 0.0, math.pi / 4)
    _check_range("v", v, 0.0, 1.0)
    s = math.sin(delta)
    cos2t = math.cos(2 * theta)
    denominator = s * (1 - (2 * v - 1) * cos2t)
    if denominator <= DEGENERATE:
        raise InfeasibleRange(f"No finite α1 threshold at delta={delta}, theta={theta}, v={v}")
    return (1 - math.sin(2 * theta - delta) - 2 * v * s * cos2t) / denominator


def alphak_root(k, delta, theta, v, alphas_prefix, scheme_family):
    """Exact α_k at which Bob k's CHSH value equals 2 (the value is affine in α_k)."""
    family = _family(scheme_family)
    _check_k(k)
    prefix = _check_alphas(alphas_prefix, k - 1)
    _check_range("delta", delta, 0.0, math.pi / 2)
    _check_range("theta", theta, 0.0, math.pi / 4)
    _check_range("v", v, 0.0, 1.0)
    if family is Variant.PPM3 and v != 1:
        raise DomainError("The three-Kraus realization fixes v = 1")

    if family is Variant.TWO_KRAUS:
        decay = math.prod(1 - one_minus_xi(v, a) / 2 for a in prefix)
    else:
        decay = math.prod(1 - a / 2 for a in prefix)

    s, c = math.sin(delta), math.cos(delta)
    bias = 2 * v - 1
    cos2t = math.cos(2 * theta)
    base = c * math.sin(2 * theta) * decay + bias * s * cos2t
    slope = s * (2 ** (1 - k) - bias * cos2t)
    if slope <= DEGENERATE:
        raise InfeasibleRange(f"Bob {k}'s value does not grow with α_k for these parameters")
    return (1 - base) / slope


def alphak_lower_bound_ppm(k, delta, alphas_prefix):
    _check_k(k, 2)
    prefix = _check_alphas(alphas_prefix, k - 1)
    hi = math.asin(2 ** (1 - k))
    if not 0 < delta < hi:
        raise InfeasibleRange(f"delta={delta} is outside (0, {hi:.6g}) for k={k}")

    denominator = math.sin(delta) * (1 - 2 ** (k - 1) * math.sin(delta))
    if denominator <= DEGENERATE:
        raise InfeasibleRange(f"delta={delta} sits on the edge of the window for k={k}")
    return 2 ** (k - 1) * math.cos(delta) ** 2 * _complement(_ppm_log_terms(prefix)) / denominator


def check_two_kraus_domain(delta, v):
    if not 0 < delta <= math.pi / 4:
        raise DomainError(f"delta must lie in (0, π/4], got {delta}")
    if not is_admissible_v(v):
        raise DomainError(f"v={v} is not admissible for the two-Kraus construction")


def _twokraus_log_terms(delta, v, alphas):
    c = 16 * v * (1 - v)
    return [math.log1p(-2 * math.sin(delta / 2) ** 2)] + [math.log1p(-a**2 / c) for a in alphas]


def alphak_lower_bound_twokraus(k, delta, v, alphas_prefix):
    _check_k(k, 2)
    check_two_kraus_domain(delta, v)
    cap = alpha_cap(v)
    prefix = _check_alphas(alphas_prefix, k - 1, upper=cap)
    excluded = excluded_alpha(v)
    if excluded is not None and any(a > 0 and abs(a - excluded) < RADICAND_TOLERANCE for a in prefix):
        raise DomainError(f"alpha={excluded:.12g} is excluded for v={v}")
    return 2 ** (k - 1) / math.sin(delta) * _complement(_twokraus_log_terms(delta, v, prefix))


def series_lower_bound_twokraus(k, delta, v, alphas):
    _check_k(k)
    check_two_kraus_domain(delta, v)
    alphas = _check_alphas(alphas, k)
    c = 16 * v * (1 - v)
    decay = math.prod(1 - a**2 / c for a in alphas[:-1])
    return 2 * (math.cos(delta) * decay + alphas[-1] * math.sin(delta) / 2 ** (k - 1))


def violation_margin_ppm_t1(k, delta, alphas):
    """I^k - 2 for the three-Kraus chain at theta = π/4 - δ/2."""
    _check_k(k)
    alphas = _check_alphas(alphas, k)
    _check_range("delta", delta, 0.0, math.pi / 2)
    s = math.sin(delta)
    gain = alphas[-1] / 2 ** (k - 1) * s * (1 - 2 ** (k - 1) * s)
    loss = math.cos(delta) ** 2 * _complement(_ppm_log_terms(alphas[:-1]))
    return 2 * (gain - loss)


def violation_margin_twokraus(k, delta, v, alphas):
    """J^k - 2 for the two-Kraus chain at theta = π/4, with exact ξ."""
    _check_k(k)
    alphas = _check_alphas(alphas, k)
    _check_range("delta", delta, 0.0, math.pi / 2)
    _check_range("v", v, 0.0, 1.0)
    log_terms = [math.log1p(-2 * math.sin(delta / 2) ** 2)]
    log_terms += [math.log1p(-one_minus_xi(v, a) / 2) for a in alphas[:-1]]
    gain = alphas[-1] * math.sin(delta) / 2 ** (k - 1)
    return 2 * (gain - _complement(log_terms))


def concurrence_threshold(k):
    _check_k(k, 2)
    return 2 ** (1 - k) * math.sqrt(4 ** (k - 1) - 1)


def k2_ratio(delta):
    """Bob 2's threshold per unit α1: cos²δ / (sinδ (1 - 2 sinδ))."""
    s = math.sin(delta)
    return math.cos(delta) ** 2 / (s * (1 - 2 * s))


def k2_optimal_delta():
    result = minimize_scalar(
        k2_ratio,
        bounds=(1e-6, math.pi / 6 - 1e-6),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(result.x), float(result.fun)


def k2_alpha1_cap():
    return 1 / k2_optimal_delta()[1]
