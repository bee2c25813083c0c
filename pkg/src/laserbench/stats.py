"""Student-t tail probabilities from first principles.

p-values are computed, never table-looked-up: the t CDF reduces to the
regularized incomplete beta function, evaluated here with the standard
continued fraction (modified Lentz iteration). Accuracy is ~1e-14
relative for the df range this package uses (df <= 1000), comfortably
past the 10-significant-digit contract; tests pin it against scipy,
mpmath and published t-table quantiles.

    two-tailed p of t with df = nu:  I_x(nu/2, 1/2),  x = nu / (nu + t^2)
"""

from __future__ import annotations

import math

_MAX_ITER = 500
_EPS = 1e-16
_TINY = 1e-300  # Lentz guard against zero denominators


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz scheme.

    Evaluates K such that I_x(a, b) = front * K / a, with the even/odd
    coefficient pair

        d_{2m}   =  m (b - m) x / ((a + 2m - 1)(a + 2m))
        d_{2m+1} = -(a + m)(a + b + m) x / ((a + 2m)(a + 2m + 1))
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction failed to converge (a={a}, b={b}, x={x})"
    )


def betainc_regularized(
    a: float, b: float, x: float, x_complement: float | None = None
) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].

    When x is near 1 the factor (1 - x) loses precision to cancellation;
    callers that know the complement exactly (e.g. t-tail evaluation,
    where x and 1-x are both clean ratios) pass it as x_complement.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    xc = (1.0 - x) if x_complement is None else x_complement
    if x == 0.0:
        return 0.0
    if xc == 0.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(xc)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only for x below the mean;
    # use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the far side
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, xc) / b


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t with `df` degrees of freedom."""
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")
    if t == 0.0:
        return 0.5
    t2 = t * t
    x = df / (df + t2)
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, x, x_complement=t2 / (df + t2))
    return 1.0 - tail if t > 0 else tail


def student_t_two_tailed_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t; exactly 1.0 at t = 0."""
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    x = df / (df + t2)
    return betainc_regularized(df / 2.0, 0.5, x, x_complement=t2 / (df + t2))
