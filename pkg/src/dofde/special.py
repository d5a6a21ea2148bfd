"""Special-function kernel used by the solvers and the walker model.

Everything here is a pure function of its arguments and safe to call
concurrently.  The fractional-power-law machinery (generalized binomials,
waiting-time normalizers) is implemented with the stable recurrences these
quantities admit; the gamma function itself is delegated to the platform
implementation, which is a Lanczos-class approximation accurate to machine
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, NumericError

__all__ = [
    "gamma",
    "abs_gamma_negative",
    "frac_binomial",
    "gl_weights",
    "waiting_normalizer",
    "waiting_tail_mass",
    "mittag_leffler",
    "marchaud_weyl",
    "MWResult",
]


def gamma(x: float) -> float:
    """Gamma function for real ``x`` away from the poles at 0, -1, -2, ..."""
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"gamma pole at x={x!r}")
    return math.gamma(x)


def abs_gamma_negative(alpha: float) -> float:
    """|Gamma(-alpha)| for alpha in (0, 1), computed as Gamma(1-alpha)/alpha.

    The recurrence Gamma(1-alpha) = -alpha * Gamma(-alpha) lets us stay away
    from the pole-riddled negative axis entirely.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha!r} outside (0, 1)")
    return math.gamma(1.0 - alpha) / alpha


def frac_binomial(alpha: float, k: int) -> float:
    """Generalized binomial coefficient C(alpha, k) for fractional alpha.

    Uses the recurrence C(alpha, k) = C(alpha, k-1) * (alpha - k + 1) / k,
    which stays finite for integer alpha where the gamma-quotient form hits
    poles.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha={alpha!r} outside (0, 1]")
    if k < 0:
        raise DomainError(f"k={k!r} must be non-negative")
    c = 1.0
    for i in range(1, k + 1):
        c *= (alpha - i + 1) / i
    return c


def gl_weights(alpha: float, n: int) -> np.ndarray:
    """Array of (-1)^k * C(alpha, k) for k = 0..n (Grunwald-Letnikov weights).

    Same recurrence as :func:`frac_binomial`, vectorized once per solve:
    w_0 = 1, w_k = w_{k-1} * (k - 1 - alpha) / k.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha={alpha!r} outside (0, 1]")
    w = np.empty(n + 1)
    w[0] = 1.0
    for k in range(1, n + 1):
        w[k] = w[k - 1] * (k - 1 - alpha) / k
    return w


# Partial-summation horizon for the waiting-time normalizer.  With the
# Euler-Maclaurin tail below, the truncation remainder is O(N0^-(4+alpha)),
# far below the 1e-10 relative-error contract.
_NORMALIZER_N0 = 20_000


def _tail_power_sum(alpha: float, n: int) -> float:
    """Sum_{k > n} k^-(1+alpha) via the integral plus Euler-Maclaurin terms."""
    a = float(n) + 1.0
    s = 1.0 + alpha
    return a ** (-alpha) / alpha + 0.5 * a ** (-s) + s / 12.0 * a ** (-s - 1.0)


def waiting_normalizer(alpha: float) -> float:
    """Normalizing constant d_alpha with sum_{n>=1} d_alpha * n^-(1+alpha) = 1.

    Evaluated by explicit summation of the first ``_NORMALIZER_N0`` terms plus
    an integral tail estimate bracketed by Euler-Maclaurin corrections;
    relative error is far below 1e-10 for alpha bounded away from 0.
    """
    if alpha <= 0.0:
        raise DomainError(f"alpha={alpha!r}: series sum_n n^-(1+alpha) diverges for alpha <= 0")
    n = np.arange(1, _NORMALIZER_N0 + 1, dtype=float)
    partial = float(np.sum(n ** (-(1.0 + alpha))))
    return 1.0 / (partial + _tail_power_sum(alpha, _NORMALIZER_N0))


def waiting_tail_mass(alpha: float, n: int) -> float:
    """Truncated-tail mass sum_{k > n} d_alpha * k^-(1+alpha).

    For n >= the summation horizon this is the analytic tail; below it the
    missing head terms are summed explicitly.
    """
    if n < 1:
        raise InputError(f"n={n!r} must be >= 1")
    d = waiting_normalizer(alpha)
    if n >= _NORMALIZER_N0:
        return d * _tail_power_sum(alpha, n)
    head = np.arange(n + 1, _NORMALIZER_N0 + 1, dtype=float)
    return d * (float(np.sum(head ** (-(1.0 + alpha)))) + _tail_power_sum(alpha, _NORMALIZER_N0))


_ML_MAX_TERMS = 2000


def mittag_leffler(alpha: float, z: float) -> float:
    """One-parameter Mittag-Leffler function E_alpha(z) by direct summation.

    Series-only evaluator: sum_k z^k / Gamma(alpha*k + 1), truncated once the
    running term drops below 1e-16 of the partial sum.  Intended as a test
    oracle on moderate |z|; raises :class:`NumericError` when cancellation or
    slow convergence would silently destroy the advertised >= 8 significant
    digits.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha={alpha!r} outside (0, 1]")
    total = 0.0
    largest = 0.0
    term = 1.0  # k = 0
    for k in range(_ML_MAX_TERMS):
        total += term
        largest = max(largest, abs(term))
        term = z ** (k + 1) / math.gamma(alpha * (k + 1) + 1.0)
        if abs(term) <= 1e-16 * abs(total):
            break
    else:
        raise NumericError(
            f"E_{alpha}({z}): series did not converge within {_ML_MAX_TERMS} terms"
        )
    if largest > 1e8 * max(abs(total), 1e-300):
        raise NumericError(
            f"E_{alpha}({z}): catastrophic cancellation (peak term {largest:.3g} "
            f"vs result {total:.3g})"
        )
    return total


@dataclass(frozen=True)
class MWResult:
    """Truncated Marchaud-Weyl derivative plus a bound on the dropped tail."""

    value: float
    tail_bound: float


def marchaud_weyl(
    times: np.ndarray,
    values: np.ndarray,
    alpha: float,
    eps: float,
    horizon: float | None = None,
) -> MWResult:
    """Numerical Marchaud-Weyl derivative at the last sample point.

    Evaluates (alpha / Gamma(1-alpha)) * int_0^inf (f(t) - f(t-tau)) tau^-(1+alpha) dtau
    with t = ``times[-1]``, using the caller's samples as the quadrature grid:

    * [0, eps] is handled analytically assuming f is locally linear there
      (the integrand is then proportional to tau^-alpha, which is integrable);
    * [eps, horizon] is a trapezoid rule over the sample lags;
    * the tail beyond ``horizon`` is dropped and its magnitude bound
      sup|f| * 2 / (alpha * horizon^alpha) * alpha / Gamma(1-alpha)
      is reported alongside the value.

    The caller controls accuracy through the sample density (lags spaced
    geometrically work well against the tau^-(1+alpha) weight).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha!r} outside (0, 1)")
    ts = np.asarray(times, dtype=float)
    fs = np.asarray(values, dtype=float)
    if ts.ndim != 1 or ts.shape != fs.shape or ts.size < 3:
        raise InputError("need matching 1-d time/value arrays with >= 3 samples")
    if np.any(np.diff(ts) <= 0.0):
        raise InputError("sample grid must be strictly increasing")
    t_end = ts[-1]
    span = t_end - ts[0]
    h_max = span if horizon is None else float(horizon)
    if h_max <= 0.0:
        raise InputError(f"horizon={h_max!r} must be positive")
    if not 0.0 < eps < h_max:
        raise InputError(f"eps={eps!r} must lie in (0, horizon)")
    if h_max > span * (1.0 + 1e-12):
        raise InputError(f"horizon={h_max!r} exceeds the sampled history span {span!r}")

    prefactor = alpha / math.gamma(1.0 - alpha)
    f_end = fs[-1]

    tau = t_end - ts[::-1]  # ascending lags
    f_lag = fs[::-1]
    inside = (tau >= eps) & (tau <= h_max)
    tau_q = tau[inside]
    f_q = f_lag[inside]
    if tau_q.size < 2:
        raise InputError("fewer than 2 samples fall inside [eps, horizon]")
    integrand = (f_end - f_q) * tau_q ** (-(1.0 + alpha))
    body = float(np.trapz(integrand, tau_q))

    # Local slope at t from the sample nearest to lag eps.
    f_at_eps = float(np.interp(t_end - eps, ts, fs))
    slope = (f_end - f_at_eps) / eps
    head = slope * eps ** (1.0 - alpha) / (1.0 - alpha)

    tail_bound = float(np.max(np.abs(fs))) * 2.0 / (alpha * h_max**alpha) * prefactor
    return MWResult(value=prefactor * (head + body), tail_bound=tail_bound)
