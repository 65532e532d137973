"""Independent oracles for the test suite.

These deliberately avoid the code paths they check: total variation by direct
quadrature of |f1 - f2| (no crossing-point formula), threshold solving in log
space (no binary search), and conditional gamma moments by plain Monte Carlo
averaging.
"""
import math

import numpy as np
from scipy import integrate, stats


def tv_by_quadrature(alpha, rate1, rate2):
    """0.5 * integral |f1 - f2| via adaptive quadrature with generic breakpoints."""
    f1 = stats.gamma(a=alpha, scale=1.0 / rate1).pdf
    f2 = stats.gamma(a=alpha, scale=1.0 / rate2).pdf
    upper = 60.0 * max(1.0, alpha) / min(rate1, rate2)
    pts = sorted({alpha / rate1, alpha / rate2, (alpha + 3) / min(rate1, rate2)})
    val, err = integrate.quad(
        lambda y: abs(f1(y) - f2(y)), 0.0, upper, points=pts, limit=400,
        epsabs=1e-13, epsrel=1e-12,
    )
    assert err < 1e-9
    return 0.5 * val


def minimal_t_first_term_log_solve(prefactor, rate, exponent_divisor, epsilon):
    """Smallest integer t with prefactor * rate**(t/exponent_divisor) <= epsilon.

    Closed-form in log space; valid when the remaining bound terms are
    negligible at the solution (checked by the caller).
    """
    t_real = exponent_divisor * (math.log(epsilon) - math.log(prefactor)) / math.log(rate)
    return max(0, math.ceil(t_real))


def gamma_mean_se(draws):
    return float(np.mean(draws)), float(np.std(draws, ddof=1) / math.sqrt(len(draws)))


def batch_mean_ci(values):
    """Mean and standard error from a (batch, ...) matrix of batch values."""
    batch_means = np.asarray(values).mean(axis=tuple(range(1, np.ndim(values))))
    n = batch_means.size
    return float(batch_means.mean()), float(batch_means.std(ddof=1) / math.sqrt(n))
