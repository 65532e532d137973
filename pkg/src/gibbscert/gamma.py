"""Gamma-distribution numerics used throughout the coupling machinery.

Everything is parametrized by shape ``alpha`` and *rate* (inverse scale)
``beta``: the density is ``beta**alpha * y**(alpha-1) * exp(-beta*y) / Gamma(alpha)``.

The key closed form is :func:`gamma_tv`: for two gammas with a common shape
the densities cross exactly once, so the total variation distance is the CDF
gap at the crossing point.  The envelope inequality of
:func:`check_density_envelope` is what lets four ordered chains share one
maximal-coupling construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .rng import RngStream

__all__ = [
    "GammaParams",
    "sample_gamma",
    "gamma_pdf_cdf",
    "gamma_logpdf",
    "gamma_cdf",
    "gamma_tv",
    "check_density_envelope",
    "median_probabilities",
]


@dataclass(frozen=True)
class GammaParams:
    """Shape/rate pair for a gamma distribution; both must be positive."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0):
            raise ValueError(f"gamma shape must be positive, got {self.shape}")
        if not (self.rate > 0):
            raise ValueError(f"gamma rate must be positive, got {self.rate}")


def sample_gamma(p: GammaParams, rng: RngStream):
    """One exact draw from Gamma(shape, rate).

    Deterministic given the stream state; advances the stream position.
    Valid for all shapes, including shape < 1.
    """
    return rng.gamma(p.shape) / p.rate


def gamma_logpdf(y, shape, rate):
    """Log density of Gamma(shape, rate) at ``y`` (array-friendly).

    At y = 0 the value is log(rate) for shape 1, -inf for shape > 1 and
    +inf for shape < 1.
    """
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_y = np.where(y > 0, np.log(np.where(y > 0, y, 1.0)), -np.inf)
        power = 0.0 if shape == 1.0 else (shape - 1.0) * log_y
        out = shape * np.log(rate) + power - rate * y - sp.gammaln(shape)
    return out


def gamma_cdf(y, shape, rate=1.0):
    """Regularized lower incomplete gamma at ``rate * y``; abs error <= 1e-12."""
    return sp.gammainc(shape, np.multiply(rate, y))


def gamma_pdf_cdf(y, p: GammaParams):
    """(density, CDF) of Gamma(shape, rate) at ``y >= 0``."""
    if np.any(np.asarray(y) < 0):
        raise ValueError("y must be nonnegative")
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        pdf = np.where(
            y > 0,
            np.exp(gamma_logpdf(np.where(y > 0, y, 1.0), p.shape, p.rate)),
            p.rate if p.shape == 1.0 else (np.inf if p.shape < 1.0 else 0.0),
        )
    cdf = gamma_cdf(y, p.shape, p.rate)
    if pdf.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def gamma_tv(shape, rate1, rate2):
    """Total variation between Gamma(shape, rate1) and Gamma(shape, rate2).

    Returns ``(tv, crossing)`` where ``crossing`` is the unique point at which
    the two densities cross, ``shape * (ln rate1 - ln rate2) / (rate1 - rate2)``,
    and ``tv = |CDF1(crossing) - CDF2(crossing)| = 0.5 * integral |f1 - f2|``.

    Equal rates give ``tv = 0`` (the crossing value is then an unspecified
    positive placeholder).  Array arguments broadcast.
    """
    shape = np.asarray(shape, dtype=float)
    rate1 = np.asarray(rate1, dtype=float)
    rate2 = np.asarray(rate2, dtype=float)
    if np.any(rate1 <= 0) or np.any(rate2 <= 0):
        raise ValueError("rates must be positive")
    equal = rate1 == rate2
    with np.errstate(divide="ignore", invalid="ignore"):
        crossing = np.where(
            equal,
            shape / rate1,
            shape * (np.log(rate1) - np.log(rate2)) / np.where(equal, 1.0, rate1 - rate2),
        )
    tv = np.where(
        equal,
        0.0,
        np.abs(gamma_cdf(crossing, shape, rate1) - gamma_cdf(crossing, shape, rate2)),
    )
    if tv.ndim == 0:
        return float(tv), float(crossing)
    return tv, crossing


def check_density_envelope(shape, rates, grid, rel_slack=1e-12):
    """Pointwise envelope check for four same-shape gammas with ordered rates.

    For rates ``b1 < b2 < b3 < b4`` verifies ``min{f1, f4} <= min{f2, f3}``
    at every grid point (within ``rel_slack``), plus the total-variation
    consequence ``tv(b2, b3) <= tv(b1, b4)``.
    """
    b1, b2, b3, b4 = (float(r) for r in rates)
    if not (0 < b1 < b2 < b3 < b4):
        raise ValueError("rates must be strictly increasing and positive")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")

    logf = [gamma_logpdf(grid, shape, b) for b in (b1, b2, b3, b4)]
    outer = np.minimum(logf[0], logf[3])
    inner = np.minimum(logf[1], logf[2])
    # comparison in log space: min f_out <= min f_in * (1 + slack)
    pointwise_ok = bool(np.all(outer <= inner + np.log1p(rel_slack)))

    tv_inner, _ = gamma_tv(shape, b2, b3)
    tv_outer, _ = gamma_tv(shape, b1, b4)
    tv_ok = tv_inner <= tv_outer * (1 + rel_slack) + 1e-15
    return pointwise_ok and bool(tv_ok)


def median_probabilities(shape):
    """The two tail facts behind the one-quarter coupling argument.

    For ``g ~ Gamma(shape, 1)`` with mean ``mu = shape`` returns
    ``(P[g <= mu], P[g >= mu - 1/3])``; the second probability is 1 when
    ``shape <= 1/3``.  Both are at least one half for every positive shape.
    """
    if not shape > 0:
        raise ValueError("shape must be positive")
    p_below = float(gamma_cdf(shape, shape))
    thr = shape - 1.0 / 3.0
    p_above = 1.0 if thr <= 0 else float(sp.gammaincc(shape, thr))
    return p_below, p_above
