"""The hierarchical gamma model and its Gibbs chains.

Supports chain depth ``n = 4`` (full 4-coordinate kernel plus the reduced
even-coordinate chain) and ``n = 3`` (scalar middle-coordinate chain).  State
coordinates may be scalars or numpy arrays; all update formulas are written
in one fixed literal grouping so that coupled trajectories stay bit-stable
and floating-point evaluation preserves the componentwise order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream

__all__ = [
    "ModelParams",
    "ParamError",
    "GammaBlock",
    "validate_params",
    "block_shapes",
    "draw_block",
    "step_reduced",
    "step_full",
    "step_n3",
    "log_equilibrium_density",
    "lift_2d_to_4d",
]


class ParamError(ValueError):
    """A model-parameter condition failed; the message names the condition."""


@dataclass(frozen=True)
class ModelParams:
    """Problem instance: data ``x``, top rate ``b``, shapes ``a1..a_{n+1}``."""

    n: int
    x: float
    b: float
    a: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        validate_params(self)

    @property
    def shapes(self):
        """Gamma shapes a_i + a_{i+1} of the innovation block."""
        return block_shapes(self)

    @property
    def sum_tail(self):
        """a2+a3+a4+a5 for n=4, a2+a3 for n=3 (the one-shot exponent)."""
        if self.n == 4:
            return self.a[1] + self.a[2] + self.a[3] + self.a[4]
        return self.a[1] + self.a[2]


def validate_params(p: ModelParams) -> ModelParams:
    """Check all parameter conditions, naming the first violated one."""
    if p.n not in (3, 4):
        raise ParamError(f"n must be 3 or 4, got {p.n}")
    if not p.x > 0:
        raise ParamError("x <= 0")
    if not p.b > 0:
        raise ParamError("b <= 0")
    if len(p.a) != p.n + 1:
        raise ParamError(f"a must have length n+1 = {p.n + 1}, got {len(p.a)}")
    for i, ai in enumerate(p.a, start=1):
        if not ai > 0:
            raise ParamError(f"a{i} <= 0")
    a = p.a
    if p.n == 4:
        pairs = [(1, 4), (2, 5), (2, 3), (3, 4), (4, 5)]
    else:
        pairs = [(1, 4), (2, 3)]
    for i, j in pairs:
        if not a[i - 1] + a[j - 1] > 1:
            raise ParamError(f"a{i}+a{j} <= 1")
    return p


def block_shapes(p: ModelParams):
    return tuple(p.a[i] + p.a[i + 1] for i in range(p.n))


@dataclass
class GammaBlock:
    """One step's independent unit-rate gamma innovations.

    ``gamma`` has shape ``(n,)`` for a single trajectory or ``(n, m)`` for
    ``m`` vectorized replicas; ``t`` is the step the block drives.
    """

    gamma: np.ndarray
    t: int = 0


def draw_block(p: ModelParams, rng: RngStream, t: int = 0, size=None) -> GammaBlock:
    """Draw gamma_i ~ Gamma(a_i + a_{i+1}, 1), independent across i."""
    shapes = block_shapes(p)
    if size is None:
        g = np.array([rng.gamma(s) for s in shapes])
    else:
        g = np.stack([rng.gamma(s, size=size) for s in shapes])
    return GammaBlock(gamma=g, t=t)


def step_reduced(s, g: GammaBlock, p: ModelParams):
    """One update of the even-coordinate chain (u2, u4), n = 4.

    Literal evaluation of
    ``( g2 / (g1/(x+u2) + g3/(u2+u4)),  g4 / (b + g3/(u2+u4)) )``.
    """
    u2, u4 = s
    g1, g2, g3, g4 = g.gamma
    u2_next = g2 / (g1 / (p.x + u2) + g3 / (u2 + u4))
    u4_next = g4 / (p.b + g3 / (u2 + u4))
    return (u2_next, u4_next)


def step_full(s, g: GammaBlock, p: ModelParams):
    """One update of the 4-coordinate kernel (odd coordinates, then even).

    The output does not depend on the input u1 or u3; coordinates 2 and 4
    agree with :func:`step_reduced` on (u2, u4).
    """
    _, u2, _, u4 = s
    g1, g2, g3, g4 = g.gamma
    u1_next = g1 / (p.x + u2)
    u3_next = g3 / (u2 + u4)
    u2_next = g2 / (g1 / (p.x + u2) + g3 / (u2 + u4))
    u4_next = g4 / (p.b + g3 / (u2 + u4))
    return (u1_next, u2_next, u3_next, u4_next)


def step_n3(u, g: GammaBlock, p: ModelParams):
    """One update of the scalar n = 3 chain: g2 / (g1/(u+x) + g3/(u+b))."""
    g1, g2, g3 = g.gamma[:3]
    return g2 / (g1 / (u + p.x) + g3 / (u + p.b))


def log_equilibrium_density(s, p: ModelParams):
    """Unnormalized log posterior density at a 4-coordinate state.

    ``sum_i (a_i + a_{i+1} - 1) ln z_i - sum_{i=1..5} z_i z_{i-1}`` with
    ``z_0 = x`` and ``z_5 = b``.  The normalizer is never computed.
    """
    if p.n != 4:
        raise ValueError("equilibrium density is exposed for n=4 only")
    z = (p.x, *s, p.b)
    shapes = block_shapes(p)
    log_term = sum((shapes[i] - 1.0) * np.log(z[i + 1]) for i in range(4))
    quad_term = sum(z[i] * z[i - 1] for i in range(1, 6))
    return log_term - quad_term


def lift_2d_to_4d(s, g: GammaBlock, p: ModelParams):
    """Lift a reduced state to the 4-coordinate chain by one full update.

    Equals ``step_full((1, s2, 1, s4))``; the placeholder odd coordinates are
    ignored by the kernel, and if two reduced states coincide their lifts
    coincide under a shared block.
    """
    u2, u4 = s
    one = np.ones_like(np.asarray(u2, dtype=float))
    if np.ndim(u2) == 0:
        return step_full((1.0, u2, 1.0, u4), g, p)
    return step_full((one, u2, one, u4), g, p)
