"""Continued fractions and a finite audit of the Diophantine condition

    ||n w|| >= C_w / (n (log n)^alpha).
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

RATIONAL_EPS = 1e-15


@dataclass
class ContinuedFraction:
    omega: float
    partial_quotients: list
    convergents: list = field(default_factory=list)
    terminated: bool = False

    @property
    def denominators(self):
        return [q for _, q in self.convergents]


def continued_fraction(omega: float, depth: int) -> ContinuedFraction:
    """Partial quotients [0; a_1, a_2, ...] of omega in (0, 1) and convergents p_j/q_j.

    Euclid runs in exact rational arithmetic on the binary value of omega, so
    no rounding drift builds up.  Once |omega - p_j/q_j| < 1e-15 the input is
    treated as rational and the expansion stops there.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    target = Fraction(omega)
    quotients = []
    convergents = []
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    r = target
    terminated = False
    for _ in range(depth):
        y = 1 / r
        a = math.floor(y)
        r = y - a
        quotients.append(a)
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        convergents.append((p, q))
        if r == 0 or abs(target - Fraction(p, q)) < RATIONAL_EPS:
            terminated = True
            break
    if terminated and len(quotients) > 1 and quotients[-1] == 1:
        # [..., a, 1] and [..., a + 1] are the same rational; keep the canonical form
        quotients[-2:] = [quotients[-2] + 1]
        del convergents[-2]
    return ContinuedFraction(omega, quotients, convergents, terminated)


def dist_to_int(values):
    values = np.asarray(values, dtype=float)
    return np.abs(values - np.rint(values))


@dataclass
class DiophantineReport:
    omega: float
    alpha: float
    n_max: int
    worst_n: int
    margin: float
    is_rational: bool
    worst_is_convergent: bool = False


def diophantine_margin(omega: float, alpha: float, n_max: int) -> DiophantineReport:
    """min over 2 <= n <= n_max of ||n w|| n (log n)^alpha, with the minimizing n.

    n = 1 is skipped since (log 1)^alpha = 0.  The result audits a finite
    range only; it cannot certify the condition for all n.
    """
    if alpha <= 1.0:
        raise ValueError("alpha must exceed 1")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    n = np.arange(2, n_max + 1, dtype=float)
    dist = dist_to_int(n * omega)
    # products n*omega carry O(n ulp) error; below that the frequency is rational here
    dist = np.where(dist <= 4.0 * n * np.finfo(float).eps, 0.0, dist)
    weights = dist * n * np.log(n) ** alpha
    i = int(np.argmin(weights))
    worst_n = i + 2
    margin = float(weights[i])
    cf = continued_fraction(omega, 64)
    return DiophantineReport(
        omega=omega,
        alpha=alpha,
        n_max=n_max,
        worst_n=worst_n,
        margin=margin,
        is_rational=margin == 0.0,
        worst_is_convergent=worst_n in cf.denominators,
    )
