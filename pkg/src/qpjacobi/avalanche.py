"""Avalanche principle for chains of 2x2 matrices.

For A_1, ..., A_n with |det A_j| <= 1, min ||A_j|| >= mu > n and pair defects
log||A_{j+1}|| + log||A_j|| - log||A_{j+1} A_j|| < (1/2) log mu,

    | log||A_n...A_1|| + sum_{j=2}^{n-1} log||A_j|| - sum_{j=1}^{n-1} log||A_{j+1}A_j|| |

is O(n / mu).  The absolute constant is not known, so verdicts report
lhs * mu / n instead of a pass/fail against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cocycle import DEFAULT_FLOOR, CocycleSpec, LogScaledMat2, orbit, transfer_product_mtilde
from .errors import DeterminantTooLarge, HypothesesNotMet
from .lyapunov import sample_log_norms
from .sampling import PhaseSampler, masked_mean

DET_TOLERANCE = 1e-9


@dataclass
class ApBlockChain:
    block_log_norms: list
    pair_log_norms: list
    mu: float
    n: int
    log_mu: float = math.nan

    def __post_init__(self):
        if len(self.pair_log_norms) != len(self.block_log_norms) - 1:
            raise ValueError("need exactly one pair norm per consecutive block pair")
        if math.isnan(self.log_mu):
            self.log_mu = math.log(self.mu) if self.mu > 0 else -math.inf

    @property
    def large(self):
        # strict mu > n; exact equality is recorded as a borderline failure
        return self.log_mu > math.log(self.n)

    @property
    def borderline(self):
        return math.isclose(self.log_mu, math.log(self.n), rel_tol=0, abs_tol=1e-12)

    @property
    def max_pair_defect(self):
        b = self.block_log_norms
        return max(b[j + 1] + b[j] - p for j, p in enumerate(self.pair_log_norms))

    @property
    def aligned(self):
        return self.max_pair_defect < 0.5 * self.log_mu

    @property
    def hypotheses_met(self):
        return self.large and self.aligned

    @classmethod
    def from_blocks(cls, blocks):
        """Chain from LogScaledMat2 blocks ordered A_1, ..., A_n (A_1 applied first)."""
        block_logs = [b.log_scale for b in blocks]
        pair_logs = [(blocks[j + 1] @ blocks[j]).log_scale for j in range(len(blocks) - 1)]
        log_mu = min(block_logs)
        return cls(block_logs, pair_logs, math.exp(min(log_mu, 700.0)), len(blocks), log_mu)


@dataclass
class ApVerdict:
    lhs: float
    bound_ratio: float
    hypotheses_met: bool
    mu: float
    n: int
    direct_log_norm: float
    max_pair_defect: float
    borderline: bool = False


def _as_blocks(matrices):
    blocks = []
    for j, m in enumerate(matrices):
        m = np.asarray(m, dtype=float).reshape(2, 2)
        ad, bc = m[0, 0] * m[1, 1], m[0, 1] * m[1, 0]
        det = float(ad - bc)
        # a computed determinant is only good to a few ulp of |ad| + |bc|
        slack = DET_TOLERANCE + 4.0 * np.finfo(float).eps * (abs(ad) + abs(bc))
        if abs(det) > 1.0 + slack:
            raise DeterminantTooLarge(j, det)
        blocks.append(LogScaledMat2.from_matrix(m))
    return blocks


def ap_telescoped(chain: ApBlockChain) -> float:
    """sum_{j=1}^{n-1} log||A_{j+1}A_j|| - sum_{j=2}^{n-1} log||A_j||."""
    return math.fsum(chain.pair_log_norms) - math.fsum(chain.block_log_norms[1:-1])


def verify_blocks(blocks) -> ApVerdict:
    if len(blocks) < 3:
        raise ValueError("the avalanche principle needs n >= 3 matrices")
    chain = ApBlockChain.from_blocks(blocks)
    product = blocks[0]
    for b in blocks[1:]:
        product = b @ product
    lhs = abs(product.log_scale - ap_telescoped(chain))
    return ApVerdict(
        lhs=lhs,
        bound_ratio=lhs * math.exp(min(chain.log_mu, 700.0)) / chain.n,
        hypotheses_met=chain.hypotheses_met,
        mu=chain.mu,
        n=chain.n,
        direct_log_norm=product.log_scale,
        max_pair_defect=chain.max_pair_defect,
        borderline=chain.borderline,
    )


def ap_verify(matrices) -> ApVerdict:
    """Check the avalanche estimate on an explicit chain A_1, ..., A_n."""
    return verify_blocks(_as_blocks(matrices))


def ap_chain(matrices) -> ApBlockChain:
    return ApBlockChain.from_blocks(_as_blocks(matrices))


def ap_estimate_log_norm(chain: ApBlockChain) -> float:
    """Avalanche approximation of log||A_n ... A_1|| from block and pair norms."""
    if not chain.hypotheses_met:
        raise HypothesesNotMet(
            f"mu = exp({chain.log_mu:.4g}) vs n = {chain.n}, "
            f"max pair defect {chain.max_pair_defect:.4g} vs {0.5 * chain.log_mu:.4g}"
        )
    return ap_telescoped(chain)


def cocycle_blocks(spec: CocycleSpec, x: float, n: int, m: int, floor=DEFAULT_FLOOR):
    """M~_n(x + (j-1) n w) for j = 1..m, the factors of M~_{mn}(x)."""
    starts = orbit(x, spec.omega, n * m)[::n][:m]
    return [transfer_product_mtilde(spec, s, n, floor) for s in starts]


def multiscale_combination(spec: CocycleSpec, n: int, m: int, sampler: PhaseSampler = None,
                           threads=None, floor=DEFAULT_FLOOR) -> float:
    """|L_{mN} + L_N - 2 L_{2N}| from direct estimates at the three scales."""
    if m < 3:
        raise ValueError("m must be at least 3")
    sampler = sampler or PhaseSampler()
    sample = sample_log_norms(spec, [n, 2 * n, m * n], sampler, threads=threads, floor=floor)
    valid = sample.valid[sample.index(m * n)]
    vals = {}
    for k in (n, 2 * n, m * n):
        mean, _ = masked_mean(sample.log_mtilde(k)[0] / k, valid)
        vals[k] = float(mean)
    return abs(vals[m * n] + vals[n] - 2.0 * vals[2 * n])
