"""Empirical large-deviation sets and uniform upper bounds over phase samples.

All measures here are fractions of sampler points, not Lebesgue measure.
For the equispaced grid the error is O(1/count) on sets made of O(n)
intervals, which is the case for sublevel sets of log||T_n||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cocycle import DEFAULT_FLOOR, CocycleSpec, orbit
from .errors import InsufficientData, TooManyDegenerateSamples
from .lyapunov import MAX_DROPPED, _mean_log_b, sample_log_norms
from .sampling import PhaseSampler, masked_mean


@dataclass
class DeviationHistogram:
    """Distribution of u~_N(x) - center over the sampled phases.

    ``center`` is the sample mean (the L_N estimate) unless one was imposed,
    which is what lets shards computed separately be merged.
    """

    n: int
    energy: float
    samples: int
    bin_edges: list
    bin_counts: list
    mean: float
    deltas: list
    deviation_counts: list
    center: float = math.nan

    @property
    def deviation_measures(self):
        return [(d, c / self.samples) for d, c in zip(self.deltas, self.deviation_counts)]

    def measure(self, delta):
        return dict(self.deviation_measures)[delta]

    def merge(self, other):
        if (self.n, self.energy, self.bin_edges, self.deltas, self.center) != (
            other.n, other.energy, other.bin_edges, other.deltas, other.center
        ):
            raise ValueError("histograms differ in scale, energy, bins, deltas or center")
        total = self.samples + other.samples
        return DeviationHistogram(
            self.n,
            self.energy,
            total,
            list(self.bin_edges),
            [a + b for a, b in zip(self.bin_counts, other.bin_counts)],
            (self.mean * self.samples + other.mean * other.samples) / total,
            list(self.deltas),
            [a + b for a, b in zip(self.deviation_counts, other.deviation_counts)],
            self.center,
        )


def _normalized_exponents(spec, n, sampler, threads, floor):
    sample = sample_log_norms(spec, [n], sampler, threads=threads, floor=floor)
    valid = sample.valid[0]
    dropped = 1.0 - float(valid.mean())
    if dropped > MAX_DROPPED:
        raise TooManyDegenerateSamples(dropped, MAX_DROPPED)
    return sample, valid


def deviation_histogram(spec: CocycleSpec, n: int, sampler: PhaseSampler = None, deltas=(0.05, 0.1, 0.2),
                        bins=64, center=None, span=None, threads=None,
                        floor=DEFAULT_FLOOR) -> DeviationHistogram:
    """Measure of {x : |u~_N(x) - L_N| > delta} for each delta, plus a histogram of u~_N - L_N.

    Bins cover [-span, span]; by default span fits the data.  Shards meant to
    be merged later need a common ``center`` and ``span``.
    """
    if any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    sampler = sampler or PhaseSampler()
    sample, valid = _normalized_exponents(spec, n, sampler, threads, floor)
    u = sample.log_mtilde(n)[0] / n
    mean, _ = masked_mean(u, valid)
    ref = float(mean) if center is None else float(center)
    dev = u[valid] - ref
    if span is None:
        span = max(float(np.max(np.abs(dev))) if dev.size else 0.0, max(deltas))
    edges = np.linspace(-span, span, bins + 1)
    # out-of-range deviations land in the end bins so counts always total the samples
    counts, _ = np.histogram(np.clip(dev, -span, span), bins=edges)
    absdev = np.abs(dev)
    return DeviationHistogram(
        n=n,
        energy=spec.energy,
        samples=int(dev.size),
        bin_edges=edges.tolist(),
        bin_counts=counts.tolist(),
        mean=float(mean),
        deltas=[float(d) for d in deltas],
        deviation_counts=[int(np.count_nonzero(absdev > d)) for d in deltas],
        center=ref,
    )


@dataclass
class RateFit:
    deltas: list
    n_values: list
    fitted_c: float
    fit_quality: float
    residual: float = math.nan
    censored: bool = False
    lower_bound: bool = False
    cells: list = field(default_factory=list)


def fit_rate_cells(cells) -> RateFit:
    """Fit measure ~ exp(-c delta^2 N) through the origin.

    ``cells`` holds (delta, n, measure, samples) tuples.  A zero measure is
    censored at the resolution floor 1/samples, so the fitted c is then
    conservative.  fit_quality is the uncentered R^2 of the origin fit.
    """
    cells = [(float(d), int(n), float(m), int(s)) for d, n, m, s in cells]
    if len(cells) < 3:
        raise InsufficientData(f"need at least 3 (delta, N) cells, got {len(cells)}")
    x = np.array([d * d * n for d, n, _, _ in cells])
    censored_mask = np.array([m <= 0.0 for _, _, m, _ in cells])
    meas = np.array([m if m > 0.0 else 1.0 / s for _, _, m, s in cells])
    y = -np.log(meas)
    c = float(np.dot(x, y) / np.dot(x, x))
    resid = y - c * x
    ss = float(np.dot(y, y))
    quality = 1.0 - float(np.dot(resid, resid)) / ss if ss > 0 else 1.0
    all_censored = bool(censored_mask.all())
    return RateFit(
        deltas=sorted({d for d, _, _, _ in cells}),
        n_values=sorted({n for _, n, _, _ in cells}),
        fitted_c=c,
        fit_quality=quality,
        residual=float(np.sqrt(np.mean(resid ** 2))),
        censored=bool(censored_mask.any()),
        lower_bound=all_censored,
        cells=[(d, n, float(m), s) for (d, n, _, s), m in zip(cells, meas)],
    )


def fit_deviation_rate(histograms) -> RateFit:
    cells = []
    for h in histograms:
        for d, m in h.deviation_measures:
            cells.append((d, h.n, m, h.samples))
    return fit_rate_cells(cells)


def synthetic_cells(c, deltas, n_values, samples=10 ** 9):
    """Cells with measures exactly exp(-c delta^2 N), for checking the fitter."""
    return [(d, n, math.exp(-c * d * d * n), samples) for n in n_values for d in deltas]


@dataclass
class UniformBound:
    """Smallest constants making the uniform upper bounds hold on the sample.

    constant:        max_x (u_N(x) - J_N) * sqrt(N / log N)
    mtilde_constant: max_x (log||M~_N(x)|| - N L_N + N F_N(x)) / sqrt(N log N)
    """

    n: int
    constant: float
    mtilde_constant: float
    j_n: float
    l_n: float
    log_b_mean: float


def uniform_upper_bound_check(spec: CocycleSpec, n: int, sampler: PhaseSampler = None,
                              threads=None, floor=DEFAULT_FLOOR) -> UniformBound:
    if n < 3:
        raise ValueError("need n >= 3 so that log n > 1")
    sampler = sampler or PhaseSampler()
    sample, valid = _normalized_exponents(spec, n, sampler, threads, floor)
    d, _ = _mean_log_b(spec, sampler, floor)
    log_t = sample.log_t[0][0]
    log_mt = sample.log_mtilde(n)[0]
    j_n, _ = masked_mean(log_t / n, valid)
    l_n, _ = masked_mean(log_mt / n, valid)
    scale = math.sqrt(n / math.log(n))
    c_t = float(np.max((log_t / n - j_n)[valid])) * scale
    # N F_N(x) = 1/2 sum log|b b| - N D
    nf = sample.half_bb[0] - n * d
    c_m = float(np.max((log_mt - n * l_n + nf)[valid])) / math.sqrt(n * math.log(n))
    return UniformBound(n, c_t, c_m, float(j_n), float(l_n), d)


@dataclass
class BirkhoffField:
    n: int
    f_values: np.ndarray
    mean: float
    std_err: float
    max: float
    min: float
    deviation_measures: list
    log_b_mean: float


def birkhoff_values(spec, phases, n, d):
    """F_n(x) = (1/2n) sum_{k<n} Q(x+kw) with Q(x) = log|b(x) b(x+w)| - 2D."""
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    out = np.empty(phases.shape)
    for i, x in enumerate(phases):
        lb = np.log(np.abs(spec.b(orbit(x, spec.omega, n))))
        out[i] = (float(np.sum(lb[:-1] + lb[1:])) - 2.0 * n * d) / (2.0 * n)
    return out


def birkhoff_field(spec: CocycleSpec, n: int, sampler: PhaseSampler = None, deltas=(0.05, 0.1, 0.2),
                   threads=None, floor=DEFAULT_FLOOR) -> BirkhoffField:
    """F_N over the sampler and the measures of {x : |F_N(x)| > delta}."""
    from . import _kernels
    from .sampling import map_blocks

    sampler = sampler or PhaseSampler()
    d, _ = _mean_log_b(spec, sampler, floor)
    checkpoints = np.asarray([n], dtype=np.int64)
    b_args = spec.b.kernel_args()

    def block(x0):
        h = np.empty((1, len(x0)))
        v = np.zeros((1, len(x0)), dtype=np.bool_)
        _kernels.batch_log_b_sums(x0, spec.omega, *b_args, checkpoints, floor, h, v)
        return h[0], v[0]

    parts = map_blocks(block, sampler.phases(spec.omega), threads)
    half_bb = np.concatenate([p[0] for p in parts])
    valid = np.concatenate([p[1] for p in parts])
    dropped = 1.0 - float(valid.mean())
    if dropped > MAX_DROPPED:
        raise TooManyDegenerateSamples(dropped, MAX_DROPPED)
    f = np.where(valid, (half_bb - n * d) / n, np.nan)
    mean, err = masked_mean(np.where(valid, f, 0.0), valid)
    fv = f[valid]
    return BirkhoffField(
        n=n,
        f_values=f,
        mean=float(mean),
        std_err=float(err),
        max=float(fv.max()),
        min=float(fv.min()),
        deviation_measures=[(float(dl), float(np.mean(np.abs(fv) > dl))) for dl in deltas],
        log_b_mean=d,
    )


def shift_difference_bounds(spec: CocycleSpec, x: float, n: int, k: int, c_diag: float,
                            l_k: float, d: float) -> dict:
    """Both sides of the shift-difference estimate for log||M~_n||.

    Returns lhs = |log||M~_n(x+kw)|| - log||M~_n(x)|||, the exact bound
    log||M~_k(x)|| + log||M~_k(x+nw)||, the bound through the uniform
    constant ``c_diag`` and the unconditional bound with log C - D.
    """
    from .cocycle import bound_constant, normalized_log_norm

    xs = orbit(x, spec.omega, n + k)
    lhs = abs(normalized_log_norm(spec, xs[k], n) - normalized_log_norm(spec, x, n))
    exact = normalized_log_norm(spec, x, k) + normalized_log_norm(spec, xs[n], k)
    kf = k * birkhoff_values(spec, [x, xs[n]], k, d)
    uniform = 2 * k * l_k + 2 * c_diag * math.sqrt(n * math.log(n)) - kf[0] - kf[1]
    crude = 2 * k * (math.log(bound_constant(spec)) - d) - kf[0] - kf[1]
    return {"lhs": lhs, "exact": exact, "uniform": uniform, "crude": crude}
