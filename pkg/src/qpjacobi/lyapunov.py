"""Finite-scale Lyapunov exponents, their accelerated limit and a Hoelder-exponent fit.

L_N(E) = (1/N) int log||M~_N(x, E)|| dx is estimated by averaging over a
PhaseSampler.  The limit uses the doubling combination 2 L_{2N} - L_N, whose
distance to L(E) is exponentially small in N once L(E) > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cocycle import DEFAULT_FLOOR, CocycleSpec
from .errors import InsufficientData, PositivityViolated, TooManyDegenerateSamples
from .sampling import PhaseSampler, map_blocks, masked_mean, tree_sum

MAX_DROPPED = 0.01
# regime thresholds; they only set flags and never change results
AP_DOUBLING_RATIO = 0.1
PERTURBATION_RATIO = 0.01


@dataclass
class OrbitSample:
    """log||T_n(x, E)|| for every (scale, energy, phase) plus the b corrections."""

    phases: np.ndarray
    scales: tuple
    energies: np.ndarray
    log_t: np.ndarray      # (scales, energies, phases)
    half_bb: np.ndarray    # (scales, phases)
    valid: np.ndarray      # (scales, phases)

    def index(self, n):
        return self.scales.index(n)

    def log_mtilde(self, n):
        """log||M~_n|| per (energy, phase)."""
        i = self.index(n)
        return self.log_t[i] - self.half_bb[i][None, :]

    def dropped_measure(self, n):
        return 1.0 - float(self.valid[self.index(n)].mean())


def sample_log_norms(spec: CocycleSpec, scales, sampler: PhaseSampler, energies=None,
                     threads=None, floor=DEFAULT_FLOOR) -> OrbitSample:
    """Run every sampler phase once up to max(scales), recording each scale on the way."""
    scales = tuple(sorted(set(int(n) for n in scales)))
    if scales[0] < 1:
        raise ValueError("scales must be >= 1")
    energies = np.atleast_1d(np.asarray(spec.energy if energies is None else energies, dtype=float))
    checkpoints = np.asarray(scales, dtype=np.int64)
    args = spec.kernel_args()

    def block(x0):
        out_t = np.empty((len(scales), len(energies), len(x0)))
        out_h = np.empty((len(scales), len(x0)))
        out_v = np.zeros((len(scales), len(x0)), dtype=np.bool_)
        _kernels.batch_log_norms(x0, *args, energies, checkpoints, floor, out_t, out_h, out_v)
        return out_t, out_h, out_v

    phases = sampler.phases(spec.omega)
    parts = map_blocks(block, phases, threads)
    return OrbitSample(
        phases,
        scales,
        energies,
        np.concatenate([p[0] for p in parts], axis=-1),
        np.concatenate([p[1] for p in parts], axis=-1),
        np.concatenate([p[2] for p in parts], axis=-1),
    )


def _check_dropped(dropped):
    if dropped > MAX_DROPPED:
        raise TooManyDegenerateSamples(dropped, MAX_DROPPED)


def mean_log_b(spec: CocycleSpec, sampler: PhaseSampler, floor=DEFAULT_FLOOR) -> float:
    """D = int log|b(x)| dx by averaging over the sampler; zeros of b are dropped."""
    return _mean_log_b(spec, sampler, floor)[0]


def _mean_log_b(spec, sampler, floor):
    vals = np.abs(np.atleast_1d(spec.b(sampler.phases(spec.omega))))
    valid = vals >= floor
    dropped = 1.0 - float(valid.mean())
    _check_dropped(dropped)
    logs = np.log(np.where(valid, vals, 1.0))
    return float(tree_sum(np.where(valid, logs, 0.0)) / valid.sum()), dropped


@dataclass
class ScaleEstimate:
    """One rung of the multiscale ladder at a fixed energy."""

    n: int
    l_n: float
    std_err: float
    dropped_measure: float
    j_n: float = math.nan
    log_b_mean: float = math.nan
    energy: float = math.nan

    @property
    def reliable(self):
        return self.dropped_measure <= MAX_DROPPED


def _scale_estimates(sample, d):
    """ScaleEstimate for each (energy, scale) of an OrbitSample -> nested list [E][scale]."""
    out = [[None] * len(sample.scales) for _ in sample.energies]
    for ci, n in enumerate(sample.scales):
        valid = sample.valid[ci]
        dropped = 1.0 - float(valid.mean())
        _check_dropped(dropped)
        l_mean, l_err = masked_mean(sample.log_mtilde(n) / n, valid)
        j_mean, _ = masked_mean(sample.log_t[ci] / n, valid)
        for ei, e in enumerate(sample.energies):
            out[ei][ci] = ScaleEstimate(n, float(l_mean[ei]), float(l_err[ei]), dropped,
                                        float(j_mean[ei]), d, float(e))
    return out


def finite_scale_l(spec: CocycleSpec, n: int, sampler: PhaseSampler = None, threads=None,
                   floor=DEFAULT_FLOOR) -> ScaleEstimate:
    """L_N(E) with standard error; ``j_n`` is the independently averaged (1/N) log||T_N||."""
    sampler = sampler or PhaseSampler()
    sample = sample_log_norms(spec, [n], sampler, threads=threads, floor=floor)
    d, _ = _mean_log_b(spec, sampler, floor)
    return _scale_estimates(sample, d)[0][0]


def scale_ladder(spec, scales, sampler=None, energies=None, threads=None, floor=DEFAULT_FLOOR):
    """ScaleEstimates for every energy and scale from a single orbit sweep."""
    sampler = sampler or PhaseSampler()
    sample = sample_log_norms(spec, scales, sampler, energies, threads, floor)
    d, _ = _mean_log_b(spec, sampler, floor)
    return _scale_estimates(sample, d)


@dataclass
class LimitEstimate:
    l_inf: float
    n_used: int
    doubling_gap: float
    ladder: list
    std_err: float = math.nan
    energy: float = math.nan
    ap_regime: bool = True
    monotone: bool = True

    @property
    def outside_ap_regime(self):
        return not self.ap_regime


def _limit_from(sample, ladder, energy_index):
    lo, hi = ladder[-2], ladder[-1]
    ci_lo, ci_hi = sample.index(lo.n), sample.index(hi.n)
    valid = sample.valid[ci_hi] & sample.valid[ci_lo]
    combo = (2.0 * sample.log_mtilde(hi.n)[energy_index] / hi.n
             - sample.log_mtilde(lo.n)[energy_index] / lo.n)
    _, err = masked_mean(combo, valid)
    monotone = all(
        b.l_n <= a.l_n + 2.0 * (a.std_err + b.std_err) for a, b in zip(ladder, ladder[1:])
    )
    return LimitEstimate(
        l_inf=2.0 * hi.l_n - lo.l_n,
        n_used=lo.n,
        doubling_gap=abs(lo.l_n - hi.l_n),
        ladder=list(ladder),
        std_err=float(err),
        energy=lo.energy,
        ap_regime=(lo.l_n - hi.l_n) <= AP_DOUBLING_RATIO * lo.l_n,
        monotone=monotone,
    )


def accelerated_limits(spec, energies, n, sampler=None, levels=1, threads=None, floor=DEFAULT_FLOOR):
    """accelerated_limit for a whole energy grid in one sweep over the phases."""
    if n < 1 or levels < 1:
        raise ValueError("need n >= 1 and at least one doubling level")
    sampler = sampler or PhaseSampler()
    scales = [n * 2 ** k for k in range(levels + 1)]
    sample = sample_log_norms(spec, scales, sampler, energies, threads, floor)
    d, _ = _mean_log_b(spec, sampler, floor)
    ladders = _scale_estimates(sample, d)
    return [_limit_from(sample, ladder, ei) for ei, ladder in enumerate(ladders)]


def accelerated_limit(spec: CocycleSpec, n: int, sampler: PhaseSampler = None, levels=1,
                      threads=None, floor=DEFAULT_FLOOR) -> LimitEstimate:
    """L(E) ~ 2 L_{2N} - L_N from the top rung of an N, 2N, ..., 2^levels N ladder."""
    return accelerated_limits(spec, [spec.energy], n, sampler, levels, threads, floor)[0]


def energy_perturbation_probe(spec: CocycleSpec, e0: float, e1: float, n: int,
                              sampler: PhaseSampler = None, threads=None) -> float:
    """|L_N(E0) - L_N(E1)| on a shared sampler."""
    if e0 == e1:
        return 0.0
    est = scale_ladder(spec, [n], sampler, [e0, e1], threads)
    return abs(est[0][0].l_n - est[1][0].l_n)


@dataclass
class HolderFit:
    beta: float
    intercept: float
    r_squared: float
    window: tuple
    pair_count: int
    slope: float = math.nan
    energies: list = field(default_factory=list)
    limits: list = field(default_factory=list)
    stable_fraction: float = math.nan


def fit_power_law(energies, values, cap=None, noise_floor=0.0):
    """Least-squares slope of log|dL| against log|dE| over grid pairs.

    Pairs farther apart than ``cap`` or with |dL| <= noise_floor are skipped.
    Returns (slope, intercept, r_squared, pair_count).
    """
    e = np.asarray(energies, dtype=float)
    v = np.asarray(values, dtype=float)
    i, j = np.triu_indices(len(e), k=1)
    de = np.abs(e[i] - e[j])
    dv = np.abs(v[i] - v[j])
    keep = (de > 0) & (dv > noise_floor)
    if cap is not None:
        keep &= de <= cap * (1 + 1e-12)
    if keep.sum() < 2:
        raise InsufficientData(f"only {int(keep.sum())} usable energy pairs")
    xs, ys = np.log(de[keep]), np.log(dv[keep])
    if np.ptp(xs) == 0.0:
        raise InsufficientData("all usable pairs share one energy spacing")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2, int(keep.sum())


def holder_fit(spec: CocycleSpec, energies, n: int, sampler: PhaseSampler = None,
               cap_fraction=0.25, positivity_tol=1e-2, noise_sigmas=0.0, levels=1,
               threads=None) -> HolderFit:
    """Fit |L(E) - L(E')| ~ exp(intercept) |E - E'|^beta on an energy grid.

    L is the accelerated limit at each grid energy; positivity of every value
    is required.  Only pairs with |E - E'| <= cap_fraction * span enter.
    ``noise_sigmas`` > 0 also drops pairs whose difference is within that many
    combined standard errors.
    """
    energies = np.asarray(energies, dtype=float)
    if len(energies) < 2:
        raise InsufficientData("need at least two energies")
    limits = accelerated_limits(spec, energies, n, sampler, levels, threads)
    values = np.array([lim.l_inf for lim in limits])
    bad = values <= positivity_tol
    if bad.any():
        raise PositivityViolated(energies[bad], values[bad], positivity_tol)
    span = float(energies.max() - energies.min())
    noise = 0.0
    if noise_sigmas > 0:
        noise = noise_sigmas * 2.0 * max(lim.std_err for lim in limits)
    cap = cap_fraction * span
    slope, intercept, r2, count = fit_power_law(energies, values, cap, noise)
    # share of fitted pairs inside the small-perturbation window |dL| < L / 100
    i, j = np.triu_indices(len(energies), k=1)
    de, dl = np.abs(energies[i] - energies[j]), np.abs(values[i] - values[j])
    used = (de > 0) & (de <= cap * (1 + 1e-12)) & (dl > noise)
    small = dl < PERTURBATION_RATIO * np.minimum(values[i], values[j])
    stable = float(np.mean(small[used])) if used.any() else math.nan
    return HolderFit(
        beta=float(min(max(slope, 0.0), 1.0)),
        intercept=intercept,
        r_squared=r2,
        window=(float(energies.min()), float(energies.max())),
        pair_count=count,
        slope=slope,
        energies=energies.tolist(),
        limits=values.tolist(),
        stable_fraction=stable,
    )
