"""Jacobi cocycles over the irrational rotation and their transfer matrices.

The eigenvalue equation

    -b(x+(n+1)w) phi(n+1) - b(x+n w) phi(n-1) + a(x+n w) phi(n) = E phi(n)

is propagated by the one-step matrix

    B(x) = [[a(x) - E, -b(x)], [b(x+w), 0]],     A(x) = B(x) / b(x+w).

Products along the orbit are kept in log-scaled form: a unit-norm 2x2
matrix plus the natural log of the discarded scale, so lengths of 10^4 and
more never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import DegenerateProduct, NearSingularSamplingFunction

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0
DEFAULT_FLOOR = 1e-300


def _as_coeffs(values):
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class FourierSeries:
    """Real trigonometric polynomial on the circle R/Z.

    ``cosine_coeffs[i]`` multiplies cos(2 pi (i+1) x) and likewise for the
    sine coefficients; the zeroth mode lives in ``constant``.
    """

    constant: float = 0.0
    cosine_coeffs: tuple = ()
    sine_coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "cosine_coeffs", _as_coeffs(self.cosine_coeffs))
        object.__setattr__(self, "sine_coeffs", _as_coeffs(self.sine_coeffs))

    @classmethod
    def const(cls, c):
        return cls(constant=c)

    @classmethod
    def cosine(cls, amplitude, frequency=1, constant=0.0):
        coeffs = [0.0] * frequency
        coeffs[frequency - 1] = amplitude
        return cls(constant=constant, cosine_coeffs=coeffs)

    @property
    def degree(self):
        nz = [i + 1 for i, c in enumerate(self.cosine_coeffs) if c != 0.0]
        nz += [i + 1 for i, c in enumerate(self.sine_coeffs) if c != 0.0]
        return max(nz, default=0)

    def is_zero(self):
        return self.constant == 0.0 and not any(self.cosine_coeffs) and not any(self.sine_coeffs)

    def l1_norm(self):
        return abs(self.constant) + sum(map(abs, self.cosine_coeffs)) + sum(map(abs, self.sine_coeffs))

    def sup_bound(self, grid=4096):
        """Certified upper bound on sup |f|.

        Bernstein's inequality |f'| <= 2 pi d ||f||_inf means a grid of
        M points under-reads the sup by at most a factor (1 - pi d / M).
        The l1 norm of the coefficients is the fallback; the smaller of the
        two is returned.
        """
        l1 = self.l1_norm()
        d = self.degree
        if d == 0:
            return abs(self.constant)
        if math.pi * d >= grid:
            return l1
        xs = np.arange(grid) / grid
        sampled = float(np.max(np.abs(self(xs))))
        return min(l1, sampled / (1.0 - math.pi * d / grid))

    def scaled(self, c):
        return FourierSeries(
            c * self.constant,
            [c * v for v in self.cosine_coeffs],
            [c * v for v in self.sine_coeffs],
        )

    def kernel_args(self):
        return (
            self.constant,
            np.asarray(self.cosine_coeffs, dtype=float),
            np.asarray(self.sine_coeffs, dtype=float),
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = np.full(x.shape, self.constant)
        for k, c in enumerate(self.cosine_coeffs, start=1):
            if c:
                v = v + c * np.cos(2.0 * np.pi * k * x)
        for k, c in enumerate(self.sine_coeffs, start=1):
            if c:
                v = v + c * np.sin(2.0 * np.pi * k * x)
        return v if v.ndim else float(v)


def eval_series(f: FourierSeries, x: float) -> float:
    return float(f(x))


@dataclass(frozen=True)
class CocycleSpec:
    """Sampling functions a, b, frequency omega and energy E of one cocycle."""

    a: FourierSeries
    b: FourierSeries
    omega: float
    energy: float = 0.0

    def __post_init__(self):
        if self.b.is_zero():
            raise ValueError("b must not vanish identically")
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "energy", float(self.energy))

    def with_energy(self, energy):
        return replace(self, energy=float(energy))

    def scaled(self, c):
        """(c a, c b, c E): leaves every A and hence M_N entrywise unchanged."""
        return CocycleSpec(self.a.scaled(c), self.b.scaled(c), self.omega, c * self.energy)

    def kernel_args(self):
        return (self.omega, *self.a.kernel_args(), *self.b.kernel_args())


def almost_mathieu(coupling, omega=GOLDEN, energy=0.0):
    """a(x) = 2 lambda cos(2 pi x), b = 1."""
    return CocycleSpec(FourierSeries.cosine(2.0 * coupling), FourierSeries.const(1.0), omega, energy)


def constant_cocycle(energy, omega=GOLDEN):
    """a = 0, b = 1: the free Laplacian, x-independent."""
    return CocycleSpec(FourierSeries.const(0.0), FourierSeries.const(1.0), omega, energy)


def opnorm(m):
    """Largest singular value of a 2x2 matrix (or a stack of them), closed form."""
    m = np.asarray(m, dtype=float)
    m11, m12, m21, m22 = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    f = m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22
    det = m11 * m22 - m12 * m21
    disc = np.maximum(f * f - 4.0 * det * det, 0.0)
    s = np.sqrt(0.5 * (f + np.sqrt(disc)))
    return s if s.ndim else float(s)


@dataclass(frozen=True)
class LogScaledMat2:
    """Matrix exp(log_scale) * unit with ||unit|| = 1.

    The determinant is carried separately as sign * exp(log_abs_det) of the
    *unit* part, accumulated factor by factor, because the unit matrix of a
    long hyperbolic product is numerically rank one.
    """

    unit: np.ndarray
    log_scale: float
    log_abs_det: float = 0.0
    det_sign: float = 1.0

    @classmethod
    def from_matrix(cls, m):
        m = np.array(m, dtype=float)
        s = opnorm(m)
        if s == 0.0:
            raise DegenerateProduct(0, "cannot log-scale the zero matrix")
        det = float(np.linalg.det(m))
        log_det = math.log(abs(det)) - 2.0 * math.log(s) if det != 0.0 else -math.inf
        return cls(m / s, math.log(s), log_det, math.copysign(1.0, det))

    @property
    def log_norm(self):
        return self.log_scale

    @property
    def log_abs_det_total(self):
        """log|det| of the represented (unscaled) matrix."""
        return self.log_abs_det + 2.0 * self.log_scale

    def matrix(self):
        return self.unit * math.exp(self.log_scale)

    def __matmul__(self, other):
        prod = self.unit @ other.unit
        s = opnorm(prod)
        if s == 0.0:
            raise DegenerateProduct(0, "product of log-scaled matrices is zero")
        ls = math.log(s)
        return LogScaledMat2(
            prod / s,
            self.log_scale + other.log_scale + ls,
            self.log_abs_det + other.log_abs_det - 2.0 * ls,
            self.det_sign * other.det_sign,
        )

    def unimodular(self):
        """Same matrix divided by |det|^(1/2)."""
        shift = 0.5 * self.log_abs_det_total
        return LogScaledMat2(self.unit, self.log_scale - shift, self.log_abs_det, self.det_sign)


def orbit(x, omega, n):
    """Phases x, x+w, ..., x+n w reduced mod 1 one step at a time."""
    out = np.empty(n + 1)
    y = x - math.floor(x)
    out[0] = y
    for k in range(1, n + 1):
        y = _kernels.advance(y, omega)
        out[k] = y
    return out


def step_matrix_b(spec: CocycleSpec, x: float) -> np.ndarray:
    bx = eval_series(spec.b, x)
    bxw = eval_series(spec.b, x + spec.omega)
    return np.array([[eval_series(spec.a, x) - spec.energy, -bx], [bxw, 0.0]])


def step_matrix_a(spec: CocycleSpec, x: float) -> np.ndarray:
    bxw = eval_series(spec.b, x + spec.omega)
    if bxw == 0.0:
        raise NearSingularSamplingFunction(1, 0.0, 0.0)
    return step_matrix_b(spec, x) / bxw


@dataclass(frozen=True)
class _ProductRun:
    product: LogScaledMat2
    half_log_bb: float
    log_b_tail: float


def _run(spec, x, n, floor, divide_by_b):
    if n < 1:
        raise ValueError("product length must be at least 1")
    res = _kernels.scalar_product(
        float(x), *spec.kernel_args(), spec.energy, int(n), float(floor), divide_by_b
    )
    status, step, u11, u12, u21, u22, log_scale, log_abs_det, det_sign, half_bb, tail, bad = res
    if status == _kernels.NEAR_SINGULAR:
        raise NearSingularSamplingFunction(step, abs(bad), floor)
    if status == _kernels.DEGENERATE:
        raise DegenerateProduct(step)
    unit = np.array([[u11, u12], [u21, u22]])
    return _ProductRun(LogScaledMat2(unit, log_scale, log_abs_det, det_sign), half_bb, tail)


def transfer_product_t(spec: CocycleSpec, x: float, n: int, floor: float = 0.0) -> LogScaledMat2:
    """T_n(x) = B(x+(n-1)w) ... B(x), renormalized to unit norm after every factor.

    Zeros of b are legal for T itself (floor 0); only an exactly vanishing
    running product raises DegenerateProduct.
    """
    return _run(spec, x, n, floor, False).product


def transfer_product_m(spec: CocycleSpec, x: float, n: int, floor: float = DEFAULT_FLOOR) -> LogScaledMat2:
    """M_n(x) = A(x+(n-1)w) ... A(x) built from the A factors directly."""
    return _run(spec, x, n, floor, True).product


def transfer_product_mtilde(spec, x, n, floor=DEFAULT_FLOOR):
    """M~_n(x) = M_n(x) / |det M_n(x)|^(1/2) in log-scaled form."""
    return transfer_product_m(spec, x, n, floor).unimodular()


def normalized_log_norm(spec: CocycleSpec, x: float, n: int, floor: float = DEFAULT_FLOOR) -> float:
    """log||M~_n(x)|| = log||T_n(x)|| - 1/2 sum_{k<n} log|b(x+kw) b(x+(k+1)w)|.

    Non-negative up to rounding since M~_n is unimodular.
    """
    run = _run(spec, x, n, floor, False)
    return run.product.log_scale - run.half_log_bb


def det_identity_residual(spec: CocycleSpec, x: float, n: int, floor: float = DEFAULT_FLOOR) -> float:
    """Relative error of det M_n(x) against b(x) / b(x+nw).

    det M_n comes from the determinants of the B factors as multiplied
    (tracked through the renormalizations) divided by prod_{k=1..n} b(x+kw)^2.
    """
    run = _run(spec, x, n, floor, False)
    t = run.product
    log_det_m = t.log_abs_det_total - 2.0 * run.log_b_tail
    bx = eval_series(spec.b, x)
    bn = eval_series(spec.b, orbit(x, spec.omega, n)[-1])
    if abs(bx) < floor or abs(bn) < floor:
        raise NearSingularSamplingFunction(0 if abs(bx) < floor else n, min(abs(bx), abs(bn)), floor)
    # sign of det M_n: det T_n's sign (prod of b_k^2 is positive)
    expected_sign = math.copysign(1.0, bx * bn)
    if t.det_sign != expected_sign:
        return 2.0
    return abs(math.expm1(log_det_m - (math.log(abs(bx)) - math.log(abs(bn)))))


def bound_constant(spec: CocycleSpec, grid: int = 4096) -> float:
    """C(a, b, E) >= sup_x ||B(x)||: |E| + sup|a| + 2 sup|b|."""
    return abs(spec.energy) + spec.a.sup_bound(grid) + 2.0 * spec.b.sup_bound(grid)


def _log_abs_b(spec, phases):
    return np.log(np.abs(spec.b(phases)))


def shift_comparison_residual(spec: CocycleSpec, x: float, n: int, k: int = 1,
                              floor: float = DEFAULT_FLOOR) -> tuple:
    """Slack of the two-sided comparison between log||T_n(x)|| and log||T_n(x+kw)||.

    With C1 = 2 log C(a,b,E) and g = log||T_n(x)|| - log||T_n(x+kw)||,

        -k C1 + sum_{m<k} log|b(x_m) b(x_{m+1})|
            <= g <= k C1 - sum_{m<k} log|b(x_{n+m}) b(x_{n+m+1})|

    where x_j = x + j w.  k = 1 is the single-shift case.  Returns
    (lower_slack, upper_slack); both are >= 0 whenever the bound holds.
    """
    c1 = 2.0 * math.log(bound_constant(spec))
    phases = orbit(x, spec.omega, n + k + 1)
    lb = _log_abs_b(spec, phases)
    if np.any(np.abs(spec.b(phases)) < floor):
        raise NearSingularSamplingFunction(int(np.argmin(np.abs(spec.b(phases)))), 0.0, floor)
    g = transfer_product_t(spec, x, n).log_scale - transfer_product_t(spec, phases[k], n).log_scale
    head = float(np.sum(lb[0:k] + lb[1:k + 1]))
    tail = float(np.sum(lb[n:n + k] + lb[n + 1:n + k + 1]))
    lower = g - (-k * c1 + head)
    upper = (k * c1 - tail) - g
    return lower, upper


def log_norm_upper_bound(spec: CocycleSpec, x: float, n: int) -> float:
    """log C - (1/n) sum_{k=1..n} log|b(x+kw)|, an upper bound for (1/n) log||M_n(x)||."""
    lb = _log_abs_b(spec, orbit(x, spec.omega, n)[1:])
    return math.log(bound_constant(spec)) - float(np.sum(lb)) / n
