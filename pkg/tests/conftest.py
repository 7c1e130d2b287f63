"""Shared high-precision oracles, independent of the compiled kernels."""

import mpmath
import numpy as np
import pytest

from qpjacobi.cocycle import CocycleSpec, FourierSeries

mpmath.mp.dps = 50


def mp_series(f: FourierSeries, x):
    x = mpmath.mpf(x)
    v = mpmath.mpf(f.constant)
    for k, c in enumerate(f.cosine_coeffs, start=1):
        v += c * mpmath.cos(2 * mpmath.pi * k * x)
    for k, c in enumerate(f.sine_coeffs, start=1):
        v += c * mpmath.sin(2 * mpmath.pi * k * x)
    return v


def mp_product(spec: CocycleSpec, x, n, divide_by_b=False):
    """B(x+(n-1)w) ... B(x) (or the A factors) in 50-digit arithmetic."""
    w = mpmath.mpf(spec.omega)
    x = mpmath.mpf(x)
    p = mpmath.eye(2)
    for k in range(n):
        xk = x + k * w
        bk, bk1 = mp_series(spec.b, xk), mp_series(spec.b, xk + w)
        m = mpmath.matrix([[mp_series(spec.a, xk) - spec.energy, -bk], [bk1, 0]])
        if divide_by_b:
            m = m / bk1
        p = m * p
    return p


def mp_log_opnorm(m):
    f = sum(m[i, j] ** 2 for i in range(2) for j in range(2))
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    s2 = (f + mpmath.sqrt(max(f * f - 4 * det * det, 0))) / 2
    return mpmath.log(s2) / 2


def mp_log_norm_mtilde(spec, x, n):
    m = mp_product(spec, x, n, divide_by_b=True)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return float(mp_log_opnorm(m) - mpmath.log(abs(det)) / 2)


@pytest.fixture
def jacobi_spec():
    """A cocycle with non-constant, zero-free b and a two-mode potential."""
    a = FourierSeries(0.3, (1.7, 0.0, 0.4), (0.0, -0.6))
    b = FourierSeries(1.5, (0.5,), (0.2,))
    return CocycleSpec(a, b, (np.sqrt(5.0) - 1.0) / 2.0, 0.35)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
