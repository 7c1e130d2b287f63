"""Worked examples with hand-derived or high-precision expected values."""

import json
import math

import numpy as np
import pytest

from conftest import mp_log_norm_mtilde
from qpjacobi.avalanche import ap_chain, ap_estimate_log_norm, ap_verify, multiscale_combination
from qpjacobi.cli import EXIT_CONFIG, EXIT_OK, main
from qpjacobi.cocycle import (
    GOLDEN,
    CocycleSpec,
    FourierSeries,
    almost_mathieu,
    bound_constant,
    constant_cocycle,
    det_identity_residual,
    normalized_log_norm,
    shift_comparison_residual,
    step_matrix_a,
    step_matrix_b,
    transfer_product_t,
)
from qpjacobi.diophantine import continued_fraction, diophantine_margin
from qpjacobi.errors import InsufficientData
from qpjacobi.ldt import birkhoff_field, deviation_histogram, fit_deviation_rate, uniform_upper_bound_check
from qpjacobi.lyapunov import (
    accelerated_limit,
    energy_perturbation_probe,
    finite_scale_l,
    holder_fit,
    mean_log_b,
)
from qpjacobi.sampling import PhaseSampler

ZERO = FourierSeries.const(0.0)
ONE = FourierSeries.const(1.0)
FIBONACCI = {1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584, 4181, 6765}


def log_rho(e):
    return math.log((e + math.sqrt(e * e - 4.0)) / 2.0)


def test_series_values():
    two_cos = FourierSeries.cosine(2.0)
    assert ONE(0.37) == 1.0
    assert two_cos(0.0) == 2.0
    assert two_cos(1 / 3) == pytest.approx(-1.0, abs=1e-15)


def test_step_matrix_examples():
    np.testing.assert_array_equal(step_matrix_b(constant_cocycle(0.0), 0.71), [[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(step_matrix_b(CocycleSpec(FourierSeries.cosine(2.0), ONE, GOLDEN, 1.0), 0.0),
                                  [[1.0, -1.0], [1.0, 0.0]])
    quarter = CocycleSpec(ZERO, FourierSeries.cosine(2.0), 0.25, 0.0)
    m = step_matrix_b(quarter, 0.0)
    np.testing.assert_allclose(m, [[0.0, -2.0], [0.0, 0.0]], atol=1e-15)
    assert abs(np.linalg.det(m)) <= 1e-15


def test_transfer_product_examples():
    t = transfer_product_t(constant_cocycle(0.0), 0.4, 4)
    np.testing.assert_allclose(np.abs(t.unit), np.eye(2), atol=1e-15)
    assert t.log_norm == 0.0
    spec = almost_mathieu(1.3, energy=0.2)
    one = transfer_product_t(spec, 0.15, 1)
    b = step_matrix_b(spec, 0.15)
    assert one.log_norm == pytest.approx(math.log(np.linalg.norm(b, 2)), abs=1e-15)
    np.testing.assert_allclose(one.unit, b / np.linalg.norm(b, 2), atol=1e-15)
    assert transfer_product_t(constant_cocycle(3.0), 0.9, 64).log_norm / 64 == pytest.approx(log_rho(3.0), abs=5e-2)


def test_normalized_log_norm_examples():
    spec = almost_mathieu(1.7, energy=0.3)
    assert normalized_log_norm(spec, 0.2, 30) == transfer_product_t(spec, 0.2, 30).log_norm
    assert abs(normalized_log_norm(constant_cocycle(0.0), 0.2, 10)) <= 1e-12
    spec = CocycleSpec(ZERO, FourierSeries.cosine(0.25, constant=0.5), GOLDEN, 1.0)
    assert normalized_log_norm(spec, 0.1, 8) == pytest.approx(mp_log_norm_mtilde(spec, 0.1, 8), abs=1e-9)


def test_determinant_examples():
    rng = np.random.default_rng(3)
    for _ in range(5):
        spec = CocycleSpec(FourierSeries(rng.normal(), rng.normal(size=2)), ONE, rng.random(), rng.normal())
        assert det_identity_residual(spec, rng.random(), int(rng.integers(1, 500))) <= 1e-10
    spec = CocycleSpec(ZERO, FourierSeries.cosine(1.0, constant=2.0), GOLDEN, 0.0)
    assert det_identity_residual(spec, 0.2, 100) <= 1e-8
    skew = CocycleSpec(FourierSeries.cosine(0.7), FourierSeries(1.2, (0.3,), (0.4,)), GOLDEN, 0.4)
    a = step_matrix_a(skew, 0.37)
    assert np.linalg.det(a) == pytest.approx(skew.b(0.37) / skew.b(0.37 + GOLDEN), rel=1e-12)
    assert det_identity_residual(skew, 0.37, 1) <= 1e-12


def test_shift_comparison_examples():
    lower, upper = shift_comparison_residual(constant_cocycle(0.0), 0.3, 40)
    c1 = 2.0 * math.log(bound_constant(constant_cocycle(0.0)))
    assert lower == pytest.approx(c1, abs=1e-12) and upper == pytest.approx(c1, abs=1e-12)
    assert min(shift_comparison_residual(almost_mathieu(2.0), 0.3, 50)) >= 0.0
    spec = CocycleSpec(ZERO, FourierSeries.cosine(1.0, constant=2.0), GOLDEN, 1.0)
    assert min(shift_comparison_residual(spec, 0.05, 20)) >= 0.0


def test_continued_fraction_examples():
    cf = continued_fraction(0.5, 10)
    assert cf.terminated and cf.convergents == [(1, 2)]
    rep = diophantine_margin(0.5, 2.0, 10)
    assert rep.margin == 0.0 and rep.worst_n == 2 and rep.is_rational
    rep = diophantine_margin(GOLDEN, 2.0, 10 ** 4)
    assert rep.margin > 0.0 and rep.worst_n in FIBONACCI


def test_mean_log_b_examples():
    assert mean_log_b(constant_cocycle(0.0), PhaseSampler()) == 0.0
    spec = CocycleSpec(ZERO, FourierSeries.const(2.5), GOLDEN, 0.0)
    assert mean_log_b(spec, PhaseSampler()) == pytest.approx(math.log(2.5), abs=1e-12)
    # Jensen: int log|2 cos 2 pi x| dx = 0
    spec = CocycleSpec(ZERO, FourierSeries.cosine(2.0), GOLDEN, 0.0)
    assert abs(mean_log_b(spec, PhaseSampler(count=100_000))) <= 1e-3


def test_finite_scale_examples():
    for n in (1, 17, 200):
        assert abs(finite_scale_l(constant_cocycle(0.0), n, PhaseSampler(count=64)).l_n) <= 1e-12
    assert finite_scale_l(almost_mathieu(2.0), 512).l_n >= math.log(2.0) - 1e-3


def test_constant_cocycle_finite_scale_carries_a_one_over_n_term():
    # L_256 - log rho equals log||P|| / 256 of the eigenprojection, 1.148e-3, not below 1e-3
    est = finite_scale_l(constant_cocycle(3.0), 256, PhaseSampler(count=1024))
    assert est.l_n - log_rho(3.0) == pytest.approx(1.148020829886e-3, abs=1e-12)


def test_accelerated_limit_examples():
    sampler = PhaseSampler(count=64)
    assert abs(accelerated_limit(constant_cocycle(0.0), 64, sampler).l_inf) <= 2e-12
    assert abs(accelerated_limit(constant_cocycle(3.0), 128, sampler).l_inf - log_rho(3.0)) <= 1e-4
    for n in (64, 128, 256):
        a = accelerated_limit(constant_cocycle(3.0), n, sampler).l_inf
        b = accelerated_limit(constant_cocycle(3.0), 2 * n, sampler).l_inf
        assert abs(a - b) <= 1e-6


def test_energy_perturbation_examples():
    am = almost_mathieu(2.0)
    assert energy_perturbation_probe(am, 0.4, 0.4, 64) == 0.0
    d = energy_perturbation_probe(constant_cocycle(3.0), 3.0, 3.001, 64, PhaseSampler(count=256))
    assert abs(d - abs(log_rho(3.0) - log_rho(3.001))) <= 1e-4
    l0 = finite_scale_l(am, 256).l_n
    assert energy_perturbation_probe(am, 0.0, 1e-6, 256) <= 0.01 * l0


def test_holder_examples():
    fit = holder_fit(constant_cocycle(0.0), np.linspace(2.55, 3.45, 10), 128, PhaseSampler(count=16))
    assert abs(fit.beta - 1.0) <= 0.1
    with pytest.raises(InsufficientData):
        holder_fit(constant_cocycle(0.0), [3.0], 64, PhaseSampler(count=16))


def test_holder_almost_mathieu_41_energies():
    # expected to fail: L = log 2 on the spectrum, so the grid differences are noise
    fit = holder_fit(almost_mathieu(2.0), np.linspace(-0.5, 0.5, 41), 512, PhaseSampler())
    assert 0.0 < fit.beta <= 1.0
    assert fit.r_squared >= 0.9


def test_avalanche_examples():
    v = ap_verify([np.diag([100.0, 0.01])] * 10)
    assert v.lhs <= 1e-10 and v.hypotheses_met
    assert ap_estimate_log_norm(ap_chain([np.diag([100.0, 0.01])] * 10)) == pytest.approx(10 * math.log(100.0), abs=1e-12)
    rng = np.random.default_rng(11)
    mu, n = 1e4, 20
    mats = []
    for _ in range(n):
        t = rng.uniform(-0.2, 0.2)
        mats.append(np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]) @ np.diag([mu, 1 / mu]))
    v = ap_verify(mats)
    assert v.hypotheses_met and v.bound_ratio <= 10
    assert abs(ap_estimate_log_norm(ap_chain(mats)) - v.direct_log_norm) <= 10 * n / mu
    rot = [np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]) for t in np.linspace(0.1, 1.0, 10)]
    assert not ap_verify(rot).hypotheses_met


def test_multiscale_examples():
    assert multiscale_combination(constant_cocycle(0.0), 32, 8, PhaseSampler(count=64)) <= 1e-12
    res = [multiscale_combination(almost_mathieu(3.0), n, 8, PhaseSampler()) for n in (32, 64, 128)]
    assert res[1] <= 1e-2
    assert res[0] > res[1] > res[2]


def test_deviation_examples():
    h = deviation_histogram(constant_cocycle(0.0), 32, PhaseSampler(count=256), deltas=(1e-9, 0.1))
    assert all(m == 0.0 for _, m in h.deviation_measures)
    h = deviation_histogram(constant_cocycle(3.0), 64, PhaseSampler(count=4096), deltas=(0.1,))
    assert h.measure(0.1) <= 1e-3


def test_uniform_bound_examples():
    assert uniform_upper_bound_check(constant_cocycle(0.0), 64, PhaseSampler(count=256)).constant <= 1e-9
    for count in (256, 2048, 16384):
        ub = uniform_upper_bound_check(constant_cocycle(3.0), 256, PhaseSampler(count=count))
        assert abs(ub.constant) <= 1e-9


def test_birkhoff_examples():
    assert np.all(birkhoff_field(constant_cocycle(0.0), 64, PhaseSampler(count=256)).f_values == 0.0)
    spec = CocycleSpec(ZERO, FourierSeries.const(3.0), GOLDEN, 0.0)
    assert np.max(np.abs(birkhoff_field(spec, 64, PhaseSampler(count=256)).f_values)) <= 1e-12
    spec = CocycleSpec(ZERO, FourierSeries.cosine(1.0, constant=2.0), GOLDEN, 0.0)
    f = birkhoff_field(spec, 256, PhaseSampler(count=2048))
    assert abs(f.mean) <= 3 * f.std_err + 1e-15


def test_cli_examples(tmp_path, capsys):
    rot = tmp_path / "rot.cfg"
    rot.write_text("scales = 16\nsampler.count = 64\n")
    assert main(["--config", str(rot), "lyapunov"]) == EXIT_OK
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert abs(float(row[2])) <= 1e-12
    const = tmp_path / "c.cfg"
    const.write_text("energy.low = 3\nscales = 64, 128\nsampler.count = 64\n")
    assert main(["--config", str(const), "lyapunov"]) == EXIT_OK
    for line in capsys.readouterr().out.splitlines()[1:]:
        assert abs(float(line.split(",")[4]) - log_rho(3.0)) <= 1e-4
    pair = tmp_path / "p.cfg"
    pair.write_text("energy.low = 2.6\nenergy.high = 2.7\nenergy.count = 2\n")
    assert main(["--config", str(pair), "holder"]) == EXIT_CONFIG
    rot2 = tmp_path / "rot2.cfg"
    rot2.write_text("scales = 32, 64\nsampler.count = 256\n")
    assert main(["--config", str(rot2), "--out", str(tmp_path / "r.csv"), "ldt"]) == EXIT_OK
    rate = json.loads((tmp_path / "r.csv.rate.json").read_text())
    assert rate["censored"] and rate["lower_bound"]
    am = tmp_path / "am.cfg"
    am.write_text("cocycle.a.cos.1 = 4\nscales = 128, 256, 512\nsampler.count = 20000\n")
    assert main(["--config", str(am), "--out", str(tmp_path / "a.csv"), "ldt"]) == EXIT_OK
    assert json.loads((tmp_path / "a.csv.rate.json").read_text())["fitted_c"] > 0
    chain = tmp_path / "rot.txt"
    chain.write_text("".join(f"{math.cos(t)} {-math.sin(t)} {math.sin(t)} {math.cos(t)}\n" for t in np.linspace(0.1, 1, 10)))
    assert main(["ap-verify", str(chain)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["hypotheses_met"] is False


def test_rate_from_almost_mathieu_histograms():
    am = almost_mathieu(2.0)
    hists = [deviation_histogram(am, n, PhaseSampler(count=20000)) for n in (128, 256, 512)]
    assert fit_deviation_rate(hists).fitted_c > 0
