import pytest

from qpjacobi.cocycle import GOLDEN, SQRT2_MINUS_1, FourierSeries
from qpjacobi.config import RunConfig, parse_config
from qpjacobi.errors import ConfigError

EXAMPLE = """
# almost Mathieu, coupling 3
cocycle.a.cos.1 = 6.0
cocycle.b.const = 1
cocycle.omega = golden
energy.low = -8
energy.high = 8
energy.count = 161
scales = 256
sampler.count = 2048
"""


def test_parse_example():
    cfg = parse_config(EXAMPLE)
    assert cfg.a == FourierSeries(0.0, (6.0,))
    assert cfg.b == FourierSeries.const(1.0)
    assert cfg.omega == GOLDEN
    assert cfg.scales == (256,)
    e = cfg.energies()
    assert len(e) == 161 and e[0] == -8.0 and e[-1] == 8.0 and e[80] == 0.0


def test_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.b == FourierSeries.const(1.0) and cfg.a.is_zero()


def test_sparse_fourier_modes_are_filled():
    cfg = parse_config("cocycle.a.cos.3 = 1.5\ncocycle.a.sin.2 = -1\ncocycle.a.const = 0.25")
    assert cfg.a == FourierSeries(0.25, (0.0, 0.0, 1.5), (0.0, -1.0))


def test_roundtrip():
    cfg = parse_config(EXAMPLE + "cocycle.b.sin.2 = 0.1\ndeltas = 0.1, 0.3\nsampler.offset = 0.001\nseed = 77\n"
                       "cocycle.alpha = 1.5\noutput.csv = out/run.csv")
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.to_text() == cfg.to_text()


def test_symbolic_omega():
    assert parse_config("cocycle.omega = sqrt2m1").omega == SQRT2_MINUS_1
    assert parse_config("cocycle.omega = 0.25").omega == 0.25


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "scales = 64\nscales = 128",
    "cocycle.omega = 1.5",
    "energy.count = many",
    "sampler.kind = monte_carlo",
    "cocycle.b.const = 0",
    "cocycle.a.cos.0 = 1",
    "scales = 0",
    "deltas = -0.1",
    "no equals sign here",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)
