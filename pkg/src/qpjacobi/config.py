"""Flat ``key = value`` run configuration.

Example::

    # almost Mathieu, coupling 3
    cocycle.a.cos.1 = 6.0
    cocycle.b.const = 1
    cocycle.omega = golden
    energy.low = -8
    energy.high = 8
    energy.count = 161
    scales = 256
    sampler.count = 2048

Keys not listed in ``KEYS`` are rejected.  Lines starting with ``#`` and blank
lines are ignored.  ``cocycle.omega`` accepts ``golden`` and ``sqrt2m1``
besides decimals.  Fourier keys are ``cocycle.{a,b}.const``,
``cocycle.{a,b}.cos.K`` and ``cocycle.{a,b}.sin.K`` with K >= 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

import numpy as np

from .cocycle import GOLDEN, SQRT2_MINUS_1, CocycleSpec, FourierSeries
from .errors import ConfigError
from .sampling import KINDS, PhaseSampler

SYMBOLIC_OMEGA = {"golden": GOLDEN, "sqrt2m1": SQRT2_MINUS_1}
_FOURIER_KEY = re.compile(r"^cocycle\.([ab])\.(const|cos\.(\d+)|sin\.(\d+))$")


def _fmt(x):
    return format(float(x), ".17g")


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "default") else float(text)


def _opt_str(text):
    return None if text.strip().lower() in ("", "none") else text.strip()


def parse_omega(text):
    t = text.strip().lower()
    if t in SYMBOLIC_OMEGA:
        return SYMBOLIC_OMEGA[t]
    value = float(t)
    if not 0.0 < value < 1.0:
        raise ConfigError(f"cocycle.omega must lie in (0, 1), got {value}")
    return value


@dataclass
class RunConfig:
    a: FourierSeries = field(default_factory=lambda: FourierSeries.const(0.0))
    b: FourierSeries = field(default_factory=lambda: FourierSeries.const(1.0))
    omega: float = GOLDEN
    alpha: float = 2.0
    scales: tuple = (64,)
    energy_low: float = 0.0
    energy_high: float | None = None
    energy_count: int = 1
    sampler_kind: str = "equispaced_grid"
    sampler_count: int = 2048
    sampler_offset: float | None = None
    deltas: tuple = (0.05, 0.1, 0.2)
    levels: int = 1
    holder_cap_fraction: float = 0.25
    holder_positivity_tol: float = 1e-2
    holder_noise_sigmas: float = 0.0
    n_max: int = 10000
    output_csv: str | None = None
    output_json: str | None = None
    seed: int = 0

    def energies(self):
        high = self.energy_low if self.energy_high is None else self.energy_high
        if self.energy_count == 1:
            return np.array([self.energy_low])
        return np.linspace(self.energy_low, high, self.energy_count)

    def cocycle(self, energy=None):
        e = self.energy_low if energy is None else energy
        return CocycleSpec(self.a, self.b, self.omega, e)

    def sampler(self):
        return PhaseSampler(self.sampler_kind, self.sampler_count, self.sampler_offset, self.seed)

    def validate(self):
        if self.b.is_zero():
            raise ConfigError("b must not vanish identically")
        if not 0.0 < self.omega < 1.0:
            raise ConfigError("omega must lie in (0, 1)")
        if not self.scales or min(self.scales) < 1:
            raise ConfigError("scales must be positive integers")
        if self.energy_count < 1:
            raise ConfigError("energy.count must be positive")
        if self.sampler_kind not in KINDS:
            raise ConfigError(f"sampler.kind must be one of {KINDS}")
        if self.sampler_count < 1:
            raise ConfigError("sampler.count must be positive")
        if any(d <= 0 for d in self.deltas):
            raise ConfigError("deltas must be positive")
        if self.levels < 1:
            raise ConfigError("lyapunov.levels must be >= 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return self

    def to_text(self):
        lines = []
        for name, series in (("a", self.a), ("b", self.b)):
            lines.append(f"cocycle.{name}.const = {_fmt(series.constant)}")
            for k, c in enumerate(series.cosine_coeffs, start=1):
                lines.append(f"cocycle.{name}.cos.{k} = {_fmt(c)}")
            for k, c in enumerate(series.sine_coeffs, start=1):
                lines.append(f"cocycle.{name}.sin.{k} = {_fmt(c)}")
        for key, (attr, _, dump) in KEYS.items():
            lines.append(f"{key} = {dump(getattr(self, attr))}")
        return "\n".join(lines) + "\n"


def _dump_opt(v):
    return "none" if v is None else _fmt(v)


def _dump_str(v):
    return "none" if v is None else str(v)


# key -> (attribute, parser, serializer)
KEYS = {
    "cocycle.omega": ("omega", parse_omega, _fmt),
    "cocycle.alpha": ("alpha", float, _fmt),
    "scales": ("scales", _ints, lambda v: ", ".join(map(str, v))),
    "energy.low": ("energy_low", float, _fmt),
    "energy.high": ("energy_high", _opt_float, _dump_opt),
    "energy.count": ("energy_count", int, str),
    "sampler.kind": ("sampler_kind", str.strip, str),
    "sampler.count": ("sampler_count", int, str),
    "sampler.offset": ("sampler_offset", _opt_float, _dump_opt),
    "deltas": ("deltas", _floats, lambda v: ", ".join(map(_fmt, v))),
    "lyapunov.levels": ("levels", int, str),
    "holder.cap_fraction": ("holder_cap_fraction", float, _fmt),
    "holder.positivity_tol": ("holder_positivity_tol", float, _fmt),
    "holder.noise_sigmas": ("holder_noise_sigmas", float, _fmt),
    "diophantine.n_max": ("n_max", int, str),
    "output.csv": ("output_csv", _opt_str, _dump_str),
    "output.json": ("output_json", _opt_str, _dump_str),
    "seed": ("seed", int, str),
}


def _set_coeff(coeffs, key, value):
    kind, const, cos_k, sin_k = key
    if const == "const":
        coeffs["const"] = value
        return
    idx = int(cos_k or sin_k)
    if idx < 1:
        raise ConfigError("Fourier mode numbers start at 1")
    coeffs["cos" if cos_k else "sin"][idx] = value


def _series(c):
    def dense(d):
        return [d.get(k, 0.0) for k in range(1, max(d, default=0) + 1)]

    return FourierSeries(c["const"], dense(c["cos"]), dense(c["sin"]))


def parse_config(text: str) -> RunConfig:
    values = {}
    coeffs = {name: None for name in "ab"}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        m = _FOURIER_KEY.match(key)
        try:
            if m:
                name = m.group(1)
                if coeffs[name] is None:
                    coeffs[name] = {"const": 0.0, "cos": {}, "sin": {}}
                _set_coeff(coeffs[name], (name, m.group(2).split(".")[0], m.group(3), m.group(4)),
                           float(value))
            elif key in KEYS:
                attr, parser, _ = KEYS[key]
                values[attr] = parser(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    cfg = RunConfig(**values)
    if coeffs["a"] is not None:
        cfg.a = _series(coeffs["a"])
    if coeffs["b"] is not None:
        cfg.b = _series(coeffs["b"])
    return cfg.validate()


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def config_fields(cfg):
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
