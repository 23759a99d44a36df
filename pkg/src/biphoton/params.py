"""Physical inputs and the quantities derived from them.

Everything downstream works in units of the intrinsic idler decay rate
``gamma3``: detunings in gamma3, times in 1/gamma3.  Doppler shifts ``k v`` are
therefore divided by ``gamma3`` here, once.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from pathlib import Path

K_B = 1.380649e-23  # J/K, exact SI value
RB87_MASS = 1.44316e-25  # kg


class ConfigError(ValueError):
    """Invalid physical parameters or configuration."""


class Scheme(str, enum.Enum):
    COPROPAGATING = "co"
    COUNTERPROPAGATING = "counter"

    @property
    def sign(self) -> int:
        return 1 if self is Scheme.COPROPAGATING else -1

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "co": cls.COPROPAGATING,
            "copropagating": cls.COPROPAGATING,
            "counter": cls.COUNTERPROPAGATING,
            "counterpropagating": cls.COUNTERPROPAGATING,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"scheme: unknown value {value!r} (use 'co' or 'counter')") from None


@dataclasses.dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters of the cascade source.

    ``tau`` is the dimensionless product gamma3 * tau and ``gamma3N_ratio`` is
    the superradiant enhancement gamma3^N / gamma3.
    """

    lambda_s: float = 1.32e-6
    lambda_i: float = 795e-9
    gamma3: float = 2 * math.pi * 5.8e6
    gamma3N_ratio: float = 5.0
    tau: float = 0.25
    temperature: float = 300.0
    atom_mass: float = RB87_MASS
    scheme: Scheme = Scheme.COPROPAGATING

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        for name in ("lambda_s", "lambda_i", "gamma3", "gamma3N_ratio", "tau",
                     "temperature", "atom_mass"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name}: expected a number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(f"{name}: must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("lambda_s", "lambda_i", "gamma3", "tau", "atom_mass"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name}: must be strictly positive, got {getattr(self, name)!r}")
        if self.temperature < 0:
            raise ConfigError(f"temperature: must be >= 0 K, got {self.temperature!r}")
        if self.gamma3N_ratio < 1:
            raise ConfigError(f"gamma3N_ratio: must be >= 1, got {self.gamma3N_ratio!r}")

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scheme"] = self.scheme.value
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown parameter key(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "PhysicalParams":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path}: top level must be a JSON object")
        return cls.from_dict(data)


@dataclasses.dataclass(frozen=True)
class DerivedParams:
    """Derived quantities.  SI fields carry units in the name; the rest are
    gamma3-scaled.

    ``ks``, ``ki_signed`` and ``kbar`` are wavenumbers times the thermal speed
    divided by gamma3, i.e. Doppler widths in units of gamma3; ``ki_signed`` is
    negative in the counter-propagating scheme.
    """

    params: PhysicalParams
    k_s: float  # 1/m
    k_i: float  # 1/m
    sigma: float  # m/s
    kbar_si: float  # 1/m, k_s + sign * k_i
    b: float
    gamma3N: float  # rad/s
    tau: float  # gamma3 * tau
    gammaN: float  # gamma3N / gamma3
    ks: float
    ki_signed: float
    kbar: float

    @property
    def temperature(self) -> float:
        return self.params.temperature

    @property
    def scheme(self) -> Scheme:
        return self.params.scheme


def derive(params: PhysicalParams) -> DerivedParams:
    """Wavenumbers, thermal velocity spread and the Doppler parameter ``b``."""
    if not isinstance(params, PhysicalParams):
        raise ConfigError("derive: expected PhysicalParams")
    k_s = 2 * math.pi / params.lambda_s
    k_i = 2 * math.pi / params.lambda_i
    sigma = math.sqrt(K_B * params.temperature / params.atom_mass)
    sign = params.scheme.sign
    kbar_si = k_s + sign * k_i
    ks = k_s * sigma / params.gamma3
    ki_signed = sign * k_i * sigma / params.gamma3
    kbar = ks + ki_signed
    # b = kbar^2 / (kbar^2 + 4/(sigma tau)^2), written with the scaled Doppler
    # width kbar*sigma/gamma3 so that T = 0 gives exactly 0
    x = (kbar * params.tau) ** 2
    b = x / (x + 4.0)
    return DerivedParams(
        params=params,
        k_s=k_s,
        k_i=k_i,
        sigma=sigma,
        kbar_si=kbar_si,
        b=b,
        gamma3N=params.gamma3N_ratio * params.gamma3,
        tau=params.tau,
        gammaN=params.gamma3N_ratio,
        ks=ks,
        ki_signed=ki_signed,
        kbar=kbar,
    )
