"""
Run configuration in INI form.

Example (every key optional; shown values are the defaults)::

    [grid]
    length = 40pi          ; plain number, "40pi" or "40*pi"
    n = 512

    [kdv]
    profile = soliton      ; soliton | samples | zero
    k = 0.5
    samples =              ; file with n values (np.loadtxt) when profile = samples

    [time]
    T = 1.0
    dt = 0.0025
    stride = 1             ; fluid snapshot stride

    [sweep]
    epsilon = 0.1, 0.05, 0.025, 0.0125
    beta = 0.5, 1.0, 1.5   ; nu = eps^beta
    nu =                   ; explicit nu values; overrides beta when set

    [transport]
    model = constant       ; constant | sqrt

    [regime]
    c0 = 0.25
    c1 = 0.01

    [tolerances]
    antideriv_mean = 1e-8

    [output]
    dir = ionkdv-out
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .fluid import TransportCoeffs


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


_PI = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*pi\s*$")

_KNOWN = {
    "grid": {"length", "n"},
    "kdv": {"profile", "k", "samples"},
    "time": {"t", "dt", "stride"},
    "sweep": {"epsilon", "beta", "nu"},
    "transport": {"model"},
    "regime": {"c0", "c1"},
    "tolerances": {"antideriv_mean"},
    "output": {"dir"},
}


def parse_length(text: str) -> float:
    m = _PI.match(text)
    if not m:
        return float(text)
    coef = {"": 1.0, "+": 1.0, "-": -1.0}.get(m.group(1))
    return (float(m.group(1)) if coef is None else coef) * math.pi


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)


@dataclass(frozen=True)
class RunConfig:
    length: float = 40.0 * math.pi
    n: int = 512
    profile: str = "soliton"
    k: float = 0.5
    samples: tuple[float, ...] | None = None
    T: float = 1.0
    dt: float = 0.0025
    stride: int = 1
    epsilons: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    betas: tuple[float, ...] | None = (0.5, 1.0, 1.5)
    nus: tuple[float, ...] | None = None
    transport: str = "constant"
    c0: float = 0.25
    c1: float = 0.01
    antideriv_mean_tol: float = 1e-8
    out_dir: str = "ionkdv-out"

    def __post_init__(self) -> None:
        problems = []
        if not (self.length > 0 and math.isfinite(self.length)):
            problems.append("grid length must be positive")
        if self.n < 8 or self.n % 2:
            problems.append("grid n must be even and >= 8")
        if self.profile not in ("soliton", "samples", "zero"):
            problems.append(f"unknown kdv profile {self.profile!r}")
        if self.profile == "soliton" and not self.k > 0:
            problems.append("soliton k must be positive")
        if self.profile == "samples" and (self.samples is None or len(self.samples) != self.n):
            problems.append("samples profile needs exactly n values")
        if not self.T > 0:
            problems.append("T must be positive")
        if not self.dt > 0:
            problems.append("dt must be positive")
        elif abs(round(self.T / self.dt) * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            problems.append("T must be an integer multiple of dt")
        if self.stride < 1:
            problems.append("stride must be >= 1")
        if any(not (0.0 < e < 1.0) for e in self.epsilons):
            problems.append("every epsilon must lie in (0, 1)")
        if self.nus is None and self.betas is None:
            problems.append("one of beta or nu must be given")
        if self.nus is not None and any(v <= 0 for v in self.nus):
            problems.append("nu values must be positive")
        if self.transport not in ("constant", "sqrt"):
            problems.append(f"unknown transport model {self.transport!r}")
        if not (0.0 < self.c0 < 0.5) or not (0.0 < self.c1 < 1.0):
            problems.append("need 0 < c0 < 1/2 and 0 < c1 < 1")
        if problems:
            raise ConfigError("; ".join(problems))

    # -- derived ----------------------------------------------------------

    def coeffs(self) -> TransportCoeffs:
        return TransportCoeffs.from_name(self.transport)

    def cases(self) -> list[tuple[float, float, float | None]]:
        """``(epsilon, nu, beta)`` triples, sorted by epsilon then nu."""
        out = []
        for e in self.epsilons:
            if self.nus is not None:
                out += [(e, nu, math.log(nu) / math.log(e)) for nu in self.nus]
            else:
                out += [(e, math.exp(b * math.log(e)), b) for b in self.betas]
        return sorted(set(out), key=lambda c: (c[0], c[1]))

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("samples", "epsilons", "betas", "nus"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (output directory excluded)."""
        d = self.to_dict()
        d.pop("out_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    # -- parsing ------------------------------------------------------------

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser, base: Path | None = None) -> "RunConfig":
        for section in cp.sections():
            if section not in _KNOWN:
                raise ConfigError(f"unknown section [{section}]")
            extra = set(cp[section]) - _KNOWN[section]
            if extra:
                raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(extra))}")

        def get(section, key, conv, default):
            raw = cp.get(section, key, fallback="").strip()
            if raw == "":
                return default
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None

        d = cls()
        samples = None
        profile = get("kdv", "profile", str, d.profile)
        if profile == "samples":
            path = get("kdv", "samples", str, None)
            if path is None:
                raise ConfigError("[kdv] profile = samples needs a samples file")
            p = Path(path)
            if base is not None and not p.is_absolute():
                p = base / p
            try:
                samples = tuple(float(v) for v in np.loadtxt(p).ravel())
            except OSError as exc:
                raise ConfigError(f"cannot read samples file {p}: {exc}") from None
        nus = get("sweep", "nu", _floats, None)
        return cls(
            length=get("grid", "length", parse_length, d.length),
            n=get("grid", "n", int, d.n),
            profile=profile,
            k=get("kdv", "k", float, d.k),
            samples=samples,
            T=get("time", "t", float, d.T),
            dt=get("time", "dt", float, d.dt),
            stride=get("time", "stride", int, d.stride),
            epsilons=get("sweep", "epsilon", _floats, d.epsilons),
            betas=None if nus is not None else get("sweep", "beta", _floats, d.betas),
            nus=nus,
            transport=get("transport", "model", str, d.transport),
            c0=get("regime", "c0", float, d.c0),
            c1=get("regime", "c1", float, d.c1),
            antideriv_mean_tol=get("tolerances", "antideriv_mean", float, d.antideriv_mean_tol),
            out_dir=get("output", "dir", str, d.out_dir),
        )

    @classmethod
    def from_string(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        return cls.from_parser(cp)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        return cls.from_parser(cp, base=path.parent)
