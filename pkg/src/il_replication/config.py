"""Flat ``key = value`` experiment configuration.

Keys use dotted sections, e.g. ``heston.kappa = 0.4``. Every key can also be
overridden from the command line with a flag of the same name
(``--heston.kappa 0.5``). Blank lines and ``#`` comments are ignored.

Positions are declared as ``position.<name>.<field>`` with fields ``side``,
``lower``, ``upper``, ``liquidity`` and ``entry``. Declaring any position
replaces the command's default positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from .amm import Position, PriceInterval, Side
from .errors import ConfigError, DomainError
from .gbm import GbmParams
from .heston import HestonParams, McConfig

# Reference replication magnitudes only appear with a horizon of 7 in the
# same (annual) units as the model parameters, not 7/365.
TABLE1_HORIZON = 7.0
FIGURE1_HORIZON = 30 / 365

_COMMON = {
    "model": "heston",
    "gbm.sigma": "0.7",
    "gbm.spot": "10",
    "heston.mu": "0.1",
    "heston.kappa": "0.4",
    "heston.theta": "0.4",
    "heston.xi": "0.15",
    "heston.rho": "-0.3",
    "heston.v0": "0.3",
    "heston.spot": "10",
    "mc.paths": "1000000",
    "mc.steps": "256",
    "mc.seed": "20220513",
    "mc.workers": "0",
    "mc.shared_paths": "true",
    "quadrature.strikes": "1001",
    "quadrature.adaptive_split": "false",
    "il.exit_prices": "10, 12, 20",
    "figure1.sigma_min": "0.05",
    "figure1.sigma_max": "1.5",
    "figure1.sigma_points": "50",
    "figure1.t_max": "1",
    "figure1.t_points": "50",
    "hedge.maturity_tolerance": str(0.5 / 365),
}

_TABLE1_POSITIONS = {
    "position.right.side": "right",
    "position.right.lower": "11",
    "position.right.upper": "14",
    "position.left.side": "left",
    "position.left.lower": "6",
    "position.left.upper": "9",
}

_FIGURE1_POSITIONS = {
    "position.right.side": "right",
    "position.right.lower": "11",
    "position.right.upper": "12",
    "position.left.side": "left",
    "position.left.lower": "8",
    "position.left.upper": "9",
}

COMMAND_DEFAULTS = {
    "il": {**_COMMON, **_TABLE1_POSITIONS, "horizon": str(TABLE1_HORIZON)},
    "table1": {**_COMMON, **_TABLE1_POSITIONS, "horizon": str(TABLE1_HORIZON)},
    "figure1": {**_COMMON, **_FIGURE1_POSITIONS, "model": "gbm", "horizon": repr(FIGURE1_HORIZON)},
    "hedge": {**_COMMON, **_TABLE1_POSITIONS, "model": "gbm", "horizon": repr(FIGURE1_HORIZON)},
}

_POSITION_FIELDS = ("side", "lower", "upper", "liquidity", "entry")


@dataclass(frozen=True)
class Entry:
    value: str
    origin: str  # "file:line", "command line" or "default"


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Entry]:
    entries: dict[str, Entry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(c.isspace() for c in key):
            raise ConfigError(f"{source}:{lineno}: invalid key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{lineno}: key {key!r} has no value")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set at {entries[key].origin})")
        entries[key] = Entry(value, f"{source}:{lineno}")
    return entries


def read_config_file(path: str) -> dict[str, Entry]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, path)


@dataclass(frozen=True)
class NamedPosition:
    name: str
    position: Position

    @property
    def side(self) -> Side:
        return self.position.side

    @property
    def interval(self) -> PriceInterval:
        return self.position.interval


@dataclass(frozen=True)
class Figure1Grid:
    sigma_min: float
    sigma_max: float
    sigma_points: int
    t_max: float
    t_points: int


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    horizon: float
    gbm: GbmParams
    heston: HestonParams
    positions: tuple[NamedPosition, ...]
    mc: McConfig
    workers: Optional[int]
    shared_paths: bool
    n_strikes: int
    adaptive_split: bool
    exit_prices: tuple[float, ...]
    figure1: Figure1Grid
    maturity_tolerance: float

    @property
    def spot(self) -> float:
        return self.gbm.spot if self.model == "gbm" else self.heston.spot


class _Reader:
    """Typed access to merged entries with errors naming the key and its origin."""

    def __init__(self, entries: Mapping[str, Entry]):
        self.entries = entries

    def _fail(self, key: str, message: str) -> ConfigError:
        entry = self.entries.get(key)
        where = f" [{entry.origin}]" if entry else ""
        return ConfigError(f"{key}: {message}{where}")

    def raw(self, key: str) -> str:
        if key not in self.entries:
            raise ConfigError(f"{key}: missing required key")
        return self.entries[key].value

    def real(self, key: str, positive: bool = False) -> float:
        text = self.raw(key)
        try:
            value = float(text)
        except ValueError:
            raise self._fail(key, f"expected a number, got {text!r}") from None
        if not math.isfinite(value):
            raise self._fail(key, f"expected a finite number, got {text!r}")
        if positive and not value > 0:
            raise self._fail(key, f"must be positive, got {text}")
        return value

    def integer(self, key: str, minimum: int) -> int:
        text = self.raw(key)
        try:
            value = int(text)
        except ValueError:
            raise self._fail(key, f"expected an integer, got {text!r}") from None
        if value < minimum:
            raise self._fail(key, f"must be >= {minimum}, got {value}")
        return value

    def flag(self, key: str) -> bool:
        text = self.raw(key).lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        raise self._fail(key, f"expected true/false, got {text!r}")

    def build(self, key: str, factory, **kwargs):
        try:
            return factory(**kwargs)
        except DomainError as exc:
            raise self._fail(key, str(exc)) from None


def _positions(r: _Reader, spot: float) -> tuple[NamedPosition, ...]:
    names: list[str] = []
    for key in r.entries:
        parts = key.split(".")
        if parts[0] != "position":
            continue
        if len(parts) != 3 or parts[2] not in _POSITION_FIELDS:
            raise r._fail(key, f"expected position.<name>.{{{','.join(_POSITION_FIELDS)}}}")
        if parts[1] not in names:
            names.append(parts[1])
    out = []
    for name in names:
        prefix = f"position.{name}."
        side_key = prefix + "side"
        try:
            side = Side.parse(r.raw(side_key))
        except DomainError as exc:
            raise r._fail(side_key, str(exc)) from None
        interval = r.build(prefix + "lower", PriceInterval, lower=r.real(prefix + "lower", positive=True),
                           upper=r.real(prefix + "upper", positive=True))
        liquidity = r.real(prefix + "liquidity", positive=True) if prefix + "liquidity" in r.entries else 1.0
        entry = r.real(prefix + "entry", positive=True) if prefix + "entry" in r.entries else spot
        position = r.build(prefix + "entry", Position, liquidity=liquidity, interval=interval,
                           entry_price=entry, side=side)
        out.append(NamedPosition(name, position))
    if not out:
        raise ConfigError("no positions configured")
    return tuple(out)


def build_config(command: str, file_entries: Mapping[str, Entry] = {}, overrides: Mapping[str, str] = {}) -> ExperimentConfig:
    """Merge command defaults, file entries and overrides, then validate everything."""
    defaults = COMMAND_DEFAULTS[command]
    user_keys = set(file_entries) | set(overrides)
    if any(k.startswith("position.") for k in user_keys):
        defaults = {k: v for k, v in defaults.items() if not k.startswith("position.")}
    merged: dict[str, Entry] = {k: Entry(v, "default") for k, v in defaults.items()}
    merged.update(file_entries)
    merged.update({k: Entry(v, "command line") for k, v in overrides.items()})
    known = set(COMMAND_DEFAULTS[command]) | {"horizon"}
    for key in merged:
        if key not in known and not key.startswith("position."):
            raise ConfigError(f"{key}: unknown key [{merged[key].origin}]")

    r = _Reader(merged)
    model = r.raw("model").lower()
    if model not in ("gbm", "heston"):
        raise r._fail("model", f"expected 'gbm' or 'heston', got {model!r}")
    horizon = r.real("horizon", positive=True)
    gbm = r.build("gbm.sigma", GbmParams, sigma=r.real("gbm.sigma", positive=True), horizon=horizon,
                  spot=r.real("gbm.spot", positive=True))
    heston_kw = {name: r.real(f"heston.{name}") for name in ("mu", "kappa", "theta", "xi", "rho", "v0")}
    heston_kw["spot"] = r.real("heston.spot", positive=True)
    for name in ("kappa", "theta", "xi", "v0"):
        if heston_kw[name] < 0:
            raise r._fail(f"heston.{name}", f"must be nonnegative, got {heston_kw[name]}")
    if abs(heston_kw["rho"]) > 1:
        raise r._fail("heston.rho", f"must lie in [-1, 1], got {heston_kw['rho']}")
    heston = HestonParams(**heston_kw)
    spot = gbm.spot if model == "gbm" else heston.spot
    positions = _positions(r, spot)

    seed = r.integer("mc.seed", 0)
    if seed >= 2**64:
        raise r._fail("mc.seed", "must fit in 64 bits")
    mc = McConfig(n_paths=r.integer("mc.paths", 1), n_steps=r.integer("mc.steps", 1), seed=seed)
    workers = r.integer("mc.workers", 0) or None

    exit_key = "il.exit_prices"
    try:
        exit_prices = tuple(float(p) for p in r.raw(exit_key).split(",") if p.strip())
    except ValueError:
        raise r._fail(exit_key, "expected a comma-separated list of prices") from None
    if not exit_prices or any(not p > 0 for p in exit_prices):
        raise r._fail(exit_key, "exit prices must be positive")

    fig = Figure1Grid(
        sigma_min=r.real("figure1.sigma_min", positive=True),
        sigma_max=r.real("figure1.sigma_max", positive=True),
        sigma_points=r.integer("figure1.sigma_points", 2),
        t_max=r.real("figure1.t_max", positive=True),
        t_points=r.integer("figure1.t_points", 2),
    )
    if fig.sigma_min >= fig.sigma_max:
        raise r._fail("figure1.sigma_max", "must exceed figure1.sigma_min")

    return ExperimentConfig(
        model=model,
        horizon=horizon,
        gbm=gbm,
        heston=heston,
        positions=positions,
        mc=mc,
        workers=workers,
        shared_paths=r.flag("mc.shared_paths"),
        n_strikes=r.integer("quadrature.strikes", 2),
        adaptive_split=r.flag("quadrature.adaptive_split"),
        exit_prices=exit_prices,
        figure1=fig,
        maturity_tolerance=r.real("hedge.maturity_tolerance"),
    )
