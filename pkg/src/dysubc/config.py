"""Run configuration: ``key = value`` files overlaid by command-line flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .estimator import parse_variant


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    data: str = ""
    format: str = "0,1,2"  # column indices of source, target, timestamp
    out: str = "runs"
    seed: int = 42
    seeds: list = field(default_factory=list)  # empty = [seed]
    k: int = 20
    alpha: float = 10.0
    beta: float = 1.6
    lam: float = 0.5
    phi: float = 0.75
    varphi: float = 0.75
    lr: float = 0.001
    epochs: int = 800
    dim: int = 128
    batch_size: int = 0
    variant: str = "full"
    variants: list = field(default_factory=lambda: ["full", "-R", "-N-R", "-S-N-R"])
    hinge: str = "printed"
    shared_encoder: bool = True
    time_weights: bool = True
    patience: int = 10
    threads: int = 1
    deterministic: bool = False

    @property
    def columns(self) -> tuple[int, int, int]:
        cols = tuple(int(c) for c in self.format.split(","))
        if len(cols) != 3 or min(cols) < 0:
            raise ConfigError(f"format must list three column indices, got {self.format!r}")
        return cols  # type: ignore[return-value]

    @property
    def seed_list(self) -> list[int]:
        return list(self.seeds) if self.seeds else [self.seed]

    def model_params(self) -> dict:
        """Keyword arguments for :class:`~dysubc.estimator.DySubC`."""
        return dict(k=self.k, alpha=self.alpha, beta=self.beta, lam=self.lam, phi=self.phi,
                    varphi=self.varphi, lr=self.lr, epochs=self.epochs, dim=self.dim,
                    batch_size=self.batch_size, seed=self.seed, variant=self.variant,
                    time_weights=self.time_weights, hinge=self.hinge,
                    shared_encoder=self.shared_encoder, patience=self.patience,
                    n_jobs=1 if self.deterministic else self.threads)

    def dumps(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            key = "lambda" if f.name == "lam" else f.name
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def validate(self, need_data: bool = True) -> "RunConfig":
        if need_data:
            if not self.data:
                raise ConfigError("no dataset given (set 'data' or pass --data)")
            if not Path(self.data).is_file():
                raise ConfigError(f"dataset not found: {self.data}")
        if not self.seed_list:
            raise ConfigError("seed list is empty")
        parse_variant(self.variant)
        for v in self.variants:
            parse_variant(v)
        _ = self.columns
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_ALIASES = {"lambda": "lam", "batch-size": "batch_size", "shared-encoder": "shared_encoder",
            "time-weights": "time_weights"}


def _coerce(name: str, raw):
    default = _FIELDS[name].default
    if default is dataclasses.MISSING:
        default = _FIELDS[name].default_factory()  # type: ignore[misc]
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            return [int(x) for x in items] if name == "seeds" else items
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name} = {raw!r}") from exc
    return raw


def canonical_key(key: str) -> str:
    key = key.strip()
    key = _ALIASES.get(key, key)
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        name = canonical_key(key)
        values[name] = _coerce(name, raw)
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_config_text(text))
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        name = canonical_key(key)
        values[name] = _coerce(name, raw)
    return RunConfig(**values)
