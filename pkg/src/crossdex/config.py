"""Experiment configuration and its TOML form.

Layout::

    [data]
    indexes = [{symbol = "NASDAQ", path = "data/nasdaq.csv"}, ...]

    [window]            # WindowConfig fields, all optional
    session_len = 120

    [models]
    kinds = ["AR", "LSTM_VEC"]
    epochs = 1000       # shared ForecasterSpec fields
    [models.overrides.LSTM_VEC]
    epochs = 200

    [experiment]
    seed = 0
    mu_shifts = [0.0, 0.02]
    output_dir = "results"
    threads = 1
    save_traces = true
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .models import KINDS, ForecasterSpec
from .windowing import PlanningError, WindowConfig

SCHEMA_VERSION = 1
THREADS_ENV = "CROSSDEX_THREADS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class IndexRef:
    symbol: str
    path: str


@dataclass(frozen=True)
class ExperimentConfig:
    indexes: tuple[IndexRef, ...]
    models: tuple[ForecasterSpec, ...]
    window: WindowConfig = WindowConfig()
    seed: int = 0
    mu_shifts: tuple[float, ...] = (0.0, 0.02)
    output_dir: str = "results"
    threads: int = 1
    save_traces: bool = True
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if not self.indexes:
            raise ConfigError("data.indexes: at least one index is required")
        if not self.models:
            raise ConfigError("models.kinds: at least one model is required")
        symbols = [i.symbol for i in self.indexes]
        if len(set(symbols)) != len(symbols):
            raise ConfigError("data.indexes: symbols must be unique")
        kinds = [m.kind for m in self.models]
        if len(set(kinds)) != len(kinds):
            raise ConfigError("models.kinds: each kind may appear once")
        if self.threads < 1:
            raise ConfigError("experiment.threads must be >= 1")

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(i.symbol for i in self.indexes)

    def resolve(self, ref: IndexRef) -> Path:
        p = Path(ref.path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def effective_threads(self) -> int:
        cap = os.environ.get(THREADS_ENV)
        if cap:
            try:
                return max(1, min(self.threads, int(cap)))
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
        return self.threads

    def echo(self) -> dict:
        """Result-relevant configuration (what the config hash covers)."""
        return {
            "schema_version": SCHEMA_VERSION,
            "indexes": [asdict(i) for i in self.indexes],
            "models": [asdict(m) for m in self.models],
            "window": asdict(self.window),
            "seed": self.seed,
            "mu_shifts": list(self.mu_shifts),
        }

    def config_hash(self) -> str:
        return hash_echo(self.echo())


def hash_echo(echo: dict) -> str:
    blob = json.dumps(echo, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _only(section: dict, allowed: set, where: str) -> None:
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(sorted(extra))}")


def config_from_dict(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    _only(doc, {"data", "window", "models", "experiment"}, "<root>")
    data = doc.get("data", {})
    _only(data, {"indexes"}, "data")
    refs = []
    for i, item in enumerate(data.get("indexes", [])):
        if not isinstance(item, dict) or set(item) != {"symbol", "path"}:
            raise ConfigError(f"data.indexes[{i}]: expected a table with 'symbol' and 'path'")
        refs.append(IndexRef(str(item["symbol"]), str(item["path"])))

    wdoc = doc.get("window", {})
    _only(wdoc, {f.name for f in fields(WindowConfig)}, "window")
    try:
        window = WindowConfig(**wdoc)
    except (PlanningError, TypeError) as exc:
        raise ConfigError(f"window: {exc}") from None

    mdoc = dict(doc.get("models", {}))
    kinds = mdoc.pop("kinds", None)
    overrides = mdoc.pop("overrides", {})
    spec_fields = {f.name for f in fields(ForecasterSpec)} - {"kind", "seed"}
    _only(mdoc, spec_fields, "models")
    if not kinds:
        raise ConfigError("models.kinds: at least one model is required")
    specs = []
    for i, kind in enumerate(kinds):
        if kind not in KINDS:
            raise ConfigError(f"models.kinds[{i}]: unknown kind {kind!r}")
        over = overrides.get(kind, {})
        _only(over, spec_fields, f"models.overrides.{kind}")
        try:
            specs.append(ForecasterSpec(kind=kind, **{**mdoc, **over}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"models.kinds[{i}] ({kind}): {exc}") from None
    unused = set(overrides) - set(kinds)
    if unused:
        raise ConfigError(f"models.overrides: no such kind in models.kinds: {', '.join(sorted(unused))}")

    edoc = doc.get("experiment", {})
    _only(edoc, {"seed", "mu_shifts", "output_dir", "threads", "save_traces"}, "experiment")
    try:
        return ExperimentConfig(
            indexes=tuple(refs),
            models=tuple(specs),
            window=window,
            seed=int(edoc.get("seed", 0)),
            mu_shifts=tuple(float(m) for m in edoc.get("mu_shifts", (0.0, 0.02))),
            output_dir=str(edoc.get("output_dir", "results")),
            threads=int(edoc.get("threads", 1)),
            save_traces=bool(edoc.get("save_traces", True)),
            base_dir=base_dir,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"experiment: {exc}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc, base_dir=str(path.parent))
