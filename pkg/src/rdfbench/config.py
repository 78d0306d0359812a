"""Run configuration: dataclass defaults, YAML file, environment, then --set overrides."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import yaml

ENV_PREFIX = "RDFBENCH_"


class ConfigError(ValueError):
    error_class = "config-error"

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ProviderConfig:
    kind: str = "mock"  # mock | http
    endpoint: str = "http://localhost:11434"
    model: str = "qwen3:4b-instruct"
    path: str = "/api/chat"
    timeout: float = 120.0
    max_retries: int = 2
    fault_rate: float = 0.0
    variant_rate: float = 0.3


@dataclass
class EmbeddingConfig:
    kind: str = "mock"  # mock | http
    endpoint: str = "http://localhost:11434"
    model: str = "bge-m3"
    path: str = "/api/embed"
    timeout: float = 60.0
    dim: int = 64
    cache: bool = True


@dataclass
class RunConfig:
    templates_per_category: int = 5
    seeds_per_template: int = 8
    phase2_seeds_per_category: int = 20
    phase3_targets_per_category: int = 50
    reverse_row_cap: int = 25
    retrieval_k: int = 2
    result_cap: int = 5
    dedup_threshold: float = 0.99
    reverse_timeout: float = 20.0
    exec_timeout: float = 20.0
    seed: int = 42
    stall_limit: int = 10
    repair_budget: int = 2
    enforce_patterns: bool = True
    parallelism: int = 1
    template_retry_budget: int = 3
    candidate_budget_factor: int = 10
    categories: list[str] = field(default_factory=list)
    slice: str = "data/synthetic_slice.nt"
    artifacts_dir: str = "artifacts/runs"
    phase1_review: Optional[str] = None
    phase2_review: Optional[str] = None
    paraphrase: bool = False
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)

    def validate(self) -> "RunConfig":
        for name in (
            "templates_per_category",
            "seeds_per_template",
            "phase2_seeds_per_category",
            "phase3_targets_per_category",
            "reverse_row_cap",
            "retrieval_k",
            "result_cap",
            "stall_limit",
            "parallelism",
            "template_retry_budget",
            "candidate_budget_factor",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.repair_budget < 0:
            raise ConfigError("repair_budget", "must be >= 0")
        if not 0.0 < self.dedup_threshold <= 1.0:
            raise ConfigError("dedup_threshold", "must lie in (0, 1]")
        if self.reverse_timeout <= 0 or self.exec_timeout <= 0:
            raise ConfigError("reverse_timeout", "timeouts must be positive")
        if not 0.0 <= self.provider.fault_rate <= 1.0:
            raise ConfigError("provider.fault_rate", "must lie in [0, 1]")
        if self.provider.kind not in ("mock", "http"):
            raise ConfigError("provider.kind", f"unknown provider {self.provider.kind!r}")
        if self.embedding.kind not in ("mock", "http"):
            raise ConfigError("embedding.kind", f"unknown provider {self.embedding.kind!r}")
        from .policy import Category

        for c in self.categories:
            try:
                Category(c)
            except ValueError:
                raise ConfigError("categories", f"unknown category {c!r}") from None
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(key: str, value: Any, target_type: Any, current: Any) -> Any:
    if isinstance(current, bool) or target_type is bool or target_type == "bool":
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(key, f"expected a boolean, got {value!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        try:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected an integer, got {value!r}") from None
    if isinstance(current, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected a number, got {value!r}") from None
    if isinstance(current, list):
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return [str(v) for v in value]
    if value is None:
        return None
    return str(value)


def _apply(obj: Any, data: Mapping[str, Any], prefix: str = "") -> None:
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in data.items():
        full = f"{prefix}{key}"
        if key not in names:
            raise ConfigError(full, "unknown configuration key")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, Mapping):
                raise ConfigError(full, "expected a mapping")
            _apply(current, value, prefix=f"{full}.")
        else:
            setattr(obj, key, _coerce(full, value, names[key].type, current))


def set_key(cfg: RunConfig, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    data: Any = value
    for part in reversed(parts):
        data = {part: data}
    _apply(cfg, data)


def parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    value = yaml.safe_load(raw) if raw.strip() else ""
    return key.strip(), value


def env_overrides(environ: Mapping[str, str]) -> list[tuple[str, str]]:
    """``SEED`` plus ``RDFBENCH_<KEY>``; a double underscore nests (``RDFBENCH_PROVIDER__ENDPOINT``)."""
    out = []
    if "SEED" in environ:
        out.append(("seed", environ["SEED"]))
    for name in sorted(environ):
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower().replace("__", ".")
            out.append((key, environ[name]))
    return out


def load_config(
    path: Optional[str | Path] = None,
    overrides: Sequence[str] = (),
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(str(p), f"cannot read config file: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(str(p), f"invalid YAML: {exc}") from exc
        if not isinstance(data, Mapping):
            raise ConfigError(str(p), "top level must be a mapping")
        _apply(cfg, data)
    env = os.environ if environ is None else environ
    for key, value in env_overrides(env):
        set_key(cfg, key, value)
    for item in overrides:
        key, value = parse_override(item)
        set_key(cfg, key, value)
    return cfg.validate()
