"""Run configuration: TOML file with environment-variable overrides.

Credentials (GSEO_LLM_API_KEY, GSEO_SEARCH_API_KEY) are read from the
environment only and never persisted in config snapshots.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from gseo.errors import ConfigError

ENV_CONFIG_PATH = "GSEO_CONFIG"
ENV_LLM_KEY = "GSEO_LLM_API_KEY"
ENV_SEARCH_KEY = "GSEO_SEARCH_API_KEY"

# Plain config keys overridable as GSEO_<UPPERCASED_FIELD>.
_ENV_OVERRIDABLE = ("backend", "model_id", "max_iterations", "tau", "rng_seed")


@dataclass(frozen=True)
class RunConfig:
    model_id: str = "gpt-4.1-mini"
    temperature_precise: float = 0.1
    temperature_creative: float = 0.6
    max_iterations: int = 10
    tau: float = 7.0
    retrieval_k: int = 5
    verification_k: int = 5
    n_query_candidates: int = 10
    examples_per_dim: int = 2
    plateau_epsilon: float = 0.05
    plateau_window: int = 2
    plateau_per_dimension: bool = False
    concurrency: int = 1
    rng_seed: int = 0
    backend: str = "mock"
    chat_fixture: str | None = None
    search_fixture: str | None = None
    llm_base_url: str = "https://api.openai.com/v1"
    search_base_url: str = "https://api.tavily.com"
    retry_max_attempts: int = 4
    retry_base_delay: float = 0.5

    def __post_init__(self) -> None:
        if self.backend not in ("live", "mock"):
            raise ConfigError(f"backend must be 'live' or 'mock', got {self.backend!r}")
        if not 0.0 <= self.temperature_precise <= 2.0:
            raise ConfigError("temperature_precise outside [0, 2]")
        if not 0.0 <= self.temperature_creative <= 2.0:
            raise ConfigError("temperature_creative outside [0, 2]")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if not 0.0 <= self.tau <= 10.0:
            raise ConfigError("tau must lie in [0, 10]")
        if self.retrieval_k < 1 or self.verification_k < 1:
            raise ConfigError("retrieval_k and verification_k must be >= 1")
        if self.n_query_candidates < 1:
            raise ConfigError("n_query_candidates must be >= 1")
        if self.examples_per_dim < 1:
            raise ConfigError("examples_per_dim must be >= 1")
        if self.plateau_epsilon < 0:
            raise ConfigError("plateau_epsilon must be >= 0")
        if self.plateau_window < 1:
            raise ConfigError("plateau_window must be >= 1")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        if self.retry_max_attempts < 1:
            raise ConfigError("retry_max_attempts must be >= 1")

    def require_fixtures(self) -> None:
        """Mock mode must name both fixture files; no silent empty backends."""
        if self.backend == "mock" and (not self.chat_fixture or not self.search_fixture):
            raise ConfigError(
                "mock backend requires chat_fixture and search_fixture paths"
            )


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> RunConfig:
    """Load config from TOML (explicit path, else $GSEO_CONFIG), then apply
    environment overrides. No file at all yields the defaults."""
    env = dict(os.environ if env is None else env)
    resolved = Path(path) if path else (
        Path(env[ENV_CONFIG_PATH]) if env.get(ENV_CONFIG_PATH) else None
    )
    values: dict = {}
    if resolved is not None:
        if not resolved.is_file():
            raise ConfigError(f"config file not found: {resolved}")
        with open(resolved, "rb") as fh:
            raw = tomllib.load(fh)
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(raw)

    config = RunConfig(**values)
    overrides: dict = {}
    for name in _ENV_OVERRIDABLE:
        env_name = f"GSEO_{name.upper()}"
        if env_name in env:
            overrides[name] = _coerce(env[env_name], type(getattr(config, name)))
    if overrides:
        config = replace(config, **overrides)
    return config


def _coerce(text: str, to: type):
    if to is bool:
        return text.strip().lower() in ("1", "true", "yes", "on")
    if to is int:
        return int(text)
    if to is float:
        return float(text)
    return text


def to_toml(config: RunConfig) -> str:
    """Deterministic TOML snapshot of a config, in field order."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, (int, float)):
            rendered = repr(value)
        else:
            rendered = '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"
