#!/usr/bin/env python3
"""
Configuration for optimizer runs and process-wide logging.

Values come from, in increasing priority: dataclass defaults, ``EAQEC_*``
environment variables (a ``.env`` file is honoured), a JSON or TOML config file,
and explicit overrides from the command line.
"""

import os
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

ENV_KEYS = {
    "max_outer_iters": "EAQEC_MAX_OUTER_ITERS",
    "tol_outer": "EAQEC_TOL_OUTER",
    "gamma_max_iters": "EAQEC_GAMMA_MAX_ITERS",
    "gamma_tol": "EAQEC_GAMMA_TOL",
    "restarts": "EAQEC_RESTARTS",
    "seed": "EAQEC_SEED",
    "psd_eps": "EAQEC_PSD_EPS",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    max_outer_iters: int = 500
    tol_outer: float = 1e-9
    gamma_max_iters: int = 2000
    gamma_tol: float = 1e-10
    restarts: int = 10
    seed: int = 0
    psd_eps: float = 1e-12

    def __post_init__(self):
        for name in ("max_outer_iters", "gamma_max_iters", "restarts"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name}: expected an integer >= 1, got {value!r}")
        for name in ("tol_outer", "gamma_tol", "psd_eps"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
                raise ConfigError(f"{name}: expected a positive tolerance, got {value!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed: expected a 64-bit non-negative integer, got {self.seed!r}")

    def with_overrides(self, **overrides) -> "OptimizerConfig":
        """Copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown optimizer setting(s): {', '.join(sorted(unknown))}")
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _coerce(name: str, raw: str) -> Any:
    target = {f.name: f.type for f in fields(OptimizerConfig)}[name]
    try:
        if target in (int, "int"):
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}")


def env_overrides() -> Dict[str, Any]:
    values = {}
    for name, key in ENV_KEYS.items():
        raw = os.getenv(key)
        if raw is not None and raw.strip():
            values[name] = _coerce(name, raw.strip())
    if values:
        logger.debug(f"[CONFIG] environment overrides: {values}")
    return values


def read_config_file(path: str) -> Dict[str, Any]:
    """Read optimizer settings from ``.json`` or ``.toml``; keys mirror OptimizerConfig."""
    try:
        if path.endswith(".toml"):
            with open(path, "rb") as f:
                data = tomllib.load(f)
        else:
            with open(path, "r") as f:
                data = json.load(f)
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e}")
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"config: cannot parse {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"config: {path} must contain a table/object")
    # a TOML file may keep the settings under an [optimizer] table
    data = data.get("optimizer", data)
    known = {f.name for f in fields(OptimizerConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"config: unknown key(s) {', '.join(sorted(unknown))} in {path}")
    return dict(data)


def load_optimizer_config(path: Optional[str] = None, **overrides) -> OptimizerConfig:
    config = OptimizerConfig().with_overrides(**env_overrides())
    if path:
        config = config.with_overrides(**read_config_file(path))
        logger.info(f"[CONFIG] loaded optimizer settings from {path}")
    return config.with_overrides(**overrides)


def default_jobs() -> int:
    raw = os.getenv("EAQEC_JOBS")
    if raw:
        try:
            jobs = int(raw)
        except ValueError:
            raise ConfigError(f"EAQEC_JOBS: cannot parse {raw!r}")
        if jobs < 1:
            raise ConfigError(f"EAQEC_JOBS: expected >= 1, got {jobs}")
        return jobs
    return os.cpu_count() or 1


def configure_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """Stderr plus an appending log file, the same layout for every entry point."""
    level_name = (level or os.getenv("EAQEC_LOG_LEVEL", "INFO")).upper()
    handlers = [logging.StreamHandler()]
    log_path = log_file if log_file is not None else os.getenv("EAQEC_LOG_FILE", "eaqec.log")
    if log_path:
        handlers.append(logging.FileHandler(log_path, mode='a'))
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
