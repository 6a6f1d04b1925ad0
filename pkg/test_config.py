#!/usr/bin/env python3
"""
Tests for optimizer configuration layering and logging setup.
"""

import os
import sys
import json
import logging
import tempfile
from unittest.mock import patch

import pytest

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(__file__))

from config import (
    ConfigError,
    OptimizerConfig,
    configure_logging,
    default_jobs,
    env_overrides,
    load_optimizer_config,
    read_config_file,
)

CLEAN_ENV = {key: "" for key in (
    "EAQEC_MAX_OUTER_ITERS", "EAQEC_TOL_OUTER", "EAQEC_GAMMA_MAX_ITERS", "EAQEC_GAMMA_TOL",
    "EAQEC_RESTARTS", "EAQEC_SEED", "EAQEC_PSD_EPS",
)}


def test_defaults():
    config = OptimizerConfig()
    assert config.max_outer_iters == 500
    assert config.tol_outer == 1e-9
    assert config.restarts == 10
    assert config.seed == 0


def test_validation():
    for bad in ({"restarts": 0}, {"tol_outer": -1.0}, {"seed": -3}, {"max_outer_iters": True}):
        with pytest.raises(ConfigError):
            OptimizerConfig(**bad)


def test_overrides_skip_none_and_reject_unknown():
    config = OptimizerConfig().with_overrides(restarts=3, seed=None)
    assert config.restarts == 3 and config.seed == 0
    with pytest.raises(ConfigError, match="restart_count"):
        OptimizerConfig().with_overrides(restart_count=3)


def test_environment_overrides():
    with patch.dict(os.environ, dict(CLEAN_ENV, EAQEC_RESTARTS="4", EAQEC_TOL_OUTER="1e-7")):
        assert env_overrides() == {"restarts": 4, "tol_outer": 1e-7}
        config = load_optimizer_config()
    assert config.restarts == 4
    assert config.tol_outer == 1e-7

    with patch.dict(os.environ, dict(CLEAN_ENV, EAQEC_SEED="abc")):
        with pytest.raises(ConfigError, match="seed"):
            env_overrides()


def test_file_then_flags_priority():
    with tempfile.TemporaryDirectory() as tmp:
        json_path = os.path.join(tmp, "opt.json")
        with open(json_path, "w") as f:
            json.dump({"restarts": 2, "seed": 11}, f)
        toml_path = os.path.join(tmp, "opt.toml")
        with open(toml_path, "w") as f:
            f.write("[optimizer]\nmax_outer_iters = 40\ntol_outer = 1e-8\n")

        with patch.dict(os.environ, dict(CLEAN_ENV, EAQEC_RESTARTS="9")):
            config = load_optimizer_config(json_path, seed=5)
            assert (config.restarts, config.seed) == (2, 5)
            config = load_optimizer_config(toml_path)
            assert (config.max_outer_iters, config.tol_outer, config.restarts) == (40, 1e-8, 9)


def test_config_file_errors():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "bad.json")
        with open(path, "w") as f:
            json.dump({"restarts": 2, "learning_rate": 0.1}, f)
        with pytest.raises(ConfigError, match="learning_rate"):
            read_config_file(path)
        with open(path, "w") as f:
            f.write("{")
        with pytest.raises(ConfigError, match="parse"):
            read_config_file(path)
        with pytest.raises(ConfigError, match="read"):
            read_config_file(os.path.join(tmp, "missing.json"))


def test_default_jobs():
    with patch.dict(os.environ, {"EAQEC_JOBS": "3"}):
        assert default_jobs() == 3
    with patch.dict(os.environ, {"EAQEC_JOBS": "0"}):
        with pytest.raises(ConfigError):
            default_jobs()
    with patch.dict(os.environ, {"EAQEC_JOBS": ""}), patch("config.os.cpu_count", return_value=6):
        assert default_jobs() == 6


def test_configure_logging_writes_file():
    with tempfile.TemporaryDirectory() as tmp:
        log_path = os.path.join(tmp, "run.log")
        configure_logging("debug", log_path)
        logging.getLogger("eaqec.test").debug("[CONFIG] hello")
        for handler in logging.getLogger().handlers:
            handler.flush()
        with open(log_path) as f:
            content = f.read()
        assert " - eaqec.test - DEBUG - [CONFIG] hello" in content
        configure_logging("info", "")
        assert all(not isinstance(h, logging.FileHandler) for h in logging.getLogger().handlers)


def main():
    """Run all configuration tests"""
    print("🚀 CONFIGURATION TESTS")
    print("=" * 80)

    tests = [
        ("Defaults", test_defaults),
        ("Validation", test_validation),
        ("Overrides", test_overrides_skip_none_and_reject_unknown),
        ("Environment", test_environment_overrides),
        ("File Then Flags", test_file_then_flags_priority),
        ("Config File Errors", test_config_file_errors),
        ("Default Jobs", test_default_jobs),
        ("Logging Setup", test_configure_logging_writes_file),
    ]

    passed = 0
    for test_name, test_func in tests:
        try:
            test_func()
            print(f"✅ PASS: {test_name}")
            passed += 1
        except Exception as e:
            print(f"❌ FAIL: {test_name}: {type(e).__name__}: {e}")

    print("-" * 80)
    print(f"Total: {passed}/{len(tests)} tests passed")
    return passed == len(tests)


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
