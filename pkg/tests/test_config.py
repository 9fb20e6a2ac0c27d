"""
Tests for environment-backed settings and command-line overrides.
"""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from robinkit.config import get_settings, override_settings, reset_settings


def test_defaults():
    settings = get_settings()

    assert settings.tol == 1e-8
    assert settings.grid_h == 1.0 / 32.0
    assert settings.max_iter == 100_000
    assert settings.seed == 42
    assert settings.log_level == "INFO"


def test_environment_values_are_read(monkeypatch):
    monkeypatch.setenv("ROBINKIT_GRID_H", "1/16")
    monkeypatch.setenv("ROBINKIT_SEED", "7")
    monkeypatch.setenv("ROBINKIT_LOG_LEVEL", "debug")
    reset_settings()

    settings = get_settings()

    assert settings.grid_h == 1.0 / 16.0
    assert settings.seed == 7
    assert settings.log_level == "DEBUG"


def test_overrides_win_over_environment(monkeypatch):
    monkeypatch.setenv("ROBINKIT_TOL", "1e-6")
    reset_settings()

    settings = override_settings(tol=1e-10, seed=None)

    assert settings.tol == 1e-10
    assert settings.seed == 42
    assert get_settings() is settings


def test_invalid_values_are_rejected(monkeypatch):
    monkeypatch.setenv("ROBINKIT_MAX_ITER", "0")
    reset_settings()

    with pytest.raises(ValidationError):
        get_settings()


def test_settings_are_frozen():
    with pytest.raises(ValidationError):
        get_settings().tol = 1.0


def test_zero_denominator_in_the_environment(monkeypatch):
    monkeypatch.setenv("ROBINKIT_GRID_H", "1/0")
    reset_settings()

    with pytest.raises(ValueError, match="zero denominator"):
        get_settings()
