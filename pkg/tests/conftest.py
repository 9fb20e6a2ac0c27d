"""
Pytest fixtures: dimensional constants, balls, voxel domains, closed-form
evaluators and a CLI runner that isolates settings per test.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from robinkit.config import reset_settings
from robinkit.geometry import VoxelDomain, make_constants, voxelize_ball
from robinkit.models import BallDomain, BallSpec, ChargeConfig, GammaKind

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

ENV_KEYS = (
    "ROBINKIT_TOL",
    "ROBINKIT_GRID_H",
    "ROBINKIT_MAX_ITER",
    "ROBINKIT_SEED",
    "ROBINKIT_LOG_LEVEL",
    "ROBINKIT_FLUX_TOL",
)


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Every test starts from the built-in defaults."""
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def c3():
    return make_constants(3)


@pytest.fixture
def lam3():
    return 1.0 / (4.0 * math.pi)


@pytest.fixture
def unit_ball():
    return BallSpec(center=[0.0, 0.0, 0.0], radius=1.0)


@pytest.fixture
def make_ball():
    def _make(center, radius, gamma=GammaKind.FULL, **kwargs) -> BallDomain:
        return BallDomain(center=list(center), radius=radius, gamma=gamma, **kwargs)

    return _make


@pytest.fixture
def make_charges():
    def _make(points, weights) -> ChargeConfig:
        return ChargeConfig(points=[list(p) for p in points], weights=list(weights))

    return _make


@pytest.fixture
def voxel_ball():
    """Unit ball at h = 1/8 with Γ = ∂D."""
    return voxelize_ball(BallSpec(center=[0.0, 0.0, 0.0], radius=1.0), 0.125)


@pytest.fixture
def voxel_box():
    """A 6x6x6 cube of cells at h = 1/4 with no Dirichlet facets."""
    occupancy = np.ones((6, 6, 6), dtype=bool)
    dirichlet = np.zeros((6, 6, 6, 6), dtype=bool)
    return VoxelDomain(origin=np.zeros(3), h=0.25, occupancy=occupancy, dirichlet=dirichlet)


@pytest.fixture
def config_path():
    def _path(name: str) -> Path:
        return CONFIGS / name

    return _path


@pytest.fixture
def run_cli(tmp_path, capsys):
    """Run the CLI in-process; returns (exit code, JSON payload or None, stdout)."""
    from robinkit.main import run

    def _run(*argv: str, out: bool = True):
        args = list(argv)
        out_path = tmp_path / "out.json"
        if out:
            args += ["--out", str(out_path)]
        code = run(args)
        captured = capsys.readouterr()
        payload = json.loads(out_path.read_text()) if out and out_path.exists() else None
        return code, payload, captured.out

    return _run
