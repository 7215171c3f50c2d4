import os

import pytest
from hypothesis import HealthCheck, settings

from subgrowth import numtheory
from subgrowth.config import RunConfig

settings.register_profile("default", max_examples=50, deadline=None)
settings.register_profile(
    "ci", max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def cache_dir(tmp_path):
    d = tmp_path / "cache"
    d.mkdir()
    return d


@pytest.fixture
def run_config(cache_dir):
    return RunConfig(cache_dir=cache_dir, threads=2)


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    for var in ("SUBGROWTH_CONFIG", "SUBGROWTH_CACHE_DIR", "SUBGROWTH_THREADS", "SUBGROWTH_LOGLEVEL"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.setenv("HOME", str(tmp_path / "home"))


@pytest.fixture(autouse=True)
def fresh_prime_tables():
    numtheory._TABLES.clear()
    yield
    numtheory._TABLES.clear()
