"""
Run configuration: defaults, JSON settings file, env overrides.

Resolution order is defaults -> settings.json -> environment -> CLI flags.
The settings file lives at $SUBGROWTH_CONFIG (default <cache_dir>/settings.json).
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import InvalidArgument

LOG = logging.getLogger("subgrowth.config")

# ----------------------------
# Defaults
# ----------------------------
DEFAULT_CACHE_DIR = Path(os.path.expanduser("~")) / ".cache" / "subgrowth"
OUTPUT_FORMATS = ("json", "csv")

DEFAULT_SETTINGS: Dict[str, Any] = {
    "group_order_cap": 5000,
    "search_budget": 2_000_000,
    "sieve_limit_cap": 200_000_000,
    "lattice_cap": 10_000,
    "output_format": "json",
    "threads": 4,
}


@dataclass(frozen=True)
class RunConfig:
    cache_dir: Path = DEFAULT_CACHE_DIR
    group_order_cap: int = DEFAULT_SETTINGS["group_order_cap"]
    search_budget: int = DEFAULT_SETTINGS["search_budget"]
    sieve_limit_cap: int = DEFAULT_SETTINGS["sieve_limit_cap"]
    lattice_cap: int = DEFAULT_SETTINGS["lattice_cap"]
    output_format: str = DEFAULT_SETTINGS["output_format"]
    threads: int = DEFAULT_SETTINGS["threads"]

    def validate(self) -> "RunConfig":
        for name in ("group_order_cap", "search_budget", "sieve_limit_cap", "lattice_cap", "threads"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise InvalidArgument(f"{name} must be a positive integer, got {value!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise InvalidArgument(f"output_format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}")
        return self

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with every non-None override applied."""
        given = {k: v for k, v in overrides.items() if v is not None}
        if "cache_dir" in given:
            given["cache_dir"] = Path(given["cache_dir"])
        return replace(self, **given).validate()

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["cache_dir"] = str(self.cache_dir)
        return data


def settings_path(cache_dir: Optional[Path] = None) -> Path:
    env = os.getenv("SUBGROWTH_CONFIG")
    if env:
        return Path(env)
    return Path(cache_dir or DEFAULT_CACHE_DIR) / "settings.json"


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", encoding="utf-8", dir=path.parent, delete=False) as tmp:
        tmp.write(text)
        tmp.flush()
        os.fsync(tmp.fileno())
        tmp_name = tmp.name
    shutil.move(tmp_name, path)


def load_settings(path: Path) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    try:
        if path.exists():
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            if not isinstance(data, dict):
                LOG.warning("Ignoring settings file %s: top level is not an object", path)
                data = {}
    except (OSError, json.JSONDecodeError) as e:
        LOG.warning("Error loading settings from %s: %s", path, e)
        data = {}
    for k, v in DEFAULT_SETTINGS.items():
        data.setdefault(k, v)
    return data


def load_config(cache_dir: Optional[str] = None, path: Optional[Path] = None) -> RunConfig:
    """Build a validated RunConfig from settings file and environment."""
    base_dir = Path(cache_dir or os.getenv("SUBGROWTH_CACHE_DIR") or DEFAULT_CACHE_DIR)
    data = load_settings(Path(path) if path else settings_path(base_dir))

    known = {f.name for f in fields(RunConfig)}
    kwargs = {k: v for k, v in data.items() if k in known and k != "cache_dir"}
    if cache_dir is None and "cache_dir" in data and not os.getenv("SUBGROWTH_CACHE_DIR"):
        base_dir = Path(data["cache_dir"])

    threads = os.getenv("SUBGROWTH_THREADS")
    if threads:
        try:
            kwargs["threads"] = int(threads)
        except ValueError:
            raise InvalidArgument(f"SUBGROWTH_THREADS must be an integer, got {threads!r}") from None

    cfg = RunConfig(cache_dir=base_dir, **kwargs)
    LOG.debug("Loaded config %s", cfg)
    return cfg.validate()


def save_config(cfg: RunConfig, path: Optional[Path] = None) -> Path:
    target = path or settings_path(cfg.cache_dir)
    _atomic_write_text(target, json.dumps(cfg.validate().to_dict(), indent=2, sort_keys=True))
    LOG.info("Saved settings to %s", target)
    return target
