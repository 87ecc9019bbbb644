"""Backend endpoint configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

MOCK_SCHEME = "mock://"


@dataclass(frozen=True)
class BackendConfig:
    name: str
    base_url: str
    model: str
    api_key_env: str = ""
    temperature: float = 0.0
    max_in_flight: int = 4
    max_attempts: int = 3
    backoff_base: float = 0.5
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    @property
    def is_mock(self) -> bool:
        return self.base_url.startswith(MOCK_SCHEME)

    @property
    def transcript_path(self) -> str:
        return self.base_url[len(MOCK_SCHEME) :]


def backend_from_dict(d: dict[str, Any]) -> BackendConfig:
    return BackendConfig(
        name=d["name"],
        base_url=d["base_url"],
        model=d["model"],
        api_key_env=d.get("api_key_env", ""),
        temperature=d.get("temperature", 0.0),
        max_in_flight=d.get("max_in_flight", 4),
        max_attempts=d.get("max_attempts", 3),
        backoff_base=d.get("backoff_base", 0.5),
        timeout=d.get("timeout", 60.0),
    )


def load_backends(path: str) -> dict[str, BackendConfig]:
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    backends = {}
    for entry in entries:
        cfg = backend_from_dict(entry)
        if cfg.name in backends:
            raise ValueError(f"duplicate backend name {cfg.name!r}")
        backends[cfg.name] = cfg
    return backends
