"""Minimal JSON-over-HTTP transport for remote embedding and chat backends.

A transport is any callable ``(payload: dict) -> dict``. Tests inject scripted
callables; :class:`HttpTransport` talks to a real endpoint.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable

from omnivic.errors import BackendError

Transport = Callable[[dict], dict]


@dataclass
class HttpTransport:
    url: str
    api_key_env: str | None = "OMNIVIC_API_KEY"
    timeout: float = 30.0

    def __call__(self, payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env) if self.api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        req = urllib.request.Request(
            self.url, data=json.dumps(payload).encode(), headers=headers, method="POST"
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read()
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendError(f"request to {self.url} failed: {exc}") from exc
        try:
            return json.loads(body)
        except json.JSONDecodeError as exc:
            raise BackendError(f"non-JSON response from {self.url}") from exc
