"""Shared JSON-over-HTTP client for the planner, denoiser and retouch services."""

from __future__ import annotations

import json
import logging
from typing import Any

import httpx

from ..errors import BackendFailure, BackendTimeout, BadStatus, MalformedReply

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


class HttpClient:
    """POST JSON, get JSON back.

    Transport errors, timeouts and 5xx replies are retried ``retries`` times;
    whatever is still failing afterwards becomes a :class:`BackendFailure`.
    ``transport`` is handed to httpx (tests use ``httpx.MockTransport``).
    """

    def __init__(self, base_url: str, *, timeout: float = DEFAULT_TIMEOUT,
                 token: str | None = None, retries: int = 1,
                 transport: httpx.BaseTransport | None = None):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        headers = {"Accept": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def post(self, path: str, payload: Any) -> Any:
        url = f"{self.base_url}/{path.lstrip('/')}"
        last: BackendFailure | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(url, json=payload)
            except httpx.TimeoutException as exc:
                last = BackendTimeout(f"POST {url} timed out: {exc}")
            except httpx.TransportError as exc:
                last = BackendFailure(f"POST {url} failed: {exc}", kind="transport")
            else:
                if resp.status_code >= 500:
                    last = BadStatus(f"POST {url} returned {resp.status_code}",
                                     status=resp.status_code, body=resp.text)
                elif resp.status_code >= 400:
                    raise BadStatus(f"POST {url} returned {resp.status_code}",
                                    status=resp.status_code, body=resp.text)
                else:
                    try:
                        return json.loads(resp.text)
                    except json.JSONDecodeError as exc:
                        raise MalformedReply(f"POST {url} replied with invalid JSON: {exc}",
                                             status=resp.status_code, body=resp.text) from None
            log.warning("attempt %d/%d: %s", attempt + 1, self.retries + 1, last)
        assert last is not None
        raise last


def http_call(endpoint: str, payload: Any, **kwargs) -> Any:
    """One-shot POST of ``payload`` to a full endpoint URL."""
    base, _, path = endpoint.rpartition("/")
    with HttpClient(base, **kwargs) as client:
        return client.post(path, payload)
