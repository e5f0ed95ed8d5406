"""Client for OpenAI-compatible inference servers (embeddings + chat).

Transient failures (connection errors, 5xx) retry with exponential backoff;
4xx responses are terminal and never retried. In-flight requests are capped
by a semaphore so batch runs stay polite to a shared endpoint.
"""

from __future__ import annotations

import logging
import os
import threading
import time

import requests

from .errors import (
    DimensionMismatch,
    EmbeddingRefused,
    EndpointUnreachable,
    GenerationRefused,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_INFLIGHT = 4


class InferenceClient:
    """Thin wrapper over POST /v1/embeddings and /v1/chat/completions."""

    def __init__(self, base_url: str, *, timeout_ms: int = 30_000,
                 max_retries: int = 3, api_key: str | None = None,
                 backoff_base_s: float = 0.25,
                 max_inflight: int = DEFAULT_MAX_INFLIGHT):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_ms / 1000.0
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self._key = api_key if api_key is not None else os.environ.get("QF_API_KEY")
        self._gate = threading.BoundedSemaphore(max_inflight)
        self._session = requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self._key:
            headers["Authorization"] = f"Bearer {self._key}"
        return headers

    def _post(self, path: str, body: dict, refused_error: type) -> dict:
        url = f"{self.base_url}{path}"
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    resp = self._session.post(url, json=body, headers=self._headers(),
                                              timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_exc = exc
                logger.warning("request to %s failed (attempt %d/%d): %s",
                               url, attempt + 1, self.max_retries + 1, exc)
                continue
            if 400 <= resp.status_code < 500:
                raise refused_error(f"{url} returned {resp.status_code}: {resp.text[:500]}")
            if resp.status_code >= 500:
                last_exc = RuntimeError(f"HTTP {resp.status_code}")
                logger.warning("server error %d from %s (attempt %d/%d)",
                               resp.status_code, url, attempt + 1, self.max_retries + 1)
                continue
            try:
                return resp.json()
            except ValueError as exc:
                raise refused_error(f"{url} returned non-JSON body") from exc
        raise EndpointUnreachable(f"{url} unreachable after {self.max_retries + 1} attempts"
                                  f" (last error: {last_exc})")

    def embeddings(self, model: str, texts: list[str]) -> list[list[float]]:
        """One embedding per input text, in input order."""
        payload = self._post("/v1/embeddings", {"model": model, "input": texts},
                             EmbeddingRefused)
        data = payload.get("data")
        if not isinstance(data, list) or len(data) != len(texts):
            raise DimensionMismatch(
                f"embedding endpoint returned {0 if not isinstance(data, list) else len(data)}"
                f" vectors for {len(texts)} inputs")
        ordered = sorted(data, key=lambda item: item.get("index", 0))
        return [item["embedding"] for item in ordered]

    def chat(self, model: str, messages: list[dict], *, temperature: float = 0.0,
             max_tokens: int | None = None) -> str:
        """Content of the first choice; empty completions map to ""."""
        body: dict = {"model": model, "messages": messages, "temperature": temperature}
        if max_tokens is not None:
            body["max_tokens"] = max_tokens
        payload = self._post("/v1/chat/completions", body, GenerationRefused)
        choices = payload.get("choices") or []
        if not choices:
            return ""
        message = choices[0].get("message") or {}
        return message.get("content") or ""
