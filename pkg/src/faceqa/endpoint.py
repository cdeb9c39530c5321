"""Inference endpoint contract plus an HTTP client and in-process mocks.

One request is one image locator plus one prompt; one response is free text.
The wire format of :class:`HttpEndpoint`:

    POST <base_url>
    Authorization: Bearer <token from the credential env var>
    {"image_uri": "...", "prompt": "...", "system": "..."}      # or "image_base64"
    -> 200 {"text": "..."}

Timeouts, 408, 429 and 5xx are retryable; 401/403 and other 4xx are fatal.
"""

from __future__ import annotations

import base64
import json
import os
import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from .schema import FaceImageRef

DEFAULT_CREDENTIAL_ENV = "FACEQA_API_TOKEN"


@dataclass(frozen=True)
class EndpointResponse:
    text: str
    # Server- or mock-reported latency; the batch runner measures wall time when None.
    latency_ms: float | None = None


class EndpointError(Exception):
    def __init__(self, message: str, retryable: bool):
        super().__init__(message)
        self.retryable = retryable


class Endpoint(Protocol):
    endpoint_id: str

    def complete(self, image: FaceImageRef, prompt: str,
                 system: str | None = None) -> EndpointResponse: ...


class HttpEndpoint:
    def __init__(self, base_url: str, credential_env: str = DEFAULT_CREDENTIAL_ENV,
                 timeout: float = 60.0, inline_images: bool = False,
                 endpoint_id: str | None = None):
        self.base_url = base_url
        self.credential_env = credential_env
        self.timeout = timeout
        self.inline_images = inline_images
        self.endpoint_id = endpoint_id or base_url

    def build_payload(self, image: FaceImageRef, prompt: str, system: str | None = None) -> dict:
        payload: dict = {}
        if self.inline_images and Path(image.uri).is_file():
            payload["image_base64"] = base64.b64encode(Path(image.uri).read_bytes()).decode("ascii")
        else:
            payload["image_uri"] = image.uri
        payload["prompt"] = prompt
        if system:
            payload["system"] = system
        return payload

    def complete(self, image: FaceImageRef, prompt: str,
                 system: str | None = None) -> EndpointResponse:
        body = json.dumps(self.build_payload(image, prompt, system)).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.credential_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(self.base_url, data=body, headers=headers, method="POST")
        t0 = time.perf_counter()
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as e:
            retryable = e.code in (408, 429) or e.code >= 500
            raise EndpointError(f"HTTP {e.code} from {self.base_url}", retryable) from e
        except (urllib.error.URLError, socket.timeout, ConnectionError, TimeoutError) as e:
            raise EndpointError(f"transport error: {e}", retryable=True) from e
        latency = (time.perf_counter() - t0) * 1000.0
        try:
            data = json.loads(raw)
            text = data["text"]
        except (ValueError, KeyError, TypeError) as e:
            raise EndpointError(f"malformed response body: {raw[:200]!r}", retryable=False) from e
        if not isinstance(text, str):
            raise EndpointError("response 'text' is not a string", retryable=False)
        return EndpointResponse(text, latency)


class FunctionEndpoint:
    """Deterministic mock: the response is a pure function of (image, prompt)."""

    def __init__(self, fn: Callable[[FaceImageRef, str], str], endpoint_id: str = "mock"):
        self.fn = fn
        self.endpoint_id = endpoint_id

    def complete(self, image: FaceImageRef, prompt: str,
                 system: str | None = None) -> EndpointResponse:
        return EndpointResponse(self.fn(image, prompt), 0.0)


class FlakyEndpoint:
    """Wraps another endpoint and fails the first ``failures`` calls per image."""

    def __init__(self, inner: Endpoint, failures: int, retryable: bool = True):
        self.inner = inner
        self.failures = failures
        self.retryable = retryable
        self.endpoint_id = inner.endpoint_id
        self.calls: dict[str, int] = {}
        self._lock = threading.Lock()

    def complete(self, image: FaceImageRef, prompt: str,
                 system: str | None = None) -> EndpointResponse:
        with self._lock:
            n = self.calls.get(image.id, 0) + 1
            self.calls[image.id] = n
        if n <= self.failures:
            raise EndpointError(f"injected failure {n} for {image.id}", self.retryable)
        return self.inner.complete(image, prompt, system)
