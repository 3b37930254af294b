"""HTTP boundary for platform API access.

Everything network-facing goes through an object with a ``request`` method
so tests can substitute recorded responses.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol


@dataclass
class HttpResponse:
    status: int
    headers: dict[str, str] = field(default_factory=dict)
    body: bytes = b""
    reason: str = ""

    def __post_init__(self):
        self.headers = {k.lower(): v for k, v in self.headers.items()}

    def header(self, name: str, default: str | None = None) -> str | None:
        return self.headers.get(name.lower(), default)

    def json(self):
        return json.loads(self.body.decode("utf-8") or "null")


class HttpTransport(Protocol):
    def request(self, method: str, url: str, headers: dict[str, str]) -> HttpResponse: ...


class RequestsTransport:
    """Live transport backed by ``requests``."""

    def __init__(self, timeout: float = 30.0):
        import requests

        self._session = requests.Session()
        self.timeout = timeout

    def request(self, method, url, headers):
        r = self._session.request(method, url, headers=headers, timeout=self.timeout)
        return HttpResponse(r.status_code, dict(r.headers), r.content, r.reason or "")


# -- recorded responses -------------------------------------------------------
# One file per request: a status line ("HTTP/1.1 200 OK"), header lines,
# a blank line, then the body.

def parse_recorded_response(data: bytes) -> HttpResponse:
    head, sep, body = data.partition(b"\r\n\r\n")
    if not sep:
        head, _, body = data.partition(b"\n\n")
    lines = head.decode("iso-8859-1").replace("\r\n", "\n").split("\n")
    status_line = lines[0].split(" ", 2)
    if len(status_line) < 2 or not status_line[0].startswith("HTTP/"):
        raise ValueError(f"bad status line {lines[0]!r}")
    headers = {}
    for line in lines[1:]:
        if line.strip():
            k, _, v = line.partition(":")
            headers[k.strip()] = v.strip()
    reason = status_line[2] if len(status_line) > 2 else ""
    return HttpResponse(int(status_line[1]), headers, body, reason)


def format_recorded_response(resp: HttpResponse) -> bytes:
    lines = [f"HTTP/1.1 {resp.status} {resp.reason}".rstrip()]
    lines += [f"{k}: {v}" for k, v in sorted(resp.headers.items())]
    return ("\n".join(lines) + "\n\n").encode("iso-8859-1") + resp.body


class RecordedTransport:
    """Replays recorded response files in filename order."""

    def __init__(self, source: str | os.PathLike | list[bytes]):
        if isinstance(source, list):
            self._responses = [parse_recorded_response(b) for b in source]
        else:
            files = sorted(p for p in Path(source).iterdir() if p.is_file())
            self._responses = [parse_recorded_response(p.read_bytes()) for p in files]
        self.requests: list[tuple[str, str]] = []

    def request(self, method, url, headers):
        if len(self.requests) >= len(self._responses):
            raise RuntimeError(f"no recorded response left for {method} {url}")
        self.requests.append((method, url))
        return self._responses[len(self.requests) - 1]


class RecordingTransport:
    """Wraps another transport and writes each response to ``directory``."""

    def __init__(self, inner: HttpTransport, directory: str | os.PathLike):
        self.inner = inner
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._n = 0

    def request(self, method, url, headers):
        resp = self.inner.request(method, url, headers)
        self._n += 1
        (self.directory / f"{self._n:04d}.http").write_bytes(format_recorded_response(resp))
        return resp


class CallbackTransport:
    """In-memory transport; ``handler(method, url)`` returns the response."""

    def __init__(self, handler: Callable[[str, str], HttpResponse]):
        self.handler = handler
        self.requests: list[tuple[str, str]] = []

    def request(self, method, url, headers):
        self.requests.append((method, url))
        return self.handler(method, url)


# -- errors -------------------------------------------------------------------

class ApiError(Exception):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class RateLimitError(ApiError):
    def __init__(self, message: str, reset_at: float | None = None, status: int | None = None):
        super().__init__(message, status)
        self.reset_at = reset_at


class AuthError(ApiError):
    pass


class NotFoundError(ApiError):
    pass


class UnsupportedQueryError(ApiError):
    pass


# -- rate budget --------------------------------------------------------------

@dataclass
class RateBudget:
    """Client-side request pacing.

    No request is issued while ``remaining`` is 0 and ``reset_at`` lies in
    the future, and consecutive requests are at least ``min_interval_ms``
    apart. ``clock``/``sleep`` are injectable for tests.
    """

    remaining: int = 5000
    reset_at: float = 0.0
    min_interval_ms: int = 0
    wait_for_reset: bool = True
    clock: Callable[[], float] = time.time
    sleep: Callable[[float], None] = time.sleep
    history: list[float] = field(default_factory=list)

    def acquire(self) -> None:
        now = self.clock()
        if self.remaining <= 0 and now < self.reset_at:
            if not self.wait_for_reset:
                raise RateLimitError("rate budget exhausted", reset_at=self.reset_at)
            self.sleep(self.reset_at - now)
            now = self.clock()
        if self.history and self.min_interval_ms:
            gap = self.history[-1] + self.min_interval_ms / 1000.0 - now
            if gap > 0:
                self.sleep(gap)
                now = self.clock()
        self.history.append(now)

    def update(self, resp: HttpResponse) -> None:
        remaining = resp.header("x-ratelimit-remaining")
        reset = resp.header("x-ratelimit-reset")
        retry_after = resp.header("retry-after")
        if remaining is not None:
            self.remaining = max(0, int(remaining))
        if reset is not None:
            self.reset_at = float(reset)
        if retry_after is not None and resp.status in (403, 429):
            self.remaining = 0
            self.reset_at = max(self.reset_at, self.clock() + float(retry_after))
        elif resp.status in (403, 429) and remaining is None:
            self.remaining = 0
