"""Keep-alive HTTP/1.1 load generator with latency percentiles.

N worker threads each own connections/N persistent connections and issue
GETs round-robin for the configured duration, recording per-request
latency in microseconds and errors by class (connect, timeout, non-2xx,
body mismatch when an expected body is pinned).
"""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import dataclass, field
from urllib.parse import urlparse

from .errors import TargetUnreachable

ERROR_CLASSES = ("connect", "timeout", "non_2xx", "body_mismatch")


@dataclass
class LoadConfig:
    url: str
    threads: int = 2
    connections: int = 16
    duration_s: float = 5.0
    timeout_s: float = 5.0
    expected_body: bytes | None = None
    preflight: bool = True

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.connections < self.threads:
            raise ValueError("connections must be >= threads")
        if self.duration_s < 1:
            raise ValueError("duration must be >= 1 s")


@dataclass
class LoadReport:
    total_requests: int
    duration_s: float
    requests_per_sec: float
    bytes_per_sec: float
    latency_p50_us: int
    latency_p90_us: int
    latency_p99_us: int
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total_requests": self.total_requests,
            "duration_s": round(self.duration_s, 3),
            "requests_per_sec": round(self.requests_per_sec, 1),
            "bytes_per_sec": round(self.bytes_per_sec, 1),
            "latency_us": {
                "p50": self.latency_p50_us,
                "p90": self.latency_p90_us,
                "p99": self.latency_p99_us,
            },
            "errors": dict(self.errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def render_table(self) -> str:
        d = self.to_dict()
        lines = [
            f"{'requests':<16}{d['total_requests']:>14}",
            f"{'duration (s)':<16}{d['duration_s']:>14}",
            f"{'requests/sec':<16}{d['requests_per_sec']:>14}",
            f"{'bytes/sec':<16}{d['bytes_per_sec']:>14}",
            f"{'latency p50':<16}{self.latency_p50_us:>12}us",
            f"{'latency p90':<16}{self.latency_p90_us:>12}us",
            f"{'latency p99':<16}{self.latency_p99_us:>12}us",
        ]
        for k in ERROR_CLASSES:
            lines.append(f"{'err ' + k:<16}{self.errors.get(k, 0):>14}")
        return "\n".join(lines)


class _Conn:
    """One persistent connection with a minimal HTTP/1.1 client."""

    def __init__(self, host: str, port: int, timeout: float):
        self.host = host
        self.port = port
        self.timeout = timeout
        self.sock: socket.socket | None = None
        self.buf = b""

    def connect(self):
        self.close()
        self.sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.buf = b""

    def close(self):
        if self.sock is not None:
            try:
                self.sock.close()
            finally:
                self.sock = None

    def _read_until(self, marker: bytes) -> bytes:
        while marker not in self.buf:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("peer closed mid-response")
            self.buf += chunk
        head, self.buf = self.buf.split(marker, 1)
        return head

    def _read_n(self, n: int) -> bytes:
        while len(self.buf) < n:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("peer closed mid-body")
            self.buf += chunk
        body, self.buf = self.buf[:n], self.buf[n:]
        return body

    def get(self, path: str) -> tuple[int, bytes, int]:
        """Returns (status, body, total_bytes_received_estimate)."""
        req = (f"GET {path} HTTP/1.1\r\nHost: {self.host}\r\n"
               f"Connection: keep-alive\r\n\r\n").encode()
        self.sock.sendall(req)
        head = self._read_until(b"\r\n\r\n")
        lines = head.split(b"\r\n")
        status = int(lines[0].split()[1])
        clen = 0
        for line in lines[1:]:
            k, _, v = line.partition(b":")
            if k.strip().lower() == b"content-length":
                clen = int(v.strip())
        body = self._read_n(clen)
        return status, body, len(head) + 4 + clen


class _Worker(threading.Thread):
    def __init__(self, cfg: LoadConfig, host: str, port: int, path: str,
                 n_conns: int, deadline: float):
        super().__init__(daemon=True)
        self.cfg = cfg
        self.host = host
        self.port = port
        self.path = path
        self.n_conns = n_conns
        self.deadline = deadline
        self.latencies: list[int] = []
        self.bytes_rx = 0
        self.errors = {k: 0 for k in ERROR_CLASSES}

    def run(self):
        conns = [_Conn(self.host, self.port, self.cfg.timeout_s) for _ in range(self.n_conns)]
        for c in conns:
            try:
                c.connect()
            except OSError:
                self.errors["connect"] += 1
        while time.monotonic() < self.deadline:
            for c in conns:
                if time.monotonic() >= self.deadline:
                    break
                t0 = time.monotonic_ns()
                try:
                    if c.sock is None:
                        c.connect()
                    status, body, nbytes = c.get(self.path)
                except socket.timeout:
                    self.errors["timeout"] += 1
                    c.close()
                    continue
                except OSError:
                    self.errors["connect"] += 1
                    c.close()
                    continue
                self.latencies.append((time.monotonic_ns() - t0) // 1000)
                self.bytes_rx += nbytes
                if status < 200 or status >= 300:
                    self.errors["non_2xx"] += 1
                elif self.cfg.expected_body is not None and body != self.cfg.expected_body:
                    self.errors["body_mismatch"] += 1
        for c in conns:
            c.close()


def _percentile(sorted_us: list[int], q: float) -> int:
    if not sorted_us:
        return 0
    i = min(len(sorted_us) - 1, int(q * len(sorted_us)))
    return sorted_us[i]


def run_load(cfg: LoadConfig) -> LoadReport:
    """Drive the target for the configured duration and aggregate a report."""
    u = urlparse(cfg.url)
    if u.scheme != "http" or not u.hostname:
        raise ValueError(f"only http:// URLs are supported: {cfg.url}")
    host, port = u.hostname, u.port or 80
    path = u.path or "/"

    if cfg.preflight:
        probe = _Conn(host, port, cfg.timeout_s)
        try:
            probe.connect()
            probe.close()
        except OSError as e:
            raise TargetUnreachable(f"cannot reach {cfg.url}: {e}") from e

    base = cfg.connections // cfg.threads
    extra = cfg.connections % cfg.threads
    start = time.monotonic()
    deadline = start + cfg.duration_s
    workers = [
        _Worker(cfg, host, port, path, base + (1 if i < extra else 0), deadline)
        for i in range(cfg.threads)
    ]
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    elapsed = time.monotonic() - start

    lats = sorted(l for w in workers for l in w.latencies)
    errors = {k: sum(w.errors[k] for w in workers) for k in ERROR_CLASSES}
    total = len(lats)
    rx = sum(w.bytes_rx for w in workers)
    return LoadReport(
        total_requests=total,
        duration_s=elapsed,
        requests_per_sec=total / elapsed if elapsed > 0 else 0.0,
        bytes_per_sec=rx / elapsed if elapsed > 0 else 0.0,
        latency_p50_us=_percentile(lats, 0.50),
        latency_p90_us=_percentile(lats, 0.90),
        latency_p99_us=_percentile(lats, 0.99),
        errors=errors,
    )
