"""Load generator correctness against a known-good reference HTTP server."""

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from seam.bench import LoadConfig, run_load, _percentile
from seam.errors import TargetUnreachable


class _CountingServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.hits = 0
        self.lock = threading.Lock()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    BODY = b"reference body"

    def do_GET(self):
        with self.server.lock:
            self.server.hits += 1
        if self.path == "/slow":
            import time

            time.sleep(0.05)
        self.send_response(200)
        self.send_header("Content-Length", str(len(self.BODY)))
        self.end_headers()
        self.wfile.write(self.BODY)

    def log_message(self, *args):
        pass


@pytest.fixture()
def ref_server():
    srv = _CountingServer(("127.0.0.1", 0), _Handler)
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield srv
    srv.shutdown()


def test_request_count_matches_server_exactly(ref_server):
    port = ref_server.server_address[1]
    cfg = LoadConfig(url=f"http://127.0.0.1:{port}/", threads=2, connections=4,
                     duration_s=1, preflight=False)
    report = run_load(cfg)
    assert report.total_requests > 0
    assert report.total_requests == ref_server.hits


def test_latency_percentiles_nondecreasing(ref_server):
    port = ref_server.server_address[1]
    report = run_load(LoadConfig(url=f"http://127.0.0.1:{port}/", threads=2,
                                 connections=4, duration_s=1, preflight=False))
    assert 0 < report.latency_p50_us <= report.latency_p90_us <= report.latency_p99_us


def test_expected_body_verification(ref_server):
    port = ref_server.server_address[1]
    ok = run_load(LoadConfig(url=f"http://127.0.0.1:{port}/", threads=1, connections=1,
                             duration_s=1, preflight=False,
                             expected_body=_Handler.BODY))
    assert ok.errors["body_mismatch"] == 0
    bad = run_load(LoadConfig(url=f"http://127.0.0.1:{port}/", threads=1, connections=1,
                              duration_s=1, preflight=False, expected_body=b"wrong"))
    assert bad.errors["body_mismatch"] == bad.total_requests > 0


def test_unreachable_target_raises():
    with pytest.raises(TargetUnreachable):
        run_load(LoadConfig(url="http://127.0.0.1:1/", threads=1, connections=1,
                            duration_s=1))


def test_config_invariants():
    with pytest.raises(ValueError):
        LoadConfig(url="http://x/", threads=4, connections=2)  # conns < threads
    with pytest.raises(ValueError):
        LoadConfig(url="http://x/", threads=0, connections=2)
    with pytest.raises(ValueError):
        LoadConfig(url="http://x/", duration_s=0.1)
    # a wrk-scale configuration is accepted
    LoadConfig(url="http://x/", threads=16, connections=800, duration_s=60)


def test_percentile_helper():
    assert _percentile([], 0.5) == 0
    xs = sorted([5, 1, 9, 3, 7])
    assert _percentile(xs, 0.0) == 1
    assert _percentile(xs, 0.5) == 5
    assert _percentile(xs, 0.99) == 9


def test_report_rendering(ref_server):
    port = ref_server.server_address[1]
    report = run_load(LoadConfig(url=f"http://127.0.0.1:{port}/", threads=1,
                                 connections=1, duration_s=1, preflight=False))
    table = report.render_table()
    assert "requests/sec" in table and "latency p99" in table
    d = report.to_dict()
    assert set(d["errors"]) == {"connect", "timeout", "non_2xx", "body_mismatch"}
    assert d["latency_us"]["p50"] <= d["latency_us"]["p99"]
