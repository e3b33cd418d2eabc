"""poll_oneoff conformance: a 20-case table over clock-only, fd-readiness,
and mixed subscriptions, checked against POSIX-poll-equivalent expectations."""

import io
import socket
import struct
import tarfile
import threading
import time

from test_sock import rt_listener, OUT

W_SUCCESS, W_BADF, W_INVAL, W_NOTSUP = 0, 8, 28, 58
EVT_CLOCK, EVT_FD_READ, EVT_FD_WRITE = 0, 1, 2
ABSTIME = 1

SUBS = 2048
EVENTS = 4096
NEVENTS = 30000


def sub_clock(rt, i, userdata, timeout_ns, clock_id=1, flags=0):
    # userdata @0, tag @8, clock id @16, timeout @24, precision @32, flags @40
    raw = struct.pack("<QB7xI4xQQH6x", userdata, EVT_CLOCK, clock_id, timeout_ns, 0, flags)
    assert len(raw) == 48
    rt.write(SUBS + 48 * i, raw)


def sub_fd(rt, i, userdata, tag, fd):
    raw = struct.pack("<QB7xI28x", userdata, tag, fd)
    assert len(raw) == 48
    rt.write(SUBS + 48 * i, raw)


def poll(rt, n, expect_rc=W_SUCCESS):
    rc = rt.lib.poll_oneoff(SUBS, EVENTS, n, NEVENTS)
    assert rc == expect_rc, f"poll_oneoff rc {rc}"
    if rc != W_SUCCESS:
        return []
    out = []
    for k in range(rt.u32(NEVENTS)):
        raw = rt.read(EVENTS + 32 * k, 32)
        userdata, errno = struct.unpack_from("<QH", raw, 0)
        etype = raw[10]
        nbytes, flags = struct.unpack_from("<QH", raw, 16)
        out.append({"userdata": userdata, "errno": errno, "type": etype,
                    "nbytes": nbytes, "flags": flags})
    return out


def tar_with(rt, files: dict):
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w", format=tarfile.USTAR_FORMAT) as tf:
        for name, data in files.items():
            info = tarfile.TarInfo(name)
            info.size = len(data)
            tf.addfile(info, io.BytesIO(data))
    rt.boot(tar=buf.getvalue())


def open_tar_fd(rt, name: str) -> int:
    n = rt.str_in(256, name)
    assert rt.lib.path_open(3, 0, 256, n, 0, 0, 0, 0, 512) == W_SUCCESS
    return rt.u32(512)


def connected_pair(rt):
    lfd, port = rt_listener(rt)
    py = socket.create_connection(("127.0.0.1", port), timeout=5)
    assert rt.lib.sock_accept(lfd, 0, OUT + 16) == W_SUCCESS
    return rt.u32(OUT + 16), py


# case 1
def test_clock_zero_timeout_immediate(rtb):
    sub_clock(rtb, 0, 0xAA, 0)
    t0 = time.monotonic()
    evs = poll(rtb, 1)
    assert time.monotonic() - t0 < 0.5
    assert len(evs) == 1
    assert evs[0]["userdata"] == 0xAA
    assert evs[0]["type"] == EVT_CLOCK
    assert evs[0]["errno"] == W_SUCCESS


# case 2
def test_clock_relative_waits(rtb):
    sub_clock(rtb, 0, 1, 50_000_000)
    t0 = time.monotonic()
    evs = poll(rtb, 1)
    elapsed = time.monotonic() - t0
    assert 0.045 <= elapsed < 1.0
    assert len(evs) == 1 and evs[0]["type"] == EVT_CLOCK


# case 3
def test_clock_absolute_realtime(rtb):
    rtb.lib.clock_time_get(0, 0, 0)
    deadline = rtb.u64(0) + 30_000_000
    sub_clock(rtb, 0, 2, deadline, clock_id=0, flags=ABSTIME)
    t0 = time.monotonic()
    evs = poll(rtb, 1)
    assert 0.02 <= time.monotonic() - t0 < 1.0
    assert len(evs) == 1


# case 4
def test_clock_absolute_in_past_fires_immediately(rtb):
    rtb.lib.clock_time_get(1, 0, 0)
    past = rtb.u64(0) - 1_000_000_000
    sub_clock(rtb, 0, 3, past, clock_id=1, flags=ABSTIME)
    t0 = time.monotonic()
    evs = poll(rtb, 1)
    assert time.monotonic() - t0 < 0.5
    assert len(evs) == 1


# case 5
def test_two_clocks_earliest_fires(rtb):
    sub_clock(rtb, 0, 10, 30_000_000)
    sub_clock(rtb, 1, 20, 500_000_000)
    t0 = time.monotonic()
    evs = poll(rtb, 2)
    assert time.monotonic() - t0 < 0.4
    assert [e["userdata"] for e in evs] == [10]


# case 6
def test_zero_subscriptions_inval(rtb):
    poll(rtb, 0, expect_rc=W_INVAL)


# case 7
def test_unknown_clock_id_event_errno(rtb):
    sub_clock(rtb, 0, 5, 1000, clock_id=7)
    evs = poll(rtb, 1)
    assert len(evs) == 1 and evs[0]["errno"] == W_INVAL


# case 8
def test_socket_with_buffered_data_ready(rtb):
    cfd, py = connected_pair(rtb)
    try:
        py.sendall(b"data")
        time.sleep(0.05)
        sub_fd(rtb, 0, 0xF00D, EVT_FD_READ, cfd)
        evs = poll(rtb, 1)
        assert len(evs) == 1
        assert evs[0]["userdata"] == 0xF00D
        assert evs[0]["type"] == EVT_FD_READ
        assert evs[0]["nbytes"] >= 4
    finally:
        py.close()


# case 9
def test_idle_socket_clock_wins(rtb):
    cfd, py = connected_pair(rtb)
    try:
        sub_fd(rtb, 0, 1, EVT_FD_READ, cfd)
        sub_clock(rtb, 1, 2, 60_000_000)
        evs = poll(rtb, 2)
        assert [e["userdata"] for e in evs] == [2]
        assert evs[0]["type"] == EVT_CLOCK
    finally:
        py.close()


# case 10
def test_socket_becomes_ready_mid_poll(rtb):
    cfd, py = connected_pair(rtb)
    try:
        def writer():
            time.sleep(0.05)
            py.sendall(b"late")
        t = threading.Thread(target=writer)
        t.start()
        sub_fd(rtb, 0, 7, EVT_FD_READ, cfd)
        sub_clock(rtb, 1, 8, 5_000_000_000)
        t0 = time.monotonic()
        evs = poll(rtb, 2)
        t.join()
        assert time.monotonic() - t0 < 2.0
        assert [e["userdata"] for e in evs] == [7]
    finally:
        py.close()


# case 11
def test_listener_ready_on_pending_connection(rtb):
    lfd, port = rt_listener(rtb)
    py = socket.create_connection(("127.0.0.1", port), timeout=5)
    try:
        time.sleep(0.02)
        sub_fd(rtb, 0, 0xACC, EVT_FD_READ, lfd)
        evs = poll(rtb, 1)
        assert len(evs) == 1 and evs[0]["userdata"] == 0xACC
    finally:
        py.close()


# case 12
def test_connected_socket_write_ready(rtb):
    cfd, py = connected_pair(rtb)
    try:
        sub_fd(rtb, 0, 0x11, EVT_FD_WRITE, cfd)
        t0 = time.monotonic()
        evs = poll(rtb, 1)
        assert time.monotonic() - t0 < 0.5
        assert len(evs) == 1 and evs[0]["type"] == EVT_FD_WRITE
        assert evs[0]["nbytes"] > 0
    finally:
        py.close()


# case 13
def test_tar_file_always_ready_with_remaining_bytes(rt):
    tar_with(rt, {"f.txt": b"0123456789"})
    fd = open_tar_fd(rt, "f.txt")
    sub_fd(rt, 0, 0x7A, EVT_FD_READ, fd)
    evs = poll(rt, 1)
    assert len(evs) == 1 and evs[0]["nbytes"] == 10


# case 14
def test_tar_file_at_eof_ready_zero_bytes(rt):
    tar_with(rt, {"f.txt": b"0123456789"})
    fd = open_tar_fd(rt, "f.txt")
    assert rt.lib.fd_seek(fd, 10, 0, 600) == W_SUCCESS
    sub_fd(rt, 0, 0x7B, EVT_FD_READ, fd)
    evs = poll(rt, 1)
    assert len(evs) == 1 and evs[0]["nbytes"] == 0 and evs[0]["errno"] == W_SUCCESS


# case 15
def test_directory_fd_not_pollable(rtb):
    sub_fd(rtb, 0, 0xD1, EVT_FD_READ, 3)
    evs = poll(rtb, 1)
    assert len(evs) == 1 and evs[0]["errno"] == W_NOTSUP


# case 16
def test_bad_fd_reports_badf_event(rtb):
    sub_fd(rtb, 0, 0xB0, EVT_FD_READ, 99)
    evs = poll(rtb, 1)
    assert len(evs) == 1 and evs[0]["errno"] == W_BADF
    assert evs[0]["userdata"] == 0xB0


# case 17
def test_ready_file_preempts_long_clock(rt):
    tar_with(rt, {"f.txt": b"abc"})
    fd = open_tar_fd(rt, "f.txt")
    sub_fd(rt, 0, 1, EVT_FD_READ, fd)
    sub_clock(rt, 1, 2, 10_000_000_000)
    t0 = time.monotonic()
    evs = poll(rt, 2)
    assert time.monotonic() - t0 < 2.0
    assert [e["userdata"] for e in evs] == [1]


# case 18
def test_peer_close_reports_readable_hangup(rtb):
    cfd, py = connected_pair(rtb)
    py.close()
    time.sleep(0.05)
    sub_fd(rtb, 0, 0xE0F, EVT_FD_READ, cfd)
    evs = poll(rtb, 1)
    assert len(evs) == 1
    # readable EOF: either hangup flagged or zero bytes buffered
    assert evs[0]["flags"] & 0x1 or evs[0]["nbytes"] == 0


# case 19
def test_mixed_read_unready_write_ready(rtb):
    cfd, py = connected_pair(rtb)
    try:
        sub_fd(rtb, 0, 1, EVT_FD_READ, cfd)
        sub_fd(rtb, 1, 2, EVT_FD_WRITE, cfd)
        evs = poll(rtb, 2)
        assert [e["userdata"] for e in evs] == [2]
        assert evs[0]["type"] == EVT_FD_WRITE
    finally:
        py.close()


# case 20
def test_userdata_echoed_across_mixed_subs(rt):
    tar_with(rt, {"f.txt": b"abc"})
    fd = open_tar_fd(rt, "f.txt")
    sub_fd(rt, 0, 0xDEADBEEFCAFE, EVT_FD_READ, fd)
    sub_clock(rt, 1, 0xFEEDFACE, 0)
    evs = poll(rt, 2)
    assert {e["userdata"] for e in evs} == {0xDEADBEEFCAFE, 0xFEEDFACE}
