"""Toolchain driver and CLI flows: compile, pack, build, run, exit codes."""

import json
import subprocess
import sys

import pytest

from seam import elf
from seam.cli import main as cli_main
from seam.codegen import ALLOWED_UNRESOLVED
from seam.driver import (
    BuildPlan,
    check_no_wasm_engine_dependency,
    cmd_build,
    cmd_run,
)
from seam.errors import LinkError

from wasmgen import ModuleBuilder


def run_cli(args) -> int:
    return cli_main([str(a) for a in args])


def test_cli_compile_writes_object_and_manifest(guest_wasm, tmp_path, capsys):
    out = tmp_path / "hello.o"
    rc = run_cli(["compile", guest_wasm["hello"], "-o", out])
    assert rc == 0
    assert out.is_file()
    manifest = tmp_path / "hello.symbols.json"
    data = json.loads(manifest.read_text())
    assert "fd_write" in data["unresolved"]
    printed = capsys.readouterr().out
    assert "fd_write" in printed  # unresolved list is printed


def test_cli_compile_malformed_input(tmp_path, capsys):
    bad = tmp_path / "bad.wasm"
    bad.write_bytes(b"\x00asm\x02\x00\x00\x00")
    rc = run_cli(["compile", bad, "-o", tmp_path / "bad.o"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "version" in err and "0x4" in err  # diagnostic names the byte offset


def test_cli_compile_unsupported_target(guest_wasm, tmp_path, capsys):
    rc = run_cli(["compile", guest_wasm["hello"], "-o", tmp_path / "x.o",
                  "--target", "sparc"])
    assert rc == 2
    assert "supported targets" in capsys.readouterr().err


def test_cli_pack_deterministic(www_dir, tmp_path):
    t1, t2 = tmp_path / "a.tar", tmp_path / "b.tar"
    assert run_cli(["pack", www_dir, "-o", t1]) == 0
    assert run_cli(["pack", www_dir, "-o", t2]) == 0
    assert t1.read_bytes() == t2.read_bytes()


def test_cli_pack_missing_dir(tmp_path):
    assert run_cli(["pack", tmp_path / "absent", "-o", tmp_path / "x.tar"]) == 1


def test_cli_build_and_run_roundtrip(guest_wasm, tmp_path, capsys):
    exe = tmp_path / "hello"
    assert run_cli(["build", guest_wasm["hello"], "-o", exe]) == 0
    out = capsys.readouterr().out
    assert "symbol audit" in out and "unresolved after link: none" in out
    audit = json.loads((tmp_path / "hello.audit.json").read_text())
    assert audit["unresolved"] == []
    assert set(audit["resolved"]) <= ALLOWED_UNRESOLVED
    proc = subprocess.run([str(exe)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "hello\n"


def test_cli_run_forwards_guest_exit(built):
    assert run_cli(["run", built["exit7"]]) == 7


def test_cli_run_forwards_trap_exit(built):
    assert run_cli(["run", built["oob"]]) == 129


def test_cli_run_guest_args(built, capfd):
    rc = run_cli(["run", built["fib"], "--", "10"])
    assert rc == 0
    assert capfd.readouterr().out.strip() == "55"


def test_build_keep_intermediates(guest_wasm, tmp_path):
    exe = tmp_path / "hello"
    rc = run_cli(["build", guest_wasm["hello"], "-o", exe, "--keep"])
    assert rc == 0
    build_dir = tmp_path / "hello.build"
    assert (build_dir / "guest.o").is_file()
    assert (build_dir / "guest.symbols.json").is_file()


def test_build_with_fs_embeds_image(guest_wasm, www_dir, tmp_path, capfd):
    exe = tmp_path / "readfile"
    assert run_cli(["build", guest_wasm["readfile"], "-o", exe, "--fs", www_dir, "--keep"]) == 0
    assert (tmp_path / "readfile.build" / "fs.tar").is_file()
    defined, _ = elf.symbols(exe)
    assert {"fs_image_start", "fs_image_size"} <= defined
    proc = subprocess.run([str(exe)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == (www_dir / "index.html").read_text()


def test_run_fs_override(built, www_dir, tmp_path):
    from seam.tarfs import pack_dir

    alt = tmp_path / "alt"
    alt.mkdir()
    (alt / "index.html").write_text("override wins\n")
    tar = tmp_path / "alt.tar"
    tar.write_bytes(pack_dir(alt))
    proc = cmd_run(built["readfile"], fs_override=tar, capture=True)
    assert proc.returncode == 0
    assert proc.stdout == "override wins\n"


def test_readfile_without_fs_gets_noent(built):
    proc = cmd_run(built["readfile"], capture=True)
    assert proc.returncode == 44  # guest forwards NOENT via proc_exit


def test_guest_env_plumbing(rt):
    # GUEST_ENV is consumed by the runtime; checked via the ctypes surface
    rt.boot(env="A=1,B=2")
    assert rt.lib.environ_sizes_get(0, 4) == 0
    assert rt.u32(0) == 2


def test_unknown_wasi_import_fails_link(tmp_path):
    b = ModuleBuilder()
    b.add_import("wasi_snapshot_preview1", "totally_not_wasi", [], [])
    b.add_func([], [], [], [("call", 0)], export="_start")
    wasm = tmp_path / "unknown.wasm"
    wasm.write_bytes(b.build())
    with pytest.raises(LinkError) as ei:
        cmd_build(BuildPlan(wasm=wasm, output=tmp_path / "x"))
    assert "totally_not_wasi" in ei.value.unresolved


def test_unimplemented_but_preview1_name_builds_and_nosys(tmp_path, capfd):
    # fd_pread resolves against the NOSYS stub and reports 52 at runtime
    b = ModuleBuilder()
    fd_pread = b.add_import("wasi_snapshot_preview1", "fd_pread",
                            ["i32", "i32", "i32", "i64", "i32"], ["i32"])
    proc_exit = b.add_import("wasi_snapshot_preview1", "proc_exit", ["i32"], [])
    b.set_memory(1, 1)
    b.add_func([], [], [], [
        ("i32.const", 4), ("i32.const", 0), ("i32.const", 0),
        ("i64.const", 0), ("i32.const", 64),
        ("call", fd_pread),
        ("call", proc_exit),
    ], export="_start")
    wasm = tmp_path / "stubby.wasm"
    wasm.write_bytes(b.build())
    exe = tmp_path / "stubby"
    cmd_build(BuildPlan(wasm=wasm, output=exe))
    proc = subprocess.run([str(exe)], capture_output=True, text=True)
    assert proc.returncode == 52  # NOSYS surfaced through proc_exit
    assert "fd_pread" in proc.stderr  # logged once


def test_env_import_fails_at_compile(tmp_path, capsys):
    b = ModuleBuilder()
    b.add_import("env", "foo", [], [])
    b.add_func([], [], [], [("call", 0)], export="_start")
    wasm = tmp_path / "envimp.wasm"
    wasm.write_bytes(b.build())
    rc = run_cli(["build", wasm, "-o", tmp_path / "x"])
    assert rc == 1
    assert "env" in capsys.readouterr().err


def test_executable_is_engine_free(built):
    libs = check_no_wasm_engine_dependency(built["hello"])
    assert all("wasm" not in l.lower() for l in libs)


def test_audit_is_hermetic(guest_wasm, tmp_path):
    e1, e2 = tmp_path / "a", tmp_path / "b"
    cmd_build(BuildPlan(wasm=guest_wasm["httpd"], output=e1))
    cmd_build(BuildPlan(wasm=guest_wasm["httpd"], output=e2))
    a1 = json.loads((tmp_path / "a.audit.json").read_text())
    a2 = json.loads((tmp_path / "b.audit.json").read_text())
    assert a1 == a2


def test_seam_linker_env_respected(guest_wasm, tmp_path, monkeypatch):
    fake = tmp_path / "fakelinker"
    fake.write_text("#!/bin/sh\nexit 9\n")
    fake.chmod(0o755)
    monkeypatch.setenv("SEAM_LINKER", str(fake))
    with pytest.raises(LinkError):
        cmd_build(BuildPlan(wasm=guest_wasm["hello"], output=tmp_path / "h"))


def test_trap_messages_and_exit_codes(tmp_path):
    cases = [
        ([("i32.const", 70000), ("i32.load", 2, 0), ("drop",)], 129, "out of bounds"),
        ([("i32.const", 1), ("i32.const", 0), ("i32.div_u",), ("drop",)], 130, "divide by zero"),
        ([("unreachable",)], 132, "unreachable"),
    ]
    for i, (body, status, needle) in enumerate(cases):
        b = ModuleBuilder()
        b.set_memory(1, 1)
        b.add_func([], [], [], body, export="_start")
        wasm = tmp_path / f"trap{i}.wasm"
        wasm.write_bytes(b.build())
        exe = tmp_path / f"trap{i}"
        cmd_build(BuildPlan(wasm=wasm, output=exe))
        proc = subprocess.run([str(exe)], capture_output=True, text=True)
        assert proc.returncode == status
        assert needle in proc.stderr


def test_fd_read_on_closed_stdin_reports_eof(tmp_path):
    # guest exits with the byte count fd_read(0) produced; /dev/null -> 0
    b = ModuleBuilder()
    fd_read = b.add_import("wasi_snapshot_preview1", "fd_read",
                           ["i32", "i32", "i32", "i32"], ["i32"])
    proc_exit = b.add_import("wasi_snapshot_preview1", "proc_exit", ["i32"], [])
    b.set_memory(1, 1)
    import struct as _s

    b.add_data(0, _s.pack("<II", 64, 32))  # iovec {buf=64, len=32}
    b.add_func([], [], [], [
        ("i32.const", 0), ("i32.const", 0), ("i32.const", 1), ("i32.const", 8),
        ("call", fd_read), ("drop",),
        ("i32.const", 8), ("i32.load", 2, 0),
        ("call", proc_exit),
    ], export="_start")
    wasm = tmp_path / "stdin.wasm"
    wasm.write_bytes(b.build())
    exe = tmp_path / "stdin"
    cmd_build(BuildPlan(wasm=wasm, output=exe))
    proc = subprocess.run([str(exe)], stdin=subprocess.DEVNULL, capture_output=True)
    assert proc.returncode == 0  # nread 0 at EOF


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "seam.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("compile", "pack", "build", "run", "bench", "profile"):
        assert sub in proc.stdout


def test_cli_bench_against_reference_server(tmp_path, capsys):
    import threading
    from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

    class RefServer(ThreadingHTTPServer):
        request_queue_size = 128

    class H(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def do_GET(self):
            self.send_response(200)
            self.send_header("Content-Length", "2")
            self.end_headers()
            self.wfile.write(b"ok")

        def log_message(self, *a):
            pass

    srv = RefServer(("127.0.0.1", 0), H)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    out = tmp_path / "report.json"
    try:
        rc = run_cli(["bench", "--url", f"http://127.0.0.1:{srv.server_address[1]}/",
                      "--threads", "1", "--connections", "2", "--duration", "1",
                      "--json", out])
    finally:
        srv.shutdown()
    assert rc == 0
    assert "requests/sec" in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert report["total_requests"] > 0


def test_cli_bench_unreachable_is_input_error(capsys):
    rc = run_cli(["bench", "--url", "http://127.0.0.1:1/", "--duration", "1",
                  "--threads", "1", "--connections", "1"])
    assert rc == 1


def test_cli_profile_compute_guest(built, tmp_path, capsys):
    out = tmp_path / "profile.json"
    rc = run_cli(["profile", built["fib"], "--json", out, "--", "30"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "guest-code execution" in printed
    report = json.loads(out.read_text())
    assert report["percent"]["guest"] > 50
