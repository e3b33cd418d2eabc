"""Build orchestration for the C runtime that resolves compiled objects' symbols.

The runtime sources ship as package data. `runtime_objects` compiles them
once per (source-hash, cc) into a cache directory and returns the object
list for the static link. `test_shared_lib` builds the same sources minus
the executable entry as a shared library, which the test suite loads with
ctypes to drive WASI functions directly.
"""

from __future__ import annotations

import hashlib
import os
import shutil
import subprocess
import tempfile
from pathlib import Path

from ..errors import SeamError

C_DIR = Path(__file__).parent / "c"

# main.c is the executable entry; every other unit is shared with the
# ctypes test build
ENTRY_SOURCE = "main.c"
LIB_SOURCES = [
    "trap.c",
    "mem.c",
    "fdtable.c",
    "tarfs.c",
    "profile.c",
    "wasi_core.c",
    "wasi_poll.c",
    "wasi_sock.c",
    "wasi_stubs.c",
]

CFLAGS = ["-O2", "-g0", "-std=c11", "-D_GNU_SOURCE", "-Wall", "-Wextra", "-pthread",
          "-fno-strict-aliasing"]


def cache_dir() -> Path:
    root = os.environ.get("SEAM_CACHE") or os.path.join(
        os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache")), "seam"
    )
    p = Path(root)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _source_key(cc: str, extra: tuple[str, ...] = ()) -> str:
    h = hashlib.sha256()
    for name in [ENTRY_SOURCE, "rt.h", *LIB_SOURCES]:
        h.update(name.encode())
        h.update((C_DIR / name).read_bytes())
    h.update(" ".join(CFLAGS).encode())
    h.update(" ".join(extra).encode())
    h.update(cc.encode())
    try:
        h.update(subprocess.run([cc, "--version"], capture_output=True).stdout[:200])
    except OSError as e:
        raise SeamError(f"C compiler {cc!r} not runnable: {e}") from e
    return h.hexdigest()[:16]


def _compile(cc: str, src: Path, out: Path, extra: list[str]):
    proc = subprocess.run(
        [cc, *CFLAGS, *extra, "-c", "-o", str(out), str(src)],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise SeamError(f"runtime compile failed for {src.name}:\n{proc.stderr}")


def _publish(tmp: Path, final: Path):
    """Atomically move a fully built cache entry into place; concurrent
    builders race benignly (first rename wins, the rest discard)."""
    try:
        os.rename(tmp, final)
    except OSError:
        if not final.exists():
            raise
        shutil.rmtree(tmp, ignore_errors=True)


def runtime_objects(cc: str = "cc") -> list[Path]:
    """Compile (or reuse) the runtime objects for static linking."""
    key = _source_key(cc)
    out_dir = cache_dir() / f"rt-{key}"
    names = [ENTRY_SOURCE, *LIB_SOURCES]
    if not out_dir.exists():
        tmp = Path(tempfile.mkdtemp(prefix=f"rt-{key}.", dir=cache_dir()))
        for src_name in names:
            _compile(cc, C_DIR / src_name, tmp / (Path(src_name).stem + ".o"), [])
        _publish(tmp, out_dir)
    return [out_dir / (Path(s).stem + ".o") for s in names]


def test_shared_lib(cc: str = "cc") -> Path:
    """Build the runtime (minus the entry) as a shared library for ctypes."""
    key = _source_key(cc, ("shared",))
    out_dir = cache_dir() / f"rtso-{key}"
    lib = out_dir / "libseamrt.so"
    if not lib.exists():
        tmp = Path(tempfile.mkdtemp(prefix=f"rtso-{key}.", dir=cache_dir()))
        srcs = [str(C_DIR / s) for s in LIB_SOURCES]
        proc = subprocess.run(
            [cc, *CFLAGS, "-fPIC", "-shared", "-o", str(tmp / "libseamrt.so"), *srcs],
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise SeamError(f"runtime shared build failed:\n{proc.stderr}")
        _publish(tmp, out_dir)
    return lib
