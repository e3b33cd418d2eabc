"""Toolchain driver: compile, pack, link, run.

cmd_build is the unikernel-style pipeline: Wasm -> relocatable object with
unresolved WASI/memory symbols -> static link against the runtime (plus an
optional tar image object) -> one self-contained executable. The symbol
audit that makes the seam mechanically checkable is written next to the
executable as <out>.audit.json.
"""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import elf
from .codegen import compile_wasm_file, write_artifact
from .errors import LinkError, SeamError
from .runtime import runtime_objects
from .tarfs import pack_dir


@dataclass
class BuildPlan:
    wasm: Path
    output: Path
    fs_dir: Path | None = None
    target: str | None = None
    guest_args: list[str] = field(default_factory=list)
    guest_env: list[str] = field(default_factory=list)
    keep_intermediates: bool = False
    linker: str | None = None
    cc: str = "cc"

    def __post_init__(self):
        self.wasm = Path(self.wasm)
        self.output = Path(self.output)
        if self.fs_dir is not None:
            self.fs_dir = Path(self.fs_dir)
        if not self.wasm.is_file():
            raise SeamError(f"input wasm not found: {self.wasm}")


def default_linker() -> str:
    return os.environ.get("SEAM_LINKER", "cc")


def cmd_compile(wasm: str | Path, out_obj: str | Path, target: str | None = None,
                cc: str = "cc", quiet: bool = False) -> Path:
    """Compile one .wasm to an object + symbol manifest; returns manifest path."""
    art = compile_wasm_file(wasm, target=target, cc=cc)
    manifest_path = write_artifact(art, out_obj)
    if not quiet:
        print(f"compiled {wasm} -> {out_obj} [{art.target}]")
        print("unresolved symbols:")
        for name in sorted(art.symbols.unresolved):
            print(f"  U {name}")
    return manifest_path


def cmd_pack(dir_path: str | Path, out_tar: str | Path) -> int:
    """Pack a directory into a deterministic ustar image; returns entry count."""
    image = pack_dir(dir_path)
    Path(out_tar).write_bytes(image)
    # count entries: every 512-block header before the terminator
    from .tarfs import mount

    return len(mount(image).paths())


def _fs_image_asm(tar_path: Path) -> str:
    # .incbin keeps the embedding exact and fast for any image size
    return (
        '  .section .rodata\n'
        '  .global fs_image_start\n'
        '  .align 16\n'
        'fs_image_start:\n'
        f'  .incbin "{tar_path}"\n'
        '  .global fs_image_size\n'
        '  .align 8\n'
        'fs_image_size:\n'
        f'  .quad {tar_path.stat().st_size}\n'
    )


def cmd_build(plan: BuildPlan) -> dict:
    """Compile + pack + link into one executable; returns the symbol audit."""
    build_dir = Path(str(plan.output) + ".build")
    tmp_ctx = None
    if plan.keep_intermediates:
        build_dir.mkdir(parents=True, exist_ok=True)
    else:
        tmp_ctx = tempfile.TemporaryDirectory(prefix="seam-build-")
        build_dir = Path(tmp_ctx.name)
    try:
        guest_obj = build_dir / "guest.o"
        art = compile_wasm_file(plan.wasm, target=plan.target, cc=plan.cc)
        write_artifact(art, guest_obj)

        link_inputs = [guest_obj]
        if plan.fs_dir is not None:
            tar_path = build_dir / "fs.tar"
            tar_path.write_bytes(pack_dir(plan.fs_dir))
            asm_path = build_dir / "fs_image.s"
            asm_path.write_text(_fs_image_asm(tar_path))
            fs_obj = build_dir / "fs_image.o"
            proc = subprocess.run([plan.cc, "-c", "-o", str(fs_obj), str(asm_path)],
                                  capture_output=True, text=True)
            if proc.returncode != 0:
                raise SeamError(f"fs image assembly failed:\n{proc.stderr}")
            link_inputs.append(fs_obj)

        rt_objs = runtime_objects(cc=plan.cc)

        # audit before linking: every guest-unresolved symbol must be
        # provided by the runtime (or the fs image)
        providers: dict[str, str] = {}
        for obj, who in [*[(o, "runtime") for o in rt_objs],
                         *([(link_inputs[1], "fs-image")] if len(link_inputs) > 1 else [])]:
            defined, _ = elf.symbols(obj)
            for sym in defined:
                providers.setdefault(sym, who)
        audit = {"resolved": {}, "unresolved": []}
        for sym in sorted(art.symbols.unresolved):
            if sym in providers:
                audit["resolved"][sym] = providers[sym]
            else:
                audit["unresolved"].append(sym)
        if audit["unresolved"]:
            raise LinkError(
                f"unresolved symbols after runtime resolution: {', '.join(audit['unresolved'])}",
                unresolved=audit["unresolved"],
            )

        linker = plan.linker or default_linker()
        cmdline = [linker, "-o", str(plan.output),
                   *[str(p) for p in link_inputs], *[str(p) for p in rt_objs], "-pthread"]
        proc = subprocess.run(cmdline, capture_output=True, text=True)
        if proc.returncode != 0:
            raise LinkError(f"linker failed:\n{proc.stderr}")

        audit_path = Path(str(plan.output) + ".audit.json")
        audit_path.write_text(json.dumps(audit, indent=2, sort_keys=True) + "\n")
        return audit
    finally:
        if tmp_ctx is not None:
            tmp_ctx.cleanup()


def cmd_run(exe: str | Path, guest_args: list[str] | None = None,
            fs_override: str | Path | None = None, guest_env: list[str] | None = None,
            invoke: str | None = None, capture: bool = False) -> subprocess.CompletedProcess:
    """Execute a built artifact, forwarding the guest's exit status."""
    exe = Path(exe)
    if not exe.is_file():
        raise SeamError(f"executable not found: {exe}")
    env = dict(os.environ)
    argv0 = exe.name
    env["GUEST_ARGS"] = " ".join([argv0, *(guest_args or [])])
    if guest_env:
        env["GUEST_ENV"] = ",".join(guest_env)
    if fs_override is not None:
        env["SEAM_FS"] = str(fs_override)
    if invoke is not None:
        env["SEAM_INVOKE"] = invoke
    return subprocess.run([str(exe)], env=env, capture_output=capture, text=capture)


def check_no_wasm_engine_dependency(exe: str | Path) -> list[str]:
    """The executable must not load any Wasm engine at runtime; returns the
    dynamic library list for the audit trail."""
    libs = elf.needed_libs(exe)
    offenders = [l for l in libs if "wasm" in l.lower() or "wamr" in l.lower()]
    if offenders:
        raise LinkError(f"executable depends on a Wasm engine: {offenders}")
    return libs
