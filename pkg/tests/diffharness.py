"""Differential harness: run generated modules through the AoT pipeline and
through the reference engine (Node/V8), and compare outcomes.

Outcome = ("value", type, bits:int) or ("trap", class:int). NaN results
compare by class, everything else bit-exactly.
"""

from __future__ import annotations

import json
import os
import subprocess
from pathlib import Path

from seam.driver import BuildPlan, cmd_build

ORACLE = Path(__file__).parent / "js" / "oracle.mjs"


def is_nan_bits(vtype: str, bits: int) -> bool:
    if vtype == "f32":
        return (bits & 0x7F800000) == 0x7F800000 and (bits & 0x007FFFFF) != 0
    if vtype == "f64":
        return (bits & 0x7FF0000000000000) == 0x7FF0000000000000 and (bits & 0xFFFFFFFFFFFFF) != 0
    return False


def outcomes_equal(a, b) -> bool:
    if a[0] != b[0]:
        return False
    if a[0] == "trap":
        return a[1] == b[1]
    _, at, abits = a
    _, bt, bbits = b
    if at != bt:
        return False
    if is_nan_bits(at, abits) and is_nan_bits(bt, bbits):
        return True
    return abits == bbits


def build_module_exe(wasm_bytes: bytes, workdir: Path, name: str) -> Path:
    wasm_path = workdir / f"{name}.wasm"
    wasm_path.write_bytes(wasm_bytes)
    exe = workdir / name
    cmd_build(BuildPlan(wasm=wasm_path, output=exe))
    return exe


def run_exe_export(exe: Path, export: str, timeout: float = 30.0):
    env = dict(os.environ)
    env["SEAM_INVOKE"] = export
    proc = subprocess.run([str(exe)], env=env, capture_output=True, text=True,
                          timeout=timeout)
    if proc.returncode == 0:
        line = proc.stdout.strip().splitlines()[-1]
        vtype, _, hexbits = line.partition(":")
        if vtype == "void":
            return ("value", "void", 0)
        return ("value", vtype, int(hexbits, 16))
    if proc.returncode >= 129:
        return ("trap", proc.returncode - 128)
    raise AssertionError(
        f"{exe} {export}: unexpected exit {proc.returncode}\n{proc.stderr}"
    )


def run_node_exports(wasm_path: Path, exports: list[tuple[str, str]], timeout: float = 60.0):
    specs = [f"{name}:{sig}" for name, sig in exports]
    proc = subprocess.run(["node", str(ORACLE), "invoke", str(wasm_path), *specs],
                          capture_output=True, text=True, timeout=timeout)
    if proc.returncode != 0:
        raise AssertionError(f"oracle failed on {wasm_path}:\n{proc.stderr}")
    raw = json.loads(proc.stdout)
    out = {}
    for name, _sig in exports:
        r = raw[name]
        if r["kind"] == "value":
            bits = int(r["bits"], 16) if r["bits"] else 0
            out[name] = ("value", r["type"], bits)
        else:
            out[name] = ("trap", r["cls"])
    return out


def node_validates(wasm_bytes_list: list[bytes], workdir: Path) -> list[bool]:
    paths = []
    for i, data in enumerate(wasm_bytes_list):
        p = workdir / f"v{i}.wasm"
        p.write_bytes(data)
        paths.append(p)
    proc = subprocess.run(["node", str(ORACLE), "validate", *[str(p) for p in paths]],
                          capture_output=True, text=True, timeout=120)
    if proc.returncode != 0:
        raise AssertionError(f"oracle validate failed:\n{proc.stderr}")
    raw = json.loads(proc.stdout)
    return [raw[p.name] == "accept" for p in paths]


def run_differential_module(wasm_bytes: bytes, exports: list[tuple[str, str]],
                            workdir: Path, name: str) -> list[str]:
    """Returns human-readable disagreement descriptions (empty = all agree)."""
    exe = build_module_exe(wasm_bytes, workdir, name)
    ref = run_node_exports(workdir / f"{name}.wasm", exports)
    problems = []
    for export, _sig in exports:
        mine = run_exe_export(exe, export)
        theirs = ref[export]
        if not outcomes_equal(mine, theirs):
            problems.append(f"{name}.{export}: pipeline={mine} reference={theirs}")
    return problems
