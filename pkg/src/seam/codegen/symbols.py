"""Symbol ABI shared by the compiler and the runtime.

The object a compile produces leaves exactly these names unresolved:
the WASI preview1 field names it imports, the WasmEdge-style socket
extension names, and the three runtime hooks. Everything it defines is
prefixed wasm_.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# the three hooks the compiled object expects from the runtime
RUNTIME_HOOKS = ("memory_base", "memory_grow", "runtime_trap")

# symbols the compiled object always defines
RESERVED_DEFINED = ("wasm_init", "wasm_memory_spec", "wasm_exports", "wasm_exports_count")

WASI_MODULE = "wasi_snapshot_preview1"

# the full preview1 snapshot name space (every one of these resolves when
# linking against the runtime; unimplemented ones are NOSYS stubs)
WASI_PREVIEW1 = frozenset(
    """
    args_get args_sizes_get clock_res_get clock_time_get environ_get
    environ_sizes_get fd_advise fd_allocate fd_close fd_datasync
    fd_fdstat_get fd_fdstat_set_flags fd_fdstat_set_rights fd_filestat_get
    fd_filestat_set_size fd_filestat_set_times fd_pread fd_prestat_get
    fd_prestat_dir_name fd_pwrite fd_read fd_readdir fd_renumber fd_seek
    fd_sync fd_tell fd_write path_create_directory path_filestat_get
    path_filestat_set_times path_link path_open path_readlink
    path_remove_directory path_rename path_symlink path_unlink_file
    poll_oneoff proc_exit proc_raise random_get sched_yield sock_accept
    sock_recv sock_send sock_shutdown
    """.split()
)

# WasmEdge-compatible socket extension (see docs/sock-abi.md)
SOCK_EXTENSION = frozenset(
    """
    sock_open sock_bind sock_listen sock_connect sock_getsockopt
    sock_setsockopt sock_getlocaladdr sock_getpeeraddr sock_getaddrinfo
    """.split()
)

# functions with a real implementation (everything else is a NOSYS stub)
IMPLEMENTED_WASI = frozenset(
    """
    args_get args_sizes_get environ_get environ_sizes_get clock_res_get
    clock_time_get random_get proc_exit sched_yield fd_close fd_seek
    fd_read fd_write fd_fdstat_get fd_fdstat_set_flags fd_prestat_get
    fd_prestat_dir_name fd_filestat_get path_filestat_get fd_readdir
    path_open poll_oneoff sock_open sock_bind sock_listen sock_accept
    sock_connect sock_recv sock_send sock_shutdown sock_getlocaladdr
    sock_getpeeraddr
    """.split()
)

ALLOWED_UNRESOLVED = WASI_PREVIEW1 | SOCK_EXTENSION | set(RUNTIME_HOOKS)


@dataclass
class SymbolManifest:
    defined: list[str] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"defined": sorted(self.defined), "unresolved": sorted(self.unresolved)}

    @classmethod
    def from_dict(cls, d: dict) -> "SymbolManifest":
        return cls(defined=list(d["defined"]), unresolved=list(d["unresolved"]))
