"""Just enough ELF64 reading for symbol audits.

Covers relocatable objects and executables: global symbol tables
(defined vs undefined) and the DT_NEEDED list of dynamic executables.
"""

from __future__ import annotations

import struct
from pathlib import Path

_SHT_SYMTAB = 2
_SHT_STRTAB = 3
_SHT_DYNAMIC = 6
_SHT_DYNSYM = 11
_DT_NEEDED = 1
_STB_LOCAL = 0
_SHN_UNDEF = 0


class ElfError(Exception):
    pass


def _sections(data: bytes):
    if data[:4] != b"\x7fELF":
        raise ElfError("not an ELF file")
    if data[4] != 2 or data[5] != 1:
        raise ElfError("only little-endian ELF64 is supported")
    e_shoff, = struct.unpack_from("<Q", data, 0x28)
    e_shentsize, e_shnum, e_shstrndx = struct.unpack_from("<HHH", data, 0x3A)
    secs = []
    for i in range(e_shnum):
        off = e_shoff + i * e_shentsize
        name, sh_type = struct.unpack_from("<II", data, off)
        sh_offset, sh_size = struct.unpack_from("<QQ", data, off + 0x18)
        sh_link, = struct.unpack_from("<I", data, off + 0x28)
        sh_entsize, = struct.unpack_from("<Q", data, off + 0x38)
        secs.append({
            "type": sh_type, "offset": sh_offset, "size": sh_size,
            "link": sh_link, "entsize": sh_entsize,
        })
    return secs


def _cstr(data: bytes, off: int) -> str:
    end = data.index(b"\x00", off)
    return data[off:end].decode("utf-8", "replace")


def symbols(path: str | Path) -> tuple[set[str], set[str]]:
    """Global (defined, undefined) symbol names of an object or executable."""
    data = Path(path).read_bytes()
    secs = _sections(data)
    defined: set[str] = set()
    undefined: set[str] = set()
    for sec in secs:
        if sec["type"] not in (_SHT_SYMTAB, _SHT_DYNSYM):
            continue
        strtab = secs[sec["link"]]
        count = sec["size"] // sec["entsize"] if sec["entsize"] else 0
        for i in range(count):
            off = sec["offset"] + i * sec["entsize"]
            st_name, st_info = struct.unpack_from("<IB", data, off)
            st_shndx, = struct.unpack_from("<H", data, off + 6)
            if st_name == 0 or (st_info >> 4) == _STB_LOCAL:
                continue
            name = _cstr(data, strtab["offset"] + st_name)
            if st_shndx == _SHN_UNDEF:
                undefined.add(name)
            else:
                defined.add(name)
    return defined, undefined


def needed_libs(path: str | Path) -> list[str]:
    """DT_NEEDED entries of a dynamically linked executable."""
    data = Path(path).read_bytes()
    secs = _sections(data)
    out: list[str] = []
    for sec in secs:
        if sec["type"] != _SHT_DYNAMIC:
            continue
        strtab = secs[sec["link"]]
        count = sec["size"] // 16
        for i in range(count):
            d_tag, d_val = struct.unpack_from("<qQ", data, sec["offset"] + i * 16)
            if d_tag == _DT_NEEDED:
                out.append(_cstr(data, strtab["offset"] + d_val))
    return out
