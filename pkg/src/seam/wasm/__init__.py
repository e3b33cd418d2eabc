from .decode import decode_module
from .model import (
    DataSegment,
    ElemSegment,
    Export,
    FuncBody,
    FuncType,
    GlobalSpec,
    Import,
    MemorySpec,
    Module,
    TableSpec,
    ValidatedModule,
)
from .validate import validate_module

__all__ = [
    "decode_module",
    "validate_module",
    "Module",
    "ValidatedModule",
    "FuncType",
    "FuncBody",
    "MemorySpec",
    "TableSpec",
    "GlobalSpec",
    "Import",
    "Export",
    "ElemSegment",
    "DataSegment",
]
