"""Opcode tables for the supported feature set.

Supported: MVP core plus sign-extension operators and non-trapping
float-to-int conversions (the 0xFC 0..7 subspace). Anything else decodes
to UnsupportedFeature.
"""

from __future__ import annotations

# immediate encodings, keyed by opcode name
IMM_NONE = ""
IMM_INDEX = "u32"          # single LEB u32 index
IMM_MEMARG = "memarg"      # align u32, offset u32
IMM_BLOCK = "block"        # block type byte / s33
IMM_BR_TABLE = "brtable"   # vec(u32), u32 default
IMM_CALL_INDIRECT = "callind"  # type index u32, table byte 0x00
IMM_MEM_ZERO = "memzero"   # single 0x00 byte (memory.size/grow)
IMM_I32 = "i32const"
IMM_I64 = "i64const"
IMM_F32 = "f32const"
IMM_F64 = "f64const"

OPCODES: dict[int, tuple[str, str]] = {
    0x00: ("unreachable", IMM_NONE),
    0x01: ("nop", IMM_NONE),
    0x02: ("block", IMM_BLOCK),
    0x03: ("loop", IMM_BLOCK),
    0x04: ("if", IMM_BLOCK),
    0x05: ("else", IMM_NONE),
    0x0B: ("end", IMM_NONE),
    0x0C: ("br", IMM_INDEX),
    0x0D: ("br_if", IMM_INDEX),
    0x0E: ("br_table", IMM_BR_TABLE),
    0x0F: ("return", IMM_NONE),
    0x10: ("call", IMM_INDEX),
    0x11: ("call_indirect", IMM_CALL_INDIRECT),
    0x1A: ("drop", IMM_NONE),
    0x1B: ("select", IMM_NONE),
    0x20: ("local.get", IMM_INDEX),
    0x21: ("local.set", IMM_INDEX),
    0x22: ("local.tee", IMM_INDEX),
    0x23: ("global.get", IMM_INDEX),
    0x24: ("global.set", IMM_INDEX),
    0x28: ("i32.load", IMM_MEMARG),
    0x29: ("i64.load", IMM_MEMARG),
    0x2A: ("f32.load", IMM_MEMARG),
    0x2B: ("f64.load", IMM_MEMARG),
    0x2C: ("i32.load8_s", IMM_MEMARG),
    0x2D: ("i32.load8_u", IMM_MEMARG),
    0x2E: ("i32.load16_s", IMM_MEMARG),
    0x2F: ("i32.load16_u", IMM_MEMARG),
    0x30: ("i64.load8_s", IMM_MEMARG),
    0x31: ("i64.load8_u", IMM_MEMARG),
    0x32: ("i64.load16_s", IMM_MEMARG),
    0x33: ("i64.load16_u", IMM_MEMARG),
    0x34: ("i64.load32_s", IMM_MEMARG),
    0x35: ("i64.load32_u", IMM_MEMARG),
    0x36: ("i32.store", IMM_MEMARG),
    0x37: ("i64.store", IMM_MEMARG),
    0x38: ("f32.store", IMM_MEMARG),
    0x39: ("f64.store", IMM_MEMARG),
    0x3A: ("i32.store8", IMM_MEMARG),
    0x3B: ("i32.store16", IMM_MEMARG),
    0x3C: ("i64.store8", IMM_MEMARG),
    0x3D: ("i64.store16", IMM_MEMARG),
    0x3E: ("i64.store32", IMM_MEMARG),
    0x3F: ("memory.size", IMM_MEM_ZERO),
    0x40: ("memory.grow", IMM_MEM_ZERO),
    0x41: ("i32.const", IMM_I32),
    0x42: ("i64.const", IMM_I64),
    0x43: ("f32.const", IMM_F32),
    0x44: ("f64.const", IMM_F64),
    0x45: ("i32.eqz", IMM_NONE),
    0x46: ("i32.eq", IMM_NONE),
    0x47: ("i32.ne", IMM_NONE),
    0x48: ("i32.lt_s", IMM_NONE),
    0x49: ("i32.lt_u", IMM_NONE),
    0x4A: ("i32.gt_s", IMM_NONE),
    0x4B: ("i32.gt_u", IMM_NONE),
    0x4C: ("i32.le_s", IMM_NONE),
    0x4D: ("i32.le_u", IMM_NONE),
    0x4E: ("i32.ge_s", IMM_NONE),
    0x4F: ("i32.ge_u", IMM_NONE),
    0x50: ("i64.eqz", IMM_NONE),
    0x51: ("i64.eq", IMM_NONE),
    0x52: ("i64.ne", IMM_NONE),
    0x53: ("i64.lt_s", IMM_NONE),
    0x54: ("i64.lt_u", IMM_NONE),
    0x55: ("i64.gt_s", IMM_NONE),
    0x56: ("i64.gt_u", IMM_NONE),
    0x57: ("i64.le_s", IMM_NONE),
    0x58: ("i64.le_u", IMM_NONE),
    0x59: ("i64.ge_s", IMM_NONE),
    0x5A: ("i64.ge_u", IMM_NONE),
    0x5B: ("f32.eq", IMM_NONE),
    0x5C: ("f32.ne", IMM_NONE),
    0x5D: ("f32.lt", IMM_NONE),
    0x5E: ("f32.gt", IMM_NONE),
    0x5F: ("f32.le", IMM_NONE),
    0x60: ("f32.ge", IMM_NONE),
    0x61: ("f64.eq", IMM_NONE),
    0x62: ("f64.ne", IMM_NONE),
    0x63: ("f64.lt", IMM_NONE),
    0x64: ("f64.gt", IMM_NONE),
    0x65: ("f64.le", IMM_NONE),
    0x66: ("f64.ge", IMM_NONE),
    0x67: ("i32.clz", IMM_NONE),
    0x68: ("i32.ctz", IMM_NONE),
    0x69: ("i32.popcnt", IMM_NONE),
    0x6A: ("i32.add", IMM_NONE),
    0x6B: ("i32.sub", IMM_NONE),
    0x6C: ("i32.mul", IMM_NONE),
    0x6D: ("i32.div_s", IMM_NONE),
    0x6E: ("i32.div_u", IMM_NONE),
    0x6F: ("i32.rem_s", IMM_NONE),
    0x70: ("i32.rem_u", IMM_NONE),
    0x71: ("i32.and", IMM_NONE),
    0x72: ("i32.or", IMM_NONE),
    0x73: ("i32.xor", IMM_NONE),
    0x74: ("i32.shl", IMM_NONE),
    0x75: ("i32.shr_s", IMM_NONE),
    0x76: ("i32.shr_u", IMM_NONE),
    0x77: ("i32.rotl", IMM_NONE),
    0x78: ("i32.rotr", IMM_NONE),
    0x79: ("i64.clz", IMM_NONE),
    0x7A: ("i64.ctz", IMM_NONE),
    0x7B: ("i64.popcnt", IMM_NONE),
    0x7C: ("i64.add", IMM_NONE),
    0x7D: ("i64.sub", IMM_NONE),
    0x7E: ("i64.mul", IMM_NONE),
    0x7F: ("i64.div_s", IMM_NONE),
    0x80: ("i64.div_u", IMM_NONE),
    0x81: ("i64.rem_s", IMM_NONE),
    0x82: ("i64.rem_u", IMM_NONE),
    0x83: ("i64.and", IMM_NONE),
    0x84: ("i64.or", IMM_NONE),
    0x85: ("i64.xor", IMM_NONE),
    0x86: ("i64.shl", IMM_NONE),
    0x87: ("i64.shr_s", IMM_NONE),
    0x88: ("i64.shr_u", IMM_NONE),
    0x89: ("i64.rotl", IMM_NONE),
    0x8A: ("i64.rotr", IMM_NONE),
    0x8B: ("f32.abs", IMM_NONE),
    0x8C: ("f32.neg", IMM_NONE),
    0x8D: ("f32.ceil", IMM_NONE),
    0x8E: ("f32.floor", IMM_NONE),
    0x8F: ("f32.trunc", IMM_NONE),
    0x90: ("f32.nearest", IMM_NONE),
    0x91: ("f32.sqrt", IMM_NONE),
    0x92: ("f32.add", IMM_NONE),
    0x93: ("f32.sub", IMM_NONE),
    0x94: ("f32.mul", IMM_NONE),
    0x95: ("f32.div", IMM_NONE),
    0x96: ("f32.min", IMM_NONE),
    0x97: ("f32.max", IMM_NONE),
    0x98: ("f32.copysign", IMM_NONE),
    0x99: ("f64.abs", IMM_NONE),
    0x9A: ("f64.neg", IMM_NONE),
    0x9B: ("f64.ceil", IMM_NONE),
    0x9C: ("f64.floor", IMM_NONE),
    0x9D: ("f64.trunc", IMM_NONE),
    0x9E: ("f64.nearest", IMM_NONE),
    0x9F: ("f64.sqrt", IMM_NONE),
    0xA0: ("f64.add", IMM_NONE),
    0xA1: ("f64.sub", IMM_NONE),
    0xA2: ("f64.mul", IMM_NONE),
    0xA3: ("f64.div", IMM_NONE),
    0xA4: ("f64.min", IMM_NONE),
    0xA5: ("f64.max", IMM_NONE),
    0xA6: ("f64.copysign", IMM_NONE),
    0xA7: ("i32.wrap_i64", IMM_NONE),
    0xA8: ("i32.trunc_f32_s", IMM_NONE),
    0xA9: ("i32.trunc_f32_u", IMM_NONE),
    0xAA: ("i32.trunc_f64_s", IMM_NONE),
    0xAB: ("i32.trunc_f64_u", IMM_NONE),
    0xAC: ("i64.extend_i32_s", IMM_NONE),
    0xAD: ("i64.extend_i32_u", IMM_NONE),
    0xAE: ("i64.trunc_f32_s", IMM_NONE),
    0xAF: ("i64.trunc_f32_u", IMM_NONE),
    0xB0: ("i64.trunc_f64_s", IMM_NONE),
    0xB1: ("i64.trunc_f64_u", IMM_NONE),
    0xB2: ("f32.convert_i32_s", IMM_NONE),
    0xB3: ("f32.convert_i32_u", IMM_NONE),
    0xB4: ("f32.convert_i64_s", IMM_NONE),
    0xB5: ("f32.convert_i64_u", IMM_NONE),
    0xB6: ("f32.demote_f64", IMM_NONE),
    0xB7: ("f64.convert_i32_s", IMM_NONE),
    0xB8: ("f64.convert_i32_u", IMM_NONE),
    0xB9: ("f64.convert_i64_s", IMM_NONE),
    0xBA: ("f64.convert_i64_u", IMM_NONE),
    0xBB: ("f64.promote_f32", IMM_NONE),
    0xBC: ("i32.reinterpret_f32", IMM_NONE),
    0xBD: ("i64.reinterpret_f64", IMM_NONE),
    0xBE: ("f32.reinterpret_i32", IMM_NONE),
    0xBF: ("f64.reinterpret_i64", IMM_NONE),
    0xC0: ("i32.extend8_s", IMM_NONE),
    0xC1: ("i32.extend16_s", IMM_NONE),
    0xC2: ("i64.extend8_s", IMM_NONE),
    0xC3: ("i64.extend16_s", IMM_NONE),
    0xC4: ("i64.extend32_s", IMM_NONE),
}

# 0xFC subspace: only the non-trapping float-to-int conversions are in scope.
FC_OPCODES: dict[int, str] = {
    0: "i32.trunc_sat_f32_s",
    1: "i32.trunc_sat_f32_u",
    2: "i32.trunc_sat_f64_s",
    3: "i32.trunc_sat_f64_u",
    4: "i64.trunc_sat_f32_s",
    5: "i64.trunc_sat_f32_u",
    6: "i64.trunc_sat_f64_s",
    7: "i64.trunc_sat_f64_u",
}

# opcode prefixes / leading bytes that identify known out-of-scope proposals,
# so rejection can name the feature instead of calling the byte malformed
PROPOSAL_OPCODES: dict[int, str] = {
    0x06: "exception-handling",
    0x07: "exception-handling",
    0x08: "exception-handling",
    0x09: "exception-handling",
    0x0A: "exception-handling",
    0x12: "tail-call",
    0x13: "tail-call",
    0x14: "function-references",
    0x19: "exception-handling",
    0x1C: "reference-types",
    0x25: "reference-types",
    0x26: "reference-types",
    0xD0: "reference-types",
    0xD1: "reference-types",
    0xD2: "reference-types",
    0xFD: "simd",
    0xFE: "threads",
}


def _family(prefix: str, names: str, sig: tuple[tuple[str, ...], tuple[str, ...]]):
    return {f"{prefix}.{n}": sig for n in names.split()}


# stack effect (params, results) for every straight-line operator;
# control flow, variable access, and calls are typed by the validator itself
TYPE_RULES: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {}
for _t in ("i32", "i64"):
    TYPE_RULES[f"{_t}.eqz"] = ((_t,), ("i32",))
    TYPE_RULES.update(_family(_t, "eq ne lt_s lt_u gt_s gt_u le_s le_u ge_s ge_u", ((_t, _t), ("i32",))))
    TYPE_RULES.update(_family(_t, "clz ctz popcnt", ((_t,), (_t,))))
    TYPE_RULES.update(
        _family(
            _t,
            "add sub mul div_s div_u rem_s rem_u and or xor shl shr_s shr_u rotl rotr",
            ((_t, _t), (_t,)),
        )
    )
for _t in ("f32", "f64"):
    TYPE_RULES.update(_family(_t, "eq ne lt gt le ge", ((_t, _t), ("i32",))))
    TYPE_RULES.update(_family(_t, "abs neg ceil floor trunc nearest sqrt", ((_t,), (_t,))))
    TYPE_RULES.update(_family(_t, "add sub mul div min max copysign", ((_t, _t), (_t,))))
for _t in ("i32", "i64", "f32", "f64"):
    TYPE_RULES[f"{_t}.const"] = ((), (_t,))
TYPE_RULES.update(
    {
        "i32.wrap_i64": (("i64",), ("i32",)),
        "i64.extend_i32_s": (("i32",), ("i64",)),
        "i64.extend_i32_u": (("i32",), ("i64",)),
        "f32.demote_f64": (("f64",), ("f32",)),
        "f64.promote_f32": (("f32",), ("f64",)),
        "i32.reinterpret_f32": (("f32",), ("i32",)),
        "i64.reinterpret_f64": (("f64",), ("i64",)),
        "f32.reinterpret_i32": (("i32",), ("f32",)),
        "f64.reinterpret_i64": (("i64",), ("f64",)),
        "i32.extend8_s": (("i32",), ("i32",)),
        "i32.extend16_s": (("i32",), ("i32",)),
        "i64.extend8_s": (("i64",), ("i64",)),
        "i64.extend16_s": (("i64",), ("i64",)),
        "i64.extend32_s": (("i64",), ("i64",)),
        "memory.size": ((), ("i32",)),
        "memory.grow": (("i32",), ("i32",)),
    }
)
for _i, _f in (("i32", "f32"), ("i32", "f64"), ("i64", "f32"), ("i64", "f64")):
    for _s in ("s", "u"):
        TYPE_RULES[f"{_i}.trunc_{_f}_{_s}"] = ((_f,), (_i,))
        TYPE_RULES[f"{_i}.trunc_sat_{_f}_{_s}"] = ((_f,), (_i,))
for _i in ("i32", "i64"):
    for _f in ("f32", "f64"):
        for _s in ("s", "u"):
            TYPE_RULES[f"{_f}.convert_{_i}_{_s}"] = ((_i,), (_f,))

# access width in bytes for every load/store, for alignment validation and
# bounds-check emission
MEM_ACCESS_WIDTH: dict[str, int] = {
    "i32.load": 4, "i64.load": 8, "f32.load": 4, "f64.load": 8,
    "i32.load8_s": 1, "i32.load8_u": 1, "i32.load16_s": 2, "i32.load16_u": 2,
    "i64.load8_s": 1, "i64.load8_u": 1, "i64.load16_s": 2, "i64.load16_u": 2,
    "i64.load32_s": 4, "i64.load32_u": 4,
    "i32.store": 4, "i64.store": 8, "f32.store": 4, "f64.store": 8,
    "i32.store8": 1, "i32.store16": 2,
    "i64.store8": 1, "i64.store16": 2, "i64.store32": 4,
}

# value type stored/loaded by each memory access
MEM_ACCESS_TYPE: dict[str, str] = {n: n.split(".")[0] for n in MEM_ACCESS_WIDTH}
