"""Lower a validated module to a single C translation unit.

The emitted C depends only on stdint.h and the three runtime hooks
(memory_base / memory_grow / runtime_trap); compiled with the flag set in
compile.py it produces an object whose undefined symbols are exactly the
module's WASI imports plus those hooks.

Lowering model: every value pushed on the Wasm operand stack becomes a
fresh single-assignment C temporary, so Wasm evaluation order is the
statement order and the optimizer sees plain scalar code. Blocks become
labels, branches become gotos that first store the block result.
"""

from __future__ import annotations

from ..errors import CodegenError, UnsupportedImportModule
from ..wasm import opcodes as op
from ..wasm.model import FuncType, Module, ValidatedModule
from .symbols import RESERVED_DEFINED, WASI_MODULE

CTYPE = {"i32": "uint32_t", "i64": "uint64_t", "f32": "float", "f64": "double"}
SIGCHAR = {"i32": "i", "i64": "I", "f32": "f", "f64": "F"}
ZERO = {"i32": "0u", "i64": "0ull", "f32": "0.0f", "f64": "0.0"}

TRAP_OOB = 1
TRAP_DIV_ZERO = 2
TRAP_OVERFLOW = 3
TRAP_UNREACHABLE = 4
TRAP_CALL_TYPE = 5
TRAP_TABLE_OOB = 6
TRAP_STACK = 7

CALL_DEPTH_LIMIT = 50000

PRELUDE = r"""
#include <stdint.h>

extern uint8_t *memory_base(void);
extern uint32_t memory_grow(uint32_t delta_pages);
extern void runtime_trap(uint32_t code) __attribute__((noreturn));

__attribute__((used)) static void *const sr_keep[] = {
    (void *)&memory_base, (void *)&memory_grow, (void *)&runtime_trap,
};

struct sr_export { const char *name; const char *sig; void (*fn)(void); };

typedef struct { uint16_t v; } __attribute__((packed)) sr_u16u;
typedef struct { uint32_t v; } __attribute__((packed)) sr_u32u;
typedef struct { uint64_t v; } __attribute__((packed)) sr_u64u;

static uint64_t sr_mem_bytes;
static uint32_t sr_depth;

static inline float sr_f32_frombits(uint32_t b) { union { uint32_t i; float f; } u; u.i = b; return u.f; }
static inline uint32_t sr_f32_tobits(float f) { union { uint32_t i; float f; } u; u.f = f; return u.i; }
static inline double sr_f64_frombits(uint64_t b) { union { uint64_t i; double f; } u; u.i = b; return u.f; }
static inline uint64_t sr_f64_tobits(double f) { union { uint64_t i; double f; } u; u.f = f; return u.i; }

static inline uint32_t sr_i32_div_s(uint32_t a, uint32_t b) {
    if ((int32_t)b == 0) runtime_trap(2);
    if ((int32_t)a == INT32_MIN && (int32_t)b == -1) runtime_trap(3);
    return (uint32_t)((int32_t)a / (int32_t)b);
}
static inline uint32_t sr_i32_div_u(uint32_t a, uint32_t b) {
    if (b == 0u) runtime_trap(2);
    return a / b;
}
static inline uint32_t sr_i32_rem_s(uint32_t a, uint32_t b) {
    if ((int32_t)b == 0) runtime_trap(2);
    if ((int32_t)b == -1) return 0u;
    return (uint32_t)((int32_t)a % (int32_t)b);
}
static inline uint32_t sr_i32_rem_u(uint32_t a, uint32_t b) {
    if (b == 0u) runtime_trap(2);
    return a % b;
}
static inline uint64_t sr_i64_div_s(uint64_t a, uint64_t b) {
    if ((int64_t)b == 0) runtime_trap(2);
    if ((int64_t)a == INT64_MIN && (int64_t)b == -1) runtime_trap(3);
    return (uint64_t)((int64_t)a / (int64_t)b);
}
static inline uint64_t sr_i64_div_u(uint64_t a, uint64_t b) {
    if (b == 0ull) runtime_trap(2);
    return a / b;
}
static inline uint64_t sr_i64_rem_s(uint64_t a, uint64_t b) {
    if ((int64_t)b == 0) runtime_trap(2);
    if ((int64_t)b == -1) return 0ull;
    return (uint64_t)((int64_t)a % (int64_t)b);
}
static inline uint64_t sr_i64_rem_u(uint64_t a, uint64_t b) {
    if (b == 0ull) runtime_trap(2);
    return a % b;
}

/* float rounding must never become a libm call (the object links against
 * nothing); use the rounding instructions directly where we know them */
#if defined(__x86_64__)
#define SR_ROUND64(name, imm) \
    static inline double name(double x) { double r; __asm__("roundsd $" #imm ", %1, %0" : "=x"(r) : "x"(x)); return r; }
#define SR_ROUND32(name, imm) \
    static inline float name(float x) { float r; __asm__("roundss $" #imm ", %1, %0" : "=x"(r) : "x"(x)); return r; }
SR_ROUND64(sr_f64_nearest_, 8)  /* 8 = imm: use bits[1:0]=00 nearest-even, suppress exceptions */
SR_ROUND64(sr_f64_floor_, 9)
SR_ROUND64(sr_f64_ceil_, 10)
SR_ROUND64(sr_f64_trunc_, 11)
SR_ROUND32(sr_f32_nearest_, 8)
SR_ROUND32(sr_f32_floor_, 9)
SR_ROUND32(sr_f32_ceil_, 10)
SR_ROUND32(sr_f32_trunc_, 11)
#elif defined(__aarch64__)
#define SR_ROUND64(name, insn) \
    static inline double name(double x) { double r; __asm__(insn " %d0, %d1" : "=w"(r) : "w"(x)); return r; }
#define SR_ROUND32(name, insn) \
    static inline float name(float x) { float r; __asm__(insn " %s0, %s1" : "=w"(r) : "w"(x)); return r; }
SR_ROUND64(sr_f64_nearest_, "frintn")
SR_ROUND64(sr_f64_floor_, "frintm")
SR_ROUND64(sr_f64_ceil_, "frintp")
SR_ROUND64(sr_f64_trunc_, "frintz")
SR_ROUND32(sr_f32_nearest_, "frintn")
SR_ROUND32(sr_f32_floor_, "frintm")
SR_ROUND32(sr_f32_ceil_, "frintp")
SR_ROUND32(sr_f32_trunc_, "frintz")
#else
static inline double sr_f64_trunc_(double x) {
    if (!(x == x) || x >= 4503599627370496.0 || x <= -4503599627370496.0) return x;
    double t = (double)(int64_t)x;
    return t == 0.0 ? __builtin_copysign(t, x) : t;
}
static inline double sr_f64_floor_(double x) {
    double t = sr_f64_trunc_(x);
    return (x < 0.0 && t != x) ? t - 1.0 : t;
}
static inline double sr_f64_ceil_(double x) {
    double t = sr_f64_trunc_(x);
    return (x > 0.0 && t != x) ? t + 1.0 : t;
}
static inline double sr_f64_nearest_(double x) {
    if (!(x == x) || x >= 4503599627370496.0 || x <= -4503599627370496.0) return x;
    double f = sr_f64_floor_(x), c = sr_f64_ceil_(x);
    double df = x - f, dc = c - x;
    double r = df < dc ? f : (dc < df ? c : (sr_f64_trunc_(f / 2.0) * 2.0 == f ? f : c));
    return r == 0.0 ? __builtin_copysign(r, x) : r;
}
static inline float sr_f32_trunc_(float x) {
    if (!(x == x) || x >= 8388608.0f || x <= -8388608.0f) return x;
    float t = (float)(int32_t)x;
    return t == 0.0f ? __builtin_copysignf(t, x) : t;
}
static inline float sr_f32_floor_(float x) {
    float t = sr_f32_trunc_(x);
    return (x < 0.0f && t != x) ? t - 1.0f : t;
}
static inline float sr_f32_ceil_(float x) {
    float t = sr_f32_trunc_(x);
    return (x > 0.0f && t != x) ? t + 1.0f : t;
}
static inline float sr_f32_nearest_(float x) {
    if (!(x == x) || x >= 8388608.0f || x <= -8388608.0f) return x;
    float f = sr_f32_floor_(x), c = sr_f32_ceil_(x);
    float df = x - f, dc = c - x;
    float r = df < dc ? f : (dc < df ? c : (sr_f32_trunc_(f / 2.0f) * 2.0f == f ? f : c));
    return r == 0.0f ? __builtin_copysignf(r, x) : r;
}
#endif

static inline uint32_t sr_i32_clz(uint32_t v) { return v ? (uint32_t)__builtin_clz(v) : 32u; }
static inline uint32_t sr_i32_ctz(uint32_t v) { return v ? (uint32_t)__builtin_ctz(v) : 32u; }
static inline uint64_t sr_i64_clz(uint64_t v) { return v ? (uint64_t)__builtin_clzll(v) : 64ull; }
static inline uint64_t sr_i64_ctz(uint64_t v) { return v ? (uint64_t)__builtin_ctzll(v) : 64ull; }
static inline uint32_t sr_i32_popcnt(uint32_t v) {
    v = v - ((v >> 1) & 0x55555555u);
    v = (v & 0x33333333u) + ((v >> 2) & 0x33333333u);
    return (((v + (v >> 4)) & 0x0f0f0f0fu) * 0x01010101u) >> 24;
}
static inline uint64_t sr_i64_popcnt(uint64_t v) {
    return (uint64_t)sr_i32_popcnt((uint32_t)v) + (uint64_t)sr_i32_popcnt((uint32_t)(v >> 32));
}
static inline uint32_t sr_i32_rotl(uint32_t a, uint32_t n) { n &= 31u; return n ? ((a << n) | (a >> (32u - n))) : a; }
static inline uint32_t sr_i32_rotr(uint32_t a, uint32_t n) { n &= 31u; return n ? ((a >> n) | (a << (32u - n))) : a; }
static inline uint64_t sr_i64_rotl(uint64_t a, uint64_t n) { n &= 63u; return n ? ((a << n) | (a >> (64u - n))) : a; }
static inline uint64_t sr_i64_rotr(uint64_t a, uint64_t n) { n &= 63u; return n ? ((a >> n) | (a << (64u - n))) : a; }

/* min/max follow Wasm: NaN if either side is NaN, and -0 orders below +0
   (bitwise or/and merges the sign bits of equal magnitudes) */
static inline float sr_f32_min(float a, float b) {
    if (a != a || b != b) return sr_f32_frombits(0x7fc00000u);
    if (a == b) return sr_f32_frombits(sr_f32_tobits(a) | sr_f32_tobits(b));
    return a < b ? a : b;
}
static inline float sr_f32_max(float a, float b) {
    if (a != a || b != b) return sr_f32_frombits(0x7fc00000u);
    if (a == b) return sr_f32_frombits(sr_f32_tobits(a) & sr_f32_tobits(b));
    return a > b ? a : b;
}
static inline double sr_f64_min(double a, double b) {
    if (a != a || b != b) return sr_f64_frombits(0x7ff8000000000000ull);
    if (a == b) return sr_f64_frombits(sr_f64_tobits(a) | sr_f64_tobits(b));
    return a < b ? a : b;
}
static inline double sr_f64_max(double a, double b) {
    if (a != a || b != b) return sr_f64_frombits(0x7ff8000000000000ull);
    if (a == b) return sr_f64_frombits(sr_f64_tobits(a) & sr_f64_tobits(b));
    return a > b ? a : b;
}

/* trapping float->int: promote to double (exact for f32), truncate, then
   range-check against the exact type bounds */
static inline uint32_t sr_i32_trunc_s(double d) {
    if (d != d) runtime_trap(3);
    d = sr_f64_trunc_(d);
    if (d < -2147483648.0 || d > 2147483647.0) runtime_trap(3);
    return (uint32_t)(int32_t)d;
}
static inline uint32_t sr_i32_trunc_u(double d) {
    if (d != d) runtime_trap(3);
    d = sr_f64_trunc_(d);
    if (d < 0.0 || d > 4294967295.0) runtime_trap(3);
    return (uint32_t)d;
}
static inline uint64_t sr_i64_trunc_s(double d) {
    if (d != d) runtime_trap(3);
    d = sr_f64_trunc_(d);
    if (d < -9223372036854775808.0 || d >= 9223372036854775808.0) runtime_trap(3);
    return (uint64_t)(int64_t)d;
}
static inline uint64_t sr_i64_trunc_u(double d) {
    if (d != d) runtime_trap(3);
    d = sr_f64_trunc_(d);
    if (d < 0.0 || d >= 18446744073709551616.0) runtime_trap(3);
    return (uint64_t)d;
}
static inline uint32_t sr_i32_trunc_sat_s(double d) {
    if (d != d) return 0u;
    d = sr_f64_trunc_(d);
    if (d < -2147483648.0) return 0x80000000u;
    if (d > 2147483647.0) return 0x7fffffffu;
    return (uint32_t)(int32_t)d;
}
static inline uint32_t sr_i32_trunc_sat_u(double d) {
    if (d != d) return 0u;
    d = sr_f64_trunc_(d);
    if (d < 0.0) return 0u;
    if (d > 4294967295.0) return 0xffffffffu;
    return (uint32_t)d;
}
static inline uint64_t sr_i64_trunc_sat_s(double d) {
    if (d != d) return 0ull;
    d = sr_f64_trunc_(d);
    if (d < -9223372036854775808.0) return 0x8000000000000000ull;
    if (d >= 9223372036854775808.0) return 0x7fffffffffffffffull;
    return (uint64_t)(int64_t)d;
}
static inline uint64_t sr_i64_trunc_sat_u(double d) {
    if (d != d) return 0ull;
    d = sr_f64_trunc_(d);
    if (d < 0.0) return 0ull;
    if (d >= 18446744073709551616.0) return 0xffffffffffffffffull;
    return (uint64_t)d;
}
"""


def _c_string(s: str) -> str:
    out = []
    for ch in s:
        o = ord(ch)
        if ch in ('"', "\\"):
            out.append("\\" + ch)
        elif 32 <= o < 127:
            out.append(ch)
        else:
            for b in ch.encode("utf-8"):
                out.append(f"\\{b:03o}")
    return '"' + "".join(out) + '"'


def _sig_string(ft: FuncType) -> str:
    return "".join(SIGCHAR[p] for p in ft.params) + ":" + "".join(SIGCHAR[r] for r in ft.results)


class _Block:
    __slots__ = ("bid", "kind", "rt")

    def __init__(self, bid: int, kind: str, rt: str | None):
        self.bid = bid
        self.kind = kind  # "func" | "block" | "loop" | "if"
        self.rt = rt


class _FuncEmitter:
    def __init__(self, gen: "CGen", func_index: int):
        self.gen = gen
        self.m = gen.m
        self.func_index = func_index
        self.ftype = self.m.func_type(func_index)
        self.fb = self.m.functions[func_index - self.m.num_imported_funcs]
        self.local_types = list(self.ftype.params) + list(self.fb.locals)
        self.lines: list[str] = []
        self.ntmp = 0
        self.nblock = 0
        self.stack: list[tuple[str, str]] = []
        self.blocks: list[_Block] = [_Block(-1, "func", self.ftype.results[0] if self.ftype.results else None)]
        self.dead = False
        self.uses_mem = self._scan_mem(self.fb.body)

    def _scan_mem(self, instrs) -> bool:
        for ins in instrs:
            name = ins[0]
            if name in op.MEM_ACCESS_WIDTH:
                return True
            if name in ("block", "loop") and self._scan_mem(ins[2]):
                return True
            if name == "if" and (self._scan_mem(ins[2]) or self._scan_mem(ins[3])):
                return True
        return False

    # -- emission helpers --------------------------------------------------

    def line(self, s: str):
        self.lines.append("    " + s)

    def tmp(self, vt: str, expr: str) -> str:
        v = f"t{self.ntmp}"
        self.ntmp += 1
        self.line(f"{CTYPE[vt]} {v} = {expr};")
        return v

    def push(self, var: str, vt: str):
        self.stack.append((var, vt))

    def pop(self) -> tuple[str, str]:
        return self.stack.pop()

    def push_expr(self, vt: str, expr: str):
        self.push(self.tmp(vt, expr), vt)

    def emit_return(self):
        self.line("sr_depth--;")
        if self.ftype.results:
            v, _ = self.pop()
            self.line(f"return {v};")
        else:
            self.line("return;")

    def branch_stmts(self, depth: int) -> str:
        """C statements realizing a branch to the given label depth (peeks
        the stack; used by br, br_if taken-arm, and br_table cases)."""
        target = self.blocks[-1 - depth]
        if target.kind == "func":
            if target.rt:
                v, _ = self.stack[-1]
                return f"sr_depth--; return {v};"
            return "sr_depth--; return;"
        if target.kind == "loop":
            return f"goto L{target.bid}_c;"
        if target.rt:
            v, _ = self.stack[-1]
            return f"b{target.bid} = {v}; goto L{target.bid}_e;"
        return f"goto L{target.bid}_e;"

    # -- structured control -------------------------------------------------

    def emit_body(self, instrs):
        for ins in instrs:
            if self.dead:
                break
            self.emit(ins)

    def enter_block(self, kind: str, rt: str | None) -> _Block:
        bid = self.nblock
        self.nblock += 1
        blk = _Block(bid, kind, rt)
        if rt:
            self.line(f"{CTYPE[rt]} b{bid} = {ZERO[rt]};")
        self.blocks.append(blk)
        return blk

    def close_body(self, blk: _Block, saved_height: int):
        """Store the fallthrough result and reset the virtual stack."""
        if not self.dead and blk.rt:
            v, _ = self.pop()
            self.line(f"b{blk.bid} = {v};")
        del self.stack[saved_height:]
        self.dead = False

    def emit(self, ins: tuple):
        name = ins[0]
        gen = self.gen

        if name == "block":
            blk = self.enter_block("block", ins[1])
            h = len(self.stack)
            self.emit_body(ins[2])
            self.close_body(blk, h)
            self.line(f"L{blk.bid}_e:;")
            self.blocks.pop()
            if blk.rt:
                self.push(f"b{blk.bid}", blk.rt)
            return
        if name == "loop":
            blk = self.enter_block("loop", ins[1])
            self.line(f"L{blk.bid}_c:;")
            h = len(self.stack)
            self.emit_body(ins[2])
            self.close_body(blk, h)
            self.blocks.pop()
            if blk.rt:
                self.push(f"b{blk.bid}", blk.rt)
            return
        if name == "if":
            cv, _ = self.pop()
            blk = self.enter_block("if", ins[1])
            h = len(self.stack)
            self.line(f"if ({cv}) {{")
            self.emit_body(ins[2])
            self.close_body(blk, h)
            if ins[3] or blk.rt:
                self.line("} else {")
                self.emit_body(ins[3])
                self.close_body(blk, h)
            self.line("}")
            self.line(f"L{blk.bid}_e:;")
            self.blocks.pop()
            if blk.rt:
                self.push(f"b{blk.bid}", blk.rt)
            return
        if name == "br":
            self.line(self.branch_stmts(ins[1]))
            self.dead = True
            return
        if name == "br_if":
            cv, _ = self.pop()
            self.line(f"if ({cv}) {{ {self.branch_stmts(ins[1])} }}")
            return
        if name == "br_table":
            iv, _ = self.pop()
            targets, default = ins[1], ins[2]
            self.line(f"switch ({iv}) {{")
            for i, t in enumerate(targets):
                self.line(f"    case {i}u: {self.branch_stmts(t)}")
            self.line(f"    default: {self.branch_stmts(default)}")
            self.line("}")
            self.dead = True
            return
        if name == "return":
            self.emit_return()
            self.dead = True
            return
        if name == "unreachable":
            self.line(f"runtime_trap({TRAP_UNREACHABLE}u);")
            self.dead = True
            return
        if name == "nop":
            return

        if name == "call":
            callee = ins[1]
            sig = self.m.func_type(callee)
            args = [self.pop()[0] for _ in sig.params][::-1]
            cname = gen.func_cname(callee)
            callexpr = f"{cname}({', '.join(args)})"
            if sig.results:
                self.push_expr(sig.results[0], callexpr)
            else:
                self.line(callexpr + ";")
            return
        if name == "call_indirect":
            sig = self.m.types[ins[1]]
            tid = gen.vm.type_ids[sig]
            iv, _ = self.pop()
            args = [self.pop()[0] for _ in sig.params][::-1]
            self.line(f"if ({iv} >= {gen.table_size}u) runtime_trap({TRAP_TABLE_OOB}u);")
            self.line(f"if (sr_table[{iv}].tid != {tid}u) runtime_trap({TRAP_CALL_TYPE}u);")
            rett = CTYPE[sig.results[0]] if sig.results else "void"
            argts = ", ".join(CTYPE[p] for p in sig.params) or "void"
            callexpr = f"(({rett} (*)({argts}))sr_table[{iv}].fn)({', '.join(args)})"
            if sig.results:
                self.push_expr(sig.results[0], callexpr)
            else:
                self.line(callexpr + ";")
            return

        if name == "drop":
            self.pop()
            return
        if name == "select":
            cv, _ = self.pop()
            v2, t2 = self.pop()
            v1, t1 = self.pop()
            self.push_expr(t1 if t1 else t2, f"{cv} ? {v1} : {v2}")
            return
        if name == "local.get":
            vt = self.local_types[ins[1]]
            self.push_expr(vt, f"l{ins[1]}")
            return
        if name == "local.set":
            v, _ = self.pop()
            self.line(f"l{ins[1]} = {v};")
            return
        if name == "local.tee":
            v, vt = self.stack[-1]
            self.line(f"l{ins[1]} = {v};")
            return
        if name == "global.get":
            g = self.m.globals[ins[1]]
            self.push_expr(g.valtype, f"g{ins[1]}")
            return
        if name == "global.set":
            v, _ = self.pop()
            self.line(f"g{ins[1]} = {v};")
            return

        if name in op.MEM_ACCESS_WIDTH:
            self.emit_mem(name, ins[1], ins[2])
            return
        if name == "memory.size":
            self.push_expr("i32", "memory_grow(0u)")
            return
        if name == "memory.grow":
            dv, _ = self.pop()
            res = self.tmp("i32", f"memory_grow({dv})")
            self.line(f"if ({res} != 0xffffffffu) sr_mem_bytes = ((uint64_t){res} + (uint64_t){dv}) << 16;")
            self.push(res, "i32")
            return

        if name == "i32.const":
            self.push_expr("i32", f"{ins[1] & 0xFFFFFFFF}u")
            return
        if name == "i64.const":
            self.push_expr("i64", f"{ins[1] & 0xFFFFFFFFFFFFFFFF}ull")
            return
        if name == "f32.const":
            self.push_expr("f32", f"sr_f32_frombits({ins[1]:#x}u)")
            return
        if name == "f64.const":
            self.push_expr("f64", f"sr_f64_frombits({ins[1]:#x}ull)")
            return

        if name in _NUMERIC:
            self.emit_numeric(name)
            return
        raise CodegenError(f"no lowering for instruction {name}")  # pragma: no cover

    # -- memory and numeric lowering ----------------------------------------

    def emit_mem(self, name: str, align: int, offset: int):
        width = op.MEM_ACCESS_WIDTH[name]
        vt = op.MEM_ACCESS_TYPE[name]
        is_store = "store" in name
        if is_store:
            val, _ = self.pop()
        addr, _ = self.pop()
        ea = f"a{self.ntmp}"
        self.ntmp += 1
        self.line(f"uint64_t {ea} = (uint64_t){addr} + {offset}ull;")
        self.line(f"if ({ea} + {width}ull > sr_mem_bytes) runtime_trap({TRAP_OOB}u);")
        ptr = f"(mb + {ea})"
        if is_store:
            if name == "f32.store":
                self.line(f"((sr_u32u *){ptr})->v = sr_f32_tobits({val});")
            elif name == "f64.store":
                self.line(f"((sr_u64u *){ptr})->v = sr_f64_tobits({val});")
            elif width == 1:
                self.line(f"*{ptr} = (uint8_t){val};")
            elif width == 2:
                self.line(f"((sr_u16u *){ptr})->v = (uint16_t){val};")
            elif width == 4:
                self.line(f"((sr_u32u *){ptr})->v = (uint32_t){val};")
            else:
                self.line(f"((sr_u64u *){ptr})->v = {val};")
            return
        if name == "f32.load":
            self.push_expr("f32", f"sr_f32_frombits(((const sr_u32u *){ptr})->v)")
        elif name == "f64.load":
            self.push_expr("f64", f"sr_f64_frombits(((const sr_u64u *){ptr})->v)")
        else:
            loads = {
                ("i32", 4, False): "((const sr_u32u *){p})->v",
                ("i32", 1, True): "(uint32_t)(int32_t)(int8_t)*{p}",
                ("i32", 1, False): "(uint32_t)*{p}",
                ("i32", 2, True): "(uint32_t)(int32_t)(int16_t)((const sr_u16u *){p})->v",
                ("i32", 2, False): "(uint32_t)((const sr_u16u *){p})->v",
                ("i64", 8, False): "((const sr_u64u *){p})->v",
                ("i64", 1, True): "(uint64_t)(int64_t)(int8_t)*{p}",
                ("i64", 1, False): "(uint64_t)*{p}",
                ("i64", 2, True): "(uint64_t)(int64_t)(int16_t)((const sr_u16u *){p})->v",
                ("i64", 2, False): "(uint64_t)((const sr_u16u *){p})->v",
                ("i64", 4, True): "(uint64_t)(int64_t)(int32_t)((const sr_u32u *){p})->v",
                ("i64", 4, False): "(uint64_t)((const sr_u32u *){p})->v",
            }
            signed = name.endswith("_s")
            self.push_expr(vt, loads[(vt, width, signed)].format(p=ptr))

    def emit_numeric(self, name: str):
        params, results = op.TYPE_RULES[name]
        args = [self.pop()[0] for _ in params][::-1]
        expr = _NUMERIC[name](*args)
        self.push_expr(results[0], expr)

    # -- whole function -----------------------------------------------------

    def emit_func(self) -> str:
        params = ", ".join(f"{CTYPE[t]} l{i}" for i, t in enumerate(self.ftype.params)) or "void"
        rett = CTYPE[self.ftype.results[0]] if self.ftype.results else "void"
        head = f"static {rett} {self.gen.func_cname(self.func_index)}({params}) {{"
        self.line(f"if (sr_depth++ >= {CALL_DEPTH_LIMIT}u) runtime_trap({TRAP_STACK}u);")
        if self.uses_mem:
            self.line("uint8_t *const mb = memory_base();")
        nparams = len(self.ftype.params)
        for i, t in enumerate(self.fb.locals):
            self.line(f"{CTYPE[t]} l{nparams + i} = {ZERO[t]};")
        self.emit_body(self.fb.body)
        if not self.dead:
            self.emit_return()
        return head + "\n" + "\n".join(self.lines) + "\n}"


def _s32(a):  # reinterpret helpers for expression text
    return f"(int32_t){a}"


def _s64(a):
    return f"(int64_t){a}"


_NUMERIC = {
    "i32.eqz": lambda a: f"({a} == 0u)",
    "i32.eq": lambda a, b: f"({a} == {b})",
    "i32.ne": lambda a, b: f"({a} != {b})",
    "i32.lt_s": lambda a, b: f"({_s32(a)} < {_s32(b)})",
    "i32.lt_u": lambda a, b: f"({a} < {b})",
    "i32.gt_s": lambda a, b: f"({_s32(a)} > {_s32(b)})",
    "i32.gt_u": lambda a, b: f"({a} > {b})",
    "i32.le_s": lambda a, b: f"({_s32(a)} <= {_s32(b)})",
    "i32.le_u": lambda a, b: f"({a} <= {b})",
    "i32.ge_s": lambda a, b: f"({_s32(a)} >= {_s32(b)})",
    "i32.ge_u": lambda a, b: f"({a} >= {b})",
    "i64.eqz": lambda a: f"({a} == 0ull)",
    "i64.eq": lambda a, b: f"({a} == {b})",
    "i64.ne": lambda a, b: f"({a} != {b})",
    "i64.lt_s": lambda a, b: f"({_s64(a)} < {_s64(b)})",
    "i64.lt_u": lambda a, b: f"({a} < {b})",
    "i64.gt_s": lambda a, b: f"({_s64(a)} > {_s64(b)})",
    "i64.gt_u": lambda a, b: f"({a} > {b})",
    "i64.le_s": lambda a, b: f"({_s64(a)} <= {_s64(b)})",
    "i64.le_u": lambda a, b: f"({a} <= {b})",
    "i64.ge_s": lambda a, b: f"({_s64(a)} >= {_s64(b)})",
    "i64.ge_u": lambda a, b: f"({a} >= {b})",
    "f32.eq": lambda a, b: f"({a} == {b})",
    "f32.ne": lambda a, b: f"({a} != {b})",
    "f32.lt": lambda a, b: f"({a} < {b})",
    "f32.gt": lambda a, b: f"({a} > {b})",
    "f32.le": lambda a, b: f"({a} <= {b})",
    "f32.ge": lambda a, b: f"({a} >= {b})",
    "f64.eq": lambda a, b: f"({a} == {b})",
    "f64.ne": lambda a, b: f"({a} != {b})",
    "f64.lt": lambda a, b: f"({a} < {b})",
    "f64.gt": lambda a, b: f"({a} > {b})",
    "f64.le": lambda a, b: f"({a} <= {b})",
    "f64.ge": lambda a, b: f"({a} >= {b})",
    "i32.clz": lambda a: f"sr_i32_clz({a})",
    "i32.ctz": lambda a: f"sr_i32_ctz({a})",
    "i32.popcnt": lambda a: f"sr_i32_popcnt({a})",
    "i32.add": lambda a, b: f"{a} + {b}",
    "i32.sub": lambda a, b: f"{a} - {b}",
    "i32.mul": lambda a, b: f"{a} * {b}",
    "i32.div_s": lambda a, b: f"sr_i32_div_s({a}, {b})",
    "i32.div_u": lambda a, b: f"sr_i32_div_u({a}, {b})",
    "i32.rem_s": lambda a, b: f"sr_i32_rem_s({a}, {b})",
    "i32.rem_u": lambda a, b: f"sr_i32_rem_u({a}, {b})",
    "i32.and": lambda a, b: f"{a} & {b}",
    "i32.or": lambda a, b: f"{a} | {b}",
    "i32.xor": lambda a, b: f"{a} ^ {b}",
    "i32.shl": lambda a, b: f"{a} << ({b} & 31u)",
    "i32.shr_s": lambda a, b: f"(uint32_t)({_s32(a)} >> ({b} & 31u))",
    "i32.shr_u": lambda a, b: f"{a} >> ({b} & 31u)",
    "i32.rotl": lambda a, b: f"sr_i32_rotl({a}, {b})",
    "i32.rotr": lambda a, b: f"sr_i32_rotr({a}, {b})",
    "i64.clz": lambda a: f"sr_i64_clz({a})",
    "i64.ctz": lambda a: f"sr_i64_ctz({a})",
    "i64.popcnt": lambda a: f"sr_i64_popcnt({a})",
    "i64.add": lambda a, b: f"{a} + {b}",
    "i64.sub": lambda a, b: f"{a} - {b}",
    "i64.mul": lambda a, b: f"{a} * {b}",
    "i64.div_s": lambda a, b: f"sr_i64_div_s({a}, {b})",
    "i64.div_u": lambda a, b: f"sr_i64_div_u({a}, {b})",
    "i64.rem_s": lambda a, b: f"sr_i64_rem_s({a}, {b})",
    "i64.rem_u": lambda a, b: f"sr_i64_rem_u({a}, {b})",
    "i64.and": lambda a, b: f"{a} & {b}",
    "i64.or": lambda a, b: f"{a} | {b}",
    "i64.xor": lambda a, b: f"{a} ^ {b}",
    "i64.shl": lambda a, b: f"{a} << ({b} & 63u)",
    "i64.shr_s": lambda a, b: f"(uint64_t)({_s64(a)} >> ({b} & 63u))",
    "i64.shr_u": lambda a, b: f"{a} >> ({b} & 63u)",
    "i64.rotl": lambda a, b: f"sr_i64_rotl({a}, {b})",
    "i64.rotr": lambda a, b: f"sr_i64_rotr({a}, {b})",
    "f32.abs": lambda a: f"__builtin_fabsf({a})",
    "f32.neg": lambda a: f"-{a}",
    "f32.ceil": lambda a: f"sr_f32_ceil_({a})",
    "f32.floor": lambda a: f"sr_f32_floor_({a})",
    "f32.trunc": lambda a: f"sr_f32_trunc_({a})",
    "f32.nearest": lambda a: f"sr_f32_nearest_({a})",
    "f32.sqrt": lambda a: f"__builtin_sqrtf({a})",
    "f32.add": lambda a, b: f"{a} + {b}",
    "f32.sub": lambda a, b: f"{a} - {b}",
    "f32.mul": lambda a, b: f"{a} * {b}",
    "f32.div": lambda a, b: f"{a} / {b}",
    "f32.min": lambda a, b: f"sr_f32_min({a}, {b})",
    "f32.max": lambda a, b: f"sr_f32_max({a}, {b})",
    "f32.copysign": lambda a, b: f"__builtin_copysignf({a}, {b})",
    "f64.abs": lambda a: f"__builtin_fabs({a})",
    "f64.neg": lambda a: f"-{a}",
    "f64.ceil": lambda a: f"sr_f64_ceil_({a})",
    "f64.floor": lambda a: f"sr_f64_floor_({a})",
    "f64.trunc": lambda a: f"sr_f64_trunc_({a})",
    "f64.nearest": lambda a: f"sr_f64_nearest_({a})",
    "f64.sqrt": lambda a: f"__builtin_sqrt({a})",
    "f64.add": lambda a, b: f"{a} + {b}",
    "f64.sub": lambda a, b: f"{a} - {b}",
    "f64.mul": lambda a, b: f"{a} * {b}",
    "f64.div": lambda a, b: f"{a} / {b}",
    "f64.min": lambda a, b: f"sr_f64_min({a}, {b})",
    "f64.max": lambda a, b: f"sr_f64_max({a}, {b})",
    "f64.copysign": lambda a, b: f"__builtin_copysign({a}, {b})",
    "i32.wrap_i64": lambda a: f"(uint32_t){a}",
    "i32.trunc_f32_s": lambda a: f"sr_i32_trunc_s((double){a})",
    "i32.trunc_f32_u": lambda a: f"sr_i32_trunc_u((double){a})",
    "i32.trunc_f64_s": lambda a: f"sr_i32_trunc_s({a})",
    "i32.trunc_f64_u": lambda a: f"sr_i32_trunc_u({a})",
    "i64.extend_i32_s": lambda a: f"(uint64_t)(int64_t)(int32_t){a}",
    "i64.extend_i32_u": lambda a: f"(uint64_t){a}",
    "i64.trunc_f32_s": lambda a: f"sr_i64_trunc_s((double){a})",
    "i64.trunc_f32_u": lambda a: f"sr_i64_trunc_u((double){a})",
    "i64.trunc_f64_s": lambda a: f"sr_i64_trunc_s({a})",
    "i64.trunc_f64_u": lambda a: f"sr_i64_trunc_u({a})",
    "f32.convert_i32_s": lambda a: f"(float)(int32_t){a}",
    "f32.convert_i32_u": lambda a: f"(float){a}",
    "f32.convert_i64_s": lambda a: f"(float)(int64_t){a}",
    "f32.convert_i64_u": lambda a: f"(float){a}",
    "f32.demote_f64": lambda a: f"(float){a}",
    "f64.convert_i32_s": lambda a: f"(double)(int32_t){a}",
    "f64.convert_i32_u": lambda a: f"(double){a}",
    "f64.convert_i64_s": lambda a: f"(double)(int64_t){a}",
    "f64.convert_i64_u": lambda a: f"(double){a}",
    "f64.promote_f32": lambda a: f"(double){a}",
    "i32.reinterpret_f32": lambda a: f"sr_f32_tobits({a})",
    "i64.reinterpret_f64": lambda a: f"sr_f64_tobits({a})",
    "f32.reinterpret_i32": lambda a: f"sr_f32_frombits({a})",
    "f64.reinterpret_i64": lambda a: f"sr_f64_frombits({a})",
    "i32.extend8_s": lambda a: f"(uint32_t)(int32_t)(int8_t){a}",
    "i32.extend16_s": lambda a: f"(uint32_t)(int32_t)(int16_t){a}",
    "i64.extend8_s": lambda a: f"(uint64_t)(int64_t)(int8_t){a}",
    "i64.extend16_s": lambda a: f"(uint64_t)(int64_t)(int16_t){a}",
    "i64.extend32_s": lambda a: f"(uint64_t)(int64_t)(int32_t){a}",
}
_NUMERIC.update({
    "i32.trunc_sat_f32_s": lambda a: f"sr_i32_trunc_sat_s((double){a})",
    "i32.trunc_sat_f32_u": lambda a: f"sr_i32_trunc_sat_u((double){a})",
    "i32.trunc_sat_f64_s": lambda a: f"sr_i32_trunc_sat_s({a})",
    "i32.trunc_sat_f64_u": lambda a: f"sr_i32_trunc_sat_u({a})",
    "i64.trunc_sat_f32_s": lambda a: f"sr_i64_trunc_sat_s((double){a})",
    "i64.trunc_sat_f32_u": lambda a: f"sr_i64_trunc_sat_u((double){a})",
    "i64.trunc_sat_f64_s": lambda a: f"sr_i64_trunc_sat_s({a})",
    "i64.trunc_sat_f64_u": lambda a: f"sr_i64_trunc_sat_u({a})",
})


class CGen:
    """Whole-module C emission."""

    def __init__(self, vm: ValidatedModule):
        self.vm = vm
        self.m: Module = vm.module
        self.table_size = self.m.table.initial if self.m.table else 0
        self._check_imports()

    def _check_imports(self):
        seen: dict[str, FuncType] = {}
        for imp in self.m.imports:
            if imp.module != WASI_MODULE:
                raise UnsupportedImportModule(imp.module)
            if not _is_c_ident(imp.name):
                raise CodegenError(f"import name {imp.name!r} is not a linkable symbol")
            sig = self.m.types[imp.type_index]
            if imp.name in seen and seen[imp.name] != sig:
                raise CodegenError(f"import {imp.name!r} declared twice with different signatures")
            seen[imp.name] = sig

    def func_cname(self, func_index: int) -> str:
        if func_index < self.m.num_imported_funcs:
            return self.m.imports[func_index].name
        return f"wf{func_index}"

    def exported_funcs(self) -> list[tuple[str, int]]:
        return [(e.name, e.index) for e in self.m.exports if e.kind == "func"]

    def emit(self) -> str:
        m = self.m
        parts = [PRELUDE]

        # imported WASI functions, declared once per distinct field name;
        # the keep array forces the undefined symbol into the object even
        # when an import is never called, so object and manifest agree
        declared: list[str] = []
        for imp in m.imports:
            if imp.name in declared:
                continue
            declared.append(imp.name)
            sig = m.types[imp.type_index]
            rett = CTYPE[sig.results[0]] if sig.results else "void"
            args = ", ".join(CTYPE[p] for p in sig.params) or "void"
            parts.append(f"extern {rett} {imp.name}({args});")
        if declared:
            refs = ", ".join(f"(void *)&{n}" for n in declared)
            parts.append(
                f"__attribute__((used)) static void *const sr_keep_imports[] = {{{refs}}};"
            )

        if self.table_size or m.table is not None:
            parts.append(
                f"static struct {{ uint32_t tid; void (*fn)(void); }} sr_table[{max(self.table_size, 1)}];"
            )
        for i, g in enumerate(m.globals):
            parts.append(f"static {CTYPE[g.valtype]} g{i};")
        for i in range(len(m.functions)):
            fi = m.num_imported_funcs + i
            ftype = m.func_type(fi)
            rett = CTYPE[ftype.results[0]] if ftype.results else "void"
            args = ", ".join(CTYPE[p] for p in ftype.params) or "void"
            parts.append(f"static {rett} wf{fi}({args});")
        for i, seg in enumerate(m.data_segments):
            if seg.data:
                lit = ", ".join(str(b) for b in seg.data)
                parts.append(f"static const uint8_t sr_data{i}[] = {{{lit}}};")

        for i in range(len(m.functions)):
            parts.append(_FuncEmitter(self, m.num_imported_funcs + i).emit_func())

        parts.append(self._emit_init())
        parts.extend(self._emit_exports())
        parts.append(self._emit_memory_spec())
        return "\n\n".join(parts) + "\n"

    def _emit_init(self) -> str:
        m = self.m
        lines = ["void wasm_init(void) {"]
        if m.memory is not None:
            lines.append("    sr_mem_bytes = (uint64_t)memory_grow(0u) << 16;")
        if m.data_segments:
            lines.append("    uint8_t *const mb = memory_base();")
        if m.table is not None:
            lines.append(f"    for (uint32_t i = 0; i < {max(self.table_size, 1)}u; i++) sr_table[i].tid = 0xffffffffu;")
        for seg in m.elements:
            off = seg.offset[1] & 0xFFFFFFFF
            lines.append(
                f"    if ((uint64_t){off}u + {len(seg.func_indices)}ull > {self.table_size}ull) runtime_trap({TRAP_TABLE_OOB}u);"
            )
            for k, fi in enumerate(seg.func_indices):
                tid = self.vm.type_ids[m.func_type(fi)]
                lines.append(f"    sr_table[{off + k}u].tid = {tid}u;")
                lines.append(f"    sr_table[{off + k}u].fn = (void (*)(void)){self.func_cname(fi)};")
        for i, g in enumerate(m.globals):
            name, val = g.init[0], g.init[1]
            if name == "i32.const":
                lines.append(f"    g{i} = {val & 0xFFFFFFFF}u;")
            elif name == "i64.const":
                lines.append(f"    g{i} = {val & 0xFFFFFFFFFFFFFFFF}ull;")
            elif name == "f32.const":
                lines.append(f"    g{i} = sr_f32_frombits({val:#x}u);")
            else:
                lines.append(f"    g{i} = sr_f64_frombits({val:#x}ull);")
        for i, seg in enumerate(m.data_segments):
            off = seg.offset[1] & 0xFFFFFFFF
            lines.append(
                f"    if ((uint64_t){off}u + {len(seg.data)}ull > sr_mem_bytes) runtime_trap({TRAP_OOB}u);"
            )
            if seg.data:
                # volatile keeps the compiler from recognizing the loop as
                # memcpy and emitting a libc call into the object
                lines.append(f"    {{ volatile uint8_t *d = mb + {off}u;")
                lines.append(f"      for (uint32_t k = 0; k < {len(seg.data)}u; k++) d[k] = sr_data{i}[k]; }}")
        if m.start is not None:
            lines.append(f"    {self.func_cname(m.start)}();")
        lines.append("}")
        return "\n".join(lines)

    def _emit_exports(self) -> list[str]:
        m = self.m
        parts: list[str] = []
        entries: list[str] = []
        for name, idx in self.exported_funcs():
            sym = f"wasm_{name}"
            if sym in RESERVED_DEFINED:
                raise CodegenError(f"export {name!r} collides with reserved runtime symbol {sym}")
            sig = m.func_type(idx)
            rett = CTYPE[sig.results[0]] if sig.results else "void"
            argdecl = ", ".join(f"{CTYPE[p]} a{j}" for j, p in enumerate(sig.params)) or "void"
            argpass = ", ".join(f"a{j}" for j in range(len(sig.params)))
            alias = f"sr_exp_{_mangle(name)}"
            # exotic export names need GAS quoted-symbol syntax in the label
            label = sym if _is_c_ident(sym) else f'\\"{_c_string(sym)[1:-1]}\\"'
            parts.append(f'{rett} {alias}({argdecl}) __asm__("{label}");')
            body = f"return {self.func_cname(idx)}({argpass});" if sig.results else f"{self.func_cname(idx)}({argpass});"
            parts.append(f"{rett} {alias}({argdecl}) {{ {body} }}")
            entries.append(
                f"{{{_c_string(name)}, {_c_string(_sig_string(sig))}, (void (*)(void)){self.func_cname(idx)}}}"
            )
        if entries:
            parts.append("const struct sr_export wasm_exports[] = {\n    " + ",\n    ".join(entries) + ",\n};")
        else:
            parts.append("const struct sr_export wasm_exports[1] = {{0, 0, 0}};")
        parts.append(f"const uint32_t wasm_exports_count = {len(entries)}u;")
        return parts

    def _emit_memory_spec(self) -> str:
        if self.m.memory is None:
            return "const uint32_t wasm_memory_spec[2] = {0u, 0u};"
        spec = self.m.memory
        return f"const uint32_t wasm_memory_spec[2] = {{{spec.initial_pages}u, {spec.effective_max}u}};"

    def manifest_symbols(self) -> tuple[list[str], list[str]]:
        defined = sorted(set(RESERVED_DEFINED) | {f"wasm_{n}" for n, _ in self.exported_funcs()})
        unresolved = sorted({imp.name for imp in self.m.imports} | set(("memory_base", "memory_grow", "runtime_trap")))
        return defined, unresolved


def _mangle(name: str) -> str:
    return "".join(ch if ch.isalnum() else f"_{ord(ch):02x}_" for ch in name)


def _is_c_ident(name: str) -> bool:
    if not name:
        return False
    ok_first = name[0].isalpha() or name[0] == "_"
    return ok_first and all(ch.isalnum() or ch == "_" for ch in name)
