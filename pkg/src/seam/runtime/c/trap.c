#include "rt.h"

#include <stdio.h>
#include <stdlib.h>

static const char *trap_names[] = {
    [TRAP_OUT_OF_BOUNDS] = "out of bounds memory access",
    [TRAP_DIV_BY_ZERO] = "integer divide by zero",
    [TRAP_INT_OVERFLOW] = "integer overflow",
    [TRAP_UNREACHABLE] = "unreachable executed",
    [TRAP_CALL_TYPE] = "indirect call type mismatch",
    [TRAP_TABLE_OOB] = "table index out of bounds",
    [TRAP_STACK_EXHAUSTED] = "call stack exhausted",
};

void runtime_trap(uint32_t code)
{
    const char *name = "unknown trap";
    if (code >= 1 && code <= 7 && trap_names[code])
        name = trap_names[code];
    fprintf(stderr, "seam-rt: trap: %s (code %u)\n", name, code);
    fflush(NULL);
    exit(128 + (int)code);
}
