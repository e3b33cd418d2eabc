/* Linear memory manager.
 *
 * One reservation of max_pages is made up front with PROT_NONE, aligned to
 * the 65536-byte page size, and the base never changes afterwards; growth
 * only flips reserved pages to read-write. That keeps the compiler's
 * cached-base optimization sound and the region disjoint from the runtime
 * heap and stacks. */
#include "rt.h"

#include <stdio.h>
#include <string.h>
#include <sys/mman.h>

#define WASM_PAGE 65536ull

static uint8_t *lm_base;
static uint64_t lm_committed; /* pages */
static uint64_t lm_max;       /* pages */
static void *lm_raw;          /* original mapping, for the test-only reset */
static uint64_t lm_raw_len;

int rt_mem_init(uint32_t initial_pages, uint32_t max_pages)
{
    if (lm_base)
        return -1;
    if (initial_pages > max_pages)
        return -1;
    lm_max = max_pages;
    uint64_t reserve = (uint64_t)max_pages * WASM_PAGE;
    if (reserve == 0)
        reserve = WASM_PAGE; /* no-memory module: keep a stable, inaccessible base */
    /* over-reserve to align the base to a full Wasm page */
    lm_raw_len = reserve + WASM_PAGE;
    lm_raw = mmap(NULL, lm_raw_len, PROT_NONE,
                  MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
    if (lm_raw == MAP_FAILED) {
        lm_raw = NULL;
        return -1;
    }
    uintptr_t aligned = ((uintptr_t)lm_raw + WASM_PAGE - 1) & ~(uintptr_t)(WASM_PAGE - 1);
    lm_base = (uint8_t *)aligned;
    lm_committed = 0;
    if (initial_pages) {
        if (mprotect(lm_base, (size_t)initial_pages * WASM_PAGE, PROT_READ | PROT_WRITE) != 0)
            return -1;
        lm_committed = initial_pages;
    }
    return 0;
}

uint8_t *memory_base(void)
{
    return lm_base;
}

uint32_t memory_grow(uint32_t delta_pages)
{
    prof_push(P_MEM);
    uint32_t prev = (uint32_t)lm_committed;
    if (delta_pages == 0) {
        prof_pop();
        return prev;
    }
    if (lm_committed + delta_pages > lm_max) {
        prof_pop();
        return 0xffffffffu;
    }
    /* fresh anonymous pages read as zero once committed */
    if (mprotect(lm_base + lm_committed * WASM_PAGE,
                 (size_t)delta_pages * WASM_PAGE, PROT_READ | PROT_WRITE) != 0) {
        prof_pop();
        return 0xffffffffu;
    }
    lm_committed += delta_pages;
    prof_pop();
    return prev;
}

uint64_t rt_mem_committed_bytes(void)
{
    return lm_committed * WASM_PAGE;
}

void *lm_ptr(uint32_t addr, uint32_t len)
{
    uint64_t end = (uint64_t)addr + (uint64_t)len;
    if (end > lm_committed * WASM_PAGE)
        runtime_trap(TRAP_OUT_OF_BOUNDS);
    return lm_base + addr;
}

uint32_t lm_get_u32(uint32_t addr)
{
    uint32_t v;
    memcpy(&v, lm_ptr(addr, 4), 4);
    return v;
}

void lm_set_u32(uint32_t addr, uint32_t v)
{
    memcpy(lm_ptr(addr, 4), &v, 4);
}

void lm_set_u64(uint32_t addr, uint64_t v)
{
    memcpy(lm_ptr(addr, 8), &v, 8);
}

/* test hook: tear down and re-create linear memory so property tests can
 * run many independent grow sequences in one process */
int rt_mem_reset(uint32_t initial_pages, uint32_t max_pages)
{
    if (lm_base) {
        munmap(lm_raw, lm_raw_len);
        lm_base = NULL;
        lm_raw = NULL;
        lm_committed = 0;
        lm_max = 0;
    }
    return rt_mem_init(initial_pages, max_pages);
}
