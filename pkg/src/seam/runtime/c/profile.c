/* Scoped six-bucket profiler.
 *
 * Exclusive attribution: at every push/pop the elapsed monotonic time since
 * the last transition is charged to the scope on top, so buckets never
 * double-count. Activated by SEAM_PROFILE=1; the report is flushed at exit
 * as JSON to SEAM_PROFILE_OUT (or stderr).
 *
 * Bucket mapping (the unikernel analogy): sock_* calls including their
 * host syscalls are "socket" (the host TCP stack stands in for lwIP packet
 * processing); poll(2) sleeping is "timer"; stdio/random host syscalls are
 * "hostio" (the driver analog); everything else inside WASI entry points is
 * "wasi"; memory_grow is "memory"; time between guest entry and exit not
 * spent in any runtime scope is "guest". */
#include "rt.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

int prof_on;
static int prof_debug;
static uint64_t acc[P_NBUCKETS];
static int stack[32];
static int depth;
static uint64_t mark;
static uint64_t t_start;

static const char *bucket_names[P_NBUCKETS] = {
    "guest", "wasi", "memory", "timer", "socket", "hostio",
};

static uint64_t now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ull + (uint64_t)ts.tv_nsec;
}

static void prof_report(void)
{
    if (!prof_on)
        return;
    uint64_t end = now_ns();
    if (depth > 0) /* charge any scope still open at exit */
        acc[stack[depth - 1]] += end - mark;
    uint64_t total = end - t_start;
    uint64_t attributed = 0;
    for (int i = 0; i < P_NBUCKETS; i++)
        attributed += acc[i];
    uint64_t unattributed = total > attributed ? total - attributed : 0;

    const char *path = getenv("SEAM_PROFILE_OUT");
    FILE *out = stderr;
    if (path && *path) {
        FILE *f = fopen(path, "w");
        if (f)
            out = f;
    }
    fprintf(out, "{\"total_ns\": %llu, \"buckets\": {", (unsigned long long)total);
    for (int i = 0; i < P_NBUCKETS; i++)
        fprintf(out, "%s\"%s\": %llu", i ? ", " : "", bucket_names[i],
                (unsigned long long)acc[i]);
    fprintf(out, "}, \"unattributed_ns\": %llu}\n", (unsigned long long)unattributed);
    if (out != stderr)
        fclose(out);
}

void prof_init(void)
{
    const char *v = getenv("SEAM_PROFILE");
    prof_on = v && *v && strcmp(v, "0") != 0;
    prof_debug = getenv("SEAM_PROFILE_DEBUG") != NULL;
    if (!prof_on)
        return;
    t_start = now_ns();
    mark = t_start;
    atexit(prof_report);
}

void prof_push(int bucket)
{
    if (!prof_on)
        return;
    if (prof_debug) {
        /* nesting discipline: guest at the bottom; one runtime bucket above
         * it; only timer/hostio may nest inside another runtime bucket */
        if (depth >= (int)(sizeof stack / sizeof stack[0]))
            abort();
        if (depth >= 1 && stack[depth - 1] != P_GUEST
            && bucket != P_TIMER && bucket != P_HOSTIO)
            abort();
    }
    uint64_t t = now_ns();
    if (depth > 0)
        acc[stack[depth - 1]] += t - mark;
    mark = t;
    stack[depth++] = bucket;
}

void prof_pop(void)
{
    if (!prof_on || depth == 0)
        return;
    uint64_t t = now_ns();
    acc[stack[--depth]] += t - mark;
    mark = t;
}
