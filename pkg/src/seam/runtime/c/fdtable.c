#include "rt.h"

#include <stdlib.h>
#include <string.h>

fd_entry rt_fdt[FD_TABLE_SIZE];

int rt_argc;
const char *rt_argv[64];
int rt_envc;
const char *rt_envv[64];

void rt_fd_init(void)
{
    memset(rt_fdt, 0, sizeof rt_fdt);
    for (int i = 0; i < 3; i++) {
        rt_fdt[i].kind = FK_STDIO;
        rt_fdt[i].host_fd = i;
    }
    rt_fdt[3].kind = FK_TARDIR;
    rt_fdt[3].node = rt_fs_root();
}

int rt_fd_alloc(void)
{
    for (int i = 4; i < FD_TABLE_SIZE; i++)
        if (rt_fdt[i].kind == FK_FREE)
            return i;
    return -1;
}

fd_entry *rt_fd_get(uint32_t fd)
{
    if (fd >= FD_TABLE_SIZE || rt_fdt[fd].kind == FK_FREE)
        return NULL;
    return &rt_fdt[fd];
}

static void split_into(char *buf, const char *sep, const char **out, int *count, int max)
{
    *count = 0;
    char *save = NULL;
    for (char *tok = strtok_r(buf, sep, &save); tok && *count < max;
         tok = strtok_r(NULL, sep, &save))
        out[(*count)++] = tok;
}

void rt_args_init(void)
{
    static char args_buf[4096];
    static char env_buf[4096];
    const char *ga = getenv("GUEST_ARGS");
    const char *ge = getenv("GUEST_ENV");
    rt_argc = 0;
    rt_envc = 0;
    if (ga && *ga) {
        strncpy(args_buf, ga, sizeof args_buf - 1);
        split_into(args_buf, " ", rt_argv, &rt_argc, 64);
    }
    if (ge && *ge) {
        strncpy(env_buf, ge, sizeof env_buf - 1);
        split_into(env_buf, ",", rt_envv, &rt_envc, 64);
    }
}
