/* Freestanding wasm32 guest header: WASI preview1 + WasmEdge socket imports
 * and the few libc bits the fixtures need. Compiled with clang --target=wasm32
 * -nostdlib; see conftest.py for the exact flags. */
#ifndef WASI_GUEST_H
#define WASI_GUEST_H

typedef unsigned char u8;
typedef unsigned short u16;
typedef unsigned int u32;
typedef unsigned long long u64;
typedef int i32;
typedef long long i64;

typedef struct { const void *buf; u32 len; } ciovec_t;
typedef struct { void *buf; u32 len; } iovec_t;
typedef struct { u8 *buf; u32 len; } wasi_addr_t;

#define WASI(name) __attribute__((import_module("wasi_snapshot_preview1"), import_name(#name)))

u32 WASI(args_sizes_get) args_sizes_get(u32 *argc, u32 *buf_size);
u32 WASI(args_get) args_get(u32 *argv, char *buf);
u32 WASI(fd_write) fd_write(u32 fd, const ciovec_t *iovs, u32 n, u32 *nwritten);
u32 WASI(fd_read) fd_read(u32 fd, const iovec_t *iovs, u32 n, u32 *nread);
u32 WASI(fd_close) fd_close(u32 fd);
u32 WASI(fd_filestat_get) fd_filestat_get(u32 fd, void *stat);
u32 WASI(fd_readdir) fd_readdir(u32 fd, void *buf, u32 len, u64 cookie, u32 *used);
u32 WASI(path_open) path_open(u32 dirfd, u32 dirflags, const char *path, u32 path_len,
                              u16 oflags, u64 rights, u64 rights_inh, u16 fdflags, u32 *fd);
u32 WASI(clock_time_get) clock_time_get(u32 id, u64 precision, u64 *t);
u32 WASI(random_get) random_get(void *buf, u32 len);
u32 WASI(poll_oneoff) poll_oneoff(const void *subs, void *events, u32 n, u32 *nevents);
_Noreturn void WASI(proc_exit) proc_exit(u32 code);

u32 WASI(sock_open) sock_open(u32 af, u32 ty, u32 *fd);
u32 WASI(sock_bind) sock_bind(u32 fd, const wasi_addr_t *addr, u32 port);
u32 WASI(sock_listen) sock_listen(u32 fd, u32 backlog);
u32 WASI(sock_accept) sock_accept(u32 fd, u16 flags, u32 *newfd);
u32 WASI(sock_recv) sock_recv(u32 fd, const iovec_t *ri, u32 ri_len, u32 ri_flags,
                              u32 *ro_datalen, u32 *ro_flags);
u32 WASI(sock_send) sock_send(u32 fd, const ciovec_t *si, u32 si_len, u32 si_flags,
                              u32 *so_datalen);
u32 WASI(sock_shutdown) sock_shutdown(u32 fd, u32 how);
u32 WASI(sock_getlocaladdr) sock_getlocaladdr(u32 fd, wasi_addr_t *addr, u32 *type, u32 *port);

#define AF_INET4 1u
#define SOCK_STREAM_W 2u
#define SUB_CLOCK 0
#define SUB_FD_READ 1
#define SUB_FD_WRITE 2

/* 48-byte subscription / 32-byte event, preview1 layout */
typedef struct {
    u64 userdata;
    u8 tag;
    u8 pad[7];
    union {
        struct { u32 clock_id; u32 pad2; u64 timeout; u64 precision; u16 flags; u8 tail[6]; } clock;
        struct { u32 fd; u8 tail[28]; } fd_rw;
    } u;
} __attribute__((packed)) subscription_t;
_Static_assert(sizeof(subscription_t) == 48, "subscription layout");

typedef struct {
    u64 userdata;
    u16 error;
    u8 type;
    u8 pad[5];
    u64 nbytes;
    u16 flags;
    u8 pad2[6];
} __attribute__((packed)) event_t;
_Static_assert(sizeof(event_t) == 32, "event layout");

static inline void *g_memcpy(void *dst, const void *src, u32 n)
{
    u8 *d = dst;
    const u8 *s = src;
    for (u32 i = 0; i < n; i++)
        d[i] = s[i];
    return dst;
}

static inline void *g_memset(void *dst, int c, u32 n)
{
    u8 *d = dst;
    for (u32 i = 0; i < n; i++)
        d[i] = (u8)c;
    return dst;
}

static inline u32 g_strlen(const char *s)
{
    u32 n = 0;
    while (s[n])
        n++;
    return n;
}

static inline int g_memeq(const void *a, const void *b, u32 n)
{
    const u8 *x = a, *y = b;
    for (u32 i = 0; i < n; i++)
        if (x[i] != y[i])
            return 0;
    return 1;
}

static inline u32 g_utoa(u32 v, char *out)
{
    char tmp[10];
    u32 n = 0;
    do {
        tmp[n++] = (char)('0' + v % 10);
        v /= 10;
    } while (v);
    for (u32 i = 0; i < n; i++)
        out[i] = tmp[n - 1 - i];
    return n;
}

static inline void print(u32 fd, const char *s)
{
    ciovec_t v = { s, g_strlen(s) };
    u32 nw;
    fd_write(fd, &v, 1, &nw);
}

/* first guest arg parsed as u32, or fallback */
static inline u32 arg_u32(u32 index, u32 fallback)
{
    u32 argc, bufsz;
    if (args_sizes_get(&argc, &bufsz) != 0 || argc <= index || bufsz > 512)
        return fallback;
    u32 offs[16];
    static char buf[512];
    if (args_get(offs, buf) != 0)
        return fallback;
    const char *s = (const char *)(unsigned long)offs[index];
    u32 v = 0;
    int any = 0;
    for (; *s >= '0' && *s <= '9'; s++) {
        v = v * 10 + (u32)(*s - '0');
        any = 1;
    }
    return any ? v : fallback;
}

#endif
