/* Shared declarations for the libOS runtime that gets statically linked
 * with compiled Wasm objects. Single guest thread by contract. */
#ifndef SEAM_RT_H
#define SEAM_RT_H

#include <stddef.h>
#include <stdint.h>

/* ---- WASI preview1 errno values (ABI) ---- */
enum {
    W_SUCCESS = 0,
    W_2BIG = 1,
    W_ACCES = 2,
    W_ADDRINUSE = 3,
    W_ADDRNOTAVAIL = 4,
    W_AFNOSUPPORT = 5,
    W_AGAIN = 6,
    W_ALREADY = 7,
    W_BADF = 8,
    W_CONNABORTED = 13,
    W_CONNREFUSED = 14,
    W_CONNRESET = 15,
    W_FAULT = 21,
    W_INTR = 27,
    W_INVAL = 28,
    W_IO = 29,
    W_ISCONN = 30,
    W_ISDIR = 31,
    W_MFILE = 33,
    W_NFILE = 41,
    W_NOBUFS = 42,
    W_NOENT = 44,
    W_NOMEM = 48,
    W_NOSYS = 52,
    W_NOTCONN = 53,
    W_NOTDIR = 54,
    W_NOTSOCK = 57,
    W_NOTSUP = 58,
    W_PIPE = 64,
    W_PROTO = 65,
    W_RANGE = 68,
    W_ROFS = 69,
    W_SPIPE = 70,
    W_TIMEDOUT = 73,
    W_NOTCAPABLE = 76,
};

/* ---- WASI filetypes / flags (ABI) ---- */
enum {
    FT_UNKNOWN = 0,
    FT_CHARACTER_DEVICE = 2,
    FT_DIRECTORY = 3,
    FT_REGULAR_FILE = 4,
    FT_SOCKET_STREAM = 6,
};
#define FDFLAG_APPEND 0x01
#define FDFLAG_NONBLOCK 0x04
#define OFLAG_CREAT 0x01
#define OFLAG_DIRECTORY 0x02
#define OFLAG_EXCL 0x04
#define OFLAG_TRUNC 0x08

#define RIGHT_FD_READ (1ull << 1)
#define RIGHT_FD_SEEK (1ull << 2)
#define RIGHT_FD_TELL (1ull << 5)
#define RIGHT_FD_WRITE (1ull << 6)
#define RIGHT_PATH_OPEN (1ull << 13)
#define RIGHT_FD_READDIR (1ull << 14)
#define RIGHT_PATH_FILESTAT_GET (1ull << 18)
#define RIGHT_FD_FILESTAT_GET (1ull << 21)
#define RIGHT_POLL_FD_READWRITE (1ull << 27)
#define RIGHT_SOCK_SHUTDOWN (1ull << 28)
#define RIGHT_SOCK_ACCEPT (1ull << 29)

/* ---- trap codes (exit status = 128 + code) ---- */
enum {
    TRAP_OUT_OF_BOUNDS = 1,
    TRAP_DIV_BY_ZERO = 2,
    TRAP_INT_OVERFLOW = 3,
    TRAP_UNREACHABLE = 4,
    TRAP_CALL_TYPE = 5,
    TRAP_TABLE_OOB = 6,
    TRAP_STACK_EXHAUSTED = 7,
};

void runtime_trap(uint32_t code) __attribute__((noreturn));

/* ---- linear memory ---- */
int rt_mem_init(uint32_t initial_pages, uint32_t max_pages);
uint8_t *memory_base(void);
uint32_t memory_grow(uint32_t delta_pages);
uint64_t rt_mem_committed_bytes(void);

/* bounds-checked view into linear memory; traps TRAP_OUT_OF_BOUNDS */
void *lm_ptr(uint32_t addr, uint32_t len);
uint32_t lm_get_u32(uint32_t addr);
void lm_set_u32(uint32_t addr, uint32_t v);
void lm_set_u64(uint32_t addr, uint64_t v);

/* ---- tar filesystem ---- */
typedef struct tar_node {
    const char *path;    /* normalized, absolute, no trailing slash; "/" is root */
    uint8_t is_dir;
    const uint8_t *content;
    uint64_t size;
    uint64_t mtime;
    int32_t parent;
} tar_node;

int rt_fs_mount(const uint8_t *image, uint64_t size); /* 0 ok, -1 corrupt */
const tar_node *rt_fs_lookup_at(const tar_node *base, const char *path, size_t len, int *werrno);
const tar_node *rt_fs_root(void);
int rt_fs_node_index(const tar_node *n);
const tar_node *rt_fs_node(int index);
int rt_fs_count(void);
const char *rt_fs_basename(const tar_node *n);

/* ---- fd table ---- */
enum { FK_FREE = 0, FK_STDIO = 1, FK_TARFILE = 2, FK_TARDIR = 3, FK_SOCKET = 4 };
enum { SS_CREATED = 0, SS_BOUND = 1, SS_LISTENING = 2, SS_CONNECTED = 3, SS_SHUT = 4 };

typedef struct {
    uint8_t kind;
    uint8_t sstate;
    int host_fd;
    uint16_t fdflags;
    const tar_node *node;
    uint64_t cursor;
} fd_entry;

#define FD_TABLE_SIZE 1024
extern fd_entry rt_fdt[FD_TABLE_SIZE];

void rt_fd_init(void);
int rt_fd_alloc(void); /* lowest free index >= 4, or -1 */
fd_entry *rt_fd_get(uint32_t fd);

/* ---- guest args/env ---- */
void rt_args_init(void);
extern int rt_argc;
extern const char *rt_argv[64];
extern int rt_envc;
extern const char *rt_envv[64];

/* ---- profiling ---- */
enum { P_GUEST = 0, P_WASI, P_MEM, P_TIMER, P_SOCK, P_HOSTIO, P_NBUCKETS };
void prof_init(void);
void prof_push(int bucket);
void prof_pop(void);
extern int prof_on;

/* ---- misc ---- */
uint32_t rt_errno_to_wasi(int err);
uint64_t rt_now_ns(int clock_id); /* 0 = realtime, 1 = monotonic */

/* WASI functions implemented across wasi_core/wasi_poll/wasi_sock; the
 * compiled object calls them by these exact names. */
uint32_t fd_write(uint32_t fd, uint32_t iovs, uint32_t iovs_len, uint32_t nwritten);
uint32_t fd_read(uint32_t fd, uint32_t iovs, uint32_t iovs_len, uint32_t nread);
uint32_t path_open(uint32_t dirfd, uint32_t dirflags, uint32_t path, uint32_t path_len,
                   uint32_t oflags, uint64_t rights_base, uint64_t rights_inheriting,
                   uint32_t fdflags, uint32_t fd_out);
uint32_t poll_oneoff(uint32_t subs, uint32_t events, uint32_t nsubscriptions, uint32_t nevents);

#endif /* SEAM_RT_H */
