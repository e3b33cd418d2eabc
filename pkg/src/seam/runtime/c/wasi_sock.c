/* WasmEdge-compatible socket extension over host TCP/IPv4 sockets.
 *
 * ABI pinned in docs/sock-abi.md: address families UNSPEC=0/INET4=1/INET6=2,
 * socket types ANY=0/DGRAM=1/STREAM=2, address record {buf_ptr, buf_len} with
 * raw network-order IPv4 bytes, ports in host order, and the preview1-aligned
 * three-argument sock_accept(fd, fdflags, fd_out).
 *
 * The explicit state machine (created -> bound -> listening, or
 * created/bound -> connected) is stricter than POSIX: operations from a
 * wrong state return a defined errno instead of relying on host behavior. */
#include "rt.h"

#include <arpa/inet.h>
#include <errno.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <string.h>
#include <sys/ioctl.h>
#include <sys/socket.h>
#include <unistd.h>

#define AF_W_UNSPEC 0u
#define AF_W_INET4 1u
#define AF_W_INET6 2u
#define SOCK_W_ANY 0u
#define SOCK_W_DGRAM 1u
#define SOCK_W_STREAM 2u

#define RIFLAG_RECV_PEEK 0x1u
#define RIFLAG_RECV_WAITALL 0x2u
#define SDFLAG_RD 0x1u
#define SDFLAG_WR 0x2u

int rt_sock_set_nonblock(fd_entry *e, int nonblock)
{
    int fl = fcntl(e->host_fd, F_GETFL, 0);
    if (fl < 0)
        return -1;
    fl = nonblock ? (fl | O_NONBLOCK) : (fl & ~O_NONBLOCK);
    return fcntl(e->host_fd, F_SETFL, fl);
}

/* the WasmEdge address record: {buf: u32 ptr, buf_len: u32} */
static uint32_t read_addr_v4(uint32_t addr_rec, struct in_addr *out)
{
    uint32_t buf = lm_get_u32(addr_rec);
    uint32_t buf_len = lm_get_u32(addr_rec + 4);
    if (buf_len < 4)
        return W_INVAL;
    memcpy(&out->s_addr, lm_ptr(buf, 4), 4);
    return W_SUCCESS;
}

static uint32_t write_addr_v4(uint32_t addr_rec, const struct in_addr *in)
{
    uint32_t buf = lm_get_u32(addr_rec);
    uint32_t buf_len = lm_get_u32(addr_rec + 4);
    if (buf_len < 4)
        return W_INVAL;
    memcpy(lm_ptr(buf, 4), &in->s_addr, 4);
    return W_SUCCESS;
}

uint32_t sock_open(uint32_t af, uint32_t socktype, uint32_t fd_out)
{
    prof_push(P_SOCK);
    uint32_t r = W_SUCCESS;
    if (af != AF_W_INET4) {
        r = W_AFNOSUPPORT;
    } else if (socktype != SOCK_W_STREAM) {
        r = W_INVAL; /* only TCP is in scope */
    } else {
        int nfd = rt_fd_alloc();
        if (nfd < 0) {
            r = W_NFILE;
        } else {
            int hfd = socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
            if (hfd < 0) {
                r = rt_errno_to_wasi(errno);
            } else {
                rt_fdt[nfd].kind = FK_SOCKET;
                rt_fdt[nfd].sstate = SS_CREATED;
                rt_fdt[nfd].host_fd = hfd;
                rt_fdt[nfd].fdflags = 0;
                lm_set_u32(fd_out, (uint32_t)nfd);
            }
        }
    }
    prof_pop();
    return r;
}

static fd_entry *get_sock(uint32_t fd, uint32_t *err)
{
    fd_entry *e = rt_fd_get(fd);
    if (!e) {
        *err = W_BADF;
        return NULL;
    }
    if (e->kind != FK_SOCKET) {
        *err = W_NOTSOCK;
        return NULL;
    }
    *err = W_SUCCESS;
    return e;
}

uint32_t sock_bind(uint32_t fd, uint32_t addr_rec, uint32_t port)
{
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    if (e->sstate != SS_CREATED) {
        prof_pop();
        return W_INVAL;
    }
    struct sockaddr_in sa;
    memset(&sa, 0, sizeof sa);
    sa.sin_family = AF_INET;
    sa.sin_port = htons((uint16_t)port);
    err = read_addr_v4(addr_rec, &sa.sin_addr);
    if (err != W_SUCCESS) {
        prof_pop();
        return err;
    }
    int one = 1;
    setsockopt(e->host_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (bind(e->host_fd, (struct sockaddr *)&sa, sizeof sa) != 0) {
        err = rt_errno_to_wasi(errno);
        prof_pop();
        return err;
    }
    e->sstate = SS_BOUND;
    prof_pop();
    return W_SUCCESS;
}

uint32_t sock_listen(uint32_t fd, uint32_t backlog)
{
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    if (e->sstate != SS_BOUND) { /* listen before bind is a state error here */
        prof_pop();
        return W_INVAL;
    }
    if (listen(e->host_fd, (int)(backlog ? backlog : 16)) != 0) {
        err = rt_errno_to_wasi(errno);
        prof_pop();
        return err;
    }
    e->sstate = SS_LISTENING;
    prof_pop();
    return W_SUCCESS;
}

uint32_t sock_accept(uint32_t fd, uint32_t flags, uint32_t fd_out)
{
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    if (e->sstate != SS_LISTENING) {
        prof_pop();
        return W_INVAL;
    }
    int nfd = rt_fd_alloc();
    if (nfd < 0) {
        prof_pop();
        return W_NFILE;
    }
    int hfd;
    do {
        hfd = accept(e->host_fd, NULL, NULL);
    } while (hfd < 0 && errno == EINTR && !(e->fdflags & FDFLAG_NONBLOCK));
    if (hfd < 0) {
        err = rt_errno_to_wasi(errno);
        prof_pop();
        return err;
    }
    rt_fdt[nfd].kind = FK_SOCKET;
    rt_fdt[nfd].sstate = SS_CONNECTED;
    rt_fdt[nfd].host_fd = hfd;
    rt_fdt[nfd].fdflags = (uint16_t)flags;
    int one = 1;
    setsockopt(hfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    if (flags & FDFLAG_NONBLOCK)
        rt_sock_set_nonblock(&rt_fdt[nfd], 1);
    lm_set_u32(fd_out, (uint32_t)nfd);
    prof_pop();
    return W_SUCCESS;
}

uint32_t sock_connect(uint32_t fd, uint32_t addr_rec, uint32_t port)
{
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    if (e->sstate != SS_CREATED && e->sstate != SS_BOUND) {
        prof_pop();
        return e->sstate == SS_CONNECTED ? W_ISCONN : W_INVAL;
    }
    struct sockaddr_in sa;
    memset(&sa, 0, sizeof sa);
    sa.sin_family = AF_INET;
    sa.sin_port = htons((uint16_t)port);
    err = read_addr_v4(addr_rec, &sa.sin_addr);
    if (err != W_SUCCESS) {
        prof_pop();
        return err;
    }
    int rc;
    do {
        rc = connect(e->host_fd, (struct sockaddr *)&sa, sizeof sa);
    } while (rc != 0 && errno == EINTR);
    if (rc != 0) {
        err = rt_errno_to_wasi(errno);
        prof_pop();
        return err;
    }
    e->sstate = SS_CONNECTED;
    int one = 1;
    setsockopt(e->host_fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    prof_pop();
    return W_SUCCESS;
}

uint32_t sock_recv(uint32_t fd, uint32_t ri_data, uint32_t ri_data_len, uint32_t ri_flags,
                   uint32_t ro_datalen, uint32_t ro_flags)
{
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    if (e->sstate != SS_CONNECTED && e->sstate != SS_SHUT) {
        prof_pop();
        return W_NOTCONN;
    }
    int flags = 0;
    if (ri_flags & RIFLAG_RECV_PEEK)
        flags |= MSG_PEEK;
    if (ri_flags & RIFLAG_RECV_WAITALL)
        flags |= MSG_WAITALL;
    uint64_t total = 0;
    for (uint32_t i = 0; i < ri_data_len; i++) {
        uint32_t buf = lm_get_u32(ri_data + 8 * i);
        uint32_t len = lm_get_u32(ri_data + 8 * i + 4);
        uint8_t *p = lm_ptr(buf, len);
        ssize_t n;
        do {
            n = recv(e->host_fd, p, len, flags);
        } while (n < 0 && errno == EINTR && !(e->fdflags & FDFLAG_NONBLOCK));
        if (n < 0) {
            if (total)
                break;
            err = rt_errno_to_wasi(errno);
            prof_pop();
            return err;
        }
        total += (uint64_t)n;
        if ((uint32_t)n < len)
            break;
    }
    if (ro_datalen)
        lm_set_u32(ro_datalen, (uint32_t)total);
    if (ro_flags)
        lm_set_u32(ro_flags, 0); /* stream sockets never truncate */
    prof_pop();
    return W_SUCCESS;
}

uint32_t sock_send(uint32_t fd, uint32_t si_data, uint32_t si_data_len, uint32_t si_flags,
                   uint32_t so_datalen)
{
    (void)si_flags;
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    if (e->sstate != SS_CONNECTED) {
        prof_pop();
        return W_NOTCONN;
    }
    uint64_t total = 0;
    for (uint32_t i = 0; i < si_data_len; i++) {
        uint32_t buf = lm_get_u32(si_data + 8 * i);
        uint32_t len = lm_get_u32(si_data + 8 * i + 4);
        const uint8_t *p = lm_ptr(buf, len);
        uint32_t off = 0;
        while (off < len) {
            ssize_t n = send(e->host_fd, p + off, len - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR && !(e->fdflags & FDFLAG_NONBLOCK))
                    continue;
                if (total || off) {
                    lm_set_u32(so_datalen, (uint32_t)(total + off));
                    prof_pop();
                    return W_SUCCESS;
                }
                err = rt_errno_to_wasi(errno);
                prof_pop();
                return err;
            }
            off += (uint32_t)n;
            if (e->fdflags & FDFLAG_NONBLOCK)
                break; /* report the partial write */
        }
        total += off;
        if (off < len)
            break;
    }
    lm_set_u32(so_datalen, (uint32_t)total);
    prof_pop();
    return W_SUCCESS;
}

uint32_t sock_shutdown(uint32_t fd, uint32_t how)
{
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    if (e->sstate != SS_CONNECTED && e->sstate != SS_SHUT) {
        prof_pop();
        return W_NOTCONN;
    }
    int h;
    if (how == SDFLAG_RD)
        h = SHUT_RD;
    else if (how == SDFLAG_WR)
        h = SHUT_WR;
    else if (how == (SDFLAG_RD | SDFLAG_WR))
        h = SHUT_RDWR;
    else {
        prof_pop();
        return W_INVAL;
    }
    if (shutdown(e->host_fd, h) != 0) {
        err = rt_errno_to_wasi(errno);
        prof_pop();
        return err;
    }
    e->sstate = SS_SHUT;
    prof_pop();
    return W_SUCCESS;
}

static uint32_t getaddr_common(uint32_t fd, uint32_t addr_rec, uint32_t type_out,
                               uint32_t port_out, int peer)
{
    prof_push(P_SOCK);
    uint32_t err;
    fd_entry *e = get_sock(fd, &err);
    if (!e) {
        prof_pop();
        return err;
    }
    struct sockaddr_in sa;
    socklen_t slen = sizeof sa;
    int rc = peer ? getpeername(e->host_fd, (struct sockaddr *)&sa, &slen)
                  : getsockname(e->host_fd, (struct sockaddr *)&sa, &slen);
    if (rc != 0) {
        err = rt_errno_to_wasi(errno);
        prof_pop();
        return err;
    }
    err = write_addr_v4(addr_rec, &sa.sin_addr);
    if (err == W_SUCCESS) {
        lm_set_u32(type_out, 4); /* address type: IPv4 */
        lm_set_u32(port_out, ntohs(sa.sin_port));
    }
    prof_pop();
    return err;
}

uint32_t sock_getlocaladdr(uint32_t fd, uint32_t addr_rec, uint32_t type_out, uint32_t port_out)
{
    return getaddr_common(fd, addr_rec, type_out, port_out, 0);
}

uint32_t sock_getpeeraddr(uint32_t fd, uint32_t addr_rec, uint32_t type_out, uint32_t port_out)
{
    return getaddr_common(fd, addr_rec, type_out, port_out, 1);
}

/* bytes buffered for reading, for poll_oneoff's nbytes report */
uint64_t rt_sock_readable_bytes(fd_entry *e)
{
    int avail = 0;
    if (ioctl(e->host_fd, FIONREAD, &avail) != 0 || avail < 0)
        return 0;
    return (uint64_t)avail;
}
