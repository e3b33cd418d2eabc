/* Static-file HTTP/1.1 server over the WasmEdge socket extension.
 *
 * Single-threaded, readiness-driven: one poll_oneoff loop multiplexes the
 * listener and all client connections, keep-alive by default. Files come
 * from the tar filesystem preopened at fd 3; "/" maps to /index.html.
 *
 * Guest argv: httpd [port]   (default 8080)
 */
#include "wasi_guest.h"

enum { MAX_CONNS = 64, REQ_BUF = 2048, FILE_BUF = 256 * 1024 };

static u32 conn_fd[MAX_CONNS];
static char conn_buf[MAX_CONNS][REQ_BUF];
static u32 conn_len[MAX_CONNS];
static char file_buf[FILE_BUF];
static char resp_head[256];

static void conn_close(u32 i)
{
    if (conn_fd[i] != (u32)-1) {
        fd_close(conn_fd[i]);
        conn_fd[i] = (u32)-1;
        conn_len[i] = 0;
    }
}

static void send_response(u32 fd, const char *status, const char *body, u32 body_len)
{
    u32 n = 0;
    const char *h1 = "HTTP/1.1 ";
    g_memcpy(resp_head + n, h1, g_strlen(h1)), n += g_strlen(h1);
    g_memcpy(resp_head + n, status, g_strlen(status)), n += g_strlen(status);
    const char *h2 = "\r\nContent-Length: ";
    g_memcpy(resp_head + n, h2, g_strlen(h2)), n += g_strlen(h2);
    n += g_utoa(body_len, resp_head + n);
    const char *h3 = "\r\nConnection: keep-alive\r\n\r\n";
    g_memcpy(resp_head + n, h3, g_strlen(h3)), n += g_strlen(h3);
    /* header and body in one gathered send: one TCP segment, no Nagle stall */
    ciovec_t v[2] = { { resp_head, n }, { body, body_len } };
    u32 want = n + body_len;
    u32 sent = 0;
    if (sock_send(fd, v, body_len ? 2 : 1, 0, &sent) != 0)
        return;
    while (sent < want) { /* partial write: finish the remainder */
        u32 off = sent;
        ciovec_t rest;
        if (off < n) {
            rest.buf = resp_head + off;
            rest.len = n - off;
        } else {
            rest.buf = body + (off - n);
            rest.len = body_len - (off - n);
        }
        u32 more = 0;
        if (sock_send(fd, &rest, 1, 0, &more) != 0 || more == 0)
            return;
        sent += more;
    }
}

static void serve_path(u32 fd, const char *path, u32 path_len)
{
    if (path_len == 1 && path[0] == '/') {
        path = "/index.html";
        path_len = 11;
    }
    /* path_open resolves relative to the preopen; strip the leading slash */
    u32 file;
    u32 rc = path_open(3, 0, path + 1, path_len - 1, 0, 0x1fffffffull, 0, 0, &file);
    if (rc != 0) {
        send_response(fd, "404 Not Found", "not found\n", 10);
        return;
    }
    u32 total = 0;
    for (;;) {
        iovec_t v = { file_buf + total, FILE_BUF - total };
        u32 nr = 0;
        if (fd_read(file, &v, 1, &nr) != 0 || nr == 0)
            break;
        total += nr;
        if (total == FILE_BUF)
            break;
    }
    fd_close(file);
    send_response(fd, "200 OK", file_buf, total);
}

/* returns bytes consumed, 0 when the request is still incomplete */
static u32 handle_request(u32 fd, char *buf, u32 len)
{
    u32 end = 0;
    for (u32 i = 0; i + 3 < len; i++) {
        if (buf[i] == '\r' && buf[i + 1] == '\n' && buf[i + 2] == '\r' && buf[i + 3] == '\n') {
            end = i + 4;
            break;
        }
    }
    if (!end)
        return 0;
    if (len >= 4 && g_memeq(buf, "GET ", 4)) {
        u32 p0 = 4, p1 = p0;
        while (p1 < len && buf[p1] != ' ')
            p1++;
        serve_path(fd, buf + p0, p1 - p0);
    } else {
        send_response(fd, "405 Method Not Allowed", "", 0);
    }
    return end;
}

void _start(void)
{
    u32 port = arg_u32(1, 8080);
    u32 lfd;
    if (sock_open(AF_INET4, SOCK_STREAM_W, &lfd) != 0)
        proc_exit(2);
    u8 any[4] = { 0, 0, 0, 0 };
    wasi_addr_t addr = { any, 4 };
    if (sock_bind(lfd, &addr, port) != 0)
        proc_exit(3);
    if (sock_listen(lfd, 64) != 0)
        proc_exit(4);
    for (u32 i = 0; i < MAX_CONNS; i++)
        conn_fd[i] = (u32)-1;
    print(1, "listening\n");

    static subscription_t subs[MAX_CONNS + 1];
    static event_t events[MAX_CONNS + 1];
    for (;;) {
        u32 nsubs = 0;
        g_memset(&subs[nsubs], 0, sizeof(subscription_t));
        subs[nsubs].userdata = (u64)MAX_CONNS; /* listener sentinel */
        subs[nsubs].tag = SUB_FD_READ;
        subs[nsubs].u.fd_rw.fd = lfd;
        nsubs++;
        for (u32 i = 0; i < MAX_CONNS; i++) {
            if (conn_fd[i] == (u32)-1)
                continue;
            g_memset(&subs[nsubs], 0, sizeof(subscription_t));
            subs[nsubs].userdata = i;
            subs[nsubs].tag = SUB_FD_READ;
            subs[nsubs].u.fd_rw.fd = conn_fd[i];
            nsubs++;
        }
        u32 nev = 0;
        if (poll_oneoff(subs, events, nsubs, &nev) != 0)
            proc_exit(5);
        for (u32 e = 0; e < nev; e++) {
            if (events[e].error != 0)
                continue;
            u64 who = events[e].userdata;
            if (who == (u64)MAX_CONNS) {
                u32 cfd;
                if (sock_accept(lfd, 0, &cfd) != 0)
                    continue;
                u32 slot = (u32)-1;
                for (u32 i = 0; i < MAX_CONNS; i++)
                    if (conn_fd[i] == (u32)-1) {
                        slot = i;
                        break;
                    }
                if (slot == (u32)-1) {
                    fd_close(cfd);
                } else {
                    conn_fd[slot] = cfd;
                    conn_len[slot] = 0;
                }
                continue;
            }
            u32 i = (u32)who;
            if (conn_fd[i] == (u32)-1)
                continue;
            if (conn_len[i] >= REQ_BUF) { /* oversized request */
                conn_close(i);
                continue;
            }
            iovec_t v = { conn_buf[i] + conn_len[i], REQ_BUF - conn_len[i] };
            u32 nr = 0;
            if (sock_recv(conn_fd[i], &v, 1, 0, &nr, 0) != 0) {
                conn_close(i);
                continue;
            }
            if (nr == 0) { /* orderly shutdown from the peer */
                conn_close(i);
                continue;
            }
            conn_len[i] += nr;
            for (;;) {
                u32 consumed = handle_request(conn_fd[i], conn_buf[i], conn_len[i]);
                if (!consumed)
                    break;
                g_memcpy(conn_buf[i], conn_buf[i] + consumed, conn_len[i] - consumed);
                conn_len[i] -= consumed;
            }
        }
    }
}
