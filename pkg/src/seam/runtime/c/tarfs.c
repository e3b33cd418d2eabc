/* Read-only in-memory filesystem over a ustar image.
 *
 * The image buffer is borrowed, never copied or written: file content is
 * served as (pointer, length) extents straight into it. */
#include "rt.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define MAX_NODES 8192
#define MAX_PATH 255

static tar_node nodes[MAX_NODES];
static char paths[MAX_NODES][MAX_PATH + 1];
static int node_count;

const tar_node *rt_fs_root(void)
{
    return node_count ? &nodes[0] : NULL;
}

int rt_fs_node_index(const tar_node *n)
{
    return (int)(n - nodes);
}

const tar_node *rt_fs_node(int index)
{
    return (index >= 0 && index < node_count) ? &nodes[index] : NULL;
}

int rt_fs_count(void)
{
    return node_count;
}

const char *rt_fs_basename(const tar_node *n)
{
    const char *slash = strrchr(n->path, '/');
    return slash ? slash + 1 : n->path;
}

static int find_node(const char *path)
{
    for (int i = 0; i < node_count; i++)
        if (strcmp(nodes[i].path, path) == 0)
            return i;
    return -1;
}

static int add_node(const char *path, int is_dir, const uint8_t *content,
                    uint64_t size, uint64_t mtime)
{
    int existing = find_node(path);
    if (existing >= 0) { /* later archive entries shadow earlier ones */
        nodes[existing].is_dir = (uint8_t)is_dir;
        nodes[existing].content = content;
        nodes[existing].size = size;
        nodes[existing].mtime = mtime;
        return existing;
    }
    if (node_count >= MAX_NODES)
        return -1;
    int idx = node_count++;
    strncpy(paths[idx], path, MAX_PATH);
    paths[idx][MAX_PATH] = 0;
    nodes[idx].path = paths[idx];
    nodes[idx].is_dir = (uint8_t)is_dir;
    nodes[idx].content = content;
    nodes[idx].size = size;
    nodes[idx].mtime = mtime;
    nodes[idx].parent = -1;
    if (strcmp(path, "/") != 0) {
        char parent[MAX_PATH + 1];
        strcpy(parent, path);
        char *slash = strrchr(parent, '/');
        if (slash == parent)
            parent[1] = 0;
        else
            *slash = 0;
        int p = find_node(parent);
        if (p < 0)
            p = add_node(parent, 1, NULL, 0, 0);
        nodes[idx].parent = p;
    }
    return idx;
}

static uint64_t parse_octal(const uint8_t *field, int len)
{
    uint64_t v = 0;
    for (int i = 0; i < len; i++) {
        uint8_t c = field[i];
        if (c == 0 || c == ' ')
            break;
        if (c < '0' || c > '7')
            return (uint64_t)-1;
        v = v * 8 + (c - '0');
    }
    return v;
}

static int checksum_ok(const uint8_t *hdr)
{
    uint64_t want = parse_octal(hdr + 148, 8);
    uint64_t sum = 0;
    for (int i = 0; i < 512; i++)
        sum += (i >= 148 && i < 156) ? (uint8_t)' ' : hdr[i];
    return sum == want;
}

/* normalize an archive member name into an absolute path:
 * strips "./", collapses "//", rejects ".." and absolute names */
static int normalize_member(const char *name, size_t len, char *out)
{
    char tmp[MAX_PATH + 1];
    out[0] = '/';
    out[1] = 0;
    size_t oi = 1;
    size_t i = 0;
    while (i < len && name[i] == '/')
        i++;
    while (i < len) {
        size_t j = i;
        while (j < len && name[j] != '/')
            j++;
        size_t seg = j - i;
        if (seg == 0 || (seg == 1 && name[i] == '.')) {
            /* skip */
        } else if (seg == 2 && name[i] == '.' && name[i + 1] == '.') {
            return -1;
        } else {
            if (seg > MAX_PATH)
                return -1;
            memcpy(tmp, name + i, seg);
            tmp[seg] = 0;
            if (oi + 1 + seg > MAX_PATH)
                return -1;
            if (oi > 1)
                out[oi++] = '/';
            memcpy(out + oi, tmp, seg);
            oi += seg;
            out[oi] = 0;
        }
        i = j + 1;
    }
    return 0;
}

int rt_fs_mount(const uint8_t *image, uint64_t size)
{
    node_count = 0;
    add_node("/", 1, NULL, 0, 0);
    if (!image || size == 0)
        return 0;
    uint64_t off = 0;
    while (off + 512 <= size) {
        const uint8_t *hdr = image + off;
        int all_zero = 1;
        for (int i = 0; i < 512 && all_zero; i++)
            all_zero = hdr[i] == 0;
        if (all_zero)
            return 0; /* end-of-archive */
        if (memcmp(hdr + 257, "ustar", 5) != 0) {
            fprintf(stderr, "seam-rt: tarfs: bad magic at block %llu\n",
                    (unsigned long long)(off / 512));
            return -1;
        }
        if (!checksum_ok(hdr)) {
            fprintf(stderr, "seam-rt: tarfs: bad checksum at block %llu\n",
                    (unsigned long long)(off / 512));
            return -1;
        }
        uint64_t fsize = parse_octal(hdr + 124, 12);
        uint64_t mtime = parse_octal(hdr + 136, 12);
        if (fsize == (uint64_t)-1)
            return -1;
        char type = (char)hdr[156];

        char name[MAX_PATH + 1];
        size_t prefix_len = strnlen((const char *)hdr + 345, 155);
        size_t name_len = strnlen((const char *)hdr, 100);
        char full[MAX_PATH * 2 + 2];
        size_t fl = 0;
        if (prefix_len) {
            memcpy(full, hdr + 345, prefix_len);
            fl = prefix_len;
            full[fl++] = '/';
        }
        memcpy(full + fl, hdr, name_len);
        fl += name_len;

        if (normalize_member(full, fl, name) != 0) {
            fprintf(stderr, "seam-rt: tarfs: bad member name at block %llu\n",
                    (unsigned long long)(off / 512));
            return -1;
        }

        uint64_t content_off = off + 512;
        uint64_t padded = (fsize + 511) & ~511ull;
        if (content_off + padded > size) {
            fprintf(stderr, "seam-rt: tarfs: truncated entry at block %llu\n",
                    (unsigned long long)(off / 512));
            return -1;
        }
        if (type == '0' || type == 0) {
            if (add_node(name, 0, image + content_off, fsize, mtime) < 0)
                return -1;
        } else if (type == '5') {
            if (add_node(name, 1, NULL, 0, mtime) < 0)
                return -1;
        } else {
            fprintf(stderr, "seam-rt: tarfs: unsupported entry type '%c' at block %llu\n",
                    type, (unsigned long long)(off / 512));
            return -1;
        }
        off = content_off + padded;
    }
    /* ran off the end without the two zero blocks */
    fprintf(stderr, "seam-rt: tarfs: missing end-of-archive marker\n");
    return -1;
}

/* resolve `path` (len bytes, not NUL-terminated) against a directory node;
 * absolute paths resolve from the root */
const tar_node *rt_fs_lookup_at(const tar_node *base, const char *path, size_t len, int *werrno)
{
    *werrno = W_SUCCESS;
    if (node_count == 0) {
        *werrno = W_NOENT;
        return NULL;
    }
    char cur[MAX_PATH + 1];
    if (path && len && path[0] == '/')
        strcpy(cur, "/");
    else
        strcpy(cur, base ? base->path : "/");
    size_t i = 0;
    while (i < len) {
        while (i < len && path[i] == '/')
            i++;
        size_t j = i;
        while (j < len && path[j] != '/')
            j++;
        size_t seg = j - i;
        if (seg == 0)
            break;
        if (seg == 1 && path[i] == '.') {
            i = j;
            continue;
        }
        if (seg == 2 && path[i] == '.' && path[i + 1] == '.') {
            if (strcmp(cur, "/") == 0) {
                *werrno = W_INVAL; /* escapes the preopen root */
                return NULL;
            }
            char *slash = strrchr(cur, '/');
            if (slash == cur)
                cur[1] = 0;
            else
                *slash = 0;
            i = j;
            continue;
        }
        size_t cl = strlen(cur);
        if (cl + 1 + seg > MAX_PATH) {
            *werrno = W_NOENT;
            return NULL;
        }
        if (cl > 1)
            cur[cl++] = '/';
        memcpy(cur + cl, path + i, seg);
        cur[cl + seg] = 0;
        i = j;
    }
    int idx = find_node(cur);
    if (idx < 0) {
        *werrno = W_NOENT;
        return NULL;
    }
    return &nodes[idx];
}
