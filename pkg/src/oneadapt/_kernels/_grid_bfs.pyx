# Compiled lattice search kernel. Semantics must stay bit-identical to
# grid_bfs_py.bfs_grid; the test suite compares both backends.

import numpy as np

cimport numpy as cnp

cnp.import_array()


def bfs_grid(h_bonds, v_bonds, t_bonds, blocked, starts, targets=None):
    """Multi-source BFS over a 3D bond lattice (compiled twin)."""
    cdef int T = blocked.shape[0]
    cdef int H = blocked.shape[1]
    cdef int W = blocked.shape[2]
    cdef int n = T * H * W
    cdef int hw = H * W

    dist_arr = np.full(n, -1, dtype=np.int32)
    parent_arr = np.full(n, -1, dtype=np.int32)
    queue_arr = np.empty(n, dtype=np.int32)

    cdef cnp.int32_t[::1] dist = dist_arr
    cdef cnp.int32_t[::1] parent = parent_arr
    cdef cnp.int32_t[::1] queue = queue_arr

    cdef const cnp.uint8_t[::1] hb = np.ascontiguousarray(h_bonds, dtype=np.uint8).reshape(-1)
    cdef const cnp.uint8_t[::1] vb = np.ascontiguousarray(v_bonds, dtype=np.uint8).reshape(-1)
    cdef const cnp.uint8_t[::1] blk = np.ascontiguousarray(blocked, dtype=np.uint8).reshape(-1)
    cdef const cnp.uint8_t[::1] tb
    if T > 1:
        tb = np.ascontiguousarray(t_bonds, dtype=np.uint8).reshape(-1)

    cdef const cnp.uint8_t[::1] tgt
    cdef bint has_tgt = targets is not None
    if has_tgt:
        tgt = np.ascontiguousarray(targets, dtype=np.uint8).reshape(-1)

    cdef cnp.int32_t[::1] st = np.ascontiguousarray(starts, dtype=np.int32)
    cdef Py_ssize_t i
    cdef int head = 0, tail = 0
    cdef int s, cur, nxt, d, t, y, x, rem

    for i in range(st.shape[0]):
        s = st[i]
        if dist[s] == -1 and not blk[s]:
            dist[s] = 0
            queue[tail] = s
            tail += 1
            if has_tgt and tgt[s]:
                return dist_arr, parent_arr

    while head < tail:
        cur = queue[head]
        head += 1
        d = dist[cur] + 1
        t = cur / hw
        rem = cur - t * hw
        y = rem / W
        x = rem - y * W
        if x + 1 < W and hb[(t * H + y) * (W - 1) + x]:
            nxt = cur + 1
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if has_tgt and tgt[nxt]:
                    return dist_arr, parent_arr
                queue[tail] = nxt
                tail += 1
        if x > 0 and hb[(t * H + y) * (W - 1) + x - 1]:
            nxt = cur - 1
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if has_tgt and tgt[nxt]:
                    return dist_arr, parent_arr
                queue[tail] = nxt
                tail += 1
        if y + 1 < H and vb[(t * (H - 1) + y) * W + x]:
            nxt = cur + W
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if has_tgt and tgt[nxt]:
                    return dist_arr, parent_arr
                queue[tail] = nxt
                tail += 1
        if y > 0 and vb[(t * (H - 1) + y - 1) * W + x]:
            nxt = cur - W
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if has_tgt and tgt[nxt]:
                    return dist_arr, parent_arr
                queue[tail] = nxt
                tail += 1
        if t + 1 < T and tb[cur]:
            nxt = cur + hw
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if has_tgt and tgt[nxt]:
                    return dist_arr, parent_arr
                queue[tail] = nxt
                tail += 1
        if t > 0 and tb[cur - hw]:
            nxt = cur - hw
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if has_tgt and tgt[nxt]:
                    return dist_arr, parent_arr
                queue[tail] = nxt
                tail += 1

    return dist_arr, parent_arr
