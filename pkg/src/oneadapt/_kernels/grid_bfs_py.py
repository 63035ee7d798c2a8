"""Pure-Python twin of the compiled lattice search kernel."""

from collections import deque

import numpy as np


def bfs_grid(h_bonds, v_bonds, t_bonds, blocked, starts, targets=None):
    """Multi-source BFS over a 3D bond lattice.

    Cells are (t, y, x) flattened to t*H*W + y*W + x. A step to an adjacent
    cell is allowed when the bond between the two cells is nonzero and the
    destination is not blocked. Neighbor order is fixed (+x, -x, +y, -y,
    +t, -t) so dist/parent come out identical across backends. When
    `targets` (uint8 cell mask) is given, the search stops as soon as a
    target cell is dequeued.

    Returns (dist, parent) flat int32 arrays, -1 for unreachable/root.
    """
    T, H, W = blocked.shape
    n = T * H * W
    dist = np.full(n, -1, dtype=np.int32)
    parent = np.full(n, -1, dtype=np.int32)

    hb = h_bonds.reshape(-1)
    vb = v_bonds.reshape(-1)
    tb = t_bonds.reshape(-1) if T > 1 else None
    blk = blocked.reshape(-1)
    tgt = targets.reshape(-1) if targets is not None else None

    hw = H * W
    q = deque()
    for s in starts:
        s = int(s)
        if dist[s] == -1 and not blk[s]:
            dist[s] = 0
            q.append(s)
            if tgt is not None and tgt[s]:
                return dist, parent

    while q:
        cur = q.popleft()
        d = dist[cur] + 1
        t, rem = divmod(cur, hw)
        y, x = divmod(rem, W)
        # +x, -x, +y, -y, +t, -t; bond strides differ per axis
        if x + 1 < W and hb[(t * H + y) * (W - 1) + x]:
            nxt = cur + 1
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if tgt is not None and tgt[nxt]:
                    return dist, parent
                q.append(nxt)
        if x > 0 and hb[(t * H + y) * (W - 1) + x - 1]:
            nxt = cur - 1
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if tgt is not None and tgt[nxt]:
                    return dist, parent
                q.append(nxt)
        if y + 1 < H and vb[(t * (H - 1) + y) * W + x]:
            nxt = cur + W
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if tgt is not None and tgt[nxt]:
                    return dist, parent
                q.append(nxt)
        if y > 0 and vb[(t * (H - 1) + y - 1) * W + x]:
            nxt = cur - W
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if tgt is not None and tgt[nxt]:
                    return dist, parent
                q.append(nxt)
        if t + 1 < T and tb[cur]:
            nxt = cur + hw
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if tgt is not None and tgt[nxt]:
                    return dist, parent
                q.append(nxt)
        if t > 0 and tb[cur - hw]:
            nxt = cur - hw
            if dist[nxt] == -1 and not blk[nxt]:
                dist[nxt] = d
                parent[nxt] = cur
                if tgt is not None and tgt[nxt]:
                    return dist, parent
                q.append(nxt)

    return dist, parent
