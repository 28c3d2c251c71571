"""Pure Python connected-component labelling (fallback for the Cython kernel).

Classic two-pass scheme: a raster scan hands out provisional labels and
records equivalences in a union-find forest (roots are always the smallest
label of their tree), then a second raster scan renumbers roots in order
of first encounter.  Final labels therefore follow the top-to-bottom,
left-to-right position of each component's first pixel.
"""
import numpy as np


def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def _union(parent, a, b):
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label(mask, connectivity=8):
    """Label foreground pixels of a 2-D mask; returns (int32 labels, count)."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask)
    h, w = mask.shape
    rows = mask.astype(bool).tolist()
    out = [[0] * w for _ in range(h)]
    parent = [0]
    if connectivity == 8:
        offsets = ((0, -1), (-1, -1), (-1, 0), (-1, 1))
    else:
        offsets = ((0, -1), (-1, 0))

    for r in range(h):
        row = rows[r]
        for c in range(w):
            if not row[c]:
                continue
            cur = 0
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if rr < 0 or cc < 0 or cc >= w:
                    continue
                n = out[rr][cc]
                if n:
                    if cur:
                        _union(parent, cur, n)
                    else:
                        cur = n
            if not cur:
                cur = len(parent)
                parent.append(cur)
            out[r][c] = cur

    remap = {}
    for r in range(h):
        line = out[r]
        for c in range(w):
            if line[c]:
                root = _find(parent, line[c])
                if root not in remap:
                    remap[root] = len(remap) + 1
                line[c] = remap[root]
    return np.array(out, dtype=np.int32).reshape(h, w), len(remap)
