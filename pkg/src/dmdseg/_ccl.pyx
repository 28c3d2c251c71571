"""Compiled two-pass connected-component labelling.

Mirrors ``dmdseg._ccl_py.label`` exactly; see that module for the algorithm.
"""
import numpy as np

cimport cython


cdef inline int _find(int* parent, int x) noexcept nogil:
    cdef int root = x
    cdef int nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


cdef inline void _union(int* parent, int a, int b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


@cython.boundscheck(False)
@cython.wraparound(False)
def label(const unsigned char[:, ::1] mask, int connectivity=8):
    cdef Py_ssize_t h = mask.shape[0]
    cdef Py_ssize_t w = mask.shape[1]
    if connectivity != 4 and connectivity != 8:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels = np.zeros((h, w), dtype=np.int32)
    if h == 0 or w == 0:
        return labels, 0
    parent_arr = np.zeros(h * w + 1, dtype=np.int32)
    remap_arr = np.zeros(h * w + 1, dtype=np.int32)
    cdef int[:, ::1] out = labels
    cdef int[::1] parent_view = parent_arr
    cdef int[::1] remap = remap_arr
    cdef int* parent = &parent_view[0]
    cdef bint eight = connectivity == 8
    cdef int next_label = 1
    cdef int count = 0
    cdef int cur, n
    cdef Py_ssize_t r, c

    with nogil:
        for r in range(h):
            for c in range(w):
                if not mask[r, c]:
                    continue
                cur = 0
                if c > 0 and out[r, c - 1]:
                    cur = out[r, c - 1]
                if r > 0:
                    n = out[r - 1, c]
                    if n:
                        if cur:
                            _union(parent, cur, n)
                        else:
                            cur = n
                    if eight:
                        if c > 0:
                            n = out[r - 1, c - 1]
                            if n:
                                if cur:
                                    _union(parent, cur, n)
                                else:
                                    cur = n
                        if c + 1 < w:
                            n = out[r - 1, c + 1]
                            if n:
                                if cur:
                                    _union(parent, cur, n)
                                else:
                                    cur = n
                if not cur:
                    cur = next_label
                    parent[cur] = cur
                    next_label += 1
                out[r, c] = cur

        for r in range(h):
            for c in range(w):
                cur = out[r, c]
                if cur:
                    n = _find(parent, cur)
                    if remap[n] == 0:
                        count += 1
                        remap[n] = count
                    out[r, c] = remap[n]
    return labels, count
