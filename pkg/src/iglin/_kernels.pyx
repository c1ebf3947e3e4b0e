# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Semantics are defined by ``iglin._fallback``."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.stdint cimport uint64_t, int32_t, int64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

cdef extern from *:
    """
    static inline int iglin_ctz(unsigned long long x) { return __builtin_ctzll(x); }
    """
    int iglin_ctz(unsigned long long x) nogil


cdef inline int64_t lowest_and(const uint64_t* a, const uint64_t* b, Py_ssize_t W) noexcept nogil:
    cdef Py_ssize_t w
    cdef uint64_t v
    for w in range(W):
        v = a[w] & b[w]
        if v:
            return w * 64 + iglin_ctz(v)
    return -1


cdef inline bint any_and(const uint64_t* a, const uint64_t* b, Py_ssize_t W) noexcept nogil:
    cdef Py_ssize_t w
    for w in range(W):
        if a[w] & b[w]:
            return True
    return False


def closure_rounds(Py_ssize_t nx, Py_ssize_t ny, ex_in, ey_in, blue0):
    cdef int64_t[::1] ex = np.ascontiguousarray(ex_in, dtype=np.int64)
    cdef int64_t[::1] ey = np.ascontiguousarray(ey_in, dtype=np.int64)
    cdef Py_ssize_t E = ex.shape[0]
    rnd_a = np.full(E, -1, dtype=np.int32)
    wx_a = np.full(E, -1, dtype=np.int32)
    wy_a = np.full(E, -1, dtype=np.int32)
    cdef int32_t[::1] rnd = rnd_a
    cdef int32_t[::1] wx = wx_a
    cdef int32_t[::1] wy = wy_a
    cdef cnp.uint8_t[::1] blue = np.ascontiguousarray(blue0, dtype=np.uint8).copy()

    cdef Py_ssize_t Wy = (ny + 63) >> 6
    cdef Py_ssize_t Wx = (nx + 63) >> 6
    rowbits_a = np.zeros((nx, Wy), dtype=np.uint64)
    colbits_a = np.zeros((ny, Wx), dtype=np.uint64)
    U_a = np.zeros((ny, Wy), dtype=np.uint64)
    cdef uint64_t[:, ::1] rowbits = rowbits_a
    cdef uint64_t[:, ::1] colbits = colbits_a
    cdef uint64_t[:, ::1] U = U_a
    newbuf_a = np.empty(E, dtype=np.int64)
    cdef int64_t[::1] newbuf = newbuf_a

    cdef Py_ssize_t e, w, x, y, nnew, i
    cdef int64_t y1, x1
    cdef int level = 0
    with nogil:
        for e in range(E):
            if blue[e]:
                rnd[e] = 0
                x = ex[e]; y = ey[e]
                rowbits[x, y >> 6] |= (<uint64_t>1) << (y & 63)
                colbits[y, x >> 6] |= (<uint64_t>1) << (x & 63)
        while True:
            level += 1
            memset(&U[0, 0], 0, ny * Wy * sizeof(uint64_t))
            for e in range(E):
                if blue[e]:
                    x = ex[e]; y = ey[e]
                    for w in range(Wy):
                        U[y, w] |= rowbits[x, w]
            nnew = 0
            for e in range(E):
                if blue[e]:
                    continue
                x = ex[e]; y = ey[e]
                y1 = lowest_and(&rowbits[x, 0], &U[y, 0], Wy)
                if y1 < 0:
                    continue
                x1 = lowest_and(&colbits[y, 0], &colbits[y1, 0], Wx)
                wx[e] = <int32_t>x1
                wy[e] = <int32_t>y1
                newbuf[nnew] = e
                nnew += 1
            if nnew == 0:
                break
            for i in range(nnew):
                e = newbuf[i]
                rnd[e] = level
                blue[e] = 1
                x = ex[e]; y = ey[e]
                rowbits[x, y >> 6] |= (<uint64_t>1) << (y & 63)
                colbits[y, x >> 6] |= (<uint64_t>1) << (x & 63)
    return rnd_a, wx_a, wy_a


def _pack(mask):
    R, C = mask.shape
    W = (C + 63) >> 6
    padded = np.zeros((R, W * 64), dtype=bool)
    padded[:, :C] = mask
    b = np.packbits(padded.reshape(R, W, 8, 8), axis=-1, bitorder="little")
    return np.ascontiguousarray(b.reshape(R, W, 8).view(np.uint64).reshape(R, W))


def strong_rows(cells_in, int ident, int jobs=1):
    cells_np = np.ascontiguousarray(cells_in, dtype=np.int32)
    cdef Py_ssize_t R = cells_np.shape[0]
    cdef Py_ssize_t C = cells_np.shape[1]
    parent_a = np.full((R, C), -1, dtype=np.int32)
    wit_a = np.full((R, C), -1, dtype=np.int32)
    if ident < 0 or R == 0 or C == 0:
        return parent_a, wit_a
    cdef int32_t[:, ::1] cells = cells_np
    cdef int32_t[:, ::1] parent = parent_a
    cdef int32_t[:, ::1] wit = wit_a

    imask = cells_np == ident
    cdef uint64_t[:, ::1] icol = _pack(imask.T)
    cdef uint64_t[:, ::1] irow = _pack(imask)
    cdef Py_ssize_t Wc = (C + 63) >> 6
    cdef Py_ssize_t Wr = (R + 63) >> 6
    g2_a = np.zeros((C, Wc), dtype=np.uint64)
    cdef uint64_t[:, ::1] g2 = g2_a
    cdef Py_ssize_t a, b, b1, w, nvals
    # g2[a] = OR of irow[b1] over rows b1 with the identity in column a
    with nogil:
        for b1 in range(R):
            for a in range(C):
                if cells[b1, a] == ident:
                    for w in range(Wc):
                        g2[a, w] |= irow[b1, w]
    nvals = int(cells_np.max()) + 1

    cdef uint64_t* visited
    cdef uint64_t* valbits
    cdef int32_t* queue
    cdef Py_ssize_t head, tail, u, start, v, c
    cdef uint64_t bits
    with nogil, parallel(num_threads=jobs):
        visited = <uint64_t*>malloc(Wc * sizeof(uint64_t))
        valbits = <uint64_t*>malloc(nvals * Wc * sizeof(uint64_t))
        queue = <int32_t*>malloc(C * sizeof(int32_t))
        for b in prange(R, schedule="static"):
            memset(visited, 0, Wc * sizeof(uint64_t))
            memset(valbits, 0, nvals * Wc * sizeof(uint64_t))
            for a in range(C):
                v = cells[b, a]
                valbits[v * Wc + (a >> 6)] |= (<uint64_t>1) << (a & 63)
            for start in range(C):
                if (visited[start >> 6] >> (start & 63)) & 1:
                    continue
                v = cells[b, start]
                visited[start >> 6] |= (<uint64_t>1) << (start & 63)
                head = 0
                tail = 1
                queue[0] = <int32_t>start
                while head < tail:
                    u = queue[head]
                    head = head + 1
                    for w in range(Wc):
                        bits = g2[u, w] & valbits[v * Wc + w] & ~visited[w]
                        while bits:
                            c = w * 64 + iglin_ctz(bits)
                            bits = bits & (bits - 1)
                            visited[w] |= (<uint64_t>1) << (c & 63)
                            parent[b, c] = <int32_t>u
                            wit[b, c] = <int32_t>lowest_and(&icol[u, 0], &icol[c, 0], Wr)
                            queue[tail] = <int32_t>c
                            tail = tail + 1
        free(visited)
        free(valbits)
        free(queue)
    return parent_a, wit_a
