"""Pure Python (numpy) implementations of the hot kernels.

These define the reference semantics; the compiled module ``_kernels`` must
return identical arrays. Both kernels work on packed uint64 bitsets.

closure_rounds
    Round-based elementary edge colour transformation. In each round every
    red edge (x, y) that closes a blue path x - y1 - x1 - y turns blue. The
    witness is the smallest such y1 and then the smallest x1.

strong_rows
    For every row of a table, split the cells of each value into classes
    joined by strong row edges: columns a, a' are adjacent when some row b1
    has the distinguished value in both columns. Each class is a BFS tree
    rooted at its smallest column, explored with a FIFO queue and ascending
    neighbour order; parent and witness row are returned per cell.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 16


def nwords(n: int) -> int:
    return (n + 63) >> 6


def pack_rows(mask: np.ndarray) -> np.ndarray:
    """Boolean (R, C) -> uint64 (R, nwords(C)), bit c of word c>>6 is column c."""
    R, C = mask.shape
    W = nwords(C)
    padded = np.zeros((R, W * 64), dtype=bool)
    padded[:, :C] = mask
    b = np.packbits(padded.reshape(R, W, 8, 8), axis=-1, bitorder="little")
    return b.reshape(R, W, 8).view(np.uint64).reshape(R, W)


def lowest_bit(words: np.ndarray) -> np.ndarray:
    """Index of the lowest set bit of each row of a (M, W) bitset; -1 if empty."""
    if words.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    nz = words != 0
    any_ = nz.any(axis=1)
    w = np.argmax(nz, axis=1)
    word = words[np.arange(len(words)), w]
    low = word & (~word + np.uint64(1))
    bit = np.frexp(low.astype(np.float64))[1].astype(np.int64) - 1
    return np.where(any_, w * 64 + bit, -1)


def _bit_test(words: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """words (M, W), idx (K,) -> bool (M, K)."""
    sel = words[:, idx >> 6]
    return ((sel >> (idx & 63).astype(np.uint64)) & np.uint64(1)).astype(bool)


def closure_rounds(nx: int, ny: int, ex: np.ndarray, ey: np.ndarray, blue0: np.ndarray):
    ex = np.asarray(ex, dtype=np.int64)
    ey = np.asarray(ey, dtype=np.int64)
    E = len(ex)
    rnd = np.full(E, -1, dtype=np.int32)
    wx = np.full(E, -1, dtype=np.int32)
    wy = np.full(E, -1, dtype=np.int32)
    blue = np.asarray(blue0, dtype=bool).copy()
    rnd[blue] = 0

    Wy, Wx = nwords(ny), nwords(nx)
    rowbits = np.zeros((nx, Wy), dtype=np.uint64)
    colbits = np.zeros((ny, Wx), dtype=np.uint64)

    def set_bits(idx):
        np.bitwise_or.at(rowbits, (ex[idx], ey[idx] >> 6), np.uint64(1) << (ey[idx] & 63).astype(np.uint64))
        np.bitwise_or.at(colbits, (ey[idx], ex[idx] >> 6), np.uint64(1) << (ex[idx] & 63).astype(np.uint64))

    set_bits(np.flatnonzero(blue))
    level = 0
    while True:
        level += 1
        # U[y] = union of blue neighbourhoods of the blue neighbours of y
        U = np.zeros((ny, Wy), dtype=np.uint64)
        bidx = np.flatnonzero(blue)
        bidx = bidx[np.argsort(ey[bidx], kind="stable")]
        for s in range(0, len(bidx), _CHUNK):
            part = bidx[s:s + _CHUNK]
            ys = ey[part]
            starts = np.flatnonzero(np.r_[True, ys[1:] != ys[:-1]])
            red_ = np.bitwise_or.reduceat(rowbits[ex[part]], starts, axis=0)
            U[ys[starts]] |= red_
        red = np.flatnonzero(~blue)
        new = []
        for s in range(0, len(red), _CHUNK):
            part = red[s:s + _CHUNK]
            hit = rowbits[ex[part]] & U[ey[part]]
            ok = hit.any(axis=1)
            if not ok.any():
                continue
            part, hit = part[ok], hit[ok]
            y1 = lowest_bit(hit)
            x1 = lowest_bit(colbits[ey[part]] & colbits[y1])
            wx[part] = x1
            wy[part] = y1
            new.append(part)
        if not new:
            break
        new = np.concatenate(new)
        rnd[new] = level
        blue[new] = True
        set_bits(new)
    return rnd, wx, wy


def strong_rows(cells: np.ndarray, ident: int):
    cells = np.ascontiguousarray(cells)
    R, C = cells.shape
    parent = np.full((R, C), -1, dtype=np.int32)
    wit = np.full((R, C), -1, dtype=np.int32)
    if ident < 0:
        return parent, wit
    imask = cells == ident
    icol = pack_rows(imask.T)  # column -> rows carrying the identity
    # adjacency between columns: share a distinguished row
    im = imask.astype(np.float32)
    g2 = pack_rows((im.T @ im) > 0)
    nvals = int(cells.max()) + 1
    for b in range(R):
        vals = cells[b].astype(np.int64)
        valbits = pack_rows(vals[None, :] == np.arange(nvals)[:, None])
        visited = np.zeros(C, dtype=bool)
        vbits = np.zeros(nwords(C), dtype=np.uint64)
        while not visited.all():
            unvis = np.flatnonzero(~visited)
            _, first = np.unique(vals[unvis], return_index=True)
            frontier = np.sort(unvis[first])
            visited[frontier] = True
            vbits = pack_rows(visited[None, :])[0]
            while len(frontier):
                adj = g2[frontier] & valbits[vals[frontier]] & ~vbits
                cand_bits = np.bitwise_or.reduce(adj, axis=0)
                if not cand_bits.any():
                    break
                cand = np.flatnonzero(np.unpackbits(cand_bits.view(np.uint8), bitorder="little")[:C])
                hits = _bit_test(adj, cand)
                first = np.argmax(hits, axis=0)
                order = np.lexsort((cand, first))
                cand, first = cand[order], first[order]
                par = frontier[first]
                parent[b, cand] = par
                wit[b, cand] = lowest_bit(icol[par] & icol[cand])
                visited[cand] = True
                vbits = pack_rows(visited[None, :])[0]
                frontier = cand
    return parent, wit
