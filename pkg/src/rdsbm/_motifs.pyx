# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled motif-counting kernel.

Same contract as the pure-Python twin ``rdsbm._motifs_py``: adjacency rows
packed into 64-bit words, depth-first placement of motif vertices with
bitset intersection of the placed neighbours' rows, popcount at the last
level.
"""
import numpy as np

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil

BACKEND_NAME = "compiled"


def prepare(y):
    """Pack an (n, n) 0/1 adjacency matrix into (n, words) uint64 rows."""
    y = np.ascontiguousarray(y, dtype=np.uint8)
    n = y.shape[0]
    words = (n + 63) // 64
    padded = np.zeros((n, words * 64), dtype=np.uint8)
    padded[:, :n] = y
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed.view(np.uint64))


cdef long long _rec(const unsigned long long[:, ::1] rows,
                    unsigned long long[:, ::1] scratch,
                    unsigned long long[::1] used,
                    unsigned long long[::1] tail_mask,
                    long long[::1] assigned,
                    const long long[:, ::1] prev,
                    const long long[::1] nprev,
                    int level, int k, int words) nogil:
    cdef int w, i, b, v
    cdef unsigned long long m, bit
    cdef long long count = 0
    if nprev[level] == 0:
        for w in range(words):
            scratch[level, w] = tail_mask[w] & ~used[w]
    else:
        v = <int> assigned[prev[level, 0]]
        for w in range(words):
            scratch[level, w] = rows[v, w]
        for i in range(1, <int> nprev[level]):
            v = <int> assigned[prev[level, i]]
            for w in range(words):
                scratch[level, w] &= rows[v, w]
        for w in range(words):
            scratch[level, w] &= ~used[w]
    if level == k - 1:
        for w in range(words):
            count += __builtin_popcountll(scratch[level, w])
        return count
    for w in range(words):
        m = scratch[level, w]
        while m:
            bit = m & (0 - m)
            b = __builtin_ctzll(bit)
            assigned[level] = (<long long> w << 6) + b
            used[w] |= bit
            count += _rec(rows, scratch, used, tail_mask, assigned,
                          prev, nprev, level + 1, k, words)
            used[w] &= ~bit
            m ^= bit
    return count


def count_injective(rows, int n, prev):
    """Count ordered injective maps of a motif into the graph."""
    cdef int k = len(prev)
    cdef int words = rows.shape[1]
    rows = np.ascontiguousarray(rows, dtype=np.uint64)

    prev_pad = np.zeros((k, max(1, k)), dtype=np.int64)
    nprev = np.zeros(k, dtype=np.int64)
    for t, ps in enumerate(prev):
        nprev[t] = len(ps)
        for i, p in enumerate(ps):
            prev_pad[t, i] = p

    cdef unsigned long long full_word = 0xFFFFFFFFFFFFFFFFULL
    cdef int rem = n % 64
    tail = np.zeros(words, dtype=np.uint64)
    tail[:] = np.uint64(full_word)
    if rem:
        # 64-bit shift; a plain C int shift would wrap for rem >= 32
        tail[words - 1] = np.uint64(full_word >> (64 - rem))

    scratch = np.zeros((k, words), dtype=np.uint64)
    used = np.zeros(words, dtype=np.uint64)
    assigned = np.zeros(k, dtype=np.int64)

    cdef const unsigned long long[:, ::1] rows_v = rows
    cdef unsigned long long[:, ::1] scratch_v = scratch
    cdef unsigned long long[::1] used_v = used
    cdef unsigned long long[::1] tail_v = tail
    cdef long long[::1] assigned_v = assigned
    cdef const long long[:, ::1] prev_v = prev_pad
    cdef const long long[::1] nprev_v = nprev

    cdef long long result
    with nogil:
        result = _rec(rows_v, scratch_v, used_v, tail_v, assigned_v,
                      prev_v, nprev_v, 0, k, words)
    return int(result)
