# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled shattering kernels (bitmask families over at most 20 points)."""

from libc.stdlib cimport malloc, calloc, free
from libc.stdint cimport uint32_t, int32_t


cdef inline int _popcount(uint32_t v) nogil:
    cdef int c = 0
    while v:
        v &= v - 1
        c += 1
    return c


cdef int _count_traces(const uint32_t* fam, Py_ssize_t nfam, uint32_t sub,
                       int32_t* stamp, int32_t tag, int target) nogil:
    cdef Py_ssize_t i
    cdef uint32_t tr
    cdef int distinct = 0
    for i in range(nfam):
        tr = fam[i] & sub
        if stamp[tr] != tag:
            stamp[tr] = tag
            distinct += 1
            if distinct == target:
                break
    return distinct


def shatters(masks, unsigned int subset):
    cdef int k = _popcount(subset)
    fam = list(set(masks))
    if len(fam) < (1 << k):
        return False
    return len({m & subset for m in fam}) == (1 << k)


def vc_dimension(masks, int n):
    if n > 20 or n < 0:
        raise ValueError("kernel supports domains of at most 20 points")
    fam_list = list(set(masks))
    cdef Py_ssize_t nfam = len(fam_list)
    if nfam == 0:
        return 0
    cdef uint32_t* fam = <uint32_t*> malloc(nfam * sizeof(uint32_t))
    cdef int32_t* stamp = <int32_t*> calloc((<size_t>1) << n, sizeof(int32_t))
    if fam == NULL or stamp == NULL:
        free(fam)
        free(stamp)
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(nfam):
        fam[i] = <uint32_t> fam_list[i]

    cdef int best = 0
    cdef int k, target
    cdef uint32_t sub, c, r, limit
    cdef int32_t tag = 0
    cdef bint found
    try:
        with nogil:
            limit = (<uint32_t>1) << n
            for k in range(1, n + 1):
                target = 1 << k
                if nfam < target:
                    break
                found = False
                # Gosper's hack: all n-bit masks with k bits set, ascending
                sub = ((<uint32_t>1) << k) - 1
                while sub < limit:
                    tag += 1
                    if _count_traces(fam, nfam, sub, stamp, tag, target) == target:
                        found = True
                        break
                    c = sub & (~sub + 1)
                    r = sub + c
                    sub = (((r ^ sub) >> 2) // c) | r
                if not found:
                    break
                best = k
    finally:
        free(fam)
        free(stamp)
    return best
