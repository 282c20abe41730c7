# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bit-row kernels for the three reveals passes.

All arrays live in topological-rank space: row ``r`` belongs to the event of
rank ``r`` and bit ``q`` of a row stands for the event of rank ``q``.  The
adjacency arguments are CSR pairs (``ptr``, ``idx``) over ranks.
"""

from libc.stdint cimport uint64_t, int64_t

ctypedef uint64_t u64


cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


cdef inline bint _subset(const u64[:, ::1] rows, Py_ssize_t q, Py_ssize_t r,
                         const int64_t[::1] lo, const int64_t[::1] hi) noexcept nogil:
    # rows[q] <= rows[r], using the nonzero word span of each row
    cdef Py_ssize_t w
    if lo[q] > hi[q]:
        return True
    if lo[q] < lo[r] or hi[q] > hi[r]:
        return False
    for w in range(lo[q], hi[q] + 1):
        if rows[q, w] & ~rows[r, w]:
            return False
    return True


def pass1_post(u64[:, ::1] post, const int64_t[::1] succ_ptr, const int64_t[::1] succ_idx):
    cdef Py_ssize_t n = post.shape[0], nw = post.shape[1]
    cdef Py_ssize_t r, j, s, w
    with nogil:
        for r in range(n - 1, -1, -1):
            post[r, r >> 6] |= (<u64>1) << (r & 63)
            for j in range(succ_ptr[r], succ_ptr[r + 1]):
                s = succ_idx[j]
                for w in range(nw):
                    post[r, w] |= post[s, w]


def pass2_conf(u64[:, ::1] conf, const u64[:, ::1] post,
               const int64_t[::1] pred_ptr, const int64_t[::1] pred_idx,
               const int64_t[::1] comp_ptr, const int64_t[::1] comp_idx):
    cdef Py_ssize_t n = conf.shape[0], nw = conf.shape[1]
    cdef Py_ssize_t r, j, s, w
    with nogil:
        for r in range(n):
            for j in range(pred_ptr[r], pred_ptr[r + 1]):
                s = pred_idx[j]
                for w in range(nw):
                    conf[r, w] |= conf[s, w]
            for j in range(comp_ptr[r], comp_ptr[r + 1]):
                s = comp_idx[j]
                for w in range(nw):
                    conf[r, w] |= post[s, w]


def pass3_rev(u64[:, ::1] rev, const u64[:, ::1] conf,
              const int64_t[::1] pred_ptr, const int64_t[::1] pred_idx,
              const int64_t[::1] lo, const int64_t[::1] hi,
              Py_ssize_t start, Py_ssize_t stop):
    """Fill rows ``start:stop``; rows of their predecessors must be final."""
    cdef Py_ssize_t n = rev.shape[0], nw = rev.shape[1]
    cdef Py_ssize_t r, j, s, w, q
    cdef u64 cand, tail
    cdef int64_t checks = 0
    tail = ~(<u64>0) if (n & 63) == 0 else (((<u64>1) << (n & 63)) - 1)
    with nogil:
        for r in range(start, stop):
            rev[r, r >> 6] |= (<u64>1) << (r & 63)
            for j in range(pred_ptr[r], pred_ptr[r + 1]):
                s = pred_idx[j]
                for w in range(nw):
                    rev[r, w] |= rev[s, w]
            for w in range(nw):
                cand = ~(rev[r, w] | conf[r, w])
                if w == nw - 1:
                    cand &= tail
                while cand:
                    q = (w << 6) + __builtin_ctzll(cand)
                    cand &= cand - 1
                    checks += 1
                    if _subset(conf, q, r, lo, hi):
                        rev[r, w] |= (<u64>1) << (q & 63)
    return checks


def pass3_rev_listing(u64[:, ::1] rev, const u64[:, ::1] conf,
                      const int64_t[::1] pred_ptr, const int64_t[::1] pred_idx):
    """The literal listing variant: compares against the current rev rows."""
    cdef Py_ssize_t n = rev.shape[0], nw = rev.shape[1]
    cdef Py_ssize_t r, j, s, w, q, v
    cdef u64 cand, tail
    cdef bint ok
    cdef int64_t checks = 0
    tail = ~(<u64>0) if (n & 63) == 0 else (((<u64>1) << (n & 63)) - 1)
    with nogil:
        for r in range(n):
            rev[r, r >> 6] |= (<u64>1) << (r & 63)
        for r in range(n):
            for j in range(pred_ptr[r], pred_ptr[r + 1]):
                s = pred_idx[j]
                for w in range(nw):
                    rev[r, w] |= rev[s, w]
            for w in range(nw):
                cand = ~(rev[r, w] | conf[r, w])
                if w == nw - 1:
                    cand &= tail
                while cand:
                    q = (w << 6) + __builtin_ctzll(cand)
                    cand &= cand - 1
                    checks += 1
                    ok = True
                    for v in range(nw):
                        if rev[q, v] & ~rev[r, v]:
                            ok = False
                            break
                    if ok:
                        rev[r, w] |= (<u64>1) << (q & 63)
    return checks
