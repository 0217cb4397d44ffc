# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the averaging engine.

Each routine mirrors a function in :mod:`ergolab._kernels._fallback` operation
for operation, so both backends produce bit-identical output.
"""
from libc.math cimport fabs, floor

cdef double _SPLITTER = 134217729.0  # 2**27 + 1


def compensated_accumulate(const double[:, ::1] block, double[::1] s, double[::1] c,
                           long long start, const long long[::1] checkpoints,
                           Py_ssize_t ck_pos, double[:, ::1] out):
    cdef Py_ssize_t nrows = block.shape[0]
    cdef Py_ssize_t width = block.shape[1]
    cdef Py_ssize_t nck = checkpoints.shape[0]
    cdef Py_ssize_t i, j
    cdef long long n
    cdef double x, t, sj, inv
    for i in range(nrows):
        n = start + i + 1
        for j in range(width):
            x = block[i, j]
            sj = s[j]
            t = sj + x
            if fabs(sj) >= fabs(x):
                c[j] += (sj - t) + x
            else:
                c[j] += (x - t) + sj
            s[j] = t
        if ck_pos < nck and checkpoints[ck_pos] == n:
            for j in range(width):
                out[ck_pos, j] = (s[j] + c[j]) / <double>n
            ck_pos += 1
    return ck_pos


def permutation_gather(const double complex[:, ::1] x, const long long[::1] members,
                       const long long[::1] cstart, const long long[::1] cpos,
                       const long long[::1] clen, const long long[::1] ns,
                       double complex[:, ::1] out):
    cdef Py_ssize_t nrows = x.shape[0]
    cdef Py_ssize_t size = x.shape[1]
    cdef Py_ssize_t k, g
    cdef long long shift, L
    for k in range(nrows):
        for g in range(size):
            L = clen[g]
            shift = (cpos[g] + ns[k]) % L
            out[k, g] = x[k, members[cstart[g] + shift]]


cdef inline void _two_prod(double a, double b, double* p, double* e) nogil:
    cdef double ca, ah, al, cb, bh, bl
    p[0] = a * b
    ca = _SPLITTER * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLITTER * b
    bh = cb - (cb - b)
    bl = b - bh
    e[0] = ((ah * bh - p[0]) + ah * bl + al * bh) + al * bl


def dd_phase_fraction(const long long[::1] ns, const double[::1] ahi, const double[::1] alo,
                      double[:, ::1] out):
    cdef Py_ssize_t nrows = ns.shape[0]
    cdef Py_ssize_t width = ahi.shape[0]
    cdef Py_ssize_t k, m
    cdef double nd, p, e, r
    for k in range(nrows):
        nd = <double>ns[k]
        for m in range(width):
            _two_prod(nd, ahi[m], &p, &e)
            r = (p - floor(p)) + (e + nd * alo[m])
            r = r - floor(r)
            out[k, m] = r
