# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: batched tridiagonal solves and banded 3D operators."""
import numpy as np
cimport numpy as cnp

from .errors import SingularSystemError

cnp.import_array()


def thomas_batched(const double[::1] lower, const double[::1] diag, const double[::1] upper, rhs):
    """Solve one tridiagonal system for every column of ``rhs`` (shape (n, m))."""
    cdef const double[:, ::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t m = b.shape[1]
    cdef Py_ssize_t i, j
    cdef double denom, w
    if b.shape[0] != n or lower.shape[0] != n - 1 or upper.shape[0] != n - 1:
        raise ValueError("inconsistent tridiagonal system sizes")
    x_arr = np.empty((n, m))
    cdef double[:, ::1] x = x_arr
    cdef double[::1] cp = np.empty(n)
    denom = diag[0]
    if denom == 0.0:
        raise SingularSystemError("zero pivot at row 0")
    cp[0] = upper[0] / denom if n > 1 else 0.0
    for j in range(m):
        x[0, j] = b[0, j] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * cp[i - 1]
        if denom == 0.0:
            raise SingularSystemError(f"zero pivot at row {i}")
        if i < n - 1:
            cp[i] = upper[i] / denom
        w = lower[i - 1]
        for j in range(m):
            x[i, j] = (b[i, j] - w * x[i - 1, j]) / denom
    for i in range(n - 2, -1, -1):
        w = cp[i]
        for j in range(m):
            x[i, j] -= w * x[i + 1, j]
    return x_arr


cdef void _band0(const double[:, :, ::1] u, const double[:, ::1] B, double[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t nb = B.shape[0], half = nb // 2
    cdef Py_ssize_t i, j, k, b, s
    cdef double c
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                out[i, j, k] = 0.0
        for b in range(nb):
            s = i + b - half
            c = B[b, i]
            if s < 0 or s >= n0 or c == 0.0:
                continue
            for j in range(n1):
                for k in range(n2):
                    out[i, j, k] += c * u[s, j, k]


cdef void _band1(const double[:, :, ::1] u, const double[:, ::1] B, double[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t nb = B.shape[0], half = nb // 2
    cdef Py_ssize_t i, j, k, b, s
    cdef double c
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                out[i, j, k] = 0.0
            for b in range(nb):
                s = j + b - half
                c = B[b, j]
                if s < 0 or s >= n1 or c == 0.0:
                    continue
                for k in range(n2):
                    out[i, j, k] += c * u[i, s, k]


cdef void _band2(const double[:, :, ::1] u, const double[:, ::1] B, double[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t nb = B.shape[0], half = nb // 2
    cdef Py_ssize_t i, j, k, b, s
    cdef double acc
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                acc = 0.0
                for b in range(nb):
                    s = k + b - half
                    if 0 <= s < n2:
                        acc = acc + B[b, k] * u[i, j, s]
                out[i, j, k] = acc


def apply_banded3(u, bands):
    """Sum over terms of (B0 (x) B1 (x) B2) u for a list of band triples.

    ``B[b, i]`` multiplies ``u[i + b - nb // 2]`` along the band's axis.
    """
    cdef const double[:, :, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    shape = (uu.shape[0], uu.shape[1], uu.shape[2])
    total_arr = np.zeros(shape)
    t1_arr = np.empty(shape)
    t2_arr = np.empty(shape)
    cdef double[:, :, ::1] total = total_arr
    cdef double[:, :, ::1] t1 = t1_arr
    cdef double[:, :, ::1] t2 = t2_arr
    cdef const double[:, ::1] B0, B1, B2
    cdef Py_ssize_t i, j, k
    for b0, b1, b2 in bands:
        B0 = np.ascontiguousarray(b0, dtype=np.float64)
        B1 = np.ascontiguousarray(b1, dtype=np.float64)
        B2 = np.ascontiguousarray(b2, dtype=np.float64)
        if B0.shape[1] != shape[0] or B1.shape[1] != shape[1] or B2.shape[1] != shape[2]:
            raise ValueError("band lengths do not match the field shape")
        with nogil:
            _band2(uu, B2, t1)
            _band1(t1, B1, t2)
            _band0(t2, B0, t1)
            for i in range(t1.shape[0]):
                for j in range(t1.shape[1]):
                    for k in range(t1.shape[2]):
                        total[i, j, k] += t1[i, j, k]
    return total_arr
