# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep kernel; semantics match kernels._sweep_py exactly."""


def gauss_seidel_sweep(long[::1] indptr, long[::1] indices, double[::1] data,
                       double[::1] offset, double[::1] x, long[::1] order):
    cdef double max_delta = 0.0
    cdef double acc, diag, denom, new, delta
    cdef Py_ssize_t pos, i, k, j
    for pos in range(order.shape[0]):
        i = order[pos]
        acc = offset[i]
        diag = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j == i:
                diag += data[k]
            else:
                acc += data[k] * x[j]
        denom = 1.0 - diag
        if denom <= 0.0:
            raise ZeroDivisionError(f"row {i}: unit diagonal mass {diag}")
        new = acc / denom
        delta = new - x[i]
        if delta < 0.0:
            delta = -delta
        if delta > max_delta:
            max_delta = delta
        x[i] = new
    return max_delta


def max_residual(long[::1] indptr, long[::1] indices, double[::1] data,
                 double[::1] offset, double[::1] x):
    cdef double worst = 0.0
    cdef double acc, defect
    cdef Py_ssize_t i, k
    for i in range(x.shape[0]):
        acc = offset[i]
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        defect = x[i] - acc
        if defect < 0.0:
            defect = -defect
        if defect > worst:
            worst = defect
    return worst
