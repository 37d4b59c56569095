"""Pure-Python sweep kernel; reference semantics for the compiled twin."""


def gauss_seidel_sweep(indptr, indices, data, offset, x, order):
    """One in-place Gauss-Seidel pass of ``x = M x + offset`` over ``order``.

    Diagonal entries are moved to the left-hand side, so each visited row is
    satisfied exactly at the moment it is updated.  Returns the largest
    absolute update.
    """
    max_delta = 0.0
    for i in order:
        i = int(i)
        acc = offset[i]
        diag = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = int(indices[k])
            if j == i:
                diag += data[k]
            else:
                acc += data[k] * x[j]
        denom = 1.0 - diag
        if denom <= 0.0:
            raise ZeroDivisionError(f"row {i}: unit diagonal mass {diag}")
        new = acc / denom
        delta = abs(new - x[i])
        if delta > max_delta:
            max_delta = delta
        x[i] = new
    return max_delta


def max_residual(indptr, indices, data, offset, x):
    """Largest row defect ``|x - (M x + offset)|`` without touching ``x``."""
    worst = 0.0
    for i in range(len(x)):
        acc = offset[i]
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[int(indices[k])]
        defect = abs(x[i] - acc)
        if defect > worst:
            worst = defect
    return worst
