"""Pure-numpy versions of the compiled kernels."""
import numpy as np

from .errors import SingularSystemError


def thomas_batched(lower, diag, upper, rhs):
    """Solve one tridiagonal system for every column of ``rhs`` (shape (n, m))."""
    lower = np.asarray(lower, dtype=float)
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    b = np.asarray(rhs, dtype=float)
    n = diag.shape[0]
    if b.shape[0] != n or lower.shape[0] != n - 1 or upper.shape[0] != n - 1:
        raise ValueError("inconsistent tridiagonal system sizes")
    cp = np.empty(n)
    x = np.empty(b.shape)
    denom = diag[0]
    if denom == 0.0:
        raise SingularSystemError("zero pivot at row 0")
    cp[0] = upper[0] / denom if n > 1 else 0.0
    x[0] = b[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * cp[i - 1]
        if denom == 0.0:
            raise SingularSystemError(f"zero pivot at row {i}")
        if i < n - 1:
            cp[i] = upper[i] / denom
        x[i] = (b[i] - lower[i - 1] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def _band_axis(u, B, ax):
    nb, n = B.shape
    half = nb // 2
    um = np.moveaxis(u, ax, 0)
    out = np.zeros_like(um)
    for b in range(nb):
        s = b - half
        lo, hi = max(0, -s), min(n, n - s)
        if lo >= hi:
            continue
        out[lo:hi] += B[b, lo:hi, None, None] * um[lo + s:hi + s]
    return np.moveaxis(out, 0, ax)


def apply_banded3(u, bands):
    """Sum over terms of (B0 (x) B1 (x) B2) u for a list of band triples."""
    u = np.asarray(u, dtype=float)
    total = np.zeros(u.shape)
    for b0, b1, b2 in bands:
        t = _band_axis(u, np.asarray(b2, dtype=float), 2)
        t = _band_axis(t, np.asarray(b1, dtype=float), 1)
        total += _band_axis(t, np.asarray(b0, dtype=float), 0)
    return total
