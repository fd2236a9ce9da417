"""Three-dimensional tensor trains and full-grid fields.

A :class:`TTTensor3` stores cores of shapes ``(1, n1, r1)``, ``(r1, n2, r2)``
and ``(r2, n3, 1)``; entry ``(i, j, k)`` is the product of the slices
``G1[:, i, :] @ G2[:, j, :] @ G3[:, k, :]``.  Every operation returns a new
object and never aliases its inputs.

Rounding thresholds are relative to the Frobenius norm of the argument.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import BoundsError, InvalidInputError, ResourceError

CENTERINGS = ("vertex", "cell")

# Densification cap for to_full (entries, not bytes).
MAX_DENSE_ENTRIES = 1 << 27

# Norms below this fraction of the product of core norms are round-off.
NOISE_FLOOR = 64 * np.finfo(float).eps


def _check_centering(centering):
    if centering not in CENTERINGS:
        raise InvalidInputError(f"centering must be one of {CENTERINGS}, got {centering!r}")


class DenseField3:
    """Full 3D array tagged with its centering."""

    __slots__ = ("data", "centering")

    def __init__(self, data, centering: str = "vertex", copy: bool = True):
        _check_centering(centering)
        a = np.array(data, dtype=float, copy=copy) if copy else np.asarray(data, dtype=float)
        if a.ndim != 3 or a.size == 0:
            raise InvalidInputError("DenseField3 needs a nonempty 3-axis array")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("DenseField3 entries must be finite")
        self.data = a
        self.centering = centering

    @classmethod
    def _wrap(cls, data, centering):
        obj = cls.__new__(cls)
        obj.data = data
        obj.centering = centering
        return obj

    @property
    def shape(self):
        return self.data.shape

    def storage(self) -> int:
        return int(self.data.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def max_rank(self) -> int:
        return 0

    def _other(self, other):
        if isinstance(other, DenseField3):
            if other.shape != self.shape:
                raise InvalidInputError("field shapes differ")
            return other.data
        raise TypeError("DenseField3 arithmetic needs another DenseField3")

    def __add__(self, other):
        return DenseField3._wrap(self.data + self._other(other), self.centering)

    def __sub__(self, other):
        return DenseField3._wrap(self.data - self._other(other), self.centering)

    def __mul__(self, s):
        if not np.isscalar(s):
            return NotImplemented
        return DenseField3._wrap(self.data * float(s), self.centering)

    __rmul__ = __mul__

    def __neg__(self):
        return DenseField3._wrap(-self.data, self.centering)

    def __repr__(self):
        return f"DenseField3(shape={self.shape}, centering={self.centering!r})"


class TTTensor3:
    """Three-core tensor train."""

    __slots__ = ("cores", "centering", "rank_capped")

    def __init__(self, cores: Sequence[np.ndarray], centering: str = "vertex", copy: bool = True):
        _check_centering(centering)
        if len(cores) != 3:
            raise InvalidInputError("a TTTensor3 has exactly three cores")
        cs = []
        for c in cores:
            c = np.array(c, dtype=float, copy=True) if copy else np.asarray(c, dtype=float)
            if c.ndim != 3 or 0 in c.shape:
                raise InvalidInputError("cores must be nonempty 3-axis arrays")
            cs.append(c)
        if cs[0].shape[0] != 1 or cs[2].shape[2] != 1:
            raise InvalidInputError("boundary ranks must be 1")
        if cs[0].shape[2] != cs[1].shape[0] or cs[1].shape[2] != cs[2].shape[0]:
            raise InvalidInputError("adjacent core ranks disagree")
        if not all(np.all(np.isfinite(c)) for c in cs):
            raise InvalidInputError("TT cores must be finite")
        for c in cs:
            c.setflags(write=False)
        self.cores = tuple(cs)
        self.centering = centering
        self.rank_capped = False

    @classmethod
    def _wrap(cls, cores, centering, rank_capped=False):
        obj = cls.__new__(cls)
        for c in cores:
            c.setflags(write=False)
        obj.cores = tuple(cores)
        obj.centering = centering
        obj.rank_capped = rank_capped
        return obj

    @property
    def mode_sizes(self):
        return tuple(c.shape[1] for c in self.cores)

    shape = mode_sizes

    @property
    def ranks(self):
        return (self.cores[0].shape[2], self.cores[1].shape[2])

    def max_rank(self) -> int:
        return max(self.ranks)

    def storage(self) -> int:
        return int(sum(c.size for c in self.cores))

    def norm(self) -> float:
        return norm(self)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __mul__(self, s):
        if not np.isscalar(s):
            return NotImplemented
        return scale(self, float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        return f"TTTensor3(mode_sizes={self.mode_sizes}, ranks={self.ranks}, centering={self.centering!r})"


def zeros(mode_sizes, centering: str = "vertex") -> TTTensor3:
    n1, n2, n3 = mode_sizes
    return TTTensor3._wrap([np.zeros((1, n1, 1)), np.zeros((1, n2, 1)), np.zeros((1, n3, 1))], centering)


def _truncation_rank(s: np.ndarray, delta: float, max_rank: Optional[int]):
    """Smallest rank whose discarded tail has norm <= delta, then capped."""
    tail = np.sqrt(np.cumsum((s * s)[::-1]))[::-1]  # tail[r] = ||s[r:]||
    r = int(np.count_nonzero(tail > delta))
    r = max(r, 1)
    capped = False
    if max_rank is not None and r > max_rank:
        r = max_rank
        capped = True
    return r, capped


def _check_eps(eps, max_rank):
    if not (eps >= 0 and np.isfinite(eps)):
        raise InvalidInputError("eps must be a finite nonnegative number")
    if max_rank is not None and int(max_rank) < 1:
        raise InvalidInputError("max_rank must be positive")


def build_from_full(T, eps: float = 0.0, max_rank: Optional[int] = None,
                    centering: Optional[str] = None) -> TTTensor3:
    """TT-SVD of a dense 3D array with relative threshold ``eps``."""
    _check_eps(eps, max_rank)
    if isinstance(T, DenseField3):
        centering = centering or T.centering
        a = T.data
    else:
        a = np.asarray(T, dtype=float)
    centering = centering or "vertex"
    if a.ndim != 3 or a.size == 0:
        raise InvalidInputError("build_from_full needs a nonempty 3-axis array")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("build_from_full input must be finite")
    n1, n2, n3 = a.shape
    total = float(np.linalg.norm(a))
    if total == 0.0:
        return zeros(a.shape, centering)
    delta = eps * total / np.sqrt(2.0)
    u, s, vt = np.linalg.svd(a.reshape(n1, n2 * n3), full_matrices=False)
    r1, c1 = _truncation_rank(s, delta, max_rank)
    g1 = u[:, :r1].reshape(1, n1, r1)
    rest = (s[:r1, None] * vt[:r1]).reshape(r1 * n2, n3)
    u, s, vt = np.linalg.svd(rest, full_matrices=False)
    r2, c2 = _truncation_rank(s, delta, max_rank)
    g2 = u[:, :r2].reshape(r1, n2, r2)
    g3 = (s[:r2, None] * vt[:r2]).reshape(r2, n3, 1)
    return TTTensor3._wrap([g1, g2, g3], centering, c1 or c2)


def build_rank1(a, b, c, centering: str = "vertex") -> TTTensor3:
    vs = [np.asarray(v, dtype=float).ravel() for v in (a, b, c)]
    if any(v.size == 0 for v in vs):
        raise InvalidInputError("build_rank1 needs nonempty factors")
    return TTTensor3([v.reshape(1, -1, 1) for v in vs], centering)


def eval(A: TTTensor3, i: int, j: int, k: int) -> float:  # noqa: A001 - mirrors the math name
    n = A.mode_sizes
    for idx, size in zip((i, j, k), n):
        if not (0 <= idx < size):
            raise BoundsError(f"index {(i, j, k)} outside mode sizes {n}")
    g1, g2, g3 = A.cores
    return float(g1[0, i, :] @ g2[:, j, :] @ g3[:, k, 0])


def to_full(A: TTTensor3, max_entries: int = MAX_DENSE_ENTRIES) -> DenseField3:
    n1, n2, n3 = A.mode_sizes
    if n1 * n2 * n3 > max_entries:
        raise ResourceError(f"densifying {n1}x{n2}x{n3} exceeds the cap of {max_entries} entries")
    g1, g2, g3 = A.cores
    data = np.einsum("ia,ajb,bk->ijk", g1[0], g2, g3[:, :, 0], optimize=True)
    return DenseField3._wrap(data, A.centering)


def _same_structure(A: TTTensor3, B: TTTensor3):
    if not isinstance(A, TTTensor3) or not isinstance(B, TTTensor3):
        raise InvalidInputError("TT operation needs TTTensor3 operands")
    if A.mode_sizes != B.mode_sizes:
        raise InvalidInputError(f"mode sizes differ: {A.mode_sizes} vs {B.mode_sizes}")
    if A.centering != B.centering:
        raise InvalidInputError("centering differs")


def add(A: TTTensor3, B: TTTensor3) -> TTTensor3:
    """Exact sum; ranks add up."""
    _same_structure(A, B)
    a1, a2, a3 = A.cores
    b1, b2, b3 = B.cores
    g1 = np.concatenate((a1, b1), axis=2)
    ra1, rb1 = a1.shape[2], b1.shape[2]
    ra2, rb2 = a2.shape[2], b2.shape[2]
    g2 = np.zeros((ra1 + rb1, a2.shape[1], ra2 + rb2))
    g2[:ra1, :, :ra2] = a2
    g2[ra1:, :, ra2:] = b2
    g3 = np.concatenate((a3, b3), axis=0)
    return TTTensor3._wrap([g1, g2, g3], A.centering)


def scale(A: TTTensor3, s: float) -> TTTensor3:
    s = float(s)
    if not np.isfinite(s):
        raise InvalidInputError("scale factor must be finite")
    g1, g2, g3 = A.cores
    return TTTensor3._wrap([g1 * s, g2.copy(), g3.copy()], A.centering)


def hadamard_rank1(A: TTTensor3, vx, vy, vz) -> TTTensor3:
    """Entrywise product with the rank-1 tensor ``vx x vy x vz``."""
    vs = [np.asarray(v, dtype=float).ravel() for v in (vx, vy, vz)]
    if tuple(v.size for v in vs) != A.mode_sizes:
        raise InvalidInputError("rank-1 factor lengths must match the mode sizes")
    return TTTensor3._wrap([c * v[None, :, None] for c, v in zip(A.cores, vs)], A.centering)


def inner(A: TTTensor3, B: TTTensor3) -> float:
    if A.mode_sizes != B.mode_sizes:
        raise InvalidInputError(f"mode sizes differ: {A.mode_sizes} vs {B.mode_sizes}")
    a1, a2, a3 = A.cores
    b1, b2, b3 = B.cores
    m = a1[0].T @ b1[0]
    m = np.einsum("ajb,ac,cjd->bd", a2, m, b2, optimize=True)
    return float(np.einsum("ak,ab,bk->", a3[:, :, 0], m, b3[:, :, 0], optimize=True))


def norm(A: TTTensor3) -> float:
    # Orthogonalize right-to-left so the result is accurate even when the
    # entries cancel heavily (inner(A, A) loses relative precision there).
    _, nrm = _right_orthogonalize(A.cores)
    return nrm


def _right_orthogonalize(cores):
    g1, g2, g3 = cores
    r2, n3 = g3.shape[0], g3.shape[1]
    q, r = np.linalg.qr(g3[:, :, 0].T)  # (n3, k), (k, r2)
    g3o = q.T.reshape(-1, n3, 1)
    g2 = np.einsum("ajb,kb->ajk", g2, r)
    r1, n2, k2 = g2.shape
    q, r = np.linalg.qr(g2.reshape(r1, n2 * k2).T)
    g2o = q.T.reshape(-1, n2, k2)
    g1 = np.einsum("ia,ka->ik", g1[0], r)
    return (g1[None], g2o, g3o), float(np.linalg.norm(g1))


def round(A: TTTensor3, eps: float, max_rank: Optional[int] = None) -> TTTensor3:  # noqa: A001
    """Recompress ``A`` so that ``||round(A) - A||_F <= eps * ||A||_F``."""
    _check_eps(eps, max_rank)
    (g1, g2, g3), nrm = _right_orthogonalize(A.cores)
    bound = float(np.prod([np.linalg.norm(c) for c in A.cores]))
    if nrm <= NOISE_FLOOR * bound:
        # Exact cancellation (e.g. A - A) leaves only round-off.
        return zeros(A.mode_sizes, A.centering)
    delta = eps * nrm / np.sqrt(2.0)
    n1, n2, n3 = A.mode_sizes
    u, s, vt = np.linalg.svd(g1[0], full_matrices=False)
    r1, c1 = _truncation_rank(s, delta, max_rank)
    h1 = u[:, :r1].reshape(1, n1, r1)
    g2 = np.einsum("ab,bjc->ajc", s[:r1, None] * vt[:r1], g2)
    k2 = g2.shape[2]
    u, s, vt = np.linalg.svd(g2.reshape(r1 * n2, k2), full_matrices=False)
    r2, c2 = _truncation_rank(s, delta, max_rank)
    h2 = u[:, :r2].reshape(r1, n2, r2)
    h3 = np.einsum("ab,bk->ak", s[:r2, None] * vt[:r2], g3[:, :, 0])[:, :, None]
    return TTTensor3._wrap([h1, h2, h3], A.centering, c1 or c2)


def truncate(A: TTTensor3, eps: float, max_rank: Optional[int] = None) -> TTTensor3:
    """Alias of :func:`round` that does not shadow the builtin on import."""
    return round(A, eps, max_rank)
