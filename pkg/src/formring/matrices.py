"""Omega-indexed matrices over finite table rings, with batched numpy kernels.

Index conventions: the 2n coordinates are ordered e_1..e_n, e_-n..e_-1, so a
signed index i maps to position i-1 when i > 0 and to 2n+i when i < 0.

Batches are uint8 arrays of shape (N, 2n, 2n) holding element indices.  Hot
paths (subgroup closures over millions of matrices) use two tricks:

* rings whose index arithmetic is literally mod-m multiply through integer
  matmul; other rings go through add/mul table gathers;
* multipliers that differ from the identity in a few entries (elementary
  transvections and congruence-layer generators) are applied as column or row
  updates instead of full matrix products.

Canonical encodings pack each entry into ceil(log2 |A|) bits, row-major, and
are exposed both as bytes (single matrix) and as numpy void scalars (batch
deduplication via sort/searchsorted).
"""

from __future__ import annotations

import numpy as np

from .rings import InvolutiveRing


def omega_indices(n: int) -> list[int]:
    return list(range(1, n + 1)) + list(range(-n, 0))


def omega_pos(i: int, n: int) -> int:
    if i > 0:
        return i - 1
    return 2 * n + i


def omega_sign(i: int) -> int:
    return 1 if i > 0 else -1


class MatrixOps:
    """Batched arithmetic for 2n x 2n matrices over one ring."""

    # multipliers with at most this many off-identity entries use the
    # column/row update path
    SPARSE_LIMIT = 10

    def __init__(self, ring: InvolutiveRing, n: int):
        if n < 1:
            raise ValueError("need n >= 1")
        self.ring = ring
        self.n = n
        self.d = 2 * n
        self.bits = max(1, int(np.ceil(np.log2(ring.order))))
        cap = 64 // self.bits
        self.lanes = (self.d * self.d + cap - 1) // cap
        self._lane_cap = cap
        self._pow = np.array(
            [1 << (self.bits * (i % cap)) for i in range(self.d * self.d)],
            dtype=np.uint64,
        )
        self._key_dtype = np.dtype((np.void, 8 * self.lanes))
        self.identity = np.zeros((self.d, self.d), dtype=np.uint8)
        self.identity[:] = ring.zero
        for i in range(self.d):
            self.identity[i, i] = ring.one

    # -- basics --------------------------------------------------------------

    def zeros(self, count: int | None = None) -> np.ndarray:
        shape = (self.d, self.d) if count is None else (count, self.d, self.d)
        a = np.empty(shape, dtype=np.uint8)
        a[:] = self.ring.zero
        return a

    def identities(self, count: int) -> np.ndarray:
        return np.broadcast_to(self.identity, (count, self.d, self.d)).copy()

    def conj_transpose(self, a: np.ndarray) -> np.ndarray:
        c = self.ring.conj_t[a]
        return c.swapaxes(-1, -2).copy()

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.ring.add_t[a, b]

    def sub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.ring.add_t[a, self.ring.neg_t[b]]

    def _off_identity(self, b: np.ndarray) -> list[tuple[int, int, int]]:
        """(k, j, delta) entries of b - e, as ring elements."""
        out = []
        for k in range(self.d):
            for j in range(self.d):
                delta = self.ring.sub(int(b[k, j]), int(self.identity[k, j]))
                if delta != self.ring.zero:
                    out.append((k, j, delta))
        return out

    # -- products -------------------------------------------------------------

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Product of a batch (or single) with a single right factor."""
        single = a.ndim == 2
        batch = a[None] if single else a
        off = self._off_identity(b)
        if len(off) <= self.SPARSE_LIMIT:
            out = self._mul_sparse_right(batch, off)
        else:
            out = self._mul_full(batch, b)
        return out[0] if single else out

    def lmul(self, g: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Product of a single left factor with a batch."""
        single = b.ndim == 2
        batch = b[None] if single else b
        off = self._off_identity(g)
        if len(off) <= self.SPARSE_LIMIT:
            out = self._mul_sparse_left(batch, off)
        else:
            out = self._lmul_full(g, batch)
        return out[0] if single else out

    def mul_pairs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise batch product: out[i] = a[i] @ b[i]."""
        m = self.ring.modulus
        if m is not None:
            prod = np.matmul(a.astype(np.uint32), b.astype(np.uint32)) % m
            return prod.astype(np.uint8)
        acc = self.zeros(a.shape[0])
        mul_t, add_t = self.ring.mul_t, self.ring.add_t
        for k in range(self.d):
            term = mul_t[a[:, :, k][:, :, None], b[:, None, k, :]]
            acc = add_t[acc, term]
        return acc

    def _mul_full(self, batch: np.ndarray, b: np.ndarray) -> np.ndarray:
        m = self.ring.modulus
        if m is not None:
            nmats = batch.shape[0]
            flat = batch.reshape(nmats * self.d, self.d).astype(np.uint32)
            prod = (flat @ b.astype(np.uint32)) % m
            return prod.astype(np.uint8).reshape(nmats, self.d, self.d)
        acc = self.zeros(batch.shape[0])
        mul_t, add_t = self.ring.mul_t, self.ring.add_t
        for k in range(self.d):
            term = mul_t[batch[:, :, k][:, :, None], b[None, None, k, :]]
            acc = add_t[acc, term]
        return acc

    def _lmul_full(self, g: np.ndarray, batch: np.ndarray) -> np.ndarray:
        m = self.ring.modulus
        if m is not None:
            prod = np.matmul(g.astype(np.uint32), batch.astype(np.uint32)) % m
            return prod.astype(np.uint8)
        acc = self.zeros(batch.shape[0])
        mul_t, add_t = self.ring.mul_t, self.ring.add_t
        for k in range(self.d):
            term = mul_t[g[:, k][None, :, None], batch[:, k, :][:, None, :]]
            acc = add_t[acc, term]
        return acc

    def _mul_sparse_right(self, batch, off) -> np.ndarray:
        # a @ (e + s) = a + a @ s, one column update per nonzero of s
        m = self.ring.modulus
        if m is not None:
            out = batch.astype(np.uint16)
            for k, j, delta in off:
                out[:, :, j] += batch[:, :, k].astype(np.uint16) * np.uint16(delta)
            return (out % m).astype(np.uint8)
        out = batch.copy()
        mul_t, add_t = self.ring.mul_t, self.ring.add_t
        for k, j, delta in off:
            out[:, :, j] = add_t[out[:, :, j], mul_t[batch[:, :, k], delta]]
        return out

    def _mul_sparse_left(self, batch, off) -> np.ndarray:
        # (e + s) @ a = a + s @ a, one row update per nonzero of s
        m = self.ring.modulus
        if m is not None:
            out = batch.astype(np.uint16)
            for i, k, delta in off:
                out[:, i, :] += np.uint16(delta) * batch[:, k, :].astype(np.uint16)
            return (out % m).astype(np.uint8)
        out = batch.copy()
        mul_t, add_t = self.ring.mul_t, self.ring.add_t
        for i, k, delta in off:
            out[:, i, :] = add_t[out[:, i, :], mul_t[delta, batch[:, k, :]]]
        return out

    def conjugate(self, g: np.ndarray, g_inv: np.ndarray, batch: np.ndarray) -> np.ndarray:
        """g @ batch @ g^-1."""
        return self.mul(self.lmul(g, batch), g_inv)

    # -- inverses --------------------------------------------------------------

    def inverse(self, a: np.ndarray) -> np.ndarray:
        """Two-sided inverse; raises ValueError for singular input."""
        inv = self._inverse_eliminate(a)
        if inv is None:
            inv = self._inverse_by_order(a)
        if inv is None:
            raise ValueError("matrix is singular over the ring")
        return inv

    def is_invertible(self, a: np.ndarray) -> bool:
        try:
            self.inverse(a)
            return True
        except ValueError:
            return False

    def _inverse_eliminate(self, a: np.ndarray) -> np.ndarray | None:
        """Row reduction with unit pivots; None if stuck or not two-sided."""
        ring = self.ring
        work = [[int(x) for x in row] for row in a]
        aug = [[int(x) for x in row] for row in self.identity]
        d = self.d
        for col in range(d):
            piv = None
            for r in range(col, d):
                if ring.is_unit(work[r][col]):
                    piv = r
                    break
            if piv is None:
                return None
            work[col], work[piv] = work[piv], work[col]
            aug[col], aug[piv] = aug[piv], aug[col]
            u = ring.unit_inverse(work[col][col])
            work[col] = [ring.mul(u, x) for x in work[col]]
            aug[col] = [ring.mul(u, x) for x in aug[col]]
            for r in range(d):
                if r == col:
                    continue
                f = work[r][col]
                if f == ring.zero:
                    continue
                work[r] = [ring.sub(x, ring.mul(f, y)) for x, y in zip(work[r], work[col])]
                aug[r] = [ring.sub(x, ring.mul(f, y)) for x, y in zip(aug[r], aug[col])]
        inv = np.array(aug, dtype=np.uint8)
        if not np.array_equal(self.mul(inv, a), self.identity):
            return None
        if not np.array_equal(self.mul(a.astype(np.uint8), inv), self.identity):
            return None
        return inv

    def _inverse_by_order(self, a: np.ndarray) -> np.ndarray | None:
        """Walk powers of a; in a finite ring a is invertible iff some power
        is the identity, and then a^-1 is the previous power."""
        seen = {self.key_bytes(a)}
        prev = a
        cur = self.mul(a, a)
        while True:
            if np.array_equal(cur, self.identity):
                return prev
            k = self.key_bytes(cur)
            if k in seen:
                return None
            seen.add(k)
            prev = cur
            cur = self.mul(cur, a)

    # -- canonical encodings -----------------------------------------------------

    def encode(self, batch: np.ndarray) -> np.ndarray:
        """Pack a batch into (N, lanes) uint64 bit-slot words."""
        single = batch.ndim == 2
        b = batch[None] if single else batch
        flat = b.reshape(b.shape[0], self.d * self.d).astype(np.uint64)
        lanes = np.zeros((b.shape[0], self.lanes), dtype=np.uint64)
        cap = self._lane_cap
        for lane in range(self.lanes):
            sl = flat[:, lane * cap : (lane + 1) * cap]
            lanes[:, lane] = sl @ self._pow[lane * cap : lane * cap + sl.shape[1]]
        return lanes

    def keys(self, batch: np.ndarray) -> np.ndarray:
        """Canonical keys as a 1-d void array (sortable, hashable per item)."""
        lanes = self.encode(batch)
        return np.ascontiguousarray(lanes).view(self._key_dtype).reshape(-1)

    def key_bytes(self, mat: np.ndarray) -> bytes:
        return self.encode(mat).tobytes()


class UMatrix:
    """A single validated-shape matrix over a ring, hashable by encoding."""

    __slots__ = ("ring", "n", "a", "_key")

    def __init__(self, ring: InvolutiveRing, n: int, a: np.ndarray):
        a = np.asarray(a, dtype=np.uint8)
        if a.shape != (2 * n, 2 * n):
            raise ValueError(f"expected shape {(2*n, 2*n)}, got {a.shape}")
        if int(a.max(initial=0)) >= ring.order:
            raise ValueError("entry index out of ring range")
        self.ring = ring
        self.n = n
        self.a = a
        self._key: bytes | None = None

    @property
    def key(self) -> bytes:
        if self._key is None:
            self._key = get_ops(self.ring, self.n).key_bytes(self.a)
        return self._key

    def __mul__(self, other: "UMatrix") -> "UMatrix":
        ops = get_ops(self.ring, self.n)
        return UMatrix(self.ring, self.n, ops.mul(self.a, other.a))

    def inverse(self) -> "UMatrix":
        ops = get_ops(self.ring, self.n)
        return UMatrix(self.ring, self.n, ops.inverse(self.a))

    def conjugated_by(self, g: "UMatrix") -> "UMatrix":
        """g * self * g^-1."""
        return g * self * g.inverse()

    def commutator(self, other: "UMatrix") -> "UMatrix":
        return self * other * self.inverse() * other.inverse()

    def is_identity(self) -> bool:
        ops = get_ops(self.ring, self.n)
        return np.array_equal(self.a, ops.identity)

    def entry(self, i: int, j: int) -> int:
        """Entry at signed omega indices."""
        return int(self.a[omega_pos(i, self.n), omega_pos(j, self.n)])

    def __eq__(self, other) -> bool:
        return isinstance(other, UMatrix) and np.array_equal(self.a, other.a)

    def __hash__(self) -> int:
        return hash(self.key)

    def __str__(self) -> str:
        rows = [" ".join(f"{int(x):>2}" for x in row) for row in self.a]
        return "\n".join(rows)

    def __repr__(self) -> str:
        return f"UMatrix(n={self.n}, {self.ring.label})"

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.a]


_OPS_CACHE: dict[tuple[int, int], MatrixOps] = {}


def get_ops(ring: InvolutiveRing, n: int) -> MatrixOps:
    key = (id(ring), n)
    ops = _OPS_CACHE.get(key)
    if ops is None:
        ops = MatrixOps(ring, n)
        _OPS_CACHE[key] = ops
    return ops


def identity_matrix(ring: InvolutiveRing, n: int) -> UMatrix:
    return UMatrix(ring, n, get_ops(ring, n).identity.copy())
