"""Budgeted subgroup enumeration over finite matrix groups.

Stores are numpy batches deduplicated by canonical bit-packed keys (void
scalars, kept sorted so membership is a searchsorted).  Closure is frontier
expansion with two twists that keep the big cases (about 2^21 elements over
Z/4, the order-1451520 symplectic group over F_2) in the seconds range:

* generator thinning: a generator already inside the partial closure is
  skipped, so the multiplier set stays near-minimal;
* centralising generators extend the store coset by coset, which makes
  closures inside abelian congruence layers linear in the output size.

Everything is deterministic: generators are processed in canonical key order
and stores are key-sorted, so results do not depend on input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .ideals import FormIdeal
from .matrices import MatrixOps, UMatrix, get_ops
from .rings import BudgetExceededError, FormRing, mask_contains, mask_elements
from .unitary import congruence_membership_batch, gu_defects, gu_membership_batch

DEFAULT_BUDGET = 1 << 22
_CHUNK = 1 << 18


class Store:
    """Immutable key-sorted set of matrices."""

    def __init__(self, ops: MatrixOps, mats: np.ndarray, keys: np.ndarray):
        self.ops = ops
        self.mats = mats
        self.keys = keys  # sorted void array aligned with mats

    @classmethod
    def from_mats(cls, ops: MatrixOps, mats: np.ndarray) -> "Store":
        keys = ops.keys(mats)
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        mats = mats[order]
        fresh = np.ones(len(keys), dtype=bool)
        fresh[1:] = keys[1:] != keys[:-1]
        return cls(ops, np.ascontiguousarray(mats[fresh]), keys[fresh])

    @property
    def size(self) -> int:
        return len(self.keys)

    def contains_keys(self, keys: np.ndarray) -> np.ndarray:
        if self.size == 0:
            return np.zeros(len(keys), dtype=bool)
        idx = np.searchsorted(self.keys, keys)
        idx = np.minimum(idx, self.size - 1)
        return self.keys[idx] == keys

    def contains_mats(self, mats: np.ndarray) -> np.ndarray:
        return self.contains_keys(self.ops.keys(mats))

    def contains_matrix(self, mat: np.ndarray) -> bool:
        return bool(self.contains_mats(mat[None])[0])

    def merged(self, mats: np.ndarray, keys: np.ndarray) -> "Store":
        """Merge presumed-new unique rows into a new store."""
        all_mats = np.concatenate([self.mats, mats])
        all_keys = np.concatenate([self.keys, keys])
        order = np.argsort(all_keys, kind="stable")
        return Store(self.ops, np.ascontiguousarray(all_mats[order]), all_keys[order])

    def equals(self, other: "Store") -> bool:
        return self.size == other.size and bool(np.array_equal(self.keys, other.keys))

    def includes(self, other: "Store") -> bool:
        return bool(other.contained_mask_in(self).all())

    def contained_mask_in(self, other: "Store") -> np.ndarray:
        return other.contains_keys(self.keys)


def _dedup(ops: MatrixOps, mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keys = ops.keys(mats)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    mats = mats[order]
    fresh = np.ones(len(keys), dtype=bool)
    if len(keys):
        fresh[1:] = keys[1:] != keys[:-1]
    return np.ascontiguousarray(mats[fresh]), keys[fresh]


def _commutes(ops: MatrixOps, a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.array_equal(ops.mul(a[None], b)[0], ops.mul(b[None], a)[0]))


def _chunked_mul(ops: MatrixOps, mats: np.ndarray, g: np.ndarray) -> Iterable[np.ndarray]:
    for lo in range(0, len(mats), _CHUNK):
        yield ops.mul(mats[lo : lo + _CHUNK], g)


class ClosureBuilder:
    """Grows a subgroup store one generator at a time with thinning."""

    def __init__(self, ops: MatrixOps, budget: int):
        self.ops = ops
        self.budget = budget
        ident = ops.identity[None].copy()
        self.store = Store.from_mats(ops, ident)
        self.multipliers: list[np.ndarray] = []
        self._central: list[bool] = []

    def add_generator(self, g: np.ndarray) -> bool:
        """Adjoin one generator; returns False if it was redundant."""
        ops = self.ops
        if self.store.contains_matrix(g):
            return False
        commutes_all = all(_commutes(ops, g, m) for m in self.multipliers)
        self.multipliers.append(g)
        self._central.append(commutes_all)
        expanders = [g] if commutes_all else self.multipliers
        # seed: every coset representative of the old store times g
        frontier, fkeys = _dedup(ops, np.concatenate(list(_chunked_mul(ops, self.store.mats, g))))
        mask = ~self.store.contains_keys(fkeys)
        frontier, fkeys = frontier[mask], fkeys[mask]
        while len(frontier):
            if self.store.size + len(frontier) > self.budget:
                raise BudgetExceededError(
                    f"closure exceeds budget {self.budget} (store {self.store.size}, "
                    f"frontier {len(frontier)})"
                )
            self.store = self.store.merged(frontier, fkeys)
            batches = []
            for m in expanders:
                for cand in _chunked_mul(ops, frontier, m):
                    ckeys = ops.keys(cand)
                    new = ~self.store.contains_keys(ckeys)
                    if new.any():
                        batches.append(cand[new])
            if not batches:
                break
            frontier, fkeys = _dedup(ops, np.concatenate(batches))
            mask = ~self.store.contains_keys(fkeys)
            frontier, fkeys = frontier[mask], fkeys[mask]
        return True


def closure_enumerate(
    ops: MatrixOps, gens: Sequence[np.ndarray], budget: int = DEFAULT_BUDGET
) -> Store:
    """Exact element store of the subgroup generated by gens.

    Deterministic regardless of generator order: generators are deduplicated
    and processed in canonical key order.  Raises BudgetExceededError when the
    subgroup outgrows the budget.
    """
    builder = ClosureBuilder(ops, budget)
    if gens:
        mats, _ = _dedup(ops, np.stack([np.asarray(g, dtype=np.uint8) for g in gens]))
        for g in mats:
            builder.add_generator(g)
    return builder.store


def normal_closure(
    ops: MatrixOps,
    target: Sequence[np.ndarray],
    ambient: Sequence[tuple[np.ndarray, np.ndarray]],
    budget: int = DEFAULT_BUDGET,
) -> tuple[Store, list[np.ndarray]]:
    """Smallest subgroup containing target and stable under conjugation by the
    ambient generators (pairs of (matrix, inverse)).

    Conjugates only the discovered generating set, then re-closes; at the
    fixpoint the whole store is conjugation-stable because conjugation by a
    fixed element is an automorphism of the finite store.  Returns the store
    and the generating set it discovered.
    """
    builder = ClosureBuilder(ops, budget)
    gens: list[np.ndarray] = []
    if target:
        mats, _ = _dedup(ops, np.stack([np.asarray(g, dtype=np.uint8) for g in target]))
        for g in mats:
            if builder.add_generator(g):
                gens.append(g)
    while True:
        fresh: list[np.ndarray] = []
        for a, a_inv in ambient:
            if not gens:
                break
            stack = np.stack(gens)
            conj = ops.mul(ops.lmul(a, stack), a_inv)
            new = ~builder.store.contains_mats(conj)
            if new.any():
                fresh.append(conj[new])
        if not fresh:
            break
        mats, _ = _dedup(ops, np.concatenate(fresh))
        for g in mats:
            if builder.add_generator(g):
                gens.append(g)
    return builder.store, gens


# ---------------------------------------------------------------------------
# subgroup handles


@dataclass
class SubgroupHandle:
    """A generator list plus an optional fully enumerated element store."""

    ops: MatrixOps
    generators: list[UMatrix]
    gen_inverses: list[UMatrix]
    budget: int = DEFAULT_BUDGET
    label: str = ""
    store: Store | None = None
    status: str = "pending"  # pending | exact | budget-exceeded | sampled
    known_order: int | None = None
    membership: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def from_generators(
        cls,
        ring,
        n: int,
        gens: Sequence[UMatrix],
        budget: int = DEFAULT_BUDGET,
        label: str = "",
        membership=None,
        known_order=None,
    ) -> "SubgroupHandle":
        ops = get_ops(ring, n)
        invs = [g.inverse() for g in gens]
        return cls(
            ops=ops,
            generators=list(gens),
            gen_inverses=invs,
            budget=budget,
            label=label,
            membership=membership,
            known_order=known_order,
        )

    def gen_mats(self) -> list[np.ndarray]:
        return [g.a for g in self.generators]

    def gen_pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(g.a, gi.a) for g, gi in zip(self.generators, self.gen_inverses)]

    def ensure_store(self) -> Store:
        if self.store is None:
            try:
                self.store = closure_enumerate(self.ops, self.gen_mats(), self.budget)
                self.status = "exact"
            except BudgetExceededError:
                self.status = "budget-exceeded"
                raise
        return self.store

    @property
    def size(self) -> int | None:
        if self.store is not None:
            return self.store.size
        return self.known_order


def trivial_handle(ring, n: int, budget: int = DEFAULT_BUDGET, label: str = "1") -> SubgroupHandle:
    h = SubgroupHandle.from_generators(ring, n, [], budget=budget, label=label)
    h.ensure_store()
    return h


def mixed_commutator(
    h: SubgroupHandle, k: SubgroupHandle, budget: int = DEFAULT_BUDGET, label: str = ""
) -> SubgroupHandle:
    """[H, K]: normal closure, inside the join, of the generator commutators.

    Correct because the commutator subgroup is generated by {[x,y]} for x, y
    running over generating sets once the set is closed under conjugation by
    both groups; symmetric in h and k.
    """
    ops = h.ops
    comms: list[np.ndarray] = []
    for x, x_inv in h.gen_pairs():
        for y, y_inv in k.gen_pairs():
            m = ops.mul(ops.mul(ops.mul(x[None], y), x_inv), y_inv)[0]
            comms.append(m)
    ambient = h.gen_pairs() + k.gen_pairs()
    store, gens = normal_closure(ops, comms, ambient, budget)
    ring = h.generators[0].ring if h.generators else (k.generators[0].ring if k.generators else None)
    n = ops.n
    gen_ums = []
    inv_ums = []
    for g in gens:
        um = UMatrix(ring, n, g) if ring is not None else None
        gen_ums.append(um)
        inv_ums.append(UMatrix(ring, n, ops.inverse(g)) if ring is not None else None)
    out = SubgroupHandle(
        ops=ops,
        generators=gen_ums,
        gen_inverses=inv_ums,
        budget=budget,
        label=label or f"[{h.label},{k.label}]",
        store=store,
        status="exact",
    )
    return out


# ---------------------------------------------------------------------------
# congruence layer subgroups


@dataclass
class LayerBasis:
    prime: int
    dim: int
    basis_mats: list[np.ndarray]  # X with g = e + X

    @property
    def order(self) -> int:
        return self.prime**self.dim


def _prime_exponent(fr: FormRing, members: int) -> int | None:
    """The common prime additive order of nonzero ideal elements, if any."""
    ring = fr.ring
    orders = set()
    for x in mask_elements(members):
        if x == ring.zero:
            continue
        k, acc = 1, x
        while acc != ring.zero:
            acc = ring.add(acc, x)
            k += 1
        orders.add(k)
    if not orders:
        return None
    p = orders.pop()
    if orders or any(p % q == 0 and q != p for q in range(2, p)):
        return None
    return p


def _nullspace_mod_p(rows: np.ndarray, nvar: int, p: int) -> list[np.ndarray]:
    """Basis of the solution space of rows @ y = 0 over F_p."""
    if rows.size == 0:
        m = np.zeros((0, nvar), dtype=np.int64)
    else:
        m = np.array(rows, dtype=np.int64) % p
    m = m.reshape(-1, nvar)
    pivots = []
    r = 0
    for c in range(nvar):
        sel = None
        for rr in range(r, m.shape[0]):
            if m[rr, c] % p:
                sel = rr
                break
        if sel is None:
            continue
        m[[r, sel]] = m[[sel, r]]
        inv = pow(int(m[r, c]), p - 2, p) if p > 2 else 1
        m[r] = (m[r] * inv) % p
        for rr in range(m.shape[0]):
            if rr != r and m[rr, c] % p:
                m[rr] = (m[rr] - m[rr, c] * m[r]) % p
        pivots.append(c)
        r += 1
    free = [c for c in range(nvar) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(nvar, dtype=np.int64)
        v[f] = 1
        for idx, c in enumerate(pivots):
            v[c] = (-m[idx, f]) % p
        basis.append(v % p)
    return basis


def solve_congruence_layer(fr: FormRing, fi: FormIdeal, n: int) -> LayerBasis:
    """Exact linear model of GU(2n, I, Gamma) when I*I = 0.

    Writing g = e + X with X over I, squares vanish, so h-preservation
    becomes conj(X)^t H + H X = 0 and the quadratic condition becomes
    "diagonal of conj(X)^t F + F X lies in Gamma" -- a linear system over the
    prime field that underlies I's additive group.
    """
    from .unitary import f_matrix, h_matrix  # local import to avoid cycle

    ring = fr.ring
    members = fi.ideal.members
    for x in mask_elements(members):
        for y in mask_elements(members):
            if ring.mul(x, y) != ring.zero:
                raise ValueError("layer mode requires I*I = 0")
    if members == (1 << ring.zero):
        return LayerBasis(prime=2, dim=0, basis_mats=[])
    p = _prime_exponent(fr, members)
    if p is None:
        raise ValueError("layer mode requires an ideal of prime additive exponent")
    # F_p basis of I and coordinate table
    basis_elems: list[int] = []
    span = {ring.zero}
    for x in mask_elements(members):
        if x in span:
            continue
        basis_elems.append(x)
        new_span = set()
        for s in span:
            acc = s
            for _ in range(p):
                new_span.add(acc)
                acc = ring.add(acc, x)
        span = new_span
    k = len(basis_elems)
    coords: dict[int, tuple[int, ...]] = {}

    def _fill(prefix: tuple[int, ...], value: int) -> None:
        if len(prefix) == k:
            coords[value] = prefix
            return
        acc = value
        for c in range(p):
            _fill(prefix + (c,), acc)
            acc = ring.add(acc, basis_elems[len(prefix)])

    _fill((), ring.zero)
    d = 2 * n
    H = h_matrix(fr, n)
    F = f_matrix(fr, n)
    ops = get_ops(ring, n)
    gamma_vecs = [coords[g] for g in mask_elements(fi.gamma)]
    gamma_mat = np.array(gamma_vecs, dtype=np.int64).reshape(-1, k) % p
    # functionals vanishing on Gamma: nullspace of gamma_mat^t
    quo = _nullspace_mod_p(gamma_mat, k, p)
    nvar = d * d * k
    rows = []
    h_cols = np.zeros((d * d * k, nvar), dtype=np.int64)
    f_diag_cols = np.zeros((d * k, nvar), dtype=np.int64)
    for r in range(d):
        for c in range(d):
            for t in range(k):
                var = (r * d + c) * k + t
                x_unit = ops.zeros()
                x_unit[r, c] = basis_elems[t]
                ct = ops.conj_transpose(x_unit[None])[0]
                hdef = ops.add(ops.mul(ct[None], H)[0], ops.lmul(H, x_unit[None])[0])
                fdef = ops.add(ops.mul(ct[None], F)[0], ops.lmul(F, x_unit[None])[0])
                for i in range(d):
                    for j in range(d):
                        cvec = coords[int(hdef[i, j])]
                        for t2 in range(k):
                            h_cols[(i * d + j) * k + t2, var] = cvec[t2]
                    cvec = coords[int(fdef[i, i])]
                    for t2 in range(k):
                        f_diag_cols[i * k + t2, var] = cvec[t2]
    rows.append(h_cols)
    # quadratic defect must vanish in I/Gamma: apply each quotient functional
    for func in quo:
        proj = np.zeros((d, nvar), dtype=np.int64)
        for i in range(d):
            proj[i] = (func[None, :] @ f_diag_cols[i * k : (i + 1) * k]) % p
        rows.append(proj)
    system = np.concatenate(rows) % p
    basis_vecs = _nullspace_mod_p(system, nvar, p)
    mats = []
    for v in basis_vecs:
        x = ops.zeros()
        for r in range(d):
            for c in range(d):
                acc = ring.zero
                for t in range(k):
                    cnt = int(v[(r * d + c) * k + t]) % p
                    for _ in range(cnt):
                        acc = ring.add(acc, basis_elems[t])
                x[r, c] = acc
        mats.append(x)
    return LayerBasis(prime=p, dim=len(mats), basis_mats=mats)


def layer_handle(
    fr: FormRing,
    fi: FormIdeal,
    n: int,
    budget: int = DEFAULT_BUDGET,
    label: str = "",
) -> SubgroupHandle:
    """Generator-backed handle for a congruence layer with known exact order."""
    ring = fr.ring
    ops = get_ops(ring, n)
    lb = solve_congruence_layer(fr, fi, n)
    gens = []
    invs = []
    for x in lb.basis_mats:
        g = ring.add_t[ops.identity, x].astype(np.uint8)
        gi = ring.add_t[ops.identity, ring.neg_t[x]].astype(np.uint8)
        gens.append(UMatrix(ring, n, g))
        invs.append(UMatrix(ring, n, gi))

    def _member(batch: np.ndarray) -> np.ndarray:
        return congruence_membership_batch(fr, fi, n, batch) & gu_membership_batch(fr, n, batch)

    return SubgroupHandle(
        ops=ops,
        generators=gens,
        gen_inverses=invs,
        budget=budget,
        label=label or "layer",
        membership=_member,
        known_order=lb.order,
    )


def gu_level_subgroup(
    fr: FormRing,
    fi: FormIdeal,
    n: int,
    mode: str = "layer",
    budget: int = DEFAULT_BUDGET,
    ambient: SubgroupHandle | None = None,
    seed: int = 0,
    sample_count: int = 1024,
    label: str = "",
) -> SubgroupHandle:
    """Principal congruence subgroup in one of three modes.

    layer: exact linear-algebra model (needs I*I = 0); exact order known and
    the store enumerable on demand.  exact: filter a fully enumerated ambient
    unitary group.  sampled: seeded random products of layer members.
    """
    ring = fr.ring
    ops = get_ops(ring, n)
    if mode == "layer":
        return layer_handle(fr, fi, n, budget=budget, label=label)
    if mode == "exact":
        if ambient is None or ambient.store is None:
            raise ValueError("exact mode needs a fully enumerated ambient group")
        mask = congruence_membership_batch(fr, fi, n, ambient.store.mats)
        mats = ambient.store.mats[mask]
        store = Store.from_mats(ops, mats)
        gens = reduce_generators(ops, store, budget)
        h = SubgroupHandle(
            ops=ops,
            generators=[UMatrix(ring, n, g) for g in gens],
            gen_inverses=[UMatrix(ring, n, ops.inverse(g)) for g in gens],
            budget=budget,
            label=label or "gu-level-exact",
            store=store,
            status="exact",
        )
        return h
    if mode == "sampled":
        base = layer_handle(fr, fi, n, budget=budget, label=label)
        mats = sample_layer(fr, base, n, sample_count, seed)
        h = SubgroupHandle(
            ops=ops,
            generators=base.generators,
            gen_inverses=base.gen_inverses,
            budget=budget,
            label=label or "gu-level-sampled",
            store=Store.from_mats(ops, mats),
            status="sampled",
            known_order=base.known_order,
            membership=base.membership,
        )
        return h
    raise ValueError(f"unknown mode {mode!r}")


def sample_layer(
    fr: FormRing, handle: SubgroupHandle, n: int, count: int, seed: int
) -> np.ndarray:
    """Seeded uniform samples from a layer handle (independent coordinates)."""
    ring = fr.ring
    ops = handle.ops
    rng = np.random.default_rng(seed)
    dim = len(handle.generators)
    out = ops.identities(count)
    if dim == 0:
        return out
    # reconstruct additive parts; prime p from element orders
    coeffs = rng.integers(0, _layer_prime(fr, handle), size=(count, dim))
    for t, g in enumerate(handle.generators):
        x = ops.sub(g.a, ops.identity)
        reps = coeffs[:, t].copy()
        while (reps > 0).any():
            mask = reps > 0
            out[mask] = ring.add_t[out[mask], x[None]]
            reps[mask] -= 1
    return out


def _layer_prime(fr: FormRing, handle: SubgroupHandle) -> int:
    """Additive order of any nonzero entry of the first layer basis matrix."""
    ops = handle.ops
    ring = fr.ring
    for g in handle.generators:
        x = ops.sub(g.a, ops.identity)
        nz = x[x != ring.zero]
        if len(nz):
            e = int(nz[0])
            k, acc = 1, e
            while acc != ring.zero:
                acc = ring.add(acc, e)
                k += 1
            return k
    return 2


def reduce_generators(ops: MatrixOps, store: Store, budget: int) -> list[np.ndarray]:
    """Small generating subset of an enumerated subgroup (greedy thinning)."""
    builder = ClosureBuilder(ops, budget)
    gens = []
    for i in range(store.size):
        g = store.mats[i]
        if builder.add_generator(g):
            gens.append(g)
        if builder.store.size == store.size:
            break
    return gens


# ---------------------------------------------------------------------------
# bracketed multi-commutators


@dataclass(frozen=True)
class CommExpr:
    """Binary bracketing tree; leaves carry (kind, ideal name) payloads."""

    kind: str | None = None  # E | G | C for leaves, None for internal nodes
    ideal: str | None = None
    left: "CommExpr | None" = None
    right: "CommExpr | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def leaves(self) -> list["CommExpr"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def leaf_count(self) -> int:
        return len(self.leaves())

    def with_leaves(self, payloads: Sequence[tuple[str, str]]) -> "CommExpr":
        """Assign (kind, ideal) payloads to leaves in left-to-right order."""
        it = iter(payloads)

        def rec(node: "CommExpr") -> "CommExpr":
            if node.is_leaf:
                kind, ideal = next(it)
                return CommExpr(kind=kind, ideal=ideal)
            return CommExpr(left=rec(node.left), right=rec(node.right))

        out = rec(self)
        try:
            next(it)
        except StopIteration:
            return out
        raise ValueError("payload count does not match leaf count")

    def describe(self) -> str:
        if self.is_leaf:
            return f"{self.kind}({self.ideal})"
        return f"[{self.left.describe()},{self.right.describe()}]"


def enumerate_bracketings(m: int) -> list[CommExpr]:
    """All full binary trees with m leaves (Catalan(m-1) of them)."""
    if m < 1:
        raise ValueError("need at least one leaf")

    def build(count: int) -> list[CommExpr]:
        if count == 1:
            return [CommExpr(kind="E", ideal="?")]
        out = []
        for split in range(1, count):
            for l in build(split):
                for r in build(count - split):
                    out.append(CommExpr(left=l, right=r))
        return out

    return build(m)


def left_normed_bracketing(m: int) -> CommExpr:
    expr = CommExpr(kind="E", ideal="?")
    for _ in range(m - 1):
        expr = CommExpr(left=expr, right=CommExpr(kind="E", ideal="?"))
    return expr


def evaluate_bracketing(
    expr: CommExpr,
    leaf_handle: Callable[[str, str], SubgroupHandle],
    budget: int = DEFAULT_BUDGET,
) -> SubgroupHandle:
    """Bottom-up evaluation; internal nodes are mixed commutators."""
    if expr.is_leaf:
        return leaf_handle(expr.kind, expr.ideal)
    lh = evaluate_bracketing(expr.left, leaf_handle, budget)
    rh = evaluate_bracketing(expr.right, leaf_handle, budget)
    return mixed_commutator(lh, rh, budget=budget)


# ---------------------------------------------------------------------------
# seeded sampling


def random_word_sampler(
    ring,
    n: int,
    gens: Sequence[UMatrix],
    length: int,
    count: int,
    seed: int,
) -> list[UMatrix]:
    """Deterministic pseudo-random words over gens and their inverses."""
    ops = get_ops(ring, n)
    rng = np.random.default_rng(seed)
    pool = [g.a for g in gens] + [g.inverse().a for g in gens]
    out = []
    for _ in range(count):
        acc = ops.identity.copy()
        if pool and length > 0:
            for idx in rng.integers(0, len(pool), size=length):
                acc = ops.mul(acc[None], pool[int(idx)])[0]
        out.append(UMatrix(ring, n, acc))
    return out
