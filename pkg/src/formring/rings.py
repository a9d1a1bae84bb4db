"""Finite rings with involution, symmetries and form parameters.

Everything is table-backed: a ring of order m stores m x m numpy tables for
addition and multiplication plus index maps for negation and the involution.
Element "values" throughout are plain ints in range(m).  Subsets of the ring
are bitmasks (bit i set <=> element i in the subset), which keeps subgroup
enumeration deterministic: subsets compare and sort as ints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


class RingConstructionError(ValueError):
    """Raised when a ring specification does not define a valid structure."""


class BudgetExceededError(RuntimeError):
    """Raised when an enumeration would exceed its configured budget."""


# ---------------------------------------------------------------------------
# bitmask subset helpers


def mask_of(elements: Iterable[int]) -> int:
    m = 0
    for e in elements:
        m |= 1 << e
    return m


def mask_elements(mask: int) -> list[int]:
    out = []
    i = 0
    while mask >> i:
        if (mask >> i) & 1:
            out.append(i)
        i += 1
    return out


def mask_contains(mask: int, element: int) -> bool:
    return bool((mask >> element) & 1)


def mask_size(mask: int) -> int:
    return bin(mask).count("1")


class InvolutiveRing:
    """A finite unital ring with an involution, addressed by dense indices."""

    def __init__(
        self,
        add_table: np.ndarray,
        mul_table: np.ndarray,
        neg_table: np.ndarray,
        conj_table: np.ndarray,
        zero: int,
        one: int,
        label: str = "ring",
        modulus: int | None = None,
        check: bool = True,
    ):
        self.add_t = np.ascontiguousarray(add_table, dtype=np.uint8)
        self.mul_t = np.ascontiguousarray(mul_table, dtype=np.uint8)
        self.neg_t = np.ascontiguousarray(neg_table, dtype=np.uint8)
        self.conj_t = np.ascontiguousarray(conj_table, dtype=np.uint8)
        self.zero = int(zero)
        self.one = int(one)
        self.order = int(self.add_t.shape[0])
        self.label = label
        # set only when index arithmetic is literally mod-m; enables fast
        # integer matrix kernels
        self.modulus = modulus
        if check:
            self._validate()
        self.commutative = bool(np.array_equal(self.mul_t, self.mul_t.T))
        self._unit_mask, self._inv_t = self._find_units()

    # -- scalar ops ---------------------------------------------------------

    def add(self, a: int, b: int) -> int:
        return int(self.add_t[a, b])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_t[a, b])

    def neg(self, a: int) -> int:
        return int(self.neg_t[a])

    def sub(self, a: int, b: int) -> int:
        return int(self.add_t[a, self.neg_t[b]])

    def conj(self, a: int) -> int:
        return int(self.conj_t[a])

    def elements(self) -> range:
        return range(self.order)

    def full_mask(self) -> int:
        return (1 << self.order) - 1

    def is_unit(self, a: int) -> bool:
        return mask_contains(self._unit_mask, a)

    def unit_inverse(self, a: int) -> int:
        if not self.is_unit(a):
            raise ValueError(f"element {a} is not a unit in {self.label}")
        return int(self._inv_t[a])

    def is_central(self, a: int) -> bool:
        return bool((self.mul_t[a, :] == self.mul_t[:, a]).all())

    def sum_elements(self, items: Iterable[int]) -> int:
        acc = self.zero
        for x in items:
            acc = self.add(acc, x)
        return acc

    def __repr__(self) -> str:
        return f"InvolutiveRing({self.label}, order={self.order})"

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        m = self.order
        for name, t in (("add", self.add_t), ("mul", self.mul_t)):
            if t.shape != (m, m):
                raise RingConstructionError(f"{name} table has shape {t.shape}, want {(m, m)}")
        if self.neg_t.shape != (m,) or self.conj_t.shape != (m,):
            raise RingConstructionError("neg/conj tables must be 1-d of ring order")
        add, mul = self.add_t, self.mul_t
        idx = np.arange(m)
        # abelian group under +
        if not np.array_equal(add, add.T):
            raise RingConstructionError("addition is not commutative")
        if not np.array_equal(add[self.zero, :], idx):
            raise RingConstructionError("zero is not an additive identity")
        if not (add[idx, self.neg_t] == self.zero).all():
            raise RingConstructionError("neg table is not an additive inverse")
        # associativity via full broadcast scans: (a#b)#c == a#(b#c)
        if not np.array_equal(add[add, :], add[:, add]):
            raise RingConstructionError("addition is not associative")
        if not np.array_equal(mul[mul, :], mul[:, mul]):
            raise RingConstructionError("multiplication is not associative")
        if not (np.array_equal(mul[self.one, :], idx) and np.array_equal(mul[:, self.one], idx)):
            raise RingConstructionError("one is not a two-sided multiplicative identity")
        # distributivity: a*(b+c) == a*b + a*c and (a+b)*c == a*c + b*c
        left = mul[:, add]
        if not np.array_equal(left, add[mul[:, :, None], mul[:, None, :]]):
            raise RingConstructionError("left distributivity fails")
        right = mul[add, :]
        if not np.array_equal(right, add[mul[:, None, :], mul[None, :, :]]):
            raise RingConstructionError("right distributivity fails")
        # involution: additive, anti-multiplicative, order <= 2
        c = self.conj_t
        if not np.array_equal(c[c], idx):
            raise RingConstructionError("involution does not have order <= 2")
        if not np.array_equal(c[add], add[c[:, None], c[None, :]]):
            raise RingConstructionError("involution is not additive")
        if not np.array_equal(c[mul], mul[c[None, :], c[:, None]]):
            raise RingConstructionError("involution is not an anti-homomorphism")

    def _find_units(self) -> tuple[int, np.ndarray]:
        inv = np.full(self.order, -1, dtype=np.int16)
        mask = 0
        for a in range(self.order):
            row = np.where(self.mul_t[a, :] == self.one)[0]
            for b in row:
                if self.mul_t[b, a] == self.one:
                    inv[a] = b
                    mask |= 1 << a
                    break
        return mask, inv

    # -- subset machinery ---------------------------------------------------

    def additive_closure(self, mask: int) -> int:
        """Smallest additive subgroup containing the masked elements."""
        mask |= 1 << self.zero
        changed = True
        while changed:
            changed = False
            els = mask_elements(mask)
            for a in els:
                for b in els:
                    s = 1 << self.add(a, b)
                    if not mask & s:
                        mask |= s
                        changed = True
        return mask

    def is_additive_subgroup(self, mask: int) -> bool:
        if not mask_contains(mask, self.zero):
            return False
        els = mask_elements(mask)
        return all(mask_contains(mask, self.add(a, b)) for a in els for b in els)

    def subring_closure(self, mask: int) -> int:
        """Close a subset under +, -, * (not forced to contain 1)."""
        mask |= 1 << self.zero
        changed = True
        while changed:
            changed = False
            els = mask_elements(mask)
            for a in els:
                n = 1 << self.neg(a)
                if not mask & n:
                    mask |= n
                    changed = True
            els = mask_elements(mask)
            for a in els:
                for b in els:
                    for v in (self.add(a, b), self.mul(a, b)):
                        if not mask & (1 << v):
                            mask |= 1 << v
                            changed = True
        return mask

    def subgroups_between(self, lower: int, upper: int, budget: int = 1 << 16) -> list[int]:
        """All additive subgroups S with lower <= S <= upper, sorted as masks.

        Walks the lattice by repeatedly adjoining single elements of the upper
        bound; every intermediate subgroup appears, so the walk is exhaustive.
        """
        lower = self.additive_closure(lower)
        if lower & ~upper:
            return []
        seen = {lower}
        frontier = [lower]
        while frontier:
            nxt = []
            for s in frontier:
                for x in mask_elements(upper & ~s):
                    t = self.additive_closure(s | (1 << x))
                    if t & ~upper:
                        continue
                    if t not in seen:
                        if len(seen) >= budget:
                            raise BudgetExceededError(
                                f"more than {budget} additive subgroups between bounds"
                            )
                        seen.add(t)
                        nxt.append(t)
            frontier = nxt
        return sorted(seen)


@dataclass(frozen=True)
class Symmetry:
    """A central element lam with lam * conj(lam) = 1."""

    lam: int

    def validated(self, ring: InvolutiveRing) -> "Symmetry":
        if not ring.is_central(self.lam):
            raise RingConstructionError(f"lambda={self.lam} is not central")
        if ring.mul(self.lam, ring.conj(self.lam)) != ring.one:
            raise RingConstructionError(f"lambda={self.lam} does not satisfy lam*conj(lam)=1")
        return self


@dataclass(frozen=True)
class FormParameter:
    """An additive subgroup between the minimal and maximal parameter bounds."""

    members: int  # bitmask


@dataclass
class FormRing:
    """Ring + symmetry + form parameter, validated jointly at construction."""

    ring: InvolutiveRing
    symmetry: Symmetry
    lambda_param: FormParameter

    def __post_init__(self) -> None:
        self.symmetry.validated(self.ring)
        report = validate_form_ring(self)
        if not report.ok:
            raise RingConstructionError("; ".join(report.violations))

    @property
    def lam(self) -> int:
        return self.symmetry.lam

    @property
    def lam_inv(self) -> int:
        # lam^-1 == conj(lam) because lam*conj(lam) = 1
        return self.ring.conj(self.symmetry.lam)

    def lambda_mask(self) -> int:
        return self.lambda_param.members


@dataclass
class ValidationReport:
    ok: bool = True
    violations: list[str] = field(default_factory=list)

    def fail(self, msg: str) -> None:
        self.ok = False
        self.violations.append(msg)


# ---------------------------------------------------------------------------
# constructors


def _zmod_ring(m: int, involution: str = "trivial") -> InvolutiveRing:
    if m < 1:
        raise RingConstructionError("modulus must be >= 1")
    if involution != "trivial":
        raise RingConstructionError(f"unsupported zmod involution {involution!r}")
    idx = np.arange(m, dtype=np.int64)
    add = (idx[:, None] + idx[None, :]) % m
    mul = (idx[:, None] * idx[None, :]) % m
    neg = (-idx) % m
    conj = idx.copy()
    return InvolutiveRing(add, mul, neg, conj, 0, 1 % m, label=f"Z/{m}", modulus=m)


def _quadratic_ring(m: int, poly: Sequence[int], conj_x: Sequence[int]) -> InvolutiveRing:
    """Z/m[x]/(x^2 + c1*x + c0) with the involution sending x to a0 + a1*x."""
    if len(poly) != 3 or poly[2] % m != 1:
        raise RingConstructionError("poly must be a monic quadratic [c0, c1, 1]")
    c0, c1 = poly[0] % m, poly[1] % m
    order = m * m

    def enc(a0: int, a1: int) -> int:
        return (a0 % m) + m * (a1 % m)

    def dec(i: int) -> tuple[int, int]:
        return i % m, i // m

    add = np.zeros((order, order), dtype=np.int64)
    mul = np.zeros((order, order), dtype=np.int64)
    neg = np.zeros(order, dtype=np.int64)
    for i in range(order):
        a0, a1 = dec(i)
        neg[i] = enc(-a0, -a1)
        for j in range(order):
            b0, b1 = dec(j)
            add[i, j] = enc(a0 + b0, a1 + b1)
            # (a0 + a1 x)(b0 + b1 x) with x^2 = -c1 x - c0
            t0 = a0 * b0 - a1 * b1 * c0
            t1 = a0 * b1 + a1 * b0 - a1 * b1 * c1
            mul[i, j] = enc(t0, t1)
    r0, r1 = conj_x[0] % m, conj_x[1] % m
    ximg = enc(r0, r1)
    conj = np.zeros(order, dtype=np.int64)
    for i in range(order):
        a0, a1 = dec(i)
        # a0 + a1 * conj_x, computed with the ring tables built above
        conj[i] = add[enc(a0, 0), mul[enc(a1, 0), ximg]]
    try:
        return InvolutiveRing(
            add, mul, neg, conj, enc(0, 0), enc(1, 0),
            label=f"Z/{m}[x]/(x^2+{c1}x+{c0})",
        )
    except RingConstructionError as e:
        raise RingConstructionError(
            f"involution image x -> {tuple(conj_x)} does not extend: {e}"
        ) from e


def _product_ring(factors: Sequence[InvolutiveRing], involution: str) -> InvolutiveRing:
    if not factors:
        raise RingConstructionError("product needs at least one factor")
    orders = [r.order for r in factors]
    order = int(np.prod(orders))

    def enc(coords: Sequence[int]) -> int:
        i = 0
        for c, m in zip(coords, orders):
            i = i * m + c
        return i

    def dec(i: int) -> list[int]:
        out = []
        for m in reversed(orders):
            out.append(i % m)
            i //= m
        return list(reversed(out))

    add = np.zeros((order, order), dtype=np.int64)
    mul = np.zeros((order, order), dtype=np.int64)
    neg = np.zeros(order, dtype=np.int64)
    conj = np.zeros(order, dtype=np.int64)
    for i in range(order):
        ci = dec(i)
        neg[i] = enc([r.neg(c) for r, c in zip(factors, ci)])
        if involution == "swap":
            if len(factors) != 2 or orders[0] != orders[1]:
                raise RingConstructionError("swap involution needs two factors of equal order")
            conj[i] = enc([ci[1], ci[0]])
        elif involution == "componentwise":
            conj[i] = enc([r.conj(c) for r, c in zip(factors, ci)])
        else:
            raise RingConstructionError(f"unsupported product involution {involution!r}")
        for j in range(order):
            cj = dec(j)
            add[i, j] = enc([r.add(a, b) for r, a, b in zip(factors, ci, cj)])
            mul[i, j] = enc([r.mul(a, b) for r, a, b in zip(factors, ci, cj)])
    label = " x ".join(r.label for r in factors)
    return InvolutiveRing(
        add, mul, neg, conj,
        enc([r.zero for r in factors]), enc([r.one for r in factors]),
        label=label,
    )


def build_ring(spec: dict) -> InvolutiveRing:
    """Construct a validated ring from a JSON-style specification.

    Supported kinds: zmod, quadratic, product, tables.
    """
    kind = spec.get("kind")
    if kind == "zmod":
        return _zmod_ring(int(spec["m"]), spec.get("involution", "trivial"))
    if kind == "quadratic":
        return _quadratic_ring(int(spec["m"]), spec["poly"], spec["conj_x"])
    if kind == "product":
        factors = [build_ring(f) for f in spec["factors"]]
        return _product_ring(factors, spec.get("involution", "componentwise"))
    if kind == "tables":
        return InvolutiveRing(
            np.asarray(spec["add"]),
            np.asarray(spec["mul"]),
            np.asarray(spec["neg"]),
            np.asarray(spec["conj"]),
            int(spec["zero"]),
            int(spec["one"]),
            label=spec.get("label", "tables"),
            modulus=spec.get("modulus"),
        )
    raise RingConstructionError(f"unknown ring kind {kind!r}")


# ---------------------------------------------------------------------------
# form-parameter machinery


def lambda_bounds(ring: InvolutiveRing, sym: Symmetry) -> tuple[int, int]:
    """Minimal and maximal form-parameter bounds for (ring, lam) as masks.

    lower = {a - lam*conj(a)}, upper = {a : a = -lam*conj(a)}.
    """
    sym.validated(ring)
    lam = sym.lam
    lo = 0
    hi = 0
    for a in ring.elements():
        lo |= 1 << ring.sub(a, ring.mul(lam, ring.conj(a)))
        if a == ring.neg(ring.mul(lam, ring.conj(a))):
            hi |= 1 << a
    lo = ring.additive_closure(lo)
    return lo, hi


def validate_form_ring(fr: FormRing) -> ValidationReport:
    """Report every violated form-ring invariant (empty report = valid)."""
    ring = fr.ring
    rep = ValidationReport()
    members = fr.lambda_param.members
    if members & ~ring.full_mask():
        rep.fail("form parameter contains out-of-range element bits")
        return rep
    if not ring.is_additive_subgroup(members):
        rep.fail("form parameter is not an additive subgroup")
    lo, hi = lambda_bounds(ring, fr.symmetry)
    if lo & ~members:
        rep.fail("form parameter does not contain the minimal bound")
    if members & ~hi:
        rep.fail("form parameter is not contained in the maximal bound")
    for a in ring.elements():
        for x in mask_elements(members):
            v = ring.mul(ring.mul(a, x), ring.conj(a))
            if not mask_contains(members, v):
                rep.fail(f"stability fails: {a}*{x}*conj({a}) = {v} escapes the parameter")
                break
        else:
            continue
        break
    r0 = r0_subring(ring)
    for r in mask_elements(r0):
        for x in mask_elements(members):
            if not mask_contains(members, ring.mul(r, x)):
                rep.fail(f"parameter is not a module over the norm subring: {r}*{x} escapes")
                break
        else:
            continue
        break
    return rep


def r0_subring(ring: InvolutiveRing) -> int:
    """Subring generated by all a*conj(a) (always contains 0 and 1)."""
    gens = {1 << ring.one, 1 << ring.zero}
    for a in ring.elements():
        gens.add(1 << ring.mul(a, ring.conj(a)))
    mask = 0
    for g in gens:
        mask |= g
    return ring.subring_closure(mask)


def enumerate_form_parameters(
    ring: InvolutiveRing, sym: Symmetry, budget: int = 1 << 16
) -> list[FormParameter]:
    """All form parameters between the bounds, sorted by canonical bitset."""
    lo, hi = lambda_bounds(ring, sym)
    out = []
    for mask in ring.subgroups_between(lo, hi, budget=budget):
        stable = all(
            mask_contains(mask, ring.mul(ring.mul(a, x), ring.conj(a)))
            for a in ring.elements()
            for x in mask_elements(mask)
        )
        if stable:
            out.append(FormParameter(mask))
    return out


def make_form_ring(ring: InvolutiveRing, lam: int, parameter: int | str) -> FormRing:
    """Convenience builder; parameter is a mask or one of 'min'/'max'."""
    sym = Symmetry(lam).validated(ring)
    lo, hi = lambda_bounds(ring, sym)
    if parameter == "min":
        mask = lo
    elif parameter == "max":
        mask = hi
    elif isinstance(parameter, int):
        mask = parameter
    else:
        raise RingConstructionError(f"bad form parameter spec {parameter!r}")
    return FormRing(ring, sym, FormParameter(mask))
