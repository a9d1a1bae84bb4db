"""Involution-invariant ideals and relative form parameters.

A form ideal is a pair (I, Gamma): an involution-invariant two-sided ideal
together with an additive subgroup Gamma squeezed between the relative bounds
gamma_min(I) and gamma_max(I) = I & Lambda and stable under a*Gamma*conj(a).
Masks inherit the bitset conventions of the ring layer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rings import (
    BudgetExceededError,
    FormRing,
    InvolutiveRing,
    ValidationReport,
    mask_contains,
    mask_elements,
    mask_size,
)


@dataclass(frozen=True)
class Ideal:
    members: int  # bitmask

    def contains(self, element: int) -> bool:
        return mask_contains(self.members, element)

    def elements(self) -> list[int]:
        return mask_elements(self.members)

    def size(self) -> int:
        return mask_size(self.members)


@dataclass(frozen=True)
class FormIdeal:
    ideal: Ideal
    gamma: int  # bitmask

    def level(self) -> int:
        return self.ideal.members

    def key(self) -> tuple[int, int, int]:
        # spec'd report ordering: (|I|, I bitset, Gamma bitset)
        return (self.ideal.size(), self.ideal.members, self.gamma)

    def contains(self, other: "FormIdeal") -> bool:
        return not (other.ideal.members & ~self.ideal.members) and not (other.gamma & ~self.gamma)

    def __str__(self) -> str:
        return f"(I={self.ideal.elements()}, G={mask_elements(self.gamma)})"


def ideal_closure(ring: InvolutiveRing, gens) -> Ideal:
    """Smallest involution-invariant two-sided ideal containing gens."""
    mask = 1 << ring.zero
    for g in gens:
        mask |= 1 << g
    changed = True
    while changed:
        changed = False
        els = mask_elements(mask)
        for x in els:
            new = 1 << ring.conj(x)
            for a in ring.elements():
                new |= 1 << ring.mul(a, x)
                new |= 1 << ring.mul(x, a)
            for y in els:
                new |= 1 << ring.add(x, y)
            if new & ~mask:
                mask |= new
                changed = True
    return Ideal(mask)


def is_invariant_ideal(ring: InvolutiveRing, mask: int) -> bool:
    if not ring.is_additive_subgroup(mask):
        return False
    for x in mask_elements(mask):
        if not mask_contains(mask, ring.conj(x)):
            return False
        for a in ring.elements():
            if not mask_contains(mask, ring.mul(a, x)):
                return False
            if not mask_contains(mask, ring.mul(x, a)):
                return False
    return True


def gamma_bounds(fr: FormRing, ideal: Ideal) -> tuple[int, int]:
    """(gamma_min(I), gamma_max(I)) for the ideal inside the form ring.

    gamma_min(I) is the additive closure of {x - lam*conj(x) : x in I} and
    {x*a*conj(x) : x in I, a in Lambda}; gamma_max(I) = I & Lambda.
    """
    ring = fr.ring
    lam = fr.lam
    gen = 0
    for x in ideal.elements():
        gen |= 1 << ring.sub(x, ring.mul(lam, ring.conj(x)))
        for a in mask_elements(fr.lambda_mask()):
            gen |= 1 << ring.mul(ring.mul(x, a), ring.conj(x))
    lo = ring.additive_closure(gen)
    hi = ideal.members & fr.lambda_mask()
    return lo, hi


def validate_form_ideal(fr: FormRing, fi: FormIdeal) -> ValidationReport:
    """Report every violated ideal / relative-parameter invariant."""
    ring = fr.ring
    rep = ValidationReport()
    if not ring.is_additive_subgroup(fi.ideal.members):
        rep.fail("ideal is not an additive subgroup")
    if not is_invariant_ideal(ring, fi.ideal.members):
        rep.fail("ideal is not an involution-invariant two-sided ideal")
    if not ring.is_additive_subgroup(fi.gamma):
        rep.fail("gamma is not an additive subgroup")
    if fi.gamma & ~fi.ideal.members:
        rep.fail("gamma is not contained in the ideal")
    lo, hi = gamma_bounds(fr, fi.ideal)
    if lo & ~fi.gamma:
        rep.fail("gamma does not contain gamma_min of its level")
    if fi.gamma & ~hi:
        rep.fail("gamma is not contained in gamma_max of its level")
    for a in ring.elements():
        for g in mask_elements(fi.gamma):
            if not mask_contains(fi.gamma, ring.mul(ring.mul(a, g), ring.conj(a))):
                rep.fail(f"gamma stability fails at a={a}, g={g}")
                return rep
    return rep


def make_form_ideal(fr: FormRing, gens, gamma: int | str) -> FormIdeal:
    """Build a validated form ideal from generators and a gamma spec.

    gamma is an explicit mask or one of the keywords 'gamma_min'/'gamma_max'.
    """
    ideal = ideal_closure(fr.ring, gens)
    lo, hi = gamma_bounds(fr, ideal)
    if gamma == "gamma_min":
        g = lo
    elif gamma == "gamma_max":
        g = hi
    elif isinstance(gamma, int):
        g = gamma
    else:
        raise ValueError(f"bad gamma spec {gamma!r}")
    fi = FormIdeal(ideal, g)
    rep = validate_form_ideal(fr, fi)
    if not rep.ok:
        raise ValueError("invalid form ideal: " + "; ".join(rep.violations))
    return fi


def zero_form_ideal(fr: FormRing) -> FormIdeal:
    return FormIdeal(Ideal(1 << fr.ring.zero), 1 << fr.ring.zero)


def full_form_ideal(fr: FormRing) -> FormIdeal:
    return FormIdeal(Ideal(fr.ring.full_mask()), fr.lambda_mask())


def sum_form_ideals(fr: FormRing, a: FormIdeal, b: FormIdeal) -> FormIdeal:
    ring = fr.ring
    i = ring.additive_closure(a.ideal.members | b.ideal.members)
    g = ring.additive_closure(a.gamma | b.gamma)
    return FormIdeal(Ideal(i), g)


def _conjugated_parameter(ring: InvolutiveRing, by_mask: int, gamma: int) -> int:
    """Additive closure of {x*g*conj(x) : x in by, g in gamma}."""
    gen = 1 << ring.zero
    for x in mask_elements(by_mask):
        for g in mask_elements(gamma):
            gen |= 1 << ring.mul(ring.mul(x, g), ring.conj(x))
    return ring.additive_closure(gen)


def symmetrized_product(fr: FormRing, a: FormIdeal, b: FormIdeal) -> FormIdeal:
    """(I,Gamma) o (J,Delta) = (IJ+JI, gamma_min(IJ+JI) + J^Gamma + I^Delta).

    The operation is not associative; callers fold explicitly.
    """
    ring = fr.ring
    prod = 1 << ring.zero
    for x in a.ideal.elements():
        for y in b.ideal.elements():
            prod |= 1 << ring.mul(x, y)
            prod |= 1 << ring.mul(y, x)
    level = ring.additive_closure(prod)
    lo, _ = gamma_bounds(fr, Ideal(level))
    g = lo
    g |= _conjugated_parameter(ring, b.ideal.members, a.gamma)
    g |= _conjugated_parameter(ring, a.ideal.members, b.gamma)
    g = ring.additive_closure(g)
    return FormIdeal(Ideal(level), g)


def fold_product(fr: FormRing, ideals, left_normed: bool = True) -> FormIdeal:
    """Left-normed o-product of a sequence of form ideals."""
    ideals = list(ideals)
    if not ideals:
        raise ValueError("empty product")
    acc = ideals[0]
    for nxt in ideals[1:]:
        acc = symmetrized_product(fr, acc, nxt)
    return acc


def enumerate_ideals(ring: InvolutiveRing, budget: int = 1 << 16) -> list[Ideal]:
    """All involution-invariant two-sided ideals, sorted by (size, mask)."""
    zero = ideal_closure(ring, [])
    seen = {zero.members}
    frontier = [zero.members]
    while frontier:
        nxt = []
        for s in frontier:
            for x in mask_elements(ring.full_mask() & ~s):
                t = ideal_closure(ring, mask_elements(s | (1 << x))).members
                if t not in seen:
                    if len(seen) >= budget:
                        raise BudgetExceededError(f"more than {budget} ideals")
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return [Ideal(m) for m in sorted(seen, key=lambda m: (mask_size(m), m))]


def enumerate_form_ideals(fr: FormRing, budget: int = 1 << 16) -> list[FormIdeal]:
    """The full form-ideal lattice, sorted by (|I|, I bitset, gamma bitset)."""
    ring = fr.ring
    out = []
    for ideal in enumerate_ideals(ring, budget=budget):
        lo, hi = gamma_bounds(fr, ideal)
        for g in ring.subgroups_between(lo, hi, budget=budget):
            stable = all(
                mask_contains(g, ring.mul(ring.mul(a, x), ring.conj(a)))
                for a in ring.elements()
                for x in mask_elements(g)
            )
            if stable:
                out.append(FormIdeal(ideal, g))
    return sorted(out, key=FormIdeal.key)
