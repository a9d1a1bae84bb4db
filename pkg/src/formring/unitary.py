"""Hyperbolic unitary groups over form rings: forms, memberships, generators.

The module V = A^{2n} carries the sesquilinear form f, the hermitian form
h = f + lam * conj(f) and the quadratic form q = f(u,u) mod Lambda.  The
unitary group is cut out by preserving h everywhere and q on the diagonal;
both conditions reduce to basis checks (h by sesquilinearity, q because given
h-preservation the polarised off-diagonal defect terms land in the minimal
parameter of the relevant ideal, so only diagonal defects carry information).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ideals import FormIdeal, full_form_ideal
from .matrices import MatrixOps, UMatrix, get_ops, omega_indices, omega_pos, omega_sign
from .rings import FormRing, mask_contains, mask_elements


# ---------------------------------------------------------------------------
# forms


@dataclass(frozen=True)
class FormsTriple:
    f_value: int
    h_value: int
    q_value: int  # representative of f(u,u) + Lambda; meaningful when u == v


def f_matrix(fr: FormRing, n: int) -> np.ndarray:
    """Gram matrix of f: f(u,v) = conj(u)^t F v."""
    ops = get_ops(fr.ring, n)
    F = ops.zeros()
    for k in range(1, n + 1):
        F[omega_pos(k, n), omega_pos(-k, n)] = fr.ring.one
    return F

def h_matrix(fr: FormRing, n: int) -> np.ndarray:
    """Gram matrix of h = f + lam * conj(f)."""
    ring = fr.ring
    F = f_matrix(fr, n)
    lamFt = ring.mul_t[fr.lam, ring.conj_t[F.T]]
    return ring.add_t[F, lamFt].astype(np.uint8)


def _form_value(fr: FormRing, gram: np.ndarray, u: Sequence[int], v: Sequence[int]) -> int:
    ring = fr.ring
    acc = ring.zero
    d = gram.shape[0]
    for i in range(d):
        cu = ring.conj(int(u[i]))
        if cu == ring.zero:
            continue
        for j in range(d):
            g = int(gram[i, j])
            if g == ring.zero:
                continue
            acc = ring.add(acc, ring.mul(ring.mul(cu, g), int(v[j])))
    return acc


def eval_forms(fr: FormRing, n: int, u: Sequence[int], v: Sequence[int]) -> FormsTriple:
    """f(u,v), h(u,v) and the coset representative q(u) = f(u,u) mod Lambda.

    h is evaluated both from its Gram matrix and as f(u,v) + lam*conj(f(v,u));
    the two must agree.
    """
    if len(u) != 2 * n or len(v) != 2 * n:
        raise ValueError(f"vectors must have length {2*n}")
    ring = fr.ring
    F = f_matrix(fr, n)
    fv = _form_value(fr, F, u, v)
    hv = _form_value(fr, h_matrix(fr, n), u, v)
    cross = ring.add(fv, ring.mul(fr.lam, ring.conj(_form_value(fr, F, v, u))))
    assert hv == cross, "h(u,v) != f(u,v) + lam*conj(f(v,u))"
    return FormsTriple(f_value=fv, h_value=hv, q_value=_form_value(fr, F, u, u))


# ---------------------------------------------------------------------------
# membership


def _member_lookup(ring_order: int, mask: int) -> np.ndarray:
    return np.array([mask_contains(mask, e) for e in range(ring_order)], dtype=bool)


def gu_defects(fr: FormRing, n: int, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(h-defect matrices, diagonal f-defect vectors) for a batch."""
    ops = get_ops(fr.ring, n)
    ct = ops.conj_transpose(batch)
    H = h_matrix(fr, n)
    F = f_matrix(fr, n)
    hg = ops.mul_pairs(ct, ops.lmul(H, batch))
    hdef = ops.sub(hg, H)
    fg = ops.mul_pairs(ct, ops.lmul(F, batch))
    fdef = ops.sub(fg, F)
    diag = fdef[:, np.arange(2 * n), np.arange(2 * n)]
    return hdef, diag


def gu_membership_batch(fr: FormRing, n: int, batch: np.ndarray) -> np.ndarray:
    """Vectorised h/q-preservation test (invertibility not rechecked)."""
    hdef, diag = gu_defects(fr, n, batch)
    ok_h = (hdef == fr.ring.zero).all(axis=(1, 2))
    in_lambda = _member_lookup(fr.ring.order, fr.lambda_mask())
    ok_q = in_lambda[diag].all(axis=1)
    return ok_h & ok_q


def gu_membership(fr: FormRing, g: UMatrix) -> bool:
    """True iff g is invertible and preserves h everywhere and q on cosets."""
    ops = get_ops(fr.ring, g.n)
    if not ops.is_invertible(g.a):
        raise ValueError("matrix is singular over the ring")
    return bool(gu_membership_batch(fr, g.n, g.a[None])[0])


def congruence_membership_batch(
    fr: FormRing, fi: FormIdeal, n: int, batch: np.ndarray
) -> np.ndarray:
    """Level conditions for GU(2n,I,Gamma): g = e mod I and diagonal f-defects
    in Gamma.  Callers guarantee the batch already sits inside GU."""
    ops = get_ops(fr.ring, n)
    dev = ops.sub(batch, ops.identity[None])
    in_ideal = _member_lookup(fr.ring.order, fi.ideal.members)
    ok_i = in_ideal[dev].all(axis=(1, 2))
    _, diag = gu_defects(fr, n, batch)
    in_gamma = _member_lookup(fr.ring.order, fi.gamma)
    ok_g = in_gamma[diag].all(axis=1)
    return ok_i & ok_g


def congruence_membership(fr: FormRing, fi: FormIdeal, g: UMatrix) -> bool:
    return bool(congruence_membership_batch(fr, fi, g.n, g.a[None])[0])


def gu_inverse_batch(fr: FormRing, n: int, batch: np.ndarray) -> np.ndarray:
    """Inverses of matrices already known to preserve h: from
    conj(g)^t H g = H one reads off g^-1 = H^-1 conj(g)^t H."""
    ops = get_ops(fr.ring, n)
    H = h_matrix(fr, n)
    H_inv = ops.inverse(H)
    return ops.mul(ops.lmul(H_inv, ops.conj_transpose(batch)), H)


def cu_membership(
    fr: FormRing, fi: FormIdeal, g: UMatrix, ambient_gens: Sequence[UMatrix]
) -> bool:
    """Full-congruence test: [g, x] lands in GU(2n,I,Gamma) for every ambient
    generator x.  Generators suffice because the level subgroup is normal, so
    the commutator conditions propagate along products via [g,xy]=[g,x]*x[g,y]x^-1.
    """
    if not gu_membership(fr, g):
        return False
    g_inv = g.inverse()
    for x in ambient_gens:
        comm = g * x * g_inv * x.inverse()
        if not gu_membership(fr, comm):
            return False
        if not congruence_membership(fr, fi, comm):
            return False
    return True


# ---------------------------------------------------------------------------
# elementary transvections


def _lambda_power(fr: FormRing, power: int) -> int:
    """lam^power for power in {-1, 0, 1}; negative powers via the involution."""
    if power == 0:
        return fr.ring.one
    if power == 1:
        return fr.lam
    if power == -1:
        return fr.lam_inv
    raise ValueError(f"unexpected lambda power {power}")


def scaled_parameter_mask(fr: FormRing, param_mask: int, i: int) -> int:
    """Admissible long-root parameters lam^(-(eps(i)+1)/2) * param at index i."""
    power = -(omega_sign(i) + 1) // 2
    if power == 0:
        return param_mask
    scale = _lambda_power(fr, power)
    out = 0
    for x in mask_elements(param_mask):
        out |= 1 << fr.ring.mul(scale, x)
    return out


def admissible_mask(fr: FormRing, fi: FormIdeal, i: int, j: int) -> int:
    """Allowed parameters for T_ij at level (I, Gamma)."""
    if i == j:
        raise ValueError("transvection indices must differ")
    if i != -j:
        return fi.ideal.members
    return scaled_parameter_mask(fr, fi.gamma, i)


def transvection(fr: FormRing, n: int, i: int, j: int, xi: int) -> UMatrix:
    """Elementary unitary transvection T_ij(xi).

    Short root (i != -j): e + xi*e_ij - lam^((eps(j)-eps(i))/2) conj(xi) e_-j,-i.
    Long root (i == -j):  e + xi*e_i,-i with xi in the scaled parameter set.
    """
    ring = fr.ring
    if i == j or abs(i) > n or abs(j) > n or i == 0 or j == 0:
        raise ValueError(f"bad transvection indices ({i},{j}) for n={n}")
    ops = get_ops(ring, n)
    a = ops.identity.copy()
    if i == -j:
        allowed = scaled_parameter_mask(fr, fr.lambda_mask(), i)
        if not mask_contains(allowed, xi):
            raise ValueError(f"long-root parameter {xi} is not admissible at index {i}")
        a[omega_pos(i, n), omega_pos(j, n)] = xi
        return UMatrix(ring, n, a)
    power = (omega_sign(j) - omega_sign(i)) // 2
    mirror = ring.neg(ring.mul(_lambda_power(fr, power), ring.conj(xi)))
    a[omega_pos(i, n), omega_pos(j, n)] = xi
    a[omega_pos(-j, n), omega_pos(-i, n)] = mirror
    return UMatrix(ring, n, a)


def transvection_inverse(fr: FormRing, n: int, i: int, j: int, xi: int) -> UMatrix:
    return transvection(fr, n, i, j, fr.ring.neg(xi))


def level_transvection(fr: FormRing, fi: FormIdeal, n: int, i: int, j: int, xi: int) -> UMatrix:
    if not mask_contains(admissible_mask(fr, fi, i, j), xi):
        raise ValueError(f"parameter {xi} is not admissible for T_{i},{j} at this level")
    return transvection(fr, n, i, j, xi)


def z_generator(
    fr: FormRing, fi: FormIdeal, n: int, i: int, j: int, xi: int, zeta: int
) -> UMatrix:
    """Z_ij(xi, zeta) = T_ji(zeta) T_ij(xi) T_ji(-zeta), the conjugated
    level transvections generating the relative elementary subgroup."""
    full = full_form_ideal(fr)
    if not mask_contains(admissible_mask(fr, fi, i, j), xi):
        raise ValueError(f"xi={xi} is not admissible at level for ({i},{j})")
    if not mask_contains(admissible_mask(fr, full, j, i), zeta):
        raise ValueError(f"zeta={zeta} is not admissible for ({j},{i})")
    t = transvection(fr, n, i, j, xi)
    c = transvection(fr, n, j, i, zeta)
    c_inv = transvection(fr, n, j, i, fr.ring.neg(zeta))
    return c * t * c_inv


def index_pairs(n: int, include_long: bool = True) -> list[tuple[int, int]]:
    """Ordered index pairs (i, j), i != j, in deterministic omega order."""
    om = omega_indices(n)
    out = []
    for i in om:
        for j in om:
            if i == j:
                continue
            if i == -j and not include_long:
                continue
            out.append((i, j))
    return out


def fu_generators(fr: FormRing, fi: FormIdeal, n: int) -> list[UMatrix]:
    """All nontrivial level transvections T_ij(xi), xi != 0, in fixed order."""
    ring = fr.ring
    out = []
    for i, j in index_pairs(n):
        for xi in mask_elements(admissible_mask(fr, fi, i, j)):
            if xi == ring.zero:
                continue
            out.append(transvection(fr, n, i, j, xi))
    return out


def eu_generator_set(fr: FormRing, fi: FormIdeal, n: int) -> list[UMatrix]:
    """All Z_ij(xi, zeta) with xi at the given level and zeta absolute."""
    ring = fr.ring
    full = full_form_ideal(fr)
    out = []
    for i, j in index_pairs(n):
        xi_mask = admissible_mask(fr, fi, i, j)
        zeta_mask = admissible_mask(fr, full, j, i)
        for xi in mask_elements(xi_mask):
            if xi == ring.zero:
                continue
            for zeta in mask_elements(zeta_mask):
                out.append(z_generator(fr, fi, n, i, j, xi, zeta))
    return out


# ---------------------------------------------------------------------------
# Steinberg relations


RELATIONS = ("R1", "R2", "R3", "R4", "R5", "R6")


def steinberg_relation_check(fr: FormRing, n: int, relation: str, args: tuple) -> bool:
    """Evaluate both sides of a named elementary relation on explicit args.

    Argument shapes: R1 (i,j,xi) short; R2 (i,j,xi,zeta) same root subgroup;
    R3 (i,j,xi,h,k,zeta) disjoint roots; R4 (i,j,h,xi,zeta) short*short->short;
    R5 (i,j,xi,zeta) short*short->long; R6 (i,j,alpha,xi) long*short.
    """
    ring = fr.ring
    if relation == "R1":
        i, j, xi = args
        if i in (j, -j):
            raise ValueError("R1 needs a short root pair")
        lhs = transvection(fr, n, i, j, xi)
        power = (omega_sign(j) - omega_sign(i)) // 2
        rhs = transvection(
            fr, n, -j, -i, ring.neg(ring.mul(_lambda_power(fr, power), ring.conj(xi)))
        )
        return lhs == rhs
    if relation == "R2":
        i, j, xi, zeta = args
        lhs = transvection(fr, n, i, j, xi) * transvection(fr, n, i, j, zeta)
        return lhs == transvection(fr, n, i, j, ring.add(xi, zeta))
    if relation == "R3":
        i, j, xi, h, k, zeta = args
        if h in (j, -i) or k in (i, -j):
            raise ValueError("R3 index constraints violated")
        a = transvection(fr, n, i, j, xi)
        b = transvection(fr, n, h, k, zeta)
        return a.commutator(b).is_identity()
    if relation == "R4":
        i, j, h, xi, zeta = args
        if i in (j, -j) or h in (j, -j) or i in (h, -h):
            raise ValueError("R4 index constraints violated")
        a = transvection(fr, n, i, j, xi)
        b = transvection(fr, n, j, h, zeta)
        return a.commutator(b) == transvection(fr, n, i, h, ring.mul(xi, zeta))
    if relation == "R5":
        i, j, xi, zeta = args
        if i in (j, -j):
            raise ValueError("R5 needs a short root pair")
        a = transvection(fr, n, i, j, xi)
        b = transvection(fr, n, j, -i, zeta)
        param = ring.sub(
            ring.mul(xi, zeta),
            ring.mul(
                _lambda_power(fr, -omega_sign(i)),
                ring.mul(ring.conj(zeta), ring.conj(xi)),
            ),
        )
        return a.commutator(b) == transvection(fr, n, i, -i, param)
    if relation == "R6":
        i, j, alpha, xi = args
        if i in (j, -j):
            raise ValueError("R6 needs i != +-j")
        a = transvection(fr, n, i, -i, alpha)
        b = transvection(fr, n, -i, j, xi)
        # tail power is (eps(j)+eps(i))/2: expanding the commutator entrywise,
        # the e_{-j,-i} term of T_ij(alpha*xi) cancels against lam^p conj(xi)*alpha
        # with p = (eps(j)+eps(i))/2, which leaves the long-root factor below
        power = (omega_sign(j) + omega_sign(i)) // 2
        tail = ring.neg(
            ring.mul(
                _lambda_power(fr, power),
                ring.mul(ring.conj(xi), ring.mul(alpha, xi)),
            )
        )
        rhs = transvection(fr, n, i, j, ring.mul(alpha, xi)) * transvection(fr, n, -j, j, tail)
        return a.commutator(b) == rhs
    raise ValueError(f"unknown relation {relation!r}")


def relation_instances(fr: FormRing, n: int, relation: str) -> Iterable[tuple]:
    """Every admissible argument tuple of the named relation (exhaustive)."""
    ring = fr.ring
    om = omega_indices(n)
    full = full_form_ideal(fr)
    short = index_pairs(n, include_long=False)

    def params(i: int, j: int) -> list[int]:
        return mask_elements(admissible_mask(fr, full, i, j))

    if relation == "R1":
        for i, j in short:
            for xi in params(i, j):
                yield (i, j, xi)
    elif relation == "R2":
        for i, j in index_pairs(n):
            for xi in params(i, j):
                for zeta in params(i, j):
                    yield (i, j, xi, zeta)
    elif relation == "R3":
        for i, j in index_pairs(n):
            for h, k in index_pairs(n):
                if h in (j, -i) or k in (i, -j):
                    continue
                for xi in params(i, j):
                    for zeta in params(h, k):
                        yield (i, j, xi, h, k, zeta)
    elif relation == "R4":
        for i, j in short:
            for h in om:
                if h in (j, -j, i, -i):
                    continue
                for xi in params(i, j):
                    for zeta in params(j, h):
                        yield (i, j, h, xi, zeta)
    elif relation == "R5":
        for i, j in short:
            for xi in params(i, j):
                for zeta in params(j, -i):
                    yield (i, j, xi, zeta)
    elif relation == "R6":
        for i, j in short:
            for alpha in params(i, -i):
                for xi in params(-i, j):
                    yield (i, j, alpha, xi)
    else:
        raise ValueError(f"unknown relation {relation!r}")


# ---------------------------------------------------------------------------
# generators of the mixed commutator subgroup


def theorem_generators(
    fr: FormRing,
    fi_i: FormIdeal,
    fi_j: FormIdeal,
    n: int,
    conjugators: Sequence[Sequence[UMatrix]] = (),
) -> list[UMatrix]:
    """Generator families for the commutator of two relative elementary groups.

    Emits, for every admissible index pair and parameter choice, the elements

      c [T_ji(alpha), T_ij(a) T_ji(beta) T_ij(a)^-1] c^-1,
      c [T_ji(alpha), T_ij(beta)] c^-1,
      c T_ij(xi) c^-1,

    with alpha at level fi_i, beta at level fi_j, xi at the symmetrised
    product level, a absolute, and c running over the identity plus the given
    conjugator words (words multiply left to right).
    """
    from .ideals import symmetrized_product  # local import to avoid cycle

    ring = fr.ring
    full = full_form_ideal(fr)
    prod = symmetrized_product(fr, fi_i, fi_j)
    raw: list[UMatrix] = []
    for i, j in index_pairs(n):
        alpha_mask = admissible_mask(fr, fi_i, j, i)
        beta_ji_mask = admissible_mask(fr, fi_j, j, i)
        beta_ij_mask = admissible_mask(fr, fi_j, i, j)
        a_mask = admissible_mask(fr, full, i, j)
        xi_mask = admissible_mask(fr, prod, i, j)
        for alpha in mask_elements(alpha_mask):
            if alpha == ring.zero:
                continue
            t_alpha = transvection(fr, n, j, i, alpha)
            for beta in mask_elements(beta_ji_mask):
                if beta == ring.zero:
                    continue
                t_beta = transvection(fr, n, j, i, beta)
                for a in mask_elements(a_mask):
                    conj_beta = (
                        transvection(fr, n, i, j, a)
                        * t_beta
                        * transvection(fr, n, i, j, ring.neg(a))
                    )
                    raw.append(t_alpha.commutator(conj_beta))
            for beta in mask_elements(beta_ij_mask):
                if beta == ring.zero:
                    continue
                raw.append(t_alpha.commutator(transvection(fr, n, i, j, beta)))
        for xi in mask_elements(xi_mask):
            if xi == ring.zero:
                continue
            raw.append(transvection(fr, n, i, j, xi))
    out = list(raw)
    for word in conjugators:
        if not word:
            continue
        c = word[0]
        for w in word[1:]:
            c = c * w
        c_inv = c.inverse()
        out.extend(c * g * c_inv for g in raw)
    return out
