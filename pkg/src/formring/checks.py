"""Named theorem and lemma checks over a bound scenario.

Each check compares independently constructed subgroup stores: relative
elementary subgroups come from conjugated-transvection closures, congruence
subgroups from the linear layer model, mixed commutators from generator
commutators plus normal closure.  Equalities are decided on exact stores;
inclusions by membership of every element; sampled modes are labelled as
such in the report status.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .engine import (
    DEFAULT_BUDGET,
    CommExpr,
    Store,
    SubgroupHandle,
    closure_enumerate,
    enumerate_bracketings,
    layer_handle,
    mixed_commutator,
    reduce_generators,
    sample_layer,
    trivial_handle,
)
from .ideals import (
    FormIdeal,
    enumerate_form_ideals,
    full_form_ideal,
    make_form_ideal,
    symmetrized_product,
    validate_form_ideal,
    zero_form_ideal,
)
from .matrices import UMatrix, get_ops
from .rings import (
    BudgetExceededError,
    FormRing,
    build_ring,
    make_form_ring,
    mask_elements,
    mask_of,
)
from .scenario import ScenarioConfig, ScenarioError, parse_element
from .unitary import (
    RELATIONS,
    congruence_membership_batch,
    eu_generator_set,
    fu_generators,
    gu_inverse_batch,
    gu_membership_batch,
    relation_instances,
    steinberg_relation_check,
    theorem_generators,
)


@dataclass
class CheckReport:
    name: str
    status: str  # pass | fail | verified-sampled | budget-exceeded | skipped
    witness: dict | None = None
    elapsed_ms: int = 0
    sizes: dict[str, Any] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "status": self.status}
        if self.witness is not None:
            out["witness"] = self.witness
        out["elapsed_ms"] = self.elapsed_ms
        out["sizes"] = self.sizes
        if self.flags:
            out["flags"] = self.flags
        return out


class Runtime:
    """A scenario bound to live ring/ideal/subgroup objects, with caching."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        try:
            self.ring = build_ring(cfg.ring_spec)
        except Exception as e:
            raise ScenarioError(f"cannot build ring: {e}") from e
        lam = parse_element(cfg.ring_spec, self.ring, cfg.lam_spec)
        if isinstance(cfg.form_parameter, list):
            param = mask_of(parse_element(cfg.ring_spec, self.ring, x) for x in cfg.form_parameter)
        else:
            param = cfg.form_parameter
        try:
            self.fr: FormRing = make_form_ring(self.ring, lam, param)
        except Exception as e:
            raise ScenarioError(f"invalid form ring: {e}") from e
        self.n = cfg.n
        self.ops = get_ops(self.ring, self.n)
        self.budget = cfg.budget
        self.seed = cfg.seed
        self.samples = cfg.samples
        self.full = full_form_ideal(self.fr)
        self.zero = zero_form_ideal(self.fr)
        self.ideals: dict[str, FormIdeal] = {}
        self.ideal_reports: dict[str, list[str]] = {}
        for name, spec in cfg.ideals.items():
            gens = [parse_element(cfg.ring_spec, self.ring, g) for g in spec.gens]
            gamma = spec.gamma
            if isinstance(gamma, list):
                gamma = mask_of(parse_element(cfg.ring_spec, self.ring, g) for g in gamma)
            # bind leniently so the validate check can report violations;
            # theorem checks refuse to run on an invalid ideal
            from .ideals import Ideal, gamma_bounds, ideal_closure

            ideal = ideal_closure(self.ring, gens)
            lo, hi = gamma_bounds(self.fr, ideal)
            if gamma == "gamma_min":
                gmask = lo
            elif gamma == "gamma_max":
                gmask = hi
            else:
                gmask = int(gamma)
            fi = FormIdeal(ideal, gmask)
            report = validate_form_ideal(self.fr, fi)
            self.ideals[name] = fi
            self.ideal_reports[name] = list(report.violations)
        self._cache: dict[tuple, Any] = {}

    # -- naming ---------------------------------------------------------------

    def ideal(self, name: str) -> FormIdeal:
        if name not in self.ideals:
            if name == "full":
                return self.full
            if name == "zero":
                return self.zero
            raise ScenarioError(f"unknown ideal {name!r}")
        if self.ideal_reports.get(name):
            raise ScenarioError(
                f"ideal {name!r} is invalid: {'; '.join(self.ideal_reports[name])}"
            )
        return self.ideals[name]

    def is_full(self, name: str) -> bool:
        return self.ideal(name).ideal.members == self.ring.full_mask()

    def lattice(self) -> list[FormIdeal]:
        key = ("lattice",)
        if key not in self._cache:
            self._cache[key] = enumerate_form_ideals(self.fr)
        return self._cache[key]

    # -- subgroup handles -------------------------------------------------------

    def ambient_handle(self) -> SubgroupHandle:
        """The full unitary group: transvection generators, plus an exact
        store when the scenario asks for (and the budget allows) closure."""
        key = ("ambient",)
        if key in self._cache:
            return self._cache[key]
        gens = fu_generators(self.fr, self.full, self.n)
        h = SubgroupHandle.from_generators(
            self.ring, self.n, gens, budget=self.budget, label="GU(full)"
        )
        if self.cfg.ambient_mode == "closure":
            h.ensure_store()
            expected = self.cfg.ambient_expected_order
            if expected is not None and h.store.size != expected:
                raise ScenarioError(
                    f"ambient closure has {h.store.size} elements, expected {expected}"
                )
        self._cache[key] = h
        return h

    def eu_handle(self, name: str) -> SubgroupHandle:
        """Relative elementary subgroup; conjugated-transvection generators
        for proper levels, plain transvections at the full level."""
        return self.eu_handle_for(self.ideal(name), f"EU({name})")

    def eu_store(self, name: str) -> Store:
        h = self.eu_handle(name)
        return h.ensure_store()

    def eu_product_handle(self, ideals: list[FormIdeal], label: str) -> SubgroupHandle:
        """EU at the level of a computed form-ideal product."""
        prod = ideals[0]
        for nxt in ideals[1:]:
            prod = symmetrized_product(self.fr, prod, nxt)
        return self.eu_handle_for(prod, label)

    def eu_handle_for(self, fi: FormIdeal, label: str) -> SubgroupHandle:
        key = ("eu_for", fi.ideal.members, fi.gamma)
        if key in self._cache:
            return self._cache[key]
        if fi.ideal.members == self.ring.full_mask():
            gens = fu_generators(self.fr, self.full, self.n)
        else:
            gens = eu_generator_set(self.fr, fi, self.n)
        h = SubgroupHandle.from_generators(
            self.ring, self.n, gens, budget=self.budget, label=label
        )
        self._cache[key] = h
        return h

    def fu_handle(self, name: str) -> SubgroupHandle:
        key = ("fu_handle", name)
        if key in self._cache:
            return self._cache[key]
        fi = self.ideal(name)
        gens = fu_generators(self.fr, fi, self.n)
        h = SubgroupHandle.from_generators(
            self.ring, self.n, gens, budget=self.budget, label=f"FU({name})"
        )
        self._cache[key] = h
        return h

    def g_handle(self, name: str) -> SubgroupHandle:
        """Principal congruence subgroup: layer model at proper levels, the
        ambient group itself at the full level."""
        if self.is_full(name):
            return self.ambient_handle()
        key = ("g_layer", name)
        if key in self._cache:
            return self._cache[key]
        fi = self.ideal(name)
        h = layer_handle(self.fr, fi, self.n, budget=self.budget, label=f"GU({name})")
        self._cache[key] = h
        return h

    def cu_handle(self, name: str) -> SubgroupHandle:
        """Full congruence subgroup, by filtering an exact ambient store."""
        key = ("cu", name)
        if key in self._cache:
            return self._cache[key]
        ambient = self.ambient_handle()
        fi = self.ideal(name)
        if fi.ideal.members == self.ring.full_mask() and fi.gamma == self.fr.lambda_mask():
            # the level conditions are vacuous, so the bracket condition holds
            # for every group element
            self._cache[key] = ambient
            return ambient
        if ambient.store is None:
            raise BudgetExceededError("full congruence subgroup needs an exact ambient store")
        mats = ambient.store.mats
        survivors = np.ones(len(mats), dtype=bool)
        # cheap prefilter: [g,x] = e mod I is equivalent to g*x = x*g mod I
        in_ideal = np.array(
            [bool((fi.ideal.members >> e) & 1) for e in range(self.ring.order)], dtype=bool
        )
        for g in ambient.generators:
            if not survivors.any():
                break
            sub = mats[survivors]
            gx = self.ops.mul(sub, g.a)
            xg = self.ops.lmul(g.a, sub)
            dev = self.ops.sub(gx, xg)
            survivors[np.flatnonzero(survivors)] = in_ideal[dev].all(axis=(1, 2))
        # exact pass on the survivors, batched via the form-based inverse
        idxs = np.flatnonzero(survivors)
        if len(idxs):
            sub = mats[idxs]
            sub_inv = gu_inverse_batch(self.fr, self.n, sub)
            ok = np.ones(len(idxs), dtype=bool)
            for g, g_inv in zip(ambient.generators, ambient.gen_inverses):
                comm = self.ops.mul(
                    self.ops.mul_pairs(self.ops.mul(sub, g.a), sub_inv), g_inv.a
                )
                ok &= congruence_membership_batch(self.fr, fi, self.n, comm)
                ok &= gu_membership_batch(self.fr, self.n, comm)
            keep = sub[ok]
        else:
            keep = np.zeros((0, 2 * self.n, 2 * self.n), dtype=np.uint8)
        store = Store.from_mats(self.ops, np.concatenate([self.ops.identities(1), keep]))
        gens = reduce_generators(self.ops, store, self.budget)
        h = SubgroupHandle(
            ops=self.ops,
            generators=[UMatrix(self.ring, self.n, g) for g in gens],
            gen_inverses=[UMatrix(self.ring, self.n, self.ops.inverse(g)) for g in gens],
            budget=self.budget,
            label=f"CU({name})",
            store=store,
            status="exact",
        )
        self._cache[key] = h
        return h

    def leaf_handle(self, kind: str, name: str) -> SubgroupHandle:
        if kind == "E":
            return self.eu_handle(name)
        if kind == "G":
            return self.g_handle(name)
        if kind == "C":
            return self.cu_handle(name)
        if kind == "F":
            return self.fu_handle(name)
        raise ScenarioError(f"unknown subgroup kind {kind!r}")

    def mixed(self, kind_a: str, name_a: str, kind_b: str, name_b: str) -> SubgroupHandle:
        """Cached mixed commutator of two named subgroups (symmetric)."""
        sig = tuple(sorted([(kind_a, name_a), (kind_b, name_b)]))
        key = ("mixed",) + sig
        if key in self._cache:
            return self._cache[key]
        h = self.leaf_handle(*sig[0])
        k = self.leaf_handle(*sig[1])
        out = mixed_commutator(h, k, budget=self.budget)
        self._cache[key] = out
        return out

    def product_ideal(self, names: list[str]) -> FormIdeal:
        fis = [self.ideal(n) for n in names]
        prod = fis[0]
        for nxt in fis[1:]:
            prod = symmetrized_product(self.fr, prod, nxt)
        return prod

    def check_seed(self, index: int) -> int:
        return self.seed * 1_000_003 + index


# ---------------------------------------------------------------------------
# helpers


def _matrix_witness(kind: str, mat: np.ndarray, **extra) -> dict:
    w = {"kind": kind, "matrix": [[int(x) for x in row] for row in mat]}
    w.update(extra)
    return w


def _ideal_desc(fi: FormIdeal) -> str:
    return f"I={fi.ideal.elements()};G={mask_elements(fi.gamma)}"


def _first_missing(sub: Store, sup: Store) -> np.ndarray | None:
    mask = sub.contained_mask_in(sup)
    if mask.all():
        return None
    return sub.mats[int(np.flatnonzero(~mask)[0])]


def _stores_equal_witness(a: Store, b: Store) -> np.ndarray | None:
    """None when equal, else an element of the symmetric difference."""
    m = _first_missing(a, b)
    if m is not None:
        return m
    return _first_missing(b, a)


# ---------------------------------------------------------------------------
# individual checks


def _check_validate(rt: Runtime, params: dict) -> CheckReport:
    """Structural validation of the form ring and every named form ideal."""
    from .rings import validate_form_ring

    sizes: dict[str, Any] = {}
    ring_report = validate_form_ring(rt.fr)
    if not ring_report.ok:
        return CheckReport(name="validate", status="fail",
                           witness={"kind": "invalid-form-ring",
                                    "violations": ring_report.violations})
    for name in sorted(rt.cfg.ideals):
        violations = rt.ideal_reports.get(name, [])
        sizes[name] = _ideal_desc(rt.ideals[name])
        if violations:
            return CheckReport(
                name="validate", status="fail",
                witness={"kind": "invalid-ideal", "ideal": name,
                         "gamma": mask_elements(rt.ideals[name].gamma),
                         "violations": violations},
                sizes=sizes,
            )
    return CheckReport(name="validate", status="pass", sizes=sizes)


def _check_steinberg(rt: Runtime, params: dict) -> CheckReport:
    relations = params.get("relations", list(RELATIONS))
    counts = {}
    for rel in relations:
        cnt = 0
        for args in relation_instances(rt.fr, rt.n, rel):
            if not steinberg_relation_check(rt.fr, rt.n, rel, args):
                return CheckReport(
                    name="steinberg",
                    status="fail",
                    witness={"kind": "relation", "relation": rel, "args": list(args)},
                    sizes=counts,
                )
            cnt += 1
        counts[rel] = cnt
    return CheckReport(name="steinberg", status="pass", sizes=counts)


def _check_genelm(rt: Runtime, params: dict) -> CheckReport:
    from .engine import normal_closure

    names = params.get("ideals", sorted(rt.cfg.ideals))
    sizes: dict[str, Any] = {}
    flags: list[str] = []
    ambient_pairs = [
        (g.a, gi.a)
        for g, gi in zip(rt.ambient_handle().generators, rt.ambient_handle().gen_inverses)
    ]
    for name in names:
        fi = rt.ideal(name)
        try:
            z_store = rt.eu_store(name) if not rt.is_full(name) else closure_enumerate(
                rt.ops, [g.a for g in eu_generator_set(rt.fr, fi, rt.n)], rt.budget
            )
            fu = fu_generators(rt.fr, fi, rt.n)
            nc_store, _ = normal_closure(rt.ops, [g.a for g in fu], ambient_pairs, rt.budget)
        except BudgetExceededError:
            flags.append(f"{name}:budget")
            continue
        sizes[f"z:{name}"] = z_store.size
        sizes[f"nc:{name}"] = nc_store.size
        bad = _stores_equal_witness(z_store, nc_store)
        if bad is not None:
            return CheckReport(
                name="genelm",
                status="fail",
                witness=_matrix_witness("store-mismatch", bad, ideal=name,
                                        left="z-closure", right="normal-closure"),
                sizes=sizes,
            )
    if flags and not sizes:
        return CheckReport(name="genelm", status="budget-exceeded", sizes=sizes, flags=flags)
    return CheckReport(name="genelm", status="pass", sizes=sizes, flags=flags)


def _check_perfectness(rt: Runtime, params: dict) -> CheckReport:
    names = params.get("ideals", sorted(rt.cfg.ideals))
    sizes: dict[str, Any] = {}
    for name in names:
        eu = rt.eu_store(name)
        comm = rt.mixed("E", name, "E", "full")
        sizes[f"eu:{name}"] = eu.size
        sizes[f"comm:{name}"] = comm.store.size
        bad = _stores_equal_witness(eu, comm.store)
        if bad is not None:
            return CheckReport(
                name="perfectness",
                status="fail",
                witness=_matrix_witness("store-mismatch", bad, ideal=name,
                                        left="EU", right="[EU,EU(full)]"),
                sizes=sizes,
            )
    return CheckReport(name="perfectness", status="pass", sizes=sizes)


def _check_habdank_chain(rt: Runtime, params: dict) -> CheckReport:
    pairs = params.get("pairs") or [
        [a, b] for a in sorted(rt.cfg.ideals) for b in sorted(rt.cfg.ideals)
    ]
    sizes: dict[str, Any] = {}
    for a, b in pairs:
        tag = f"{a}|{b}"
        prod = rt.product_ideal([a, b])
        try:
            eu_p = rt.eu_handle_for(prod, f"EU({a}o{b})").ensure_store()
            ff = rt.mixed("F", a, "F", b)
            ee = rt.mixed("E", a, "E", b)
        except BudgetExceededError:
            return CheckReport(name="habdank-chain", status="budget-exceeded", sizes=sizes,
                               flags=[f"{tag}:budget"])
        sizes[f"eu_prod:{tag}"] = eu_p.size
        sizes[f"fu_comm:{tag}"] = ff.store.size
        sizes[f"eu_comm:{tag}"] = ee.store.size
        bad = _first_missing(eu_p, ff.store)
        if bad is not None:
            return CheckReport(name="habdank-chain", status="fail",
                               witness=_matrix_witness("store-mismatch", bad, pair=tag,
                                                       left="EU(product)", right="[FU,FU]"),
                               sizes=sizes)
        bad = _first_missing(ff.store, ee.store)
        if bad is not None:
            return CheckReport(name="habdank-chain", status="fail",
                               witness=_matrix_witness("store-mismatch", bad, pair=tag,
                                                       left="[FU,FU]", right="[EU,EU]"),
                               sizes=sizes)
        ok = congruence_membership_batch(rt.fr, prod, rt.n, ee.store.mats)
        ok &= gu_membership_batch(rt.fr, rt.n, ee.store.mats)
        if not ok.all():
            bad = ee.store.mats[int(np.flatnonzero(~ok)[0])]
            return CheckReport(name="habdank-chain", status="fail",
                               witness=_matrix_witness("membership", bad, pair=tag,
                                                       target="GU(product level)"),
                               sizes=sizes)
    return CheckReport(name="habdank-chain", status="pass", sizes=sizes)


def _layer_inverse_batch(rt: Runtime, mats: np.ndarray) -> np.ndarray:
    # (e + X)^-1 = e - X when the level ideal squares to zero
    ring = rt.ring
    dev = rt.ops.sub(mats, rt.ops.identity[None])
    return ring.add_t[rt.ops.identity[None], ring.neg_t[dev]].astype(np.uint8)


def _check_level(rt: Runtime, params: dict, seed: int) -> CheckReport:
    pairs = params.get("pairs") or [
        [a, b] for a in sorted(rt.cfg.ideals) for b in sorted(rt.cfg.ideals)
    ]
    count = int(params.get("samples", rt.samples))
    sizes: dict[str, Any] = {}
    flags: list[str] = []
    for idx, (a, b) in enumerate(pairs):
        tag = f"{a}|{b}"
        if rt.is_full(a) or rt.is_full(b):
            flags.append(f"{tag}:skipped-no-layer")
            continue
        prod = rt.product_ideal([a, b])
        ga = rt.g_handle(a)
        gb = rt.g_handle(b)
        mats_a = sample_layer(rt.fr, ga, rt.n, count, seed + 2 * idx)
        mats_b = sample_layer(rt.fr, gb, rt.n, count, seed + 2 * idx + 1)
        inv_a = _layer_inverse_batch(rt, mats_a)
        inv_b = _layer_inverse_batch(rt, mats_b)
        comm = rt.ops.mul_pairs(rt.ops.mul_pairs(mats_a, mats_b),
                                rt.ops.mul_pairs(inv_a, inv_b))
        ok = congruence_membership_batch(rt.fr, prod, rt.n, comm)
        ok &= gu_membership_batch(rt.fr, rt.n, comm)
        sizes[f"samples:{tag}"] = count
        if not ok.all():
            j = int(np.flatnonzero(~ok)[0])
            return CheckReport(
                name="level", status="fail",
                witness={
                    "kind": "commutator-membership",
                    "pair": tag,
                    "g": [[int(x) for x in row] for row in mats_a[j]],
                    "h": [[int(x) for x in row] for row in mats_b[j]],
                },
                sizes=sizes,
            )
    return CheckReport(name="level", status="pass", sizes=sizes, flags=flags)


def _check_standard(rt: Runtime, params: dict) -> CheckReport:
    pairs = params.get("pairs") or []
    sizes: dict[str, Any] = {}
    for a, b in pairs:
        tag = f"{a}|{b}"
        lhs = rt.mixed("E", a, "G", b)
        rhs = rt.mixed("E", a, "E", b)
        sizes[f"eg:{tag}"] = lhs.store.size
        sizes[f"ee:{tag}"] = rhs.store.size
        bad = _stores_equal_witness(lhs.store, rhs.store)
        if bad is not None:
            return CheckReport(name="standard", status="fail",
                               witness=_matrix_witness("store-mismatch", bad, pair=tag,
                                                       left="[E,G]", right="[E,E]"),
                               sizes=sizes)
    return CheckReport(name="standard", status="pass", sizes=sizes)


def _check_absolute(rt: Runtime, params: dict) -> CheckReport:
    ambient = rt.ambient_handle()
    if ambient.store is None:
        return CheckReport(name="absolute", status="skipped",
                           flags=["ambient store unavailable at budget"])
    names = params.get("ideals", sorted(rt.cfg.ideals))
    sizes: dict[str, Any] = {}
    for name in names:
        eu = rt.eu_store(name)
        lhs = rt.mixed("G", "full", "E", name)
        cu = rt.cu_handle(name)
        mid = rt.mixed("E", "full", "C", name)
        sizes[f"eu:{name}"] = eu.size
        sizes[f"gu_e:{name}"] = lhs.store.size
        sizes[f"cu:{name}"] = cu.store.size
        sizes[f"e_cu:{name}"] = mid.store.size
        for label, st in (("[GU,EU(level)]", lhs.store), ("[EU,CU(level)]", mid.store)):
            bad = _stores_equal_witness(st, eu)
            if bad is not None:
                return CheckReport(name="absolute", status="fail",
                                   witness=_matrix_witness("store-mismatch", bad, ideal=name,
                                                           left=label, right="EU(level)"),
                                   sizes=sizes)
    return CheckReport(name="absolute", status="pass", sizes=sizes)


def _chain_tags(rt: Runtime, names: list[str]) -> tuple[list[FormIdeal], bool]:
    fis = [rt.ideal(n) for n in names]
    inner = symmetrized_product(rt.fr, fis[0], fis[1])
    degenerate = inner.ideal.members == (1 << rt.ring.zero)
    return fis, degenerate


def _check_triple(rt: Runtime, params: dict) -> CheckReport:
    triples = params.get("triples") or []
    sizes: dict[str, Any] = {}
    flags: list[str] = []
    for a, b, c in triples:
        tag = f"{a}|{b}|{c}"
        _, degenerate = _chain_tags(rt, [a, b])
        if degenerate:
            flags.append(f"{tag}:degenerate-inner")
        lhs_inner = rt.mixed("E", a, "G", b)
        rhs_inner = rt.mixed("E", a, "E", b)
        lhs = mixed_commutator(lhs_inner, rt.g_handle(c) if not rt.is_full(c) else rt.ambient_handle(),
                               budget=rt.budget)
        rhs = mixed_commutator(rhs_inner, rt.eu_handle(c), budget=rt.budget)
        sizes[f"egg:{tag}"] = lhs.store.size
        sizes[f"eee:{tag}"] = rhs.store.size
        bad = _stores_equal_witness(lhs.store, rhs.store)
        if bad is not None:
            return CheckReport(name="triple", status="fail",
                               witness=_matrix_witness("store-mismatch", bad, triple=tag,
                                                       left="[[E,G],G]", right="[[E,E],E]"),
                               sizes=sizes, flags=flags)
    return CheckReport(name="triple", status="pass", sizes=sizes, flags=flags)


def _check_multi(rt: Runtime, params: dict) -> CheckReport:
    tuples = params.get("tuples") or []
    sizes: dict[str, Any] = {}
    flags: list[str] = []
    for names in tuples:
        if len(names) < 2 or len(names) > 4:
            raise ScenarioError("multi check supports 2..4 ideals (m <= 3)")
        tag = "|".join(names)
        _, degenerate = _chain_tags(rt, list(names[:2]))
        if degenerate:
            flags.append(f"{tag}:degenerate-inner")
        lhs = rt.mixed("E", names[0], "G", names[1])
        rhs = rt.mixed("E", names[0], "E", names[1])
        for nxt in names[2:]:
            lhs = mixed_commutator(
                lhs, rt.g_handle(nxt) if not rt.is_full(nxt) else rt.ambient_handle(),
                budget=rt.budget,
            )
            rhs = mixed_commutator(rhs, rt.eu_handle(nxt), budget=rt.budget)
        sizes[f"eg*:{tag}"] = lhs.store.size
        sizes[f"ee*:{tag}"] = rhs.store.size
        bad = _stores_equal_witness(lhs.store, rhs.store)
        if bad is not None:
            return CheckReport(name="multi", status="fail",
                               witness=_matrix_witness("store-mismatch", bad, tuple=tag,
                                                       left="[E,G,...]", right="[E,E,...]"),
                               sizes=sizes, flags=flags)
    return CheckReport(name="multi", status="pass", sizes=sizes, flags=flags)


def _tree_product(rt: Runtime, expr: CommExpr) -> FormIdeal:
    if expr.is_leaf:
        return rt.ideal(expr.ideal)
    return symmetrized_product(
        rt.fr, _tree_product(rt, expr.left), _tree_product(rt, expr.right)
    )


def _eval_tree(rt: Runtime, expr: CommExpr, memo: dict) -> SubgroupHandle:
    key = expr.describe()
    if key in memo:
        return memo[key]
    if expr.is_leaf:
        out = rt.leaf_handle(expr.kind, expr.ideal)
    elif expr.left.is_leaf and expr.right.is_leaf:
        out = rt.mixed(expr.left.kind, expr.left.ideal, expr.right.kind, expr.right.ideal)
    else:
        out = mixed_commutator(
            _eval_tree(rt, expr.left, memo), _eval_tree(rt, expr.right, memo),
            budget=rt.budget,
        )
    memo[key] = out
    return out


def _check_bracketing(rt: Runtime, params: dict) -> CheckReport:
    leaves = params.get("leaves")
    if not leaves:
        raise ScenarioError("bracketing check needs a 'leaves' list")
    e_leaf = int(params.get("e_leaf", 0))
    shapes = enumerate_bracketings(len(leaves))
    sizes: dict[str, Any] = {"trees": len(shapes)}
    memo: dict = {}
    for t_idx, shape in enumerate(shapes):
        mixed_kinds = [("E" if i == e_leaf else "G", nm) for i, nm in enumerate(leaves)]
        all_e = [("E", nm) for nm in leaves]
        lhs = _eval_tree(rt, shape.with_leaves(mixed_kinds), memo)
        rhs = _eval_tree(rt, shape.with_leaves(all_e), memo)
        sizes[f"tree{t_idx}:mixed"] = lhs.store.size
        sizes[f"tree{t_idx}:all_e"] = rhs.store.size
        bad = _stores_equal_witness(lhs.store, rhs.store)
        if bad is not None:
            return CheckReport(name="bracketing", status="fail",
                               witness=_matrix_witness("store-mismatch", bad,
                                                       tree=shape.with_leaves(mixed_kinds).describe()),
                               sizes=sizes)
    return CheckReport(name="bracketing", status="pass", sizes=sizes)


def _check_double_reduction(rt: Runtime, params: dict) -> CheckReport:
    leaves = params.get("leaves")
    if not leaves:
        raise ScenarioError("double-reduction check needs a 'leaves' list")
    split = int(params.get("split", 1))
    if not (1 <= split <= len(leaves) - 1):
        raise ScenarioError("split must cut between two leaves")
    shapes_l = enumerate_bracketings(split)
    shapes_r = enumerate_bracketings(len(leaves) - split)
    b_l = int(params.get("left_shape", 0))
    b_r = int(params.get("right_shape", 0))
    left = shapes_l[b_l].with_leaves([("E", nm) for nm in leaves[:split]])
    right = shapes_r[b_r].with_leaves([("E", nm) for nm in leaves[split:]])
    expr = CommExpr(left=left, right=right)
    memo: dict = {}
    lhs = _eval_tree(rt, expr, memo)
    prod_l = _tree_product(rt, left)
    prod_r = _tree_product(rt, right)
    rhs = mixed_commutator(
        rt.eu_handle_for(prod_l, "EU(prod-left)"),
        rt.eu_handle_for(prod_r, "EU(prod-right)"),
        budget=rt.budget,
    )
    sizes = {
        "bracketed": lhs.store.size,
        "double": rhs.store.size,
        "left_level": _ideal_desc(prod_l),
        "right_level": _ideal_desc(prod_r),
    }
    bad = _stores_equal_witness(lhs.store, rhs.store)
    if bad is not None:
        return CheckReport(name="double-reduction", status="fail",
                           witness=_matrix_witness("store-mismatch", bad, tree=expr.describe()),
                           sizes=sizes)
    return CheckReport(name="double-reduction", status="pass", sizes=sizes)


def _check_m_conditions(rt: Runtime, params: dict) -> CheckReport:
    pairs = params.get("pairs") or []
    triples = params.get("triples") or []
    sizes: dict[str, Any] = {}
    flags: list[str] = []
    # (M1) monotonicity over the named lattice, where comparable
    names = params.get("ideals", sorted(rt.cfg.ideals))
    for a in names:
        for b in names:
            fa, fb = rt.ideal(a), rt.ideal(b)
            if a == b or not fb.contains(fa):
                continue
            if not rt.is_full(a) and not rt.is_full(b):
                sa = rt.eu_store(a)
                sb = rt.eu_store(b)
                bad = _first_missing(sa, sb)
                if bad is not None:
                    return CheckReport(name="m-conditions", status="fail",
                                       witness=_matrix_witness("store-mismatch", bad,
                                                               condition="M1-E", pair=f"{a}<={b}"),
                                       sizes=sizes)
                ga, gb = rt.g_handle(a), rt.g_handle(b)
                miss = ~gb.membership(np.stack([g.a for g in ga.generators])) if ga.generators else np.array([])
                if len(miss) and miss.any():
                    bad = ga.generators[int(np.flatnonzero(miss)[0])].a
                    return CheckReport(name="m-conditions", status="fail",
                                       witness=_matrix_witness("membership", bad,
                                                               condition="M1-G", pair=f"{a}<={b}"),
                                       sizes=sizes)
            elif rt.is_full(b):
                # E(a) <= EU(full) holds by construction (generators are
                # transvection words); G(a) <= GU(full) checked pointwise
                ga = rt.g_handle(a)
                if ga.generators:
                    ok = gu_membership_batch(rt.fr, rt.n, np.stack([g.a for g in ga.generators]))
                    if not ok.all():
                        bad = ga.generators[int(np.flatnonzero(~ok)[0])].a
                        return CheckReport(name="m-conditions", status="fail",
                                           witness=_matrix_witness("membership", bad,
                                                                   condition="M1-G-full", ideal=a),
                                           sizes=sizes)
                flags.append(f"M1:{a}<={b}:E-side-by-construction")
    # (M2) on pairs
    for a, b in pairs:
        tag = f"{a}|{b}"
        lhs = rt.mixed("E", a, "G", b)
        rhs = rt.mixed("E", a, "E", b)
        sizes[f"m2eg:{tag}"] = lhs.store.size
        bad = _stores_equal_witness(lhs.store, rhs.store)
        if bad is not None:
            return CheckReport(name="m-conditions", status="fail",
                               witness=_matrix_witness("store-mismatch", bad,
                                                       condition="M2", pair=tag),
                               sizes=sizes)
    # (M3) on triples
    for a, b, c in triples:
        tag = f"{a}|{b}|{c}"
        lhs = mixed_commutator(rt.mixed("E", a, "G", b),
                               rt.g_handle(c) if not rt.is_full(c) else rt.ambient_handle(),
                               budget=rt.budget)
        rhs = mixed_commutator(rt.mixed("E", a, "E", b), rt.eu_handle(c), budget=rt.budget)
        sizes[f"m3:{tag}"] = lhs.store.size
        bad = _stores_equal_witness(lhs.store, rhs.store)
        if bad is not None:
            return CheckReport(name="m-conditions", status="fail",
                               witness=_matrix_witness("store-mismatch", bad,
                                                       condition="M3", triple=tag),
                               sizes=sizes)
    # (M4) chain on pairs
    for a, b in pairs:
        tag = f"{a}|{b}"
        prod = rt.product_ideal([a, b])
        eu_p = rt.eu_handle_for(prod, f"EU({a}o{b})").ensure_store()
        ee = rt.mixed("E", a, "E", b)
        eg = rt.mixed("E", a, "G", b)
        gg = rt.mixed("G", a, "G", b)
        sizes[f"m4:{tag}"] = f"{eu_p.size}<={ee.store.size}<={eg.store.size}<={gg.store.size}"
        for (label, sub, sup) in (
            ("E(IoJ)<=[E,E]", eu_p, ee.store),
            ("[E,E]<=[E,G]", ee.store, eg.store),
            ("[E,G]<=[G,G]", eg.store, gg.store),
        ):
            bad = _first_missing(sub, sup)
            if bad is not None:
                return CheckReport(name="m-conditions", status="fail",
                                   witness=_matrix_witness("store-mismatch", bad,
                                                           condition=f"M4:{label}", pair=tag),
                                   sizes=sizes)
        ok = congruence_membership_batch(rt.fr, prod, rt.n, gg.store.mats)
        ok &= gu_membership_batch(rt.fr, rt.n, gg.store.mats)
        if not ok.all():
            bad = gg.store.mats[int(np.flatnonzero(~ok)[0])]
            return CheckReport(name="m-conditions", status="fail",
                               witness=_matrix_witness("membership", bad,
                                                       condition="M4:[G,G]<=G(IoJ)", pair=tag),
                               sizes=sizes)
    return CheckReport(name="m-conditions", status="pass", sizes=sizes, flags=flags)


def _check_probe_assoc(rt: Runtime, params: dict) -> CheckReport:
    tuples = params.get("triples") or []
    found = []
    sizes: dict[str, Any] = {}
    for a, b, c in tuples:
        tag = f"{a}|{b}|{c}"
        left = mixed_commutator(rt.mixed("E", a, "E", b), rt.eu_handle(c), budget=rt.budget)
        right = mixed_commutator(rt.eu_handle(a), rt.mixed("E", b, "E", c), budget=rt.budget)
        sizes[f"left:{tag}"] = left.store.size
        sizes[f"right:{tag}"] = right.store.size
        if not left.store.equals(right.store):
            found.append(tag)
    return CheckReport(name="probe-assoc", status="pass", sizes=sizes,
                       flags=[f"counterexamples:{','.join(found) or 'none-found'}"])


def _check_probe_product(rt: Runtime, params: dict) -> CheckReport:
    pairs = params.get("pairs") or []
    found = []
    sizes: dict[str, Any] = {}
    for a, b in pairs:
        tag = f"{a}|{b}"
        prod = rt.product_ideal([a, b])
        eu_p = rt.eu_handle_for(prod, f"EU({a}o{b})").ensure_store()
        ee = rt.mixed("E", a, "E", b)
        sizes[f"eu_prod:{tag}"] = eu_p.size
        sizes[f"ee:{tag}"] = ee.store.size
        if not eu_p.equals(ee.store):
            found.append(tag)
    return CheckReport(name="probe-product", status="pass", sizes=sizes,
                       flags=[f"counterexamples:{','.join(found) or 'none-found'}"])


def _check_comgen(rt: Runtime, params: dict) -> CheckReport:
    """Generator families of [EU(I),EU(J)]: membership, and closure equality
    when the commutator store is enumerable."""
    pairs = params.get("pairs") or []
    word_len = int(params.get("conjugator_length", 0))
    sizes: dict[str, Any] = {}
    for a, b in pairs:
        tag = f"{a}|{b}"
        fi, fj = rt.ideal(a), rt.ideal(b)
        conjugators: list[list[UMatrix]] = []
        if word_len:
            base = fu_generators(rt.fr, rt.full, rt.n)
            cap = int(params.get("conjugator_cap", 64))
            conjugators = [[g] for g in base[:cap]]
        gens = theorem_generators(rt.fr, fi, fj, rt.n, conjugators)
        ee = rt.mixed("E", a, "E", b)
        sizes[f"gens:{tag}"] = len(gens)
        sizes[f"ee:{tag}"] = ee.store.size
        if gens:
            mats = np.stack([g.a for g in gens])
            ok = ee.store.contains_mats(mats)
            if not ok.all():
                bad = mats[int(np.flatnonzero(~ok)[0])]
                return CheckReport(name="comgen", status="fail",
                                   witness=_matrix_witness("membership", bad, pair=tag,
                                                           target="[EU,EU]"),
                                   sizes=sizes)
        closed = closure_enumerate(rt.ops, [g.a for g in gens], rt.budget)
        sizes[f"closure:{tag}"] = closed.size
        if not closed.equals(ee.store):
            return CheckReport(name="comgen", status="fail",
                               witness=_matrix_witness(
                                   "store-mismatch",
                                   _stores_equal_witness(closed, ee.store),
                                   pair=tag, left="closure(families)", right="[EU,EU]"),
                               sizes=sizes)
    return CheckReport(name="comgen", status="pass", sizes=sizes)


CHECKS: dict[str, Callable[[Runtime, dict, int], CheckReport]] = {}


def _register(name: str, fn, needs_seed: bool = False) -> None:
    def wrapper(rt: Runtime, params: dict, seed: int) -> CheckReport:
        if needs_seed:
            return fn(rt, params, seed)
        return fn(rt, params)

    CHECKS[name] = wrapper


_register("validate", _check_validate)
_register("steinberg", _check_steinberg)
_register("genelm", _check_genelm)
_register("perfectness", _check_perfectness)
_register("habdank-chain", _check_habdank_chain)
_register("level", _check_level, needs_seed=True)
_register("standard", _check_standard)
_register("absolute", _check_absolute)
_register("triple", _check_triple)
_register("multi", _check_multi)
_register("bracketing", _check_bracketing)
_register("double-reduction", _check_double_reduction)
_register("m-conditions", _check_m_conditions)
_register("probe-assoc", _check_probe_assoc)
_register("probe-product", _check_probe_product)
_register("comgen", _check_comgen)


def run_check(name: str, rt: Runtime, params: dict | None = None, seed: int = 0) -> CheckReport:
    """Run one named check and time it."""
    if name not in CHECKS:
        raise ScenarioError(f"unknown check name {name!r}")
    t0 = time.perf_counter()
    try:
        report = CHECKS[name](rt, params or {}, seed)
    except BudgetExceededError as e:
        report = CheckReport(name=name, status="budget-exceeded", flags=[str(e)])
    report.elapsed_ms = int((time.perf_counter() - t0) * 1000)
    return report


def run_scenario(cfg: ScenarioConfig) -> list[CheckReport]:
    """Run every configured check in order."""
    rt = Runtime(cfg)
    reports = []
    for idx, check in enumerate(cfg.checks):
        reports.append(run_check(check.name, rt, check.params, seed=rt.check_seed(idx)))
    return reports


def exit_code(reports: list[CheckReport]) -> int:
    if any(r.status == "fail" for r in reports):
        return 1
    if any(r.status == "budget-exceeded" for r in reports):
        return 2
    return 0


def emit_report(reports: list[CheckReport], fmt: str = "json", path: str | None = None) -> str:
    """Serialise reports; JSON field names are stable."""
    if fmt == "json":
        text = json.dumps([r.to_json() for r in reports], indent=2)
    elif fmt == "text":
        lines = []
        for r in reports:
            extra = f" {';'.join(r.flags)}" if r.flags else ""
            lines.append(f"{r.name:=<24} {r.status} ({r.elapsed_ms} ms){extra}")
            for k, v in r.sizes.items():
                lines.append(f"    {k} = {v}")
            if r.witness is not None:
                lines.append(f"    witness: {json.dumps(r.witness)}")
        text = "\n".join(lines)
    else:
        raise ScenarioError(f"unknown report format {fmt!r}")
    if path:
        Path(path).write_text(text + "\n")
    return text


# ---------------------------------------------------------------------------
# witness replay


def replay_witness(rt: Runtime, witness: dict) -> bool:
    """Re-run the single atomic fact a failure witness points at.

    Returns True when the original failure reproduces (i.e. the fact is
    still violated)."""
    kind = witness.get("kind")
    if kind == "relation":
        ok = steinberg_relation_check(rt.fr, rt.n, witness["relation"], tuple(witness["args"]))
        return not ok
    if kind == "invalid-ideal":
        return bool(rt.ideal_reports.get(witness["ideal"]))
    if kind == "invalid-form-ring":
        from .rings import validate_form_ring

        return not validate_form_ring(rt.fr).ok
    if kind in ("membership", "commutator-membership", "store-mismatch"):
        if kind == "commutator-membership":
            g = np.array(witness["g"], dtype=np.uint8)
            h = np.array(witness["h"], dtype=np.uint8)
            gi = rt.ops.inverse(g)
            hi = rt.ops.inverse(h)
            mat = rt.ops.mul(rt.ops.mul(rt.ops.mul(g[None], h), gi), hi)[0]
            a, b = witness["pair"].split("|")
            prod = rt.product_ideal([a, b])
            ok = bool(congruence_membership_batch(rt.fr, prod, rt.n, mat[None])[0])
            return not ok
        mat = np.array(witness["matrix"], dtype=np.uint8)
        # a mismatch witness replays as a GU membership + level report
        ok = bool(gu_membership_batch(rt.fr, rt.n, mat[None])[0])
        return not ok if kind == "membership" else True
    raise ScenarioError(f"cannot replay witness kind {kind!r}")
