"""Exact-arithmetic unitary groups over finite form rings.

Builds hyperbolic unitary groups over small table-backed rings with
involution and verifies their commutator-subgroup identities (standard,
triple, multiple, arbitrary-bracketing) by exhaustive or sampled
computation over enumerated element stores.
"""

from .engine import (
    CommExpr,
    DEFAULT_BUDGET,
    SubgroupHandle,
    closure_enumerate,
    enumerate_bracketings,
    evaluate_bracketing,
    gu_level_subgroup,
    mixed_commutator,
    normal_closure,
    random_word_sampler,
)
from .ideals import (
    FormIdeal,
    Ideal,
    enumerate_form_ideals,
    gamma_bounds,
    ideal_closure,
    make_form_ideal,
    sum_form_ideals,
    symmetrized_product,
    validate_form_ideal,
)
from .matrices import UMatrix, get_ops, identity_matrix, omega_indices, omega_pos, omega_sign
from .rings import (
    BudgetExceededError,
    FormParameter,
    FormRing,
    InvolutiveRing,
    RingConstructionError,
    Symmetry,
    build_ring,
    enumerate_form_parameters,
    lambda_bounds,
    make_form_ring,
    r0_subring,
    validate_form_ring,
)
from .scenario import ScenarioConfig, ScenarioError, load_scenario, parse_scenario
from .unitary import (
    cu_membership,
    congruence_membership,
    eu_generator_set,
    eval_forms,
    fu_generators,
    gu_membership,
    steinberg_relation_check,
    theorem_generators,
    transvection,
    z_generator,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
