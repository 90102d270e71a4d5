"""
Check registry: every check id of every CLI verb, dispatched to the module
that owns it and folded into a ``CheckRecord``.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from src.algebra.bfv_finite import (
    BFVModel,
    ConstraintSystem,
    build_initial_charge,
    check_coisotropy_identity,
    check_q_nilpotent,
    graded_poisson,
    koszul_differential,
    solve_master_equation,
    verify_first_class,
)
from src.algebra.graded_core import (
    GradedAlgebra,
    GradedPoly,
    RelationSet,
    apply_derivation,
    check_nilpotent,
    derivation_commutator,
    mul,
    random_derivation,
    random_monomial,
    random_poly,
    reduce_mod_relations,
    substitute_hom,
)
from src.algebra.toy_algebroids import (
    KAPPA,
    KAPPA_VERBATIM,
    Alt1Model,
    Section,
    alt1_anchor_defect,
    alt1_leibniz_defect,
    alt1_q_square,
    alt2_checks,
    calibrate_kappa,
    expected_anchor_defect,
    expected_commutator_defect,
    expected_q_square_function,
    expected_q_square_ghost,
    hamiltonian_commutator_defect,
    nonlinearity_witness,
    random_function,
    random_section,
    vanishes_on_shell,
)
from src.config import config
from src.formal.verifications import CONVENTION_NOTES as FORMAL_CONVENTIONS
from src.formal.verifications import FORMAL_CHECK_IDS, run_formal_check
from src.lattice.convergence import ConvergenceRow
from src.lattice.suite import CONVENTION_NOTES as LATTICE_CONVENTIONS
from src.lattice.suite import LATTICE_CHECK_IDS, run_lattice_check
from src.services.model_file import ModelFile
from src.utils.reliability import FirstClassError, UnknownCheckError

logger = logging.getLogger(__name__)

Residual = Union[str, float, None]

# salts keep each randomized check on its own stream
SALTS = {"algebra-properties": 11, "algebra-relations": 12, "bfv-jacobi": 21,
         "alt1-leibniz": 31, "alt1-anchor-defect": 32, "alt2-identities": 33}
TOY_RANDOM_TRIALS = 25
JACOBI_TRIALS = 100
SCALING_FACTORS = (Fraction(3), Fraction(-1, 2))


@dataclass
class CheckRecord:
    check_id: str
    verb: str
    passed: bool
    max_residual: Residual = None
    est_order: Optional[float] = None
    runtime_ms: Optional[float] = None
    notes: List[str] = field(default_factory=list)
    rows: List[ConvergenceRow] = field(default_factory=list)
    trace: List[Dict[str, str]] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self, timings: bool = False) -> dict:
        return {
            "check_id": self.check_id,
            "verb": self.verb,
            "status": self.status,
            "max_residual": self.max_residual,
            "est_order": None if self.est_order is None else round(self.est_order, 6),
            "runtime_ms": round(self.runtime_ms, 3) if timings and self.runtime_ms is not None else None,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class RunOptions:
    """Per-run overrides from the command line; None means not given."""

    sizes: Optional[Tuple[int, ...]] = None
    seed: Optional[int] = None
    fd_step: Optional[float] = None
    k: Optional[int] = None

    def seed_for(self, model: ModelFile) -> int:
        return self.seed if self.seed is not None else model.seed

    def rng(self, model: ModelFile, check_id: str) -> np.random.Generator:
        return np.random.default_rng([self.seed_for(model), SALTS.get(check_id, 0)])


CheckFn = Callable[[ModelFile, RunOptions], CheckRecord]


def _exact(check_id: str, verb: str, residues: List[str], notes: List[str] = None) -> CheckRecord:
    """Exact checks: the residual is the first nonzero residue, printed exactly."""
    return CheckRecord(check_id, verb, not residues, residues[0] if residues else "0", notes=list(notes or []))


# ---------------------------------------------------------------------------
# verify algebra
# ---------------------------------------------------------------------------

def _algebra(model: ModelFile) -> Tuple[GradedAlgebra, RelationSet]:
    if model.schema.algebra is None and model.schema.constraints is not None:
        alg = model.constraint_system().algebra
        return alg, RelationSet.empty(alg)
    alg = model.graded_algebra()
    return alg, model.relations(alg)


def _koszul_residue(alg, relations, rng) -> GradedPoly:
    a, b = random_monomial(alg, rng), random_monomial(alg, rng)
    sign = -1 if (a.degree % 2 and b.degree % 2) else 1
    return mul(a, b) - mul(b, a) * sign


def _leibniz_residue(alg, relations, rng) -> GradedPoly:
    D = random_derivation(alg, rng, int(rng.choice([1, -1, 0, 2])))
    p, q = random_monomial(alg, rng), random_poly(alg, rng, 2)
    sign = -1 if (D.parity and p.degree % 2) else 1
    rhs = mul(apply_derivation(D, p), q) + mul(p, apply_derivation(D, q)) * sign
    return apply_derivation(D, mul(p, q)) - rhs


def _homomorphism_residue(alg, relations, rng) -> GradedPoly:
    images = {g.name: random_poly(alg, rng, 2, 2, degree=g.degree) for g in alg.generators}
    p, q = random_poly(alg, rng, 2), random_poly(alg, rng, 2)
    product = substitute_hom(images, mul(p, q)) - mul(substitute_hom(images, p), substitute_hom(images, q))
    total = substitute_hom(images, p + q) - substitute_hom(images, p) - substitute_hom(images, q)
    return product + total


def _reduction_residue(alg, relations, rng) -> GradedPoly:
    p, q = random_poly(alg, rng, 3), random_poly(alg, rng, 3)
    once = reduce_mod_relations(p, relations)
    idempotent = reduce_mod_relations(once, relations) - once
    linear = reduce_mod_relations(p + q, relations) - once - reduce_mod_relations(q, relations)
    return idempotent + linear


PROPERTIES = (
    ("koszul", _koszul_residue),
    ("leibniz", _leibniz_residue),
    ("homomorphism", _homomorphism_residue),
    ("reduction", _reduction_residue),
)


def algebra_properties(model: ModelFile, options: RunOptions) -> CheckRecord:
    alg, relations = _algebra(model)
    rng = options.rng(model, "algebra-properties")
    counts: Counter = Counter()
    residues = []
    for trial in range(config.RANDOM_TRIALS):
        name, fn = PROPERTIES[trial % len(PROPERTIES)]
        counts[name] += 1
        residue = fn(alg, relations, rng)
        if not residue.is_zero():
            residues.append(f"{name} trial {trial}: {residue}")
    notes = [", ".join(f"{n}: {c} trials" for n, c in counts.items())]
    return _exact("algebra-properties", "algebra", residues, notes)


def algebra_nilpotent(model: ModelFile, options: RunOptions) -> CheckRecord:
    alg, relations = _algebra(model)
    if model.schema.algebra is not None:
        specs = model.schema.algebra.derivations
        derivations = model.derivations(alg)
        expected = {name: spec.expect_nilpotent for name, spec in specs.items()}
    else:
        derivations = {"koszul": koszul_differential(model.constraint_system())}
        expected = {"koszul": True}
    residues, notes = [], []
    for name, D in derivations.items():
        if not D.parity:
            notes.append(f"{name}: even derivation, nilpotency not defined")
            continue
        result = check_nilpotent(D, relations)
        if result.ok:
            square = derivation_commutator(D, D)
            for gen in alg.generators:
                leftover = reduce_mod_relations(square.image(gen), relations)
                if not leftover.is_zero():
                    residues.append(f"{name}: [D,D]({gen.name}) = {leftover} although D^2 = 0")
            notes.append(f"{name}: D^2 = 0 on every generator")
        else:
            notes.append(f"{name}: D^2({result.generator}) = {result.residue}")
        if result.ok != expected[name]:
            wanted = "nilpotent" if expected[name] else "not nilpotent"
            residues.append(f"{name} expected {wanted}: D^2({result.generator}) = {result.residue}")
    return _exact("algebra-nilpotent", "algebra", residues, notes)


def algebra_relations(model: ModelFile, options: RunOptions) -> CheckRecord:
    alg, relations = _algebra(model)
    if not relations.annihilators and not relations.substitutions:
        return _exact("algebra-relations", "algebra", [], ["no relations declared"])
    residues = []
    for lhs in relations.annihilators:
        reduced = reduce_mod_relations(GradedPoly(alg, {lhs: Fraction(1)}), relations)
        if not reduced.is_zero():
            residues.append(f"annihilator {alg.format_monomial(lhs)} reduces to {reduced}")
    for lhs, rhs in relations.substitutions:
        lhs_nf = reduce_mod_relations(GradedPoly(alg, {lhs: Fraction(1)}), relations)
        diff = lhs_nf - reduce_mod_relations(rhs, relations)
        if not diff.is_zero():
            residues.append(f"substitution {alg.format_monomial(lhs)}: {diff}")
    rng = options.rng(model, "algebra-relations")
    trials = max(1, config.RANDOM_TRIALS // 10)
    for trial in range(trials):
        residue = _reduction_residue(alg, relations, rng)
        if not residue.is_zero():
            residues.append(f"reduction trial {trial}: {residue}")
    notes = [f"{len(relations.annihilators)} annihilators, {len(relations.substitutions)} substitutions, "
             f"{trials} idempotence/linearity trials"]
    return _exact("algebra-relations", "algebra", residues, notes)


# ---------------------------------------------------------------------------
# verify bfv
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _solved_charge(model: ModelFile):
    cs = model.constraint_system()
    section = model.schema.constraints
    charge = build_initial_charge(cs, section.with_s1)
    return charge, solve_master_equation(charge, section.max_order, section.degree_bound)


def bfv_first_class(model: ModelFile, options: RunOptions) -> CheckRecord:
    report = verify_first_class(model.constraint_system())
    return _exact("bfv-first-class", "bfv", report.describe(), [f"{model.constraint_system().m} constraints"])


def bfv_master_equation(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    section = model.schema.constraints
    charge, result = _solved_charge(model)
    residual = graded_poisson(result.S, result.S)
    notes = [f"S = {result.S}", f"terminated at order {result.order} after {result.iterations} corrections",
             "{S,S} = 0 exactly" if residual.is_zero() else f"{{S,S}} = {residual}"]
    notes += [f"S^({k}) correction: {v}" for k, v in sorted(result.corrections.items())]
    if section.with_s1:
        from_s0 = solve_master_equation(build_initial_charge(cs, with_s1=False), section.max_order,
                                        section.degree_bound)
        rebuilt = BFVModel(cs, from_s0.S).component(1)
        same = rebuilt == charge.component(1)
        notes.append(f"from S0 alone: order {from_s0.order}, S^(1) = {rebuilt} "
                     f"({'matches' if same else 'differs from'} the ansatz)")
    return _exact("bfv-master-equation", "bfv", [] if residual.is_zero() else [str(residual)], notes)


def bfv_nilpotent_q(model: ModelFile, options: RunOptions) -> CheckRecord:
    _, result = _solved_charge(model)
    nil = check_q_nilpotent(BFVModel(model.constraint_system(), result.S))
    residues = [] if nil.ok else [f"Q^2({nil.generator}) = {nil.residue}"]
    return _exact("bfv-nilpotent-q", "bfv", residues, ["Q = {S, .} checked on every generator"])


def bfv_coisotropy(model: ModelFile, options: RunOptions) -> CheckRecord:
    _, result = _solved_charge(model)
    report = check_coisotropy_identity(BFVModel(model.constraint_system(), result.S))
    notes = [f"{{S0,S0}}_0 = {report.lhs}", f"2 (S0 d/dc)(d/db S1) = {report.contraction}"]
    return _exact("bfv-coisotropy", "bfv", [] if report.passed else [str(report.residue)], notes)


def bfv_jacobi(model: ModelFile, options: RunOptions) -> CheckRecord:
    alg = model.constraint_system().algebra
    rng = options.rng(model, "bfv-jacobi")
    residues = []
    for trial in range(JACOBI_TRIALS):
        degs = [(trial + k) % 3 - 1 for k in range(3)]
        F, G, K = (random_poly(alg, rng, 2, 3, degree=d) for d in degs)
        sign = -1 if (degs[0] % 2 and degs[1] % 2) else 1
        antisym = graded_poisson(F, G) + graded_poisson(G, F) * sign
        lhs = graded_poisson(F, graded_poisson(G, K))
        rhs = graded_poisson(graded_poisson(F, G), K) + graded_poisson(G, graded_poisson(F, K)) * sign
        for label, residue in (("antisymmetry", antisym), ("jacobi", lhs - rhs)):
            if not residue.is_zero():
                residues.append(f"{label} trial {trial}: {residue}")
    return _exact("bfv-jacobi", "bfv", residues, [f"{JACOBI_TRIALS} degree-homogeneous triples"])


def bfv_scaling(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    base = verify_first_class(cs).passed
    residues, notes = [], []
    for factor in SCALING_FACTORS:
        scaled = cs.scaled(factor)
        status = verify_first_class(scaled).passed
        if status != base:
            residues.append(f"scaling by {factor} changed first-class status to {status}")
            continue
        if base:
            diff = build_initial_charge(scaled, False).S - build_initial_charge(cs, False).S * factor
            if not diff.is_zero():
                residues.append(f"S0 is not linear under scaling by {factor}: {diff}")
        notes.append(f"scaled by {factor}: first class = {status}")
    return _exact("bfv-scaling", "bfv", residues, notes)


# ---------------------------------------------------------------------------
# verify toy
# ---------------------------------------------------------------------------

def _toy_inputs(model: ModelFile, options: RunOptions, check_id: str, cs: ConstraintSystem):
    """The model's own (s1, s2, g) triple, if declared, then seeded random ones."""
    triples = []
    s1, s2 = model.section_list("s1", cs), model.section_list("s2", cs)
    g = model.toy_function("g", cs)
    if s1 is not None and s2 is not None and g is not None:
        triples.append((s1, s2, g))
    rng = options.rng(model, check_id)
    toy = model.schema.toy
    trials = toy.trials if toy is not None and toy.trials else TOY_RANDOM_TRIALS
    for _ in range(trials):
        triples.append((random_section(cs, rng), random_section(cs, rng), random_function(cs, rng)))
    return triples


def alt1_commutator_defect(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    residues, nonzero = [], 0
    targets = [cs.var(n) for n in cs.phase_generators()] + list(cs.H)
    for i in range(cs.m):
        for j in range(i + 1, cs.m):
            for g in targets:
                defect = hamiltonian_commutator_defect(cs, i, j, g)
                nonzero += not defect.is_zero()
                diff = defect - expected_commutator_defect(cs, i, j, g)
                if not diff.is_zero():
                    residues.append(f"[X{i + 1},X{j + 1}]({g}) - f X({g}) differs by {diff}")
    notes = [f"{nonzero} nonzero defects ({'constant' if cs.is_constant_structure() else 'non-constant'} structure)"]
    return _exact("alt1-commutator-defect", "toy", residues, notes)


def alt1_leibniz(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    residues = []
    triples = _toy_inputs(model, options, "alt1-leibniz", cs)
    for n, (s1, s2, g) in enumerate(triples):
        defect = alt1_leibniz_defect(cs, s1, s2, g)
        if not defect.is_zero():
            residues.append(f"triple {n}: {defect}")
    return _exact("alt1-leibniz", "toy", residues, [f"{len(triples)} section/function triples"])


def alt1_anchor_defect_check(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    residues, notes = [], []
    triples = _toy_inputs(model, options, "alt1-anchor-defect", cs)
    units = [(Section.unit(cs, i), Section.unit(cs, j), cs.var(g))
             for i in range(cs.m) for j in range(i + 1, cs.m) for g in cs.phase_generators()]
    for n, (s1, s2, g) in enumerate(units + triples):
        defect = alt1_anchor_defect(cs, s1, s2, g)
        diff = defect - expected_anchor_defect(cs, s1, s2, g)
        if not diff.is_zero():
            residues.append(f"input {n}: defect {defect} vs closed form, difference {diff}")
        elif n < len(units) and not defect.is_zero():
            notes.append(f"s1 = {s1}, s2 = {s2}, g = {g}: defect {defect}")
    if cs.is_constant_structure():
        notes.append("constant structure functions: the anchor defect vanishes identically")
    return _exact("alt1-anchor-defect", "toy", residues, notes)


def alt1_q_square_check(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    q = Alt1Model(cs)
    residues, notes = [], []
    for name in cs.phase_generators():
        residue = alt1_q_square(q, name)
        if residue != expected_q_square_function(q, cs.var(name)):
            residues.append(f"Q^2({name}) = {residue} does not match the closed form")
        if not vanishes_on_shell(cs, residue):
            residues.append(f"Q^2({name}) = {residue} does not vanish on shell")
        if not residue.is_zero():
            notes.append(f"Q^2({name}) = {residue}, zero only on shell")
    for i in range(cs.m):
        residue = alt1_q_square(q, cs.c(i))
        if residue != expected_q_square_ghost(q, i):
            residues.append(f"Q^2(c{i + 1}) = {residue} does not match the closed form")
    notes.append(f"kappa = {KAPPA}")
    return _exact("alt1-q-square", "toy", residues, notes)


def alt1_kappa(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    solved, notes = {}, []
    for name in cs.phase_generators():
        # targets whose Q^2 does not depend on kappa do not fix it
        if alt1_q_square(Alt1Model(cs, Fraction(0)), name) == alt1_q_square(Alt1Model(cs, Fraction(1)), name):
            continue
        kappa = calibrate_kappa(cs, cs.var(name))
        if kappa is not None:
            solved[name] = kappa
    residues = [f"Q^2({n}) = 0 needs kappa = {k}" for n, k in solved.items() if k != KAPPA]
    if not solved and not cs.f:
        notes.append("no structure functions, kappa is not constrained")
    elif not solved:
        residues.append("no phase-space generator fixes kappa")
    notes.append(", ".join(f"{n}: kappa = {k}" for n, k in solved.items()) or "no calibration")
    verbatim = [f"Q^2({n}) = {r}" for n in cs.phase_generators()
                if not (r := alt1_q_square(Alt1Model(cs, KAPPA_VERBATIM), n)).is_zero()]
    notes.append(f"kappa = {KAPPA_VERBATIM} leaves " + ("; ".join(verbatim) if verbatim else "no residue"))
    return _exact("alt1-kappa", "toy", residues, notes)


def alt2_identities(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    rng = options.rng(model, "alt2-identities")
    residues = []
    for trial in range(config.ALT2_TRIALS):
        s1, s2 = random_section(cs, rng), random_section(cs, rng)
        g, a = random_function(cs, rng), random_function(cs, rng)
        report = alt2_checks(cs, s1, s2, g, arguments=[a])
        if not report.identities_hold:
            broken = [str(r) for r in [report.leibniz_residue, *report.homomorphism_residues] if not r.is_zero()]
            residues.append(f"trial {trial}: {broken[0]}")
    return _exact("alt2-identities", "toy", residues, [f"{config.ALT2_TRIALS} random triples"])


def alt2_witness(model: ModelFile, options: RunOptions) -> CheckRecord:
    cs = model.constraint_system()
    s = model.section_list("witness_section", cs) or Section.unit(cs, 0)
    g = model.toy_function("witness_function", cs)
    g = cs.x(0) if g is None else g
    a, defect = nonlinearity_witness(cs, s, g)
    if a is None:
        return _exact("alt2-witness", "toy", [f"no witness for s = {s}, g = {g}"])
    return CheckRecord("alt2-witness", "toy", True, str(defect),
                       notes=[f"s = {s}, g = {g}, a = {a}, defect {defect}",
                              "the anchor is not C-linear in the section"])


# ---------------------------------------------------------------------------
# verify formal, lattice
# ---------------------------------------------------------------------------

def _formal(check_id: str) -> CheckFn:
    def run(model: ModelFile, options: RunOptions) -> CheckRecord:
        section = model.schema.formal
        result = run_formal_check(check_id, section.budget if section is not None else None)
        return CheckRecord(check_id, "formal", result.passed, result.residual,
                           notes=list(result.notes), trace=result.trace_dicts())
    return run


def _lattice(check_id: str) -> CheckFn:
    def run(model: ModelFile, options: RunOptions) -> CheckRecord:
        settings = model.lattice_settings(sizes=options.sizes, seed=options.seed,
                                          fd_step=options.fd_step, k=options.k)
        result = run_lattice_check(check_id, settings)
        return CheckRecord(check_id, "lattice", result.passed, float(result.max_residual), result.est_order,
                           notes=list(result.notes), rows=result.rows)
    return run


CATALOGUE: Dict[str, Dict[str, CheckFn]] = {
    "algebra": {
        "algebra-properties": algebra_properties,
        "algebra-nilpotent": algebra_nilpotent,
        "algebra-relations": algebra_relations,
    },
    "bfv": {
        "bfv-first-class": bfv_first_class,
        "bfv-master-equation": bfv_master_equation,
        "bfv-nilpotent-q": bfv_nilpotent_q,
        "bfv-coisotropy": bfv_coisotropy,
        "bfv-jacobi": bfv_jacobi,
        "bfv-scaling": bfv_scaling,
    },
    "toy": {
        "alt1-commutator-defect": alt1_commutator_defect,
        "alt1-leibniz": alt1_leibniz,
        "alt1-anchor-defect": alt1_anchor_defect_check,
        "alt1-q-square": alt1_q_square_check,
        "alt1-kappa": alt1_kappa,
        "alt2-identities": alt2_identities,
        "alt2-witness": alt2_witness,
    },
    "formal": {check_id: _formal(check_id) for check_id in FORMAL_CHECK_IDS},
    "lattice": {check_id: _lattice(check_id) for check_id in LATTICE_CHECK_IDS},
}

VERB_OF: Dict[str, str] = {check_id: verb for verb, checks in CATALOGUE.items() for check_id in checks}


def checks_for(verb: str, only: Optional[str] = None) -> List[str]:
    if verb not in CATALOGUE:
        raise UnknownCheckError(verb)
    ids = list(CATALOGUE[verb])
    if only is None:
        return ids
    if only not in CATALOGUE[verb]:
        raise UnknownCheckError(only)
    return [only]


def run_check(model: ModelFile, check_id: str, options: Optional[RunOptions] = None) -> CheckRecord:
    """Dispatch one check. Failures come back as records; unusable input raises."""
    verb = VERB_OF.get(check_id)
    if verb is None:
        raise UnknownCheckError(check_id)
    options = options or RunOptions()
    logger.debug(f"Dispatching {check_id} to the {verb} checks")
    try:
        return CATALOGUE[verb][check_id](model, options)
    except FirstClassError as e:
        if verb == "bfv":
            first = next(iter(e.residues.values()), "")
            return CheckRecord(check_id, verb, False, str(first), notes=[e.message])
        raise


BRACKET_CONVENTION = "{x_i,p_j} = delta_ij, {c^i,b_j} = delta^i_j; derivations act from the left"
VERB_CONVENTIONS: Dict[str, List[str]] = {
    "algebra": ["Koszul sign (-1)^(|a||b|); derivations act from the left"],
    "bfv": [BRACKET_CONVENTION, "S^(1) = -1/2 f_ij^k b_k c^i c^j, sign fixed by {S,S} = 0"],
    "toy": [BRACKET_CONVENTION, f"X_i = {{H_i, .}}; ghost image Qc^i = kappa f^i_jk c^j c^k with kappa = {KAPPA}"],
    "formal": list(FORMAL_CONVENTIONS),
    "lattice": list(LATTICE_CONVENTIONS),
}


def conventions_for(check_ids: List[str]) -> List[str]:
    """Convention notes in force for a run, each listed once."""
    out: List[str] = []
    for verb in CATALOGUE:
        if any(VERB_OF.get(c) == verb for c in check_ids):
            out.extend(n for n in VERB_CONVENTIONS[verb] if n not in out)
    return out


def declared_checks(model: ModelFile) -> List[str]:
    """The checks a model file asks for: [meta].checks, else everything its sections support."""
    schema = model.schema
    if schema.meta.checks:
        unknown = [c for c in schema.meta.checks if c not in VERB_OF]
        if unknown:
            raise UnknownCheckError(unknown[0])
        return list(schema.meta.checks)
    ids: List[str] = []
    if schema.algebra is not None:
        ids += list(CATALOGUE["algebra"])
    if schema.constraints is not None:
        ids += list(CATALOGUE["bfv"]) + list(CATALOGUE["toy"])
    if schema.formal is not None:
        ids += schema.formal.checks or list(CATALOGUE["formal"])
    if schema.lattice is not None:
        ids += schema.lattice.checks or list(CATALOGUE["lattice"])
    for check_id in ids:
        if check_id not in VERB_OF:
            raise UnknownCheckError(check_id)
    return ids
