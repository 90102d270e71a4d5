from fractions import Fraction

import numpy as np
import pytest

from src.algebra.bfv_finite import nonconstant_system, so3_system
from src.algebra.graded_core import apply_derivation, check_nilpotent, mul
from src.algebra.polyparse import parse_poly
from src.algebra.toy_algebroids import (
    KAPPA,
    KAPPA_VERBATIM,
    Alt1Model,
    Alt2Model,
    Section,
    alt1_anchor,
    alt1_anchor_defect,
    alt1_bracket,
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


@pytest.fixture
def so3():
    return so3_system()


@pytest.fixture
def nonconstant():
    return nonconstant_system()


def test_commutator_defect_vanishes_for_constant_structure(so3):
    for name in ("x1", "p2", "x3"):
        assert hamiltonian_commutator_defect(so3, 0, 1, so3.var(name)).is_zero()
    assert hamiltonian_commutator_defect(so3, 0, 1, so3.algebra.one()).is_zero()


def test_commutator_defect_nonconstant(nonconstant):
    cs = nonconstant
    g = cs.p(1)
    defect = hamiltonian_commutator_defect(cs, 0, 1, g)
    assert defect == cs.p(0)
    assert defect == expected_commutator_defect(cs, 0, 1, g)


def test_unit_section_bracket_reproduces_structure_constants(so3):
    bracket = alt1_bracket(so3, Section.unit(so3, 0), Section.unit(so3, 1))
    assert bracket == Section.unit(so3, 2)


def test_anchor_of_unit_section_on_constraint(so3):
    rho = alt1_anchor(so3, Section.unit(so3, 0))
    assert apply_derivation(rho, so3.H[1]) == so3.H[2]


def test_alt1_leibniz_holds_on_random_inputs(nonconstant):
    rng = np.random.default_rng(config.SEED)
    for _ in range(25):
        s1, s2 = random_section(nonconstant, rng), random_section(nonconstant, rng)
        g = random_function(nonconstant, rng)
        assert alt1_leibniz_defect(nonconstant, s1, s2, g).is_zero()


def test_anchor_defect_matches_closed_form(nonconstant):
    cs = nonconstant
    u1, u2 = Section.unit(cs, 0), Section.unit(cs, 1)
    defect = alt1_anchor_defect(cs, u1, u2, cs.p(1))
    assert defect == -cs.p(0)
    assert defect == expected_anchor_defect(cs, u1, u2, cs.p(1))
    assert alt1_anchor_defect(cs, u1, u2, cs.algebra.const(5)).is_zero()


def test_anchor_defect_closed_form_on_random_inputs(nonconstant):
    rng = np.random.default_rng(config.SEED + 2)
    for _ in range(10):
        s1, s2 = random_section(nonconstant, rng), random_section(nonconstant, rng)
        g = random_function(nonconstant, rng)
        assert alt1_anchor_defect(nonconstant, s1, s2, g) == expected_anchor_defect(nonconstant, s1, s2, g)


def test_anchor_defect_vanishes_for_constant_structure(so3):
    rng = np.random.default_rng(5)
    for _ in range(5):
        s1, s2 = random_section(so3, rng), random_section(so3, rng)
        assert alt1_anchor_defect(so3, s1, s2, random_function(so3, rng)).is_zero()


def test_q_square_on_functions(so3, nonconstant):
    assert alt1_q_square(Alt1Model(so3), "x1").is_zero()
    model = Alt1Model(nonconstant)
    residue = alt1_q_square(model, "p2")
    assert residue == parse_poly(nonconstant.algebra, "p1*c1*c2")
    assert residue == expected_q_square_function(model, nonconstant.p(1))
    assert vanishes_on_shell(nonconstant, residue)


@pytest.mark.parametrize("name", ["x1", "x2", "p1", "p2"])
def test_q_square_residues_close_on_shell(nonconstant, name):
    residue = alt1_q_square(Alt1Model(nonconstant), name)
    assert vanishes_on_shell(nonconstant, residue)


@pytest.mark.parametrize("kappa", [KAPPA, KAPPA_VERBATIM, Fraction(3)])
def test_q_square_on_ghosts_matches_reindexed_formula(so3, nonconstant, kappa):
    for cs in (so3, nonconstant):
        model = Alt1Model(cs, kappa)
        for i in range(cs.m):
            assert alt1_q_square(model, cs.c(i)) == expected_q_square_ghost(model, i)


def test_kappa_calibration(so3):
    assert calibrate_kappa(so3, so3.x(0)) == KAPPA
    assert not alt1_q_square(Alt1Model(so3, KAPPA_VERBATIM), "x1").is_zero()
    # constant structure: the calibrated Q passes on every generator
    assert check_nilpotent(Alt1Model(so3).q()).ok


def test_alt2_witness(nonconstant):
    cs = nonconstant
    a, defect = nonlinearity_witness(cs, Section.unit(cs, 0), cs.x(0))
    assert a == cs.p(0)
    assert defect == cs.p(0)
    assert nonlinearity_witness(cs, Section.unit(cs, 0), cs.algebra.const(3)) == (None, None)
    assert Alt2Model(cs).anchor(Section.unit(cs, 0), cs.p(0)).is_zero()
    assert Alt2Model(cs).bracket(Section.unit(cs, 0), Section.unit(cs, 1)) == mul(cs.x(1), cs.p(0))


def test_alt2_identities_on_random_triples(so3):
    rng = np.random.default_rng(config.SEED)
    for _ in range(config.ALT2_TRIALS):
        s1, s2 = random_section(so3, rng), random_section(so3, rng)
        g, a = random_function(so3, rng), random_function(so3, rng)
        report = alt2_checks(so3, s1, s2, g, arguments=[a])
        assert report.identities_hold
        assert report.leibniz_residue.is_zero()


def test_alt2_report_carries_witness(nonconstant):
    cs = nonconstant
    report = alt2_checks(cs, Section.unit(cs, 0), Section.unit(cs, 1), cs.x(0))
    assert report.identities_hold
    assert report.witness == cs.p(0)
    assert report.witness_defect == cs.p(0)
