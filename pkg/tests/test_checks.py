import asyncio
from pathlib import Path

import pytest

from src.services.checks import (
    CATALOGUE,
    VERB_OF,
    CheckRecord,
    RunOptions,
    checks_for,
    conventions_for,
    declared_checks,
    run_check,
)
from src.services.model_file import load_model, parse_model
from src.utils.reliability import ConfigurationError, OddParameterError, UnknownCheckError

MODELS = Path(__file__).resolve().parents[1] / "models"


def load(name):
    return asyncio.run(load_model(str(MODELS / name)))


@pytest.fixture(scope="module")
def so3():
    return load("so3.model")


@pytest.fixture(scope="module")
def nonconstant():
    return load("nonconstant-f.model")


def test_catalogue_verbs():
    assert list(CATALOGUE) == ["algebra", "bfv", "toy", "formal", "lattice"]
    assert len(CATALOGUE["formal"]) == 8
    assert VERB_OF["alt2-witness"] == "toy"
    assert checks_for("bfv", "bfv-jacobi") == ["bfv-jacobi"]


def test_unknown_checks():
    with pytest.raises(UnknownCheckError):
        checks_for("bfv", "curvature")
    with pytest.raises(UnknownCheckError):
        checks_for("homology")
    with pytest.raises(UnknownCheckError):
        run_check(parse_model(b""), "holonomy")


@pytest.mark.parametrize("check_id", [*CATALOGUE["algebra"], *CATALOGUE["bfv"], *CATALOGUE["toy"]])
def test_exact_checks_pass_on_so3(so3, check_id):
    record = run_check(so3, check_id)
    assert record.passed, (record.max_residual, record.notes)
    assert record.max_residual == "0" or check_id == "alt2-witness"


@pytest.mark.parametrize("check_id", [*CATALOGUE["bfv"], *CATALOGUE["toy"]])
def test_exact_checks_pass_on_nonconstant_structure(nonconstant, check_id):
    record = run_check(nonconstant, check_id)
    assert record.passed, (record.max_residual, record.notes)


def test_master_equation_record(so3):
    record = run_check(so3, "bfv-master-equation")
    assert "{S,S} = 0 exactly" in record.notes
    assert any("from S0 alone" in note and "matches" in note for note in record.notes)


def test_nilpotency_expectations_are_checked(so3):
    record = run_check(so3, "algebra-nilpotent")
    assert any(note.startswith("ce: D^2 = 0") for note in record.notes)
    assert any(note.startswith("twisted: D^2(z)") for note in record.notes)
    flipped = parse_model(b"""
[algebra]
generators = { z = 0, c1 = 1 }
[algebra.derivations.d]
degree = 1
images = { z = "c1", c1 = "0" }
expect_nilpotent = false
""")
    record = run_check(flipped, "algebra-nilpotent")
    assert not record.passed
    assert "expected not nilpotent" in record.max_residual


def test_algebra_checks_fall_back_to_phase_space(nonconstant):
    record = run_check(nonconstant, "algebra-nilpotent")
    assert record.passed
    assert run_check(nonconstant, "algebra-relations").notes == ["no relations declared"]


def test_non_first_class_is_a_failure_not_an_error():
    model = load("non-first-class.model")
    first = run_check(model, "bfv-first-class")
    assert not first.passed and first.status == "fail"
    master = run_check(model, "bfv-master-equation")
    assert not master.passed
    assert "not first class" in master.notes[0]


def test_witness_on_nonconstant_fixture(nonconstant):
    record = run_check(nonconstant, "alt2-witness")
    cs = nonconstant.constraint_system()
    assert record.passed
    assert record.max_residual == str(cs.p(0))
    assert f"a = {cs.p(0)}" in record.notes[0]


def test_kappa_calibration_on_so3(so3):
    record = run_check(so3, "alt1-kappa")
    assert record.passed
    assert "x1: kappa = -1/2" in record.notes[0]
    assert record.notes[1].startswith("kappa = 1 leaves Q^2(")


def test_abelian_kappa_is_unconstrained():
    record = run_check(load("abelian.model"), "alt1-kappa")
    assert record.passed
    assert "not constrained" in record.notes[0]


def test_q_square_closes_on_shell(nonconstant):
    record = run_check(nonconstant, "alt1-q-square")
    assert record.passed
    assert any("zero only on shell" in note for note in record.notes)


def test_randomized_checks_follow_the_seed(so3):
    first = run_check(so3, "alt1-leibniz", RunOptions(seed=3))
    again = run_check(so3, "alt1-leibniz", RunOptions(seed=3))
    assert first.as_dict() == again.as_dict()


@pytest.mark.parametrize("check_id", ["ideal-preservation", "qtilde-nilpotency-control"])
def test_formal_checks_carry_traces(check_id):
    record = run_check(load("gr-formal.model"), check_id)
    assert record.passed
    assert record.trace and set(record.trace[0]) == {"rule", "before", "after"}


def test_lattice_options_override_the_model():
    model = load("lattice-default.model")
    with pytest.raises(OddParameterError):
        run_check(model, "q0defect", RunOptions(k=1))
    with pytest.raises(ConfigurationError):
        run_check(model, "curvature", RunOptions(sizes=(8, 16)))


@pytest.mark.slow
def test_lattice_record_has_rows_and_order():
    record = run_check(load("lattice-default.model"), "curvature")
    assert record.passed
    assert isinstance(record.max_residual, float)
    assert record.est_order is not None and 1.7 <= record.est_order <= 2.3
    assert {row.N for row in record.rows} == {8, 16, 32}


def test_record_dict_hides_runtime_unless_asked():
    record = CheckRecord("demo", "bfv", True, "0", runtime_ms=12.5)
    assert record.as_dict()["runtime_ms"] is None
    assert record.as_dict(timings=True)["runtime_ms"] == 12.5


def test_conventions_follow_the_verbs():
    notes = conventions_for(["bfv-first-class", "curvature"])
    assert any("S^(1)" in n for n in notes)
    assert any("Lie derivative term +L_{xi_d}" in n for n in notes)
    assert conventions_for([]) == []


def test_declared_checks():
    assert declared_checks(load("non-first-class.model")) == ["bfv-first-class", "bfv-master-equation"]
    so3_ids = declared_checks(load("so3.model"))
    assert so3_ids == [*CATALOGUE["algebra"], *CATALOGUE["bfv"], *CATALOGUE["toy"]]
    assert declared_checks(parse_model(b"[meta]\nname = 'empty'\n")) == []
    with pytest.raises(UnknownCheckError):
        declared_checks(parse_model(b"[meta]\nchecks = ['nope']\n"))
