import numpy as np
import pytest

from src.lattice.convergence import ConvergenceStudy, validate_sizes
from src.lattice.suite import LATTICE_CHECK_IDS, LatticeSettings, run_lattice_check
from src.utils.reliability import ConfigurationError, OddParameterError, UnknownCheckError


@pytest.mark.parametrize("sizes", [(8, 16), (2, 8, 16), (8, 8, 16)])
def test_invalid_size_lists(sizes):
    with pytest.raises(ConfigurationError):
        validate_sizes(sizes)


def test_sizes_are_sorted():
    assert validate_sizes([32, 8, 16]) == [8, 16, 32]


def test_settings_validation():
    with pytest.raises(ConfigurationError):
        LatticeSettings(d=4)
    with pytest.raises(ConfigurationError):
        LatticeSettings(k=5)


def test_second_order_study_passes():
    study = ConvergenceStudy("demo", [8, 16, 32], [1e-2, 2.5e-3, 6.25e-4], band=(1.7, 2.3), floor=1e-10)
    assert study.fitted_order == pytest.approx(2.0)
    assert study.passed
    rows = study.rows
    assert rows[0].est_order is None
    assert rows[2].est_order == pytest.approx(2.0)


def test_first_order_study_fails():
    study = ConvergenceStudy("demo", [8, 16, 32], [1e-2, 5e-3, 2.5e-3], band=(1.7, 2.3), floor=1e-10)
    assert not study.passed


def test_finest_pair_fit_ignores_the_coarse_grid():
    defects = [1e-1, 4e-3, 1e-3]
    everything = ConvergenceStudy("demo", [8, 16, 32], defects, band=(1.7, 2.3), floor=1e-10)
    finest = ConvergenceStudy("demo", [8, 16, 32], defects, band=(1.7, 2.3), floor=1e-10, fit="finest")
    assert everything.fitted_order > 2.3 and not everything.passed
    assert finest.fitted_order == pytest.approx(2.0)
    assert finest.passed
    assert "(finest pair)" in finest.describe()


def test_roundoff_study_passes_without_an_order():
    study = ConvergenceStudy("demo", [8, 16, 32], [1e-15, 3e-15, 2e-15], band=(1.7, 2.3), floor=1e-10)
    assert study.roundoff and study.passed
    assert study.fitted_order is None
    assert "round-off" in study.describe()


def test_non_convergence_expectation():
    flat = ConvergenceStudy("flat", [8, 16, 32], [0.3, 0.31, 0.31], band=(1.7, 2.3), floor=1e-10,
                            expect_convergence=False)
    assert flat.passed
    vanishing = ConvergenceStudy("vanishing", [8, 16, 32], [1e-16] * 3, band=(1.7, 2.3), floor=1e-10,
                                 expect_convergence=False)
    assert not vanishing.passed


def test_unknown_lattice_check():
    with pytest.raises(UnknownCheckError):
        run_lattice_check("holonomy")


def test_catalogue():
    assert LATTICE_CHECK_IDS == ["curvature", "brackets", "oracle", "flow-consistency", "q0defect", "anchor"]


def test_ghost_checks_need_two_parameters():
    settings = LatticeSettings(d=2, sizes=(8, 16, 32), k=1)
    for check_id in ("q0defect", "anchor"):
        with pytest.raises(OddParameterError):
            run_lattice_check(check_id, settings)


@pytest.mark.slow
@pytest.mark.parametrize("check_id", ["curvature", "brackets", "flow-consistency", "anchor"])
def test_lattice_checks_pass_at_default_sizes(check_id):
    result = run_lattice_check(check_id, LatticeSettings(d=2, sizes=(8, 16, 32), seed=20240917))
    assert result.passed, result.notes
    assert result.rows
    assert all(row.N in (8, 16, 32) for row in result.rows)


@pytest.mark.slow
def test_q0defect_reports_flipped_sign_and_degree_notes():
    result = run_lattice_check("q0defect", LatticeSettings(d=2, sizes=(8, 16, 32), k=2))
    assert result.passed, result.notes
    assert any("vanish by degree" in note for note in result.notes)
    assert any("flipped Lie sign" in note for note in result.notes)
    assert any("response to Pi -> Pi/2" in note for note in result.notes)
    names = {study.name for study in result.studies}
    assert {"q0defect:Pi-half-momentum", "q0defect:Pi-on-shell"} <= names


@pytest.mark.slow
def test_q0defect_triple_ghost_components_converge():
    result = run_lattice_check("q0defect", LatticeSettings(d=2, sizes=(8, 16, 32), k=3))
    assert result.passed, result.notes
    studies = {study.name: study for study in result.studies}
    for name in ("q0defect:xiN", "q0defect:xiP"):
        assert not studies[name].roundoff
        assert 1.7 <= studies[name].fitted_order <= 2.3


@pytest.mark.parametrize("check_id", ["curvature", "brackets", "q0defect"])
def test_three_dimensional_checks_run(check_id):
    sizes = (4, 6, 8)
    result = run_lattice_check(check_id, LatticeSettings(d=3, sizes=sizes, k=2))
    assert result.rows
    assert {row.N for row in result.rows} == set(sizes)
    assert all(np.isfinite(row.defect_norm) for row in result.rows)
    assert all(len(study.defects) == 3 for study in result.studies)


@pytest.mark.slow
def test_oracle_check_on_a_few_states():
    result = run_lattice_check("oracle", LatticeSettings(oracle_states=3, fd_step=1e-4))
    assert result.passed, result.notes
    assert len(result.rows) == 3
    assert result.est_order is None
    assert "relative to the bracket value" in result.notes[0]
