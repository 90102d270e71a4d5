import numpy as np
import pytest

from src.lattice.constraints import energy_density, momentum_covector
from src.lattice.fields import ContinuumState, TrigField, VectorTrig, random_continuum_state
from src.lattice.geometry import lie_derivative
from src.lattice.ghosts import (
    PAIR,
    GhostTestData,
    anchor_defect,
    apply_q,
    polarize,
    q0_defect_components,
    q0_square_components,
    q_square,
)
from src.lattice.odd import mask
from src.lattice.state import LatticeState
from src.lattice.torus import Torus
from src.utils.reliability import ConfigurationError, OddParameterError


@pytest.fixture
def rng():
    return np.random.default_rng(41)


def test_ghost_number_one_image_of_lapse_ghost(rng):
    torus = Torus(2, 8)
    phi1, phi2 = (TrigField.random(rng, 2).values(torus) for _ in range(2))
    X1 = VectorTrig.random(rng, 2).values(torus)
    state = LatticeState.flat(torus).lifted(3)
    state = state.replace(xiN=polarize([phi1, phi2], 2), xiP=polarize([X1, np.zeros_like(X1)], 2))
    image = apply_q(state)["xiN"]
    assert np.allclose(image.component(PAIR), lie_derivative(torus, "scalar", X1, phi2).body)
    assert np.allclose(image.component(mask(1)), 0.0)


def test_polarize_needs_enough_parameters():
    with pytest.raises(OddParameterError):
        polarize([np.zeros(3)] * 3, 2)


def test_constraint_images_without_ghosts(rng):
    torus = Torus(2, 8)
    state = LatticeState.sample(torus, random_continuum_state(rng, 2))
    for which in ("Q0", "BFV"):
        images = apply_q(state, which)
        assert images["h"].is_zero() and images["Pi"].is_zero()
        assert np.allclose(images["chiN"].body, energy_density(state).body)
        assert np.allclose(images["chiP"].body, momentum_covector(state).body)


def test_unknown_vector_field_name():
    with pytest.raises(ConfigurationError):
        apply_q(LatticeState.flat(Torus(2, 4)), "Q1")


def test_square_of_ghost_free_state_vanishes_on_ghosts(rng):
    torus = Torus(2, 6)
    square = q_square(LatticeState.sample(torus, random_continuum_state(rng, 2)))
    for name in ("xiN", "xiP", "h", "Pi"):
        assert np.allclose(square[name].data, 0.0)


def test_anchor_defect_vanishes_for_equal_smearings(rng):
    base = random_continuum_state(rng, 2)
    continuum = ContinuumState(base.h, base.Pi, VectorTrig.random(rng, 2))
    f = TrigField.random(rng, 2)
    defect, target = anchor_defect(continuum, f, f, Torus(2, 8))
    assert defect < 1e-12
    assert target == 0.0


def test_anchor_needs_covector_ghost_data(rng):
    continuum = random_continuum_state(rng, 2)
    f = TrigField.random(rng, 2)
    with pytest.raises(ConfigurationError):
        anchor_defect(continuum, f, f, Torus(2, 8))


def test_q0_defect_needs_two_parameters(rng):
    with pytest.raises(OddParameterError):
        q0_defect_components(random_continuum_state(rng, 2), GhostTestData.random(rng, 2, 1), Torus(2, 8), 1)


def test_ghost_components_vanish_by_degree_for_two_parameters(rng):
    continuum = random_continuum_state(rng, 2)
    defects = q0_defect_components(continuum, GhostTestData.random(rng, 2, 2), Torus(2, 8), 2)
    assert defects["xiN"] < 1e-10
    assert defects["xiP"] < 1e-10


@pytest.mark.slow
def test_q0_square_defects_shrink(rng):
    continuum = random_continuum_state(rng, 2)
    tests = GhostTestData.random(rng, 2, 2)
    coarse = q0_defect_components(continuum, tests, Torus(2, 16), 2)
    fine = q0_defect_components(continuum, tests, Torus(2, 32), 2)
    for name in ("h", "Pi"):
        assert fine[name] < max(coarse[name] / 3.0, 1e-10)


@pytest.mark.slow
def test_flipped_lie_sign_leaves_a_finite_defect(rng):
    continuum = random_continuum_state(rng, 2)
    tests = GhostTestData.random(rng, 2, 2)
    coarse = q0_defect_components(continuum, tests, Torus(2, 16), 2, lie_sign=-1.0)
    fine = q0_defect_components(continuum, tests, Torus(2, 32), 2, lie_sign=-1.0)
    assert fine["h"] > coarse["h"] / 2.0


def test_pi_component_splits_into_target_and_residual(rng):
    base = random_continuum_state(rng, 2)
    tests = GhostTestData.random(rng, 2, 2)
    torus = Torus(2, 8)
    arrays = q0_square_components(base, tests, torus, 2)
    assert np.allclose(arrays["Pi"], arrays["Pi_raw"] - arrays["Pi_target"])
    on_shell = q0_square_components(ContinuumState(base.h, base.Pi.scaled(0.0)), tests, torus, 2)
    assert np.max(np.abs(on_shell["Pi_target"])) < 1e-12


@pytest.mark.slow
def test_triple_ghost_components_shrink(rng):
    continuum = random_continuum_state(rng, 2)
    tests = GhostTestData.random(rng, 2, 3)
    coarse = q0_defect_components(continuum, tests, Torus(2, 16), 3)
    fine = q0_defect_components(continuum, tests, Torus(2, 32), 3)
    for name in ("xiN", "xiP"):
        assert coarse[name] > 1e-8
        assert fine[name] < coarse[name] / 3.0
