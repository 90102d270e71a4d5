import numpy as np
import pytest

from src.lattice.brackets import (
    BracketTestData,
    ConstraintFunctional,
    compare_with_oracle,
    flow_scheme_gap,
    hamiltonian_flow,
    poisson_bracket,
    relation_defects,
    select_fd_step,
)
from src.lattice.fields import TrigField, VectorTrig, random_continuum_state
from src.lattice.state import LatticeState
from src.lattice.torus import Torus

TWO_PI = 2.0 * np.pi


@pytest.fixture
def small_state():
    rng = np.random.default_rng(17)
    torus = Torus(2, 6)
    return LatticeState.sample(torus, random_continuum_state(rng, 2)), BracketTestData.random(rng, 2)


def _functionals(state, tests):
    torus = state.torus
    return {
        "Hx": ConstraintFunctional.momentum(tests.X.values(torus), "Hd(X)"),
        "Hy": ConstraintFunctional.momentum(tests.Y.values(torus), "Hd(Y)"),
        "Hphi": ConstraintFunctional.energy(tests.phi.values(torus), "Hn(phi)"),
        "Hpsi": ConstraintFunctional.energy(tests.psi.values(torus), "Hn(psi)"),
    }


def test_flow_without_smearing_is_zero(small_state):
    state, _ = small_state
    d_h, d_pi = hamiltonian_flow(state)
    assert d_h.is_zero() and d_pi.is_zero()


def test_energy_flow_on_flat_data():
    torus = Torus(2, 32)
    phi = TrigField.random(np.random.default_rng(4), 2)
    d_h, d_pi = hamiltonian_flow(LatticeState.flat(torus), phi=phi.values(torus))
    assert np.allclose(d_h.body, 0.0)
    trace = np.trace(d_pi.body, axis1=-2, axis2=-1)
    assert np.max(np.abs(trace + phi.laplacian(torus))) < 0.02 * TWO_PI ** 2 * 2.0 * phi.bound()


def test_momentum_flow_of_flat_metric_is_symmetrized_gradient():
    torus = Torus(2, 8)
    X = VectorTrig.random(np.random.default_rng(8), 2).values(torus)
    d_h, d_pi = hamiltonian_flow(LatticeState.flat(torus), X=X)
    jac = np.stack([torus.partial(X, c) for c in range(2)], axis=-2)
    assert np.allclose(d_h.body, jac + np.swapaxes(jac, -1, -2))
    assert np.allclose(d_pi.body, 0.0)


def test_bracket_is_antisymmetric(small_state):
    state, tests = small_state
    f = _functionals(state, tests)
    for a, b in (("Hx", "Hy"), ("Hx", "Hphi"), ("Hphi", "Hpsi")):
        forward = poisson_bracket(f[a], f[b], state)
        assert forward == pytest.approx(-poisson_bracket(f[b], f[a], state), abs=1e-12)
    assert poisson_bracket(f["Hphi"], f["Hphi"], state) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("pair", [("Hx", "Hy"), ("Hx", "Hphi"), ("Hphi", "Hpsi")])
def test_analytic_bracket_matches_finite_differences(small_state, pair):
    state, tests = small_state
    f = _functionals(state, tests)
    comparison = compare_with_oracle(f[pair[0]], f[pair[1]], state, np.random.default_rng(0), step=1e-4)
    assert comparison.relative_error < 1e-5
    gap = abs(comparison.analytic - comparison.fd)
    assert comparison.bracket_error == pytest.approx(gap / max(abs(comparison.analytic), abs(comparison.fd)))
    assert comparison.relative_error <= comparison.bracket_error


def test_step_sweep_picks_a_listed_step(small_state):
    state, tests = small_state
    sweep = select_fd_step(_functionals(state, tests)["Hphi"], state, np.random.default_rng(1))
    assert sweep.step in sweep.estimates
    assert len(sweep.estimates) == 7


@pytest.mark.slow
def test_constraint_algebra_defects_shrink():
    rng = np.random.default_rng(23)
    continuum = random_continuum_state(rng, 2)
    tests = BracketTestData.random(rng, 2)
    coarse = relation_defects(continuum, tests, Torus(2, 16))
    fine = relation_defects(continuum, tests, Torus(2, 32))
    for name, value in fine.items():
        assert value < max(coarse[name] / 3.0, 1e-10)


@pytest.mark.slow
def test_flow_schemes_agree_in_the_limit():
    rng = np.random.default_rng(29)
    continuum = random_continuum_state(rng, 2)
    phi, X = TrigField.random(rng, 2), VectorTrig.random(rng, 2)
    coarse = flow_scheme_gap(continuum, phi, X, Torus(2, 16))
    fine = flow_scheme_gap(continuum, phi, X, Torus(2, 32))
    assert fine < coarse / 3.0
