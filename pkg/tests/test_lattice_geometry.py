import numpy as np
import pytest

from src.lattice.constraints import constraint_density, constraint_functional, energy_density, momentum_covector
from src.lattice.fields import TrigField, VectorTrig, conformal_factor, conformal_values, random_metric
from src.lattice.geometry import check_spd, compute_curvature, curvature, lie_bracket, lie_derivative
from src.lattice.odd import OddCoefficient
from src.lattice.state import LatticeState
from src.lattice.torus import Torus
from src.utils.reliability import ConfigurationError, NonSPDError, UnsupportedKindError

TWO_PI = 2.0 * np.pi


@pytest.mark.parametrize("d", [2, 3])
def test_flat_metric_has_no_curvature(d):
    torus = Torus(d, 6)
    pack = curvature(torus, LatticeState.flat(torus).h)
    assert np.allclose(pack.Gamma.body, 0.0)
    assert np.allclose(pack.R.body, 0.0)
    assert np.allclose(pack.vol.body, 1.0)


def test_torus_rejects_bad_dimensions():
    with pytest.raises(ConfigurationError):
        Torus(4, 8)
    with pytest.raises(ConfigurationError):
        Torus(2, 3)


@pytest.mark.parametrize("d", [2, 3])
def test_conformal_scalar_curvature_converges(d):
    lam = conformal_factor(d)
    errors = []
    for n in (16, 32):
        torus = Torus(d, n)
        pack = curvature(torus, conformal_values(torus, lam))
        grad, lap = lam.gradient(torus), lam.laplacian(torus)
        exact = -np.exp(-2.0 * lam.values(torus)) * (
            2.0 * (d - 1) * lap + (d - 1) * (d - 2) * np.sum(grad ** 2, axis=-1))
        errors.append(torus.rms(pack.R.body - exact))
    assert errors[1] < errors[0] / 3.0


def test_einstein_tensor_shrinks_in_two_dimensions():
    metric = random_metric(np.random.default_rng(5), 2)
    norms = []
    for n in (16, 32):
        torus = Torus(2, n)
        norms.append(torus.rms(curvature(torus, metric.values(torus)).G.body))
    assert norms[1] < max(norms[0] / 3.0, 1e-10)


def test_extrinsic_curvature_of_trace_momentum():
    torus = Torus(3, 4)
    state = LatticeState.flat(torus)
    state = state.replace(Pi=OddCoefficient.even(np.broadcast_to(np.eye(3), torus.grid + (3, 3)) * 2.0))
    pack = compute_curvature(state)
    assert np.allclose(pack.K.body, -(2.0 * np.eye(3) - np.eye(3) * 6.0 / 2.0))


def test_scalar_lie_derivative_along_constant_field():
    torus = Torus(2, 32)
    x, _ = torus.coords()
    f = np.sin(TWO_PI * x)
    out = lie_derivative(torus, "scalar", np.broadcast_to([1.0, 0.0], torus.grid + (2,)), f)
    assert np.max(np.abs(out.body - TWO_PI * np.cos(TWO_PI * x))) < 0.05


def test_lie_bracket_example():
    torus = Torus(2, 32)
    x, _ = torus.coords()
    X = np.broadcast_to([1.0, 0.0], torus.grid + (2,))
    Y = np.stack([np.zeros_like(x), np.sin(TWO_PI * x)], axis=-1)
    out = lie_bracket(torus, X, Y).body
    assert np.allclose(out[..., 0], 0.0)
    assert np.max(np.abs(out[..., 1] - TWO_PI * np.cos(TWO_PI * x))) < 0.05
    assert np.allclose(lie_bracket(torus, Y, X).body, -out)


def test_lie_derivative_of_constant_metric_along_constant_field():
    torus = Torus(2, 6)
    X = np.broadcast_to([0.3, -0.7], torus.grid + (2,))
    h = LatticeState.flat(torus).h
    for kind in ("metric", "sym2_density"):
        assert np.allclose(lie_derivative(torus, kind, X, h).body, 0.0)


def test_unknown_lie_kind():
    torus = Torus(2, 4)
    with pytest.raises(UnsupportedKindError):
        lie_derivative(torus, "spinor", np.zeros(torus.grid + (2,)), np.zeros(torus.grid))


def test_indefinite_metric_is_rejected():
    torus = Torus(2, 4)
    h = np.broadcast_to(np.diag([1.0, -1.0]), torus.grid + (2, 2)).copy()
    with pytest.raises(NonSPDError):
        check_spd(OddCoefficient.even(h))


@pytest.mark.parametrize("d, expected", [(2, -2.0), (3, -1.5)])
def test_energy_constraint_of_constant_trace_momentum(d, expected):
    torus = Torus(d, 4)
    c = 0.8
    eye = np.broadcast_to(np.eye(d), torus.grid + (d, d)).copy()
    state = LatticeState.from_arrays(torus, eye, c * eye)
    assert constraint_functional(state, phi=np.ones(torus.grid)) == pytest.approx(expected * c ** 2)
    assert np.allclose(energy_density(state).body, expected * c ** 2)


def test_momentum_constraint_vanishes_for_constant_data():
    torus = Torus(2, 8)
    rng = np.random.default_rng(2)
    pi = rng.standard_normal((2, 2))
    pi = np.broadcast_to(pi + pi.T, torus.grid + (2, 2)).copy()
    eye = np.broadcast_to(np.eye(2), torus.grid + (2, 2)).copy()
    state = LatticeState.from_arrays(torus, eye, pi)
    assert np.allclose(momentum_covector(state).body, 0.0)
    X = VectorTrig.random(rng, 2).values(torus)
    assert abs(constraint_functional(state, X=X)) < 1e-10


def test_constraint_density_needs_exactly_one_smearing():
    torus = Torus(2, 4)
    state = LatticeState.flat(torus)
    with pytest.raises(ValueError):
        constraint_density(state)
    with pytest.raises(ValueError):
        constraint_density(state, phi=np.ones(torus.grid), X=np.ones(torus.grid + (2,)))


def test_trig_field_gradient_matches_differences():
    rng = np.random.default_rng(9)
    f = TrigField.random(rng, 2)
    torus = Torus(2, 64)
    approx = np.stack([torus.partial(f.values(torus), c) for c in range(2)], axis=-1)
    assert np.max(np.abs(approx - f.gradient(torus))) < 0.01 * TWO_PI * f.bound()
