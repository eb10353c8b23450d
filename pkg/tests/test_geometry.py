import math

import numpy as np
import pytest

from driftlab.algebra import FTPolynomial
from driftlab.errors import (
    NewtonDivergenceError,
    OutOfDomainError,
    SingularFrequencyError,
)
from driftlab.geometry import (
    IntegrableModel,
    NearIntegrableSystem,
    ResonanceModule,
    action_from_frequency,
    diagonal_quadratic,
    frequency,
    hessian,
    isotropic_quadratic,
    model_from_spec,
    nearest_resonant_point,
    quasiconvexity_margin,
    resonance_distance,
)


def cubic_model(R=2.0):
    # h = |I|^2/2 + I1^3/6
    h = FTPolynomial.quadratic_action(np.eye(2)) + FTPolynomial(
        2, {((0, 0), (3, 0)): 1.0 / 6.0}
    )
    return IntegrableModel(h, R=R)


# ------------------------------------------------------------------ frequency

def test_frequency_identity_map():
    model = isotropic_quadratic(2)
    got = frequency(model, [0.3, -0.1])
    np.testing.assert_allclose(got, [0.3, -0.1], atol=1e-15)


def test_frequency_constant_for_linear():
    model = IntegrableModel(FTPolynomial.linear_action([0.7, -0.2]), R=1.0)
    np.testing.assert_allclose(frequency(model, [0.1, 0.1]), [0.7, -0.2], atol=1e-15)


def test_frequency_cubic_hand_value():
    model = cubic_model()
    np.testing.assert_allclose(frequency(model, [1.0, 0.0]), [1.5, 0.0], atol=1e-14)


def test_frequency_out_of_domain():
    model = isotropic_quadratic(2, R=0.5)
    with pytest.raises(OutOfDomainError):
        frequency(model, [1.0, 0.0])


def test_frequency_and_hessian_match_finite_differences(rng):
    model = cubic_model()
    zero = np.zeros(2)
    for _ in range(10):
        action = rng.uniform(-1, 1, 2)
        delta = 1e-5
        fd_grad = np.empty(2)
        fd_hess = np.empty((2, 2))
        for i in range(2):
            e = np.zeros(2)
            e[i] = delta
            fd_grad[i] = (
                model.h.evaluate(zero, action + e) - model.h.evaluate(zero, action - e)
            ) / (2 * delta)
            for j in range(2):
                ej = np.zeros(2)
                ej[j] = delta
                fd_hess[i, j] = (
                    model.h.evaluate(zero, action + e + ej)
                    - model.h.evaluate(zero, action + e - ej)
                    - model.h.evaluate(zero, action - e + ej)
                    + model.h.evaluate(zero, action - e - ej)
                ) / (4 * delta**2)
        np.testing.assert_allclose(frequency(model, action), fd_grad, rtol=1e-7, atol=1e-7)
        np.testing.assert_allclose(hessian(model, action), fd_hess, rtol=1e-5, atol=1e-5)


# ------------------------------------------------------------- quasiconvexity

def test_margin_identity_hessian():
    model = isotropic_quadratic(2)
    got = quasiconvexity_margin(model, [0.5, 0.2], 0.2, 5)
    assert got == pytest.approx(1.0, abs=1e-12)


def test_margin_linear_model_degenerate():
    model = IntegrableModel(FTPolynomial.linear_action([1.0, 0.5]), R=1.0)
    got = quasiconvexity_margin(model, [0.2, 0.2], 0.1, 3)
    assert got == pytest.approx(0.0, abs=1e-14)


def min_eig_oracle(mat):
    # roots of the characteristic polynomial, independent of eigvalsh
    return float(np.min(np.real(np.roots(np.poly(mat)))))


def test_margin_anisotropic_against_eig_oracle():
    model = diagonal_quadratic([1.0, 2.0])
    center, radius, g = np.array([1.0, 0.0]), 0.2, 4
    got = quasiconvexity_margin(model, center, radius, g)
    assert 1.0 < got <= 2.0
    # brute-force oracle over the same grid
    axes = [np.linspace(c - radius, c + radius, g) for c in center]
    worst = np.inf
    for a1 in axes[0]:
        for a2 in axes[1]:
            w = np.array([a1, 2.0 * a2])
            u = w / np.linalg.norm(w)
            v = np.array([-u[1], u[0]])
            H = np.diag([1.0, 2.0])
            worst = min(worst, min_eig_oracle(np.array([[v @ H @ v]])))
    assert got == pytest.approx(worst, rel=1e-12)


def test_margin_singular_gradient():
    model = isotropic_quadratic(2)
    with pytest.raises(SingularFrequencyError):
        quasiconvexity_margin(model, [0.0, 0.0], 0.0, 1)


def test_margin_monotone_under_nested_grids():
    model = diagonal_quadratic([1.0, 3.0])
    vals = [quasiconvexity_margin(model, [0.6, 0.3], 0.25, g) for g in (3, 5, 9)]
    assert vals[0] >= vals[1] >= vals[2]


# ------------------------------------------------------------- map inversion

def test_action_from_frequency_identity():
    model = isotropic_quadratic(2)
    got = action_from_frequency(model, [0.4, 0.2], [0.0, 0.0])
    np.testing.assert_allclose(got, [0.4, 0.2], atol=1e-12)


def test_action_from_frequency_round_trip(rng):
    model = cubic_model()
    for _ in range(10):
        target = rng.uniform(-0.6, 0.6, 2)
        omega = frequency(model, target)
        got = action_from_frequency(model, omega, target + 0.01)
        np.testing.assert_allclose(got, target, atol=1e-10)
        assert np.max(np.abs(frequency(model, got) - omega)) <= 1e-12 * (
            1 + np.max(np.abs(omega))
        )


def test_action_from_frequency_singular():
    model = IntegrableModel(FTPolynomial.linear_action([1.0, 0.0]), R=1.0)
    with pytest.raises(NewtonDivergenceError) as err:
        action_from_frequency(model, [0.5, 0.5], [0.1, 0.1])
    assert err.value.last_iterate is not None


# --------------------------------------------------------- resonance distance

def test_resonance_distance_trivial_module():
    model = isotropic_quadratic(2)
    mod = ResonanceModule([], dims=2)
    assert resonance_distance(model, [0.3, 0.1], mod) == 0.0


def test_resonance_distance_coordinate_plane():
    model = isotropic_quadratic(2)
    mod = ResonanceModule([[1, 0]], dims=2)
    assert resonance_distance(model, [0.3, 0.5], mod) == pytest.approx(0.3, abs=1e-12)
    point = nearest_resonant_point(model, [0.3, 0.5], mod)
    np.testing.assert_allclose(point, [0.0, 0.5], atol=1e-12)


def test_resonance_distance_membership():
    model = isotropic_quadratic(2)
    mod = ResonanceModule([[1, -1]], dims=2)
    assert resonance_distance(model, [0.2, 0.2], mod) == pytest.approx(0.0, abs=1e-12)


def test_resonance_distance_nonquadratic_matches_exact():
    # cubic h but the module only constrains I2: surface {I2 = 0}
    model = cubic_model()
    mod = ResonanceModule([[0, 1]], dims=2)
    got, gap = resonance_distance(model, [0.5, 0.4], mod, full_output=True)
    assert got == pytest.approx(0.4, abs=1e-6)
    assert gap <= 1e-6


# -------------------------------------------------------------------- plumbing

def test_model_spec_round_trip():
    model = diagonal_quadratic([1.0, 2.0], R=1.5)
    data = model.to_json_dict()
    back = IntegrableModel.from_json_dict(data)
    assert back.h == model.h
    assert back.R == model.R


def test_model_from_spec_builtin():
    model = model_from_spec({"kind": "isotropic_quadratic", "n": 3, "R": 2.0})
    assert model.dims == 3 and model.R == 2.0


def test_system_hamiltonian_combines_parts():
    model = isotropic_quadratic(2)
    f = FTPolynomial.cosine([1, 0], amplitude=1e-3)
    system = NearIntegrableSystem(model, f, k_reg=3, eps=1e-3)
    H = system.hamiltonian
    got = H.evaluate([0.0, 0.0], [0.5, 0.0])
    assert got == pytest.approx(0.5**2 / 2 + 1e-3, abs=1e-15)
