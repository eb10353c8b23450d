import math

import numpy as np
import pytest

from driftlab.diophantine import (
    PeriodicOrbitApprox,
    dirichlet_approx,
    dirichlet_approx_in_subspace,
    dirichlet_bound,
    dirichlet_budget,
    integer_nullspace,
    periodic_action,
)
from driftlab.geometry import diagonal_quadratic, isotropic_quadratic


def exhaustive_oracle(omega, Q):
    """Independent scan: (best_err, best_q), normalizing by the largest entry."""
    omega = np.asarray(omega, dtype=float)
    j = int(np.argmax(np.abs(omega)))
    ratios = omega / omega[j]
    best_err, best_q = math.inf, None
    for q in range(1, math.ceil(Q) + 1):
        err = max(abs(q * r - round(q * r)) for r in ratios)
        if err < best_err:
            best_err, best_q = err, q
    return best_err, best_q


# ------------------------------------------------------------ dirichlet_approx

def test_already_periodic_is_fixed_point():
    omega = np.array([0.5, 0.25])
    approx = dirichlet_approx(omega, 10)
    assert approx.approx_error == 0.0
    np.testing.assert_allclose(approx.omega_per, omega, atol=0)
    np.testing.assert_allclose(approx.T * approx.omega_per, approx.p, atol=0)


def test_sqrt2_case_matches_oracle():
    omega = np.array([1.0, math.sqrt(2.0)])
    approx = dirichlet_approx(omega, 10)
    err, q = exhaustive_oracle(omega, 10)
    assert approx.q == q == 7
    assert approx.approx_error <= 1.0  # sanity; objective error checked below
    np.testing.assert_array_equal(approx.p, [5, 7])
    # objective error |7/sqrt(2) - 5| under the largest-component normalization
    assert err == pytest.approx(abs(7 / math.sqrt(2) - 5), abs=1e-15)
    assert err <= dirichlet_bound(10, 2)


def test_three_dim_case_bound_holds():
    omega = np.array([1.0, math.sqrt(2.0), math.sqrt(3.0)])
    approx = dirichlet_approx(omega, 50)
    err, q = exhaustive_oracle(omega, 50)
    assert approx.q == q
    assert err <= dirichlet_bound(50, 3) == pytest.approx(50 ** -0.5)


def test_brute_force_optimality_random(rng):
    for n in (2, 3):
        for _ in range(25):
            omega = rng.uniform(0.2, 2.0, n) * rng.choice([-1.0, 1.0], n)
            Q = float(rng.integers(2, 201))
            approx = dirichlet_approx(omega, Q)
            err, q = exhaustive_oracle(omega, Q)
            assert approx.q == q
            assert err <= dirichlet_bound(Q, n)


def test_periodicity_exact_random(rng):
    for _ in range(50):
        n = int(rng.integers(2, 4))
        omega = rng.uniform(-2, 2, n)
        if not np.any(np.abs(omega) > 0.1):
            continue
        approx = dirichlet_approx(omega, 40)
        resid = approx.T * approx.omega_per - np.rint(approx.T * approx.omega_per)
        assert np.max(np.abs(resid)) <= 1e-12
        np.testing.assert_array_equal(
            np.rint(approx.T * approx.omega_per).astype(int), approx.p
        )


def test_error_monotone_in_Q(rng):
    omega = np.array([1.0, math.pi / 3])
    errors = [dirichlet_approx(omega, Q).approx_error for Q in (5, 10, 20, 50, 100)]
    assert all(a >= b for a, b in zip(errors, errors[1:]))


def test_multiplier_and_modes_coprime(rng):
    for _ in range(30):
        omega = rng.uniform(0.3, 1.5, 2)
        approx = dirichlet_approx(omega, 60)
        assert math.gcd(approx.q, *(int(abs(x)) for x in approx.p)) == 1


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        dirichlet_approx([1.0, 2.0], 0.5)
    with pytest.raises(ValueError):
        dirichlet_approx([0.0, 0.0], 10)


# ------------------------------------------------------------ search budget Q

def test_budget_d1_is_constant():
    assert dirichlet_budget(1e-8, 1) == 1.0
    assert dirichlet_budget(0.3, 1, coeff=2.5) == 2.5


def test_budget_d2_exponent():
    assert dirichlet_budget(1e-4, 2) == pytest.approx(10.0, rel=1e-12)


def test_budget_unit_eps():
    assert dirichlet_budget(1.0, 3, coeff=0.7) == 0.7


def test_budget_validation():
    with pytest.raises(ValueError):
        dirichlet_budget(0.0, 2)
    with pytest.raises(ValueError):
        dirichlet_budget(0.5, 0)


# ------------------------------------------------------------ periodic action

def test_periodic_action_identity_map():
    model = isotropic_quadratic(2)
    approx = PeriodicOrbitApprox(
        T=2.0,
        p=np.array([1, 1]),
        omega_per=np.array([0.5, 0.7]),
        q=2,
        approx_error=0.0,
        normalizer=0,
    )
    # identity frequency map: I_star equals the frequency itself
    approx.omega_per = np.array([0.5, 0.7])
    filled = periodic_action(model, approx, [0.4, 0.6])
    np.testing.assert_allclose(filled.I_star, [0.5, 0.7], atol=1e-12)
    assert filled.action_error == pytest.approx(0.1, abs=1e-10)


def test_periodic_action_diagonal_model():
    model = diagonal_quadratic([1.0, 2.0])
    approx = dirichlet_approx([0.5, 0.7], 100)
    filled = periodic_action(model, approx, [0.5, 0.35])
    np.testing.assert_allclose(filled.I_star, [0.5, 0.35], atol=1e-8)


def test_periodic_action_zero_error_when_already_periodic():
    model = isotropic_quadratic(2)
    omega = np.array([0.5, 0.25])
    approx = dirichlet_approx(omega, 10)
    filled = periodic_action(model, approx, omega)
    assert filled.action_error <= 1e-12


# --------------------------------------------------------------- lattice tools

def test_integer_nullspace_2d():
    (v,) = integer_nullspace([[2, -3]])
    assert abs(v @ np.array([2, -3])) == 0
    assert math.gcd(*(int(abs(x)) for x in v)) == 1


def test_integer_nullspace_3d_rank1():
    basis = integer_nullspace([[1, 2, 3]])
    assert len(basis) == 2
    for v in basis:
        assert v @ np.array([1, 2, 3]) == 0


def test_subspace_approx_annihilates_module():
    # module spanned by (1, 1, 0); frequency subspace is its orthogonal lattice
    module_row = np.array([1, 1, 0])
    cols = integer_nullspace([module_row])
    omega = np.array([0.4, -0.4 + 1e-4, math.sqrt(2) / 3])
    approx = dirichlet_approx_in_subspace(omega, cols, 60)
    assert module_row @ approx.p == 0
    resid = approx.T * approx.omega_per - approx.p
    assert np.max(np.abs(resid)) <= 1e-12
    assert approx.approx_error <= 0.05


def test_json_shape():
    approx = dirichlet_approx([1.0, math.sqrt(2)], 10)
    data = approx.to_json_dict()
    assert set(data) == {"q", "p", "T", "omega_per", "error"}
