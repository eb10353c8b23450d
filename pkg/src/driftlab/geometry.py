"""Frequency-map geometry of integrable Hamiltonians.

Gradients and Hessians of the integrable part, the boundedness and
quasi-convexity conditions on it, resonant surfaces of integer modules, and
Newton inversion of the frequency map.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .algebra import FTPolynomial, ck_norm_upper_bound
from .errors import (
    DimensionMismatchError,
    EmptyResonantSurfaceError,
    NewtonDivergenceError,
    OutOfDomainError,
    SingularFrequencyError,
)


@dataclass
class IntegrableModel:
    """Integrable Hamiltonian h(I) with its domain and condition constants.

    h must have no angle dependence.  M bounds the C^k norm of h on the
    domain ball of radius R (sup norm); m is the quasi-convexity margin, left
    unset until measured.
    """

    h: FTPolynomial
    R: float
    M: float | None = None
    m: float | None = None

    def __post_init__(self):
        if not self.h.is_integrable():
            raise ValueError("integrable part has angle-dependent terms")
        if self.R <= 0:
            raise ValueError("domain radius must be positive")
        if self.M is not None and self.M <= 0:
            raise ValueError("norm bound M must be positive when set")
        if self.m is not None and self.m <= 0:
            raise ValueError("convexity margin m must be positive when set")

    @property
    def dims(self) -> int:
        return self.h.dims

    def contains(self, action, margin: float = 0.0) -> bool:
        action = np.asarray(action, dtype=float)
        return float(np.max(np.abs(action))) < self.R - margin

    def to_json_dict(self) -> dict:
        return {
            "h": self.h.to_json_dict(),
            "R": self.R,
            "M": self.M,
            "m": self.m,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "IntegrableModel":
        return cls(
            h=FTPolynomial.from_json_dict(data["h"]),
            R=float(data["R"]),
            M=data.get("M"),
            m=data.get("m"),
        )


@dataclass
class NearIntegrableSystem:
    """Pair (h, f): integrable model plus perturbation, with regularity tags.

    eps bounds the C^k_reg norm of f on the domain (the synthesis routine
    makes this exact by construction).
    """

    model: IntegrableModel
    f: FTPolynomial
    k_reg: int
    eps: float

    def __post_init__(self):
        if self.f.dims != self.model.dims:
            raise DimensionMismatchError("perturbation dims do not match the model")

    @property
    def dims(self) -> int:
        return self.model.dims

    @property
    def hamiltonian(self) -> FTPolynomial:
        f = self.f
        if not np.array_equal(f.center, self.model.h.center):
            f = f.recenter(self.model.h.center)
        return self.model.h + f


@dataclass
class ResonanceModule:
    """Integer module Lambda spanned by `basis`; codim d = n - rank."""

    basis: list = field(default_factory=list)
    dims: int = 2

    def __post_init__(self):
        self.basis = [np.asarray(b, dtype=int) for b in self.basis]
        for b in self.basis:
            if b.shape != (self.dims,):
                raise DimensionMismatchError("basis vector has wrong length")
        if self.basis:
            mat = np.array(self.basis, dtype=float)
            if np.linalg.matrix_rank(mat) != len(self.basis):
                raise ValueError("basis vectors are not linearly independent")

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.dims - self.rank


# ------------------------------------------------------------------ operations

def _gradient(model: IntegrableModel, action: np.ndarray) -> np.ndarray:
    zero = np.zeros(model.dims)
    return np.array([model.h.dI(i).evaluate(zero, action) for i in range(model.dims)])


def frequency(model: IntegrableModel, action) -> np.ndarray:
    """Exact gradient of h at the action point."""
    action = np.asarray(action, dtype=float)
    if not model.contains(action):
        raise OutOfDomainError(f"action {action} outside ball of radius {model.R}")
    return _gradient(model, action)


def hessian(model: IntegrableModel, action) -> np.ndarray:
    """Exact Hessian of h at the action point."""
    action = np.asarray(action, dtype=float)
    n = model.dims
    out = np.empty((n, n))
    zero = np.zeros(n)
    for i in range(n):
        di = model.h.dI(i)
        for j in range(i, n):
            out[i, j] = out[j, i] = di.dI(j).evaluate(zero, action)
    return out


def _orthonormal_complement(w: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of w^perp (columns), via Gram-Schmidt
    of the coordinate basis against w, keeping the n-1 most independent."""
    n = w.size
    norm = np.linalg.norm(w)
    if norm == 0:
        raise SingularFrequencyError("zero vector has no orthogonal frame")
    u = w / norm
    cols = [u]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        v = e - sum(np.dot(e, c) * c for c in cols)
        nv = np.linalg.norm(v)
        if nv > 1e-10:
            cols.append(v / nv)
        if len(cols) == n:
            break
    return np.column_stack(cols[1:])


def quasiconvexity_margin(
    model: IntegrableModel, center, radius: float, grid_per_dim: int
) -> float:
    """Sampled margin of the quasi-convexity condition on a cube of given radius.

    At each grid sample I, restricts the Hessian of h to the hyperplane
    orthogonal to the gradient and takes the smallest eigenvalue; returns the
    minimum over samples.  A certificate over the sample set only, not the
    continuum.
    """
    if grid_per_dim < 1:
        raise ValueError("grid_per_dim must be >= 1")
    center = np.asarray(center, dtype=float)
    n = model.dims
    if grid_per_dim == 1:
        axes = [np.array([c]) for c in center]
    else:
        axes = [np.linspace(c - radius, c + radius, grid_per_dim) for c in center]
    worst = np.inf
    for point in itertools.product(*axes):
        action = np.array(point)
        w = _gradient(model, action)
        if np.max(np.abs(w)) < 1e-12:
            raise SingularFrequencyError(f"vanishing gradient at sample {action}")
        P = _orthonormal_complement(w)
        H = hessian(model, action)
        restricted = P.T @ H @ P
        worst = min(worst, float(np.linalg.eigvalsh(restricted)[0]))
    return worst


def action_from_frequency(
    model: IntegrableModel, omega, guess, tol_factor: float = 1e-12, max_iter: int = 50
) -> np.ndarray:
    """Invert the frequency map near a guess by damped Newton iteration.

    Stops when |grad h(I) - omega|_inf <= tol_factor * (1 + |omega|_inf); the
    step is halved while it fails to reduce the residual.
    """
    omega = np.asarray(omega, dtype=float)
    action = np.asarray(guess, dtype=float).copy()
    tol = tol_factor * (1.0 + float(np.max(np.abs(omega))))
    res = _gradient(model, action) - omega
    res_norm = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if res_norm <= tol:
            return action
        H = hessian(model, action)
        try:
            step = np.linalg.solve(H, res)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergenceError(
                f"singular Hessian at {action}", last_iterate=action, residual=res_norm
            ) from exc
        lam = 1.0
        for _ in range(30):
            trial = action - lam * step
            trial_res = _gradient(model, trial) - omega
            trial_norm = float(np.max(np.abs(trial_res)))
            if trial_norm < res_norm:
                break
            lam *= 0.5
        else:
            raise NewtonDivergenceError(
                "Newton step failed to reduce the residual",
                last_iterate=action,
                residual=res_norm,
            )
        action, res, res_norm = trial, trial_res, trial_norm
    if res_norm <= tol:
        return action
    raise NewtonDivergenceError(
        f"no convergence after {max_iter} iterations (residual {res_norm:.3e})",
        last_iterate=action,
        residual=res_norm,
    )


def _gradient_affine_parts(model: IntegrableModel):
    """For h with degree <= 2, grad h(I) = A I + b exactly; returns (A, b)."""
    n = model.dims
    A = hessian(model, np.zeros(n))
    b = _gradient(model, np.zeros(n))
    return A, b


def resonance_distance(
    model: IntegrableModel,
    action0,
    module: ResonanceModule,
    full_output: bool = False,
):
    """Euclidean distance from action0 to the resonant surface of the module.

    For quadratic h the surface is affine and the distance is exact (least
    squares).  Otherwise the distance is found by constrained minimization
    from multiple starts and the reported optimality gap is the worst
    constraint violation at the minimizer.
    """
    action0 = np.asarray(action0, dtype=float)
    if module.rank == 0:
        return (0.0, 0.0) if full_output else 0.0
    K = np.array(module.basis, dtype=float)
    if model.h.degree() <= 2:
        A, b = _gradient_affine_parts(model)
        # surface: K (A I + b) = 0  ->  (K A) I = -K b
        C = K @ A
        d = -K @ b
        delta, *_ = np.linalg.lstsq(C, d - C @ action0, rcond=None)
        if np.max(np.abs(C @ (action0 + delta) - d)) > 1e-8 * (1 + np.max(np.abs(d))):
            raise EmptyResonantSurfaceError("resonance conditions are inconsistent")
        if not model.contains(action0 + delta):
            raise EmptyResonantSurfaceError("nearest resonant point lies outside the domain")
        dist = float(np.linalg.norm(delta))
        return (dist, 0.0) if full_output else dist

    def constraint(I):
        return K @ _gradient(model, I)

    def objective(I):
        return float(np.dot(I - action0, I - action0))

    best = None
    rng = np.random.default_rng(0)
    starts = [action0] + [
        action0 + rng.uniform(-0.1, 0.1, model.dims) for _ in range(4)
    ]
    for start in starts:
        res = optimize.minimize(
            objective,
            start,
            jac=lambda I: 2 * (I - action0),
            constraints=[{"type": "eq", "fun": constraint}],
            method="SLSQP",
            options={"maxiter": 200, "ftol": 1e-14},
        )
        if not res.success:
            continue
        gap = float(np.max(np.abs(constraint(res.x))))
        if gap > 1e-6:
            continue
        if best is None or res.fun < best[0]:
            best = (res.fun, res.x, gap)
    if best is None:
        raise EmptyResonantSurfaceError("no resonant point found near the start")
    dist = float(np.sqrt(best[0]))
    return (dist, best[2]) if full_output else dist


def nearest_resonant_point(
    model: IntegrableModel, action0, module: ResonanceModule
) -> np.ndarray:
    """The point of the resonant surface closest to action0 (quadratic h)."""
    action0 = np.asarray(action0, dtype=float)
    if module.rank == 0:
        return action0.copy()
    if model.h.degree() > 2:
        raise NotImplementedError("projection onto the surface needs affine gradient")
    K = np.array(module.basis, dtype=float)
    A, b = _gradient_affine_parts(model)
    C = K @ A
    d = -K @ b
    delta, *_ = np.linalg.lstsq(C, d - C @ action0, rcond=None)
    return action0 + delta


# ------------------------------------------------------------- builtin models

def isotropic_quadratic(n: int, R: float = 1.0) -> IntegrableModel:
    """h = |I|^2 / 2: the identity frequency map."""
    model = IntegrableModel(FTPolynomial.quadratic_action(np.eye(n)), R=R)
    model.M = ck_norm_upper_bound(model.h, 2, R)
    model.m = 1.0
    return model


def diagonal_quadratic(weights, R: float = 1.0) -> IntegrableModel:
    """h = sum w_i I_i^2 / 2 for positive weights."""
    weights = np.asarray(weights, dtype=float)
    model = IntegrableModel(FTPolynomial.quadratic_action(np.diag(weights)), R=R)
    model.M = ck_norm_upper_bound(model.h, 2, R)
    return model


MODEL_BUILDERS = {
    "isotropic_quadratic": lambda spec: isotropic_quadratic(
        int(spec["n"]), float(spec.get("R", 1.0))
    ),
    "diagonal_quadratic": lambda spec: diagonal_quadratic(
        spec["weights"], float(spec.get("R", 1.0))
    ),
}


def model_from_spec(spec: dict) -> IntegrableModel:
    """Build an IntegrableModel from a JSON-style spec dict."""
    kind = spec.get("kind", "poly")
    if kind == "poly":
        return IntegrableModel(
            FTPolynomial.from_json_dict(spec["poly"]),
            R=float(spec.get("R", 1.0)),
            M=spec.get("M"),
            m=spec.get("m"),
        )
    if kind in MODEL_BUILDERS:
        return MODEL_BUILDERS[kind](spec)
    raise ValueError(f"unknown integrable model kind: {kind!r}")
