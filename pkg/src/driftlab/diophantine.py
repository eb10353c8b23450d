"""Approximation of frequency vectors by periodic (rational-direction) vectors.

A frequency omega is T-periodic when T*omega is a nonzero integer vector; its
torus orbit closes after time T.  The search here is plain brute force over
the multiplier q (lattice reduction would be the upgrade path), which is
exactly auditable at desk scale and lets every returned approximation carry
its Dirichlet bound certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import DriftLabError
from .geometry import IntegrableModel, action_from_frequency


@dataclass
class PeriodicOrbitApprox:
    """A periodic frequency close to an input frequency.

    T * omega_per equals the integer vector p exactly by construction; q is
    the brute-force multiplier that produced it (before any gcd reduction)
    and approx_error the sup distance to the input frequency.  I_star and
    action_error are filled once the frequency is pulled back to an action.
    """

    T: float
    p: np.ndarray
    omega_per: np.ndarray
    q: int
    approx_error: float
    normalizer: int
    I_star: np.ndarray | None = None
    action_error: float | None = None

    def to_json_dict(self) -> dict:
        out = {
            "q": int(self.q),
            "p": [int(x) for x in self.p],
            "T": float(self.T),
            "omega_per": [float(x) for x in self.omega_per],
            "error": float(self.approx_error),
        }
        if self.I_star is not None:
            out["I_star"] = [float(x) for x in self.I_star]
            out["action_error"] = float(self.action_error)
        return out


def dirichlet_bound(Q: float, n: int) -> float:
    """Simultaneous approximation bound Q^(-1/(n-1)) for n >= 2 frequencies."""
    if n < 2:
        return 0.0
    return Q ** (-1.0 / (n - 1))


def dirichlet_approx(omega, Q: float) -> PeriodicOrbitApprox:
    """Best periodic approximation with multiplier up to Q.

    Normalizes by the largest-magnitude component omega_j and scans
    q = 1..ceil(Q) for the q minimizing max_i dist(q omega_i/omega_j, Z)
    (ties to the smallest q).  The returned frequency is collinear with the
    winning integer vector and has period T = q/|omega_j|.
    """
    omega = np.asarray(omega, dtype=float)
    if Q < 1:
        raise ValueError(f"search budget Q must be >= 1, got {Q}")
    if omega.ndim != 1 or omega.size < 1 or not np.any(omega):
        raise ValueError("omega must be a nonzero vector")
    n = omega.size
    j = int(np.argmax(np.abs(omega)))
    w = omega[j]
    ratios = omega / w
    q_max = math.ceil(Q)
    best = None
    for q in range(1, q_max + 1):
        scaled = q * ratios
        m = np.rint(scaled)
        err = float(np.max(np.abs(scaled - m)))
        if best is None or err < best[0]:
            best = (err, q, m.astype(int))
            if err == 0.0:
                break
    err, q, m = best
    # argmin with smallest-q tie break already yields gcd(q, m) = 1; the
    # reduction below is a safety net keeping T the infimum period
    g = math.gcd(q, *(int(abs(x)) for x in m))
    if g > 1:
        q //= g
        m //= g
    bound = dirichlet_bound(Q, n)
    if n >= 2 and err > bound:
        raise DriftLabError(
            f"Dirichlet bound violated: error {err:.6g} > {bound:.6g} for Q={Q}"
        )
    T = q / abs(w)
    p = (int(math.copysign(1, w)) * m).astype(int)
    omega_per = p / T
    return PeriodicOrbitApprox(
        T=T,
        p=p,
        omega_per=omega_per,
        q=q,
        approx_error=float(np.max(np.abs(omega - omega_per))),
        normalizer=j,
    )


def dirichlet_budget(eps: float, d: int, coeff: float = 1.0) -> float:
    """Search budget Q = coeff * eps^(-(d-1)/(2d)) for a codimension-d setup.

    For d = 1 the exponent vanishes (no approximation step is needed there).
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if d < 1:
        raise ValueError("codimension d must be >= 1")
    return coeff * eps ** (-(d - 1) / (2 * d))


def periodic_action(
    model: IntegrableModel, approx: PeriodicOrbitApprox, action0
) -> PeriodicOrbitApprox:
    """Pull the periodic frequency back to an action via Newton inversion."""
    action0 = np.asarray(action0, dtype=float)
    I_star = action_from_frequency(model, approx.omega_per, action0)
    return replace(
        approx,
        I_star=I_star,
        action_error=float(np.max(np.abs(action0 - I_star))),
    )


# ------------------------------------------------------- exact lattice algebra

def integer_nullspace(rows) -> list[np.ndarray]:
    """Primitive integer vectors spanning the rational nullspace of `rows`.

    Exact Gaussian elimination over fractions; each returned vector has its
    denominators cleared and content divided out.  The vectors span the
    orthogonal frequency subspace of a resonance module (they generate a
    finite-index sublattice of the full integer orthogonal lattice, which is
    enough to produce periodic frequencies).
    """
    rows = [list(r) for r in rows]
    if not rows:
        raise ValueError("need at least one row")
    n = len(rows[0])
    mat = [[Fraction(int(x)) for x in r] for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = mat[r][c]
        mat[r] = [x / inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -mat[i][fc]
        denom = math.lcm(*(x.denominator for x in vec))
        ints = [int(x * denom) for x in vec]
        content = math.gcd(*(abs(x) for x in ints))
        if content > 1:
            ints = [x // content for x in ints]
        basis.append(np.array(ints, dtype=int))
    return basis


def dirichlet_approx_in_subspace(omega, basis_cols, Q: float) -> PeriodicOrbitApprox:
    """Periodic approximation constrained to an integer frequency subspace.

    basis_cols are integer vectors spanning the subspace; omega is first
    orthogonally projected onto it, the brute-force search runs on the
    projection coordinates, and the result is mapped back (so the returned
    frequency annihilates the resonance module by construction).
    """
    omega = np.asarray(omega, dtype=float)
    B = np.column_stack([np.asarray(b, dtype=float) for b in basis_cols])
    coords, *_ = np.linalg.lstsq(B, omega, rcond=None)
    inner = dirichlet_approx(coords, Q)
    p_full = (B.astype(int) @ inner.p).astype(int)
    T = inner.T
    g = math.gcd(*(int(abs(x)) for x in p_full))
    if g > 1:
        p_full //= g
        T /= g
    omega_per = p_full / T
    return PeriodicOrbitApprox(
        T=T,
        p=p_full,
        omega_per=omega_per,
        q=inner.q,
        approx_error=float(np.max(np.abs(omega - omega_per))),
        normalizer=inner.normalizer,
    )
