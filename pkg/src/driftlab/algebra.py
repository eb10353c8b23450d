"""Fourier-Taylor polynomial algebra on T^n x R^n.

A polynomial here is a finite sum

    p(theta, I) = sum_{(k, alpha)} c_{k,alpha} (I - I_c)^alpha exp(2*pi*i k.theta)

with integer Fourier modes k, multi-indices alpha and a real expansion
center I_c in action space.  This single carrier represents integrable
parts, perturbations, resonant parts, generators and remainders.  All
arithmetic (sums, products, derivatives, Poisson brackets, torus-flow
composition, recentering, action rescaling) is exact in the algebra up to
floating-point rounding of the coefficients.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import CenterMismatchError, DimensionMismatchError

TWO_PI = 2.0 * math.pi

Key = tuple[tuple[int, ...], tuple[int, ...]]


def _as_key(k, alpha) -> Key:
    return tuple(int(x) for x in k), tuple(int(a) for a in alpha)


class FTPolynomial:
    """Finite Fourier-Taylor polynomial.

    Parameters
    ----------
    dims : int
        Number of degrees of freedom n (>= 1).
    terms : mapping, optional
        Map from (k, alpha) pairs of integer tuples to complex coefficients.
        Exact zeros are dropped; keys are canonicalized to tuples.
    center : array_like, optional
        Expansion point I_c of the action monomials (defaults to the origin).

    Notes
    -----
    Instances are immutable by convention: every operation returns a new
    polynomial, so values can be shared freely across threads.  Real-valued
    functions carry the conjugate-pair invariant c_{-k,alpha} = conj(c_{k,alpha});
    the constructors here preserve it but do not silently repair caller input
    (use :meth:`is_real` to check).
    """

    __slots__ = ("dims", "center", "terms")

    def __init__(self, dims: int, terms: Mapping | None = None, center=None):
        if dims < 1:
            raise DimensionMismatchError(f"dims must be >= 1, got {dims}")
        self.dims = int(dims)
        self.center = np.zeros(dims) if center is None else np.asarray(center, dtype=float)
        if self.center.shape != (dims,):
            raise DimensionMismatchError(
                f"center has shape {self.center.shape}, expected ({dims},)"
            )
        clean: dict[Key, complex] = {}
        if terms:
            for (k, alpha), c in terms.items():
                if len(k) != dims or len(alpha) != dims:
                    raise DimensionMismatchError(
                        f"term key {(k, alpha)} does not match dims={dims}"
                    )
                c = complex(c)
                if c != 0:
                    key = _as_key(k, alpha)
                    prev = clean.get(key)
                    new = c if prev is None else prev + c
                    if new == 0:
                        clean.pop(key, None)
                    else:
                        clean[key] = new
        self.terms = clean

    # ---------------------------------------------------------------- builders
    @classmethod
    def zero(cls, dims: int, center=None) -> "FTPolynomial":
        return cls(dims, {}, center)

    @classmethod
    def constant(cls, value: float, dims: int, center=None) -> "FTPolynomial":
        zero = (0,) * dims
        return cls(dims, {(zero, zero): complex(value)}, center)

    @classmethod
    def linear_action(cls, omega, center=None) -> "FTPolynomial":
        """omega . (I - center): the linear Hamiltonian of a frequency vector."""
        omega = np.asarray(omega, dtype=float)
        n = omega.size
        zero = (0,) * n
        terms = {}
        for i, w in enumerate(omega):
            if w != 0:
                alpha = tuple(1 if j == i else 0 for j in range(n))
                terms[(zero, alpha)] = complex(w)
        return cls(n, terms, center)

    @classmethod
    def quadratic_action(cls, matrix, center=None) -> "FTPolynomial":
        """(1/2) (I - center)^T A (I - center) for a symmetric matrix A."""
        a = np.asarray(matrix, dtype=float)
        n = a.shape[0]
        zero = (0,) * n
        terms: dict[Key, complex] = {}
        for i in range(n):
            for j in range(i, n):
                coeff = 0.5 * a[i, j] if i == j else 0.5 * (a[i, j] + a[j, i])
                if coeff == 0:
                    continue
                alpha = [0] * n
                alpha[i] += 1
                alpha[j] += 1
                terms[(zero, tuple(alpha))] = terms.get((zero, tuple(alpha)), 0) + coeff
        return cls(n, terms, center)

    @classmethod
    def cosine(cls, k, amplitude: float = 1.0, phase: float = 0.0, dims=None) -> "FTPolynomial":
        """amplitude * cos(2*pi k.theta + phase) as a conjugate pair of modes."""
        k = tuple(int(x) for x in k)
        n = len(k) if dims is None else dims
        zero = (0,) * n
        c = 0.5 * amplitude * cmath.exp(1j * phase)
        neg = tuple(-x for x in k)
        return cls(n, {(k, zero): c, (neg, zero): c.conjugate()})

    # ------------------------------------------------------------- arithmetic
    def _check_compatible(self, other: "FTPolynomial"):
        if self.dims != other.dims:
            raise DimensionMismatchError(f"dims {self.dims} vs {other.dims}")
        if not np.array_equal(self.center, other.center):
            raise CenterMismatchError(
                f"centers differ: {self.center} vs {other.center}; recenter explicitly"
            )

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = FTPolynomial.constant(other, self.dims, self.center)
        self._check_compatible(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            new = terms.get(key, 0) + c
            if new == 0:
                terms.pop(key, None)
            else:
                terms[key] = new
        out = FTPolynomial.__new__(FTPolynomial)
        out.dims, out.center, out.terms = self.dims, self.center, terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = FTPolynomial.__new__(FTPolynomial)
        out.dims, out.center = self.dims, self.center
        out.terms = {key: -c for key, c in self.terms.items()}
        return out

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = FTPolynomial.constant(other, self.dims, self.center)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return FTPolynomial.zero(self.dims, self.center)
            out = FTPolynomial.__new__(FTPolynomial)
            out.dims, out.center = self.dims, self.center
            out.terms = {key: c * other for key, c in self.terms.items()}
            return out
        self._check_compatible(other)
        terms: dict[Key, complex] = {}
        for (k1, a1), c1 in self.terms.items():
            for (k2, a2), c2 in other.terms.items():
                key = (
                    tuple(x + y for x, y in zip(k1, k2)),
                    tuple(x + y for x, y in zip(a1, a2)),
                )
                new = terms.get(key, 0) + c1 * c2
                if new == 0:
                    terms.pop(key, None)
                else:
                    terms[key] = new
        out = FTPolynomial.__new__(FTPolynomial)
        out.dims, out.center, out.terms = self.dims, self.center, terms
        return out

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, FTPolynomial)
            and self.dims == other.dims
            and np.array_equal(self.center, other.center)
            and self.terms == other.terms
        )

    def __repr__(self):
        return f"FTPolynomial(dims={self.dims}, nterms={len(self.terms)})"

    # ------------------------------------------------------------ derivatives
    def dtheta(self, i: int) -> "FTPolynomial":
        """Partial derivative with respect to the angle theta_i."""
        terms = {}
        for (k, alpha), c in self.terms.items():
            if k[i] != 0:
                terms[(k, alpha)] = c * (2j * math.pi * k[i])
        out = FTPolynomial.__new__(FTPolynomial)
        out.dims, out.center, out.terms = self.dims, self.center, terms
        return out

    def dI(self, i: int) -> "FTPolynomial":
        """Partial derivative with respect to the action I_i."""
        terms: dict[Key, complex] = {}
        for (k, alpha), c in self.terms.items():
            if alpha[i] > 0:
                a = list(alpha)
                a[i] -= 1
                key = (k, tuple(a))
                new = terms.get(key, 0) + c * alpha[i]
                if new == 0:
                    terms.pop(key, None)
                else:
                    terms[key] = new
        out = FTPolynomial.__new__(FTPolynomial)
        out.dims, out.center, out.terms = self.dims, self.center, terms
        return out

    # ------------------------------------------------------------- evaluation
    def evaluate(self, theta, action) -> float:
        """Evaluate at a point (theta, I); the real part of the defining sum."""
        theta = np.asarray(theta, dtype=float)
        action = np.asarray(action, dtype=float)
        if theta.shape != (self.dims,) or action.shape != (self.dims,):
            raise DimensionMismatchError(
                f"point shapes {theta.shape}, {action.shape} do not match dims={self.dims}"
            )
        delta = action - self.center
        total = 0.0 + 0.0j
        for (k, alpha), c in self.terms.items():
            mono = 1.0
            for d, a in zip(delta, alpha):
                if a:
                    mono *= d**a
            phase = TWO_PI * sum(ki * ti for ki, ti in zip(k, theta))
            total += c * mono * cmath.exp(1j * phase)
        return total.real

    # ------------------------------------------------------- center and scale
    def recenter(self, new_center) -> "FTPolynomial":
        """Exact Taylor shift of the expansion point."""
        new_center = np.asarray(new_center, dtype=float)
        if new_center.shape != (self.dims,):
            raise DimensionMismatchError("new center has wrong shape")
        shift = new_center - self.center
        if not shift.any():
            return FTPolynomial(self.dims, self.terms, new_center)
        terms: dict[Key, complex] = {}
        for (k, alpha), c in self.terms.items():
            ranges = [range(a + 1) for a in alpha]
            for beta in itertools.product(*ranges):
                w = c
                for a, b, s in zip(alpha, beta, shift):
                    w *= math.comb(a, b) * s ** (a - b)
                if w == 0:
                    continue
                key = (k, beta)
                new = terms.get(key, 0) + w
                if new == 0:
                    terms.pop(key, None)
                else:
                    terms[key] = new
        return FTPolynomial(self.dims, terms, new_center)

    def action_rescaled(self, mu: float) -> "FTPolynomial":
        """Substitute I = center + mu*J; result is a polynomial in J centered at 0."""
        terms = {
            (k, alpha): c * mu ** sum(alpha) for (k, alpha), c in self.terms.items()
        }
        return FTPolynomial(self.dims, terms)

    def action_unscaled(self, mu: float, center) -> "FTPolynomial":
        """Inverse of :meth:`action_rescaled`: substitute J = (I - center)/mu."""
        terms = {
            (k, alpha): c * mu ** (-sum(alpha)) for (k, alpha), c in self.terms.items()
        }
        return FTPolynomial(self.dims, terms, center)

    # -------------------------------------------------------------- structure
    def fourier_support(self) -> int:
        """Largest |k|_1 present."""
        return max((sum(abs(x) for x in k) for (k, _a) in self.terms), default=0)

    def degree(self) -> int:
        """Largest action degree |alpha| present."""
        return max((sum(a) for (_k, a) in self.terms), default=0)

    def truncated(self, fourier_cap=None, degree_cap=None, tol: float = 0.0):
        """Split into (kept, dropped) by support caps and an optional coefficient tol."""
        kept: dict[Key, complex] = {}
        dropped: dict[Key, complex] = {}
        for (k, alpha), c in self.terms.items():
            if (
                (fourier_cap is not None and sum(abs(x) for x in k) > fourier_cap)
                or (degree_cap is not None and sum(alpha) > degree_cap)
                or (tol > 0.0 and abs(c) <= tol)
            ):
                dropped[(k, alpha)] = c
            else:
                kept[(k, alpha)] = c
        keep = FTPolynomial.__new__(FTPolynomial)
        keep.dims, keep.center, keep.terms = self.dims, self.center, kept
        drop = FTPolynomial.__new__(FTPolynomial)
        drop.dims, drop.center, drop.terms = self.dims, self.center, dropped
        return keep, drop

    def is_integrable(self) -> bool:
        """True when no term carries an angle dependence (all k = 0)."""
        return all(all(x == 0 for x in k) for (k, _a) in self.terms)

    def is_real(self, tol: float = 0.0) -> bool:
        """Check the conjugate-pair invariant up to an absolute tolerance."""
        for (k, alpha), c in self.terms.items():
            neg = tuple(-x for x in k)
            other = self.terms.get((neg, alpha), 0)
            if abs(other - c.conjugate()) > tol:
                return False
        return True

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def allclose(self, other: "FTPolynomial", tol: float = 0.0) -> bool:
        """Coefficientwise comparison within an absolute tolerance."""
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(key, 0) - other.terms.get(key, 0)) <= tol for key in keys)

    # ----------------------------------------------------------- serialization
    def to_json_dict(self) -> dict:
        items = sorted(self.terms.items())
        return {
            "n": self.dims,
            "center": [float(x) for x in self.center],
            "terms": [
                {"k": list(k), "alpha": list(a), "re": c.real, "im": c.imag}
                for (k, a), c in items
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FTPolynomial":
        terms = {
            (tuple(t["k"]), tuple(t["alpha"])): complex(t["re"], t["im"])
            for t in data["terms"]
        }
        return cls(int(data["n"]), terms, data["center"])

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "FTPolynomial":
        return cls.from_json_dict(json.loads(text))


# ------------------------------------------------------------------ operations

def _bracket_small(f: FTPolynomial, g: FTPolynomial) -> dict:
    n = f.dims
    terms: dict[Key, complex] = {}
    for (k1, a1), c1 in f.terms.items():
        for (k2, a2), c2 in g.terms.items():
            base = c1 * c2 * 2j * math.pi
            for i in range(n):
                weight = a1[i] * k2[i] - k1[i] * a2[i]
                if weight == 0:
                    continue
                alpha = list(x + y for x, y in zip(a1, a2))
                alpha[i] -= 1
                key = (tuple(x + y for x, y in zip(k1, k2)), tuple(alpha))
                new = terms.get(key, 0) + base * weight
                if new == 0:
                    terms.pop(key, None)
                else:
                    terms[key] = new
    return terms


def _bracket_vectorized(f: FTPolynomial, g: FTPolynomial) -> dict:
    # pairwise combination in numpy, then sort-and-reduce duplicate keys
    n = f.dims
    k1 = np.array([k for (k, _a) in f.terms], dtype=np.int64)
    a1 = np.array([a for (_k, a) in f.terms], dtype=np.int64)
    c1 = np.array(list(f.terms.values()), dtype=np.complex128)
    k2 = np.array([k for (k, _a) in g.terms], dtype=np.int64)
    a2 = np.array([a for (_k, a) in g.terms], dtype=np.int64)
    c2 = np.array(list(g.terms.values()), dtype=np.complex128)
    key_rows = []
    val_rows = []
    for i in range(n):
        weight = np.multiply.outer(a1[:, i], k2[:, i]) - np.multiply.outer(k1[:, i], a2[:, i])
        idx1, idx2 = np.nonzero(weight)
        if idx1.size == 0:
            continue
        vals = (2j * math.pi) * c1[idx1] * c2[idx2] * weight[idx1, idx2]
        kk = k1[idx1] + k2[idx2]
        aa = a1[idx1] + a2[idx2]
        aa[:, i] -= 1
        key_rows.append(np.hstack([kk, aa]))
        val_rows.append(vals)
    terms: dict[Key, complex] = {}
    if not key_rows:
        return terms
    keys = np.vstack(key_rows)
    vals = np.concatenate(val_rows)
    order = np.lexsort(keys.T[::-1])
    keys = keys[order]
    vals = vals[order]
    boundary = np.empty(keys.shape[0], dtype=bool)
    boundary[0] = True
    boundary[1:] = np.any(keys[1:] != keys[:-1], axis=1)
    starts = np.nonzero(boundary)[0]
    sums = np.add.reduceat(vals, starts)
    for row, c in zip(keys[starts], sums):
        if c != 0:
            terms[(tuple(row[:n]), tuple(row[n:]))] = complex(c)
    return terms


def poisson_bracket(f: FTPolynomial, g: FTPolynomial) -> FTPolynomial:
    """{f, g} = dI f . dtheta g - dtheta f . dI g, exact in the algebra.

    The sign convention pairs with the Hamiltonian vector field
    X_f = (dI f, -dtheta f), so that d/dt (u o flow of chi) = {chi, u}.
    """
    f._check_compatible(g)
    if len(f.terms) * len(g.terms) < 4096:
        terms = _bracket_small(f, g)
    else:
        terms = _bracket_vectorized(f, g)
    out = FTPolynomial.__new__(FTPolynomial)
    out.dims, out.center, out.terms = f.dims, f.center, terms
    return out


def compose_linear_flow(p: FTPolynomial, omega, t: float) -> FTPolynomial:
    """Compose with the linear torus flow theta -> theta + t*omega.

    Each coefficient picks up the phase exp(2*pi*i t k.omega); inverting is
    composition with -t.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (p.dims,):
        raise DimensionMismatchError("omega has wrong shape")
    terms = {}
    for (k, alpha), c in p.terms.items():
        dot = sum(ki * wi for ki, wi in zip(k, omega))
        terms[(k, alpha)] = c * cmath.exp(2j * math.pi * t * dot)
    return FTPolynomial(p.dims, terms, p.center)


def _merge_budget(best: list[float], opts: list[float]) -> list[float]:
    # best[b] = max factor using total derivative budget <= b; opts[t] = this
    # coordinate's factor for t derivatives (0 beyond its list).
    order = len(best) - 1
    out = [0.0] * (order + 1)
    for b in range(order + 1):
        m = 0.0
        for t in range(min(b, len(opts) - 1) + 1):
            cand = best[b - t] * opts[t]
            if cand > m:
                m = cand
        out[b] = m
    for b in range(1, order + 1):
        if out[b] < out[b - 1]:
            out[b] = out[b - 1]
    return out


def ck_norm_upper_bound(p: FTPolynomial, k: int, R: float) -> float:
    """Coefficient bound on the C^k sup-norm over T^n x {|I - center|_inf <= R}.

    Sums, over terms, the worst mixed derivative of order <= k of each
    monomial; guaranteed >= the true sup of every partial derivative up to
    order k, by the triangle inequality.
    """
    if k < 0:
        raise ValueError("derivative order k must be >= 0")
    if R <= 0:
        raise ValueError("domain radius R must be > 0")
    total = 0.0
    for (modes, alpha), c in p.terms.items():
        best = [1.0] * (k + 1)
        for kj in modes:
            w = TWO_PI * abs(kj)
            best = _merge_budget(best, [w**t for t in range(k + 1)])
        for aj in alpha:
            opts = [math.perm(aj, t) * R ** (-t) for t in range(min(k, aj) + 1)]
            best = _merge_budget(best, opts)
        total += abs(c) * best[k] * R ** sum(alpha)
    return total


@dataclass(frozen=True)
class RegularityProfile:
    """Recipe for a random perturbation of prescribed differentiability class.

    The synthesized trigonometric polynomial has coefficient magnitudes
    (1 + |k|_1)^(-decay_exponent) with uniformly random phases, then is
    rescaled so its order-k_reg norm bound equals target_eps exactly.
    decay_exponent defaults to k_reg + n + 1, which keeps the coefficient-sum
    norm bound finite as the Fourier cutoff grows.
    """

    k_reg: int
    K_max: int
    target_eps: float
    seed: int = 0
    decay_exponent: float | None = None

    def __post_init__(self):
        if self.k_reg < 2:
            raise ValueError("k_reg must be >= 2")
        if self.K_max < 1:
            raise ValueError("K_max must be >= 1")


def _half_space_modes(n: int, K_max: int) -> list[tuple[int, ...]]:
    # one representative per conjugate pair: first nonzero component positive
    modes = []
    for k in itertools.product(range(-K_max, K_max + 1), repeat=n):
        if sum(abs(x) for x in k) == 0 or sum(abs(x) for x in k) > K_max:
            continue
        first = next(x for x in k if x != 0)
        if first > 0:
            modes.append(k)
    modes.sort()
    return modes


def synthesize_ck_perturbation(profile: RegularityProfile, n: int) -> FTPolynomial:
    """Deterministic random perturbation with prescribed Fourier decay.

    Returns a real trigonometric polynomial (no action dependence) whose
    order-k_reg norm bound equals profile.target_eps by construction.
    """
    if profile.target_eps < 0:
        raise ValueError("target_eps must be >= 0")
    if profile.target_eps == 0:
        return FTPolynomial.zero(n)
    decay = profile.decay_exponent
    if decay is None:
        decay = profile.k_reg + n + 1
    if decay <= n:
        raise ValueError(f"decay_exponent {decay} must exceed n={n}")
    rng = np.random.default_rng(profile.seed)
    zero = (0,) * n
    terms: dict[Key, complex] = {}
    for k in _half_space_modes(n, profile.K_max):
        amp = (1.0 + sum(abs(x) for x in k)) ** (-decay)
        phase = rng.uniform(0.0, TWO_PI)
        c = 0.5 * amp * cmath.exp(1j * phase)
        terms[(k, zero)] = c
        terms[(tuple(-x for x in k), zero)] = c.conjugate()
    raw = FTPolynomial(n, terms)
    bound = ck_norm_upper_bound(raw, profile.k_reg, 1.0)
    return raw * (profile.target_eps / bound)
