"""Resonant normal forms around periodic frequencies.

Averaging along a periodic torus flow has no small divisors: the averaging
projector keeps exactly the modes k with k.p = 0, and the homological
equation {chi, l} = [f] - f is solved mode by mode in closed form.  The
change of coordinates is realized as a truncated exponential Lie series
(equivalent to the time-one generator flow up to the reported truncation
residual, which a numerical flow cross-check guards in the test suite).
Local normal forms around a periodic action are produced by an exact
recenter-and-rescale of the polynomial algebra followed by the iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import FTPolynomial, ck_norm_upper_bound
from .errors import DriftLabError, OutOfDomainError, SmallnessError, TruncationOverflowError
from .geometry import NearIntegrableSystem


@dataclass
class NormalFormConfig:
    """Knobs of the averaging iteration.

    steps is the number of averaging passes (the theory uses k_reg - 2);
    lie_order truncates the exponential series; the caps bound the Fourier
    and action-degree support kept during transforms, with everything dropped
    accounted into the residual.  c1, c2, c3 expose the implicit constants of
    the smallness conditions eps <= c1 mu^2, mu <= c2, T mu <= c3.
    """

    steps: int
    lie_order: int = 6
    degree_cap: int = 12
    fourier_cap: int = 24
    mu: float = 0.0
    c1: float = 0.25
    c2: float = 0.5
    c3: float = 0.25
    prune_tol: float = 0.0
    fail_threshold: float = math.inf
    rho: float = 2.0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.lie_order < 2:
            raise ValueError("lie_order must be >= 2")

    @property
    def norm_radius(self) -> float:
        """Radius of the shrunken ball on which ledger norms are reported."""
        return self.rho / 2.0

    def shrink_schedule(self) -> list[float]:
        """Informational radii rho_j = rho - j*rho/(2*steps), j = 0..steps."""
        if self.steps == 0:
            return [self.rho]
        r = self.rho / (2.0 * self.steps)
        return [self.rho - j * r for j in range(self.steps + 1)]


@dataclass
class LedgerEntry:
    """Per-step norm bookkeeping (coefficient upper bounds, never true sups)."""

    step: int
    f_norm_bound: float
    g_norm_bound: float
    residual: float

    def to_json_dict(self) -> dict:
        return {
            "step": self.step,
            "f_norm_bound": self.f_norm_bound,
            "g_norm_bound": self.g_norm_bound,
            "residual": self.residual,
        }


@dataclass
class NormalFormResult:
    """Outcome of the averaging iteration.

    resonant_part commutes with the periodic linear flow (every Fourier mode
    k satisfies k.p = 0 in integer arithmetic); remainder is what is left.
    generators hold the per-step Hamiltonians whose time-one flows compose to
    the full transformation.  meta records the frame (scaled or original),
    the periodic data and measured bounds.
    """

    generators: list[FTPolynomial]
    resonant_part: FTPolynomial
    remainder: FTPolynomial
    ledger: list[LedgerEntry]
    meta: dict = field(default_factory=dict)

    @property
    def residual_total(self) -> float:
        return sum(entry.residual for entry in self.ledger)

    def to_json_dict(self) -> dict:
        return {
            "generators": [g.to_json_dict() for g in self.generators],
            "resonant_part": self.resonant_part.to_json_dict(),
            "remainder": self.remainder.to_json_dict(),
            "ledger": [entry.to_json_dict() for entry in self.ledger],
            "meta": {
                k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in self.meta.items()
            },
        }


def _int_vector(p) -> np.ndarray:
    p = np.asarray(p)
    if not np.issubdtype(p.dtype, np.integer):
        rounded = np.rint(p)
        if np.max(np.abs(p - rounded)) > 0:
            raise ValueError("p must be an integer vector")
        p = rounded.astype(int)
    return p


def average_along_periodic_flow(f: FTPolynomial, p, T: float) -> FTPolynomial:
    """Time average over the T-periodic linear flow with frequency p/T.

    Keeps exactly the resonant modes (k.p = 0, tested in integer arithmetic);
    equals the defining integral exactly for trigonometric polynomials.
    """
    p = _int_vector(p)
    terms = {
        (k, alpha): c
        for (k, alpha), c in f.terms.items()
        if sum(ki * pi for ki, pi in zip(k, p)) == 0
    }
    return FTPolynomial(f.dims, terms, f.center)


def homological_generator(f: FTPolynomial, p, T: float) -> FTPolynomial:
    """Solve {chi, l} = [f] - f for the periodic linear Hamiltonian l.

    Mode (k, alpha) with m = k.p != 0 maps to c * T/(2*pi*i*m) (the closed
    form of the weighted time average); resonant modes map to zero.
    """
    p = _int_vector(p)
    terms = {}
    for (k, alpha), c in f.terms.items():
        m = sum(ki * pi for ki, pi in zip(k, p))
        if m != 0:
            terms[(k, alpha)] = c * T / (2j * math.pi * m)
    return FTPolynomial(f.dims, terms, f.center)


def lie_transform(
    H: FTPolynomial, chi: FTPolynomial, cfg: NormalFormConfig
) -> tuple[FTPolynomial, float]:
    """Truncated exponential Lie series for H composed with the flow of chi.

    Computes sum_{m<=lie_order} ad^m H / m! with ad = {chi, .}, which matches
    the time-one flow composition because d/dt (u o flow_chi) = {chi, u}.
    Terms beyond the caps and the estimated series tail are accumulated into
    the returned residual bound (a C^0 coefficient bound on the reporting
    ball); exceeding cfg.fail_threshold raises instead of degrading silently.
    """
    from .algebra import poisson_bracket

    R = cfg.norm_radius
    if H.fourier_support() > cfg.fourier_cap or H.degree() > cfg.degree_cap:
        raise ValueError("caps must cover the Hamiltonian support")
    if chi.fourier_support() > cfg.fourier_cap or chi.degree() > cfg.degree_cap:
        raise ValueError("caps must cover the generator support")
    acc = H
    term = H
    dropped_mass = 0.0
    prev_norm = None
    last_norm = ck_norm_upper_bound(H, 0, R)
    for m in range(1, cfg.lie_order + 1):
        term = poisson_bracket(chi, term) * (1.0 / m)
        term, dropped = term.truncated(cfg.fourier_cap, cfg.degree_cap, tol=cfg.prune_tol)
        if dropped.terms:
            dropped_mass += ck_norm_upper_bound(dropped, 0, R)
        acc = acc + term
        prev_norm, last_norm = last_norm, ck_norm_upper_bound(term, 0, R)
        if last_norm == 0.0:
            break
    if last_norm == 0.0:
        tail = 0.0
    else:
        ratio = last_norm / prev_norm if prev_norm and prev_norm > 0 else math.inf
        tail = last_norm * ratio / (1.0 - ratio) if ratio < 0.9 else math.inf
    residual = dropped_mass + tail
    if residual > cfg.fail_threshold:
        raise TruncationOverflowError(residual, cfg.fail_threshold)
    return acc, residual


def iterate_normal_form(
    H_scaled: FTPolynomial, p, T: float, cfg: NormalFormConfig
) -> NormalFormResult:
    """Run the averaging iteration on H = l + f with l the periodic linear part.

    Each step solves the homological equation for the current remainder,
    transforms by the truncated Lie series, and moves the averaged part into
    the resonant sum:  g_{j+1} = g_j + [f_j],  f_{j+1} = H_{j+1} - l - g_{j+1}.
    Per-step coefficient bounds and truncation residuals land in the ledger.
    """
    p = _int_vector(p)
    omega = p / T
    if cfg.mu > 0 and T * cfg.mu > cfg.c3:
        raise SmallnessError("T*mu <= c3", T * cfg.mu, cfg.c3)
    n = H_scaled.dims
    R = cfg.norm_radius
    l = FTPolynomial.linear_action(omega, center=H_scaled.center)
    H_cur = H_scaled
    g = FTPolynomial.zero(n, H_scaled.center)
    generators: list[FTPolynomial] = []
    ledger: list[LedgerEntry] = []
    for j in range(cfg.steps):
        f_j = H_cur - l - g
        chi = homological_generator(f_j, p, T)
        avg = average_along_periodic_flow(f_j, p, T)
        f_bound = ck_norm_upper_bound(f_j, 0, R)
        g_bound = ck_norm_upper_bound(g, 0, R)
        H_cur, residual = lie_transform(H_cur, chi, cfg)
        g = g + avg
        generators.append(chi)
        ledger.append(LedgerEntry(j, f_bound, g_bound, residual))
    remainder = H_cur - l - g
    ledger.append(
        LedgerEntry(
            cfg.steps,
            ck_norm_upper_bound(remainder, 0, R),
            ck_norm_upper_bound(g, 0, R),
            0.0,
        )
    )
    for (k, _alpha) in g.terms:
        if sum(ki * pi for ki, pi in zip(k, p)) != 0:
            raise DriftLabError(f"resonant part contains non-resonant mode {k}")
    return NormalFormResult(
        generators=generators,
        resonant_part=g,
        remainder=remainder,
        ledger=ledger,
        meta={"p": p, "T": T, "mu": cfg.mu, "omega": omega, "frame": "scaled"},
    )


def rescale_system(
    system: NearIntegrableSystem, I_star, mu: float, fmu_bound_max: float | None = None
) -> FTPolynomial:
    """Recenter at I_star and rescale actions by mu; exact in the algebra.

    Returns H_mu = l + f_mu on the unit-scale domain, where l is the linear
    part with frequency grad h(I_star) and f_mu collects the quadratic Taylor
    remainder of h (times mu) plus the rescaled perturbation (times 1/mu).
    The constant h(I_star) is dropped.  When fmu_bound_max is given, the
    measured bound on f_mu is checked against it.
    """
    I_star = np.asarray(I_star, dtype=float)
    model = system.model
    if mu <= 0:
        raise ValueError("mu must be positive")
    if float(np.max(np.abs(I_star))) + 2 * mu > model.R:
        raise OutOfDomainError(
            f"ball of radius 2*mu around I_star leaves the domain (R={model.R})"
        )
    h = model.h
    f = system.f
    if not np.array_equal(f.center, h.center):
        f = f.recenter(h.center)
    h_shift = h.recenter(I_star)
    const = h.evaluate(np.zeros(h.dims), I_star)
    h_scaled = (h_shift - const).action_rescaled(mu) * (1.0 / mu)
    f_scaled = f.recenter(I_star).action_rescaled(mu) * (1.0 / mu)
    H_mu = h_scaled + f_scaled
    if fmu_bound_max is not None:
        omega = np.array(
            [h.dI(i).evaluate(np.zeros(h.dims), I_star) for i in range(h.dims)]
        )
        f_mu = H_mu - FTPolynomial.linear_action(omega)
        bound = ck_norm_upper_bound(f_mu, min(system.k_reg, 2), 2.0)
        if bound > fmu_bound_max:
            raise SmallnessError("f_mu bound <= requested maximum", bound, fmu_bound_max)
    return H_mu


def local_normal_form(
    system: NearIntegrableSystem,
    I_star,
    p,
    T: float,
    mu: float,
    cfg: NormalFormConfig,
) -> NormalFormResult:
    """Normal form of the system in a ball of radius mu around a periodic action.

    Checks the smallness preconditions (naming the violated one), rescales,
    iterates the averaging, and scales the resonant part and remainder back
    to the original variables (expansion center I_star).  Generators are kept
    in the scaled frame, where their flows are well conditioned.  The meta
    dict records the measured angle-derivative bound of the remainder in
    original variables next to the claimed (T mu)^steps mu^2 scale.
    """
    I_star = np.asarray(I_star, dtype=float)
    p = _int_vector(p)
    eps = system.eps
    if eps > cfg.c1 * mu**2:
        raise SmallnessError("eps <= c1*mu^2", eps, cfg.c1 * mu**2)
    if mu > cfg.c2:
        raise SmallnessError("mu <= c2", mu, cfg.c2)
    if T * mu > cfg.c3:
        raise SmallnessError("T*mu <= c3", T * mu, cfg.c3)
    H_mu = rescale_system(system, I_star, mu)
    cfg_run = replace(cfg, mu=mu)
    scaled = iterate_normal_form(H_mu, p, T, cfg_run)
    R = cfg.norm_radius
    angle_bound_scaled = max(
        (
            ck_norm_upper_bound(scaled.remainder.dtheta(i), 0, R)
            for i in range(system.dims)
        ),
        default=0.0,
    )
    g_orig = scaled.resonant_part.action_unscaled(mu, I_star) * mu
    f_orig = scaled.remainder.action_unscaled(mu, I_star) * mu
    c0_sum_scaled = ck_norm_upper_bound(scaled.resonant_part + scaled.remainder, 0, R)
    meta = dict(scaled.meta)
    meta.update(
        {
            "frame": "original",
            "I_star": I_star,
            "mu": mu,
            "T": T,
            "p": p,
            "omega_per": p / T,
            "steps": cfg.steps,
            "angle_deriv_bound": mu * angle_bound_scaled,
            "angle_deriv_bound_claimed": (T * mu) ** cfg.steps * mu**2,
            "c0_bound_g_plus_remainder": mu * c0_sum_scaled,
            "c0_bound_claimed": mu**2,
            "residual_total": scaled.residual_total,
            "generators_frame": "scaled",
        }
    )
    return NormalFormResult(
        generators=scaled.generators,
        resonant_part=g_orig,
        remainder=f_orig,
        ledger=scaled.ledger,
        meta=meta,
    )
