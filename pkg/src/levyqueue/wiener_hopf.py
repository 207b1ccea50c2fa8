"""Rational Wiener-Hopf factorization of ``q - psi``.

For the hyperexponential class, ``P(s) = (q - phi(s)) * prod(eta_j - s) * prod(zeta_k + s)``
with ``phi(s) = psi(-i s)`` is a polynomial.  Its roots in the right half-plane
(``rho_i``) and left half-plane (``-delta_k``) give

    kbar(q, theta) = g_up   * prod(rho_i + theta)   / prod(eta_j + theta)
    kund(q, theta) = g_down * prod(delta_k + theta) / prod(zeta_k + theta)

with ``g_up * g_down`` equal to the (sign-corrected) leading coefficient of
``P``, so that ``q - phi(s) = kund(q, s) * kbar(q, -s)`` and
``kbar(q, 0) * kund(q, 0) = q``.
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .levy_model import (
    LevyModel,
    PoleProximityError,
    laplace_exponent,
    laplace_exponent_deriv,
    require_valid,
)

ASCENDING = "ascending"
DESCENDING = "descending"

CLUSTER_TOL = 1e-7
AXIS_TOL = 1e-9
RESIDUAL_TOL = 1e-8
NEWTON_TOL = 1e-12
FD_STEP = 1e-6
FD_TOL = 1e-5
BETA_GRID = np.linspace(-10.0, 10.0, 32)

_gauge_scale = contextvars.ContextVar("gauge_scale", default=1.0)


class FactorizationError(RuntimeError):
    pass


class RootClusteringError(FactorizationError):
    pass


class PartitionError(FactorizationError):
    pass


class ResidualExceededError(FactorizationError):
    pass


class DerivativeMismatchError(FactorizationError):
    pass


@contextlib.contextmanager
def gauge_scale(lam: float):
    """Rescale the gauge split: ascending gauge * lam, descending gauge / lam.

    Every exported transform is a ratio in which this split cancels; the
    context manager exists so that claim can be tested.
    """
    token = _gauge_scale.set(float(lam))
    try:
        yield
    finally:
        _gauge_scale.reset(token)


@dataclass(frozen=True)
class RationalFactor:
    """``gauge * prod(zeros + theta) / prod(poles + theta)``."""

    zeros: np.ndarray
    poles: np.ndarray
    gauge: float

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=complex)
        num = np.ones_like(theta)
        for z in self.zeros:
            num = num * (z + theta)
        den = np.ones_like(theta)
        for p in self.poles:
            den = den * (p + theta)
        out = self.gauge * num / den
        return out[()] if out.ndim == 0 else out

    def log_deriv_theta(self, theta):
        """d/dtheta log of the factor."""
        theta = complex(theta)
        return sum(1 / (z + theta) for z in self.zeros) - sum(1 / (p + theta) for p in self.poles)


@dataclass(frozen=True)
class LadderFactorization:
    q: float
    ascending: RationalFactor
    descending: RationalFactor
    leading: float
    residual: float
    normalization_error: float

    def dump(self) -> str:
        def fmt(zs):
            return ", ".join(
                f"{z.real:.10g}" if z.imag == 0 else f"{z.real:.10g}{z.imag:+.10g}j" for z in zs
            ) or "-"

        return (
            f"q = {self.q:.10g}\n"
            f"  ascending zeros  : {fmt(self.ascending.zeros)}\n"
            f"  ascending poles  : {fmt(self.ascending.poles.astype(complex))}\n"
            f"  descending zeros : {fmt(self.descending.zeros)}\n"
            f"  descending poles : {fmt(self.descending.poles.astype(complex))}\n"
            f"  gauges           : ascending {self.ascending.gauge:.10g}, "
            f"descending {self.descending.gauge:.10g} (product {self.leading:.10g})\n"
            f"  normalization    : |kbar(q,0) kund(q,0) - q| = {self.normalization_error:.3e}"
            f" ({'relative' if self.q > 0 else 'absolute'})\n"
            f"  factor residual  : {self.residual:.3e}\n"
        )


def _numerator(model: LevyModel, q: float) -> Polynomial:
    s = Polynomial([0.0, 1.0])
    etas, zetas = model.up.decays, model.down.decays
    up_terms = [Polynomial([eta, -1.0]) for eta in etas]
    dn_terms = [Polynomial([zeta, 1.0]) for zeta in zetas]

    def prod(terms):
        out = Polynomial([1.0])
        for t in terms:
            out = out * t
        return out

    base = prod(up_terms) * prod(dn_terms)
    lead = Polynomial([q, -model.drift])
    if model.gauss_var > 0:
        lead = lead + Polynomial([0.0, 0.0, -0.5 * model.gauss_var])
    P = lead * base
    for j, (w, _) in enumerate(model.up.phases):
        rest = prod(up_terms[:j] + up_terms[j + 1 :]) * prod(dn_terms)
        P = P - model.up.rate * w * s * rest
    for k, (w, _) in enumerate(model.down.phases):
        rest = prod(up_terms) * prod(dn_terms[:k] + dn_terms[k + 1 :])
        P = P + model.down.rate * w * s * rest
    return P.trim()


def _polish(model: LevyModel, q: float, r: complex) -> complex:
    for _ in range(60):
        f = q - laplace_exponent(model, r)
        if abs(f) <= NEWTON_TOL * max(1.0, abs(q)):
            break
        r = r + f / laplace_exponent_deriv(model, r)
    return r


def _check_clusters(roots, q):
    if len(roots) > 1:
        d = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() < CLUSTER_TOL:
            raise RootClusteringError(
                f"characteristic roots cluster within {d.min():.2e} at q={q}; "
                "degenerate parameter set"
            )


def characteristic_roots(model: LevyModel, q: float):
    """Roots of ``q - phi(s) = 0`` split by half-plane.

    Returns ``(rho, delta, leading)``: ascending roots ``rho`` (Re > 0),
    descending roots stored negated as ``delta`` (Re >= 0), and the positive
    constant ``leading`` that multiplies the monic factors.
    """
    require_valid(model)
    q = float(q)
    if q < 0:
        raise ValueError("q must be >= 0")
    P = _numerator(model, q)
    raw = P.roots().astype(complex)
    _check_clusters(raw, q)
    roots = []
    origin = None
    if q == 0:
        origin = int(np.argmin(np.abs(raw)))
    for i, r in enumerate(raw):
        if i == origin:
            roots.append(0j)
            continue
        try:
            r = _polish(model, q, complex(r))
        except PoleProximityError:
            raise RootClusteringError(
                f"characteristic root {complex(r):.6g} collides with a jump pole at q={q}"
            ) from None
        if abs(r.imag) <= 1e-12 * max(1.0, abs(r)):
            r = complex(r.real, 0.0)
        roots.append(r)
    roots = np.array(roots, dtype=complex)
    _check_clusters(roots, q)
    rest = np.array([r for i, r in enumerate(roots) if i != origin], dtype=complex)
    # relative: at small q a genuine root approaches 0 along the real axis
    if q > 0 and np.any(np.abs(rest.real) < AXIS_TOL * np.abs(rest)):
        raise PartitionError(f"characteristic root on the imaginary axis at q={q}")
    rho = np.sort_complex(rest[rest.real > 0])
    delta = -rest[rest.real < 0]
    if origin is not None:
        delta = np.append(delta, 0j)
    delta = np.sort_complex(delta)
    if len(rho) != model.n_ascending() or len(delta) != model.n_descending():
        raise PartitionError(
            f"root count mismatch at q={q}: got {len(rho)} ascending / {len(delta)} "
            f"descending, expected {model.n_ascending()} / {model.n_descending()}"
        )
    leading = float(P.coef[-1]) * (-1) ** len(rho)
    if leading <= 0:
        raise FactorizationError("non-positive factorization constant")
    return rho, delta, leading


@functools.lru_cache(maxsize=8192)
def _factorize_cached(model: LevyModel, q: float, scale: float) -> LadderFactorization:
    rho, delta, leading = characteristic_roots(model, q)
    g = math.sqrt(leading)
    asc = RationalFactor(rho, model.up.decays, g * scale)
    desc = RationalFactor(delta, model.down.decays, g / scale)

    # relative for q > 0, absolute at q = 0 where the product vanishes
    norm_err = abs((asc(0.0) * desc(0.0)).real - q) / (q if q > 0 else 1.0)
    if q > 0:
        if norm_err > RESIDUAL_TOL:
            raise ResidualExceededError(f"kbar(q,0) kund(q,0) != q at q={q}: {norm_err:.2e}")
    res = 0.0
    for beta in BETA_GRID:
        lhs = q - laplace_exponent(model, 1j * beta)
        rhs = desc(1j * beta) * asc(-1j * beta)
        res = max(res, abs(lhs - rhs) / abs(lhs))
    if res > RESIDUAL_TOL:
        raise ResidualExceededError(f"factorization residual {res:.2e} exceeds {RESIDUAL_TOL} at q={q}")
    return LadderFactorization(float(q), asc, desc, leading, res, norm_err)


def factorize(model: LevyModel, q: float) -> LadderFactorization:
    """Certified ladder factorization at killing rate ``q`` (cached)."""
    return _factorize_cached(model, float(q), _gauge_scale.get())


def kappa(model: LevyModel, side: str, alpha: float, theta):
    """Ladder exponent ``kbar(alpha, theta)`` (ascending) or ``kund(alpha, theta)``."""
    f = factorize(model, alpha)
    if side == ASCENDING:
        return f.ascending(theta)
    if side == DESCENDING:
        return f.descending(theta)
    raise ValueError(f"unknown side {side!r}")


def kbar(model: LevyModel, alpha: float, theta):
    return factorize(model, alpha).ascending(theta)


def kund(model: LevyModel, alpha: float, theta):
    return factorize(model, alpha).descending(theta)


def ascending_root_velocity(model: LevyModel, q: float) -> np.ndarray:
    """d rho_i / dq by implicit differentiation of ``q - phi(rho) = 0``."""
    rho = factorize(model, q).ascending.zeros
    return np.array([1.0 / laplace_exponent_deriv(model, r) for r in rho], dtype=complex)


def log_kbar_dq(model: LevyModel, q: float, theta) -> complex:
    """d/dq log kbar(q, theta), gauge free."""
    rho = factorize(model, q).ascending.zeros
    vel = ascending_root_velocity(model, q)
    return complex(np.sum(vel / (rho + complex(theta))))


def kbar_dq(model: LevyModel, q: float, theta) -> complex:
    return complex(kbar(model, q, theta)) * log_kbar_dq(model, q, theta)


def kappa_dq0(model: LevyModel, theta: float = 0.0, side: str = ASCENDING) -> float:
    """d/dq kbar(q, theta) at q = 0, checked against a finite difference.

    The finite difference is the one-sided second-order stencil
    ``(-3 f(0) + 4 f(h) - f(2h)) / (2h)`` because q < 0 leaves the domain;
    it is Richardson-extrapolated over ``h`` and ``h/2`` so that models near
    criticality (small ascending roots, large curvature in q) still pass.
    """
    if side != ASCENDING:
        raise ValueError("only the ascending q-derivative is supported")
    analytic = kbar_dq(model, 0.0, theta)
    if abs(analytic.imag) > 1e-12 * max(1.0, abs(analytic)):
        raise FactorizationError("complex q-derivative at real theta")
    analytic = analytic.real
    h = FD_STEP
    f = {x: complex(kbar(model, x, theta)).real for x in (0.0, h / 2, h, 2 * h)}

    def stencil(step):
        return (-3 * f[0.0] + 4 * f[step] - f[2 * step]) / (2 * step)

    fd = (4 * stencil(h / 2) - stencil(h)) / 3
    scale = max(abs(analytic), abs(fd))
    # the stencil cannot resolve below the rounding noise of kbar itself
    noise = 64 * np.finfo(float).eps * max(abs(v) for v in f.values()) / h
    if scale > 0 and abs(analytic - fd) > FD_TOL * scale + noise:
        raise DerivativeMismatchError(
            f"analytic dkbar/dq(0,{theta}) = {analytic:.12g} vs finite difference {fd:.12g}"
        )
    return analytic
