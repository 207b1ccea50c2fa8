"""Numerical inversion of Laplace transforms into distribution functions.

The Fourier-series method with Euler summation (Abate and Whitt) is applied
to the survival transform ``(1 - T(s)) / s``, which is continuous on
``x > 0``.  Atoms at zero are passed in from closed forms; they fix ``F(0)``
and the lower bound of ``F`` and are checked against the transform's tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import transforms
from .levy_model import LevyModel
from .wiener_hopf import factorize, kbar, kund

ATOM_CHECK_THETA = 1e9
ATOM_TOL = 1e-6
RANGE_TOL = 1e-6


class InversionError(ArithmeticError):
    pass


@dataclass
class InversionRequest:
    """What to invert and where.

    Parameters
    ----------
    transform : callable
        ``s -> E exp(-s Z)`` for complex ``s`` with ``Re s > 0``.
    atom_at_zero : float
        ``P(Z = 0)``, known analytically.
    x_grid : sequence of float
        Strictly increasing evaluation points, all > 0.
    terms : int
        Number of plain partial sums before Euler averaging.
    euler : int
        Order of the binomial (Euler) average.
    contour : float
        Abate-Whitt ``A``; the aliasing error is about ``exp(-A)``.
    osc_tol : float
        Allowed gap between Euler estimates of consecutive orders.
    """

    transform: Callable[[complex], complex]
    atom_at_zero: float
    x_grid: Sequence[float]
    terms: int = 38
    euler: int = 11
    contour: float = 20.0
    osc_tol: float = 1e-6

    def validate(self) -> None:
        x = np.asarray(self.x_grid, dtype=float)
        if x.ndim != 1 or len(x) == 0:
            raise ValueError("x_grid must be a non-empty 1-d sequence")
        if np.any(x <= 0) or np.any(np.diff(x) <= 0):
            raise ValueError("x_grid must be positive and strictly increasing")
        if not 0 <= self.atom_at_zero <= 1:
            raise ValueError("atom_at_zero must lie in [0, 1]")
        tail = complex(self.transform(ATOM_CHECK_THETA)).real
        if abs(tail - self.atom_at_zero) > ATOM_TOL:
            raise InversionError(
                f"atom {self.atom_at_zero:.9g} inconsistent with transform limit {tail:.9g}"
            )


def _euler_survival(fhat, t, n, m, A):
    """Two Euler estimates (orders m and m-1) of the inverse of ``fhat`` at t."""
    k = np.arange(n + m + 1)
    s = (A + 2j * math.pi * k) / (2 * t)
    vals = np.array([complex(fhat(z)).real for z in s])
    terms = (-1.0) ** k * vals
    terms[0] *= 0.5
    partial = np.cumsum(terms)[n:] * math.exp(A / 2) / t
    binom = np.array([math.comb(m, j) for j in range(m + 1)]) / 2.0**m
    binom1 = np.array([math.comb(m - 1, j) for j in range(m)]) / 2.0 ** (m - 1)
    return float(binom @ partial), float(binom1 @ partial[:m])


def invert_cdf(request: InversionRequest) -> list[tuple[float, float]]:
    """``[(x, F(x))]`` on the request grid."""
    request.validate()
    T = request.transform

    def surv_hat(s):
        return (1 - complex(T(s))) / s

    out = []
    for x in np.asarray(request.x_grid, dtype=float):
        e_m, e_m1 = _euler_survival(surv_hat, x, request.terms, request.euler, request.contour)
        if not math.isfinite(e_m) or abs(e_m - e_m1) > request.osc_tol:
            raise InversionError(
                f"Euler sums oscillate at x={x:.6g}: {e_m:.3e} vs {e_m1:.3e}"
            )
        out.append(1.0 - e_m)
    F = np.array(out)
    lo, hi = request.atom_at_zero - RANGE_TOL, 1 + RANGE_TOL
    if np.any(F < lo) or np.any(F > hi):
        raise InversionError(f"inverted CDF leaves [{lo:.6g}, {hi:.6g}]")
    if np.any(np.diff(F) < -RANGE_TOL):
        raise InversionError("inverted CDF decreases by more than rounding")
    F = np.clip(np.maximum.accumulate(F), request.atom_at_zero, 1.0)
    return [(float(x), float(f)) for x, f in zip(request.x_grid, F)]


# --- formula wiring ---------------------------------------------------------


def _ratio_limit(model, q, side):
    """lim_{theta->inf} kappa(q,0)/kappa(q,theta) on one side."""
    f = getattr(factorize(model, q), side)
    if len(f.zeros) != len(f.poles):
        return 0.0
    k = kbar if side == "ascending" else kund
    return float(np.real(k(model, q, 0.0))) / f.gauge


def formula_request(model: LevyModel, formula: str, x_grid, q=None, **fixed) -> InversionRequest:
    """Inversion request for a one-variable distribution exposed by ``transforms``.

    The free variable is ``theta``; ``q`` and any other arguments are fixed.
    """
    atom_fns = {
        "stationary": lambda: transforms.stationary_atom(model),
        "min-workload": lambda: transforms.busy_period_transform(model, q),
        "transient-factor": lambda: _ratio_limit(model, q, "ascending"),
        "exp-initial": lambda: 1 - float(np.real(kund(model, q, 0.0) / kund(model, q, fixed["lambda"]))),
        "conditional-min": lambda: 0.0,
        "limit-conditional": lambda: 0.0,
        "residual-life-q0": lambda: 0.0,
    }
    if formula not in atom_fns:
        raise InversionError(
            f"formula {formula!r} is not a one-variable distribution; "
            f"invertible: {', '.join(atom_fns)}"
        )
    spec = transforms.FORMULAS[formula]
    base = dict(fixed)
    if "q" in spec.args:
        if q is None:
            raise ValueError(f"formula {formula!r} needs q")
        base["q"] = q
    if formula == "limit-conditional":
        base.setdefault("alpha", 0.0)

    def T(s):
        return transforms.evaluate(model, formula, theta=s, **base).value

    return InversionRequest(T, float(atom_fns[formula]()), list(x_grid))


def write_csv(fh, rows, atom: float, header: str = "") -> None:
    if header:
        fh.write(header)
    fh.write(f"# atom_at_zero={atom!r}\n")
    fh.write("x,F\n")
    for x, f in rows:
        fh.write(f"{x!r},{f!r}\n")
