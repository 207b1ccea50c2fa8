"""Closed-form transforms of transient workload functionals.

All quantities refer to the reflected queue started from its stationary law,
observed up to an independent exponential time ``e_q``.  Notation:
``kbar``/``kund`` are the ascending/descending ladder exponents from
:mod:`levyqueue.wiener_hopf`.

Functions accept complex Laplace arguments (``Re >= 0``), which numerical
inversion needs; with all-real arguments they return a ``float`` after
checking that the imaginary residue is negligible.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

from .levy_model import LevyModel
from .wiener_hopf import factorize, kappa_dq0, kbar, kund, log_kbar_dq

IMAG_TOL = 1e-12
SMALL_Q_TOL = 1e-12


class SmallQError(ValueError):
    """Killing rate too small for the conditional formula to keep precision."""


class DegenerateQueueError(ValueError):
    """The queue is empty a.s. (no ascending ladder zeros), so tau = Q_0 = 0."""


def _require_busy(model):
    if model.n_ascending() == 0:
        raise DegenerateQueueError(
            "Q_0 = 0 and tau = 0 almost surely: conditional and residual-life laws are undefined"
        )


def _finish(value, *args):
    value = complex(value)
    if all(isinstance(a, numbers.Real) for a in args):
        if abs(value.imag) > IMAG_TOL * max(1.0, abs(value)):
            raise ArithmeticError(f"imaginary residue {value.imag:.3e} at real arguments")
        return value.real
    return value


def _check_q(q):
    if not q > 0:
        raise ValueError(f"q must be > 0, got {q}")
    return float(q)


def _check_lt(name, x):
    if isinstance(x, numbers.Real):
        if not x >= 0:
            raise ValueError(f"{name} must be >= 0, got {x}")
    elif complex(x).real < 0:
        raise ValueError(f"{name} must have nonnegative real part, got {x}")
    return x


def _kb(model, q, theta):
    return complex(kbar(model, q, theta))


def _ku(model, q, theta):
    return complex(kund(model, q, theta))


def stationary_transform(model: LevyModel, theta):
    """E exp(-theta Q_0) = kbar(0,0) / kbar(0,theta)."""
    _check_lt("theta", theta)
    return _finish(_kb(model, 0, 0) / _kb(model, 0, theta), theta)


def stationary_atom(model: LevyModel) -> float:
    """P(Q_0 = 0), the theta -> infinity limit of :func:`stationary_transform`."""
    f = factorize(model, 0).ascending
    if len(f.zeros) > len(f.poles):
        return 0.0
    return float(np.real(np.prod(f.zeros) / np.prod(f.poles)))


def stationary_mean(model: LevyModel) -> float:
    """E Q_0 = -d/dtheta of the stationary transform at 0."""
    f = factorize(model, 0).ascending
    return float(np.real(np.sum(1 / f.zeros) - np.sum(1 / f.poles)))


def min_workload_transform(model: LevyModel, q, theta):
    """E exp(-theta * min_{[0,e_q]} Q)."""
    q = _check_q(q)
    _check_lt("theta", theta)
    v = (_kb(model, 0, 0) / _kb(model, 0, theta)) * (_kb(model, q, theta) / _kb(model, q, 0))
    return _finish(v, theta)


def transient_workload_factor(model: LevyModel, q, theta):
    """E exp(-theta (X_{e_q} - inf X)) = kbar(q,0) / kbar(q,theta)."""
    q = _check_q(q)
    _check_lt("theta", theta)
    return _finish(_kb(model, q, 0) / _kb(model, q, theta), theta)


def exp_initial_min_transform(model: LevyModel, q, theta, lam):
    """E exp(-theta * min Q) when Q_0 ~ Exp(lam) instead of stationary."""
    q = _check_q(q)
    _check_lt("theta", theta)
    if not lam > 0:
        raise ValueError("lam must be > 0")
    v = 1 - theta / (lam + theta) * (_ku(model, q, 0) / _ku(model, q, lam))
    return _finish(v, theta, lam)


def busy_period_transform(model: LevyModel, q):
    """E exp(-q tau) = P(tau < e_q) for the residual busy period tau."""
    q = _check_q(q)
    return _finish(_kb(model, 0, 0) / _kb(model, q, 0), q)


def min_on_ongoing(model: LevyModel, q, theta):
    """E(exp(-theta * min Q); tau > e_q)."""
    q = _check_q(q)
    _check_lt("theta", theta)
    k00, k0t = _kb(model, 0, 0), _kb(model, 0, theta)
    v = k00 * (_kb(model, q, theta) - k0t) / (k0t * _kb(model, q, 0))
    return _finish(v, theta)


def ongoing_joint_transform(model: LevyModel, q, theta, alpha, beta, gamma):
    """E(exp(-theta minQ - alpha Q_{e_q} - beta G - gamma (e_q - G)); tau > e_q).

    ``G`` is the last time of the minimum on ``[0, e_q]``.
    """
    q = _check_q(q)
    for name, x in (("theta", theta), ("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        _check_lt(name, x)
    ta = theta + alpha
    k0ta = _kb(model, 0, ta)
    v = (
        q / (beta + q)
        * _kb(model, 0, 0) * (_kb(model, q + beta, ta) - k0ta)
        / (k0ta * _kb(model, q + gamma, alpha))
    )
    return _finish(v, theta, alpha, beta, gamma)


def unused_capacity_transform(model: LevyModel, q, theta):
    """E(exp(-theta U); tau < e_q) with U = -(Q_0 + inf X)."""
    q = _check_q(q)
    _check_lt("theta", theta)
    kq = _ku(model, q, theta)
    v = (_kb(model, 0, 0) / _kb(model, q, 0)) * (kq - _ku(model, 0, theta)) / kq
    return _finish(v, theta)


def d_tau_transform(model: LevyModel, q, alpha, u):
    """E(exp(-alpha D - u tau); tau < e_q), D the undershoot at the end of the busy period."""
    q = _check_q(q)
    _check_lt("alpha", alpha)
    _check_lt("u", u)
    v = _kb(model, 0, 0) * (_ku(model, q + u, alpha) - _ku(model, 0, alpha)) / (q + u)
    return _finish(v, alpha, u)


def finished_joint_transform(model: LevyModel, q, alpha, beta, gamma, u, v, w):
    """Joint transform of (D, U, Q_{e_q}, tau, G - tau, e_q - G) on {tau < e_q}."""
    q = _check_q(q)
    for name, x in (("alpha", alpha), ("beta", beta), ("gamma", gamma), ("u", u), ("v", v), ("w", w)):
        _check_lt(name, x)
    ab = alpha + beta
    val = (
        q / (q + u)
        * _kb(model, 0, 0) * (_ku(model, q + u, ab) - _ku(model, 0, ab))
        / (_kb(model, q + w, gamma) * _ku(model, q + v, beta))
    )
    return _finish(val, alpha, beta, gamma, u, v, w)


def conditional_min_transform(model: LevyModel, q, theta):
    """E(exp(-theta * min Q) | tau > e_q)."""
    _require_busy(model)
    q = _check_q(q)
    _check_lt("theta", theta)
    k00, kq0 = _kb(model, 0, 0), _kb(model, q, 0)
    if (kq0 - k00).real < SMALL_Q_TOL * k00.real:
        raise SmallQError(
            f"q={q} too small: kbar(q,0) - kbar(0,0) lost precision; "
            "use limit_conditional_joint_transform"
        )
    k0t = _kb(model, 0, theta)
    v = (k00 / k0t) * (_kb(model, q, theta) - k0t) / (kq0 - k00)
    return _finish(v, theta)


def expected_busy_period(model: LevyModel) -> float:
    """E tau = kbar'(0,0) / kbar(0,0) (derivative in the first argument)."""
    _require_busy(model)
    return kappa_dq0(model, 0.0) / _kb(model, 0, 0).real


def limit_conditional_joint_transform(model: LevyModel, theta, alpha=0.0):
    """q -> 0 limit of E(exp(-theta minQ - alpha Q_{e_q}) | tau > e_q)."""
    _require_busy(model)
    _check_lt("theta", theta)
    _check_lt("alpha", alpha)
    ta = theta + alpha
    k00 = _kb(model, 0, 0)
    d0 = kappa_dq0(model, 0.0)
    if not d0 > 0:
        raise ValueError("kbar'(0,0) vanishes: the busy period is degenerate")
    if isinstance(ta, numbers.Real):
        num = kappa_dq0(model, float(ta)) / _kb(model, 0, ta)
    else:
        num = log_kbar_dq(model, 0.0, ta)
    v = (k00 / _kb(model, 0, alpha)) * num / (d0 / k00)
    return _finish(v, theta, alpha)


def residual_busy_limit_transform(model: LevyModel, theta):
    """Residual-life transform of tau: (1 - E e^{-theta tau}) / (theta E tau)."""
    if not theta > 0:
        raise ValueError("theta must be > 0")
    return (1 - busy_period_transform(model, theta)) / (theta * expected_busy_period(model))


def positive_part_transform(model: LevyModel, q, theta):
    """E(exp(-theta X_{e_q}); X_{e_q} > 0) = q * d/dq log kbar(q, theta)."""
    q = _check_q(q)
    _check_lt("theta", theta)
    return _finish(q * log_kbar_dq(model, q, theta), theta)


def residual_life_q0_transform(model: LevyModel, theta):
    """Residual-life transform of Q_0: (1 - E e^{-theta Q_0}) / (theta E Q_0)."""
    _require_busy(model)
    _check_lt("theta", theta)
    if theta == 0:
        raise ValueError("theta must be nonzero")
    return (1 - stationary_transform(model, theta)) / (theta * stationary_mean(model))


@dataclass(frozen=True)
class FormulaSpec:
    name: str
    func: object
    args: tuple[str, ...]


FORMULAS = {
    f.name: f
    for f in [
        FormulaSpec("stationary", stationary_transform, ("theta",)),
        FormulaSpec("min-workload", min_workload_transform, ("q", "theta")),
        FormulaSpec("transient-factor", transient_workload_factor, ("q", "theta")),
        FormulaSpec("exp-initial", exp_initial_min_transform, ("q", "theta", "lambda")),
        FormulaSpec("busy-period", busy_period_transform, ("q",)),
        FormulaSpec("min-ongoing", min_on_ongoing, ("q", "theta")),
        FormulaSpec("ongoing-joint", ongoing_joint_transform, ("q", "theta", "alpha", "beta", "gamma")),
        FormulaSpec("unused-capacity", unused_capacity_transform, ("q", "theta")),
        FormulaSpec("d-tau", d_tau_transform, ("q", "alpha", "u")),
        FormulaSpec(
            "finished-joint", finished_joint_transform, ("q", "alpha", "beta", "gamma", "u", "v", "w")
        ),
        FormulaSpec("conditional-min", conditional_min_transform, ("q", "theta")),
        FormulaSpec("limit-conditional", limit_conditional_joint_transform, ("theta", "alpha")),
        FormulaSpec("residual-busy-limit", residual_busy_limit_transform, ("theta",)),
        FormulaSpec("positive-part", positive_part_transform, ("q", "theta")),
        FormulaSpec("residual-life-q0", residual_life_q0_transform, ("theta",)),
    ]
}


@dataclass(frozen=True)
class TransformValue:
    formula: str
    args: dict
    value: complex

    @property
    def real(self) -> float:
        return float(np.real(self.value))


def evaluate(model: LevyModel, formula: str, **args) -> TransformValue:
    """Evaluate a formula by id with keyword arguments named as in ``FORMULAS``."""
    try:
        spec = FORMULAS[formula]
    except KeyError:
        raise KeyError(f"unknown formula {formula!r}; known: {', '.join(FORMULAS)}") from None
    missing = set(spec.args) - set(args)
    extra = set(args) - set(spec.args)
    if missing or extra:
        raise TypeError(
            f"formula {formula!r} takes arguments {spec.args}; "
            f"missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    value = spec.func(model, *(args[a] for a in spec.args))
    return TransformValue(formula, {a: args[a] for a in spec.args}, value)


def evaluate_batch(model: LevyModel, records) -> list[TransformValue]:
    """Evaluate ``[(formula, {arg: value}), ...]`` in order."""
    return [evaluate(model, formula, **args) for formula, args in records]


def write_batch_csv(fh, values: list[TransformValue]) -> None:
    """One row per value: formula, then ``name=value`` argument cells, then the value."""
    fh.write("formula,args,value\n")
    for v in values:
        args = ";".join(f"{k}={float(a)!r}" for k, a in v.args.items())
        fh.write(f"{v.formula},{args},{v.real!r}\n")
