"""Driving Lévy processes: drift, Brownian part and two-sided hyperexponential jumps.

The admissible class is

    X_t = mu*t + sigma*B_t + (up jumps) - (down jumps)

where each jump side is a compound Poisson process whose magnitudes follow a
finite mixture of exponentials with distinct decay rates.  This makes
``q - psi(-i s)`` a rational function of ``s``, which the Wiener-Hopf module
factorizes exactly.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

POLE_TOL = 1e-9


class PoleProximityError(ValueError):
    """Evaluation point too close to a pole of the exponent."""


class ModelParseError(ValueError):
    """Malformed model configuration file."""


@dataclass(frozen=True)
class JumpSide:
    """Jumps on one side: Poisson ``rate`` and hyperexponential magnitudes.

    ``phases`` holds ``(weight, decay)`` pairs; the magnitude density is
    ``sum_j weight_j * decay_j * exp(-decay_j * x)``.
    """

    rate: float = 0.0
    phases: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(
            self, "phases", tuple((float(w), float(d)) for w, d in self.phases)
        )

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.phases], dtype=float)

    @property
    def decays(self) -> np.ndarray:
        return np.array([d for _, d in self.phases], dtype=float)

    @property
    def mean_size(self) -> float:
        return sum(w / d for w, d in self.phases)

    def problems(self, label: str) -> list[str]:
        out = []
        if self.rate < 0 or not math.isfinite(self.rate):
            out.append(f"{label}: jump rate must be finite and >= 0")
        if (self.rate > 0) != bool(self.phases):
            out.append(f"{label}: phases must be empty iff rate == 0")
        if not self.phases:
            return out
        w, d = self.weights, self.decays
        if np.any(w < 0) or np.any(w > 1):
            out.append(f"{label}: mixture weights must lie in [0, 1]")
        if abs(w.sum() - 1.0) > 1e-12:
            out.append(f"{label}: mixture weights must sum to 1")
        if np.any(~np.isfinite(d)) or np.any(d <= 0):
            out.append(f"{label}: decay rates must be finite and > 0")
        else:
            ds = np.sort(d)
            if np.any(np.diff(ds) <= 1e-9 * ds[1:]):
                out.append(f"{label}: decay rates must be pairwise distinct")
        return out


@dataclass(frozen=True)
class LevyModel:
    drift: float
    gauss_var: float = 0.0
    up: JumpSide = field(default_factory=JumpSide)
    down: JumpSide = field(default_factory=JumpSide)

    def __post_init__(self):
        object.__setattr__(self, "drift", float(self.drift))
        object.__setattr__(self, "gauss_var", float(self.gauss_var))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.gauss_var)

    @property
    def spectrally_positive(self) -> bool:
        return self.down.rate == 0

    @property
    def spectrally_negative(self) -> bool:
        return self.up.rate == 0

    def n_ascending(self) -> int:
        """Number of ladder zeros with positive real part (for q > 0)."""
        creeps_up = self.gauss_var > 0 or self.drift > 0
        return len(self.up.phases) + int(creeps_up)

    def n_descending(self) -> int:
        creeps_down = self.gauss_var > 0 or self.drift < 0
        return len(self.down.phases) + int(creeps_down)


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "model valid"
        return "model invalid:\n" + "\n".join(f"  - {v}" for v in self.violations)


class InvalidModelError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__(str(report))
        self.report = report


def mean_drift(model: LevyModel) -> float:
    """E X_1 from the closed moment formula."""
    return (
        model.drift
        + model.up.rate * model.up.mean_size
        - model.down.rate * model.down.mean_size
    )


def validate(model: LevyModel) -> ValidationReport:
    v = []
    if not math.isfinite(model.drift):
        v.append("drift must be finite")
    if model.gauss_var < 0 or not math.isfinite(model.gauss_var):
        v.append("gauss_var must be finite and >= 0")
    v += model.up.problems("up")
    v += model.down.problems("down")
    if not v and mean_drift(model) >= 0:
        v.append(f"nonnegative mean drift (E X_1 = {mean_drift(model):.6g})")
    if model.gauss_var == 0 and model.drift == 0:
        v.append("pure compound Poisson process (gauss_var = 0 and drift = 0)")
    return ValidationReport(v)


def require_valid(model: LevyModel) -> None:
    report = validate(model)
    if not report.ok:
        raise InvalidModelError(report)


def _check_poles(model: LevyModel, s) -> None:
    for eta in model.up.decays:
        if abs(eta - s) < POLE_TOL * eta:
            raise PoleProximityError(f"s={s} is within tolerance of up-jump pole {eta}")
    for zeta in model.down.decays:
        if abs(zeta + s) < POLE_TOL * zeta:
            raise PoleProximityError(f"s={s} is within tolerance of down-jump pole {-zeta}")


def laplace_exponent(model: LevyModel, s: complex) -> complex:
    """log E exp(s X_1), i.e. psi(-i s), as the explicit rational function of s."""
    _check_poles(model, s)
    val = model.drift * s + 0.5 * model.gauss_var * s * s
    for w, eta in model.up.phases:
        val += model.up.rate * w * s / (eta - s)
    for w, zeta in model.down.phases:
        val -= model.down.rate * w * s / (zeta + s)
    return val


def laplace_exponent_deriv(model: LevyModel, s: complex) -> complex:
    """d/ds of :func:`laplace_exponent`."""
    _check_poles(model, s)
    val = model.drift + model.gauss_var * s
    for w, eta in model.up.phases:
        val += model.up.rate * w * eta / (eta - s) ** 2
    for w, zeta in model.down.phases:
        val -= model.down.rate * w * zeta / (zeta + s) ** 2
    return val


def levy_exponent(model: LevyModel, theta: complex) -> complex:
    """psi(theta) = log E exp(i theta X_1)."""
    if theta == 0:
        return 0j
    return complex(laplace_exponent(model, 1j * theta))


# --- model files -----------------------------------------------------------

_KEYS = {"drift", "gauss_var", "up.rate", "up.phases", "down.rate", "down.phases"}


def parse_model(text: str, source: str = "<model>") -> LevyModel:
    """Parse the ``key = value`` model format.

    Lines are ``key = python-literal``; ``#`` starts a comment.  Unknown keys,
    repeated keys and unparsable values are reported with their line number.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelParseError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ModelParseError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ModelParseError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = ast.literal_eval(val)
        except (ValueError, SyntaxError):
            raise ModelParseError(f"{source}:{lineno}: cannot parse value for {key!r}") from None
    if "drift" not in values:
        raise ModelParseError(f"{source}: missing required key 'drift'")

    def side(prefix):
        rate = values.get(f"{prefix}.rate", 0.0)
        phases = values.get(f"{prefix}.phases", ())
        try:
            phases = tuple((float(w), float(d)) for w, d in phases)
            return JumpSide(float(rate), phases)
        except (TypeError, ValueError):
            raise ModelParseError(
                f"{source}: field '{prefix}.phases' must be a list of (weight, decay) pairs"
            ) from None

    try:
        drift = float(values["drift"])
        gvar = float(values.get("gauss_var", 0.0))
    except (TypeError, ValueError):
        raise ModelParseError(f"{source}: 'drift' and 'gauss_var' must be numbers") from None
    return LevyModel(drift, gvar, side("up"), side("down"))


def load_model(path) -> LevyModel:
    path = Path(path)
    return parse_model(path.read_text(), source=str(path))


def dump_model(model: LevyModel) -> str:
    lines = [f"drift = {model.drift!r}", f"gauss_var = {model.gauss_var!r}"]
    for name, s in (("up", model.up), ("down", model.down)):
        if s.rate > 0:
            lines.append(f"{name}.rate = {s.rate!r}")
            lines.append(f"{name}.phases = {list(s.phases)!r}")
    return "\n".join(lines) + "\n"
