"""Monte Carlo simulation of the reflected queue started in stationarity.

Paths are generated event by event: Poisson jump epochs, exact Gaussian
increments in between.  In ``exact`` mode each inter-jump Brownian segment
gets its minimum sampled from the bridge-minimum law, the minimum's location
and the first passage below ``-Q_0`` are then sampled exactly by splitting the
bridge into two first-passage legs (an inverse-Gaussian mixture).  ``grid``
mode walks cells of width ``grid_step``: values stay exact (bridge minimum per
cell) while times are read at the right end of the cell, and the readings of
the twice-coarser grid are returned alongside from the same path.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from . import transforms
from ._backend import kernel as _kernel
from .levy_model import LevyModel, require_valid
from .wiener_hopf import factorize

Z_PASS = 3.0
SUP_EPS = 1e-12


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    q: float
    samples: int = 100_000
    seed: int = 0
    mode: str = "exact"
    grid_step: float = 1e-3
    burn_in_horizon: float | None = None
    workers: int = 1

    def validate(self) -> None:
        if self.mode not in ("exact", "grid"):
            raise ConfigError(f"mode must be 'exact' or 'grid', got {self.mode!r}")
        if not self.q > 0:
            raise ConfigError("q must be > 0")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.mode == "grid":
            if not self.grid_step > 0:
                raise ConfigError("grid_step must be > 0")
            if self.grid_step > 0.01 / self.q * (1 + 1e-12):
                raise ConfigError(
                    f"grid_step {self.grid_step} too coarse: need <= 0.01/q = {0.01 / self.q}"
                )
        if self.burn_in_horizon is not None and not self.burn_in_horizon > 0:
            raise ConfigError("burn_in_horizon must be > 0")


@dataclass(frozen=True)
class Mixture:
    """Atom at zero plus a mixture of exponentials."""

    atom: float
    weights: np.ndarray
    rates: np.ndarray

    @property
    def cum(self) -> np.ndarray:
        return self.atom + np.cumsum(self.weights)

    def mean(self) -> float:
        return float(np.sum(self.weights / self.rates))

    def transform(self, theta):
        return self.atom + np.sum(self.weights * self.rates / (self.rates + theta))

    def tail(self, y):
        return np.sum(self.weights * np.exp(-self.rates * y))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        comp = np.searchsorted(self.cum, u, side="right")
        comp = np.minimum(comp, len(self.rates) - 1) if len(self.rates) else comp
        out = np.zeros(size)
        cont = u >= self.atom
        if cont.any():
            out[cont] = rng.exponential(1.0, cont.sum()) / self.rates[comp[cont]]
        return out


def exponential(lam: float) -> Mixture:
    return Mixture(0.0, np.array([1.0]), np.array([float(lam)]))


def stationary_mixture(model: LevyModel) -> Mixture | None:
    """Partial fractions of kbar(0,0)/kbar(0,theta), or None if not a true mixture."""
    f = factorize(model, 0.0).ascending
    rho, eta = f.zeros, f.poles
    if np.any(np.abs(rho.imag) > 1e-12 * np.abs(rho)) or np.any(rho.real <= 0):
        return None
    rho = rho.real
    K = np.prod(rho) / np.prod(eta)
    atom = K if len(rho) == len(eta) else 0.0
    w = np.empty(len(rho))
    for i, r in enumerate(rho):
        others = np.delete(rho, i)
        w[i] = K * np.prod(eta - r) / (r * np.prod(others - r))
    if np.any(w < -1e-12) or not 0 <= atom <= 1 or abs(atom + w.sum() - 1) > 1e-9:
        return None
    return Mixture(float(atom), np.clip(w, 0, None), rho)


def _jump_arrays(side):
    if side.rate == 0:
        return np.zeros(1), np.ones(1)
    return np.ascontiguousarray(np.cumsum(side.weights)), np.ascontiguousarray(side.decays)


@dataclass(frozen=True)
class QueueObservables:
    """One realization of the functionals on ``[0, e_q]``.

    ``tau`` is ``inf`` when the initial busy period outlasts the horizon;
    ``unused`` and ``overshoot`` are then ``nan``.  In grid mode a busy period
    ending in the last cell is read at the cell's right end, the horizon.
    """

    horizon: float
    q0: float
    x_end: float
    x_min: float
    g_min: float
    q_end: float
    q_min: float
    tau: float
    unused: float
    overshoot: float

    @property
    def censored(self) -> bool:
        return math.isinf(self.tau)

    def check(self, tol: float = 0.0) -> list[str]:
        bad = []
        if abs(self.q_min - max(self.q0 + self.x_min, 0.0)) > tol:
            bad.append("q_min != max(q0 + x_min, 0)")
        if abs(self.q_end - ((self.x_end - self.x_min) + self.q_min)) > tol + 1e-12 * abs(self.q_end):
            bad.append("q_end != (x_end - x_min) + q_min")
        # grid readings may put tau on the horizon itself, so test the censoring flag
        if (not self.censored) != (self.q_min == 0):
            bad.append("tau < horizon  <=>  q_min == 0 violated")
        if not self.censored and self.tau > self.horizon:
            bad.append("tau beyond the horizon")
        if not self.censored and (self.unused < 0 or self.overshoot < 0):
            bad.append("negative unused capacity or overshoot")
        return bad


@dataclass
class PathBatch:
    """Column arrays of observables for a batch of paths."""

    horizon: np.ndarray
    q0: np.ndarray
    x_end: np.ndarray
    x_min: np.ndarray
    g_min: np.ndarray
    tau: np.ndarray
    overshoot: np.ndarray
    tau_coarse: np.ndarray
    g_min_coarse: np.ndarray
    mode: str = "exact"
    grid_step: float | None = None
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.horizon)

    @property
    def q_min(self):
        return np.maximum(self.q0 + self.x_min, 0.0)

    @property
    def q_end(self):
        return np.maximum(self.q0, -self.x_min) + self.x_end

    @property
    def finished(self):
        """Indicator of tau < e_q."""
        return self.q0 + self.x_min <= 0.0

    @property
    def unused(self):
        return np.where(self.finished, -(self.q0 + self.x_min), np.nan)

    def coarsened(self) -> "PathBatch":
        """Same paths with time readings taken on the grid of step ``2 * grid_step``."""
        if self.mode != "grid":
            return self
        return PathBatch(
            self.horizon, self.q0, self.x_end, self.x_min, self.g_min_coarse, self.tau_coarse,
            self.overshoot, self.tau_coarse, self.g_min_coarse, self.mode, 2 * self.grid_step,
            self.seed, dict(self.meta),
        )

    def observable(self, name: str) -> np.ndarray:
        derived = {
            "q_min": lambda: self.q_min,
            "q_end": lambda: self.q_end,
            "unused": lambda: self.unused,
            "reflected": lambda: self.x_end - self.x_min,
            "horizon_minus_g_min": lambda: self.horizon - self.g_min,
            "g_min_minus_tau": lambda: self.g_min - self.tau,
        }
        if name in derived:
            return derived[name]()
        if name in ("horizon", "q0", "x_end", "x_min", "g_min", "tau", "overshoot"):
            return getattr(self, name)
        raise KeyError(f"unknown observable {name!r}")

    def path(self, i: int) -> QueueObservables:
        return QueueObservables(
            float(self.horizon[i]), float(self.q0[i]), float(self.x_end[i]), float(self.x_min[i]),
            float(self.g_min[i]), float(self.q_end[i]), float(self.q_min[i]), float(self.tau[i]),
            float(self.unused[i]), float(self.overshoot[i]),
        )

    COLUMNS = ("horizon", "q0", "x_end", "x_min", "g_min", "q_end", "q_min", "tau", "unused", "overshoot")

    def write_csv(self, fh, header: str = "") -> None:
        if header:
            fh.write(header)
        fh.write("path," + ",".join(self.COLUMNS) + "\n")
        cols = [self.observable(c) for c in self.COLUMNS]
        for i in range(len(self)):
            fh.write(str(i) + "," + ",".join(repr(float(c[i])) for c in cols) + "\n")


def _run_chunks(fn, n, workers):
    if workers <= 1 or n < 2 * workers:
        fn(0, n)
        return
    bounds = np.linspace(0, n, workers + 1).astype(int)
    with ThreadPoolExecutor(workers) as ex:
        list(ex.map(lambda ab: fn(*ab), zip(bounds[:-1], bounds[1:])))


def simulate(model: LevyModel, config: SimConfig, initial=None, *, start: int = 0) -> PathBatch:
    """Simulate ``config.samples`` independent paths; path ``i`` uses stream ``start + i``.

    ``initial`` overrides the stationary law of Q_0: a :class:`Mixture`, or a
    float for a fixed initial workload.
    """
    require_valid(model)
    config.validate()
    n = config.samples
    meta = {}
    q0_in = np.zeros(1)
    use_q0_in = False
    if initial is None:
        mix = stationary_mixture(model)
        if mix is None:
            T = config.burn_in_horizon or fallback_horizon(model)
            q0_in = supremum_fallback(model, n, config.seed, T, start=start)
            use_q0_in = True
            mix = exponential(1.0)
            meta["stationary_sampling"] = f"burn-in fallback, horizon {T:.6g}"
        else:
            meta["stationary_sampling"] = "exact mixture"
    elif isinstance(initial, Mixture):
        mix = initial
    else:
        q0_in = np.full(n, float(initial))
        use_q0_in = True
        mix = exponential(1.0)
    if not len(mix.rates):
        mix = Mixture(1.0, np.zeros(1), np.ones(1))

    up_cum, up_rate = _jump_arrays(model.up)
    dn_cum, dn_rate = _jump_arrays(model.down)
    out = {k: np.empty(n) for k in
           ("horizon", "q0", "x_end", "x_min", "g_min", "tau", "overshoot", "tau_c", "g_min_c")}
    grid = config.mode == "grid"
    cum = np.ascontiguousarray(mix.cum)
    rates = np.ascontiguousarray(mix.rates, dtype=float)

    def run(a, b):
        _kernel.simulate_queue(
            model.drift, model.sigma, model.up.rate, up_cum, up_rate,
            model.down.rate, dn_cum, dn_rate, float(config.q),
            float(mix.atom), cum, rates, q0_in[a:b] if use_q0_in else q0_in, use_q0_in,
            grid, float(config.grid_step), int(config.seed), int(start + a),
            *(out[k][a:b] for k in
              ("horizon", "q0", "x_end", "x_min", "g_min", "tau", "overshoot", "tau_c", "g_min_c")),
        )

    _run_chunks(run, n, config.workers)
    return PathBatch(
        out["horizon"], out["q0"], out["x_end"], out["x_min"], out["g_min"], out["tau"],
        out["overshoot"], out["tau_c"], out["g_min_c"], config.mode,
        config.grid_step if grid else None, config.seed, meta,
    )


def simulate_path(model: LevyModel, config: SimConfig, index: int = 0, initial=None) -> QueueObservables:
    """Single path number ``index`` of the stream family fixed by ``config.seed``."""
    cfg = SimConfig(config.q, 1, config.seed, config.mode, config.grid_step, config.burn_in_horizon)
    return simulate(model, cfg, initial, start=index).path(0)


@dataclass
class SupremumBatch:
    sup: np.ndarray
    argmax: np.ndarray
    horizon: np.ndarray


def _supremum(model, n, seed, tail, eps, block, max_horizon, start=0, workers=1):
    up_cum, up_rate = _jump_arrays(model.up)
    dn_cum, dn_rate = _jump_arrays(model.down)
    sup, arg, hor = np.empty(n), np.empty(n), np.empty(n)
    tw = np.ascontiguousarray(tail.weights if tail is not None else np.zeros(0))
    tr = np.ascontiguousarray(tail.rates if tail is not None else np.zeros(0), dtype=float)

    def run(a, b):
        _kernel.simulate_supremum(
            model.drift, model.sigma, model.up.rate, up_cum, up_rate,
            model.down.rate, dn_cum, dn_rate, tw, tr, eps, block, max_horizon,
            int(seed), int(start + a), sup[a:b], arg[a:b], hor[a:b],
        )

    _run_chunks(run, n, workers)
    return SupremumBatch(sup, arg, hor)


_FALLBACK_SALT = 0x5DEECE66D
BURN_IN_TAIL = 1e-4


def fallback_horizon(model: LevyModel, tail: float = BURN_IN_TAIL) -> float:
    """Smallest doubling T of E tau with P(argmax of X beyond T) < ``tail``.

    The argmax time has the law of tau, and Markov's inequality applied to
    ``1 - exp(-G/T)`` gives ``P(G > T) <= (1 - E e^{-G/T}) / (1 - e^{-1})``.
    """
    T = max(transforms.expected_busy_period(model), 1e-3)
    while (1 - transforms.busy_period_transform(model, 1 / T)) / (1 - math.exp(-1)) >= tail:
        T *= 2
    return T


def supremum_fallback(model, n, seed, horizon, start=0):
    """Running supremum over a fixed burn-in horizon (stationary fallback)."""
    block = horizon / 64
    return _supremum(model, n, seed ^ _FALLBACK_SALT, None, 0.0, block, horizon, start).sup


def simulate_supremum(model: LevyModel, samples: int, seed: int, *, eps: float = SUP_EPS,
                      workers: int = 1) -> SupremumBatch:
    """Overall supremum of the free process and the (first) time it is attained.

    Simulation stops once the probability that the future supremum exceeds
    the current one drops below ``eps``.
    """
    require_valid(model)
    mix = stationary_mixture(model)
    if mix is None:
        raise ConfigError("overall-supremum sampling needs the exact stationary mixture")
    block = max(transforms.expected_busy_period(model), 0.05)
    return _supremum(model, samples, seed, mix, eps, block, 1e7 * block, workers=workers)


def sample_stationary_q0(model: LevyModel, rng: np.random.Generator, size: int | None = None,
                         burn_in_horizon: float | None = None):
    """Draws from the stationary workload law (the law of sup X)."""
    n = 1 if size is None else size
    mix = stationary_mixture(model)
    if mix is not None:
        out = mix.sample(rng, n)
    else:
        T = burn_in_horizon or fallback_horizon(model)
        out = supremum_fallback(model, n, int(rng.integers(0, 2**63)), T)
    return float(out[0]) if size is None else out


def sample_increments(model: LevyModel, t: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Independent draws of X_t."""
    x = model.drift * t + model.sigma * math.sqrt(t) * rng.standard_normal(size)
    for side, sign in ((model.up, 1.0), (model.down, -1.0)):
        if side.rate == 0:
            continue
        counts = rng.poisson(side.rate * t, size)
        total = int(counts.sum())
        comp = rng.choice(len(side.phases), size=total, p=side.weights)
        jumps = rng.exponential(1.0, total) / side.decays[comp]
        owner = np.repeat(np.arange(size), counts)
        x += sign * np.bincount(owner, weights=jumps, minlength=size)
    return x


# --- estimation ------------------------------------------------------------

EVENTS = ("none", "ongoing", "finished", "positive")


@dataclass(frozen=True)
class Functional:
    """``exp(-sum coef * observable)`` on an event; optionally conditional on it."""

    weights: tuple[tuple[str, float], ...] = ()
    event: str = "none"
    conditional: bool = False
    formula: str | None = None
    args: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.event not in EVENTS:
            raise ConfigError(f"event must be one of {EVENTS}")


@dataclass
class EstimateWithCI:
    mean: float
    se: float
    ci_low: float
    ci_high: float
    n: int
    seed: int | None = None
    formula: str | None = None
    args: dict | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _ci(mean, se, n, level=0.95, seed=None, functional=None):
    z = NormalDist().inv_cdf(0.5 + level / 2)
    formula = functional.formula if functional else None
    args = dict(functional.args) if functional else None
    return EstimateWithCI(float(mean), float(se), float(mean - z * se), float(mean + z * se), n,
                          seed, formula, args)


def _event_mask(batch: PathBatch, event: str) -> np.ndarray:
    if event == "none":
        return np.ones(len(batch), dtype=bool)
    if event == "finished":
        return batch.finished
    if event == "ongoing":
        return ~batch.finished
    return batch.x_end > 0


def functional_values(batch: PathBatch, functional: Functional) -> tuple[np.ndarray, np.ndarray]:
    """Per-path values of the functional and the event indicator."""
    mask = _event_mask(batch, functional.event)
    expo = np.zeros(int(mask.sum()))
    for name, coef in functional.weights:
        if coef == 0:
            continue
        obs = batch.observable(name)[mask]
        if not np.all(np.isfinite(obs)):
            raise ConfigError(f"observable {name!r} undefined on part of event {functional.event!r}")
        expo += coef * obs
    vals = np.zeros(len(batch))
    vals[mask] = np.exp(-expo)
    return vals, mask.astype(float)


def estimate_from_batch(batch: PathBatch, functional: Functional) -> EstimateWithCI:
    vals, ind = functional_values(batch, functional)
    n = len(vals)
    if functional.conditional:
        p = ind.mean()
        if p == 0:
            raise ConfigError("conditioning event never occurred")
        r = vals.mean() / p
        infl = (vals - r * ind) / p
        se = infl.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
        return _ci(r, se, n, seed=batch.seed, functional=functional)
    se = vals.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return _ci(vals.mean(), se, n, seed=batch.seed, functional=functional)


def estimate_residual_life(samples: np.ndarray, theta: float, *, seed=None, functional=None) -> EstimateWithCI:
    """Ratio estimate of (1 - E e^{-theta Z}) / (theta E Z) with delta-method SE."""
    a = 1 - np.exp(-theta * samples)
    b = theta * samples
    r = a.mean() / b.mean()
    infl = (a - r * b) / b.mean()
    n = len(samples)
    return _ci(r, infl.std(ddof=1) / math.sqrt(n), n, seed=seed, functional=functional)


def functional_for(formula: str, **args) -> Functional:
    """The Monte Carlo functional whose mean a transforms formula predicts."""
    g = args.get
    spec = {
        "stationary": ([("q0", g("theta"))], "none", False),
        "min-workload": ([("q_min", g("theta"))], "none", False),
        "transient-factor": ([("reflected", g("theta"))], "none", False),
        "exp-initial": ([("q_min", g("theta"))], "none", False),
        "busy-period": ([], "finished", False),
        "min-ongoing": ([("q_min", g("theta"))], "ongoing", False),
        "ongoing-joint": (
            [("q_min", g("theta")), ("q_end", g("alpha")), ("g_min", g("beta")),
             ("horizon_minus_g_min", g("gamma"))], "ongoing", False),
        "unused-capacity": ([("unused", g("theta"))], "finished", False),
        "d-tau": ([("overshoot", g("alpha")), ("tau", g("u"))], "finished", False),
        "finished-joint": (
            [("overshoot", g("alpha")), ("unused", g("beta")), ("q_end", g("gamma")),
             ("tau", g("u")), ("g_min_minus_tau", g("v")), ("horizon_minus_g_min", g("w"))],
            "finished", False),
        "conditional-min": ([("q_min", g("theta"))], "ongoing", True),
        "positive-part": ([("x_end", g("theta"))], "positive", False),
    }
    if formula not in spec:
        raise ConfigError(f"no path functional for formula {formula!r}")
    weights, event, cond = spec[formula]
    return Functional(tuple(weights), event, cond, formula, tuple(sorted(args.items())))


def estimate_functional(model: LevyModel, q: float, functional: Functional, config: SimConfig,
                        initial=None) -> EstimateWithCI:
    if config.q != q:
        config = SimConfig(q, config.samples, config.seed, config.mode, config.grid_step,
                           config.burn_in_horizon, config.workers)
    return estimate_from_batch(simulate(model, config, initial), functional)


@dataclass
class Comparison:
    analytic: float
    estimate: EstimateWithCI
    z: float

    @property
    def passed(self) -> bool:
        return abs(self.z) <= Z_PASS

    def line(self, label: str = "") -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {label} analytic={self.analytic:.6f} mc={self.estimate.mean:.6f} "
                f"se={self.estimate.se:.2e} z={self.z:+.2f}")


def compare(analytic, estimate: EstimateWithCI) -> Comparison:
    """z-score of a Monte Carlo estimate against an analytic value; pass iff |z| <= 3."""
    if isinstance(analytic, transforms.TransformValue):
        if estimate.formula is not None and estimate.formula != analytic.formula:
            raise ValueError(f"formula mismatch: {analytic.formula} vs {estimate.formula}")
        if estimate.args is not None:
            a = {k: float(v) for k, v in analytic.args.items() if k in estimate.args}
            e = {k: float(v) for k, v in estimate.args.items() if k in analytic.args}
            if a != e:
                raise ValueError(f"argument mismatch: {analytic.args} vs {estimate.args}")
        value = analytic.real
    else:
        value = float(analytic)
    diff = estimate.mean - value
    if estimate.se > 0:
        z = diff / estimate.se
    else:
        z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return Comparison(value, estimate, z)
