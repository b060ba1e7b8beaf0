"""Electronic tier: driver quantization, monitor readout, thermal crosstalk
and derivative-free optimization of phase settings.

Drivers command phase directly. Monitors are ideal taps that scale the
power they see without disturbing the network. Crosstalk is linear in the
commanded phases.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .errors import NonFiniteCostError
from .mesh import Mesh, Program
from .netsolve import WaveguideParams, solve
from .tbu import TBUMode, TBUSettings, mode_settings

TWO_PI = 2.0 * math.pi
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DriverConfig:
    """Phase driver with ``2**resolution_bits`` levels on [0, 2 pi)."""

    resolution_bits: int = 16

    def __post_init__(self):
        b = self.resolution_bits
        if isinstance(b, bool) or not isinstance(b, int) or not 1 <= b <= 24:
            raise ValueError(f"resolution_bits must be an integer in [1, 24], got {b!r}")

    @property
    def step(self) -> float:
        return TWO_PI / (1 << self.resolution_bits)

    def quantize(self, phase: float) -> float:
        """Nearest grid level to ``phase`` (wrapped onto [0, 2 pi)).

        The nearest level to a phase just below 2 pi is 2 pi itself, which is
        the same physical setting as level 0; it is returned as 2 pi so that
        the rounding stays monotone.
        """
        wrapped = math.fmod(phase, TWO_PI)
        if wrapped < 0:
            wrapped += TWO_PI
        return round(wrapped / self.step) * self.step


@dataclass(frozen=True)
class MonitorConfig:
    responsivity_a_per_w: float = 0.7
    dark_current_a: float = 50e-9
    noise_sigma_a: float = 0.0
    tap_ratio: float = 1.0

    def __post_init__(self):
        if not self.responsivity_a_per_w > 0:
            raise ValueError("responsivity must be positive")
        if not self.dark_current_a >= 0:
            raise ValueError("dark current must be non-negative")
        if not self.noise_sigma_a >= 0:
            raise ValueError("noise sigma must be non-negative")
        if not 0 < self.tap_ratio <= 1:
            raise ValueError("tap ratio must be in (0, 1]")


@dataclass(frozen=True)
class CrosstalkMatrix:
    """``matrix[i, k]``: parasitic radians at actuator ``i`` per radian at ``k``."""

    matrix: np.ndarray

    def __post_init__(self):
        x = np.array(self.matrix, dtype=float)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise ValueError("crosstalk matrix must be square")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError("crosstalk entries must be finite and >= 0")
        if np.any(np.diag(x) != 0):
            raise ValueError("crosstalk diagonal must be zero")
        if x.size and np.max(x.sum(axis=1)) >= 1:
            raise ValueError("crosstalk row sums must be < 1")
        x.setflags(write=False)
        object.__setattr__(self, "matrix", x)

    @classmethod
    def zeros(cls, n: int) -> "CrosstalkMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def neighbors(cls, n: int, eps: float) -> "CrosstalkMatrix":
        """Uniform coupling ``eps`` between consecutive actuators."""
        x = np.zeros((n, n))
        for i in range(n - 1):
            x[i, i + 1] = x[i + 1, i] = eps
        return cls(x)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class OptimizerOptions:
    max_evaluations: int = 200
    tolerance: float = 1e-10
    bounds: Optional[Sequence[Tuple[float, float]]] = None
    seed: int = 0
    max_sweeps: int = 50

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.bounds is not None:
            for lo, hi in self.bounds:
                if not lo <= hi:
                    raise ValueError("each bound needs lower <= upper")


@dataclass
class OptimizeResult:
    x: np.ndarray
    cost: float
    evaluations: int
    trace: List[Tuple[int, float, Tuple[float, ...]]] = field(default_factory=list)

    def trace_csv(self) -> str:
        return trace_csv(self.trace)


# -- drivers, monitors, crosstalk ------------------------------------------------

def _tunable_settings(program: Program, tbu: int) -> TBUSettings:
    return mode_settings(program.mode(tbu))


def quantize_program(program: Program, driver: DriverConfig) -> Program:
    """Round every arm phase to the driver grid.

    Bar and cross entries stay symbolic when their phases are already on the
    grid (always true for 2 or more bits); otherwise they become tunable.
    """
    out = {}
    for t, mode in program.modes.items():
        s = mode_settings(mode)
        q = TBUSettings(driver.quantize(s.theta_upper), driver.quantize(s.theta_lower), s.insertion_loss_db)
        if mode.kind != "tunable" and _same_phases(q, s):
            out[t] = mode
        else:
            out[t] = TBUMode.tunable(q)
    return Program(out, program.label, program.metadata)


def _same_phases(a: TBUSettings, b: TBUSettings) -> bool:
    return (math.isclose(math.cos(a.theta_upper - b.theta_upper), 1.0, abs_tol=1e-15)
            and math.isclose(math.cos(a.theta_lower - b.theta_lower), 1.0, abs_tol=1e-15))


def monitor_read(power_w: float, config: MonitorConfig, rng: np.random.Generator) -> float:
    """Photocurrent for ``power_w`` watts at the monitored port."""
    if not power_w >= 0:
        raise ValueError(f"optical power must be >= 0, got {power_w!r}")
    current = config.responsivity_a_per_w * config.tap_ratio * power_w + config.dark_current_a
    if config.noise_sigma_a > 0:
        current += config.noise_sigma_a * float(rng.standard_normal())
    return current


def actuator_vector(program: Program) -> Tuple[np.ndarray, List[Tuple[int, str]]]:
    """Commanded phases of the active TBUs (upper, lower) in TBU id order."""
    values, labels = [], []
    for t in program.active_tbus():
        s = _tunable_settings(program, t)
        values += [s.theta_upper, s.theta_lower]
        labels += [(t, "upper"), (t, "lower")]
    return np.array(values, dtype=float), labels


def apply_crosstalk(program: Program, crosstalk: CrosstalkMatrix) -> np.ndarray:
    """Effective phases ``c + X c`` for the commanded actuator vector ``c``."""
    c, _ = actuator_vector(program)
    if crosstalk.size != c.size:
        raise ValueError(f"crosstalk matrix is {crosstalk.size}x{crosstalk.size} "
                         f"but the program drives {c.size} actuators")
    return c + crosstalk.matrix @ c


def program_from_actuators(program: Program, phases: Sequence[float]) -> Program:
    """Copy of ``program`` with every active TBU made tunable at ``phases``."""
    phases = list(phases)
    active = program.active_tbus()
    if len(phases) != 2 * len(active):
        raise ValueError("phase vector does not match the program's actuators")
    modes = {}
    for k, t in enumerate(active):
        s = _tunable_settings(program, t)
        modes[t] = TBUMode.tunable(TBUSettings(float(phases[2 * k]), float(phases[2 * k + 1]), s.insertion_loss_db))
    return Program(modes, program.label, program.metadata)


# -- optimization -------------------------------------------------------------------

class Method(Protocol):
    def __call__(self, evaluate: Callable[[np.ndarray], float], x0: np.ndarray,
                 bounds: np.ndarray, options: OptimizerOptions) -> None:
        ...


class _BudgetExhausted(Exception):
    pass


def _golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float) -> None:
    """Golden-section minimization on [lo, hi]; results go through ``f``'s side effects."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)


def coordinate_descent(evaluate, x0: np.ndarray, bounds: np.ndarray, options: OptimizerOptions) -> None:
    """Bounded coordinate descent; each coordinate is line-searched over its
    whole interval with golden section, then the bounds are probed.

    The seed only shuffles the coordinate order of each sweep.
    """
    rng = np.random.default_rng(options.seed)
    x = x0.copy()
    best = evaluate(x)
    span = float(np.max(bounds[:, 1] - bounds[:, 0])) if len(x) else 0.0
    step_tol = max(1e-12, 1e-9 * span)
    for _ in range(options.max_sweeps):
        start = best
        for i in rng.permutation(len(x)):
            lo, hi = bounds[i]
            if hi <= lo:
                continue

            def along(v, i=i):
                y = x.copy()
                y[i] = v
                return evaluate(y)

            _golden_section(along, lo, hi, step_tol)
            along(lo)
            along(hi)
            x = evaluate.best_x.copy()
            best = evaluate.best_cost
        if start - best <= options.tolerance:
            return


class _Evaluator:
    def __init__(self, objective, options: OptimizerOptions):
        self.objective = objective
        self.options = options
        self.count = 0
        self.best_x: Optional[np.ndarray] = None
        self.best_cost = math.inf
        self.trace: List[Tuple[int, float, Tuple[float, ...]]] = []

    def __call__(self, x: np.ndarray) -> float:
        if self.count >= self.options.max_evaluations:
            raise _BudgetExhausted
        x = np.array(x, dtype=float)
        cost = float(self.objective(x))
        self.count += 1
        if not math.isfinite(cost):
            raise NonFiniteCostError(tuple(x.tolist()), cost)
        self.trace.append((self.count, cost, tuple(x.tolist())))
        if cost < self.best_cost:
            self.best_cost, self.best_x = cost, x
        return cost


def optimize(objective: Callable[[np.ndarray], float], initial: Sequence[float],
             options: OptimizerOptions = OptimizerOptions(), method: Method = coordinate_descent) -> OptimizeResult:
    """Minimize ``objective`` over the bounded box, starting at ``initial``.

    The best point seen is returned, so the reported cost is never worse than
    the initial cost or any other evaluated cost.
    """
    x0 = np.array(initial, dtype=float)
    if options.bounds is None:
        bounds = np.tile([0.0, TWO_PI], (x0.size, 1))
    else:
        bounds = np.array(options.bounds, dtype=float).reshape(-1, 2)
        if bounds.shape[0] != x0.size:
            raise ValueError("one (lower, upper) bound per parameter is required")
    if np.any(x0 < bounds[:, 0]) or np.any(x0 > bounds[:, 1]):
        raise ValueError("initial point lies outside the bounds")
    ev = _Evaluator(objective, options)
    try:
        method(ev, x0, bounds, options)
    except _BudgetExhausted:
        pass
    if ev.count == 0:
        ev(x0)
    return OptimizeResult(ev.best_x, ev.best_cost, ev.count, ev.trace)


def trace_csv(trace: Sequence[Tuple[int, float, Tuple[float, ...]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = len(trace[0][2]) if trace else 0
    w.writerow(["evaluation", "cost"] + [f"x{k}" for k in range(n)])
    for k, cost, x in trace:
        w.writerow([k, repr(cost)] + [repr(v) for v in x])
    return buf.getvalue()


# -- hardware-in-the-loop model --------------------------------------------------

@dataclass
class ClosedLoop:
    """Cost of a settings vector measured through the simulated hardware.

    ``build`` maps the settings vector to a commanded program. The program is
    quantized by the drivers, perturbed by crosstalk, solved at
    ``frequency_hz``, and the power reaching ``out_port`` from ``in_port`` is
    read by a monitor. The cost is the squared error between the measured
    power fraction and ``target_fraction``.
    """

    mesh: Mesh
    build: Callable[[np.ndarray], Program]
    in_port: object
    out_port: object
    target_fraction: float
    params: WaveguideParams = field(default_factory=WaveguideParams)
    driver: Optional[DriverConfig] = None
    crosstalk: Optional[CrosstalkMatrix] = None
    monitor: MonitorConfig = field(default_factory=lambda: MonitorConfig(dark_current_a=0.0))
    input_power_w: float = 1e-3
    frequency_hz: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        self._out = self.mesh.external_ports.index(self.mesh.resolve_port(self.out_port))
        self._in = self.mesh.external_ports.index(self.mesh.resolve_port(self.in_port))

    def realized(self, x: np.ndarray) -> Program:
        """Program the hardware actually applies for settings ``x``."""
        program = self.build(np.asarray(x, dtype=float))
        if self.driver is not None:
            program = quantize_program(program, self.driver)
        if self.crosstalk is not None:
            program = program_from_actuators(program, apply_crosstalk(program, self.crosstalk))
        return program

    def power_fraction(self, x: np.ndarray) -> float:
        f = self.params.f_ref_hz if self.frequency_hz is None else self.frequency_hz
        s = solve(self.mesh, self.realized(x), self.params, f)
        return float(abs(s[self._out, self._in]) ** 2)

    def measured_fraction(self, x: np.ndarray) -> float:
        current = monitor_read(self.power_fraction(x) * self.input_power_w, self.monitor, self.rng)
        m = self.monitor
        return (current - m.dark_current_a) / (m.responsivity_a_per_w * m.tap_ratio * self.input_power_w)

    def __call__(self, x: np.ndarray) -> float:
        return (self.measured_fraction(x) - self.target_fraction) ** 2
