"""Solvers for second-order TCL master equations.

Three families share one :class:`Generator` contract:

* :func:`solve_traditional` - fixed-step RK4 of the full time-local equation
  (reference solution).
* :func:`solve_element_interval` / :func:`solve_iterative` - every
  independent density-matrix element is propagated on its own scalar linear
  equation, with all other elements frozen at the start of the interval,
  and the full state is rebuilt at each restart time.
* :func:`solve_markov` - the same integrator applied to a generator with
  memoryless (infinite-time) kernels.
"""

from __future__ import annotations

import copy
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .errors import DivergenceError, DomainError, GridMismatchError
from .linalg import DensityMatrix, ElementIndex, canonical_indices, elementary_matrix, reconstruct

METHODS = ("traditional", "element_iterative", "markov")


class Generator(ABC):
    """Right-hand side of a TCL2 master equation.

    Subclasses implement :meth:`apply`, the (linear) second-order
    superoperator acting on an arbitrary ``dim x dim`` matrix.  Calling the
    generator applies either the traditional rule (the whole matrix is live)
    or, after :meth:`element`, the element rule: only ``element_index`` is
    live and every other entry is taken from ``rho_frozen``.
    """

    dim: int
    element_index: ElementIndex | None = None
    t_origin: float = 0.0

    @abstractmethod
    def apply(self, t: float, x: np.ndarray) -> np.ndarray:
        ...

    def __call__(self, t, rho, rho_frozen=None):
        rho = np.asarray(rho, dtype=complex)
        idx = self.element_index
        if idx is None:
            return self.apply(t, rho)
        if rho_frozen is None:
            raise ValueError("element rule needs the frozen initial state")
        x = np.array(rho_frozen, dtype=complex)
        x[idx] = rho[idx]
        out = np.zeros_like(x)
        out[idx] = self.apply(t, x)[idx]
        return out

    def element(self, idx) -> "Generator":
        g = copy.copy(self)
        g.element_index = None if idx is None else ElementIndex(*idx).check(self.dim)
        return g

    def traditional(self) -> "Generator":
        return self.element(None)

    def with_origin(self, t_origin: float) -> "Generator":
        """Copy whose memory integrals start at ``t_origin``."""
        g = copy.copy(self)
        g.t_origin = float(t_origin)
        return g


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    restart_step: float
    t_final: float
    renormalize_trace: bool = False
    method: str = "traditional"

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method '{self.method}'")
        if not (0 < self.dt <= self.restart_step * (1 + 1e-12) and self.restart_step <= self.t_final * (1 + 1e-12)):
            raise DomainError("need 0 < dt <= restart_step <= t_final")
        for name, ratio in (("restart_step/dt", self.restart_step / self.dt),
                            ("t_final/restart_step", self.t_final / self.restart_step)):
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise DomainError(f"{name} = {ratio} is not an integer")

    @property
    def substeps(self) -> int:
        return int(round(self.restart_step / self.dt))

    @property
    def intervals(self) -> int:
        return int(round(self.t_final / self.restart_step))

    @property
    def sample_times(self) -> np.ndarray:
        return np.arange(self.intervals + 1) * self.restart_step

    @property
    def kernel_step(self) -> float:
        """Kernel grid spacing that puts every RK4 stage time on a node."""
        return self.dt / 2.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (K, n, n)
    traces: np.ndarray  # raw trace per sample
    method: str = ""
    element_series: dict = field(init=False)

    def __post_init__(self):
        dim = self.states.shape[1]
        series = {idx: self.states[:, idx.i, idx.j].copy() for idx in canonical_indices(dim)}
        object.__setattr__(self, "element_series", series)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def state(self, k: int) -> DensityMatrix:
        return DensityMatrix(self.states[k], trace_tol=None)

    def population(self, k: int = 0) -> np.ndarray:
        return self.states[:, k, k].real

    @property
    def trace_drift(self) -> np.ndarray:
        return np.abs(self.traces - 1.0)


def _check_finite(x, t):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(f"non-finite state at t={t}", time=t)


def _matrix(rho) -> np.ndarray:
    return np.array(rho, dtype=complex)


@np.errstate(over="ignore", invalid="ignore")
def _rk4(gen: Generator, rho: np.ndarray, t0: float, dt: float, nsteps: int, frozen=None) -> np.ndarray:
    h = dt
    for k in range(nsteps):
        t = t0 + k * h
        k1 = gen(t, rho, frozen)
        k2 = gen(t + h / 2, rho + (h / 2) * k1, frozen)
        k3 = gen(t + h / 2, rho + (h / 2) * k2, frozen)
        k4 = gen(t + h, rho + h * k3, frozen)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(rho, t + h)
    return rho


def solve_traditional(gen: Generator, rho0, cfg: SolverConfig, t0: float = 0.0, method: str = "traditional") -> Trajectory:
    """Fixed-step RK4 of the time-local equation, sampled every restart step."""
    if gen.element_index is not None:
        raise ValueError("solve_traditional needs a traditional-rule generator")
    rho = _matrix(rho0)
    _check_finite(rho, t0)
    states = [rho]
    for k in range(cfg.intervals):
        rho = _rk4(gen, rho, t0 + k * cfg.restart_step, cfg.dt, cfg.substeps)
        states.append(rho)
    states = np.array(states)
    traces = np.trace(states, axis1=1, axis2=2)
    return Trajectory(t0 + cfg.sample_times, states, traces, method)


def element_coefficients(gen: Generator, idx: ElementIndex, rho_init: np.ndarray, times) -> tuple[np.ndarray, np.ndarray]:
    """Scalar coefficient of the live element and the frozen-element source.

    For the element rule ``d rho_idx/dt = kappa(t) rho_idx + source(t)``.
    """
    gen = gen.element(idx)
    unit = elementary_matrix(idx, gen.dim)
    zero = np.zeros_like(unit)
    r0 = rho_init[idx]
    kappa = np.array([gen(t, unit, zero)[idx] for t in times])
    total = np.array([gen(t, rho_init, rho_init)[idx] for t in times])
    return kappa, total - kappa * r0


@np.errstate(over="ignore", invalid="ignore")
def solve_element_interval(gen: Generator, idx, rho_init, t_start: float, t_end: float, cfg: SolverConfig) -> complex:
    """Value of one element at ``t_end`` from the element-rule equation.

    Uses the quadrature solution
    ``r(b) = e^{K(b)} r(a) + int_a^b e^{K(b) - K(s)} source(s) ds`` with
    ``K(s) = int_a^s kappa``; both integrals are composite Simpson with
    panel ``dt`` (nodes at half steps).
    """
    idx = ElementIndex(*idx)
    if not t_end > t_start:
        raise DomainError("t_end must exceed t_start")
    n = (t_end - t_start) / cfg.dt
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise DomainError("interval length is not a multiple of dt")
    n = int(round(n))
    rho_init = _matrix(rho_init)
    s = t_start + np.arange(2 * n + 1) * (cfg.dt / 2)
    kappa, source = element_coefficients(gen, idx, rho_init, s)
    # cumulative_simpson is real-only
    big_k = cumulative_simpson(kappa.real, x=s, initial=0.0) + 1j * cumulative_simpson(kappa.imag, x=s, initial=0.0)
    decay = np.exp(big_k[-1] - big_k)
    value = decay[0] * rho_init[idx] + simpson(decay * source, x=s)
    if not np.isfinite(value):
        raise DivergenceError(f"non-finite element {idx.label} at t={t_end}", time=t_end)
    return complex(value)


def solve_iterative(gen: Generator, rho0, cfg: SolverConfig, memory_origin: str = "global") -> Trajectory:
    """Restart scheme: element-wise propagation over each restart interval.

    ``memory_origin="interval"`` restarts the memory integrals at every
    restart time instead of at ``t = 0``.  The raw trace (sum of the
    element-propagated diagonal, before closure) is kept in
    ``Trajectory.traces``.
    """
    if memory_origin not in ("global", "interval"):
        raise ValueError("memory_origin must be 'global' or 'interval'")
    rho = _matrix(rho0)
    dim = rho.shape[0]
    indices = canonical_indices(dim)
    last = ElementIndex(dim - 1, dim - 1)
    base = gen.traditional()
    states, traces = [rho], [np.trace(rho)]
    for k in range(cfg.intervals):
        a = k * cfg.restart_step
        b = a + cfg.restart_step
        g = base.with_origin(a) if memory_origin == "interval" else base
        vals = {idx: solve_element_interval(g, idx, rho, a, b, cfg) for idx in indices}
        vals[last] = solve_element_interval(g, last, rho, a, b, cfg)
        raw_diag = np.array([vals[ElementIndex(i, i)].real for i in range(dim)])
        raw_trace = complex(sum(vals[ElementIndex(i, i)] for i in range(dim)))
        if cfg.renormalize_trace:
            new = np.zeros((dim, dim), dtype=complex)
            new[np.diag_indices(dim)] = raw_diag / raw_diag.sum()
            for idx in indices:
                if not idx.is_diagonal:
                    new[idx.i, idx.j] = vals[idx]
                    new[idx.j, idx.i] = np.conj(vals[idx])
        else:
            new = reconstruct({idx: complex(vals[idx].real) if idx.is_diagonal else vals[idx] for idx in indices}, dim).matrix
        rho = np.array(new)
        _check_finite(rho, b)
        states.append(rho)
        traces.append(raw_trace)
    return Trajectory(cfg.sample_times, np.array(states), np.array(traces), "element_iterative")


def solve_markov(gen_markov: Generator, rho0, cfg: SolverConfig) -> Trajectory:
    """Traditional integration of a memoryless generator."""
    return solve_traditional(gen_markov, rho0, cfg, method="markov")


@dataclass(frozen=True)
class CompareReport:
    max_deviation: dict
    final_deviation: dict
    max_trace_drift_a: float
    max_trace_drift_b: float

    @property
    def max_abs_deviation(self) -> float:
        return max(self.max_deviation.values())

    def __getitem__(self, label):
        return self.max_deviation[label]


def compare(a: Trajectory, b: Trajectory) -> CompareReport:
    """Per-element deviations between two trajectories on the same grid."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise GridMismatchError("trajectories are sampled on different time grids")
    if a.dim != b.dim:
        raise GridMismatchError("trajectories have different dimensions")
    max_dev, final_dev = {}, {}
    for idx in canonical_indices(a.dim):
        d = np.abs(a.element_series[idx] - b.element_series[idx])
        max_dev[idx] = float(d.max())
        final_dev[idx] = float(d[-1])
    return CompareReport(max_dev, final_dev, float(a.trace_drift.max()), float(b.trace_drift.max()))


def max_step_drift(traj: Trajectory) -> float:
    """Largest raw trace error accumulated over a single restart interval."""
    return float(np.max(traj.trace_drift[1:])) if len(traj.times) > 1 else 0.0


__all__ = [
    "Generator", "SolverConfig", "Trajectory", "CompareReport", "solve_traditional",
    "solve_element_interval", "solve_iterative", "solve_markov", "compare",
    "element_coefficients", "max_step_drift",
]
