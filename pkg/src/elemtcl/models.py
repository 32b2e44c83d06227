"""Reference models: a relaxing qubit and two dipole-coupled qubits.

Both are exposed as :class:`~elemtcl.propagator.Generator` builders.  The
two-qubit generator evaluates the second-order memory integral

    int_{t0}^t dt1 { [K^+(t1) X K(t) - K(t) K^+(t1) X] c_plus(t - t1)
                   + [K(t1) X K^+(t) - K^+(t) K(t1) X] c_minus(t - t1) } + h.c.

by composite Simpson over the tabulated correlation kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bath import BathSpec, KernelTable, half_fourier_correlations, markov_limits
from .errors import CoverageError, DomainError
from .linalg import ElementIndex, two_qubit_operators
from .propagator import Generator

_OPS = two_qubit_operators()


@dataclass(frozen=True)
class SingleQubitModel:
    bath: BathSpec


@dataclass(frozen=True)
class TwoQubitModel:
    bath: BathSpec
    v: float
    alpha1: complex
    alpha2: complex

    def __post_init__(self):
        if not math.isfinite(self.v):
            raise DomainError("dipole coupling must be finite")
        for a in (self.alpha1, self.alpha2):
            if not (math.isfinite(complex(a).real) and math.isfinite(complex(a).imag)):
                raise DomainError("geometric factors must be finite")


def _rule(gen: Generator, rule) -> Generator:
    return gen if rule in (None, "traditional") else gen.element(ElementIndex(*rule))


# -- single qubit ----------------------------------------------------------


class SingleQubitGenerator(Generator):
    """Relaxation of one qubit, basis order (excited, ground).

    ``rates(t)`` returns ``(f_plus, f_minus, g)`` at the memory time
    ``t - t_origin``.
    """

    dim = 2

    def __init__(self, rates: Callable[[float], tuple], t_max: float = math.inf):
        self._rates = rates
        self._t_max = t_max

    def apply(self, t, x):
        tau = t - self.t_origin
        if tau < -1e-12 or tau > self._t_max * (1 + 1e-12) + 1e-12:
            raise CoverageError(f"kernel table does not cover t={t}")
        fp, fm, g = self._rates(max(tau, 0.0))
        out = np.empty((2, 2), dtype=complex)
        out[0, 0] = -fp * x[0, 0] + fm * x[1, 1]
        out[1, 1] = fp * x[0, 0] - fm * x[1, 1]
        out[1, 0] = -g * x[1, 0]
        out[0, 1] = -np.conj(g) * x[0, 1]
        return out


def single_qubit_generator(model: SingleQubitModel, kernels: KernelTable, rule="traditional", t_origin=0.0) -> Generator:
    if kernels.spec != model.bath:
        raise DomainError("kernel table was built for a different bath")

    def rates(tau):
        return kernels("f_plus", tau), kernels("f_minus", tau), kernels("g", tau)

    gen = SingleQubitGenerator(rates, kernels.t_max).with_origin(t_origin)
    return _rule(gen, rule)


# -- two qubits ------------------------------------------------------------


def _k_parts(model: TwoQubitModel) -> tuple[np.ndarray, np.ndarray]:
    """Split K(t) = Kc cos(Vt) + Ks sin(Vt) using R(a, b) = a cos + i b sin."""
    a1, a2 = complex(model.alpha1), complex(model.alpha2)
    o = _OPS

    def k_of(r):
        return (o["pp1"] * r(a2, -a1) + o["pm1"] * r(a2, a1)) @ o["sp2"] + (
            o["pp2"] * r(a1, -a2) + o["pm2"] * r(a1, a2)
        ) @ o["sp1"]

    kc = k_of(lambda a, b: a)
    ks = k_of(lambda a, b: 1j * b)
    return kc, ks


def k_operator(model: TwoQubitModel, t) -> np.ndarray:
    """Interaction-picture system operator multiplying B(t).

    Vectorised over ``t``: an array of times gives a stack of 4x4 matrices.
    """
    kc, ks = _k_parts(model)
    t = np.asarray(t, dtype=float)
    vt = model.v * t
    return np.cos(vt)[..., None, None] * kc + np.sin(vt)[..., None, None] * ks


def _second_order(x, k, a_plus, a_minus):
    def t_part(y):
        kd = k.conj().T
        return a_plus @ y @ k - k @ a_plus @ y + a_minus @ y @ kd - kd @ a_minus @ y

    return t_part(x) + t_part(x.conj().T).conj().T


def simpson_weights(n: int) -> np.ndarray:
    """Composite weights on ``n`` equal panels (unit spacing).

    Simpson for even ``n``; for odd ``n >= 3`` the last three panels use the
    3/8 rule; a single panel uses the trapezoid rule.
    """
    if n == 0:
        return np.zeros(1)
    if n == 1:
        return np.array([0.5, 0.5])
    w = np.zeros(n + 1)
    m = n if n % 2 == 0 else n - 3
    if m > 0:
        w[:m + 1:2] += 2.0 / 3.0
        w[1:m:2] += 4.0 / 3.0
        w[0] -= 1.0 / 3.0
        w[m] -= 1.0 / 3.0
    if m != n:
        w[m:] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


class TwoQubitGenerator(Generator):
    """Non-Markovian TCL2 generator for two qubits in a common bath."""

    dim = 4

    def __init__(self, model: TwoQubitModel, kernels: KernelTable):
        if kernels.c_plus is None or kernels.c_minus is None:
            raise CoverageError("kernel table lacks correlation kernels")
        if kernels.spec != model.bath:
            raise DomainError("kernel table was built for a different bath")
        self.model = model
        self.kernels = kernels
        self._kc, self._ks = _k_parts(model)
        self._k_nodes = k_operator(model, kernels.grid)
        self._cache = {}

    def with_origin(self, t_origin):
        g = super().with_origin(t_origin)
        if self.kernels.node(g.t_origin) is None:
            raise DomainError(f"memory origin {t_origin} is not a kernel grid node")
        g._cache = {}
        return g

    def _memory_at_node(self, m: int):
        key = m
        if key in self._cache:
            return self._cache[key]
        o = self.kernels.node(self.t_origin)
        n = m - o
        if n < 0:
            raise CoverageError("evaluation time precedes the memory origin")
        h = self.kernels.dt
        w = simpson_weights(n) * h
        j = np.arange(n + 1)
        # tau = j h, t1 = (m - j) h
        k_t1 = self._k_nodes[m - j]
        cp = self.kernels.c_plus[j]
        cm = self.kernels.c_minus[j]
        a_plus = np.einsum("j,jab->ab", w * cp, k_t1.conj().transpose(0, 2, 1))
        a_minus = np.einsum("j,jab->ab", w * cm, k_t1)
        self._cache[key] = (a_plus, a_minus)
        return a_plus, a_minus

    def memory(self, t: float):
        """``(A_plus(t), A_minus(t))``: the kernel-weighted memory integrals
        of K^+ and K.  Off-node times use 4-point Lagrange interpolation."""
        tab = self.kernels
        if t < self.t_origin - 1e-12 or t > tab.t_max * (1 + 1e-12) + 1e-12:
            raise CoverageError(f"kernel table does not cover t={t}")
        m = tab.node(t)
        if m is not None:
            return self._memory_at_node(m)
        base = int(math.floor(t / tab.dt)) - 1
        lo = max(tab.node(self.t_origin), 0)
        base = min(max(base, lo), len(tab.grid) - 4)
        nodes = np.arange(base, base + 4)
        ap = np.zeros((4, 4), dtype=complex)
        am = np.zeros((4, 4), dtype=complex)
        for nq in nodes:
            lq = np.prod([(t / tab.dt - nr) / (nq - nr) for nr in nodes if nr != nq])
            p, mm = self._memory_at_node(int(nq))
            ap += lq * p
            am += lq * mm
        return ap, am

    def apply(self, t, x):
        a_plus, a_minus = self.memory(t)
        k = self._kc * math.cos(self.model.v * t) + self._ks * math.sin(self.model.v * t)
        return _second_order(x, k, a_plus, a_minus)


class TwoQubitMarkovGenerator(Generator):
    """Two-qubit generator with the memory integral extended to infinity.

    The half-line transforms of the correlation kernels are evaluated in
    the frequency domain (resonant delta term plus principal value).
    """

    dim = 4

    def __init__(self, model: TwoQubitModel):
        self.model = model
        kc, ks = _k_parts(model)
        # K(t) = Kp e^{iVt} + Km e^{-iVt}
        self._kp = 0.5 * (kc - 1j * ks)
        self._km = 0.5 * (kc + 1j * ks)
        v = model.v
        gp_v, gm_v = half_fourier_correlations(model.bath, v)
        gp_mv, gm_mv = half_fourier_correlations(model.bath, -v)
        self._gamma = (gp_v, gp_mv, gm_v, gm_mv)

    def memory(self, t):
        gp_v, gp_mv, gm_v, gm_mv = self._gamma
        e = np.exp(1j * self.model.v * t)
        kp, km = self._kp, self._km
        a_plus = kp.conj().T * np.conj(e) * gp_v + km.conj().T * e * gp_mv
        a_minus = kp * e * gm_mv + km * np.conj(e) * gm_v
        return a_plus, a_minus

    def apply(self, t, x):
        a_plus, a_minus = self.memory(t)
        e = np.exp(1j * self.model.v * t)
        k = self._kp * e + self._km * np.conj(e)
        return _second_order(x, k, a_plus, a_minus)


def two_qubit_generator(model: TwoQubitModel, kernels: KernelTable, rule="traditional", t_origin=0.0) -> Generator:
    gen = TwoQubitGenerator(model, kernels)
    if t_origin:
        gen = gen.with_origin(t_origin)
    return _rule(gen, rule)


def markov_generator(model, kernels: KernelTable | None = None, rule="traditional") -> Generator:
    """Memoryless generator for either model.

    For one qubit the rates are the constants ``f_pm(inf)``, ``g(inf)``
    (taken from ``kernels`` when given, otherwise computed).
    """
    if isinstance(model, SingleQubitModel):
        limits = kernels.limits if kernels is not None else markov_limits(model.bath)
        return _rule(SingleQubitGenerator(lambda tau: limits), rule)
    if isinstance(model, TwoQubitModel):
        return _rule(TwoQubitMarkovGenerator(model), rule)
    raise TypeError(f"unsupported model {type(model).__name__}")
