"""Ohmic bath: spectral density, TCL2 time kernels and their Markov limits.

All frequency integrals run over ``[0, 40 * omega_c]`` and are evaluated
with an adaptive Gauss-Kronrod bisection (:func:`scipy.integrate.quad_vec`)
whose initial split sits at the system frequency, where the integrands have
a removable singularity.  The removable limits are built into the
integrands (``t * sinc``), so no special casing is needed at the split.

Kernel conventions, with ``x = omega - omega0``::

    f_pm(t)  = int J (coth(beta w/2) +- 1) sin(x t) / x
    g(t)     = int J coth(beta w/2) [sin(x t) + i (1 - cos(x t))] / x
    c_plus   = int J (coth + 1)/2 exp(-i x tau)
    c_minus  = int J (coth - 1)/2 exp(+i x tau)

``g`` is the coherence decay kernel; its real part is ``(f_plus + f_minus)/2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.interpolate import CubicSpline

from .errors import CoverageError, DomainError, IntegrationError

RTOL = 1e-9
ATOL = 1e-12
OMEGA_MAX_FACTOR = 40.0
LAURENT_CUTOFF = 1e-4
GUARD_LAMBDA_T = 20.0
GUARD_TOL = 1e-4
PV_FRACTIONS = (0.1, 0.05, 0.025)


@dataclass(frozen=True)
class BathSpec:
    """Ohmic bath ``J(w) = lam * w * exp(-w / omega_c)`` at inverse
    temperature ``beta``, probed at system frequency ``omega0``."""

    lam: float
    omega_c: float
    beta: float
    omega0: float

    def __post_init__(self):
        for name in ("lam", "omega_c", "beta", "omega0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")

    @property
    def omega_max(self) -> float:
        return OMEGA_MAX_FACTOR * self.omega_c

    def rate_plus(self, w):
        """J(w) (coth(beta w / 2) + 1)."""
        return 2.0 * self.lam * np.exp(-w / self.omega_c) * (w + _w_bose(w, self.beta))

    def rate_minus(self, w):
        """J(w) (coth(beta w / 2) - 1)."""
        return 2.0 * self.lam * np.exp(-w / self.omega_c) * _w_bose(w, self.beta)

    def j_coth(self, w):
        return 0.5 * (self.rate_plus(w) + self.rate_minus(w))


def _w_bose(w, beta):
    """w * n(w) with n the Bose occupation; finite (1/beta) at w = 0."""
    w = np.asarray(w, dtype=float)
    x = beta * w
    small = x < LAURENT_CUTOFF
    xs = np.where(small, 1.0, x)
    # w e^{-x} / (1 - e^{-x}) never overflows at low temperature
    out = w * np.exp(-xs) / -np.expm1(-xs)
    # Laurent expansion of x / (e^x - 1)
    series = (1.0 - x / 2.0 + x * x / 12.0) / beta
    return np.where(small, series, out)


def spectral_density(spec: BathSpec, omega):
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("spectral density is defined for omega >= 0")
    out = spec.lam * w * np.exp(-w / spec.omega_c)
    return float(out) if out.ndim == 0 else out


def _sin_over_x(x, t):
    return t * np.sinc(x * t / np.pi)


def _one_minus_cos_over_x(x, t):
    # (1 - cos xt)/x = sin(xt/2) * t * sinc(xt/2)
    return np.sin(0.5 * x * t) * t * np.sinc(0.5 * x * t / np.pi)


def _integrate(fun, spec: BathSpec, rtol=RTOL, atol=ATOL, lo=0.0, hi=None, points=None):
    hi = spec.omega_max if hi is None else hi
    if points is None:
        points = [spec.omega0] if lo < spec.omega0 < hi else None
    res, err, info = quad_vec(
        fun, lo, hi, epsabs=atol, epsrel=rtol, norm="max",
        points=points, limit=200000, full_output=True,
    )
    scale = np.max(np.abs(res)) if np.size(res) else 0.0
    if info.status != 0 or err > rtol * scale + atol:
        raise IntegrationError(
            f"quadrature did not converge (estimate {err:.3g}, status {info.status})",
            estimate=err,
        )
    return res


def _fg_batch(spec: BathSpec, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    m = t.size

    def integrand(w):
        x = w - spec.omega0
        rp, rm = spec.rate_plus(w), spec.rate_minus(w)
        s = _sin_over_x(x, t)
        c = _one_minus_cos_over_x(x, t)
        jc = 0.5 * (rp + rm)
        return np.concatenate([rp * s, rm * s, jc * c])

    r = _integrate(integrand, spec)
    f_plus, f_minus, g_im = r[:m], r[m:2 * m], r[2 * m:]
    g = 0.5 * (f_plus + f_minus) + 1j * g_im
    return f_plus, f_minus, g


def _c_batch(spec: BathSpec, tau) -> tuple[np.ndarray, np.ndarray]:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    m = tau.size

    def integrand(w):
        x = w - spec.omega0
        hp, hm = 0.5 * spec.rate_plus(w), 0.5 * spec.rate_minus(w)
        cs, sn = np.cos(x * tau), np.sin(x * tau)
        return np.concatenate([hp * cs, -hp * sn, hm * cs, hm * sn])

    r = _integrate(integrand, spec)
    return r[:m] + 1j * r[m:2 * m], r[2 * m:3 * m] + 1j * r[3 * m:]


def _check_time(t):
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be >= 0, got {t}")


def f_kernels(spec: BathSpec, t: float) -> tuple[float, float]:
    """Population rates ``(f_plus(t), f_minus(t))``."""
    _check_time(t)
    fp, fm, _ = _fg_batch(spec, t)
    return float(fp[0]), float(fm[0])


def g_kernel(spec: BathSpec, t: float) -> complex:
    """Coherence decay kernel ``g(t)``."""
    _check_time(t)
    return complex(_fg_batch(spec, t)[2][0])


def correlation_kernels(spec: BathSpec, tau: float) -> tuple[complex, complex]:
    """Emission and absorption bath correlations ``(c_plus(tau), c_minus(tau))``."""
    _check_time(tau)
    cp, cm = _c_batch(spec, tau)
    return complex(cp[0]), complex(cm[0])


def principal_value(spec: BathSpec, h, pole: float, fractions=PV_FRACTIONS) -> float:
    """``P int_0^omega_max h(w) / (w - pole) dw``.

    Symmetric excision of ``(pole - eps, pole + eps)`` followed by Richardson
    extrapolation in ``eps``; the excision error is odd in ``eps``.
    """
    lo, hi = 0.0, spec.omega_max

    def piece(a, b):
        if b <= a:
            return 0.0
        val, err = quad(lambda w: h(w) / (w - pole), a, b, epsabs=ATOL, epsrel=1e-11, limit=1000)
        if err > 1e-9 * abs(val) + 1e-10:
            raise IntegrationError("principal value piece did not converge", estimate=err)
        return val

    if not lo < pole < hi:
        return piece(lo, hi)

    eps0 = min(pole - lo, hi - pole)
    vals = []
    for frac in fractions:
        eps = frac * eps0
        vals.append(piece(lo, pole - eps) + piece(pole + eps, hi))
    # eliminate the O(eps) and O(eps^3) terms (eps halves each time)
    r1 = [2.0 * vals[k + 1] - vals[k] for k in range(len(vals) - 1)]
    if len(r1) == 1:
        return r1[0]
    return (8.0 * r1[1] - r1[0]) / 7.0


def markov_limits(spec: BathSpec) -> tuple[float, float, complex]:
    """``(f_plus(inf), f_minus(inf), g(inf))``."""
    w0 = spec.omega0
    f_plus = math.pi * float(spec.rate_plus(w0))
    f_minus = math.pi * float(spec.rate_minus(w0))
    shift = principal_value(spec, spec.j_coth, w0)
    return f_plus, f_minus, complex(math.pi * float(spec.j_coth(w0)), shift)


def half_fourier_correlations(spec: BathSpec, nu: float) -> tuple[complex, complex]:
    """``int_0^inf c_pm(tau) exp(i nu tau) dtau``.

    Each is a delta contribution at the resonant frequency plus a principal
    value (frequency shift) term.
    """
    p_plus = spec.omega0 + nu
    p_minus = spec.omega0 - nu
    hp = lambda w: 0.5 * spec.rate_plus(w)  # noqa: E731
    hm = lambda w: 0.5 * spec.rate_minus(w)  # noqa: E731
    res_p = math.pi * float(hp(p_plus)) if 0.0 <= p_plus else 0.0
    res_m = math.pi * float(hm(p_minus)) if 0.0 <= p_minus else 0.0
    gp = complex(res_p, -principal_value(spec, hp, p_plus))
    gm = complex(res_m, principal_value(spec, hm, p_minus))
    return gp, gm


def markov_guard_index(t, f_plus, f_minus, limits, lam, tol=GUARD_TOL, run=3):
    """Index after which the f kernels may be replaced by their Markov limits.

    Returns the position of the last of ``run`` consecutive points beyond
    ``lam * t > 20`` where both rates sit within ``tol`` of their limits,
    or ``None``.
    """
    fp_inf, fm_inf = limits[0], limits[1]
    ok = (lam * np.asarray(t) > GUARD_LAMBDA_T) & (np.abs(np.asarray(f_plus) - fp_inf) < tol) & (
        np.abs(np.asarray(f_minus) - fm_inf) < tol
    )
    count = 0
    for k, flag in enumerate(ok):
        count = count + 1 if flag else 0
        if count >= run:
            return k
    return None


KERNEL_NAMES = ("f_plus", "f_minus", "g", "c_plus", "c_minus")


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Kernels tabulated on the uniform grid ``grid[k] = k * dt``.

    Lookups at grid nodes return tabulated values; other times use a cubic
    spline.  Kernels that were not requested at build time are ``None``.
    """

    spec: BathSpec
    dt: float
    grid: np.ndarray
    f_plus: np.ndarray | None = None
    f_minus: np.ndarray | None = None
    g: np.ndarray | None = None
    c_plus: np.ndarray | None = None
    c_minus: np.ndarray | None = None
    guard_index: int | None = None
    _splines: dict = field(default_factory=dict, repr=False)

    @property
    def t_max(self) -> float:
        return float(self.grid[-1])

    @cached_property
    def limits(self) -> tuple[float, float, complex]:
        return markov_limits(self.spec)

    def node(self, t: float) -> int | None:
        """Grid index if ``t`` is a node (to 1e-9 relative), else ``None``."""
        k = t / self.dt
        kr = round(k)
        if abs(k - kr) <= 1e-9 * max(1.0, abs(k)):
            return int(kr)
        return None

    def _series(self, name):
        arr = getattr(self, name)
        if arr is None:
            raise CoverageError(f"kernel '{name}' was not tabulated")
        return arr

    def __call__(self, name: str, t: float):
        arr = self._series(name)
        if t < -1e-12 or t > self.t_max * (1 + 1e-12) + 1e-12:
            raise CoverageError(f"t={t} outside kernel table [0, {self.t_max}]")
        k = self.node(t)
        if k is not None:
            return arr[min(k, len(arr) - 1)]
        if name not in self._splines:
            self._splines[name] = CubicSpline(self.grid, arr)
        val = self._splines[name](t)
        return complex(val) if np.iscomplexobj(arr) else float(val)

    def rows(self):
        zeros = np.zeros_like(self.grid)
        cols = [self.grid]
        for name in KERNEL_NAMES:
            arr = getattr(self, name)
            arr = zeros if arr is None else arr
            if name in ("f_plus", "f_minus"):
                cols.append(np.real(arr))
            else:
                cols += [np.real(arr), np.imag(arr)]
        return np.column_stack(cols)


KERNEL_CSV_HEADER = ["t", "f_plus", "f_minus", "g_re", "g_im", "cplus_re", "cplus_im", "cminus_re", "cminus_im"]


def write_kernel_csv(table: KernelTable, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(KERNEL_CSV_HEADER)
    for row in table.rows():
        w.writerow([f"{v:.17g}" for v in row])


def _tabulate_fg(spec, grid, chunk=64):
    cut = GUARD_LAMBDA_T / spec.lam
    head = grid[grid <= cut]
    fp, fm, g = (list(a) for a in _fg_batch(spec, head))
    start = head.size
    limits = None
    guard = None
    while start < grid.size:
        block = grid[start:start + chunk]
        bp, bm, bg = _fg_batch(spec, block)
        fp += list(bp)
        fm += list(bm)
        g += list(bg)
        start += block.size
        if limits is None:
            limits = markov_limits(spec)
        k = markov_guard_index(grid[:start], fp, fm, limits, spec.lam)
        if k is not None:
            guard = k
            n_rest = grid.size - (k + 1)
            fp = fp[:k + 1] + [limits[0]] * n_rest
            fm = fm[:k + 1] + [limits[1]] * n_rest
            g = g[:k + 1] + [limits[2]] * n_rest
            break
    return np.array(fp), np.array(fm), np.array(g, dtype=complex), guard


def build_kernel_table(spec: BathSpec, t_max: float, dt_kernel: float, kernels=("f", "g", "c")) -> KernelTable:
    """Tabulate the bath kernels on ``[0, t_max]`` with step ``dt_kernel``.

    ``kernels`` selects the families to compute: ``"f"`` and ``"g"`` are the
    single-qubit rates (always computed together), ``"c"`` the correlations.
    """
    if not (t_max > 0 and 0 < dt_kernel <= t_max * (1 + 1e-12)):
        raise DomainError(f"need t_max > 0 and 0 < dt_kernel <= t_max (got {t_max}, {dt_kernel})")
    n = int(math.ceil(t_max / dt_kernel - 1e-9)) + 1
    grid = np.arange(n) * dt_kernel
    out = {}
    guard = None
    try:
        if "f" in kernels or "g" in kernels:
            fp, fm, g, guard = _tabulate_fg(spec, grid)
            fp[0] = fm[0] = 0.0
            g[0] = 0.0
            out.update(f_plus=fp, f_minus=fm, g=g)
        if "c" in kernels:
            cp, cm = _c_batch(spec, grid)
            out.update(c_plus=cp, c_minus=cm)
    except IntegrationError as exc:
        # locate the offending node
        for k, t in enumerate(grid):
            try:
                _fg_batch(spec, t)
                _c_batch(spec, t)
            except IntegrationError as inner:
                raise IntegrationError(f"{inner} at grid index {k} (t={t})", inner.estimate, k) from exc
        raise
    table = KernelTable(spec=spec, dt=dt_kernel, grid=grid, guard_index=guard, **out)
    if table.f_plus is not None:
        _sanity_check(table)
    return table


def _sanity_check(table: KernelTable, tol=1e-10):
    import warnings

    bad = np.flatnonzero((table.f_plus < table.f_minus - tol) | (table.f_minus < -tol))
    if bad.size:
        warnings.warn(
            f"kernel ordering f_plus >= f_minus >= 0 violated at {bad.size} grid points "
            f"(first t={table.grid[bad[0]]})",
            RuntimeWarning,
            stacklevel=3,
        )
