"""Run configuration: a line-oriented ``key = value`` document.

Example::

    # reference preset 1
    model = single_qubit
    solver = compare_all
    lambda = 1
    omega_c = 10
    omega0 = 2
    beta = 0.3
    restart_step = 0.05
    t_final = 5

Complex values accept ``i`` or ``j`` as the imaginary unit (``0.4+0.3i``).
All quantities are in one common frequency unit; ``dt_kernel`` defaults to
``0.01 / lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError, TCLError
from .linalg import canonical_indices

MODELS = ("single_qubit", "two_qubit")
SOLVERS = ("traditional", "element_iterative", "markov", "compare_all")
PRESETS = ("excited", "ground", "mixed", "custom")
TWO_QUBIT_KEYS = ("v", "alpha1", "alpha2", "alpha1_re", "alpha1_im", "alpha2_re", "alpha2_im")


@dataclass(frozen=True)
class RunConfig:
    model: str
    solver: str
    lam: float
    omega_c: float
    omega0: float
    beta: float
    restart_step: float
    t_final: float
    dt: float
    dt_kernel: float
    renormalize_trace: bool = False
    v: float = 0.0
    alpha1: complex = 0j
    alpha2: complex = 0j
    initial_state: str = "excited"
    initial_elements: tuple = ()
    output_path: str = "trajectory.csv"

    @property
    def dim(self) -> int:
        return 2 if self.model == "single_qubit" else 4

    def validate(self) -> "RunConfig":
        from .bath import BathSpec
        from .propagator import SolverConfig

        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}", key="model")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}", key="solver")
        if self.initial_state not in PRESETS:
            raise ConfigError(f"initial_state must be one of {PRESETS}", key="initial_state")
        for key, value in (("lambda", self.lam), ("omega_c", self.omega_c), ("omega0", self.omega0), ("beta", self.beta)):
            if not value > 0:
                raise ConfigError("must be positive", key=key)
        if not 0 < self.dt <= self.restart_step * (1 + 1e-12):
            raise ConfigError("need 0 < dt <= restart_step", key="dt")
        if not self.restart_step <= self.t_final * (1 + 1e-12):
            raise ConfigError("need restart_step <= t_final", key="restart_step")
        for key, ratio in (("dt", self.restart_step / self.dt), ("t_final", self.t_final / self.restart_step)):
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                what = "restart_step/dt" if key == "dt" else "t_final/restart_step"
                raise ConfigError(f"{what} = {ratio:.6g} is not an integer", key=key)
        try:
            BathSpec(self.lam, self.omega_c, self.beta, self.omega0)
            SolverConfig(self.dt, self.restart_step, self.t_final, self.renormalize_trace)
        except TCLError as exc:
            raise ConfigError(str(exc)) from None
        if not self.dt_kernel > 0:
            raise ConfigError("dt_kernel must be positive", key="dt_kernel")
        n_el = len(canonical_indices(self.dim))
        if self.initial_state == "custom":
            if len(self.initial_elements) != n_el:
                raise ConfigError(f"custom state needs {n_el} canonical elements", key="initial_elements")
        elif self.initial_elements:
            raise ConfigError("initial_elements is only allowed with initial_state = custom", key="initial_elements")
        if self.model == "single_qubit" and (self.v or self.alpha1 or self.alpha2):
            raise ConfigError("two-qubit parameters given for single_qubit model")
        return self


def _parse_complex(text: str) -> complex:
    s = text.replace(" ", "").replace("i", "j")
    return complex(s)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return v


_FLOATS = {"lambda": "lam", "omega_c": "omega_c", "omega0": "omega0", "beta": "beta",
           "restart_step": "restart_step", "t_final": "t_final", "dt": "dt",
           "dt_kernel": "dt_kernel", "v": "v"}
_STRINGS = {"model": "model", "solver": "solver", "initial_state": "initial_state", "output_path": "output_path"}
_PARTS = ("alpha1_re", "alpha1_im", "alpha2_re", "alpha2_im")
KEYS = (*_FLOATS, *_STRINGS, "renormalize_trace", "alpha1", "alpha2", *_PARTS, "initial_elements")
REQUIRED = ("model", "lambda", "omega_c", "omega0", "beta", "restart_step", "t_final")


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    parts: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in lines:
            raise ConfigError("duplicate key", line=lineno, key=key)
        lines[key] = lineno
        try:
            if key in _FLOATS:
                values[_FLOATS[key]] = _parse_float(value)
            elif key in _STRINGS:
                if not value:
                    raise ValueError("empty value")
                values[_STRINGS[key]] = value
            elif key == "renormalize_trace":
                values["renormalize_trace"] = _parse_bool(value)
            elif key in ("alpha1", "alpha2"):
                values[key] = _parse_complex(value)
            elif key in _PARTS:
                parts[key] = _parse_float(value)
            elif key == "initial_elements":
                values["initial_elements"] = tuple(_parse_complex(v) for v in value.split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"malformed value {value!r} ({exc})", line=lineno, key=key) from None

    for name in ("alpha1", "alpha2"):
        re_key, im_key = f"{name}_re", f"{name}_im"
        if re_key in parts or im_key in parts:
            if name in values:
                raise ConfigError(f"give either {name} or {re_key}/{im_key}", line=lines.get(re_key, lines.get(im_key)), key=name)
            values[name] = complex(parts.get(re_key, 0.0), parts.get(im_key, 0.0))

    for key in REQUIRED:
        if key not in lines:
            raise ConfigError("missing required key", key=key)
    if values["model"] == "two_qubit":
        for key in ("v", "alpha1", "alpha2"):
            if key not in values:
                raise ConfigError("required for two_qubit", key=key)
    elif values["model"] == "single_qubit":
        for key in TWO_QUBIT_KEYS:
            if key in lines:
                raise ConfigError("only valid for model = two_qubit", line=lines[key], key=key)

    values.setdefault("solver", "compare_all")
    values.setdefault("dt", values["restart_step"] / 10.0)
    values.setdefault("dt_kernel", 0.01 / values["lam"] if values["lam"] > 0 else 0.01)
    try:
        cfg = RunConfig(**values)
        return cfg.validate()
    except ConfigError as exc:
        if exc.key in lines and exc.line is None:
            raise ConfigError(str(exc).split(": ", 1)[-1], line=lines[exc.key], key=exc.key) from None
        raise


def dump_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(dump_config(c)) == c``."""
    names = {v: k for k, v in {**_FLOATS, **_STRINGS}.items()}
    out = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        key = names.get(f.name, f.name)
        if cfg.model == "single_qubit" and key in TWO_QUBIT_KEYS:
            continue
        if f.name == "initial_elements":
            if not value:
                continue
            value = ", ".join(_fmt_complex(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, complex):
            value = _fmt_complex(value)
        elif isinstance(value, float):
            value = repr(value)
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{'+' if z.imag >= 0 or math.isnan(z.imag) else '-'}{abs(z.imag)!r}i"


def figure_config(which: int, **overrides) -> RunConfig:
    """Parameters of the two reference figures (``which`` = 1 or 2)."""
    base = dict(model="single_qubit", solver="compare_all", lam=1.0, omega_c=10.0, omega0=2.0,
                beta=0.3, restart_step=0.05, t_final=5.0, dt=0.005, dt_kernel=0.01)
    if which == 2:
        base.update(model="two_qubit", v=0.6, alpha1=0.4 + 0.3j, alpha2=0.5 + 0.2j)
    elif which != 1:
        raise ValueError("figure must be 1 or 2")
    cfg = RunConfig(**base)
    if overrides:
        if "restart_step" in overrides and "dt" not in overrides:
            overrides["dt"] = overrides["restart_step"] / 10.0
        cfg = replace(cfg, **overrides)
    return cfg.validate()
