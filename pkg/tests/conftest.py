import numpy as np
import pytest

from elemtcl.bath import BathSpec, build_kernel_table
from elemtcl.models import (
    SingleQubitModel, TwoQubitModel, markov_generator, single_qubit_generator, two_qubit_generator,
)
from elemtcl.propagator import SolverConfig, solve_iterative, solve_markov, solve_traditional

RESTART_STEPS = (0.1, 0.05, 0.025)
T_FINAL = 5.0

_acceptance_lines = []


def record(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    """Recorder for the per-criterion summary lines."""
    return record


@pytest.fixture(scope="session")
def fig1_spec():
    return BathSpec(lam=1.0, omega_c=10.0, beta=0.3, omega0=2.0)


@pytest.fixture(scope="session")
def fig2_model(fig1_spec):
    return TwoQubitModel(fig1_spec, v=0.6, alpha1=0.4 + 0.3j, alpha2=0.5 + 0.2j)


@pytest.fixture(scope="session")
def fig1_table(fig1_spec):
    # node spacing dt/2 for the finest restart step; coarser runs land on nodes too
    return build_kernel_table(fig1_spec, T_FINAL, RESTART_STEPS[-1] / 20, kernels=("f", "g", "c"))


@pytest.fixture(scope="session")
def excited1():
    return np.diag([1.0, 0.0]).astype(complex)


@pytest.fixture(scope="session")
def excited2():
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _runs(gen, rho0):
    out = {}
    for step in RESTART_STEPS:
        cfg = SolverConfig(step / 10, step, T_FINAL)
        out[step] = (solve_traditional(gen, rho0, cfg), solve_iterative(gen, rho0, cfg))
    return out


@pytest.fixture(scope="session")
def fig1_runs(fig1_spec, fig1_table, excited1):
    """{restart_step: (traditional, iterative)} for the single-qubit figure."""
    return _runs(single_qubit_generator(SingleQubitModel(fig1_spec), fig1_table), excited1)


@pytest.fixture(scope="session")
def fig2_runs(fig2_model, fig1_table, excited2):
    return _runs(two_qubit_generator(fig2_model, fig1_table), excited2)


@pytest.fixture(scope="session")
def fig1_markov(fig1_spec, excited1):
    cfg = SolverConfig(0.005, 0.05, T_FINAL)
    return solve_markov(markov_generator(SingleQubitModel(fig1_spec)), excited1, cfg)
