"""Small dense complex matrix algebra for density matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Indices are
0-based internally; :attr:`ElementIndex.label` gives the 1-based label used
in output files (``(1, 0)`` -> ``"21"``).
"""

from __future__ import annotations

from typing import Mapping, NamedTuple

import numpy as np

from .errors import DimensionError, HermiticityError, IncompleteSetError, TraceError

HERMITIAN_ATOL = 1e-12


class ElementIndex(NamedTuple):
    i: int
    j: int

    @property
    def label(self) -> str:
        return f"{self.i + 1}{self.j + 1}"

    @property
    def is_diagonal(self) -> bool:
        return self.i == self.j

    def check(self, dim: int) -> "ElementIndex":
        if not (0 <= self.i < dim and 0 <= self.j < dim):
            raise DimensionError(f"index {tuple(self)} out of range for dim {dim}")
        return self


def canonical_indices(dim: int) -> list[ElementIndex]:
    """Independent element set: leading diagonals, then the strict lower
    triangle in row-major order.  Length is ``(dim-1)(dim+2)/2``."""
    if dim < 1:
        raise DimensionError(f"dim must be positive, got {dim}")
    diag = [ElementIndex(i, i) for i in range(dim - 1)]
    lower = [ElementIndex(i, j) for i in range(dim) for j in range(i)]
    return diag + lower


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def elementary_matrix(idx: ElementIndex, dim: int) -> np.ndarray:
    """E_ij: a single unit entry at row i, column j."""
    i, j = ElementIndex(*idx).check(dim)
    e = np.zeros((dim, dim), dtype=complex)
    e[i, j] = 1.0
    return e


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


class DensityMatrix:
    """Hermitian, unit-trace state of the open system.

    The wrapped array is read-only.  ``trace_tol=None`` skips the trace
    check (used for raw solver diagnostics).
    """

    __slots__ = ("_m",)

    def __init__(self, matrix, trace_tol: float | None = 1e-9):
        m = np.array(as_matrix(matrix), dtype=complex, copy=True)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_ATOL:
            raise HermiticityError("density matrix is not Hermitian")
        if trace_tol is not None:
            tr = np.trace(m)
            if abs(tr - 1.0) > trace_tol:
                raise TraceError(f"trace {tr} differs from 1 by more than {trace_tol}")
        m.flags.writeable = False
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def __getitem__(self, idx):
        return self._m[idx]

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return np.array_equal(self._m, other._m)

    __hash__ = None

    def __repr__(self):
        return f"DensityMatrix({self._m!r})"

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, k: int, dim: int) -> "DensityMatrix":
        return cls(elementary_matrix(ElementIndex(k, k), dim))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


def extract_element(rho, idx: ElementIndex) -> complex:
    """Tr(E_ij^dagger rho), i.e. the (i, j) entry."""
    m = np.asarray(rho)
    i, j = ElementIndex(*idx).check(m.shape[0])
    return complex(m[i, j])


def extract_elements(rho) -> dict[ElementIndex, complex]:
    m = np.asarray(rho)
    return {idx: complex(m[idx]) for idx in canonical_indices(m.shape[0])}


def reconstruct(elements: Mapping[ElementIndex, complex], dim: int) -> DensityMatrix:
    """Rebuild rho from its canonical independent elements.

    Upper-triangle entries follow from hermiticity and the last diagonal
    entry from unit trace.
    """
    wanted = canonical_indices(dim)
    keys = {ElementIndex(*k) for k in elements}
    if keys != set(wanted):
        missing = sorted(set(wanted) - keys)
        extra = sorted(keys - set(wanted))
        raise IncompleteSetError(f"element set mismatch: missing={missing} extra={extra}")
    vals = {ElementIndex(*k): complex(v) for k, v in elements.items()}

    m = np.zeros((dim, dim), dtype=complex)
    for idx in wanted:
        v = vals[idx]
        if idx.is_diagonal:
            if abs(v.imag) > HERMITIAN_ATOL:
                raise HermiticityError(f"diagonal element {idx.label} has imaginary part {v.imag}")
            m[idx] = v.real
        else:
            m[idx.i, idx.j] = v
            m[idx.j, idx.i] = v.conjugate()
    m[dim - 1, dim - 1] = 1.0 - sum(m[k, k].real for k in range(dim - 1))
    return DensityMatrix(m, trace_tol=None)


SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
IDENTITY2 = np.eye(2, dtype=complex)


def two_qubit_operators() -> dict[str, np.ndarray]:
    """Ladder operators and projectors on two qubits.

    Basis order is |ee>, |eg>, |ge>, |gg> with qubit 1 the left Kronecker
    factor.  ``P+`` projects on the excited state, ``P-`` on the ground state.
    """
    sp1 = np.kron(SIGMA_PLUS, IDENTITY2)
    sp2 = np.kron(IDENTITY2, SIGMA_PLUS)
    sm1 = sp1.conj().T
    sm2 = sp2.conj().T
    return {
        "sp1": sp1,
        "sm1": sm1,
        "sp2": sp2,
        "sm2": sm2,
        "pp1": sp1 @ sm1,
        "pm1": sm1 @ sp1,
        "pp2": sp2 @ sm2,
        "pm2": sm2 @ sp2,
    }


def partial_trace_second(rho4) -> np.ndarray:
    """Trace out qubit 2 of a 4x4 two-qubit matrix."""
    r = np.asarray(rho4).reshape(2, 2, 2, 2)
    return np.einsum("ajbj->ab", r)
