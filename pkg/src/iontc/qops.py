"""Dense linear algebra for N-qubit registers and the native ion-trap generators.

Conventions: sigma_z = diag(1, -1), qubit 1 is the most significant tensor
factor, so basis index ``i`` has qubit ``k`` in state ``(i >> (n - k)) & 1``.

Native generators and their pulse unitaries::

    X      S_x = sum_k sigma_x^(k)      exp(-i theta/2 S_x)
    Y      S_y                          exp(-i theta/2 S_y)
    XX     S_x^2                        exp(-i theta/4 S_x^2)
    YY     S_y^2                        exp(-i theta/4 S_y^2)
    Z(k)   sigma_z^(k)                  exp(-i theta/2 sigma_z^(k))
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 10

KINDS = ("X", "Y", "XX", "YY", "Z")

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

# Columns are the +1/-1 eigenvectors of sigma_x and sigma_y.
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_Y_BASIS = np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2)

for _m in (I2, SIGMA_X, SIGMA_Y, SIGMA_Z, _HADAMARD, _Y_BASIS):
    _m.setflags(write=False)


class DomainError(ValueError):
    """Raised for out-of-range qubit indices, dimensions or malformed operators."""


@dataclass(frozen=True)
class Generator:
    """One Hamiltonian from the native set; ``index`` is the 1-based qubit for Z."""

    kind: str
    index: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown generator kind {self.kind!r}")
        if self.kind == "Z":
            if not isinstance(self.index, (int, np.integer)) or self.index < 1:
                raise DomainError(f"Z generator needs a qubit index >= 1, got {self.index!r}")
        elif self.index is not None:
            raise DomainError(f"generator {self.kind} acts globally and takes no index")

    @classmethod
    def z(cls, k: int) -> "Generator":
        return cls("Z", k)

    @property
    def label(self) -> str:
        return f"Z{self.index}" if self.kind == "Z" else self.kind

    @property
    def coefficient(self) -> float:
        """Angle normalization c in exp(-i c theta H)."""
        return 0.25 if self.kind in ("XX", "YY") else 0.5

    def check(self, n_qubits: int) -> None:
        check_qubits(n_qubits)
        if self.kind == "Z" and not 1 <= self.index <= n_qubits:
            raise DomainError(f"qubit index {self.index} out of range for {n_qubits} qubits")

    def __str__(self) -> str:
        return self.label


def check_qubits(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise DomainError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")


def all_generators(n_qubits: int, include_y: bool = True) -> list[Generator]:
    """Every valid generator for an n-qubit register, global ones first."""
    check_qubits(n_qubits)
    kinds = ("X", "Y", "XX", "YY") if include_y else ("X", "XX")
    return [Generator(k) for k in kinds] + [Generator.z(k) for k in range(1, n_qubits + 1)]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, ops, np.eye(1, dtype=complex))


def embed(op: np.ndarray, k: int, n_qubits: int) -> np.ndarray:
    """Place a single-qubit operator on qubit ``k`` (1-based) of an n-qubit register."""
    check_qubits(n_qubits)
    if not 1 <= k <= n_qubits:
        raise DomainError(f"qubit index {k} out of range for {n_qubits} qubits")
    return kron_all(op if q == k else I2 for q in range(1, n_qubits + 1))


@lru_cache(maxsize=None)
def _z_signs(k: int, n_qubits: int) -> np.ndarray:
    bits = (np.arange(2**n_qubits) >> (n_qubits - k)) & 1
    return _readonly(1.0 - 2.0 * bits)


@lru_cache(maxsize=None)
def _collective_z(n_qubits: int) -> np.ndarray:
    return _readonly(sum(_z_signs(k, n_qubits) for k in range(1, n_qubits + 1)))


@lru_cache(maxsize=None)
def _basis_power(axis: str, n_qubits: int) -> np.ndarray:
    single = _HADAMARD if axis == "x" else _Y_BASIS
    return _readonly(kron_all([single] * n_qubits))


@lru_cache(maxsize=None)
def _eigensystem(kind: str, index: int | None, n_qubits: int):
    if kind == "Z":
        return None, _z_signs(index, n_qubits)
    basis = _basis_power("x" if kind in ("X", "XX") else "y", n_qubits)
    lam = _collective_z(n_qubits)
    if kind in ("XX", "YY"):
        lam = _readonly(lam**2)
    return basis, lam


def eigensystem(g: Generator, n_qubits: int) -> tuple[np.ndarray | None, np.ndarray]:
    """Return ``(basis, eigenvalues)`` with ``H_g = basis @ diag(eigenvalues) @ basis^H``.

    ``basis`` is None for the diagonal Z generators. Both arrays are cached and
    read-only.
    """
    g.check(n_qubits)
    return _eigensystem(g.kind, g.index, n_qubits)


@lru_cache(maxsize=None)
def _generator_matrix(kind: str, index: int | None, n_qubits: int) -> np.ndarray:
    if kind == "Z":
        return _readonly(np.diag(_z_signs(index, n_qubits)).astype(complex))
    pauli = SIGMA_X if kind in ("X", "XX") else SIGMA_Y
    s = sum(embed(pauli, k, n_qubits) for k in range(1, n_qubits + 1))
    return _readonly(s @ s if kind in ("XX", "YY") else s)


def generator_matrix(g: Generator, n_qubits: int) -> np.ndarray:
    """Hermitian matrix H_g built directly from embedded Pauli operators."""
    g.check(n_qubits)
    return _generator_matrix(g.kind, g.index, n_qubits)


def _rotation(pauli: np.ndarray, theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * pauli


def pulse_unitary(g: Generator, theta: float, n_qubits: int) -> np.ndarray:
    """Closed-form exp(-i c_g theta H_g)."""
    g.check(n_qubits)
    if g.kind == "Z":
        return np.diag(np.exp(-0.5j * theta * _z_signs(g.index, n_qubits)))
    if g.kind in ("X", "Y"):
        pauli = SIGMA_X if g.kind == "X" else SIGMA_Y
        return kron_all([_rotation(pauli, theta)] * n_qubits)
    basis, lam = _eigensystem(g.kind, None, n_qubits)
    return (basis * np.exp(-0.25j * theta * lam)) @ basis.conj().T


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|Tr(u^H v)| / dim; equals 1 iff u and v agree up to a global phase."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DomainError(f"fidelity needs equal square shapes, got {u.shape} and {v.shape}")
    return float(abs(np.vdot(u, v)) / u.shape[0])


def is_unitary(u: np.ndarray, atol: float = 1e-12) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=atol))


def pauli_string_operator(
    terms: Sequence[tuple[complex, Sequence[tuple[int, str]]]], n_qubits: int
) -> np.ndarray:
    """Sum of coefficient * product of Pauli factors, e.g. ``[(0.5, [(1, "z"), (2, "x")])]``.

    An empty factor list is the identity term. Factors on the same qubit are
    multiplied in the order given.
    """
    check_qubits(n_qubits)
    out = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    for coeff, factors in terms:
        per_qubit = [I2] * n_qubits
        for k, axis in factors:
            if axis not in PAULI:
                raise DomainError(f"unknown Pauli axis {axis!r}")
            if not 1 <= k <= n_qubits:
                raise DomainError(f"qubit index {k} out of range for {n_qubits} qubits")
            per_qubit[k - 1] = PAULI[axis] @ per_qubit[k - 1]
        out += coeff * kron_all(per_qubit)
    return out


def basis_state(bits: str | Sequence[int], n_qubits: int | None = None) -> np.ndarray:
    """Computational basis vector; ``"10"`` puts qubit 1 in |1> and qubit 2 in |0>."""
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise DomainError(f"basis label must contain only 0/1, got {bits!r}")
    n = len(bits) if n_qubits is None else n_qubits
    if len(bits) != n:
        raise DomainError(f"basis label has {len(bits)} bits, register has {n} qubits")
    check_qubits(n)
    vec = np.zeros(2**n, dtype=complex)
    vec[int("".join(map(str, bits)), 2)] = 1.0
    return vec
