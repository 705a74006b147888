"""Performance functions and their exact per-pulse derivatives.

Every objective is expressed through a *core* matrix ``C = L . U . R`` where
``U`` is the compiled sequence and ``L``/``R`` are fixed boundary operators:

* full unitary target: ``L = U_target^H``, ``R = I`` and
  ``phi = |Tr C|^2 / 4^N``;
* QEC subspace: ``R`` stacks the four error branches applied to the two code
  words (with ancillas in ``|00>``) and ``L`` stacks the projections
  ``<000| (x) I_A`` and ``<111| (x) I_A``, so ``phi = Re sum_m <psi_A0|psi_A1>``.

Because a pulse has a single generator, ``U(theta)`` along one coordinate is
``W . exp(-i c theta H) . V`` with ``W``/``V`` independent of ``theta``. The
first and second derivatives are therefore exact, obtained in the generator's
eigenbasis from the cached partial products ``W`` (backward) and ``V``
(forward).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qops import DomainError, Generator, SIGMA_X, basis_state, eigensystem, embed, is_unitary
from .seqmodel import PulseSequence, apply_pulse

# Smoothing scale for the |theta|^gamma derivative at theta = 0.
PENALTY_SMOOTHING = 1e-8


@dataclass(frozen=True, eq=False)
class FullUnitary:
    target: np.ndarray

    def __post_init__(self):
        target = np.array(self.target, dtype=complex)
        if target.ndim != 2 or target.shape[0] != target.shape[1]:
            raise DomainError(f"target must be square, got shape {target.shape}")
        n = target.shape[0].bit_length() - 1
        if 2**n != target.shape[0] or n < 1:
            raise DomainError(f"target dimension {target.shape[0]} is not a power of two")
        if not is_unitary(target):
            raise DomainError("target is not unitary within 1e-12")
        target.setflags(write=False)
        object.__setattr__(self, "target", target)

    @property
    def n_qubits(self) -> int:
        return self.target.shape[0].bit_length() - 1

    max_value = 1.0

    def left(self) -> np.ndarray:
        return self.target.conj().T

    def right(self) -> np.ndarray:
        return np.eye(self.target.shape[0], dtype=complex)

    def score(self, core: np.ndarray) -> float:
        d = core.shape[0]
        return float(abs(np.trace(core)) ** 2 / d**2)

    def normalized(self, value: float) -> float:
        return value


@dataclass(frozen=True, eq=False)
class QecSubspace:
    """Correction step for the three-qubit bit-flip code with two ancillas.

    Data qubits come first (1..n_data), ancillas last.
    """

    code_states: tuple[np.ndarray, np.ndarray]
    error_set: tuple[np.ndarray, ...]
    ancilla_init: np.ndarray
    n_data: int = 3
    n_ancilla: int = 2

    def __post_init__(self):
        d_data = 2**self.n_data
        zero, one = (np.asarray(s, dtype=complex) for s in self.code_states)
        gram = np.array([[np.vdot(a, b) for b in (zero, one)] for a in (zero, one)])
        if zero.shape != (d_data,) or one.shape != (d_data,) or not np.allclose(gram, np.eye(2), atol=1e-12):
            raise DomainError("code states must be two orthonormal data-register vectors")
        errors = tuple(np.asarray(e, dtype=complex) for e in self.error_set)
        if not all(e.shape == (d_data, d_data) and is_unitary(e) for e in errors):
            raise DomainError("error operators must be unitary on the data register")
        anc = np.asarray(self.ancilla_init, dtype=complex)
        if anc.shape != (2**self.n_ancilla,) or abs(np.linalg.norm(anc) - 1) > 1e-12:
            raise DomainError("ancilla initial state must be a normalized vector")
        object.__setattr__(self, "code_states", (zero, one))
        object.__setattr__(self, "error_set", errors)
        object.__setattr__(self, "ancilla_init", anc)

    @property
    def n_qubits(self) -> int:
        return self.n_data + self.n_ancilla

    @property
    def n_branches(self) -> int:
        return len(self.error_set)

    @property
    def max_value(self) -> float:
        return float(self.n_branches)

    def right(self) -> np.ndarray:
        # columns: E_m |0_L>|a0> for all m, then E_m |1_L>|a0>
        cols = [np.kron(e @ s, self.ancilla_init) for s in self.code_states for e in self.error_set]
        return np.stack(cols, axis=1)

    def left(self) -> np.ndarray:
        eye_a = np.eye(2**self.n_ancilla, dtype=complex)
        return np.vstack([np.kron(s.conj()[None, :], eye_a) for s in self.code_states])

    def score(self, core: np.ndarray) -> float:
        return float(np.real(_qec_overlap(core, core, self.n_branches, 2**self.n_ancilla)))

    def normalized(self, value: float) -> float:
        return value / self.max_value


ObjectiveSpec = FullUnitary | QecSubspace


def _qec_overlap(a: np.ndarray, b: np.ndarray, branches: int, d_anc: int) -> complex:
    """sum_m <(a)_{0-block, m} | (b)_{1-block, m}> for stacked core matrices."""
    return np.vdot(a[:d_anc, :branches], b[d_anc:, branches:])


def qec_spec() -> QecSubspace:
    """Bit-flip code |000>, |111> with errors {I, X1, X2, X3} and ancillas in |00>."""
    errors = (np.eye(8, dtype=complex),) + tuple(embed(SIGMA_X, k, 3) for k in (1, 2, 3))
    return QecSubspace(
        code_states=(basis_state("000"), basis_state("111")),
        error_set=errors,
        ancilla_init=basis_state("00"),
    )


def _check(spec, seq: PulseSequence) -> None:
    if spec.n_qubits != seq.n_qubits:
        raise DomainError(
            f"objective acts on {spec.n_qubits} qubits but sequence on {seq.n_qubits}"
        )


# -- values --------------------------------------------------------------------


def propagate(seq: PulseSequence, state: np.ndarray) -> np.ndarray:
    for p in seq.pulses:
        state = apply_pulse(p.generator, p.angle, seq.n_qubits, state)
    return state


def value(spec, seq: PulseSequence) -> float:
    """Normalized trace overlap in [0, 1], or the QEC overlap sum in [-4, 4]."""
    _check(spec, seq)
    return spec.score(spec.left() @ propagate(seq, spec.right()))


def value_of_unitary(spec, u: np.ndarray) -> float:
    return spec.score(spec.left() @ u @ spec.right())


def _check_gamma(gamma: float) -> None:
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")


def penalty(seq: PulseSequence, gamma: float) -> float:
    """Sum of |theta_m|^gamma over all pulses."""
    _check_gamma(gamma)
    return float(np.sum(np.abs(seq.angles) ** gamma))


def penalized_value(spec, seq: PulseSequence, gamma: float, alpha: float) -> float:
    if alpha < 0:
        raise DomainError("alpha must be non-negative")
    return value(spec, seq) - alpha * penalty(seq, gamma)


def penalty_derivatives(theta: float, gamma: float, eps: float = PENALTY_SMOOTHING) -> tuple[float, float]:
    """Smoothed d/dtheta and d2/dtheta2 of |theta|^gamma.

    Uses sign(theta) * gamma * (theta^2 + eps^2)^((gamma - 1)/2), which is
    finite at the origin and exact to O(eps^2) elsewhere.
    """
    r2 = theta * theta + eps * eps
    d1 = np.sign(theta) * gamma * r2 ** ((gamma - 1) / 2)
    d2 = gamma * (gamma - 1) * abs(theta) * r2 ** ((gamma - 3) / 2)
    return float(d1), float(d2)


# -- propagator cache and derivatives -----------------------------------------------


@dataclass(frozen=True, eq=False)
class PropagatorCache:
    """Partial products for one sequence.

    ``forward[m]`` is ``U_{m+1} ... U_1 R`` (0-based pulses) and
    ``backward[m]`` is ``L U_M ... U_{m+2}``, i.e. everything after pulse m.
    ``right``/``left`` are the objective's boundary operators.
    """

    forward: tuple[np.ndarray, ...]
    backward: tuple[np.ndarray, ...]
    right: np.ndarray
    left: np.ndarray

    def before(self, m: int) -> np.ndarray:
        return self.right if m == 0 else self.forward[m - 1]

    def core(self) -> np.ndarray:
        return self.left @ (self.forward[-1] if self.forward else self.right)


def backward_products(spec, seq: PulseSequence) -> list[np.ndarray]:
    n = seq.n_qubits
    out = [None] * len(seq)
    acc = spec.left()
    for m in range(len(seq) - 1, -1, -1):
        out[m] = acc
        p = seq.pulses[m]
        acc = _right_apply(p.generator, p.angle, n, acc)
    return out


def _right_apply(g: Generator, theta: float, n: int, mat: np.ndarray) -> np.ndarray:
    """mat @ exp(-i c theta H_g)."""
    basis, lam = eigensystem(g, n)
    phases = np.exp(-1j * g.coefficient * theta * lam)
    if basis is None:
        return mat * phases[None, :]
    return ((mat @ basis) * phases[None, :]) @ basis.conj().T


def build_cache(spec, seq: PulseSequence) -> PropagatorCache:
    _check(spec, seq)
    right = spec.right()
    forward = []
    state = right
    for p in seq.pulses:
        state = apply_pulse(p.generator, p.angle, seq.n_qubits, state)
        forward.append(state)
    return PropagatorCache(tuple(forward), tuple(backward_products(spec, seq)), right, spec.left())


class LineProfile:
    """Objective restricted to one pulse angle, with exact derivatives at ``theta``.

    Built from the backward product ``back`` (everything after the pulse) and
    the forward product ``fwd`` (everything before it).
    """

    __slots__ = ("spec", "generator", "n_qubits", "basis", "lam", "coeff", "bt", "ft", "kd")

    def __init__(self, spec, generator: Generator, n_qubits: int, back: np.ndarray, fwd: np.ndarray):
        self.spec = spec
        self.generator = generator
        self.n_qubits = n_qubits
        self.basis, self.lam = eigensystem(generator, n_qubits)
        self.coeff = generator.coefficient
        if self.basis is None:
            self.bt, self.ft = back, fwd
        else:
            self.bt = back @ self.basis
            self.ft = self.basis.conj().T @ fwd
        # diag(ft @ bt) is all a trace objective needs
        self.kd = np.einsum("ij,ji->i", self.ft, self.bt) if isinstance(spec, FullUnitary) else None

    def phases(self, theta: float) -> np.ndarray:
        return np.exp(-1j * self.coeff * theta * self.lam)

    def derivatives(self, theta: float) -> tuple[float, float, float]:
        """(phi, dphi/dtheta, d2phi/dtheta2) of the unpenalized objective."""
        e = self.phases(theta)
        w1 = -1j * self.coeff * self.lam
        w2 = w1 * w1
        if self.kd is not None:
            d = self.kd.shape[0]
            t0 = np.dot(e, self.kd)
            ek = e * self.kd
            t1 = np.dot(w1, ek)
            t2 = np.dot(w2, ek)
            norm = float(d * d)
            return (
                float((t0.real**2 + t0.imag**2) / norm),
                float(2 * (t1 * t0.conjugate()).real / norm),
                float(2 * ((t1.real**2 + t1.imag**2) + (t2 * t0.conjugate()).real) / norm),
            )
        spec = self.spec
        b, da = spec.n_branches, 2**spec.n_ancilla
        c0 = self.bt @ (e[:, None] * self.ft)
        c1 = self.bt @ ((w1 * e)[:, None] * self.ft)
        c2 = self.bt @ ((w2 * e)[:, None] * self.ft)
        f0 = _qec_overlap(c0, c0, b, da)
        f1 = _qec_overlap(c1, c0, b, da) + _qec_overlap(c0, c1, b, da)
        f2 = _qec_overlap(c2, c0, b, da) + 2 * _qec_overlap(c1, c1, b, da) + _qec_overlap(c0, c2, b, da)
        return float(f0.real), float(f1.real), float(f2.real)

    def advance(self, theta: float) -> np.ndarray:
        """Forward product including this pulse at angle ``theta``."""
        e = self.phases(theta)
        if self.basis is None:
            return e[:, None] * self.ft
        return self.basis @ (e[:, None] * self.ft)


def pulse_derivatives(spec, seq: PulseSequence, m: int, cache: PropagatorCache | None = None) -> tuple[float, float]:
    """Exact (dphi/dtheta_m, d2phi/dtheta_m^2) of the unpenalized objective; ``m`` is 0-based."""
    if not 0 <= m < len(seq):
        raise DomainError(f"pulse index {m} out of range for {len(seq)} pulses")
    if cache is None:
        cache = build_cache(spec, seq)
    p = seq.pulses[m]
    prof = LineProfile(spec, p.generator, seq.n_qubits, cache.backward[m], cache.before(m))
    _, d1, d2 = prof.derivatives(p.angle)
    return d1, d2


def penalized_derivatives(
    spec, seq: PulseSequence, m: int, gamma: float, alpha: float, cache: PropagatorCache | None = None
) -> tuple[float, float]:
    d1, d2 = pulse_derivatives(spec, seq, m, cache)
    if alpha:
        p1, p2 = penalty_derivatives(seq.pulses[m].angle, gamma)
        d1 -= alpha * p1
        d2 -= alpha * p2
    return d1, d2
