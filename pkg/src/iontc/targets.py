"""Target operations, the bit-flip correction round and the golden sequence registry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .objective import FullUnitary, QecSubspace, qec_spec, value
from .qops import (
    SIGMA_X,
    DomainError,
    check_qubits,
    embed,
    fidelity,
    kron_all,
    pauli_string_operator,
)
from .seqmodel import (
    PulseSequence,
    build_spin_echo_x,
    compile_sequence,
    parse_sequence,
)


def _distinct(indices, n_qubits: int) -> None:
    check_qubits(n_qubits)
    if len(set(indices)) != len(indices):
        raise DomainError(f"qubit indices must be distinct, got {indices}")
    for k in indices:
        if not 1 <= k <= n_qubits:
            raise DomainError(f"qubit index {k} out of range for {n_qubits} qubits")


def identity(n_qubits: int) -> np.ndarray:
    check_qubits(n_qubits)
    return np.eye(2**n_qubits, dtype=complex)


def cnot(control: int, target: int, n_qubits: int) -> np.ndarray:
    """(I + Z_c + X_t - Z_c X_t) / 2."""
    _distinct((control, target), n_qubits)
    return pauli_string_operator(
        [
            (0.5, []),
            (0.5, [(control, "z")]),
            (0.5, [(target, "x")]),
            (-0.5, [(control, "z"), (target, "x")]),
        ],
        n_qubits,
    )


def double_cnot(n_qubits: int = 3) -> np.ndarray:
    """Qubit 1 controlling NOTs on qubits 2 and 3."""
    _distinct((1, 2, 3), n_qubits)
    flip = [(2, "x"), (3, "x")]
    return pauli_string_operator(
        [(0.5, []), (0.5, [(1, "z")]), (0.5, flip), (-0.5, [(1, "z")] + flip)], n_qubits
    )


def toffoli(n_qubits: int = 3, controls: tuple[int, int] = (1, 2), target: int = 3) -> np.ndarray:
    """(3I + X_t + (Z_a + Z_b - Z_a Z_b)(I - X_t)) / 4."""
    a, b = controls
    _distinct((a, b, target), n_qubits)
    t = target
    return pauli_string_operator(
        [
            (0.75, []),
            (0.25, [(t, "x")]),
            (0.25, [(a, "z")]),
            (-0.25, [(a, "z"), (t, "x")]),
            (0.25, [(b, "z")]),
            (-0.25, [(b, "z"), (t, "x")]),
            (-0.25, [(a, "z"), (b, "z")]),
            (0.25, [(a, "z"), (b, "z"), (t, "x")]),
        ],
        n_qubits,
    )


def _xx_pair_rotation(angle: float) -> np.ndarray:
    # exp(-i angle X(x)X) = cos(angle) I - i sin(angle) X(x)X
    return math.cos(angle) * np.eye(4) - 1j * math.sin(angle) * np.kron(SIGMA_X, SIGMA_X)


def bell_map(n_qubits: int, offset: int = 0, angle: float = math.pi / 4) -> np.ndarray:
    """exp(-i angle sum_m X_a X_b) over disjoint neighbour pairs.

    ``offset=0`` pairs (1,2), (3,4), ...; ``offset=1`` pairs (2,3), (4,5), ...
    leaving the end qubits untouched.
    """
    check_qubits(n_qubits)
    if offset not in (0, 1):
        raise DomainError("offset must be 0 or 1")
    if offset == 0 and n_qubits % 2:
        raise DomainError("pairing (1,2), (3,4), ... needs an even number of qubits")
    blocks = [np.eye(2)] * offset
    k = offset
    while k + 2 <= n_qubits:
        blocks.append(_xx_pair_rotation(angle))
        k += 2
    blocks += [np.eye(2)] * (n_qubits - k)
    return kron_all(blocks)


def pauli_x(k: int, n_qubits: int) -> np.ndarray:
    return embed(SIGMA_X, k, n_qubits)


def qec_circuit_unitary() -> np.ndarray:
    """Syndrome extraction and Toffoli correction on 5 qubits (data 1-3, ancillas 4-5).

    Ancilla 4 records q1 xor q2, ancilla 5 records q2 xor q3; the syndrome
    (1,0) flips q1, (1,1) flips q2 and (0,1) flips q3.
    """
    n = 5
    gates = [cnot(1, 4, n), cnot(2, 4, n), cnot(2, 5, n), cnot(3, 5, n)]
    x4, x5 = pauli_x(4, n), pauli_x(5, n)
    gates.append(toffoli(n, (4, 5), 2))
    gates += [x5, toffoli(n, (4, 5), 1), x5]
    gates += [x4, toffoli(n, (4, 5), 3), x4]
    u = np.eye(2**n, dtype=complex)
    for g in gates:
        u = g @ u
    return u


# -- circuit-level pulse constructions used as a warm start ------------------------


def cnot_sequence(control: int, target: int, n_qubits: int) -> PulseSequence:
    """CNOT from the reference N >= 4 sequence with the addressed qubits relabeled."""
    _distinct((control, target), n_qubits)
    if n_qubits < 4:
        raise DomainError("the relabeled CNOT sequence needs at least four qubits")
    base = _golden_text("cnot_nq.seq")
    return parse_sequence(base, 4).relabeled({1: control, 2: target}, n_qubits)


def _rz(k: int, theta: float, n: int) -> PulseSequence:
    return PulseSequence.from_pairs([(f"Z{k}", theta)], n)


def hadamard_sequence(k: int, n_qubits: int) -> PulseSequence:
    """H = Rz(pi/2) Rx(pi/2) Rz(pi/2) up to phase."""
    return _rz(k, math.pi / 2, n_qubits) + build_spin_echo_x(k, math.pi / 2, n_qubits) + _rz(k, math.pi / 2, n_qubits)


def toffoli_sequence(a: int, b: int, t: int, n_qubits: int) -> PulseSequence:
    """Textbook six-CNOT Toffoli with T gates as light shifts (exact up to phase)."""
    q = math.pi / 4
    parts = [
        hadamard_sequence(t, n_qubits),
        cnot_sequence(b, t, n_qubits), _rz(t, -q, n_qubits),
        cnot_sequence(a, t, n_qubits), _rz(t, q, n_qubits),
        cnot_sequence(b, t, n_qubits), _rz(t, -q, n_qubits),
        cnot_sequence(a, t, n_qubits), _rz(b, q, n_qubits), _rz(t, q, n_qubits),
        hadamard_sequence(t, n_qubits),
        cnot_sequence(a, b, n_qubits), _rz(a, q, n_qubits), _rz(b, -q, n_qubits),
        cnot_sequence(a, b, n_qubits),
    ]
    out = PulseSequence.empty(n_qubits)
    for p in parts:
        out = out + p
    return out


def qec_circuit_sequence() -> PulseSequence:
    """Pulse-level expansion of :func:`qec_circuit_unitary` (several hundred pulses)."""
    n = 5
    flip = lambda k: build_spin_echo_x(k, math.pi, n)  # noqa: E731
    parts = [cnot_sequence(1, 4, n), cnot_sequence(2, 4, n), cnot_sequence(2, 5, n), cnot_sequence(3, 5, n)]
    parts.append(toffoli_sequence(4, 5, 2, n))
    parts += [flip(5), toffoli_sequence(4, 5, 1, n), flip(5)]
    parts += [flip(4), toffoli_sequence(4, 5, 3, n), flip(4)]
    out = PulseSequence.empty(n)
    for p in parts:
        out = out + p
    return out


# -- one round of repetitive correction -------------------------------------------


def _qec_round(correction: np.ndarray, data: np.ndarray, error_index: int, rng, spec: QecSubspace):
    if not 0 <= error_index < spec.n_branches:
        raise DomainError(f"error_index must lie in [0, {spec.n_branches - 1}]")
    d_anc = 2**spec.n_ancilla
    state = np.kron(spec.error_set[error_index] @ data, spec.ancilla_init)
    state = correction @ state
    amps = state.reshape(-1, d_anc)
    probs = np.sum(np.abs(amps) ** 2, axis=0)
    probs = probs / probs.sum()
    outcome = int(rng.choice(d_anc, p=probs))
    restored = amps[:, outcome] / math.sqrt(probs[outcome])
    syndrome = tuple(int(b) for b in format(outcome, f"0{spec.n_ancilla}b"))
    return restored, syndrome


def logical_state(alpha: complex, beta: complex, spec: QecSubspace | None = None) -> np.ndarray:
    spec = spec or qec_spec()
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-12:
        raise DomainError("logical amplitudes must satisfy |alpha|^2 + |beta|^2 = 1")
    zero, one = spec.code_states
    return alpha * zero + beta * one


def simulate_qec_round(
    correction: np.ndarray,
    logical: tuple[complex, complex],
    error_index: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Encode, apply error ``error_index`` (0 = none, k = X on data qubit k), correct, measure ancillas.

    Returns the post-measurement data state (ancillas reset) and the syndrome bits.
    """
    spec = qec_spec()
    return _qec_round(correction, logical_state(*logical, spec), error_index, rng, spec)


def simulate_qec_rounds(correction: np.ndarray, logical, errors, rng) -> tuple[np.ndarray, list]:
    """Repeated rounds; the data register carries over, ancillas are reset each round."""
    spec = qec_spec()
    data = logical_state(*logical, spec)
    syndromes = []
    for e in errors:
        data, s = _qec_round(correction, data, e, rng, spec)
        syndromes.append(s)
    return data, syndromes


# -- names understood by the command line --------------------------------------------


TARGET_NAMES = {
    "identity": "identity on all qubits",
    "cnot": "cnot:C,T  controlled NOT",
    "double_cnot": "qubit 1 controlling NOTs on 2 and 3",
    "toffoli": "toffoli or toffoli:A,B,T",
    "bell_map": "exp(-i pi/4 sum X X) on pairs (1,2),(3,4),...",
    "bell_map_odd": "exp(-i pi/4 sum X X) on pairs (2,3),(4,5),...",
    "qec": "bit-flip correction subspace objective (5 qubits)",
}


def _int_args(args: str | None) -> list[int]:
    if not args:
        return []
    try:
        return [int(a) for a in args.split(",")]
    except ValueError as exc:
        raise DomainError(f"bad target arguments {args!r}") from exc


def resolve_target(name: str, n_qubits: int):
    """Objective for a target such as ``"cnot:1,2"``, ``"qec"`` or a matrix file path."""
    check_qubits(n_qubits)
    base, _, args = name.partition(":")
    ints = _int_args(args)
    if base == "identity":
        return FullUnitary(identity(n_qubits))
    if base == "cnot":
        if len(ints) != 2:
            raise DomainError("cnot needs two arguments, e.g. cnot:1,2")
        return FullUnitary(cnot(ints[0], ints[1], n_qubits))
    if base == "double_cnot":
        return FullUnitary(double_cnot(n_qubits))
    if base == "toffoli":
        if ints and len(ints) != 3:
            raise DomainError("toffoli takes three arguments, e.g. toffoli:1,2,3")
        a, b, t = ints or (1, 2, 3)
        return FullUnitary(toffoli(n_qubits, (a, b), t))
    if base == "bell_map":
        return FullUnitary(bell_map(n_qubits))
    if base == "bell_map_odd":
        return FullUnitary(bell_map(n_qubits, offset=1))
    if base == "qec":
        spec = qec_spec()
        if n_qubits != spec.n_qubits:
            raise DomainError(f"qec acts on {spec.n_qubits} qubits, not {n_qubits}")
        return spec
    path = Path(name)
    if path.suffix in (".npy", ".txt") or path.exists():
        return FullUnitary(load_matrix(path, n_qubits))
    raise DomainError(f"unknown target {name!r}")


def load_matrix(path, n_qubits: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DomainError(f"matrix file {path} not found")
    u = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, dtype=complex, ndmin=2)
    if u.shape != (2**n_qubits, 2**n_qubits):
        raise DomainError(f"matrix in {path} has shape {u.shape}, expected {2**n_qubits}x{2**n_qubits}")
    return u


# -- golden registry ---------------------------------------------------------------


def _golden_text(filename: str) -> str:
    return resources.files("iontc").joinpath("golden").joinpath(filename).read_text(encoding="utf-8")


def parse_manifest(text: str) -> list[dict[str, str]]:
    """Blank-line separated blocks of ``key = value`` lines; ``#`` starts a comment."""
    entries, block = [], {}
    for raw in text.splitlines() + [""]:
        line = raw.split("#", 1)[0].strip()
        if not line:
            if block:
                entries.append(block)
                block = {}
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DomainError(f"manifest line without '=': {raw!r}")
        block[key.strip()] = val.strip()
    return entries


@dataclass(frozen=True)
class GoldenSequence:
    name: str
    n_qubits: int
    sequence: PulseSequence
    target: str
    expected_value: float
    repeat: int = 1
    source: str = ""

    def program(self) -> PulseSequence:
        """The sequence as executed, including repetitions."""
        return self.sequence * self.repeat


def golden_registry() -> list[GoldenSequence]:
    out = []
    for e in parse_manifest(_golden_text("manifest.txt")):
        n = int(e["qubits"])
        out.append(
            GoldenSequence(
                name=e["name"],
                n_qubits=n,
                sequence=parse_sequence(_golden_text(e["sequence"]), n),
                target=e["target"],
                expected_value=float(e["expected"]),
                repeat=int(e.get("repeat", 1)),
                source=e["sequence"],
            )
        )
    return out


def golden(name: str) -> GoldenSequence:
    for entry in golden_registry():
        if entry.name == name:
            return entry
    raise KeyError(name)


@dataclass(frozen=True)
class Verification:
    name: str
    measured: float
    expected: float
    passed: bool


def measure(spec, seq: PulseSequence) -> float:
    """Fidelity |Tr(U^H V)|/dim for unitary targets, the overlap sum for QEC."""
    if isinstance(spec, FullUnitary):
        return fidelity(spec.target, compile_sequence(seq))
    return value(spec, seq)


def verify_golden(entry: GoldenSequence, tol: float = 1e-9) -> Verification:
    spec = resolve_target(entry.target, entry.n_qubits)
    measured = measure(spec, entry.program())
    return Verification(entry.name, measured, entry.expected_value, measured >= entry.expected_value - tol)

