"""Pulse sequences: data model, text format, compilation and spin-echo builders.

Text format (one sequence per ``.seq`` file, ``#`` comments, newlines are
whitespace)::

    [pi/2]_X - [-pi/2]_Z1 - [pi/4]_XX - [3pi/8]_YY - [0.25]_Y

Pulses are listed in time order: the leftmost pulse acts on the state first,
so the compiled unitary of ``p1 - p2 - ... - pM`` is ``U_M ... U_2 U_1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .qops import DomainError, Generator, check_qubits, eigensystem, pulse_unitary

TWO_PI = 2 * math.pi

# Rational multiples of pi are printed symbolically within this distance.
RATIONAL_ATOL = 1e-15
MAX_NUMERATOR = 16
MAX_DENOMINATOR = 16


@dataclass(frozen=True)
class Pulse:
    generator: Generator
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise DomainError(f"pulse angle must be finite, got {self.angle!r}")
        object.__setattr__(self, "angle", float(self.angle))

    def __str__(self) -> str:
        return f"[{format_angle(self.angle)}]_{self.generator.label}"


@dataclass(frozen=True)
class PulseSequence:
    """Immutable, time-ordered list of pulses on ``n_qubits`` ions."""

    pulses: tuple[Pulse, ...]
    n_qubits: int

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        check_qubits(self.n_qubits)
        for p in self.pulses:
            p.generator.check(self.n_qubits)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Generator | str, float]], n_qubits: int) -> "PulseSequence":
        pulses = []
        for g, theta in pairs:
            if isinstance(g, str):
                g = generator_from_label(g)
            pulses.append(Pulse(g, theta))
        return cls(tuple(pulses), n_qubits)

    @classmethod
    def empty(cls, n_qubits: int) -> "PulseSequence":
        return cls((), n_qubits)

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self) -> Iterator[Pulse]:
        return iter(self.pulses)

    def __getitem__(self, m):
        return self.pulses[m]

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        """Concatenation in time: ``self`` runs first."""
        if other.n_qubits != self.n_qubits:
            raise DomainError("cannot concatenate sequences on different register sizes")
        return PulseSequence(self.pulses + other.pulses, self.n_qubits)

    def __mul__(self, times: int) -> "PulseSequence":
        return PulseSequence(self.pulses * times, self.n_qubits)

    @property
    def angles(self) -> np.ndarray:
        return np.array([p.angle for p in self.pulses], dtype=float)

    @property
    def generators(self) -> tuple[Generator, ...]:
        return tuple(p.generator for p in self.pulses)

    def with_angle(self, m: int, angle: float) -> "PulseSequence":
        pulses = list(self.pulses)
        pulses[m] = Pulse(pulses[m].generator, angle)
        return PulseSequence(tuple(pulses), self.n_qubits)

    def with_angles(self, angles: Iterable[float]) -> "PulseSequence":
        angles = list(angles)
        if len(angles) != len(self.pulses):
            raise DomainError("angle count does not match pulse count")
        return PulseSequence(
            tuple(Pulse(p.generator, a) for p, a in zip(self.pulses, angles)), self.n_qubits
        )

    def inserted(self, position: int, pulse: Pulse) -> "PulseSequence":
        pulses = list(self.pulses)
        pulses.insert(position, pulse)
        return PulseSequence(tuple(pulses), self.n_qubits)

    def relabeled(self, mapping: dict[int, int], n_qubits: int | None = None) -> "PulseSequence":
        """Rename addressed qubits; global pulses are permutation symmetric."""
        n = self.n_qubits if n_qubits is None else n_qubits
        out = []
        for p in self.pulses:
            g = p.generator
            if g.kind == "Z":
                g = Generator.z(mapping.get(g.index, g.index))
            out.append(Pulse(g, p.angle))
        return PulseSequence(tuple(out), n)

    def __str__(self) -> str:
        return format_sequence(self)


def apply_pulse(g: Generator, theta: float, n_qubits: int, state: np.ndarray) -> np.ndarray:
    """Left-multiply a matrix or vector by the pulse unitary."""
    basis, lam = eigensystem(g, n_qubits)
    phases = np.exp(-1j * g.coefficient * theta * lam)
    if state.ndim == 1:
        if basis is None:
            return phases * state
        return basis @ (phases * (basis.conj().T @ state))
    if basis is None:
        return phases[:, None] * state
    return basis @ (phases[:, None] * (basis.conj().T @ state))


def compile_sequence(seq: PulseSequence) -> np.ndarray:
    """Unitary U_M ... U_1 realized by the sequence; identity when empty."""
    u = np.eye(2**seq.n_qubits, dtype=complex)
    for p in seq.pulses:
        g = p.generator
        if g.kind == "Z":
            u = apply_pulse(g, p.angle, seq.n_qubits, u)
        else:
            u = pulse_unitary(g, p.angle, seq.n_qubits) @ u
    return u


# -- text format ---------------------------------------------------------------


class SequenceSyntaxError(ValueError):
    """Malformed sequence text; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.reason = message
        self.line = line
        self.column = column


_GEN_RE = re.compile(r"XX|YY|X|Y|Z\s*(\d+)")
_ANGLE_RE = re.compile(
    r"""\s*(?P<neg>-)?\s*
    (?:
        (?P<num>\d+)?\s*pi\s*(?:/\s*(?P<den>\d+))?
      | (?P<dec>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
    )\s*$""",
    re.VERBOSE,
)


def generator_from_label(label: str) -> Generator:
    m = _GEN_RE.fullmatch(label.strip())
    if not m:
        raise DomainError(f"unknown generator {label!r}")
    if m.group(1) is not None:
        return Generator.z(int(m.group(1)))
    return Generator(m.group(0))


def parse_angle(text: str) -> float:
    m = _ANGLE_RE.match(text)
    if not m:
        raise DomainError(f"malformed angle {text!r}")
    if m.group("dec") is not None:
        value = float(m.group("dec"))
    else:
        num = int(m.group("num")) if m.group("num") else 1
        den = int(m.group("den")) if m.group("den") else 1
        if den == 0:
            raise DomainError("zero denominator in angle")
        value = num * math.pi / den
    return -value if m.group("neg") else value


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.split("\n"))


def parse_sequence(text: str, n_qubits: int) -> PulseSequence:
    """Parse the bracket notation into a sequence on ``n_qubits`` ions."""
    check_qubits(n_qubits)
    src = _strip_comments(text)
    pos = 0
    n = len(src)

    def where(i: int) -> tuple[int, int]:
        line = src.count("\n", 0, i) + 1
        col = i - (src.rfind("\n", 0, i) + 1) + 1
        return line, col

    def fail(msg: str, i: int):
        raise SequenceSyntaxError(msg, *where(i))

    def skip_ws(i: int) -> int:
        while i < n and src[i].isspace():
            i += 1
        return i

    pulses: list[Pulse] = []
    pos = skip_ws(pos)
    if pos == n:
        return PulseSequence((), n_qubits)
    while True:
        if src[pos] != "[":
            fail(f"expected '[' but found {src[pos]!r}", pos)
        close = src.find("]", pos)
        if close < 0:
            fail("unterminated '['", pos)
        try:
            angle = parse_angle(src[pos + 1 : close])
        except DomainError as exc:
            fail(str(exc), pos + 1)
        i = skip_ws(close + 1)
        if i >= n or src[i] != "_":
            fail("expected '_' after ']'", i)
        i = skip_ws(i + 1)
        m = _GEN_RE.match(src, i)
        end = m.end() if m else i
        # A generator token must not run into further identifier characters.
        if not m or (end < n and src[end].isalnum()):
            j = end
            while j < n and src[j].isalnum():
                j += 1
            fail(f"unknown generator {src[i:j] or src[i:i + 1]!r}", i)
        if m.group(1) is not None:
            k = int(m.group(1))
            if not 1 <= k <= n_qubits:
                fail(f"qubit index {k} out of range for {n_qubits} qubits", i)
            gen = Generator.z(k)
        else:
            gen = Generator(m.group(0))
        pulses.append(Pulse(gen, angle))
        pos = skip_ws(end)
        if pos == n:
            break
        if src[pos] != "-":
            fail(f"expected '-' between pulses but found {src[pos]!r}", pos)
        pos = skip_ws(pos + 1)
        if pos == n:
            fail("dangling '-' at end of sequence", pos)
    return PulseSequence(tuple(pulses), n_qubits)


def read_sequence(path, n_qubits: int) -> PulseSequence:
    with open(path, encoding="utf-8") as fh:
        return parse_sequence(fh.read(), n_qubits)


def _as_rational_of_pi(angle: float) -> tuple[int, int] | None:
    for q in range(1, MAX_DENOMINATOR + 1):
        p = round(angle * q / math.pi)
        if abs(p) > MAX_NUMERATOR:
            continue
        g = math.gcd(p, q) or 1
        p, r = p // g, q // g
        # compare against exactly what the parser will rebuild
        if abs(angle - (-(abs(p) * math.pi / r) if p < 0 else p * math.pi / r)) <= RATIONAL_ATOL:
            return p, r
    return None


def format_angle(angle: float) -> str:
    frac = _as_rational_of_pi(angle)
    if frac is None:
        return format(angle, ".17g")
    p, q = frac
    if p == 0:
        return "0"
    sign = "-" if p < 0 else ""
    num = "" if abs(p) == 1 else str(abs(p))
    den = "" if q == 1 else f"/{q}"
    return f"{sign}{num}pi{den}"


def format_sequence(seq: PulseSequence) -> str:
    return " - ".join(str(p) for p in seq.pulses)


def write_sequence(path, seq: PulseSequence) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_sequence(seq) + "\n")


# -- canonical form ------------------------------------------------------------


def wrap_angle(angle: float) -> float:
    """Shift by whole turns of 2*pi into (-2pi, 2pi].

    Every native pulse at angle 2*pi is a global phase, so this is exact up to
    phase. Angles already in range are returned unchanged.
    """
    if angle > TWO_PI:
        angle -= TWO_PI * math.ceil((angle - TWO_PI) / TWO_PI)
    elif angle <= -TWO_PI:
        angle += TWO_PI * (math.floor((-TWO_PI - angle) / TWO_PI) + 1)
    return angle


def fold_angle(angle: float) -> float:
    """Representative in (-pi, pi] of the angle modulo 2*pi (exact up to global phase)."""
    folded = math.remainder(angle, TWO_PI)
    return math.pi if folded == -math.pi else folded


def _merge_z_runs(pulses: list[tuple[Generator, float]]) -> list[tuple[Generator, float]]:
    # Light shifts commute with each other; within a run of Z pulses one pulse
    # per qubit suffices, kept at the position of its first occurrence.
    out: list[tuple[Generator, float]] = []
    run: dict[Generator, float] = {}

    def flush():
        out.extend(run.items())
        run.clear()

    for g, a in pulses:
        if g.kind == "Z":
            run[g] = run.get(g, 0.0) + a
        else:
            flush()
            out.append((g, a))
    flush()
    return out


def canonicalize(seq: PulseSequence, prune_eps: float = 0.0, merge_commuting: bool = False) -> PulseSequence:
    """Merge adjacent equal generators, drop pulses shorter than ``prune_eps``, wrap angles.

    With ``merge_commuting`` light shifts are also merged across other light
    shifts they commute with.
    """
    if prune_eps < 0:
        raise DomainError("prune_eps must be non-negative")
    pulses = [(p.generator, p.angle) for p in seq.pulses]
    while True:
        merged: list[list] = []
        for g, a in _merge_z_runs(pulses) if merge_commuting else pulses:
            if merged and merged[-1][0] == g:
                merged[-1][1] += a
            else:
                merged.append([g, a])
        kept = [(g, wrap_angle(a)) for g, a in merged if abs(a) >= prune_eps]
        if kept == pulses:
            break
        pulses = kept
    return PulseSequence(tuple(Pulse(g, a) for g, a in pulses), seq.n_qubits)


# -- constructions from refocusing -------------------------------------------------


def build_spin_echo_x(k: int, theta: float, n_qubits: int) -> PulseSequence:
    """Four pulses realizing exp(-i theta/2 sigma_x^(k)) from global flips and a light shift on k."""
    z = Generator.z(k)
    z.check(n_qubits)
    x = Generator("X")
    return PulseSequence(
        (Pulse(x, theta / 2), Pulse(z, math.pi), Pulse(x, -theta / 2), Pulse(z, -math.pi)),
        n_qubits,
    )


def build_refocused_ms(k: int, theta: float, n_qubits: int) -> PulseSequence:
    """Four pulses realizing exp(-i theta/4 (S_x - sigma_x^(k))^2), decoupling qubit k."""
    if n_qubits < 2:
        raise DomainError("refocused entangler needs at least two qubits")
    z = Generator.z(k)
    z.check(n_qubits)
    xx = Generator("XX")
    return PulseSequence(
        (Pulse(xx, theta / 2), Pulse(z, math.pi), Pulse(xx, theta / 2), Pulse(z, -math.pi)),
        n_qubits,
    )
