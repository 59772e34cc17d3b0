"""Exact statevector and density-matrix simulation of small circuits.

Bit order is little-endian throughout: qubit 0 is the least significant bit
of a basis index, so the ket label ``|01>`` (qubit 0 rightmost) is index 1.

Multi-qubit gate matrices use the same convention locally: for a gate acting
on ``qubits = (q0, q1)`` the local index is ``bit(q0) + 2 * bit(q1)``.  With
this rule ``unitary_of`` of a two-qubit circuit holding one gate on ``(0, 1)``
is exactly that gate's matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MAX_STATEVECTOR_QUBITS = 12
MAX_DENSITY_QUBITS = 6
MAX_UNITARY_QUBITS = 8


class SimulationError(Exception):
    """Raised when a circuit cannot be simulated (bad indices, width limits)."""


class GateKind(str, Enum):
    X = "X"
    Z = "Z"
    H = "H"
    SX = "SX"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    CX = "CX"
    CZ = "CZ"
    RBS = "RBS"


PARAMETRIC = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RBS})
TWO_QUBIT = frozenset({GateKind.CX, GateKind.CZ, GateKind.RBS})


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.kind in TWO_QUBIT else 1
        if len(self.qubits) != arity:
            raise SimulationError(f"{self.kind.value} acts on {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != arity:
            raise SimulationError(f"repeated qubit index in {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise SimulationError(f"negative qubit index in {self.qubits}")
        if self.kind in PARAMETRIC:
            if self.param is None:
                raise SimulationError(f"{self.kind.value} requires an angle")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise SimulationError(f"{self.kind.value} takes no parameter")

    def inverse_gates(self) -> list[Gate]:
        """Gates whose product is the exact inverse of this gate."""
        if self.kind in PARAMETRIC:
            return [Gate(self.kind, self.qubits, -self.param)]
        if self.kind is GateKind.SX:
            # SX.SX = X, so SX^-1 = SX^3 = X.SX
            return [Gate(GateKind.SX, self.qubits), Gate(GateKind.X, self.qubits)]
        return [self]

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.param)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "qubits": list(self.qubits)}
        if self.param is not None:
            d["param"] = self.param
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Gate:
        try:
            return cls(d["kind"], tuple(d["qubits"]), d.get("param"))
        except (KeyError, ValueError, TypeError) as exc:
            raise SimulationError(f"malformed gate {d!r}: {exc}") from exc


@dataclass
class Circuit:
    width: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1:
            raise SimulationError("circuit width must be at least 1")
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate) -> None:
        if max(gate.qubits) >= self.width:
            raise SimulationError(f"gate {gate} exceeds circuit width {self.width}")

    def append(self, gate: Gate) -> Circuit:
        self._check(gate)
        self.gates.append(gate)
        return self

    def add(self, kind, *qubits: int, param: float | None = None) -> Circuit:
        return self.append(Gate(kind, qubits, param))

    def extend(self, gates) -> Circuit:
        for g in gates:
            self.append(g)
        return self

    def compose(self, other: Circuit) -> Circuit:
        if other.width != self.width:
            raise SimulationError("cannot compose circuits of different widths")
        return Circuit(self.width, self.gates + other.gates)

    def inverse(self) -> Circuit:
        out = []
        for g in reversed(self.gates):
            out.extend(g.inverse_gates())
        return Circuit(self.width, out)

    def __len__(self) -> int:
        return len(self.gates)

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for g in self.gates:
            counts[g.kind.value] = counts.get(g.kind.value, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {"width": self.width, "gates": [g.to_dict() for g in self.gates]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> Circuit:
        try:
            width = int(d["width"])
            gates = [Gate.from_dict(g) for g in d["gates"]]
        except (KeyError, TypeError) as exc:
            raise SimulationError(f"malformed circuit document: {exc}") from exc
        return cls(width, gates)

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# gate matrices

_SQ2 = 1 / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_SX = np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex) / 2
# control = local bit 0, target = local bit 1
_CX = np.eye(4, dtype=complex)[:, [0, 3, 2, 1]]
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rbs(theta: float) -> np.ndarray:
    """Reconfigurable beam splitter: a real rotation on span{|01>, |10>}."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=complex
    )


def gate_matrix(kind: GateKind, param: float | None = None) -> np.ndarray:
    kind = GateKind(kind)
    if kind is GateKind.X:
        return _X
    if kind is GateKind.Z:
        return _Z
    if kind is GateKind.H:
        return _H
    if kind is GateKind.SX:
        return _SX
    if kind is GateKind.RX:
        return rx(param)
    if kind is GateKind.RY:
        return ry(param)
    if kind is GateKind.RZ:
        return rz(param)
    if kind is GateKind.CX:
        return _CX
    if kind is GateKind.CZ:
        return _CZ
    return rbs(param)


# ---------------------------------------------------------------------------
# kernels
#
# An n-qubit register is stored as a tensor of shape (2,)*n whose C-order
# flattening is the little-endian amplitude vector, so qubit q lives on
# axis n-1-q.  Trailing axes (unitary columns, density-matrix columns) are
# carried along untouched.


def _apply_matrix(tensor: np.ndarray, mat: np.ndarray, qubits, n: int, offset: int = 0):
    k = len(qubits)
    m = mat.reshape((2,) * (2 * k))
    axes = [offset + n - 1 - q for q in reversed(qubits)]
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _check_gate(gate: Gate, n: int) -> None:
    if max(gate.qubits) >= n:
        raise SimulationError(f"gate {gate} exceeds register width {n}")


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(n: int, index: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[index] = 1.0
    return psi


def _width_of(vec: np.ndarray) -> int:
    n = int(vec.size).bit_length() - 1
    if 2**n != vec.size:
        raise SimulationError(f"state length {vec.size} is not a power of two")
    return n


def apply_gate(state: np.ndarray, gate: Gate) -> np.ndarray:
    """Return ``gate`` applied to a statevector (input is not modified)."""
    state = np.asarray(state, dtype=complex)
    n = _width_of(state)
    _check_gate(gate, n)
    t = _apply_matrix(state.reshape((2,) * n), gate.matrix(), gate.qubits, n)
    return t.reshape(-1)


def run(circuit: Circuit, initial: np.ndarray | None = None) -> np.ndarray:
    n = circuit.width
    if n > MAX_STATEVECTOR_QUBITS:
        raise SimulationError(f"statevector backend supports at most {MAX_STATEVECTOR_QUBITS} qubits")
    if initial is None:
        initial = zero_state(n)
    initial = np.asarray(initial, dtype=complex)
    if initial.size != 2**n:
        raise SimulationError(f"initial state has {initial.size} amplitudes, circuit needs {2**n}")
    t = initial.reshape((2,) * n)
    for g in circuit.gates:
        _check_gate(g, n)
        t = _apply_matrix(t, g.matrix(), g.qubits, n)
    return np.ascontiguousarray(t).reshape(-1)


def probabilities(state: np.ndarray) -> dict[int, float]:
    """Nonzero basis probabilities keyed by basis index."""
    p = np.abs(np.asarray(state)) ** 2
    return {int(i): float(p[i]) for i in np.flatnonzero(p)}


def probability_vector(state: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(state)) ** 2


def _multinomial(p: np.ndarray, shots: int, rng) -> dict[int, int]:
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rng = np.random.default_rng(rng)
    p = np.clip(np.real(p), 0.0, None)
    p = p / p.sum()
    counts = rng.multinomial(shots, p)
    return {int(i): int(counts[i]) for i in np.flatnonzero(counts)}


def sample(state: np.ndarray, shots: int, seed=None) -> dict[int, int]:
    """Multinomial shot counts over basis indices; deterministic for a fixed seed.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    return _multinomial(probability_vector(state), shots, seed)


def unitary_of(circuit: Circuit) -> np.ndarray:
    n = circuit.width
    if n > MAX_UNITARY_QUBITS:
        raise SimulationError(f"unitary_of supports at most {MAX_UNITARY_QUBITS} qubits")
    dim = 2**n
    # columns ride along as a trailing axis
    t = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in circuit.gates:
        _check_gate(g, n)
        t = _apply_matrix(t, g.matrix(), g.qubits, n)
    return np.ascontiguousarray(t).reshape(dim, dim)


# ---------------------------------------------------------------------------
# density matrices


def density_from_state(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj())


def zero_density(n: int) -> np.ndarray:
    return density_from_state(zero_state(n))


def apply_unitary_density(rho: np.ndarray, mat: np.ndarray, qubits, n: int) -> np.ndarray:
    """Conjugate a density tensor of shape (2,)*2n by ``mat`` on ``qubits``."""
    rho = _apply_matrix(rho, mat, qubits, n)
    return _apply_matrix(rho, mat.conj(), qubits, n, offset=n)


def depolarize(rho: np.ndarray, qubits, p: float, n: int) -> np.ndarray:
    """(1-p) rho + p * (I/2^w) (x) tr_qubits(rho) on a density tensor."""
    if p == 0.0:
        return rho
    mixed = rho
    for q in qubits:
        r, c = n - 1 - q, 2 * n - 1 - q
        t = np.trace(mixed, axis1=r, axis2=c)
        t = np.multiply.outer(t, np.eye(2) / 2)
        mixed = np.moveaxis(t, [-2, -1], [r, c])
    return (1.0 - p) * rho + p * mixed


def run_density(circuit: Circuit, noise=None, initial: np.ndarray | None = None) -> np.ndarray:
    """Evolve a density matrix gate by gate, each gate followed by its noise channel.

    ``noise`` is any object with ``p1`` and ``p2`` attributes (see
    :class:`mlae_lab.noise.NoiseModel`); ``None`` means noiseless.
    """
    n = circuit.width
    if n > MAX_DENSITY_QUBITS:
        raise SimulationError(f"density backend supports at most {MAX_DENSITY_QUBITS} qubits")
    dim = 2**n
    rho = zero_density(n) if initial is None else np.asarray(initial, dtype=complex)
    if rho.shape != (dim, dim):
        raise SimulationError(f"initial density matrix must be {dim}x{dim}")
    p1 = 0.0 if noise is None else noise.p1
    p2 = 0.0 if noise is None else noise.p2
    t = rho.reshape((2,) * (2 * n))
    for g in circuit.gates:
        _check_gate(g, n)
        t = apply_unitary_density(t, g.matrix(), g.qubits, n)
        t = depolarize(t, g.qubits, p2 if len(g.qubits) == 2 else p1, n)
    return np.ascontiguousarray(t).reshape(dim, dim)


def density_probabilities(rho: np.ndarray) -> np.ndarray:
    return np.clip(np.real(np.diag(rho)), 0.0, None)


def reduced_density(rho: np.ndarray, keep: list[int]) -> np.ndarray:
    """Partial trace down to the qubits in ``keep`` (returned little-endian in ``keep`` order)."""
    n = _width_of(np.diag(rho))
    t = rho.reshape((2,) * (2 * n))
    axes = [n - 1 - q for q in reversed(keep)]
    traced = [q for q in range(n) if q not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for q in traced:
        col[n - 1 - q] = row[n - 1 - q]
    out = "".join(row[a] for a in axes) + "".join(col[a] for a in axes)
    sub = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    k = len(keep)
    return sub.reshape(2**k, 2**k)
