"""Unary data loaders, inner-product circuits and Grover iterates.

A d-dimensional unit vector v is loaded onto d qubits as sum_i v_i |e_i>,
where |e_i> is the one-hot basis state with only qubit i set (basis index
2**i).  The loader is an X on qubit 0 followed by a binary tree of RBS
gates; each RBS splits the amplitude of one block between its left and
right halves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qsim import Circuit, Gate, GateKind, run

SUPPORTED_DIMENSIONS = (2, 4, 8)
NORM_TOL = 1e-10
# accepted slack on user-supplied vectors before they are renormalized
INPUT_NORM_TOL = 1e-6


class LoaderError(ValueError):
    pass


@dataclass(frozen=True)
class UnitVector:
    components: tuple[float, ...]

    def __post_init__(self):
        comps = tuple(float(x) for x in self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) not in SUPPORTED_DIMENSIONS:
            raise LoaderError(f"dimension {len(comps)} not in {SUPPORTED_DIMENSIONS}")
        if abs(math.fsum(x * x for x in comps) - 1.0) > NORM_TOL:
            raise LoaderError("components are not unit norm")

    @classmethod
    def from_values(cls, values, tol: float = INPUT_NORM_TOL) -> UnitVector:
        """Renormalize ``values`` if their norm is within ``tol`` of 1.

        Vectors quoted to a handful of decimals are never exactly unit norm.
        """
        arr = np.asarray(values, dtype=float)
        norm = float(np.sqrt(np.sum(arr**2)))
        if abs(norm - 1.0) > tol:
            raise LoaderError(f"vector norm {norm} differs from 1 by more than {tol}")
        return cls(tuple(arr / norm))

    @property
    def dim(self) -> int:
        return len(self.components)

    def as_array(self) -> np.ndarray:
        return np.array(self.components)


def as_unit_vector(v) -> UnitVector:
    return v if isinstance(v, UnitVector) else UnitVector.from_values(v)


@dataclass(frozen=True)
class AngleTree:
    """RBS angles per tree level, root level first.

    Level ``j`` holds ``2**j`` angles; the node at position ``i`` of level
    ``j`` splits the block of width ``d / 2**j`` starting at ``i * d / 2**j``.
    """

    dim: int
    levels: tuple[tuple[float, ...], ...]

    def reconstruct(self) -> np.ndarray:
        vals = np.array([1.0])
        for level in self.levels:
            nxt = np.empty(2 * vals.size)
            for i, (mag, theta) in enumerate(zip(vals, level)):
                nxt[2 * i] = mag * math.cos(theta)
                nxt[2 * i + 1] = mag * math.sin(theta)
            vals = nxt
        return vals


def angles_for(v) -> AngleTree:
    """Pairwise reduction of ``v`` into RBS angles.

    Each adjacent pair (l, r) becomes magnitude hypot(l, r) and angle
    atan2(r, l); a zero-magnitude pair gets angle 0.  Signs of the leaves are
    carried by the bottom-level angles, internal magnitudes are nonnegative.
    """
    vals = list(as_unit_vector(v).components)
    d = len(vals)
    levels = []
    while len(vals) > 1:
        mags, thetas = [], []
        for left, right in zip(vals[0::2], vals[1::2]):
            rho = math.hypot(left, right)
            mags.append(rho)
            thetas.append(math.atan2(right, left) if rho > 0.0 else 0.0)
        levels.append(tuple(thetas))
        vals = mags
    return AngleTree(d, tuple(reversed(levels)))


def _tree_gates(tree: AngleTree) -> list[Gate]:
    d = tree.dim
    gates = []
    for j, level in enumerate(tree.levels):
        width = d >> j
        half = width // 2
        for i, theta in enumerate(level):
            src = i * width
            # RBS(theta) on (dst, src): |e_src> -> cos|e_src> + sin|e_dst>
            gates.append(Gate(GateKind.RBS, (src + half, src), theta))
    return gates


def loader_circuit(tree: AngleTree) -> Circuit:
    if tree.dim not in SUPPORTED_DIMENSIONS:
        raise LoaderError(f"dimension {tree.dim} not in {SUPPORTED_DIMENSIONS}")
    return Circuit(tree.dim, [Gate(GateKind.X, (0,))] + _tree_gates(tree))


def load(v) -> Circuit:
    return loader_circuit(angles_for(v))


def unary_index(i: int) -> int:
    return 1 << i


def unary_amplitudes(state: np.ndarray, d: int) -> np.ndarray:
    return np.array([state[unary_index(i)] for i in range(d)])


@dataclass
class GroverSpec:
    circuit_A: Circuit
    good_qubit: int = 0
    # RBS-only block R with A = [X(0)] + R; kept for building the iterate
    rotation: Circuit | None = None

    @property
    def width(self) -> int:
        return self.circuit_A.width

    def amplitude(self) -> float:
        """Exact probability of the good outcome under A|0>."""
        return good_probability(run(self.circuit_A), self.good_qubit)


def good_probability(state: np.ndarray, good_qubit: int = 0) -> float:
    p = np.abs(state) ** 2
    idx = np.arange(p.size)
    return float(p[(idx >> good_qubit) & 1 == 1].sum())


def inner_product_circuit(a, b) -> GroverSpec:
    """Circuit A whose good-state probability is <a|b>^2.

    A loads ``a`` and then un-loads ``b`` (adjoint of b's RBS tree, angles
    negated and order reversed), landing the overlap on |e_0>.
    """
    a, b = as_unit_vector(a), as_unit_vector(b)
    if a.dim != b.dim:
        raise LoaderError(f"dimension mismatch: {a.dim} vs {b.dim}")
    ta, tb = angles_for(a), angles_for(b)
    rot = Circuit(a.dim, _tree_gates(ta))
    rot.extend(Circuit(b.dim, _tree_gates(tb)).inverse().gates)
    circuit_a = Circuit(a.dim, [Gate(GateKind.X, (0,))] + rot.gates)
    return GroverSpec(circuit_a, good_qubit=0, rotation=rot)


def grover_iterate(spec: GroverSpec) -> Circuit:
    """Z(good), R^dagger, Z(0), R in time order, with A = X(0).R.

    On the one-hot subspace Z(good) is the oracle reflection and R Z(0)
    R^dagger is A S_0 A^dagger, so no multi-controlled reflection is
    needed.  Relative to the textbook Grover rotation this carries a global
    phase of -1 per iterate, which no measurement sees.
    """
    rot = spec.rotation
    if rot is None:
        raise LoaderError("grover_iterate needs a spec built by inner_product_circuit")
    z_good = Gate(GateKind.Z, (spec.good_qubit,))
    gates = [z_good] + rot.inverse().gates + [Gate(GateKind.Z, (0,))] + list(rot.gates)
    return Circuit(spec.width, gates)


def ae_circuit(spec: GroverSpec, m: int) -> Circuit:
    if m < 0:
        raise LoaderError("Grover power must be nonnegative")
    q = grover_iterate(spec).gates if m else []
    return Circuit(spec.width, list(spec.circuit_A.gates) + q * m)


def grover_probability(a: float, m: int) -> float:
    """Closed-form sin^2((2m+1) arcsin sqrt(a))."""
    theta = math.asin(math.sqrt(min(max(a, 0.0), 1.0)))
    return math.sin((2 * m + 1) * theta) ** 2
