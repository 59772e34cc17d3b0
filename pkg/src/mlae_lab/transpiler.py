"""Lowering to {RZ, SX, X, CX}, peephole and commutation passes, depth metrics.

All passes are equivalences up to global phase.  Connectivity is all-to-all:
there is no routing.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .qsim import Circuit, Gate, GateKind, gate_matrix

K = GateKind
DEFAULT_BASIS = frozenset({K.RZ, K.SX, K.X, K.CX})
ANGLE_TOL = 1e-12
TWO_PI = 2 * math.pi


class TranspileError(ValueError):
    pass


def wrap_angle(theta: float) -> float:
    """Map to (-pi, pi]."""
    t = math.fmod(theta, TWO_PI)
    if t > math.pi:
        t -= TWO_PI
    elif t <= -math.pi:
        t += TWO_PI
    return t


def is_zero_angle(theta: float, tol: float = ANGLE_TOL) -> bool:
    return abs(wrap_angle(theta)) <= tol or abs(abs(wrap_angle(theta)) - TWO_PI) <= tol


# ---------------------------------------------------------------------------
# single-qubit synthesis


def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """(phi, theta, lam) with u = e^{i alpha} RZ(phi) RY(theta) RZ(lam)."""
    v = u / np.sqrt(np.linalg.det(u))
    c, s = abs(v[0, 0]), abs(v[1, 0])
    theta = 2 * math.atan2(s, c)
    if s <= ANGLE_TOL:
        return -2 * float(np.angle(v[0, 0])), 0.0, 0.0
    if c <= ANGLE_TOL:
        return 2 * float(np.angle(v[1, 0])), math.pi, 0.0
    total = -2 * float(np.angle(v[0, 0]))
    diff = 2 * float(np.angle(v[1, 0]))
    return (total + diff) / 2, theta, (total - diff) / 2


def synth_1q(u: np.ndarray, qubit: int) -> list[Gate]:
    """Shortest RZ/SX/X sequence (circuit order) equal to ``u`` up to phase."""
    phi, theta, lam = zyz_angles(u)

    def rz(a):
        return [] if is_zero_angle(a) else [Gate(K.RZ, (qubit,), wrap_angle(a))]

    if abs(theta) <= ANGLE_TOL:
        return rz(phi + lam)
    if abs(theta - math.pi) <= ANGLE_TOL:
        # RZ(phi) RY(pi) RZ(lam) ~ X RZ(lam - phi + pi)
        return rz(lam - phi + math.pi) + [Gate(K.X, (qubit,))]
    if abs(theta - math.pi / 2) <= ANGLE_TOL:
        return rz(lam - math.pi / 2) + [Gate(K.SX, (qubit,))] + rz(phi + math.pi / 2)
    sx = Gate(K.SX, (qubit,))
    return rz(lam) + [sx] + rz(theta + math.pi) + [sx] + rz(phi + math.pi)


# RBS(theta) on (a, b) = H(a) CX(a, b) RY(-theta)(a) RY(-theta)(b) CX(a, b) H(a).
# Found by enumerating conjugated CX-rotation-CX candidates against the RBS
# matrix; the conjugating layer is its own inverse so RBS(t) RBS(-t) cancels
# completely under the peephole rules.  Checked in tests/test_transpiler.py.
def rbs_template(a: int, b: int, theta: float) -> list[Gate]:
    return [
        Gate(K.H, (a,)),
        Gate(K.CX, (a, b)),
        Gate(K.RY, (a,), -theta),
        Gate(K.RY, (b,), -theta),
        Gate(K.CX, (a, b)),
        Gate(K.H, (a,)),
    ]


def _expand(gate: Gate) -> list[Gate]:
    """One-step rewrite of a gate into simpler (not necessarily basis) gates."""
    if gate.kind is K.RBS:
        return rbs_template(*gate.qubits, gate.param)
    if gate.kind is K.CZ:
        c, t = gate.qubits
        return [Gate(K.H, (t,)), Gate(K.CX, (c, t)), Gate(K.H, (t,))]
    if gate.kind is K.Z:
        return [Gate(K.RZ, gate.qubits, math.pi)]
    if gate.kind in (K.H, K.RX, K.RY):
        return synth_1q(gate.matrix(), gate.qubits[0])
    raise TranspileError(f"no lowering rule for {gate.kind.value}")


def lower(circuit: Circuit, basis=DEFAULT_BASIS) -> Circuit:
    basis = frozenset(K(b) for b in basis)
    if not DEFAULT_BASIS <= basis:
        raise TranspileError("basis must contain RZ, SX, X and CX")
    out: list[Gate] = []
    stack = list(reversed(circuit.gates))
    while stack:
        g = stack.pop()
        if g.kind in basis:
            out.append(g)
        else:
            stack.extend(reversed(_expand(g)))
    return Circuit(circuit.width, out)


# ---------------------------------------------------------------------------
# metrics


def depth(circuit: Circuit) -> int:
    level = [0] * circuit.width
    for g in circuit.gates:
        d = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = d
    return max(level, default=0)


def asap_layers(circuit: Circuit) -> list[int]:
    level = [0] * circuit.width
    out = []
    for g in circuit.gates:
        d = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = d
        out.append(d)
    return out


# ---------------------------------------------------------------------------
# peephole
#
# Circuits are processed as plain gate lists.  ``_next_on_wire`` gives, for
# each gate position and each of its qubits, the position of the next gate
# touching that qubit, which is all the locality the rules need.


def _next_on_wire(gates: list[Gate]) -> list[dict[int, int]]:
    nxt: list[dict[int, int]] = [dict() for _ in gates]
    last: dict[int, int] = {}
    for i in range(len(gates) - 1, -1, -1):
        for q in gates[i].qubits:
            nxt[i][q] = last.get(q, -1)
            last[q] = i
    return nxt


def _cancel_cx_pairs(gates: list[Gate]) -> tuple[list[Gate], bool]:
    nxt = _next_on_wire(gates)
    dead = set()
    for i, g in enumerate(gates):
        if g.kind is not K.CX or i in dead:
            continue
        c, t = g.qubits
        j = nxt[i][c]
        if j > 0 and j == nxt[i][t] and j not in dead and gates[j] == Gate(K.CX, (c, t)):
            dead.update((i, j))
    if not dead:
        return gates, False
    return [g for i, g in enumerate(gates) if i not in dead], True


def _push_rz_through_controls(gates: list[Gate]) -> tuple[list[Gate], bool]:
    """Move an RZ forward past CX controls when another RZ waits on the far side."""
    gates = list(gates)
    changed = False
    i = 0
    while i < len(gates):
        g = gates[i]
        if g.kind is K.RZ:
            q = g.qubits[0]
            j, passed = i, 0
            while True:
                k = next((x for x in range(j + 1, len(gates)) if q in gates[x].qubits), -1)
                if k < 0:
                    break
                h = gates[k]
                if h.kind is K.CX and h.qubits[0] == q:
                    j, passed = k, passed + 1
                    continue
                if h.kind is K.RZ and passed:
                    gates[k] = Gate(K.RZ, (q,), wrap_angle(h.param + g.param))
                    del gates[i]
                    changed = True
                    i -= 1
                break
        i += 1
    return gates, changed


def _resynth_runs(gates: list[Gate]) -> tuple[list[Gate], bool]:
    nxt = _next_on_wire(gates)
    in_run = [False] * len(gates)
    replace: dict[int, list[Gate]] = {}
    dead = set()
    for i, g in enumerate(gates):
        if len(g.qubits) != 1 or in_run[i]:
            continue
        q = g.qubits[0]
        run_idx = [i]
        j = nxt[i][q]
        while j >= 0 and len(gates[j].qubits) == 1:
            run_idx.append(j)
            j = nxt[j][q]
        for r in run_idx:
            in_run[r] = True
        u = np.eye(2, dtype=complex)
        for r in run_idx:
            u = gates[r].matrix() @ u
        new = synth_1q(u, q)
        if len(new) < len(run_idx):
            replace[run_idx[0]] = new
            dead.update(run_idx[1:])
    if not replace:
        return gates, False
    out = []
    for i, g in enumerate(gates):
        if i in replace:
            out.extend(replace[i])
        elif i not in dead:
            out.append(g)
    return out, True


def peephole(circuit: Circuit) -> Circuit:
    """Local rewrites iterated to a fixed point.

    Adjacent CX pairs cancel, RZ gates merge (through CX controls when that
    lets them meet), and every maximal single-qubit run is resynthesized to
    the shortest RZ-SX-RZ-SX-RZ form when that saves gates.
    """
    gates = list(circuit.gates)
    changed = True
    while changed:
        changed = False
        for rule in (_cancel_cx_pairs, _push_rz_through_controls, _resynth_runs):
            gates, hit = rule(gates)
            changed |= hit
    return Circuit(circuit.width, gates)


# ---------------------------------------------------------------------------
# macroscopic: commutation-aware cancellation


def _commutes(g: Gate, h: Gate) -> bool:
    if not set(g.qubits) & set(h.qubits):
        return True
    kinds = {g.kind, h.kind}
    if kinds <= {K.RZ}:
        return True
    if kinds <= {K.X, K.SX}:
        return True
    if g.kind is K.CX and h.kind is K.CX:
        (c1, t1), (c2, t2) = g.qubits, h.qubits
        return c1 != t2 and t1 != c2
    if K.CX in kinds:
        cx, other = (g, h) if g.kind is K.CX else (h, g)
        q = other.qubits[0]
        if other.kind is K.RZ:
            return q == cx.qubits[0]
        if other.kind in (K.X, K.SX):
            return q == cx.qubits[1]
    return False


def _merge(g: Gate, h: Gate) -> list[Gate] | None:
    """Replacement for the pair (g, h) when they combine, else None."""
    if g.qubits != h.qubits:
        return None
    if g.kind is K.CX and h.kind is K.CX:
        return []
    if g.kind is K.X and h.kind is K.X:
        return []
    if g.kind is K.RZ and h.kind is K.RZ:
        theta = g.param + h.param
        return [] if is_zero_angle(theta) else [Gate(K.RZ, g.qubits, wrap_angle(theta))]
    return None


def _commutation_cancel(gates: list[Gate]) -> tuple[list[Gate], bool]:
    gates = list(gates)
    changed = False
    i = 0
    while i < len(gates):
        g = gates[i]
        if g.kind in (K.CX, K.RZ, K.X):
            for j in range(i + 1, len(gates)):
                h = gates[j]
                if not set(g.qubits) & set(h.qubits):
                    continue
                merged = _merge(g, h)
                if merged is not None:
                    gates[j : j + 1] = merged
                    del gates[i]
                    changed = True
                    i -= 1
                    break
                if not _commutes(g, h):
                    break
        i += 1
    return gates, changed


def macroscopic(circuit: Circuit) -> Circuit:
    """Cancel gates across commuting neighbours, then peephole, to a fixed point.

    Commutations used: gates on disjoint qubits; RZ with a CX control; X and
    SX with a CX target; CX pairs sharing only a control or only a target.
    """
    current = peephole(circuit)
    while True:
        gates, hit = _commutation_cancel(current.gates)
        if not hit:
            return current
        current = peephole(Circuit(circuit.width, gates))


def optimize(circuit: Circuit) -> Circuit:
    return macroscopic(circuit)


def compile_circuit(circuit: Circuit, stage: str = "optimized") -> Circuit:
    lowered = lower(circuit)
    if stage == "lowered":
        return lowered
    if stage == "optimized":
        return optimize(lowered)
    raise TranspileError(f"unknown stage {stage!r}")


# ---------------------------------------------------------------------------
# reports

REPORT_COLUMNS = ("m", "stage", "depth", "total", "x", "sx", "rz", "cx")


@dataclass
class PassReport:
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def totals(self) -> list[dict]:
        out = []
        for stage in ("lowered", "optimized"):
            rows = [r for r in self.rows if r["stage"] == stage]
            agg = {"m": "total", "stage": stage}
            for col in REPORT_COLUMNS[2:]:
                agg[col] = sum(r[col] for r in rows)
            out.append(agg)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows + self.totals():
            w.writerow(r)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "totals": self.totals(), "metadata": self.metadata}, indent=2)


def circuit_metrics(circuit: Circuit) -> dict:
    ops = circuit.count_ops()
    return {
        "depth": depth(circuit),
        "total": len(circuit),
        "x": ops.get("X", 0),
        "sx": ops.get("SX", 0),
        "rz": ops.get("RZ", 0),
        "cx": ops.get("CX", 0),
    }


def report(spec, max_m: int) -> PassReport:
    from .loader import ae_circuit

    if max_m < 0:
        raise TranspileError("max_m must be nonnegative")
    rep = PassReport(
        metadata={
            "basis": sorted(k.value for k in DEFAULT_BASIS),
            "depth_counts": "unitary gates only; no barriers or measurements",
            "routing": "none (all-to-all connectivity)",
        }
    )
    for m in range(max_m + 1):
        lowered = lower(ae_circuit(spec, m))
        optimized = optimize(lowered)
        rep.rows.append({"m": m, "stage": "lowered", **circuit_metrics(lowered)})
        rep.rows.append({"m": m, "stage": "optimized", **circuit_metrics(optimized)})
    return rep
