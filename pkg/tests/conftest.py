import numpy as np
import pytest

from mlae_lab.bench import ExperimentConfig, run_experiment
from mlae_lab.noise import DEFAULT_NOISE
from mlae_lab.qsim import PARAMETRIC, TWO_QUBIT, Circuit, GateKind

WORKED_A = [-0.96184207, 0.27360523]
WORKED_B = [0.96845237, 0.24919873]
WORKED_PROB = 0.745314789774813

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def dense_embed(mat: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full 2^n matrix of a local gate, built index by index (oracle for the kernels)."""
    dim = 2**n
    k = len(qubits)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        local_in = sum(((col >> q) & 1) << i for i, q in enumerate(qubits))
        rest = col
        for q in qubits:
            rest &= ~(1 << q)
        for local_out in range(2**k):
            row = rest
            for i, q in enumerate(qubits):
                row |= ((local_out >> i) & 1) << q
            out[row, col] += mat[local_out, local_in]
    return out


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """Elementwise |a - e^{i phi} b| <= tol with phi taken from the first nonzero entry of b."""
    flat_b = b.ravel()
    k = int(np.flatnonzero(np.abs(flat_b) > 1e-6)[0])
    phase = a.ravel()[k] / flat_b[k]
    if abs(abs(phase) - 1.0) > tol:
        return False
    return float(np.max(np.abs(a - phase * b))) <= tol


ALL_KINDS = list(GateKind)


def random_circuit(rng, max_width=4, max_gates=60, kinds=ALL_KINDS, min_width=1) -> Circuit:
    n = int(rng.integers(min_width, max_width + 1))
    c = Circuit(n)
    usable = [k for k in kinds if n >= 2 or k not in TWO_QUBIT]
    for _ in range(int(rng.integers(0, max_gates + 1))):
        k = usable[int(rng.integers(len(usable)))]
        arity = 2 if k in TWO_QUBIT else 1
        qubits = tuple(int(q) for q in rng.choice(n, arity, replace=False))
        param = float(rng.uniform(-2 * np.pi, 2 * np.pi)) if k in PARAMETRIC else None
        c.add(k, *qubits, param=param)
    return c


def random_state(rng, n: int) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def reference_noiseless_d2():
    """Reference protocol (LIS, M=7, 500 shots) on 2-dim vectors without noise."""
    cfg = ExperimentConfig(dimension=2, max_power=7, shots_per_level=500, repeats=50, seed=2022)
    return run_experiment(cfg)


@pytest.fixture(scope="session")
def default_noisy_d4():
    cfg = ExperimentConfig(dimension=4, max_power=7, shots_per_level=500, repeats=50, seed=2022, noise=DEFAULT_NOISE)
    return run_experiment(cfg)
