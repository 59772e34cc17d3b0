"""Depolarizing gate noise and readout bit flips for the density backend.

The defaults are emulator settings picked by a calibration sweep
(``mlae_lab.bench.calibration_sweep``) so that the 4-qubit MLAE error curve
bottoms out after a few Grover iterations.  They are not hardware data.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .qsim import Gate, _width_of, apply_unitary_density, depolarize


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    p_ro: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p_ro"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
            object.__setattr__(self, name, v)

    @property
    def is_zero(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.p_ro == 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> NoiseModel:
        unknown = set(d) - {"p1", "p2", "p_ro"}
        if unknown:
            raise ValueError(f"unknown noise parameters {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> NoiseModel:
        return cls.from_dict(json.loads(text))


ZERO_NOISE = NoiseModel()
DEFAULT_NOISE = NoiseModel(p1=3e-4, p2=1e-2, p_ro=2e-2)


def apply_channel(rho: np.ndarray, gate: Gate, model: NoiseModel) -> np.ndarray:
    """Conjugate by the gate, then depolarize the gate's qubits."""
    dim = rho.shape[0]
    n = _width_of(np.empty(dim))
    t = rho.reshape((2,) * (2 * n))
    t = apply_unitary_density(t, gate.matrix(), gate.qubits, n)
    p = model.p2 if len(gate.qubits) == 2 else model.p1
    t = depolarize(t, gate.qubits, p, n)
    return np.ascontiguousarray(t).reshape(dim, dim)


def readout_distribution(probs: np.ndarray, p_ro: float) -> np.ndarray:
    """Outcome law after flipping every measured bit independently with p_ro."""
    probs = np.asarray(probs, dtype=float)
    if p_ro == 0.0:
        return probs
    n = _width_of(probs)
    t = probs.reshape((2,) * n)
    for axis in range(n):
        t = (1.0 - p_ro) * t + p_ro * np.flip(t, axis=axis)
    return t.reshape(-1)


def readout_sample(rho: np.ndarray, shots: int, p_ro: float, seed=None) -> dict[int, int]:
    if shots < 1:
        raise ValueError("shots must be at least 1")
    probs = np.clip(np.real(np.diag(rho)), 0.0, None)
    probs = readout_distribution(probs / probs.sum(), p_ro)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs / probs.sum())
    return {int(i): int(counts[i]) for i in np.flatnonzero(counts)}


def fit_turning_point(error_curve) -> int:
    """Smallest m at which the mean error is minimal."""
    curve = list(error_curve)
    if not curve:
        raise ValueError("error curve is empty")
    best_m, best_err = curve[0]
    for m, err in curve[1:]:
        if err < best_err or (err == best_err and m < best_m):
            best_m, best_err = m, err
    return int(best_m)
