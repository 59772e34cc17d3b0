"""Maximum likelihood post-processing of Grover-power hit counts.

Given entries (m_k, N_k, h_k), the good outcome after m Grover iterates has
probability sin^2((2m+1) theta) with a = sin^2(theta).  The estimate is the
global maximizer of the product-binomial log-likelihood over theta in
[0, pi/2], found by a dense grid followed by golden-section refinement.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

GRID_POINTS = 100_000
REFINE_TOL = 1e-10
CLAMP = 1e-12
DEFAULT_POWER_EXPONENT = 0.5
HALF_PI = math.pi / 2

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class ScheduleKind(str, Enum):
    LIS = "LIS"
    EIS = "EIS"
    POWER_LAW = "PowerLaw"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Schedule:
    entries: tuple[tuple[int, int], ...]
    kind: ScheduleKind = ScheduleKind.CUSTOM
    power_exponent: float | None = None

    def __post_init__(self):
        entries = tuple((int(m), int(n)) for m, n in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not entries:
            raise ValueError("schedule needs at least one entry")
        powers = [m for m, _ in entries]
        if powers[0] < 0 or any(b < a for a, b in zip(powers, powers[1:])):
            raise ValueError("Grover powers must be nonnegative and nondecreasing")
        if any(n < 1 for _, n in entries):
            raise ValueError("every schedule entry needs at least one shot")

    @property
    def powers(self) -> list[int]:
        return [m for m, _ in self.entries]

    @property
    def shots(self) -> list[int]:
        return [n for _, n in self.entries]

    def oracle_queries(self) -> int:
        """Total applications of A counted as sum N_k (2 m_k + 1)."""
        return sum(n * (2 * m + 1) for m, n in self.entries)


def make_schedule(kind, max_power: int, shots_per_level: int, power_exponent: float | None = None) -> Schedule:
    kind = ScheduleKind(kind)
    if max_power < 0:
        raise ValueError("max_power must be nonnegative")
    ks = range(max_power + 1)
    if kind is ScheduleKind.LIS:
        powers = list(ks)
    elif kind is ScheduleKind.EIS:
        powers = [0] + [2 ** (k - 1) for k in ks if k >= 1]
    elif kind is ScheduleKind.POWER_LAW:
        if power_exponent is None:
            raise ValueError("PowerLaw schedule needs an exponent")
        powers = [math.floor(k**power_exponent) for k in ks]
    else:
        raise ValueError("build Custom schedules with Schedule(entries)")
    return Schedule(tuple((m, shots_per_level) for m in powers), kind, power_exponent)


@dataclass
class HitRecord:
    powers: list[int]
    shots: list[int]
    hits: list[int]

    def __post_init__(self):
        if not (len(self.powers) == len(self.shots) == len(self.hits)):
            raise ValueError("powers, shots and hits must have equal length")
        for h, n in zip(self.hits, self.shots):
            if not 0 <= h <= n:
                raise ValueError(f"hit count {h} outside [0, {n}]")

    def __len__(self) -> int:
        return len(self.hits)

    def prefix(self, k: int) -> HitRecord:
        return HitRecord(self.powers[:k], self.shots[:k], self.hits[:k])

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> HitRecord:
        return cls([int(x) for x in d["powers"]], [int(x) for x in d["shots"]], [int(x) for x in d["hits"]])


@dataclass(frozen=True)
class Estimate:
    theta_hat: float
    loglik_at_max: float
    a_hat: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a_hat", math.sin(self.theta_hat) ** 2)

    def to_dict(self) -> dict:
        return {"theta_hat": self.theta_hat, "a_hat": self.a_hat, "loglik_at_max": self.loglik_at_max}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def likelihood_model(m, theta):
    return np.sin((2 * np.asarray(m) + 1) * theta) ** 2


def _entry_loglik(m: int, n: int, h: int, theta):
    p = np.clip(np.sin((2 * m + 1) * theta) ** 2, CLAMP, 1.0 - CLAMP)
    return h * np.log(p) + (n - h) * np.log1p(-p)


def log_likelihood(hits: HitRecord, theta):
    """Sum_k h_k ln p_k + (N_k - h_k) ln(1 - p_k), p_k clamped away from 0 and 1.

    ``theta`` may be a scalar or an array.
    """
    theta = np.asarray(theta, dtype=float)
    total = np.zeros_like(theta)
    for m, n, h in zip(hits.powers, hits.shots, hits.hits):
        total = total + _entry_loglik(m, n, h, theta)
    return total if total.ndim else float(total)


def _golden_max(f, lo: float, hi: float, tol: float = REFINE_TOL) -> float:
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def theta_grid(points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, HALF_PI, points)


def _refine(hits: HitRecord, grid: np.ndarray, values: np.ndarray) -> Estimate:
    # argmax returns the first maximum: ties go to the smaller theta
    i = int(np.argmax(values))
    best_theta, best_val = float(grid[i]), float(values[i])
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, grid.size - 1)])

    def f(t):
        return log_likelihood(hits, t)

    t = _golden_max(f, lo, hi)
    ft = f(t)
    if ft > best_val:
        best_theta, best_val = t, ft
    return Estimate(best_theta, best_val)


def mle_estimate(hits: HitRecord, grid_points: int = GRID_POINTS) -> Estimate:
    if len(hits) == 0:
        raise ValueError("hit record is empty")
    grid = theta_grid(grid_points)
    return _refine(hits, grid, log_likelihood(hits, grid))


def mle_prefix_estimates(hits: HitRecord, grid_points: int = GRID_POINTS) -> list[Estimate]:
    """Estimate from entries 0..k for every k, sharing one grid evaluation pass."""
    if len(hits) == 0:
        raise ValueError("hit record is empty")
    grid = theta_grid(grid_points)
    running = np.zeros_like(grid)
    out = []
    for k, (m, n, h) in enumerate(zip(hits.powers, hits.shots, hits.hits)):
        running = running + _entry_loglik(m, n, h, grid)
        out.append(_refine(hits.prefix(k + 1), grid, running))
    return out


def naive_estimate(h: int, n: int) -> float:
    if n < 1:
        raise ValueError("naive estimate needs at least one shot")
    return h / n
