"""Experiment harness: MLAE against naive sampling on random inner products.

Every random draw comes from its own Philox substream keyed by
``(repeat, role, index)`` under the experiment seed, so results do not
depend on the order (or process) in which repeats are executed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .estimator import (
    DEFAULT_POWER_EXPONENT,
    HitRecord,
    ScheduleKind,
    make_schedule,
    mle_prefix_estimates,
    naive_estimate,
)
from .loader import SUPPORTED_DIMENSIONS, GroverSpec, UnitVector, ae_circuit, inner_product_circuit
from .noise import NoiseModel, readout_distribution
from .qsim import probability_vector, run, run_density
from .transpiler import compile_circuit, report

ROLE_PAIR, ROLE_SCHEDULE, ROLE_NAIVE = 0, 1, 2
STAGES = ("lowered", "optimized")
RESULT_COLUMNS = (
    "method", "instance_id", "M", "max_power", "shots", "oracle_queries",
    "a_true", "a_hat", "abs_error",
)


class ConfigError(ValueError):
    pass


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class ExperimentConfig:
    dimension: int = 4
    max_power: int = 7
    shots_per_level: int = 500
    repeats: int = 50
    naive_shots: list[int] = field(default_factory=lambda: [500, 1000, 1500, 2000, 2500, 3000])
    noise: NoiseModel | None = None
    seed: int = 0
    schedule: str = "LIS"
    power_exponent: float | None = None
    stage: str = "optimized"
    power_exponent_defaulted: bool = field(default=False, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in SUPPORTED_DIMENSIONS:
            raise ConfigError(f"dimension must be one of {SUPPORTED_DIMENSIONS}")
        if self.max_power < 0:
            raise ConfigError("max_power must be nonnegative")
        if self.shots_per_level < 1:
            raise ConfigError("shots_per_level must be positive")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if not self.naive_shots or any(int(n) < 1 for n in self.naive_shots):
            raise ConfigError("naive_shots must be a nonempty list of positive counts")
        self.naive_shots = [int(n) for n in self.naive_shots]
        if self.stage not in STAGES:
            raise ConfigError(f"stage must be one of {STAGES}")
        try:
            kind = ScheduleKind(self.schedule)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if kind is ScheduleKind.CUSTOM:
            raise ConfigError("Custom schedules are not supported by the harness")
        if kind is ScheduleKind.POWER_LAW and self.power_exponent is None:
            self.power_exponent = DEFAULT_POWER_EXPONENT
            self.power_exponent_defaulted = True

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if d.get("noise") is not None:
            try:
                d["noise"] = NoiseModel.from_dict(d["noise"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad noise block: {exc}") from exc
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k, f in self.__dataclass_fields__.items() if f.init}
        d["noise"] = None if self.noise is None else self.noise.to_dict()
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def make_schedule(self):
        return make_schedule(self.schedule, self.max_power, self.shots_per_level, self.power_exponent)


def random_pair(d: int, rng: np.random.Generator) -> tuple[UnitVector, UnitVector]:
    """Two unit vectors whose inner product is uniform on [0, 1]."""
    if d not in SUPPORTED_DIMENSIONS:
        raise ConfigError(f"dimension must be one of {SUPPORTED_DIMENSIONS}")
    c = float(rng.uniform(0.0, 1.0))
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    while True:
        w = rng.standard_normal(d)
        w -= (w @ u) * u
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            break
    w /= norm
    b = c * u + math.sqrt(1.0 - c * c) * w
    return UnitVector(tuple(u)), UnitVector(tuple(b / np.linalg.norm(b)))


def outcome_distribution(spec: GroverSpec, m: int, stage: str, noise: NoiseModel | None) -> np.ndarray:
    """Measured-outcome law of the compiled m-iterate circuit."""
    circuit = compile_circuit(ae_circuit(spec, m), stage)
    if noise is None:
        return probability_vector(run(circuit))
    rho = run_density(circuit, noise)
    probs = np.clip(np.real(np.diag(rho)), 0.0, None)
    return readout_distribution(probs / probs.sum(), noise.p_ro)


def _good_hits(probs: np.ndarray, shots: int, good_qubit: int, rng) -> int:
    counts = rng.multinomial(shots, probs / probs.sum())
    idx = np.arange(probs.size)
    return int(counts[(idx >> good_qubit) & 1 == 1].sum())


@dataclass
class InstanceResult:
    instance_id: int
    a_true: float
    mle: list[dict]
    naive: list[dict]


def run_instance(cfg: ExperimentConfig, instance_id: int) -> InstanceResult:
    u, w = random_pair(cfg.dimension, substream(cfg.seed, instance_id, ROLE_PAIR, 0))
    spec = inner_product_circuit(u, w)
    a_true = float(np.dot(u.as_array(), w.as_array())) ** 2
    schedule = cfg.make_schedule()

    cache: dict[int, np.ndarray] = {}

    def law(m):
        if m not in cache:
            cache[m] = outcome_distribution(spec, m, cfg.stage, cfg.noise)
        return cache[m]

    hits = []
    for k, (m, n) in enumerate(schedule.entries):
        hits.append(_good_hits(law(m), n, spec.good_qubit, substream(cfg.seed, instance_id, ROLE_SCHEDULE, k)))
    record = HitRecord(schedule.powers, schedule.shots, hits)
    mle_rows = []
    shots_used = queries = 0
    for k, est in enumerate(mle_prefix_estimates(record)):
        m, n = schedule.entries[k]
        shots_used += n
        queries += n * (2 * m + 1)
        mle_rows.append({
            "M": k, "max_power": m, "shots": shots_used, "oracle_queries": queries,
            "a_hat": est.a_hat, "abs_error": abs(est.a_hat - a_true),
        })
    naive_rows = []
    for j, n in enumerate(cfg.naive_shots):
        h = _good_hits(law(0), n, spec.good_qubit, substream(cfg.seed, instance_id, ROLE_NAIVE, j))
        a_hat = naive_estimate(h, n)
        naive_rows.append({
            "M": "", "max_power": 0, "shots": n, "oracle_queries": n,
            "a_hat": a_hat, "abs_error": abs(a_hat - a_true),
        })
    return InstanceResult(instance_id, a_true, mle_rows, naive_rows)


def _aggregate(errors: list[float]) -> dict:
    arr = np.asarray(errors, dtype=float)
    return {
        "n": int(arr.size),
        "mean_abs_error": float(np.mean(arr)),
        "std_abs_error": float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0,
        "rms_error": float(np.sqrt(np.mean(arr**2))),
    }


@dataclass
class ExperimentResult:
    config: ExperimentConfig | None
    instances: list[InstanceResult] = field(default_factory=list)

    def rows(self) -> list[dict]:
        out = []
        for inst in self.instances:
            for method, rows in (("mle", inst.mle), ("naive", inst.naive)):
                for r in rows:
                    out.append({"method": method, "instance_id": inst.instance_id, "a_true": inst.a_true, **r})
        return out

    def mle_summary(self) -> list[dict]:
        by_level: dict[int, list[dict]] = {}
        for inst in self.instances:
            for r in inst.mle:
                by_level.setdefault(r["M"], []).append(r)
        return [
            {"M": k, "max_power": rows[0]["max_power"], "oracle_queries_mean": float(np.mean([r["oracle_queries"] for r in rows])),
             **_aggregate([r["abs_error"] for r in rows])}
            for k, rows in sorted(by_level.items())
        ]

    def naive_summary(self) -> list[dict]:
        by_shots: dict[int, list[float]] = {}
        for inst in self.instances:
            for r in inst.naive:
                by_shots.setdefault(r["shots"], []).append(r["abs_error"])
        return [{"shots": n, **_aggregate(errs)} for n, errs in sorted(by_shots.items())]

    def mle_curve(self) -> list[tuple[int, float]]:
        return [(s["max_power"], s["mean_abs_error"]) for s in self.mle_summary()]

    def naive_curve(self) -> list[tuple[int, float]]:
        return [(s["shots"], s["mean_abs_error"]) for s in self.naive_summary()]

    def summary(self) -> dict:
        cfg = self.config
        return {
            "mle": self.mle_summary(),
            "naive": self.naive_summary(),
            "metadata": {
                "error_metric": "mean absolute error |a_hat - a| (rms_error given alongside)",
                "mle_levels": "cumulative: estimate at M uses schedule entries 0..M",
                "naive_sampling": "fresh draw of the m=0 circuit per shot count",
                "power_exponent": None if cfg is None else cfg.power_exponent,
                "power_exponent_is_default": bool(cfg is not None and cfg.power_exponent_defaulted),
            },
            "provenance": {
                "config_sha256": None if cfg is None else cfg.digest(),
                "seed": None if cfg is None else cfg.seed,
                "code_version": __version__,
            },
        }


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    ids = range(cfg.repeats)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            instances = list(pool.map(run_instance, [cfg] * cfg.repeats, ids))
    else:
        instances = [run_instance(cfg, i) for i in ids]
    return ExperimentResult(cfg, instances)


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def results_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in result.rows():
        w.writerow({k: _fmt(r[k]) for k in RESULT_COLUMNS})
    return buf.getvalue()


def summary_json(result: ExperimentResult) -> str:
    return json.dumps(result.summary(), sort_keys=True, indent=2) + "\n"


def emit_report(result: ExperimentResult, out_dir, formats=("csv", "json")) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            p = out / "results.csv"
            p.write_text(results_csv(result))
            written.append(p)
        if "json" in formats:
            p = out / "summary.json"
            p.write_text(summary_json(result))
            written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return written


def compile_report_for(cfg: ExperimentConfig, instance_id: int = 0):
    u, w = random_pair(cfg.dimension, substream(cfg.seed, instance_id, ROLE_PAIR, 0))
    return report(inner_product_circuit(u, w), cfg.max_power)


def calibration_sweep(p2_values, base: ExperimentConfig, p1_ratio: float = 0.03, p_ro: float = 0.02):
    """Turning point of the MLAE error curve for each two-qubit error rate."""
    from dataclasses import replace

    from .noise import fit_turning_point

    out = []
    for p2 in p2_values:
        cfg = replace(base, noise=NoiseModel(p1=p1_ratio * p2, p2=p2, p_ro=p_ro))
        res = run_experiment(cfg)
        out.append((p2, fit_turning_point(res.mle_curve()), res.mle_curve()))
    return out
