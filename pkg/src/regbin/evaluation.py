"""Ground-truth comparison, end-to-end validation runs and parameter sweeps."""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .binarizer import BinarizerConfig, binarize
from .graph import BooleanNetwork, interaction_graph_of
from .odesim import (
    HillParams,
    IntegrationError,
    LateK,
    SnapshotPolicy,
    Snapshot,
    build_ode,
    detect_steady_state,
    extract_snapshots,
    integrate_rk4,
    threshold_binarize,
)
from .profile import BinaryProfile, TriState


class GeneSetMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DissimilarityReport:
    d: Fraction
    mismatched: tuple[str, ...]
    n_genes: int
    na_is_mismatch: bool = True

    def __str__(self) -> str:
        return fraction_str(self.d)

    def to_dict(self) -> dict:
        return {
            "d": fraction_str(self.d),
            "d_float": float(self.d),
            "mismatched": list(self.mismatched),
            "n_genes": self.n_genes,
            "na_is_mismatch": self.na_is_mismatch,
        }


def fraction_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def dissimilarity(truth: BinaryProfile, test: BinaryProfile) -> DissimilarityReport:
    """Fraction of genes where ``test`` differs from ``truth``; NA in ``test`` always counts."""
    if set(truth.states) != set(test.states):
        only_t = sorted(set(truth.states) - set(test.states))
        only_x = sorted(set(test.states) - set(truth.states))
        raise GeneSetMismatch(f"gene sets differ: truth-only {only_t}, test-only {only_x}")
    genes = truth.genes
    bad = tuple(g for g in genes if test[g] is TriState.NA or test[g] is not truth[g])
    n = len(genes)
    return DissimilarityReport(Fraction(len(bad), n) if n else Fraction(0), bad, n)


def format_distances(reports: Sequence[DissimilarityReport]) -> str:
    return "{" + ", ".join(str(r) for r in reports) + "}"


# --- single validation run -----------------------------------------------


@dataclass
class ValidationResult:
    reports: list[DissimilarityReport]
    snapshots: list[Snapshot]
    truth: list[BinaryProfile]
    test: list[BinaryProfile]
    steady_time: float | None
    t_end: float
    dt: float

    @property
    def distances(self) -> list[Fraction]:
        return [r.d for r in self.reports]

    @property
    def max_d(self) -> Fraction:
        return max(self.distances, default=Fraction(0))

    def to_dict(self) -> dict:
        return {
            "steady_state_time": self.steady_time,
            "t_end": self.t_end,
            "dt": self.dt,
            "distances": "{" + ", ".join(str(r) for r in self.reports) + "}",
            "snapshots": [
                {
                    "time": s.time,
                    "values": dict(sorted(s.values.items())),
                    "truth": {g: v.value for g, v in sorted(tr.states.items())},
                    "test": {g: v.value for g, v in sorted(te.states.items())},
                    "provenance": {g: p.value for g, p in sorted(te.provenance.items())},
                    "report": r.to_dict(),
                }
                for s, tr, te, r in zip(self.snapshots, self.truth, self.test, self.reports)
            ],
        }


def run_validation(
    net: BooleanNetwork,
    params: HillParams,
    x0: Mapping[str, float],
    bcfg: BinarizerConfig | None = None,
    *,
    t_end: float = 100.0,
    dt: float = 0.01,
    policy: SnapshotPolicy | None = None,
    tol: float = 1e-4,
    window: float = 10.0,
    record_every: int = 1,
    backend: str | None = None,
) -> ValidationResult:
    """Simulate ``net``, snapshot, and compare threshold truth with the binarizer.

    A missing steady state is reported through ``steady_time = None``; it does
    not stop the comparison.
    """
    system = build_ode(net, params)
    traj = integrate_rk4(system, x0, t_end, dt, record_every=record_every, backend=backend)
    steady = detect_steady_state(traj, tol, window) if traj.t_end - traj.times[0] >= window else None
    snaps = extract_snapshots(traj, policy or LateK())
    graph = interaction_graph_of(net)
    truth, test, reports = [], [], []
    for snap in snaps:
        tp = threshold_binarize(snap, params)
        bp = binarize(graph, snap.values, bcfg)
        truth.append(tp)
        test.append(bp)
        reports.append(dissimilarity(tp, bp))
    return ValidationResult(reports, snaps, truth, test, steady, traj.t_end, dt)


# --- parameter sweep -----------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    n_runs: int
    rng_seed: int
    kappa_range: tuple[float, float] = (3.0, 100.0)
    gamma_range: tuple[float, float] = (0.25, 2.0)
    theta_offset: tuple[float, float] = (-0.5, 0.5)
    x0: Mapping[str, float] | None = None
    x0_range: tuple[float, float] | None = None
    hill_n: float = 20.0
    t_end: float = 150.0
    dt: float = 0.0025
    record_every: int = 40
    tol: float = 1e-4
    window: float = 10.0
    snapshots: int = 3
    spacing: float = 5.0
    binarizer: BinarizerConfig = field(default_factory=BinarizerConfig)

    def __post_init__(self):
        if self.n_runs < 0:
            raise ValueError("n_runs must be non-negative")
        if not isinstance(self.rng_seed, int) or not (0 <= self.rng_seed < 2**64):
            raise ValueError("rng_seed must be a 64-bit non-negative integer")
        for name in ("kappa_range", "gamma_range", "theta_offset"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if self.kappa_range[0] <= 0 or self.gamma_range[0] <= 0:
            raise ValueError("rates must be positive")
        if 1.0 + self.theta_offset[0] <= 0:
            raise ValueError("theta range must stay positive")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "rng_seed": self.rng_seed,
            "kappa_range": list(self.kappa_range),
            "gamma_range": list(self.gamma_range),
            "theta_offset": list(self.theta_offset),
            "x0": dict(sorted(self.x0.items())) if self.x0 is not None else None,
            "x0_range": list(self.x0_range) if self.x0_range is not None else None,
            "hill_n": self.hill_n,
            "t_end": self.t_end,
            "dt": self.dt,
            "record_every": self.record_every,
            "tol": self.tol,
            "window": self.window,
            "snapshots": self.snapshots,
            "spacing": self.spacing,
            "binarizer": self.binarizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SweepConfig":
        kw = dict(d)
        unknown = set(kw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown sweep config keys {sorted(unknown)}")
        for name in ("kappa_range", "gamma_range", "theta_offset", "x0_range"):
            if kw.get(name) is not None:
                kw[name] = tuple(float(v) for v in kw[name])
        if "binarizer" in kw:
            kw["binarizer"] = BinarizerConfig.from_dict(kw["binarizer"])
        return cls(**kw)


@dataclass(frozen=True)
class RunRecord:
    run: int
    status: str  # reached | skipped | failed
    kappa_rate: tuple[float, ...]
    gamma: tuple[float, ...]
    theta: tuple[float, ...]
    distances: tuple[Fraction, ...] = ()
    steady_time: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "run": self.run,
            "status": self.status,
            "kappa_rate": list(self.kappa_rate),
            "gamma": list(self.gamma),
            "theta": list(self.theta),
            "distances": [fraction_str(d) for d in self.distances],
            "steady_time": self.steady_time,
            "note": self.note,
        }


@dataclass
class SweepReport:
    config: SweepConfig
    genes: tuple[str, ...]
    runs: list[RunRecord]

    @property
    def attempted(self) -> int:
        return len(self.runs)

    def _count(self, status: str) -> int:
        return sum(r.status == status for r in self.runs)

    @property
    def reached(self) -> int:
        return self._count("reached")

    @property
    def skipped(self) -> int:
        return self._count("skipped")

    @property
    def failed(self) -> int:
        return self._count("failed")

    @property
    def max_d(self) -> Fraction | None:
        pool = [d for r in self.runs if r.status == "reached" for d in r.distances]
        return max(pool) if pool else None

    def histogram(self) -> dict[str, int]:
        hist: dict[Fraction, int] = {}
        for r in self.runs:
            if r.status == "reached":
                for d in r.distances:
                    hist[d] = hist.get(d, 0) + 1
        return {fraction_str(k): hist[k] for k in sorted(hist)}

    def kappa_std(self) -> float | None:
        ks = [k for r in self.runs for k in r.kappa_rate]
        return float(np.std(ks, ddof=1)) if len(ks) > 1 else None

    def summary(self) -> dict:
        md = self.max_d
        return {
            "attempted": self.attempted,
            "steady_state_reached": self.reached,
            "skipped_oscillatory": self.skipped,
            "failed": self.failed,
            "max_d": fraction_str(md) if md is not None else None,
            "histogram": self.histogram(),
            "kappa_std": self.kappa_std(),
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "genes": list(self.genes),
            "summary": self.summary(),
            "runs": [r.to_dict() for r in self.runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def table(self) -> str:
        s = self.summary()
        std = "n/a" if s["kappa_std"] is None else f"{s['kappa_std']:.4f}"
        lines = [
            f"runs attempted        {s['attempted']}",
            f"steady state reached  {s['steady_state_reached']}",
            f"skipped (no steady)   {s['skipped_oscillatory']}",
            f"failed                {s['failed']}",
            f"max d                 {s['max_d']}",
            f"kappa std-dev         {std}",
            "distance histogram:",
        ]
        lines += [f"  d={k:<8} {v}" for k, v in s["histogram"].items()] or ["  (empty)"]
        return "\n".join(lines) + "\n"


def _draw(rng: np.random.Generator, n: int, lo: float, hi: float) -> tuple[float, ...]:
    return tuple(float(v) for v in rng.uniform(lo, hi, size=n))


def _one_run(args) -> RunRecord:
    net, cfg, base_x0, i, seed_seq = args
    genes = net.genes
    rng = np.random.default_rng(seed_seq)
    kap = _draw(rng, len(genes), *cfg.kappa_range)
    gam = _draw(rng, len(genes), *cfg.gamma_range)
    th = tuple(1.0 + v for v in _draw(rng, len(genes), *cfg.theta_offset))
    if cfg.x0_range is not None:
        x0 = dict(zip(genes, _draw(rng, len(genes), *cfg.x0_range)))
    else:
        x0 = base_x0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = HillParams(dict(zip(genes, kap)), dict(zip(genes, gam)), dict(zip(genes, th)), cfg.hill_n)
    try:
        res = run_validation(
            net,
            params,
            x0,
            cfg.binarizer,
            t_end=cfg.t_end,
            dt=cfg.dt,
            policy=LateK(cfg.snapshots, cfg.spacing),
            tol=cfg.tol,
            window=cfg.window,
            record_every=cfg.record_every,
        )
    except (IntegrationError, ValueError) as exc:
        return RunRecord(i, "failed", kap, gam, th, note=str(exc))
    if res.steady_time is None:
        return RunRecord(i, "skipped", kap, gam, th, note="no steady state")
    return RunRecord(i, "reached", kap, gam, th, tuple(res.distances), res.steady_time)


def parameter_sweep(
    net: BooleanNetwork,
    cfg: SweepConfig,
    *,
    base_x0: Mapping[str, float] | None = None,
    workers: int = 1,
) -> SweepReport:
    """Seeded randomized re-validation of ``net`` under uniformly drawn parameters.

    Each run draws from its own generator spawned off ``rng_seed``, so results
    do not depend on how runs are spread across ``workers``.
    """
    genes = net.genes
    x0 = dict(cfg.x0 if cfg.x0 is not None else (base_x0 or {}))
    if cfg.x0_range is None:
        missing = [g for g in genes if g not in x0]
        if missing:
            raise ValueError(f"no initial value for {missing}")
        x0 = {g: float(x0[g]) for g in genes}
    children = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_runs)
    jobs = [(net, cfg, x0, i, ss) for i, ss in enumerate(children)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_one_run, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        runs = [_one_run(j) for j in jobs]
    return SweepReport(cfg, genes, runs)


def uniform_std(lo: float, hi: float) -> float:
    return (hi - lo) / math.sqrt(12.0)


__all__ = [
    "GeneSetMismatch",
    "DissimilarityReport",
    "dissimilarity",
    "fraction_str",
    "format_distances",
    "ValidationResult",
    "run_validation",
    "SweepConfig",
    "RunRecord",
    "SweepReport",
    "parameter_sweep",
    "uniform_std",
]
