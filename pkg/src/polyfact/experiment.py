"""Seeded sweep experiments: generate ground truth, factorize, score.

A configuration is a JSON object::

    {
      "polytope": "binf",              # name, polytope JSON file, or inline dict
      "r": 3, "M": 4,
      "N": [100],                      # null -> generator's native sample count
      "snr_db": [10, 20, null],        # null -> noiseless
      "rho": [null],                   # inflation constants (inflated_mvie only)
      "realizations": 20,
      "generator": {"type": "polar_domain", "L": 30},   # or {"type": "inflated_mvie"}
      "solver": {"lam": 0.01, "tau": 1e-8, "step_scale": 5, "max_iters": 10000,
                 "rel_tol": 1e-8, "preset": null, "restarts": 1},
      "lam_overrides": [{"N": 100, "lam": 0.02}],
      "base_seed": 0
    }

Every (cell, realization) pair gets its own seed derived from
``(base_seed, cell, realization)``, so results do not depend on how the work is
scheduled.  Cells are the Cartesian product ``N x snr_db x rho`` in that order.
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .datagen import (InflationParams, generate_inflated_mvie, generate_polar_domain,
                      make_ground_truth, pad_with_interior)
from .factorizer import FactorizationProblem, SolverAborted, detmax_objective, factorize, recovery_preset
from .io import load_polytope, polytope_to_dict
from .metrics import sir

logger = logging.getLogger(__name__)

MAX_CELLS = 10_000
GENERATORS = ("polar_domain", "inflated_mvie")
SOLVER_KEYS = ("lam", "tau", "step_scale", "max_iters", "rel_tol", "patience", "init",
               "whiten", "lam_start", "lam_decay", "restarts", "sweeps", "dykstra",
               "raw_paper_step")
RECORD_FIELDS = ("cell", "realization", "seed", "N", "snr_db", "rho", "lam", "iterations",
                 "converged", "mean_sir_db", "detmax_objective", "wall_ms", "error")
AGGREGATE_FIELDS = ("cell", "N", "snr_db", "rho", "count", "failures", "mean_sir_db",
                    "std_sir_db", "mean_iterations", "converged_fraction")


def _solver_defaults() -> dict:
    return {"lam": 0.01, "tau": 1e-8, "step_scale": 5.0, "max_iters": 10_000,
            "rel_tol": 1e-8, "preset": None}


@dataclass
class ExperimentConfig:
    polytope: Any
    r: Optional[int] = None
    M: int = 4
    N: List[Optional[int]] = field(default_factory=lambda: [None])
    snr_db: List[Optional[float]] = field(default_factory=lambda: [None])
    rho: List[Optional[float]] = field(default_factory=lambda: [None])
    realizations: int = 1
    generator: Dict[str, Any] = field(default_factory=lambda: {"type": "polar_domain", "L": 30})
    solver: Dict[str, Any] = field(default_factory=dict)
    lam_overrides: List[Dict[str, Any]] = field(default_factory=list)
    base_seed: int = 0

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        for name in ("N", "snr_db", "rho"):
            if not getattr(self, name):
                raise ValueError(f"sweep axis {name!r} must be a nonempty list")
        if self.generator.get("type") not in GENERATORS:
            raise ValueError(f"generator type must be one of {GENERATORS}")
        if self.generator["type"] == "inflated_mvie":
            if any(rho is None for rho in self.rho):
                raise ValueError("inflated_mvie needs numeric rho values")
            if any(n is None for n in self.N):
                raise ValueError("inflated_mvie needs numeric N values")
        if len(self.cells()) > MAX_CELLS:
            raise ValueError(f"sweep has more than {MAX_CELLS} cells")
        unknown = set(self.solver) - set(SOLVER_KEYS) - {"preset"}
        if unknown:
            raise ValueError(f"unknown solver keys {sorted(unknown)}")
        if self.solver.get("preset") not in (None, "recovery"):
            raise ValueError("solver preset must be null or 'recovery'")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        if not isinstance(self.polytope, (str, dict)):
            d["polytope"] = polytope_to_dict(self.polytope)
        return d

    def cells(self):
        return list(itertools.product(self.N, self.snr_db, self.rho))

    def solver_kwargs(self, N=None, snr=None, rho=None) -> dict:
        """Keyword arguments for :class:`FactorizationProblem` in one cell.

        Defaults mirror the published experiment; the ``recovery`` preset
        replaces them, and keys given explicitly in ``solver`` win over both.
        """
        kw = _solver_defaults()
        del kw["preset"]
        if self.solver.get("preset") == "recovery":
            kw.update(recovery_preset())
        kw.update({k: v for k, v in self.solver.items() if k != "preset"})
        for o in self.lam_overrides:
            if all(o.get(key, val) == val for key, val in (("N", N), ("snr_db", snr), ("rho", rho))):
                kw["lam"] = o["lam"]
        return kw


_POLYTOPES: Dict[str, Any] = {}


def _load_config_polytope(cfg: ExperimentConfig):
    # one instance per process, so its MVIE and vertex caches are reused
    key = json.dumps([cfg.to_dict()["polytope"], cfg.r], sort_keys=True, default=str)
    if key not in _POLYTOPES:
        _POLYTOPES[key] = load_polytope(cfg.polytope, cfg.r)
    return _POLYTOPES[key]


@dataclass
class ExperimentRecord:
    cell: int
    realization: int
    seed: int
    N: int
    snr_db: Optional[float]
    rho: Optional[float]
    lam: float
    iterations: int
    converged: bool
    mean_sir_db: float
    detmax_objective: float
    wall_ms: float
    error: str = ""

    def row(self) -> dict:
        d = asdict(self)
        d["snr_db"] = "inf" if self.snr_db is None else self.snr_db
        d["rho"] = "" if self.rho is None else self.rho
        d["converged"] = int(self.converged)
        return d


def realization_seed(base_seed: int, cell: int, realization: int) -> int:
    """Seed for one realization, independent of execution order."""
    return int(np.random.SeedSequence([base_seed, cell, realization]).generate_state(1)[0])


def _generate_latents(p, cfg: ExperimentConfig, N, rho, seed):
    kind = cfg.generator["type"]
    if kind == "polar_domain":
        S = generate_polar_domain(p, int(cfg.generator.get("L", 30)), seed=seed,
                                  radius=float(cfg.generator.get("radius", 0.9)))
        if N is not None:
            if S.shape[1] > N:
                raise ValueError(f"generator produced {S.shape[1]} vertices, more than N={N}")
            S = pad_with_interior(S, N, seed=seed)
        return S
    return generate_inflated_mvie(p, InflationParams(float(rho), int(N)), seed=seed)


def run_realization(cfg: ExperimentConfig, cell: int, realization: int) -> ExperimentRecord:
    """Generate, solve and score one realization; solver failures become records."""
    N, snr, rho = cfg.cells()[cell]
    seed = realization_seed(cfg.base_seed, cell, realization)
    data_ss, truth_ss = np.random.SeedSequence(seed).spawn(2)
    kw = cfg.solver_kwargs(N, snr, rho)
    t0 = time.perf_counter()
    n_cols = -1 if N is None else N
    try:
        p = _load_config_polytope(cfg)
        S_g = _generate_latents(p, cfg, N, rho, np.random.default_rng(data_ss))
        n_cols = S_g.shape[1]
        gt = make_ground_truth(p, S_g, cfg.M, snr, seed=int(truth_ss.generate_state(1)[0]))
        res = factorize(FactorizationProblem(gt.Y_noisy, p, seed=seed, **kw))
    except (SolverAborted, np.linalg.LinAlgError, ValueError, RuntimeError) as exc:
        logger.warning("cell %d realization %d failed: %s", cell, realization, exc)
        wall = (time.perf_counter() - t0) * 1e3
        return ExperimentRecord(cell, realization, seed, n_cols, snr, rho, kw["lam"],
                                0, False, math.nan, math.nan, wall, f"{type(exc).__name__}: {exc}")
    score = sir(res.S, S_g)
    wall = (time.perf_counter() - t0) * 1e3
    return ExperimentRecord(cell, realization, seed, S_g.shape[1], snr, rho, kw["lam"],
                            res.iterations, res.converged, score.mean_db,
                            detmax_objective(res.S), wall)


def _task(args):
    cfg, cell, rep = args
    return run_realization(cfg, cell, rep)


def pool_size(workers: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``POLYFACT_THREADS``, else 1."""
    if workers is None:
        env = os.environ.get("POLYFACT_THREADS", "").strip()
        workers = int(env) if env else 1
    return max(1, int(workers))


def aggregate(records: List[ExperimentRecord], cells) -> List[dict]:
    """Per-cell mean / sample std of SIR over the realizations that finished."""
    out = []
    for c, (N, snr, rho) in enumerate(cells):
        rs = [r for r in records if r.cell == c]
        if not rs:
            continue
        vals = np.array([r.mean_sir_db for r in rs if np.isfinite(r.mean_sir_db)])
        out.append({
            "cell": c, "N": rs[0].N, "snr_db": "inf" if snr is None else snr,
            "rho": "" if rho is None else rho, "count": len(rs),
            "failures": len(rs) - len(vals),
            "mean_sir_db": float(vals.mean()) if len(vals) else math.nan,
            "std_sir_db": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
            "mean_iterations": float(np.mean([r.iterations for r in rs])),
            "converged_fraction": float(np.mean([r.converged for r in rs])),
        })
    return out


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: Optional[int] = None,
                   progress=None) -> List[ExperimentRecord]:
    """Run every (cell, realization); optionally write results.csv and aggregate.csv.

    Rows are written by this process only, in (cell, realization) order, as
    soon as every earlier row is available.
    """
    tasks = [(cfg, c, k) for c in range(len(cfg.cells())) for k in range(cfg.realizations)]
    n_workers = pool_size(workers)
    writer = fh = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        fh = open(os.path.join(out_dir, "results.csv"), "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        writer.writeheader()
    records = []
    try:
        if n_workers == 1:
            results = map(_task, tasks)
        else:
            pool = ProcessPoolExecutor(max_workers=n_workers)
            results = pool.map(_task, tasks)  # map preserves submission order
        for rec in results:
            records.append(rec)
            if writer is not None:
                writer.writerow(rec.row())
                fh.flush()
            if progress is not None:
                progress(rec)
        if n_workers > 1:
            pool.shutdown()
    finally:
        if fh is not None:
            fh.close()
    if out_dir is not None:
        write_aggregate(os.path.join(out_dir, "aggregate.csv"), aggregate(records, cfg.cells()))
        with open(os.path.join(out_dir, "config.json"), "w") as cf:
            json.dump(cfg.to_dict(), cf, indent=2)
    return records


def write_aggregate(path, rows: List[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=AGGREGATE_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def read_results(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
