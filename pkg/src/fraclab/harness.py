"""Batch experiments: projection sweeps, toy-universe checks, estimator and recovery runs.

Every experiment is a pure function of its config (plus the frozen constants
file), so reports are reproducible byte for byte apart from ``timestamp``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .constants import Constants, load_constants
from .dimension import DEFAULT_WINDOW, projection_dimension
from .errors import ContractViolation
from .fractals import MAX_PRECISION, IFSSpec, resolve
from .geometry import Direction, sample_direction

SCHEMA = 1
KINDS = ("marstrand", "packing", "toy-verify", "recovery-sweep", "dim-point")
SWEEP_WINDOW = (10, 20)
POINT_SOURCES = ("rational", "random", "fractal")


@dataclass
class ExperimentConfig:
    kind: str
    fractal: str = "fourcorner"
    directions: int = 100
    seed: int = 0
    window: Optional[tuple] = None
    tol: float = 0.1
    fraction: float = 0.95
    exceptional: Optional[list] = None
    method: str = "auto"
    # toy-verify
    max_length: int = 16
    lemma_max_length: int = 22
    instances: int = 100
    # dim-point
    source: str = "random"
    point: Optional[list] = None
    denominator: int = 3
    dimension: int = 1
    r_max: int = 4096
    estimator: str = "lzdp"
    # recovery-sweep
    ns: tuple = (2, 3, 4)
    precision: int = 30
    t_range: tuple = (1.0, 15.0)
    out: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.window is None:
            self.window = SWEEP_WINDOW if self.kind in ("marstrand", "packing") else DEFAULT_WINDOW
        self.window = tuple(int(v) for v in self.window)
        self.ns = tuple(int(v) for v in self.ns)
        self.t_range = tuple(float(v) for v in self.t_range)
        if self.exceptional is not None:
            self.exceptional = [list(map(float, d)) for d in self.exceptional]
        if self.kind in ("marstrand", "packing"):
            if self.directions < 1:
                raise ContractViolation("direction count must be >= 1")
            lo, hi = self.window
            if not (0 <= lo < hi <= MAX_PRECISION) or hi - lo + 1 < 4:
                raise ContractViolation(f"precision window {self.window} is infeasible (limit {MAX_PRECISION})")
        if self.instances < 0:
            raise ContractViolation("instance count must be >= 0")
        if not 0 < self.fraction <= 1:
            raise ContractViolation("fraction must lie in (0, 1]")
        if self.source not in POINT_SOURCES:
            raise ContractViolation(f"unknown point source {self.source!r}")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ContractViolation(f"unknown config fields: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path, **overrides) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ContractViolation(f"cannot read config {path}: {exc}") from None
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["ns"] = list(self.ns)
        d["t_range"] = list(self.t_range)
        return d

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    records: list
    summary: dict
    verdicts: dict
    ground_truth: Optional[float]
    provenance: dict
    timestamp: str = ""
    schema: int = SCHEMA

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self, timestamp: bool = True) -> dict:
        d = asdict(self)
        if not timestamp:
            d.pop("timestamp")
        return d

    def to_json(self, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(timestamp), indent=2, sort_keys=True) + "\n"

    def records_csv(self) -> str:
        buf = io.StringIO()
        if self.records:
            cols = list(self.records[0])
            for rec in self.records[1:]:
                cols += [c for c in rec if c not in cols]
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(cols)
            for rec in self.records:
                w.writerow([_csv_cell(rec.get(c)) for c in cols])
        return buf.getvalue()

    def write(self, out) -> tuple[Path, Path]:
        """Write <out>.json and <out>.csv side by side (a .json suffix on out is dropped)."""
        base = Path(out)
        if base.suffix in (".json", ".csv"):
            base = base.with_suffix("")
        base.parent.mkdir(parents=True, exist_ok=True)
        jpath, cpath = base.with_suffix(".json"), base.with_suffix(".csv")
        jpath.write_text(self.to_json())
        cpath.write_text(self.records_csv())
        return jpath, cpath


def _csv_cell(v):
    if isinstance(v, (list, tuple)):
        return " ".join(repr(float(x)) if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, Fraction):
        return float(v)
    return v


def _timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def worker_count() -> int:
    cap = os.environ.get("FRACLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ContractViolation(f"FRACLAB_THREADS must be an integer, got {cap!r}") from None
    return n


def parallel_map(fn: Callable, tasks: Sequence, workers: Optional[int] = None) -> list:
    """Ordered map over independent tasks, in a process pool when more than one worker is allowed."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _report(cfg: ExperimentConfig, records, summary, verdicts, truth, estimators, constants: Constants) -> ExperimentReport:
    prov = {
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "estimators": list(estimators),
        "constants_version": constants.version,
        "fraclab_version": __version__,
    }
    return ExperimentReport(cfg.kind, _clean(cfg.to_dict()), _clean(records), _clean(summary), _clean(verdicts),
                            None if truth is None else float(truth), prov, _timestamp())


# ---------------------------------------------------------------------------
# projection sweeps


def sweep_directions(n: int, count: int, seed: int) -> list[Direction]:
    rng = np.random.default_rng(seed)
    return [sample_direction(n, rng) for _ in range(count)]


def _projection_task(args):
    ifs, comps, window, mode, method = args
    est = projection_dimension(ifs, Direction(comps), window, mode, method)
    return est.to_dict()


def _sweep(cfg: ExperimentConfig, mode: str, constants: Optional[Constants]):
    consts = constants or load_constants()
    ifs = resolve(cfg.fractal)
    s = ifs.moran_dimension
    target = min(s, 1.0)
    if ifs.dimension < 2:
        raise ContractViolation("projection sweeps need a set in R^n with n >= 2")
    dirs = sweep_directions(ifs.dimension, cfg.directions, cfg.seed)
    exc = cfg.exceptional if cfg.exceptional is not None else [list(d) for d in ifs.exceptional]
    exc_dirs = [Direction.from_vector(d) for d in exc]
    tasks = [(ifs, d.components, cfg.window, mode, cfg.method) for d in dirs + exc_dirs]
    results = parallel_map(_projection_task, tasks)
    records = []
    for k, (d, est) in enumerate(zip(dirs + exc_dirs, results)):
        records.append({
            "index": k,
            "exceptional": k >= len(dirs),
            "direction": list(d.components),
            "estimate": est["slope"],
            "mode": mode,
            "intercept": est["intercept"],
            "rms": est["rms"],
        })
    return ifs, s, target, records, consts


def summarize_sweep(records: list, target: float, tol: float, fraction: float, two_sided: bool) -> tuple[dict, dict]:
    """Summary and verdicts recomputed from per-direction records (exceptional ones excluded)."""
    pool = np.array([r["estimate"] for r in records if not r["exceptional"]], dtype=float)
    exc = [r for r in records if r["exceptional"]]
    above = pool >= target - tol
    within = above & (pool <= target + tol)
    summary = {
        "count": int(len(pool)),
        "median": float(np.median(pool)) if len(pool) else None,
        "min": float(pool.min()) if len(pool) else None,
        "max": float(pool.max()) if len(pool) else None,
        "fraction_above": float(above.mean()) if len(pool) else None,
        "fraction_within": float(within.mean()) if len(pool) else None,
        "target": float(target),
        "tol": float(tol),
        "exceptional": [{"direction": r["direction"], "estimate": r["estimate"]} for r in exc],
    }
    verdicts = {"almost_every_lower": bool(len(pool) and above.mean() >= fraction)}
    if two_sided:
        verdicts["upper"] = bool(len(pool) and np.all(pool <= target + tol))
    return summary, verdicts


def run_marstrand(cfg: ExperimentConfig, constants: Optional[Constants] = None) -> ExperimentReport:
    """Least-squares projection dimensions over seeded directions versus min(s, 1)."""
    ifs, s, target, records, consts = _sweep(cfg, "ls", constants)
    summary, verdicts = summarize_sweep(records, target, cfg.tol, cfg.fraction, two_sided=True)
    summary["s"] = s
    return _report(cfg, records, summary, verdicts, target, [f"box-ls/{cfg.method}"], consts)


def run_packing(cfg: ExperimentConfig, constants: Optional[Constants] = None) -> ExperimentReport:
    """Upper-box (limsup) projection dimensions over seeded directions, one-sided against min(s, 1)."""
    ifs, s, target, records, consts = _sweep(cfg, "limsup", constants)
    summary, verdicts = summarize_sweep(records, target, cfg.tol, cfg.fraction, two_sided=False)
    summary["s"] = s
    return _report(cfg, records, summary, verdicts, target, [f"box-limsup/{cfg.method}"], consts)


# ---------------------------------------------------------------------------
# toy universe


def point_lemma_instances(count: int, seed: int, table, rs=(4, 5), max_draws: Optional[int] = None):
    """Seeded instances (z, e, r, delta, eta, eps) for which lemma parameters exist."""
    from .toy.lemmas import lemma_parameters

    rng = np.random.default_rng([seed, 1])
    out, draws = [], 0
    max_draws = max_draws or 20 * count + 20
    while len(out) < count and draws < max_draws:
        draws += 1
        z = tuple(float(v) for v in rng.uniform(-0.6, 0.6, 2))
        e = sample_direction(2, rng)
        r = int(rng.choice(rs))
        delta = Fraction(1, 2) if draws % 2 else Fraction(1)
        par = lemma_parameters(table, z, e, r, delta)
        if par is not None:
            out.append((z, e, r, delta, par[0], par[1]))
    return out


def symmetry_instances(count: int, seed: int, table, max_draws: Optional[int] = None):
    """Seeded 1-D tuples (x, y, r, s) with s <= r whose quantities are all defined."""
    from .toy.lemmas import verify_symmetry_of_information

    rng = np.random.default_rng([seed, 2])
    out, draws = [], 0
    max_draws = max_draws or 4 * count + 20
    while len(out) < count and draws < max_draws:
        draws += 1
        r = int(rng.integers(1, 4))
        s = int(rng.integers(1, r + 1))
        x = (float(rng.uniform(-0.9, 0.9)),)
        y = (float(rng.uniform(-0.9, 0.9)),)
        if verify_symmetry_of_information(table, x, y, r, s).defined:
            out.append((x, y, r, s))
    return out


def run_toy_verify(cfg: ExperimentConfig, constants: Optional[Constants] = None) -> ExperimentReport:
    from .toy.complexity import exact_K
    from .toy.lemmas import verify_point_lemma, verify_projection_bound, verify_symmetry_of_information
    from .toy.machine import ToyMachine
    from .geometry import DyadicPoint

    consts = constants or load_constants()
    records = []
    counts = {"point_lemma": [0, 0, 0], "symmetry": [0, 0], "projection_bound": [0, 0, 0]}
    if cfg.instances:
        small = exact_K(ToyMachine(cfg.max_length))
        big = exact_K(ToyMachine(cfg.lemma_max_length))
        for k, (z, e, r, delta, eta, eps) in enumerate(point_lemma_instances(cfg.instances, cfg.seed, big)):
            rep = verify_point_lemma(big, z, e, r, eta, eps, delta, consts)
            counts["point_lemma"][0] += 1
            if rep.hypotheses:
                counts["point_lemma"][1] += 1
                counts["point_lemma"][2] += bool(rep.conclusion and rep.recovery.get("ok"))
            records.append({
                "check": "point_lemma", "index": k, "z": list(z), "direction": list(e.components), "r": r,
                "eta": float(eta), "eps": float(eps), "delta": float(delta), "hypotheses": rep.hypotheses,
                "conclusion": rep.conclusion, "recovery_ok": rep.recovery.get("ok"), "K_r_z": rep.K_r_z,
                "K_r_ez": rep.K_r_ez, "rhs": rep.rhs, "required_C1": rep.required_C1,
                "level_set_gap": rep.recovery.get("level_set_gap"), "gap_bound": rep.recovery.get("gap_bound"),
            })
        for k, (x, y, r, s) in enumerate(symmetry_instances(cfg.instances, cfg.seed, small)):
            rep = verify_symmetry_of_information(small, x, y, r, s, consts)
            counts["symmetry"][0] += 1
            counts["symmetry"][1] += rep.holds
            records.append({
                "check": "symmetry", "index": k, "x": list(x), "y": list(y), "r": r, "s": s,
                "chain_gap": rep.chain_gap, "chain_bound": rep.chain_bound,
                "precision_gap": rep.precision_gap, "precision_bound": rep.precision_bound, "holds": rep.holds,
            })
        rng = np.random.default_rng([cfg.seed, 3])
        for k in range(cfg.instances):
            z = tuple(float(v) for v in rng.uniform(-0.6, 0.6, 2))
            e = sample_direction(2, rng)
            r = int(rng.choice((3, 4, 5)))
            # every fourth instance hands the oracle z itself, which must trip condition 2
            oracle = DyadicPoint.from_real(z, r + 2) if k % 4 == 3 else None
            rep = verify_projection_bound(big, z, e, Fraction(1, 2), Fraction(1, 64), r, oracle, consts)
            counts["projection_bound"][0] += 1
            counts["projection_bound"][1] += rep.asserted
            counts["projection_bound"][2] += bool(rep.asserted and rep.conclusion)
            records.append({
                "check": "projection_bound", "index": k, "z": list(z), "direction": list(e.components), "r": r,
                "oracle_reveals_z": oracle is not None, "condition1": rep.condition1, "condition2": rep.condition2,
                "asserted": rep.asserted, "lhs": rep.lhs, "rhs": rep.rhs, "vacuous": rep.vacuous,
                "conclusion": rep.conclusion,
            })
    pl, sy, pb = counts["point_lemma"], counts["symmetry"], counts["projection_bound"]
    summary = {
        "point_lemma": {"instances": pl[0], "hypotheses_hold": pl[1], "conclusion_and_recovery": pl[2]},
        "symmetry": {"instances": sy[0], "holds": sy[1]},
        "projection_bound": {"instances": pb[0], "asserted": pb[1], "conclusion": pb[2]},
        "universe": {"max_length": cfg.max_length, "lemma_max_length": cfg.lemma_max_length},
    }
    leaked = [r for r in records if r["check"] == "projection_bound" and r["oracle_reveals_z"] and r["condition2"]]
    verdicts = {
        "point_lemma": pl[1] == pl[2],
        "symmetry": sy[0] == sy[1],
        "projection_bound": pb[1] == pb[2],
        "revealing_oracle_flagged": not leaked,
    }
    return _report(cfg, records, summary, verdicts, None, ["toy-exact"], consts)


# ---------------------------------------------------------------------------
# estimators


def point_source(cfg: ExperimentConfig):
    from .estimators import fractal_source, random_source, rational_source

    if cfg.source == "rational":
        num = cfg.point if cfg.point is not None else [1] * cfg.dimension
        return rational_source([int(v) for v in num], int(cfg.denominator)), "rational"
    if cfg.source == "random":
        return random_source(cfg.dimension, cfg.seed, max(cfg.r_max, 64)), "random"
    return fractal_source(resolve(cfg.fractal), cfg.seed, max(cfg.r_max, 64)), f"fractal:{cfg.fractal}"


def run_dim_point(cfg: ExperimentConfig, constants: Optional[Constants] = None) -> ExperimentReport:
    from .estimators import complexity_profile, effective_dim, profile_precisions

    consts = constants or load_constants()
    source, label = point_source(cfg)
    prof = complexity_profile(source, profile_precisions(cfg.r_max), cfg.estimator, label=label)
    dens = prof.densities()
    records = [{"r": r, "k_r": k, "density": d} for r, k, d in zip(prof.rs, prof.ks, dens)]
    lo, hi = effective_dim(prof, "liminf"), effective_dim(prof, "limsup")
    summary = {"liminf": lo, "limsup": hi, "source": label, "dimension": prof.dimension, "samples": len(prof.rs)}
    verdicts = {"ordered": lo <= hi}
    if cfg.source == "rational":
        verdicts["rational_liminf"] = lo <= 0.1
    elif cfg.source == "random":
        verdicts["random_range"] = 0.9 <= lo and hi <= 1.05
    return _report(cfg, records, summary, verdicts, None, [prof.estimator], consts)


# ---------------------------------------------------------------------------
# direction recovery


def recovery_cases(cfg: ExperimentConfig):
    """(instance seed, n, t) for each Monte Carlo instance; n cycles through cfg.ns."""
    rng = np.random.default_rng([cfg.seed, 4])
    lo, hi = cfg.t_range
    return [(k, cfg.ns[k % len(cfg.ns)], float(rng.uniform(lo, hi))) for k in range(cfg.instances)]


def _recovery_task(args):
    from .recovery import random_instance, verify_direction_recovery

    seed, k, n, t, r, alpha = args
    inst = random_instance(n, r, t, np.random.default_rng([seed, 5, k]))
    rep = verify_direction_recovery(inst, alpha=alpha)
    return {"seed": k, "n": n, "r": r, "t": rep.t, "error": rep.error, "bound": rep.bound, "pass": rep.passed,
            "uninformative": rep.uninformative}


def run_recovery_sweep(cfg: ExperimentConfig, constants: Optional[Constants] = None) -> ExperimentReport:
    consts = constants or load_constants()
    tasks = [(cfg.seed, k, n, t, cfg.precision, consts.alpha_for(n)) for k, n, t in recovery_cases(cfg)]
    records = parallel_map(_recovery_task, tasks)
    passes = [r["pass"] for r in records]
    summary = {
        "instances": len(records),
        "pass_fraction": float(np.mean(passes)) if records else None,
        "max_log_ratio": max((math.log2(r["error"] / r["bound"]) for r in records if r["error"] > 0), default=None),
        "uninformative": int(sum(r["uninformative"] for r in records)),
        "alpha": {str(n): consts.alpha_for(n) for n in cfg.ns},
    }
    return _report(cfg, records, summary, {"all_pass": all(passes)}, None, ["quadratic-recovery"], consts)


RUNNERS = {
    "marstrand": run_marstrand,
    "packing": run_packing,
    "toy-verify": run_toy_verify,
    "dim-point": run_dim_point,
    "recovery-sweep": run_recovery_sweep,
}


def run_experiment(cfg: ExperimentConfig, constants: Optional[Constants] = None) -> ExperimentReport:
    report = RUNNERS[cfg.kind](cfg, constants)
    if cfg.out:
        report.write(cfg.out)
    return report
