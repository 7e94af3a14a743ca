"""Parameter sweeps: key=value grid configs, deterministic CSV output.

A config is a flat text file of ``key=value`` lines; repeating a key adds a
value to that axis of the grid. Each grid point gets its own seed, derived
from the base seed and the point's index with the splitmix64 mixer, so runs
are reproducible and decorrelated. Rows are written in grid order whatever
order the worker pool finishes in. Wall-clock times go to a separate
``<out>.timing.csv`` so that the main CSV is byte-identical across runs.
"""

from __future__ import annotations

import csv
import io
import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cyclic import representation_counts
from .pipelines import PIPELINES, PipelineResult, levelset_parameters
from .policy import Policy
from .setgen import bohr_sample, interval_set, primes_upto, random_bohr, random_set

COLUMNS = ["N", "family", "alpha", "beta", "gamma", "pipeline", "omega", "K", "ap_start", "ap_diff",
           "ap_length", "guaranteed_length", "min_count", "steps", "branch", "provenance", "status", "seed"]

FAMILIES = ("random", "interval", "bohr", "primes")
KEYS = {"N", "family", "alpha", "beta", "gamma", "density", "pipeline", "seed", "omega", "epsilon", "policy"}
MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def point_seed(base: int, index: int) -> int:
    """Seed of grid point ``index``: splitmix64(splitmix64(base) xor index)."""
    return splitmix64(splitmix64(base & MASK64) ^ index)


@dataclass(frozen=True)
class GridPoint:
    index: int
    N: int
    family: str
    alpha: float
    beta: float
    gamma: float
    pipeline: str
    base_seed: int
    omega: float
    epsilon: float

    @property
    def seed(self) -> int:
        return point_seed(self.base_seed, self.index)


@dataclass(frozen=True)
class SweepConfig:
    values: dict
    policy: Policy

    @classmethod
    def parse(cls, text: str, base_dir: Path | None = None) -> "SweepConfig":
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in KEYS:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values.setdefault(key, []).append(value)
        if "density" in values and {"alpha", "beta", "gamma"} & values.keys():
            raise ValueError("use either density or alpha/beta/gamma, not both")
        for fam in values.get("family", []):
            if fam not in FAMILIES:
                raise ValueError(f"unknown family {fam!r}")
        for name in values.get("pipeline", []):
            if name not in PIPELINES:
                raise ValueError(f"unknown pipeline {name!r}")
        policy = Policy()
        if "policy" in values:
            if len(values["policy"]) != 1:
                raise ValueError("at most one policy file per sweep")
            path = Path(values["policy"][0])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            policy = Policy.load(path)
        return cls(values, policy)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        path = Path(path)
        return cls.parse(path.read_text(), path.parent)

    def points(self) -> list[GridPoint]:
        v = self.values
        Ns = [int(x) for x in v.get("N", [])]
        if "density" in v:
            dens = [(float(x),) * 3 for x in v["density"]]
        elif {"alpha", "beta", "gamma"} & v.keys():
            alphas = [float(x) for x in v.get("alpha", [])]
            betas = [float(x) for x in v.get("beta", [])] or alphas
            gammas = [float(x) for x in v.get("gamma", [])] or alphas
            dens = list(itertools.product(alphas, betas, gammas))
        else:
            dens = []
        families = v.get("family", ["random"])
        pipes = v.get("pipeline", ["cls"])
        seeds = [int(x) for x in v.get("seed", ["1"])]
        omegas = [float(x) for x in v.get("omega", ["0"])]
        eps = [float(x) for x in v.get("epsilon", ["0.5"])]
        out = []
        for i, (N, fam, (a, b, g), pipe, seed, om, ep) in enumerate(
                itertools.product(Ns, families, dens, pipes, seeds, omegas, eps)):
            out.append(GridPoint(i, N, fam, a, b, g, pipe, seed, om, ep))
        return out


def build_sets(pt: GridPoint) -> tuple:
    """The three input sets of a grid point, from its derived seed."""
    seeds = [splitmix64(pt.seed ^ j) for j in range(3)]
    N = pt.N
    dens = (pt.alpha, pt.beta, pt.gamma)
    if pt.family == "random":
        return tuple(random_set(N, a, s) for a, s in zip(dens, seeds))
    if pt.family == "interval":
        return tuple(interval_set(N, max(1, round(a * N))) for a in dens)
    if pt.family == "bohr":
        B = random_bohr(N, 2, 1.0, seeds[0] & 0x7FFFFFFF)
        return tuple(bohr_sample(B, a, s) for a, s in zip(dens, seeds))
    if pt.family == "primes":
        P = primes_upto(max(2, N // 6))
        return (P, P, P)
    raise ValueError(f"unknown family {pt.family!r}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(round(x, 9))
    return str(x)


def run_point(pt: GridPoint, policy: Policy) -> tuple[dict, float]:
    t0 = time.perf_counter()
    row = {"N": pt.N, "family": pt.family, "alpha": pt.alpha, "beta": pt.beta, "gamma": pt.gamma,
           "pipeline": pt.pipeline, "seed": pt.seed}
    try:
        sets = build_sets(pt)
        row["N"] = sets[0].N
        if pt.pipeline == "cls":
            res = PIPELINES["cls"](*sets, policy=policy)
            omega = None
        elif pt.pipeline == "increment":
            res = PIPELINES["increment"](*sets, omega=pt.omega, policy=policy)
            omega = pt.omega
        else:
            res = PIPELINES["levelset"](*sets, eps=pt.epsilon, policy=policy)
            d = sorted((float(s.density) for s in sets), reverse=True)
            omega, _ = levelset_parameters(sets[0].N, d[0], d[0] * d[1] * d[2], pt.epsilon, policy)
        row.update(_result_fields(res), omega=omega, status="ok")
    except Exception as exc:  # a failed run becomes a row, never aborts the sweep
        row.update(status=f"error:{type(exc).__name__}")
    return {k: _fmt(row.get(k)) for k in COLUMNS}, time.perf_counter() - t0


def _result_fields(res: PipelineResult) -> dict:
    ap = res.ap
    return {"K": ap.K, "ap_start": ap.start, "ap_diff": ap.difference, "ap_length": ap.length,
            "guaranteed_length": res.guaranteed_length, "min_count": ap.min_count, "steps": res.steps,
            "branch": res.branch, "provenance": res.provenance}


def _pool_size() -> int:
    env = os.environ.get("APLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(config: SweepConfig, workers: int | None = None):
    """Rows (as dicts of strings) and per-point wall times, in grid order."""
    points = config.points()
    workers = min(workers or _pool_size(), max(1, len(points)))
    if workers <= 1:
        results = [run_point(p, config.policy) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_point, points, itertools.repeat(config.policy)))
    return [r for r, _ in results], [t for _, t in results]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def crosscheck(config: SweepConfig, rows, samples: int = 5) -> list[str]:
    """Re-run the oracle on up to ``samples`` ok rows; return a list of problems.

    Rows are re-read from their string form, so this also checks the CSV.
    """
    points = config.points()
    ok = [i for i, r in enumerate(rows) if r["status"] == "ok"]
    if not ok:
        return []
    picks = sorted(set(np.linspace(0, len(ok) - 1, min(samples, len(ok))).round().astype(int).tolist()))
    problems = []
    for j in picks:
        i = ok[j]
        row = rows[i]
        sets = build_sets(points[i])
        r = representation_counts(*sets)
        N = sets[0].N
        length, start, diff, K = (int(row[k]) for k in ("ap_length", "ap_start", "ap_diff", "K"))
        elems = (start + diff * np.arange(length)) % N
        if length and int(r[elems].min()) < K:
            problems.append(f"row {i}: count {int(r[elems].min())} below K={K}")
        if length and row["min_count"] != str(int(r[elems].min())):
            problems.append(f"row {i}: min_count column disagrees with the oracle")
    return problems


def write_sweep(config: SweepConfig, out, workers: int | None = None) -> tuple[bool, list[str]]:
    """Run, write ``out`` and its timing sidecar; (all ok, problems)."""
    rows, times = run_sweep(config, workers)
    out = Path(out)
    out.write_text(rows_to_csv(rows))
    timing = ["index,wall_time"] + [f"{i},{t:.6f}" for i, t in enumerate(times)]
    Path(str(out) + ".timing.csv").write_text("\n".join(timing) + "\n")
    problems = crosscheck(config, list(csv.DictReader(io.StringIO(out.read_text()))))
    all_ok = all(r["status"] == "ok" for r in rows) and not problems
    return all_ok, problems
