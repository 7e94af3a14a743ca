"""Regression fixtures: seeded instances whose outputs are locked to disk.

Each fixture is a function returning a JSON-compatible record. Floats are
rounded to 12 significant digits before comparison so that the check is
exact on everything else. ``verify_fixtures`` re-runs every fixture and
reports the ones whose output drifted from the stored record.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .almost_period import almost_period_set, cls_bohr_almost_periods, smoothing_defect
from .bohr import BohrSet, averaging_defect, dilate, find_regular_dilate, make_bohr
from .cyclic import GroupFunction, SetOnZN, lp_norm, representation_counts
from .errors import AplabError
from .pipelines import PipelineResult, cls_pipeline, increment_pipeline, levelset_pipeline, thick_ap
from .setgen import density_of_primes, random_set
from .sweep import SweepConfig, rows_to_csv, run_sweep
from .transforms import (katz_koester_2, katz_koester_3, l2_density_increment, relative_density,
                         scaling_translate, spectrum_annihilate)

FIXTURE_PATH = Path(__file__).with_name("data") / "fixtures.json"

SWEEP_3X3 = """\
N=512
N=1024
N=2048
density=0.2
density=0.3
density=0.4
pipeline=cls
seed=1
"""


def canonical(value):
    """JSON-ready form with floats rounded to 12 significant digits."""
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [canonical(v) for v in value]
    if isinstance(value, BohrSet):
        return canonical(value.describe())
    if isinstance(value, SetOnZN):
        return {"N": value.N, "members": canonical(value.members)}
    raise TypeError(f"cannot canonicalise {type(value).__name__}")


def _members_in(B: BohrSet, alpha: float, rng) -> SetOnZN:
    return SetOnZN(B.N, B.members.mask & (rng.random(B.N) < alpha))


def _pipeline_record(res: PipelineResult) -> dict:
    ap = res.ap
    return {"provenance": res.provenance, "branch": res.branch, "steps": res.steps,
            "ap": [ap.start, ap.difference, ap.length], "K": ap.K, "min_count": ap.min_count,
            "trace": res.trace_lines()}


def fx_representation_interval() -> dict:
    A = SetOnZN.from_residues(32, range(5))
    return {"r": representation_counts(A, A, A)}


def _ap64_instance():
    rng = np.random.default_rng(64)
    N = 64
    A = SetOnZN(N, rng.random(N) < 0.25)
    S = SetOnZN(N, rng.random(N) < 0.25)
    return GroupFunction.indicator(A), S, SetOnZN.full(N)


def fx_almost_period_n64() -> dict:
    f, S, T = _ap64_instance()
    X = almost_period_set(f, S, T, 2.0, 0.5)
    return {"size": len(X), "members": X.members}


def fx_smoothing_n64() -> dict:
    f, S, T = _ap64_instance()
    theta, ell = 0.5, 2
    out = {}
    for p in (2, 4):
        X = almost_period_set(f, S, T, p, theta / (2 * ell))
        out[f"p{p}"] = {"X": len(X), "defect": smoothing_defect(f, S, X, ell, p), "norm": lp_norm(f, p)}
    return out


def fx_regular_dilate_n128() -> dict:
    B = make_bohr(128, [1], 1.0)
    kappa, Bk = find_regular_dilate(B)
    rho = 1 / 32
    inner = dilate(Bk, rho)
    x = int(inner.members.members.max())
    return {"kappa": kappa, "size": Bk.size, "x": x, "defect": averaging_defect(Bk, x=x)}


def fx_cls_almost_periods_n512() -> dict:
    N = 512
    A1 = random_set(N, 0.3, 5120)
    A2 = random_set(N, 0.3, 5121)
    report: dict = {}
    B = cls_bohr_almost_periods(A1, A2, 4.0, 0.2, report=report)
    return {"bohr": B, "size": B.size, "halvings": report["halvings"], "worst": report["worst"]}


def fx_annihilate_n512() -> dict:
    rng = np.random.default_rng(512)
    _, B = find_regular_dilate(make_bohr(512, [1], 1.5))
    X = SetOnZN.from_residues(512, rng.choice(B.members.members, 20, replace=False))
    Bp = spectrum_annihilate(B, X, 0.5)
    return {"B": B, "X": X.members, "annihilated": Bp, "size": Bp.size}


def fx_l2_increment_n512() -> dict:
    N = 512
    G = make_bohr(N, [0], 2.0)
    A = make_bohr(N, [5], 1.0).members
    alpha = float(A.density)
    Bdot = dilate(G, 1 / 16 * alpha)
    out = l2_density_increment(G, Bdot, A, SetOnZN.from_residues(N, [0]), 0.5, 1.0)
    return {"alpha": relative_density(A, G), "density": out.density, "translate": out.translate,
            "bohr": out.bohr}


def _kk_instance():
    rng = np.random.default_rng(3)
    N = 512
    G = make_bohr(N, [0], 2.0)
    A = SetOnZN(N, rng.random(N) < 0.4)
    rho = 1 / 16 * float(A.density)
    kappa, Bp = find_regular_dilate(dilate(G, rho))
    Ap = _members_in(Bp, 0.4, rng)
    ap = float(relative_density(Ap, Bp))
    kappa2, Bpp = find_regular_dilate(dilate(Bp, 1 / 16 * ap / Bp.dimension))
    return G, Bp, Bpp, A, Ap, rho * kappa, ap, kappa2


def _structure_record(out) -> dict:
    rec = json.loads(out.to_json())
    if out.kind == "structure":
        rec["L"] = out.L.members
    return rec


def fx_kk2_n512() -> dict:
    G, Bp, Bpp, A, Ap, rho, ap, k2 = _kk_instance()
    out = katz_koester_2(G, Bp, Bpp, A, Ap, rho, 1 / 16 * ap * k2)
    return _structure_record(out)


def fx_kk3_n512() -> dict:
    G, Bp, Bpp, A, Ap, rho, ap, k2 = _kk_instance()
    a = float(A.density)
    out = katz_koester_3(G, Bp, Bpp, A, Ap, Ap, rho, 1 / 16 * ap * ap * a * k2 / 2)
    return _structure_record(out)


def fx_scaling_n512() -> dict:
    rng = np.random.default_rng(5122)
    _, B = find_regular_dilate(make_bohr(512, [1], 1.5))
    A = _members_in(B, 0.5, rng)
    rho = 1 / (4 * B.dimension)
    kappa, Bp = find_regular_dilate(dilate(B, rho))
    x, Ap, alpha_p = scaling_translate(A, B, Bp, rho * kappa)
    return {"B": B, "Bp": Bp, "x": x, "alpha_prime": alpha_p, "size": len(Ap)}


def fx_cls_pipeline_n2048() -> dict:
    sets = [random_set(2048, 0.3, 2048 + j) for j in range(3)]
    res = cls_pipeline(*sets)
    rec = _pipeline_record(res)
    rec["cls_check"] = res.checks.get("cls_check")
    return rec


def fx_cls_pipeline_singleton() -> dict:
    N = 256
    A = random_set(N, 0.4, 256)
    B = random_set(N, 0.4, 257)
    return _pipeline_record(cls_pipeline(A, B, SetOnZN.from_residues(N, [0])))


def fx_increment_n1024() -> dict:
    sets = [random_set(1024, 0.35, 1024 + j) for j in range(3)]
    return _pipeline_record(increment_pipeline(*sets))


def fx_levelset_n1024() -> dict:
    sets = [random_set(1024, 0.35, 1124 + j) for j in range(3)]
    return _pipeline_record(levelset_pipeline(*sets, eps=0.5))


def fx_thick_ap_n2048() -> dict:
    rng = np.random.default_rng(2049)
    v = 0.1
    _, B = find_regular_dilate(make_bohr(2048, [1], 1.0))
    V = SetOnZN(2048, B.members.mask & (rng.random(2048) >= v / 2))
    prog = thick_ap(B, V, v)
    return {"B": B, "V": len(V), "ap": [prog.start, prog.difference, prog.length]}


def fx_random_set_n1024() -> dict:
    return {"cardinality": random_set(1024, 0.3, 7).cardinality}


def fx_density_of_primes() -> dict:
    return {"n": 10 ** 4, "density": density_of_primes(10 ** 4)}


def fx_sweep_3x3() -> dict:
    rows, _ = run_sweep(SweepConfig.parse(SWEEP_3X3), workers=1)
    text = rows_to_csv(rows)
    return {"rows": len(rows), "sha256": hashlib.sha256(text.encode()).hexdigest()}


FIXTURES = {
    "representation_interval_n32": fx_representation_interval,
    "almost_period_n64": fx_almost_period_n64,
    "smoothing_n64": fx_smoothing_n64,
    "regular_dilate_n128": fx_regular_dilate_n128,
    "cls_almost_periods_n512": fx_cls_almost_periods_n512,
    "annihilate_n512": fx_annihilate_n512,
    "l2_increment_n512": fx_l2_increment_n512,
    "kk2_n512": fx_kk2_n512,
    "kk3_n512": fx_kk3_n512,
    "scaling_n512": fx_scaling_n512,
    "cls_pipeline_n2048": fx_cls_pipeline_n2048,
    "cls_pipeline_singleton_n256": fx_cls_pipeline_singleton,
    "increment_n1024": fx_increment_n1024,
    "levelset_n1024": fx_levelset_n1024,
    "thick_ap_n2048": fx_thick_ap_n2048,
    "random_set_n1024": fx_random_set_n1024,
    "density_of_primes": fx_density_of_primes,
    "sweep_3x3": fx_sweep_3x3,
}


def compute(name: str):
    try:
        return canonical(FIXTURES[name]())
    except AplabError as exc:
        return {"error": type(exc).__name__, "message": str(exc)}


def load_fixtures(path=None) -> dict:
    path = Path(path) if path is not None else FIXTURE_PATH
    if not path.exists():
        raise FileNotFoundError(f"fixture file {path} is missing")
    return json.loads(path.read_text())


def regenerate(path=None, names=None) -> dict:
    """Recompute fixtures (all, or ``names``) and write them to ``path``."""
    path = Path(path) if path is not None else FIXTURE_PATH
    data = json.loads(path.read_text()) if path.exists() else {}
    for name in names or FIXTURES:
        data[name] = compute(name)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    return data


def verify_fixtures(path=None, names=None) -> dict:
    """{"passed": [...], "drifts": [...], "missing": [...]} against the stored file."""
    stored = load_fixtures(path)
    report = {"passed": [], "drifts": [], "missing": []}
    for name in names or FIXTURES:
        if name not in stored:
            report["missing"].append(name)
        elif compute(name) == stored[name]:
            report["passed"].append(name)
        else:
            report["drifts"].append(name)
    report["unknown"] = sorted(set(stored) - set(FIXTURES))
    report["ok"] = not (report["drifts"] or report["missing"] or report["unknown"])
    return report
