"""Fit the slack constants once and freeze them into data/constants.json.

Run ``python3 -m fraclab.calibrate --write``. Calibration uses its own seeds
(CALIBRATION_SEED), disjoint from the seeds the test suite checks against.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from .constants import Constants, LogBound, constants_path, load_constants

CALIBRATION_SEED = 1001
VERSION = "1"


def _open_constants() -> Constants:
    # deviations are measured with every bound switched off
    zero = LogBound(0.0, 0.0)
    base = load_constants()
    return Constants(base.version, base.c_copy, base.gamma, zero, zero, zero, zero, dict(base.alpha), 0.0, base.raw)


def fit_symmetry(count: int = 300, max_length: int = 16, log_coeff: float = 2.0, margin: float = 1.0) -> dict:
    from .harness import symmetry_instances
    from .toy.complexity import exact_K
    from .toy.lemmas import verify_symmetry_of_information
    from .toy.machine import ToyMachine

    table = exact_K(ToyMachine(max_length))
    consts = _open_constants()
    q1, q2 = [], []
    for x, y, r, s in symmetry_instances(count, CALIBRATION_SEED, table):
        rep = verify_symmetry_of_information(table, x, y, r, s, consts)
        lr = math.log2(r) if r > 1 else 0.0
        q1.append(rep.chain_gap - log_coeff * lr)
        q2.append(rep.precision_gap - log_coeff * lr)
    return {
        "c_sym": {"log_coeff": log_coeff, "const": math.ceil(max(q1)) + margin},
        "c_sym2": {"log_coeff": log_coeff, "const": math.ceil(max(q2)) + margin},
        "_provenance": {
            "c_sym": f"max over {len(q1)} defined tuples of (gap - {log_coeff} log2 r) = {max(q1):.3f}, plus {margin}",
            "c_sym2": f"max over {len(q2)} defined tuples of (gap - {log_coeff} log2 r) = {max(q2):.3f}, plus {margin}",
        },
    }


def fit_point_lemma(count: int = 100, max_length: int = 22) -> dict:
    from .harness import point_lemma_instances
    from .toy.complexity import exact_K
    from .toy.lemmas import verify_point_lemma
    from .toy.machine import ToyMachine

    table = exact_K(ToyMachine(max_length))
    consts = _open_constants()
    req, gaps = [], []
    for z, e, r, delta, eta, eps in point_lemma_instances(count, CALIBRATION_SEED, table):
        rep = verify_point_lemma(table, z, e, r, eta, eps, delta, consts)
        if rep.hypotheses and rep.required_C1 is not None:
            req.append(rep.required_C1)
            if rep.recovery.get("level_set_gap") is not None:
                gaps.append(rep.recovery["level_set_gap"] * 2.0 ** rep.recovery["s"])
    return {
        "C1": {"log_coeff": 3.0, "const": 16.0},
        "_provenance": {
            "C1": f"kept at 3 log2 r + 16; largest constant any of {len(req)} calibration instances needs is {max(req):.3f}",
            "gamma": f"level-set gap times 2^s is at most {max(gaps):.3f} over {len(gaps)} recoveries; gamma = 1 covers it",
        },
    }


def fit_projection_bound(count: int = 100, max_length: int = 22, margin: float = 2.0) -> dict:
    from .geometry import sample_direction
    from .toy.complexity import exact_K
    from .toy.lemmas import verify_projection_bound
    from .toy.machine import ToyMachine

    table = exact_K(ToyMachine(max_length))
    consts = _open_constants()
    rng = np.random.default_rng([CALIBRATION_SEED, 3])
    need = []
    for _ in range(count):
        z = tuple(float(v) for v in rng.uniform(-0.6, 0.6, 2))
        e = sample_direction(2, rng)
        r = int(rng.choice((3, 4, 5)))
        rep = verify_projection_bound(table, z, e, Fraction(1, 2), Fraction(1, 64), r, None, consts)
        if rep.asserted and rep.lhs is not None:
            need.append(rep.rhs - rep.lhs)
    worst = max(need)
    return {
        "C2": {"log_coeff": 0.0, "const": max(0.0, math.ceil(worst)) + margin},
        "_provenance": {"C2": f"largest (rhs - lhs) without slack over {len(need)} instances is {worst:.3f}; "
                              f"const = max(0, ceil) + {margin}"},
    }


def fit_alpha(per_n: int = 5000, r: int = 30, t_range=(1.0, 15.0), margin: float = 2.0) -> dict:
    from .recovery import random_instance, verify_direction_recovery

    alpha, notes = {}, {}
    for n in (2, 3, 4):
        worst = -math.inf
        for k in range(per_n):
            rng = np.random.default_rng([CALIBRATION_SEED, n, k])
            inst = random_instance(n, r, float(rng.uniform(*t_range)), rng)
            rep = verify_direction_recovery(inst, alpha=0.0)
            if rep.error > 0:
                worst = max(worst, math.log2(rep.error) + r - rep.t)
        alpha[str(n)] = float(max(0, math.ceil(worst)) + margin)
        notes[f"alpha_{n}"] = f"max log2(error) + r - t over {per_n} instances is {worst:.3f}; ceil, floor 0, plus {margin}"
    return {"alpha": alpha, "_provenance": notes}


def fit_lz(pairs: int = 200, seed: int = CALIBRATION_SEED) -> dict:
    from .estimators import dictionary_complexity

    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(pairs):
        parts = []
        for _ in range(2):
            n = int(rng.integers(1, 400))
            kind = rng.integers(0, 3)
            if kind == 0:
                parts.append("".join(map(str, rng.integers(0, 2, n))))
            elif kind == 1:
                period = "".join(map(str, rng.integers(0, 2, int(rng.integers(1, 9)))))
                parts.append((period * n)[:n])
            else:
                parts.append("".join("1" if v < 0.1 else "0" for v in rng.random(n)))
        s, t = parts
        gap = dictionary_complexity(s + t) - dictionary_complexity(s) - dictionary_complexity(t)
        worst = max(worst, gap / math.log2(len(s) + len(t)))
    return {
        "lz_subadditivity": float(max(1, math.ceil(worst))),
        "_provenance": {"lz_subadditivity": f"max (K(st) - K(s) - K(t)) / log2|st| over {pairs} pairs is {worst:.3f}; "
                                            f"frozen at max(1, ceil)"},
    }


def calibrate() -> dict:
    from .toy.machine import COPY_PROGRAM

    out = {"version": VERSION, "c_copy": len(COPY_PROGRAM), "gamma": 1, "_provenance": {
        "calibration_seed": CALIBRATION_SEED,
        "c_copy": "length of the shortest oracle copy program",
    }}
    for part in (fit_symmetry(), fit_point_lemma(), fit_projection_bound(), fit_alpha(), fit_lz()):
        prov = part.pop("_provenance")
        out.update(part)
        out["_provenance"].update(prov)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="fit and freeze the slack constants")
    ap.add_argument("--write", action="store_true", help="overwrite the packaged constants file")
    args = ap.parse_args(argv)
    data = calibrate()
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if args.write:
        constants_path().write_text(text)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
