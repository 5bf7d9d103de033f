#!/usr/bin/env python3
"""Velocity-only identification study.

Synthesizes a constant-velocity joint log with a planted asymmetric Stribeck
law, fits all four methods on the same train/test split, and prints one
metrics table.  With ``--noise`` the planted law is observed through Gaussian
motor-torque noise.

Example:
    python scripts/run_velocity_study.py --seed 0 --noise 0.05 --out-dir out/velocity
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from fricsym import (
    AsymmetricStribeck,
    AsymmetricStribeckModel,
    ExprModel,
    GpConfig,
    StribeckParams,
    SymmetricStribeckModel,
    SynthSpec,
    evolve,
    fit_asymmetric,
    fit_symmetric,
    parfam_extract,
    parfam_fit,
    simplify,
    synth_generate,
)
from fricsym import data as dt
from fricsym import parfam as pf
from fricsym.cli import MetricsReport, _metrics_row
from fricsym.util import write_json

PLANTED = AsymmetricStribeck(
    positive=StribeckParams(F_c=8.0, F_s=11.0, F_v=14.1, v_s=0.15, delta_s=1.2),
    negative=StribeckParams(F_c=8.6, F_s=12.2, F_v=14.4, v_s=0.12, delta_s=1.0),
)

FEATURES = ("qdot", "sign_qdot")


def fit_all(train, test, seed: int, generations: int):
    y_train = dt.friction_target(train)
    X_train, _ = dt.design_matrix(train, FEATURES)
    rows, models = [], {}

    t0 = time.time()
    params, _ = fit_symmetric(train.qdot, y_train)
    models["baseline-sym"] = SymmetricStribeckModel(params)
    print(f"  baseline-sym        {time.time() - t0:6.1f}s")

    t0 = time.time()
    branches, _ = fit_asymmetric(train.qdot, y_train)
    models["baseline-asym"] = AsymmetricStribeckModel(branches)
    print(f"  baseline-asym       {time.time() - t0:6.1f}s")

    t0 = time.time()
    archive = evolve(X_train, y_train, GpConfig(seed=seed, generations=generations))
    models["gp"] = ExprModel(archive.best().expr, FEATURES)
    print(f"  gp ({generations} generations) {time.time() - t0:6.1f}s")

    t0 = time.time()
    structure = pf.default_friction_structure(len(FEATURES))
    cfg = pf.ParFamFitConfig(seed=seed, bh_iterations=20, bh_local_budget=600,
                             finetune_budget=1500)
    theta, _ = parfam_fit(X_train, y_train, structure, cfg)
    models["parfam"] = ExprModel(simplify(parfam_extract(structure, theta)), FEATURES)
    print(f"  parfam              {time.time() - t0:6.1f}s")

    for name, model in models.items():
        rows.append(_metrics_row(name, "test", model,
                                 dt.friction_target(test), model.predict(test)))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", type=float, default=0.0, help="torque noise std [Nm]")
    ap.add_argument("--generations", type=int, default=40)
    ap.add_argument("--out-dir", default="out/velocity_study")
    args = ap.parse_args()

    spec = SynthSpec(
        profile={"kind": "constant_grid", "count": 21, "samples_per_level": 100,
                 "min": -2.0, "max": 2.0},
        friction={"kind": "stribeck_asym", **PLANTED.to_dict()},
        noise_std=args.noise,
        seed=args.seed,
    )
    ds = synth_generate(spec)
    train, test = dt.split_movements(ds, n_train=17, seed=args.seed)
    print(f"dataset: {len(ds)} samples, {len(train)} train / {len(test)} test")

    rows = fit_all(train, test, args.seed, args.generations)
    report = MetricsReport(dataset="synthetic constant-velocity grid",
                           rows=tuple(rows))
    print()
    print(report.text_table())

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", report.to_dict())
    (out / "report.txt").write_text(report.text_table(), encoding="utf-8")
    print(f"wrote {out / 'report.json'}")


if __name__ == "__main__":
    main()
